#pragma once

// Joint-distribution calibration of the Gibbs conditionals (Geweke-style):
// draws from the prior + data simulator must match the distribution of a
// chain that alternates one Gibbs scan with a data refresh. The smoothing
// prior on the consensus is flat along constants and linears, so the test
// model anchors those two directions with a fixed unit precision; the
// conditionals of the anchored model are exactly the production updates,
// with the anchor entering only the consensus draw.

#include <cmath>
#include <vector>

#include "conscale/chronology.hpp"
#include "conscale/errors.hpp"
#include "conscale/linalg.hpp"
#include "conscale/model.hpp"
#include "conscale/rng.hpp"
#include "conscale/sampler.hpp"
#include "conscale/spline.hpp"

namespace geweke {

using namespace conscale;

struct Setup {
  JointChronology joint;
  RoughnessMatrix rough;
  Matrix anchor;            // unit precision on the flat directions
  std::vector<Matrix> w;    // per-record prior scales
  Vec nu;
  double eta = 20.0;
  double beta = 5.0;
};

// The knot spacing and the concentrated lambda0 prior keep the prior scale
// of mu comparable to the observation noise; the successive-conditional
// chain then mixes within a few dozen scans and batch-means standard errors
// are trustworthy.
inline Setup make_setup() {
  const auto a = center(make_proxy_series(
      "a", Vec{6.0, 4.0, 2.0}, Vec{1.0, 2.0, 3.0}, std::nullopt));
  const auto b = center(make_proxy_series(
      "b", Vec{5.0, 3.0, 1.0}, Vec{4.0, 5.0, 6.0}, std::nullopt));
  JointChronology joint = merge_chronologies({a, b});
  RoughnessMatrix rough{KnotGrid{joint.t}};

  const std::size_t n = joint.size();
  Vec ones(n, 1.0 / std::sqrt((double)n));
  Vec lin(n);
  const double mean_t = vec_mean(joint.t);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin[i] = joint.t[i] - mean_t;
    norm += lin[i] * lin[i];
  }
  norm = std::sqrt(norm);
  for (double& v : lin) v /= norm;
  Matrix anchor(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t jj = 0; jj < n; ++jj)
      anchor(i, jj) = ones[i] * ones[jj] + lin[i] * lin[jj];

  Setup s{std::move(joint), std::move(rough), std::move(anchor), {}, {}};
  for (std::size_t k = 0; k < 2; ++k) {
    Matrix w(3, 3);
    for (std::size_t i = 0; i < 3; ++i) w(i, i) = 6.0;
    s.w.push_back(w);
    s.nu.push_back(16.0);  // all diagonal moments finite up to fourth order
  }
  return s;
}

struct Draw {
  Vec mu;
  std::vector<Matrix> sigmas;
  double lambda0 = 1.0;
};

inline Draw draw_from_prior(const Setup& s, Rng& rng) {
  Draw d;
  d.lambda0 = rng.gamma(s.eta, s.beta);
  for (std::size_t k = 0; k < s.w.size(); ++k)
    d.sigmas.push_back(sample_inv_wishart(s.w[k], s.nu[k], rng));
  Matrix precision = s.rough.dense();
  const std::size_t n = s.joint.size();
  for (std::size_t i = 0; i < n * n; ++i) precision.data()[i] *= d.lambda0;
  add_scaled(precision, s.anchor, 1.0);
  Matrix l = precision;
  if (!cholesky_inplace(l)) throw NumericError("geweke: prior draw failed");
  Vec z(n);
  for (double& v : z) v = rng.normal();
  chol_upper_solve_inplace(l, z.data());
  d.mu = z;
  return d;
}

inline std::vector<Vec> draw_data(const Setup& s, const Draw& d, Rng& rng) {
  std::vector<Vec> y(s.w.size());
  for (std::size_t k = 0; k < s.w.size(); ++k) {
    const auto& inc = s.joint.incidence[k];
    Matrix l = d.sigmas[k];
    if (!cholesky_inplace(l)) throw NumericError("geweke: sigma draw not PD");
    Vec z(inc.size());
    for (double& v : z) v = rng.normal();
    y[k].resize(inc.size());
    for (std::size_t i = 0; i < inc.size(); ++i) {
      double noise = 0.0;
      for (std::size_t jj = 0; jj <= i; ++jj) noise += l(i, jj) * z[jj];
      y[k][i] = d.mu[inc[i]] + noise;
    }
  }
  return y;
}

// one production Gibbs scan given data
inline void gibbs_scan(const Setup& s, Draw& d, const std::vector<Vec>& y,
                       Rng& rng) {
  d.mu = sample_mu_conditional(y, d.sigmas, d.lambda0, s.rough.dense(), s.joint,
                               rng, &s.anchor);
  for (std::size_t k = 0; k < s.w.size(); ++k) {
    Vec mu_k(s.joint.incidence[k].size());
    for (std::size_t i = 0; i < mu_k.size(); ++i)
      mu_k[i] = d.mu[s.joint.incidence[k][i]];
    d.sigmas[k] = sample_sigma_conditional(y[k], mu_k, s.w[k], s.nu[k], rng);
  }
  d.lambda0 = sample_lambda0_conditional(d.mu, s.rough, s.eta, s.beta, rng);
}

// tracked scalar functionals: mu_1, lambda0, all sigma diagonals
inline Vec functionals(const Setup& s, const Draw& d) {
  Vec g;
  g.push_back(d.mu[0]);
  g.push_back(d.lambda0);
  for (const auto& sigma : d.sigmas)
    for (std::size_t i = 0; i < sigma.rows(); ++i) g.push_back(sigma(i, i));
  (void)s;
  return g;
}

struct MomentSummary {
  Vec mean, mean_se;     // first moments and standard errors
  Vec second, second_se; // raw second moments and standard errors
};

inline MomentSummary summarize_iid(const std::vector<Vec>& rows) {
  const std::size_t n = rows.size(), p = rows[0].size();
  MomentSummary m;
  m.mean.assign(p, 0.0);
  m.second.assign(p, 0.0);
  m.mean_se.assign(p, 0.0);
  m.second_se.assign(p, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) {
      m.mean[j] += r[j];
      m.second[j] += r[j] * r[j];
    }
  for (std::size_t j = 0; j < p; ++j) {
    m.mean[j] /= (double)n;
    m.second[j] /= (double)n;
  }
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) {
      const double d1 = r[j] - m.mean[j];
      const double d2 = r[j] * r[j] - m.second[j];
      m.mean_se[j] += d1 * d1;
      m.second_se[j] += d2 * d2;
    }
  for (std::size_t j = 0; j < p; ++j) {
    m.mean_se[j] = std::sqrt(m.mean_se[j] / (double)(n - 1) / (double)n);
    m.second_se[j] = std::sqrt(m.second_se[j] / (double)(n - 1) / (double)n);
  }
  return m;
}

// batch-means standard errors for the autocorrelated successive chain
inline MomentSummary summarize_batched(const std::vector<Vec>& rows,
                                       std::size_t batches = 50) {
  const std::size_t n = rows.size(), p = rows[0].size();
  const std::size_t len = n / batches;
  MomentSummary m;
  m.mean.assign(p, 0.0);
  m.second.assign(p, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) {
      m.mean[j] += r[j];
      m.second[j] += r[j] * r[j];
    }
  for (std::size_t j = 0; j < p; ++j) {
    m.mean[j] /= (double)n;
    m.second[j] /= (double)n;
  }
  m.mean_se.assign(p, 0.0);
  m.second_se.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    Vec b1(batches, 0.0), b2(batches, 0.0);
    for (std::size_t bi = 0; bi < batches; ++bi) {
      for (std::size_t q = 0; q < len; ++q) {
        const double v = rows[bi * len + q][j];
        b1[bi] += v;
        b2[bi] += v * v;
      }
      b1[bi] /= (double)len;
      b2[bi] /= (double)len;
    }
    m.mean_se[j] = vec_sd(b1) / std::sqrt((double)batches);
    m.second_se[j] = vec_sd(b2) / std::sqrt((double)batches);
  }
  return m;
}

struct Comparison {
  double max_z_mean = 0.0;
  double max_z_second = 0.0;
};

inline Comparison run(std::size_t iterations, std::uint64_t seed) {
  const Setup s = make_setup();
  Rng rng_f(seed), rng_s(seed + 1);

  std::vector<Vec> forward;
  forward.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const Draw d = draw_from_prior(s, rng_f);
    forward.push_back(functionals(s, d));
  }

  std::vector<Vec> successive;
  successive.reserve(iterations);
  Draw d = draw_from_prior(s, rng_s);
  for (std::size_t i = 0; i < iterations; ++i) {
    const std::vector<Vec> y = draw_data(s, d, rng_s);
    gibbs_scan(s, d, y, rng_s);
    successive.push_back(functionals(s, d));
  }

  const MomentSummary mf = summarize_iid(forward);
  const MomentSummary ms = summarize_batched(successive);
  Comparison c;
  for (std::size_t j = 0; j < mf.mean.size(); ++j) {
    const double se1 =
        std::sqrt(mf.mean_se[j] * mf.mean_se[j] + ms.mean_se[j] * ms.mean_se[j]);
    const double se2 = std::sqrt(mf.second_se[j] * mf.second_se[j] +
                                 ms.second_se[j] * ms.second_se[j]);
    c.max_z_mean =
        std::max(c.max_z_mean, std::fabs(mf.mean[j] - ms.mean[j]) / se1);
    c.max_z_second =
        std::max(c.max_z_second, std::fabs(mf.second[j] - ms.second[j]) / se2);
  }
  return c;
}

}  // namespace geweke
