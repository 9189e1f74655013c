#include "conscale/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "conscale/errors.hpp"
#include "conscale/kernels.hpp"

namespace conscale {

namespace {

// Cholesky with a single jitter retry; throws NumericError on failure.
Matrix factor_spd(Matrix a, const char* what) {
  Matrix attempt = a;
  if (cholesky_inplace(attempt)) return attempt;
  const std::size_t n = a.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
  const double jitter = 1e-10 * trace / (double)n;
  for (std::size_t i = 0; i < n; ++i) a(i, i) += jitter;
  if (cholesky_inplace(a)) return a;
  throw NumericError(std::string(what) + ": factorization failed");
}

Matrix inverse_spd(const Matrix& a, const char* what) {
  return chol_inverse(factor_spd(a, what));
}

// Adds Sigma^{-1} of one record into the joint-size precision and
// Sigma^{-1} y into the joint-size information vector.
void scatter_record(const Matrix& sigma_inv, const Vec& y,
                    const std::vector<std::size_t>& inc, Matrix& precision,
                    Vec& info) {
  const std::size_t j = inc.size();
  Vec siy(j, 0.0);
  for (std::size_t a = 0; a < j; ++a)
    siy[a] = kern::dot(sigma_inv.row(a), y.data(), j);
  for (std::size_t a = 0; a < j; ++a) {
    info[inc[a]] += siy[a];
    double* row = precision.row(inc[a]);
    const double* sa = sigma_inv.row(a);
    for (std::size_t b = 0; b < j; ++b) row[inc[b]] += sa[b];
  }
}

Vec draw_from_precision(Matrix precision, const Vec& info, Rng& rng,
                        const char* what, Vec* out_mean) {
  Matrix l = factor_spd(std::move(precision), what);
  Vec mean = chol_solve(l, info);
  Vec z(mean.size());
  for (double& v : z) v = rng.normal();
  chol_upper_solve_inplace(l, z.data());
  if (out_mean) *out_mean = mean;
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += z[i];
  return mean;
}

}  // namespace

Vec sample_mu_conditional(const std::vector<Vec>& data,
                          const std::vector<Matrix>& sigmas, double lambda0,
                          const Matrix& k_identity, const JointChronology& joint,
                          Rng& rng, const Matrix* anchor, Vec* out_mean) {
  const std::size_t n = joint.size();
  if (data.size() != joint.records() || sigmas.size() != data.size())
    throw InvalidInputError("sample_mu_conditional: record count mismatch");
  if (!(lambda0 > 0.0))
    throw InvalidInputError("sample_mu_conditional: lambda0 must be positive");
  Matrix precision = k_identity;
  for (std::size_t i = 0; i < n * n; ++i) precision.data()[i] *= lambda0;
  if (anchor) add_scaled(precision, *anchor, 1.0);
  Vec info(n, 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Matrix sigma_inv = inverse_spd(sigmas[k], "mu update");
    scatter_record(sigma_inv, data[k], joint.incidence[k], precision, info);
  }
  return draw_from_precision(std::move(precision), info, rng, "mu update",
                             out_mean);
}

Vec sample_mu_conditional_extended(const std::vector<Vec>& data,
                                   const Matrix& sigma, double lambda0,
                                   const Matrix& k_identity,
                                   const JointChronology& joint, Rng& rng,
                                   const Matrix* anchor, Vec* out_mean) {
  const std::size_t n = joint.size();
  const std::size_t j = joint.stacked_size();
  if (sigma.rows() != j)
    throw InvalidInputError("sample_mu_conditional: pooled covariance size");
  Matrix precision = k_identity;
  for (std::size_t i = 0; i < n * n; ++i) precision.data()[i] *= lambda0;
  if (anchor) add_scaled(precision, *anchor, 1.0);

  // flattened record layout: stacked row -> joint column
  std::vector<std::size_t> col(j);
  Vec y(j);
  std::size_t row = 0;
  for (std::size_t k = 0; k < joint.records(); ++k)
    for (std::size_t l = 0; l < joint.incidence[k].size(); ++l, ++row) {
      col[row] = joint.incidence[k][l];
      y[row] = data[k][l];
    }

  const Matrix sigma_inv = inverse_spd(sigma, "mu update");
  Vec info(n, 0.0);
  for (std::size_t a = 0; a < j; ++a) {
    const double* sa = sigma_inv.row(a);
    info[col[a]] += kern::dot(sa, y.data(), j);
    double* pr = precision.row(col[a]);
    for (std::size_t b = 0; b < j; ++b) pr[col[b]] += sa[b];
  }
  return draw_from_precision(std::move(precision), info, rng, "mu update",
                             out_mean);
}

Matrix sample_inv_wishart(const Matrix& scale, double df, Rng& rng) {
  const std::size_t p = scale.rows();
  if (!(df > (double)p - 1.0))
    throw InvalidInputError("sample_inv_wishart: degrees of freedom too small");
  Matrix l = scale;
  if (!cholesky_inplace(l))
    throw NumericError("sample_inv_wishart: scale not positive definite");
  // Bartlett factor of a Wishart(df, I) draw
  Matrix a(p, p);
  for (std::size_t i = 0; i < p; ++i)
    a(i, i) = std::sqrt(rng.chi_square(df - (double)i));
  for (std::size_t i = 1; i < p; ++i)
    for (std::size_t jj = 0; jj < i; ++jj) a(i, jj) = rng.normal();
  // draw = L (A A^T)^{-1} L^T = M M^T with M = L B^T, B = A^{-1}
  const Matrix b = lower_triangular_inverse(a);
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t jj = 0; jj < p; ++jj) {
      double s = 0.0;
      const std::size_t qmax = std::min(i, jj);
      for (std::size_t q = 0; q <= qmax; ++q) s += l(i, q) * b(jj, q);
      m(i, jj) = s;
    }
  Matrix out(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t jj = i; jj < p; ++jj) {
      const double s = kern::dot(m.row(i), m.row(jj), p);
      out(i, jj) = s;
      out(jj, i) = s;
    }
  return out;
}

Matrix sample_sigma_conditional(const Vec& y_k, const Vec& mu_k,
                                const Matrix& w_k, double nu_k, Rng& rng) {
  const std::size_t j = y_k.size();
  if (mu_k.size() != j || w_k.rows() != j || w_k.cols() != j)
    throw InvalidInputError("sample_sigma_conditional: shape mismatch");
  if (!(nu_k + 1.0 > (double)j - 1.0))
    throw InvalidInputError("sample_sigma_conditional: degrees of freedom");
  Matrix s = w_k;
  for (std::size_t a = 0; a < j; ++a) {
    const double ra = y_k[a] - mu_k[a];
    for (std::size_t b = 0; b < j; ++b) s(a, b) += ra * (y_k[b] - mu_k[b]);
  }
  return sample_inv_wishart(s, nu_k + 1.0, rng);
}

double sample_lambda0_conditional(const Vec& mu, const RoughnessMatrix& k,
                                  double eta, double beta, Rng& rng) {
  if (!(eta > 0.0) || !(beta > 0.0))
    throw InvalidInputError("sample_lambda0_conditional: bad prior parameters");
  const double shape = 0.5 * (double)(k.size() - 2) + eta;
  const double rate = 0.5 * k.quad_form(mu) + beta;
  return rng.gamma(shape, rate);
}

namespace {

// mu^T K(tau) mu for an arbitrary tau, sorting the knots and permuting mu
// alongside. Returns false when the sorted knots are not strictly increasing.
bool tau_penalty(const Vec& tau, const Vec& mu, double& quad) {
  const std::size_t n = tau.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
  Vec knots(n), mu_sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    knots[i] = tau[order[i]];
    mu_sorted[i] = mu[order[i]];
  }
  for (std::size_t i = 1; i < n; ++i)
    if (!(knots[i] > knots[i - 1])) return false;
  if (n < 3) {
    quad = 0.0;  // a two-knot natural spline is a line
    return true;
  }
  quad = RoughnessForm(KnotGrid(knots)).quad_form(mu_sorted);
  return true;
}

}  // namespace

std::size_t update_tau_mh(Vec& tau, const Vec& mu, double lambda0,
                          const Vec& t_obs, const Vec& psi,
                          const JointChronology& joint, Rng& rng,
                          std::vector<std::uint8_t>* accepted) {
  const std::size_t n = tau.size();
  if (mu.size() != n || t_obs.size() != n || psi.size() != n)
    throw InvalidInputError("update_tau_mh: length mismatch");
  for (double p : psi)
    if (!(p > 0.0)) throw InvalidInputError("update_tau_mh: psi must be positive");
  if (accepted) accepted->assign(n, 0);

  // per joint index, the within-record neighbors constraining it
  std::vector<std::vector<std::pair<long, long>>> bounds(n);
  for (const auto& inc : joint.incidence)
    for (std::size_t l = 0; l < inc.size(); ++l)
      bounds[inc[l]].push_back(
          {l > 0 ? (long)inc[l - 1] : -1,
           l + 1 < inc.size() ? (long)inc[l + 1] : -1});

  double quad = 0.0;
  if (!tau_penalty(tau, mu, quad))
    throw NumericError("update_tau_mh: current tau has coincident knots");

  std::size_t n_accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double prop = tau[i] + rng.normal() * 0.1 * psi[i];
    bool ok = true;
    for (const auto& [lo, hi] : bounds[i]) {
      if (lo >= 0 && !(prop > tau[(std::size_t)lo])) ok = false;
      if (hi >= 0 && !(prop < tau[(std::size_t)hi])) ok = false;
    }
    if (!ok) continue;
    const double saved = tau[i];
    tau[i] = prop;
    double quad_prop;
    if (!tau_penalty(tau, mu, quad_prop)) {
      tau[i] = saved;
      continue;
    }
    const double d_new = (prop - t_obs[i]) / psi[i];
    const double d_old = (saved - t_obs[i]) / psi[i];
    const double dlog = -0.5 * (d_new * d_new - d_old * d_old) -
                        0.5 * lambda0 * (quad_prop - quad);
    if (std::log(rng.uniform()) < dlog) {
      quad = quad_prop;
      ++n_accepted;
      if (accepted) (*accepted)[i] = 1;
    } else {
      tau[i] = saved;
    }
  }
  return n_accepted;
}

namespace {

// Dense roughness matrix over tau, expressed in joint-index order.
Matrix dense_penalty_identity_order(const Vec& tau) {
  const std::size_t n = tau.size();
  if (n < 3) return Matrix(n, n);  // no curvature with fewer than 3 knots
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
  Vec knots(n);
  bool identity = true;
  for (std::size_t i = 0; i < n; ++i) {
    knots[i] = tau[order[i]];
    identity = identity && order[i] == i;
  }
  RoughnessMatrix rough{KnotGrid(std::move(knots))};
  if (identity) return rough.dense();
  Matrix out(n, n);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      out(p, q) = rough.dense()(rank[p], rank[q]);
  return out;
}

struct SortedTau {
  KnotGrid knots;
  Vec mu_sorted;
};

SortedTau sort_state(const Vec& tau, const Vec& mu) {
  const std::size_t n = tau.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
  Vec knots(n), mu_sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    knots[i] = tau[order[i]];
    mu_sorted[i] = mu[order[i]];
  }
  return {KnotGrid(std::move(knots)), std::move(mu_sorted)};
}

}  // namespace

Chain run_chain(const std::vector<AnomalySeries>& data,
                const JointChronology& joint, const ModelConfig& model,
                const SamplerConfig& sampler) {
  const std::size_t m = data.size();
  const std::size_t n = joint.size();
  if (m == 0 || m != joint.records() || model.records() != m)
    throw InvalidInputError("run_chain: record/configuration mismatch");
  if (sampler.burn_in >= sampler.iterations)
    throw InvalidInputError("run_chain: burn-in must be below total iterations");
  if (sampler.thinning == 0)
    throw InvalidInputError("run_chain: thinning must be at least 1");
  if (model.random_dates) {
    if (joint.psi.size() != n)
      throw ConfigError("run_chain: random dates need smoothed dating errors");
    for (double p : joint.psi)
      if (!(p > 0.0)) throw ConfigError("run_chain: psi must be positive");
  }

  std::vector<Vec> y(m);
  for (std::size_t k = 0; k < m; ++k) {
    y[k] = data[k].series.values;
    if (y[k].size() != joint.incidence[k].size())
      throw InvalidInputError("run_chain: record length mismatch");
  }

  Rng rng(sampler.seed);
  ConsensusState state;
  state.tau = joint.t;
  state.lambda0 = rng.gamma(model.eta, model.beta);

  const std::size_t j_total = joint.stacked_size();
  std::vector<Matrix> w_rec(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = y[k].size();
    w_rec[k] = Matrix(j, j);
    for (std::size_t i = 0; i < j; ++i) w_rec[k](i, i) = model.w[k];
  }
  Matrix w_pooled;
  Vec y_stacked;
  if (model.extended) {
    w_pooled = Matrix(j_total, j_total);
    std::size_t row = 0;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = 0; l < y[k].size(); ++l, ++row) {
        w_pooled(row, row) = model.w[k];
        y_stacked.push_back(y[k][l]);
      }
    state.sigmas.resize(1);
    const double denom = model.pooled_nu - (double)j_total - 1.0;
    if (!(denom > 0.0))
      throw ConfigError("run_chain: pooled degrees of freedom too small");
    state.sigmas[0] = w_pooled;
    for (std::size_t i = 0; i < j_total; ++i) state.sigmas[0](i, i) /= denom;
  } else {
    state.sigmas.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double denom = model.nu[k] - (double)y[k].size() - 1.0;
      if (!(denom > 0.0))
        throw ConfigError("run_chain: record degrees of freedom too small");
      state.sigmas[k] = w_rec[k];
      for (std::size_t i = 0; i < y[k].size(); ++i) state.sigmas[k](i, i) /= denom;
    }
  }

  Matrix k_identity = dense_penalty_identity_order(state.tau);
  bool k_dirty = false;

  auto draw_mu = [&](std::size_t iter) {
    try {
      if (model.extended)
        state.mu = sample_mu_conditional_extended(y, state.sigmas[0],
                                                  state.lambda0, k_identity,
                                                  joint, rng);
      else
        state.mu = sample_mu_conditional(y, state.sigmas, state.lambda0,
                                         k_identity, joint, rng);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ", mu: " +
                         e.what());
    }
  };

  draw_mu(0);

  Chain chain;
  chain.iterations = sampler.iterations;
  chain.burn_in = sampler.burn_in;
  chain.thinning = sampler.thinning;
  chain.seed = sampler.seed;
  chain.random_dates = model.random_dates;
  chain.extended = model.extended;
  chain.samples.reserve((sampler.iterations - sampler.burn_in) /
                        sampler.thinning);

  std::vector<std::size_t> tau_accepts(n, 0);
  std::vector<std::uint8_t> accept_flags;

  for (std::size_t iter = 1; iter <= sampler.iterations; ++iter) {
    if (k_dirty) {
      k_identity = dense_penalty_identity_order(state.tau);
      k_dirty = false;
    }
    draw_mu(iter);

    try {
      if (model.extended) {
        Vec mu_stacked(j_total);
        std::size_t row = 0;
        for (std::size_t k = 0; k < m; ++k)
          for (std::size_t l = 0; l < y[k].size(); ++l, ++row)
            mu_stacked[row] = state.mu[joint.incidence[k][l]];
        state.sigmas[0] = sample_sigma_conditional(y_stacked, mu_stacked,
                                                   w_pooled, model.pooled_nu,
                                                   rng);
      } else {
        for (std::size_t k = 0; k < m; ++k) {
          Vec mu_k(y[k].size());
          for (std::size_t l = 0; l < y[k].size(); ++l)
            mu_k[l] = state.mu[joint.incidence[k][l]];
          state.sigmas[k] = sample_sigma_conditional(y[k], mu_k, w_rec[k],
                                                     model.nu[k], rng);
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(iter) + ", sigma: " +
                         e.what());
    }

    {
      double quad = 0.0;
      if (n >= 3) {
        const SortedTau st = sort_state(state.tau, state.mu);
        quad = RoughnessForm(st.knots).quad_form(st.mu_sorted);
      }
      const double shape = 0.5 * (double)(n >= 2 ? n - 2 : 0) + model.eta;
      state.lambda0 = rng.gamma(shape, 0.5 * quad + model.beta);
    }

    if (model.random_dates) {
      const std::size_t before =
          update_tau_mh(state.tau, state.mu, state.lambda0, joint.t, joint.psi,
                        joint, rng, &accept_flags);
      if (before > 0) k_dirty = true;
      for (std::size_t i = 0; i < n; ++i) tau_accepts[i] += accept_flags[i];
    }

    if (iter > sampler.burn_in &&
        (iter - sampler.burn_in) % sampler.thinning == 0) {
      for (const Matrix& sigma : state.sigmas) {
        Matrix check = sigma;
        if (!cholesky_inplace(check))
          throw NumericError("iteration " + std::to_string(iter) +
                             ", store: covariance not positive definite");
      }
      chain.samples.push_back(state);
    }
  }

  if (model.random_dates) {
    chain.tau_accept_rate.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      chain.tau_accept_rate[i] =
          (double)tau_accepts[i] / (double)sampler.iterations;
  }
  return chain;
}

double geweke_z(const Vec& trace) {
  const std::size_t n = trace.size();
  if (n < 40) throw InvalidInputError("geweke_z: trace too short");
  const std::size_t n_a = n / 10;
  const std::size_t n_b = n / 2;
  const Vec a(trace.begin(), trace.begin() + n_a);
  const Vec b(trace.end() - n_b, trace.end());
  auto batch_se = [](const Vec& v) {
    const std::size_t nb = 10;
    const std::size_t len = v.size() / nb;
    Vec means(nb);
    for (std::size_t i = 0; i < nb; ++i) {
      double s = 0.0;
      for (std::size_t q = 0; q < len; ++q) s += v[i * len + q];
      means[i] = s / (double)len;
    }
    return vec_sd(means) / std::sqrt((double)nb);
  };
  const double se_a = batch_se(a);
  const double se_b = batch_se(b);
  const double denom = std::sqrt(se_a * se_a + se_b * se_b);
  if (denom == 0.0) return 0.0;
  return (vec_mean(a) - vec_mean(b)) / denom;
}

Vec trace_mu(const Chain& chain, std::size_t index) {
  Vec out(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    out[i] = chain.samples[i].mu.at(index);
  return out;
}

Vec trace_lambda0(const Chain& chain) {
  Vec out(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    out[i] = chain.samples[i].lambda0;
  return out;
}

}  // namespace conscale
