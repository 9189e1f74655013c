#include "conscale/scalespace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include "conscale/errors.hpp"
#include "conscale/kernels.hpp"

namespace conscale {

ScaleGrid make_log_scale_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo))
    throw InvalidInputError("scale grid: need 0 < lo < hi");
  if (count < 1) throw InvalidInputError("scale grid: empty");
  ScaleGrid g;
  g.lambdas.resize(count);
  if (count == 1) {
    g.lambdas[0] = lo;
    return g;
  }
  const double step = (std::log(hi) - std::log(lo)) / (double)(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    g.lambdas[i] = std::exp(std::log(lo) + step * (double)i);
  return g;
}

ScaleGrid default_scale_grid(const RoughnessMatrix& k, std::size_t count) {
  const double n = (double)k.size();
  const double edf_hi = std::max(std::min(n - 1.0, n - 0.01), 2.01);
  const double edf_lo = std::min(2.5, 0.5 * (2.0 + edf_hi));
  const double lo = lambda_for_edf(k, edf_hi);
  const double hi = lambda_for_edf(k, edf_lo);
  return make_log_scale_grid(lo, hi, count);
}

TimeGrid make_uniform_time_grid(double lo, double hi, std::size_t count) {
  if (!(hi > lo)) throw InvalidInputError("time grid: need lo < hi");
  if (count < 2) throw InvalidInputError("time grid: need at least 2 points");
  TimeGrid g;
  g.s.resize(count);
  const double step = (hi - lo) / (double)(count - 1);
  for (std::size_t i = 0; i < count; ++i) g.s[i] = lo + step * (double)i;
  g.s.back() = hi;
  return g;
}

namespace {

struct SortedSample {
  KnotGrid knots;
  Vec mu_sorted;
};

SortedSample sort_sample(const Vec& tau, const Vec& mu) {
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

// Derivative (and optionally value) of the natural interpolant of
// (knots, values) at s, where values' second derivatives are given.
// s outside the span is clamped; *clamped counts such points.
void eval_spline_on_grid(const KnotGrid& knots, const Vec& values,
                         const Vec& m2, const Vec& grid, double* deriv_out,
                         double* value_out, std::size_t* clamped) {
  for (std::size_t r = 0; r < grid.size(); ++r) {
    double s = grid[r];
    if (s < knots.front()) {
      s = knots.front();
      if (clamped) ++*clamped;
    } else if (s > knots.back()) {
      s = knots.back();
      if (clamped) ++*clamped;
    }
    const std::size_t i = knots.interval(s);
    const double h = knots[i + 1] - knots[i];
    const double a = knots[i + 1] - s;
    const double b = s - knots[i];
    if (deriv_out)
      deriv_out[r] = (values[i + 1] - values[i]) / h +
                     m2[i] * (-a * a / (2.0 * h) + h / 6.0) +
                     m2[i + 1] * (b * b / (2.0 * h) - h / 6.0);
    if (value_out)
      value_out[r] = m2[i] * (a * a * a / (6.0 * h) - h * a / 6.0) +
                     m2[i + 1] * (b * b * b / (6.0 * h) - h * b / 6.0) +
                     values[i] * a / h + values[i + 1] * b / h;
  }
}

// One scale level of a fixed-date chain: shared knot grid for all samples.
struct FixedLevelContext {
  const RoughnessMatrix* rough = nullptr;
  const Matrix* mu_samples = nullptr;   // chain size x n
  const Matrix* d_transposed = nullptr; // n x r, rows of D^T
  const Matrix* v_transposed = nullptr; // n x r, value matrix transposed
  const Vec* mu_mean = nullptr;
};

void fixed_level(const FixedLevelContext& ctx, double lambda, Matrix& deriv,
                 Vec* mean_smooth) {
  const Smoother sm(*ctx.rough, lambda);
  Matrix a = *ctx.d_transposed;  // n x r
  sm.apply_rows(a);              // S D^T
  kern::matmul(ctx.mu_samples->data(), a.data(), deriv.data(),
               ctx.mu_samples->rows(), ctx.mu_samples->cols(), a.cols());
  if (mean_smooth) {
    const Vec smoothed = sm.apply(*ctx.mu_mean);
    mean_smooth->assign(ctx.v_transposed->cols(), 0.0);
    for (std::size_t p = 0; p < ctx.v_transposed->rows(); ++p)
      kern::axpy(smoothed[p], ctx.v_transposed->row(p), mean_smooth->data(),
                 ctx.v_transposed->cols());
  }
}

// One scale level of a random-date chain: per-sample spline machinery.
void random_level(const Chain& chain, double lambda, const Vec& grid,
                  Matrix& deriv, Vec* mean_smooth, std::size_t* clamped) {
  const std::size_t r = grid.size();
  if (mean_smooth) mean_smooth->assign(r, 0.0);
  Vec value_row(r);
  for (std::size_t s_ix = 0; s_ix < chain.size(); ++s_ix) {
    const ConsensusState& st = chain.samples[s_ix];
    SortedSample ss = sort_sample(st.tau, st.mu);
    RoughnessMatrix rough(ss.knots);
    const Vec smoothed = Smoother(rough, lambda).apply(ss.mu_sorted);
    const Vec m2 = rough.second_derivatives(smoothed);
    eval_spline_on_grid(ss.knots, smoothed, m2, grid, deriv.row(s_ix),
                        mean_smooth ? value_row.data() : nullptr, clamped);
    if (mean_smooth)
      kern::axpy(1.0, value_row.data(), mean_smooth->data(), r);
  }
  if (mean_smooth)
    for (double& v : *mean_smooth) v /= (double)chain.size();
}

void check_chain(const Chain& chain) {
  if (chain.size() == 0) throw InvalidInputError("empty chain");
}

}  // namespace

Matrix derivative_samples(const Chain& chain, const JointChronology& joint,
                          double lambda, const TimeGrid& grid,
                          std::size_t* clamped) {
  check_chain(chain);
  if (!(lambda > 0.0))
    throw InvalidInputError("derivative_samples: lambda must be positive");
  const std::size_t n = joint.size();
  Matrix out(chain.size(), grid.size());
  std::size_t clamp_count = 0;
  if (!chain.random_dates) {
    const KnotGrid knots{joint.t};
    const RoughnessMatrix rough(knots);
    Matrix mu_samples(chain.size(), n);
    for (std::size_t i = 0; i < chain.size(); ++i)
      std::copy(chain.samples[i].mu.begin(), chain.samples[i].mu.end(),
                mu_samples.row(i));
    const Matrix dt = transpose(DerivativeMatrix(knots, grid.s).dense());
    FixedLevelContext ctx;
    ctx.rough = &rough;
    ctx.mu_samples = &mu_samples;
    ctx.d_transposed = &dt;
    fixed_level(ctx, lambda, out, nullptr);
  } else {
    random_level(chain, lambda, grid.s, out, nullptr, &clamp_count);
  }
  if (clamped) *clamped = clamp_count;
  return out;
}

std::vector<std::int8_t> flag_joint_credible(const Matrix& samples,
                                             double alpha) {
  if (samples.rows() == 0 || samples.cols() == 0)
    throw InvalidInputError("flag_joint_credible: empty sample matrix");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw InvalidInputError("flag_joint_credible: alpha must lie in (0, 1)");
  const std::size_t ns = samples.rows();
  const std::size_t r = samples.cols();
  const Matrix cols = transpose(samples);  // r x ns, point-major

  struct Candidate {
    std::size_t j;
    int sign;
    std::size_t count;
  };
  std::vector<Candidate> cand(r);
  const auto& ops = kern::active();
  for (std::size_t j = 0; j < r; ++j) {
    std::size_t pos = 0, neg = 0;
    ops.sign_counts(cols.row(j), ns, &pos, &neg);
    cand[j] = pos >= neg ? Candidate{j, +1, pos} : Candidate{j, -1, neg};
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return a.count != b.count ? a.count > b.count : a.j < b.j;
  });

  std::vector<std::int8_t> flags(r, kNone);
  std::vector<std::uint8_t> alive(ns, 1);
  const double need = alpha * (double)ns - 1e-9;
  for (const Candidate& c : cand) {
    if ((double)c.count < need) break;  // joint cannot exceed the marginal
    const std::size_t joint_count =
        ops.survivors_count(alive.data(), cols.row(c.j), ns, c.sign);
    if ((double)joint_count < need) break;
    ops.survivors_commit(alive.data(), cols.row(c.j), ns, c.sign);
    flags[c.j] = c.sign > 0 ? kIncreasing : kDecreasing;
  }
  return flags;
}

CredibilityMap build_credibility_map(const Chain& chain,
                                     const JointChronology& joint,
                                     const ScaleGrid& scales,
                                     const TimeGrid& times, double alpha,
                                     std::size_t threads) {
  check_chain(chain);
  if (scales.size() == 0 || times.size() == 0)
    throw InvalidInputError("build_credibility_map: empty grid");
  CredibilityMap map;
  map.lambdas = scales.lambdas;
  map.s = times.s;
  map.alpha = alpha;
  map.flags.assign(scales.size() * times.size(), kNone);
  map.mean_smooth = Matrix(scales.size(), times.size());
  map.mean_derivative = Matrix(scales.size(), times.size());

  const std::size_t n = joint.size();
  const std::size_t ns = chain.size();
  const std::size_t r = times.size();

  // fixed-date machinery shared across levels
  Matrix mu_samples;
  Vec mu_mean;
  Matrix dt, vt;
  std::optional<RoughnessMatrix> rough;
  if (!chain.random_dates) {
    const KnotGrid knots{joint.t};
    rough.emplace(knots);
    mu_samples = Matrix(ns, n);
    mu_mean.assign(n, 0.0);
    for (std::size_t i = 0; i < ns; ++i) {
      std::copy(chain.samples[i].mu.begin(), chain.samples[i].mu.end(),
                mu_samples.row(i));
      for (std::size_t p = 0; p < n; ++p) mu_mean[p] += chain.samples[i].mu[p];
    }
    for (double& v : mu_mean) v /= (double)ns;
    dt = transpose(DerivativeMatrix(knots, times.s).dense());
    vt = transpose(build_value_matrix(knots, times.s));
  }

  if (threads == 0) {
    threads = std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
  }
  threads = std::min(threads, scales.size());

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> clamp_total{0};
  std::vector<std::string> errors(threads);

  auto worker = [&](std::size_t worker_ix) {
    try {
      Matrix deriv(ns, r);
      for (;;) {
        const std::size_t level = next.fetch_add(1);
        if (level >= scales.size()) break;
        const double lambda = scales.lambdas[level];
        Vec mean_smooth;
        std::size_t clamped = 0;
        if (!chain.random_dates) {
          FixedLevelContext ctx;
          ctx.rough = &*rough;
          ctx.mu_samples = &mu_samples;
          ctx.d_transposed = &dt;
          ctx.v_transposed = &vt;
          ctx.mu_mean = &mu_mean;
          fixed_level(ctx, lambda, deriv, &mean_smooth);
        } else {
          random_level(chain, lambda, times.s, deriv, &mean_smooth, &clamped);
        }
        clamp_total.fetch_add(clamped);
        const std::vector<std::int8_t> flags = flag_joint_credible(deriv, alpha);
        std::copy(flags.begin(), flags.end(),
                  map.flags.begin() + (long)(level * r));
        std::copy(mean_smooth.begin(), mean_smooth.end(),
                  map.mean_smooth.row(level));
        // column means of the derivative samples
        double* md = map.mean_derivative.row(level);
        std::fill(md, md + r, 0.0);
        for (std::size_t s_ix = 0; s_ix < ns; ++s_ix)
          kern::axpy(1.0, deriv.row(s_ix), md, r);
        for (std::size_t jj = 0; jj < r; ++jj) md[jj] /= (double)ns;
      }
    } catch (const std::exception& e) {
      errors[worker_ix] = e.what();
    }
  };

  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (!err.empty()) throw NumericError("build_credibility_map: " + err);

  map.clamped = clamp_total.load();
  return map;
}

Vec posterior_mean_smooth(const Chain& chain, const JointChronology& joint,
                          double lambda, const TimeGrid& grid) {
  check_chain(chain);
  if (!(lambda >= 0.0))
    throw InvalidInputError("posterior_mean_smooth: lambda must be nonnegative");
  const std::size_t n = joint.size();
  if (!chain.random_dates) {
    const KnotGrid knots{joint.t};
    const RoughnessMatrix rough(knots);
    Vec mu_mean(n, 0.0);
    for (const auto& st : chain.samples)
      for (std::size_t p = 0; p < n; ++p) mu_mean[p] += st.mu[p];
    for (double& v : mu_mean) v /= (double)chain.size();
    const Vec smoothed = Smoother(rough, lambda).apply(mu_mean);
    const Vec m2 = rough.second_derivatives(smoothed);
    Vec out(grid.size());
    eval_spline_on_grid(knots, smoothed, m2, grid.s, nullptr, out.data(),
                        nullptr);
    return out;
  }
  Vec out(grid.size(), 0.0);
  Vec row(grid.size());
  for (const auto& st : chain.samples) {
    SortedSample ss = sort_sample(st.tau, st.mu);
    RoughnessMatrix rough(ss.knots);
    const Vec smoothed = Smoother(rough, lambda).apply(ss.mu_sorted);
    const Vec m2 = rough.second_derivatives(smoothed);
    eval_spline_on_grid(ss.knots, smoothed, m2, grid.s, nullptr, row.data(),
                        nullptr);
    kern::axpy(1.0, row.data(), out.data(), grid.size());
  }
  for (double& v : out) v /= (double)chain.size();
  return out;
}

ContributionCurve record_contributions(const Chain& chain,
                                       const JointChronology& joint,
                                       const std::vector<Vec>& data,
                                       std::size_t record, double lambda,
                                       const TimeGrid& grid) {
  check_chain(chain);
  if (chain.extended)
    throw ConfigError(
        "record_contributions: not defined for pooled-covariance chains");
  if (record >= joint.records())
    throw InvalidInputError("record_contributions: record index out of range");
  if (data.size() != joint.records())
    throw InvalidInputError("record_contributions: record count mismatch");
  if (!(lambda > 0.0))
    throw InvalidInputError("record_contributions: lambda must be positive");

  const std::size_t n = joint.size();
  ContributionCurve curve;
  curve.record = record;
  curve.lambda = lambda;
  curve.values.assign(grid.size(), 0.0);
  Vec row(grid.size());

  for (const auto& st : chain.samples) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return st.tau[a] < st.tau[b];
    });
    Vec knots(n);
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
      knots[i] = st.tau[order[i]];
      rank[order[i]] = i;
    }
    const RoughnessMatrix rough{KnotGrid{knots}};
    // joint-order precision of the mu conditional at this sample
    Matrix precision(n, n);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        precision(p, q) = st.lambda0 * rough.dense()(rank[p], rank[q]);

    Vec info_k(n, 0.0);
    for (std::size_t k = 0; k < joint.records(); ++k) {
      Matrix l = st.sigmas[k];
      if (!cholesky_inplace(l))
        throw NumericError("record_contributions: stored covariance not PD");
      const Matrix sigma_inv = chol_inverse(l);
      const auto& inc = joint.incidence[k];
      const std::size_t j = inc.size();
      for (std::size_t a = 0; a < j; ++a) {
        double* pr = precision.row(inc[a]);
        const double* sa = sigma_inv.row(a);
        for (std::size_t b = 0; b < j; ++b) pr[inc[b]] += sa[b];
      }
      if (k == record) {
        for (std::size_t a = 0; a < j; ++a)
          info_k[inc[a]] += kern::dot(sigma_inv.row(a), data[k].data(), j);
      }
    }
    if (!cholesky_inplace(precision))
      throw NumericError("record_contributions: precision not PD");
    Vec share = chol_solve(precision, info_k);  // Sigma0 Sigma_k^{-1} y_k
    Vec share_sorted(n);
    for (std::size_t i = 0; i < n; ++i) share_sorted[i] = share[order[i]];
    const Vec smoothed = Smoother(rough, lambda).apply(share_sorted);
    const Vec m2 = rough.second_derivatives(smoothed);
    eval_spline_on_grid(KnotGrid{knots}, smoothed, m2, grid.s, row.data(),
                        nullptr, nullptr);
    kern::axpy(1.0, row.data(), curve.values.data(), grid.size());
  }
  for (double& v : curve.values) v /= (double)chain.size();
  return curve;
}

}  // namespace conscale
