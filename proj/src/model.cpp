#include "conscale/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "conscale/errors.hpp"

namespace conscale {

namespace {

// residual of record k against the consensus at its joint dates
Vec record_residual(const Vec& y, const Vec& mu,
                    const std::vector<std::size_t>& inc) {
  Vec r(y.size());
  for (std::size_t l = 0; l < y.size(); ++l) r[l] = y[l] - mu[inc[l]];
  return r;
}

double gaussian_quad_logdet(const Matrix& sigma, const Vec& r) {
  Matrix l = sigma;
  if (!cholesky_inplace(l))
    throw NumericError("log_likelihood: covariance not positive definite");
  Vec z = chol_solve(l, r);
  return -0.5 * chol_logdet(l) - 0.5 * vec_dot(r, z);
}

}  // namespace

ModelConfig make_model_config(const std::vector<AnomalySeries>& data,
                              ErrorMode mode,
                              const std::map<std::string, double>& sigma_override,
                              double w_override) {
  ModelConfig cfg;
  const std::size_t m = data.size();
  cfg.w.resize(m);
  cfg.nu.resize(m);
  cfg.sigma_bar.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& rec = data[k].series;
    double sb;
    if (auto it = sigma_override.find(rec.id); it != sigma_override.end()) {
      sb = it->second;
      if (!(sb > 0.0))
        throw ConfigError("sigma-bar override for record '" + rec.id +
                          "' must be positive");
    } else if (mode == ErrorMode::Large) {
      sb = elicit_error_bound(rec.values);
      if (!(sb > 0.0))
        throw ConfigError("record '" + rec.id +
                          "' has zero variance; supply --sigma-bar");
    } else {
      sb = 0.2;
    }
    const double w = w_override > 0.0
                         ? w_override
                         : (mode == ErrorMode::Large ? 0.5 : 50.0);
    cfg.sigma_bar[k] = sb;
    cfg.w[k] = w;
    cfg.nu[k] = wishart_dof_from_bound(sb, w, rec.size());
  }
  // pooled degrees of freedom chosen so the prior mean block scales average
  // to the per-record targets
  double mean_ratio = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    mean_ratio += cfg.w[k] / (cfg.sigma_bar[k] * cfg.sigma_bar[k]);
  mean_ratio /= (double)m;
  std::size_t j_total = 0;
  for (const auto& s : data) j_total += s.series.size();
  cfg.pooled_nu = (double)j_total + 1.0 + mean_ratio;
  return cfg;
}

ExpansionMatrix build_expansion_matrix(const JointChronology& joint) {
  ExpansionMatrix e;
  e.g = Matrix(joint.stacked_size(), joint.size());
  std::size_t row = 0;
  for (const auto& inc : joint.incidence)
    for (std::size_t idx : inc) e.g(row++, idx) = 1.0;
  return e;
}

double log_likelihood(const std::vector<Vec>& data, const ConsensusState& state,
                      const JointChronology& joint, bool extended) {
  if (data.size() != joint.records())
    throw InvalidInputError("log_likelihood: record count mismatch");
  if (extended) {
    if (state.sigmas.size() != 1)
      throw InvalidInputError("log_likelihood: extended mode needs one pooled "
                              "covariance");
    Vec r;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto& inc = joint.incidence[k];
      if (data[k].size() != inc.size())
        throw InvalidInputError("log_likelihood: record length mismatch");
      for (std::size_t l = 0; l < inc.size(); ++l)
        r.push_back(data[k][l] - state.mu[inc[l]]);
    }
    if (state.sigmas[0].rows() != r.size())
      throw InvalidInputError("log_likelihood: pooled covariance size mismatch");
    return gaussian_quad_logdet(state.sigmas[0], r);
  }
  if (state.sigmas.size() != data.size())
    throw InvalidInputError("log_likelihood: covariance count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& inc = joint.incidence[k];
    if (data[k].size() != inc.size() ||
        state.sigmas[k].rows() != inc.size())
      throw InvalidInputError("log_likelihood: record length mismatch");
    total += gaussian_quad_logdet(state.sigmas[k],
                                  record_residual(data[k], state.mu, inc));
  }
  return total;
}

namespace {
double log_prior_mu_impl(double lambda0, double quad, std::size_t n) {
  if (!(lambda0 > 0.0))
    throw InvalidInputError("log_prior_mu: lambda0 must be positive");
  return 0.5 * (double)(n - 2) * std::log(lambda0) - 0.5 * lambda0 * quad;
}
}  // namespace

double log_prior_mu(const Vec& mu, double lambda0, const RoughnessMatrix& k) {
  return log_prior_mu_impl(lambda0, k.quad_form(mu), k.size());
}

double log_prior_mu(const Vec& mu, double lambda0, const RoughnessForm& k) {
  return log_prior_mu_impl(lambda0, k.quad_form(mu), k.size());
}

double log_inv_wishart(const Matrix& sigma, const Matrix& w, double nu) {
  const std::size_t p = sigma.rows();
  if (w.rows() != p || w.cols() != p || sigma.cols() != p)
    throw InvalidInputError("log_inv_wishart: shape mismatch");
  if (!(nu > (double)p - 1.0))
    throw InvalidInputError("log_inv_wishart: degrees of freedom too small");
  Matrix l = sigma;
  if (!cholesky_inplace(l))
    throw NumericError("log_inv_wishart: sigma not positive definite");
  {
    Matrix lw = w;
    if (!cholesky_inplace(lw))
      throw NumericError("log_inv_wishart: scale matrix not positive definite");
  }
  const Matrix sigma_inv = chol_inverse(l);
  double trace = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    trace += vec_dot(Vec(w.row(i), w.row(i) + p),
                     Vec(sigma_inv.row(i), sigma_inv.row(i) + p));
  return -0.5 * (nu + (double)p + 1.0) * chol_logdet(l) - 0.5 * trace;
}

double date_log_likelihood(const Vec& t, const Vec& tau, const Vec& psi) {
  if (t.size() != tau.size() || t.size() != psi.size())
    throw InvalidInputError("date_log_likelihood: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(psi[i] > 0.0))
      throw InvalidInputError("date_log_likelihood: psi must be positive");
    const double z = (t[i] - tau[i]) / psi[i];
    total += -std::log(psi[i]) - 0.5 * z * z;
  }
  return total;
}

bool tau_order_ok(const Vec& tau, const JointChronology& joint) {
  if (tau.size() != joint.size())
    throw InvalidInputError("tau_order_ok: length mismatch");
  for (const auto& inc : joint.incidence)
    for (std::size_t l = 1; l < inc.size(); ++l)
      if (!(tau[inc[l]] > tau[inc[l - 1]])) return false;
  return true;
}

double log_prior_lambda0(double lambda0, double eta, double beta) {
  if (!(lambda0 > 0.0) || !(eta > 0.0) || !(beta > 0.0))
    throw InvalidInputError("log_prior_lambda0: parameters must be positive");
  return (eta - 1.0) * std::log(lambda0) - beta * lambda0;
}

double elicit_error_bound(const Vec& y_centered) {
  const std::size_t j = y_centered.size();
  if (j < 2) throw InvalidInputError("elicit_error_bound: need at least 2 values");
  const double v = vec_dot(y_centered, y_centered);
  if (v == 0.0) return 0.0;
  return std::sqrt(v / chi_square_quantile((double)j - 1.0, 0.05));
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw InvalidInputError("gamma_p: bad input");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Lentz continued fraction for the upper tail
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -(double)i * ((double)i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-17) break;
  }
  const double q = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - q;
}

double chi_square_quantile(double df, double p) {
  if (!(df >= 1.0)) throw InvalidInputError("chi_square_quantile: df must be >= 1");
  if (!(p > 0.0) || !(p < 1.0))
    throw InvalidInputError("chi_square_quantile: p must lie in (0, 1)");
  const double a = 0.5 * df;
  double lo = 0.0;
  double hi = std::max(df, 1.0);
  while (gamma_p(a, 0.5 * hi) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, 0.5 * mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double wishart_dof_from_bound(double sigma_bar, double w, std::size_t j) {
  if (!(sigma_bar > 0.0))
    throw InvalidInputError("wishart_dof_from_bound: sigma_bar must be positive");
  if (!(w > 0.0))
    throw InvalidInputError("wishart_dof_from_bound: w must be positive");
  return (double)j + 1.0 + w / (sigma_bar * sigma_bar);
}

double log_posterior(const ConsensusState& state, const std::vector<Vec>& data,
                     const Vec& t_obs, const ModelConfig& config,
                     const JointChronology& joint, const RoughnessMatrix& k) {
  const std::size_t n = joint.size();
  if (state.mu.size() != n || state.tau.size() != n || k.size() != n)
    throw InvalidInputError("log_posterior: dimension mismatch");

  double total = log_prior_lambda0(state.lambda0, config.eta, config.beta);

  if (config.extended) {
    Matrix w_pooled(joint.stacked_size(), joint.stacked_size());
    std::size_t row = 0;
    for (std::size_t rec = 0; rec < joint.records(); ++rec)
      for (std::size_t l = 0; l < joint.incidence[rec].size(); ++l, ++row)
        w_pooled(row, row) = config.w[rec];
    total += log_inv_wishart(state.sigmas[0], w_pooled, config.pooled_nu);
  } else {
    for (std::size_t rec = 0; rec < joint.records(); ++rec) {
      Matrix w_k(state.sigmas[rec].rows(), state.sigmas[rec].rows());
      for (std::size_t i = 0; i < w_k.rows(); ++i) w_k(i, i) = config.w[rec];
      total += log_inv_wishart(state.sigmas[rec], w_k, config.nu[rec]);
    }
  }

  if (config.random_dates) {
    if (!tau_order_ok(state.tau, joint))
      return -std::numeric_limits<double>::infinity();
    total += date_log_likelihood(t_obs, state.tau, joint.psi);
  }

  // penalty evaluated in knot order (tau sorted ascending)
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.tau[a] < state.tau[b];
  });
  Vec mu_sorted(n);
  for (std::size_t i = 0; i < n; ++i) mu_sorted[i] = state.mu[order[i]];
  total += log_prior_mu(mu_sorted, state.lambda0, k);

  total += log_likelihood(data, state, joint, config.extended);
  return total;
}

}  // namespace conscale
