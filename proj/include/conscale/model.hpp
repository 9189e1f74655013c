#pragma once

#include <map>
#include <string>
#include <vector>

#include "conscale/chronology.hpp"
#include "conscale/linalg.hpp"
#include "conscale/spline.hpp"

namespace conscale {

enum class ErrorMode { Large, Small };

// Priors and structural switches of the hierarchical model.
struct ModelConfig {
  Vec w;          // per-record inverse-Wishart scale diagonal w_k
  Vec nu;         // per-record degrees of freedom
  Vec sigma_bar;  // per-record reconstruction-error upper bounds
  double eta = 20.0;   // shape of the Gamma prior on lambda0
  double beta = 0.5;   // rate of the Gamma prior on lambda0
  bool extended = false;      // pooled error covariance across records
  bool random_dates = false;  // sample the true chronology
  double pooled_nu = 0.0;     // degrees of freedom in extended mode

  std::size_t records() const { return w.size(); }
};

// Elicit per-record bounds, scales and degrees of freedom for a mode,
// honoring explicit sigma_bar overrides by record id.
ModelConfig make_model_config(const std::vector<AnomalySeries>& data,
                              ErrorMode mode,
                              const std::map<std::string, double>& sigma_override =
                                  {},
                              double w_override = 0.0);

// One point of the posterior: consensus values at the joint dates, error
// covariances, smoothing level and true chronology.
struct ConsensusState {
  Vec mu;
  std::vector<Matrix> sigmas;  // one per record, or a single pooled matrix
  double lambda0 = 1.0;
  Vec tau;
};

// 0/1 matrix stacking the consensus onto the concatenated record layout.
struct ExpansionMatrix {
  Matrix g;  // stacked_size x n
};

ExpansionMatrix build_expansion_matrix(const JointChronology& joint);

// Gaussian observation log-density over all records (additive constants
// dropped). `data` holds the centered record values.
double log_likelihood(const std::vector<Vec>& data, const ConsensusState& state,
                      const JointChronology& joint, bool extended);

// Smoothing-prior log-density of mu given lambda0 (constants dropped).
// mu must be ordered consistently with k's knot grid.
double log_prior_mu(const Vec& mu, double lambda0, const RoughnessMatrix& k);
double log_prior_mu(const Vec& mu, double lambda0, const RoughnessForm& k);

// Inverse-Wishart log-kernel with scale matrix w and degrees of freedom nu.
double log_inv_wishart(const Matrix& sigma, const Matrix& w, double nu);

// Dating-error log-density of the observed dates given the true ones.
double date_log_likelihood(const Vec& t, const Vec& tau, const Vec& psi);

// True iff every record's subsequence of tau is strictly increasing.
bool tau_order_ok(const Vec& tau, const JointChronology& joint);

// Gamma(eta, beta) log-kernel for lambda0.
double log_prior_lambda0(double lambda0, double eta, double beta);

// Reconstruction-error upper bound from a centered record.
double elicit_error_bound(const Vec& y_centered);

// x with P(chi^2_df <= x) = p.
double chi_square_quantile(double df, double p);

// Regularized lower incomplete gamma P(a, x); exposed for the oracles.
double gamma_p(double a, double x);

// Degrees of freedom that give the inverse-Wishart prior mean sigma_bar^2 I.
double wishart_dof_from_bound(double sigma_bar, double w, std::size_t j);

// Full unnormalized log-posterior of a state. K must be built on the sorted
// knots of state.tau; the permutation between joint order and knot order is
// handled internally. Returns -infinity when the order constraint fails.
double log_posterior(const ConsensusState& state, const std::vector<Vec>& data,
                     const Vec& t_obs, const ModelConfig& config,
                     const JointChronology& joint, const RoughnessMatrix& k);

}  // namespace conscale
