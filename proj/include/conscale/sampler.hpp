#pragma once

#include <cstdint>
#include <vector>

#include "conscale/chronology.hpp"
#include "conscale/model.hpp"
#include "conscale/rng.hpp"
#include "conscale/spline.hpp"

namespace conscale {

struct SamplerConfig {
  std::size_t iterations = 4000;
  std::size_t burn_in = 2000;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
};

// Post-burn-in samples plus run metadata.
struct Chain {
  std::vector<ConsensusState> samples;
  Vec tau_accept_rate;  // per joint index; empty in fixed-date runs
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
  bool random_dates = false;
  bool extended = false;

  std::size_t size() const { return samples.size(); }
};

// Exact draw from the conditional of mu. `k_identity` is the dense roughness
// matrix expressed in joint-index order (it equals the plain dense matrix
// whenever the true dates are in observed order). `anchor`, when given, adds
// a fixed symmetric precision term to the prior; calibration tests use it to
// pin the two flat directions of the intrinsic prior.
Vec sample_mu_conditional(const std::vector<Vec>& data,
                          const std::vector<Matrix>& sigmas, double lambda0,
                          const Matrix& k_identity, const JointChronology& joint,
                          Rng& rng, const Matrix* anchor = nullptr,
                          Vec* out_mean = nullptr);

// Pooled-covariance variant; the record layout provides the expansion.
Vec sample_mu_conditional_extended(const std::vector<Vec>& data,
                                   const Matrix& sigma, double lambda0,
                                   const Matrix& k_identity,
                                   const JointChronology& joint, Rng& rng,
                                   const Matrix* anchor = nullptr,
                                   Vec* out_mean = nullptr);

// Inverse-Wishart draw with scale matrix `scale` and degrees of freedom df,
// via the Bartlett decomposition of the matching Wishart.
Matrix sample_inv_wishart(const Matrix& scale, double df, Rng& rng);

// Conditional draw of one record covariance given its residual.
Matrix sample_sigma_conditional(const Vec& y_k, const Vec& mu_k,
                                const Matrix& w_k, double nu_k, Rng& rng);

double sample_lambda0_conditional(const Vec& mu, const RoughnessMatrix& k,
                                  double eta, double beta, Rng& rng);

// One componentwise random-walk Metropolis sweep over the true dates, in
// ascending joint-index order with proposal sd psi_i / 10. Returns the number
// of accepted moves. mu is held fixed; the roughness penalty is re-evaluated
// on each proposal's reordered knots.
std::size_t update_tau_mh(Vec& tau, const Vec& mu, double lambda0,
                          const Vec& t_obs, const Vec& psi,
                          const JointChronology& joint, Rng& rng,
                          std::vector<std::uint8_t>* accepted = nullptr);

Chain run_chain(const std::vector<AnomalySeries>& data,
                const JointChronology& joint, const ModelConfig& model,
                const SamplerConfig& sampler);

// Convergence diagnostic: z-score between the means of the first 10% and the
// last 50% of a trace, with batch-means standard errors.
double geweke_z(const Vec& trace);

// Scalar traces extracted from a chain for diagnostics and dumps.
Vec trace_mu(const Chain& chain, std::size_t index);
Vec trace_lambda0(const Chain& chain);

}  // namespace conscale
