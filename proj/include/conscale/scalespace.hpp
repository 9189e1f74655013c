#pragma once

#include <cstdint>
#include <vector>

#include "conscale/chronology.hpp"
#include "conscale/sampler.hpp"
#include "conscale/spline.hpp"

namespace conscale {

struct ScaleGrid {
  Vec lambdas;  // strictly increasing, all positive
  std::size_t size() const { return lambdas.size(); }
};

ScaleGrid make_log_scale_grid(double lo, double hi, std::size_t count);

// Endpoints chosen by effective degrees of freedom: near-interpolation at
// the fine end (edf close to n-1) and near-linear at the coarse end
// (edf about 2.5).
ScaleGrid default_scale_grid(const RoughnessMatrix& k, std::size_t count = 200);

struct TimeGrid {
  Vec s;  // strictly increasing evaluation points, internal axis
  std::size_t size() const { return s.size(); }
};

TimeGrid make_uniform_time_grid(double lo, double hi, std::size_t count);

// Per-cell trend call at one (time, scale) point.
enum TrendFlag : std::int8_t { kDecreasing = -1, kNone = 0, kIncreasing = 1 };

struct CredibilityMap {
  Vec lambdas;
  Vec s;
  double alpha = 0.8;
  std::vector<std::int8_t> flags;  // levels x time points, level-major
  Matrix mean_smooth;              // per level: E(mu_lambda) on the time grid
  Matrix mean_derivative;          // per level: E(mu_lambda') on the time grid
  std::size_t clamped = 0;         // evaluation points clamped to a sample's span

  std::size_t levels() const { return lambdas.size(); }
  std::size_t points() const { return s.size(); }
  std::int8_t flag(std::size_t level, std::size_t j) const {
    return flags[level * s.size() + j];
  }
};

// Posterior sample matrix of the smoothed consensus derivative: one row per
// chain sample, one column per time-grid point. Random-date chains rebuild
// the spline machinery on each sample's reordered knots; time points outside
// a sample's knot span are clamped to it (counted in *clamped).
Matrix derivative_samples(const Chain& chain, const JointChronology& joint,
                          double lambda, const TimeGrid& grid,
                          std::size_t* clamped = nullptr);

// Simultaneous sign flags at credibility alpha: grows the flagged set in
// order of pointwise sign probability and stops before the joint posterior
// probability of the whole pattern drops below alpha.
std::vector<std::int8_t> flag_joint_credible(const Matrix& samples,
                                             double alpha);

CredibilityMap build_credibility_map(const Chain& chain,
                                     const JointChronology& joint,
                                     const ScaleGrid& scales,
                                     const TimeGrid& times, double alpha,
                                     std::size_t threads = 0);

// Pointwise posterior mean of the lambda-smoothed consensus on the grid.
Vec posterior_mean_smooth(const Chain& chain, const JointChronology& joint,
                          double lambda, const TimeGrid& grid);

// Mean share of one record in the conditional-mean slope of the smoothed
// consensus (zero-padded record information, averaged over samples).
struct ContributionCurve {
  std::size_t record = 0;
  double lambda = 0.0;
  Vec values;  // per time-grid point, degrees C per year
};

// `data` holds the centered record values the chain was sampled from.
ContributionCurve record_contributions(const Chain& chain,
                                       const JointChronology& joint,
                                       const std::vector<Vec>& data,
                                       std::size_t record, double lambda,
                                       const TimeGrid& grid);

}  // namespace conscale
