#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conscale/linalg.hpp"

namespace conscale {

// One reconstruction. Dates live on the internal forward time axis
// (years increasing toward the present, the negated age BP); values are
// degrees C. date_sd holds the dating standard errors in years when known.
struct ProxySeries {
  std::string id;
  Vec dates;
  Vec values;
  std::optional<Vec> date_sd;

  std::size_t size() const { return dates.size(); }
};

// Build a series from as-read data on the age-BP axis. Rows may come in any
// order; duplicate ages within a record are rejected.
ProxySeries make_proxy_series(std::string id, Vec age_bp, Vec values,
                              std::optional<Vec> age_sd);

inline double internal_from_age_bp(double age_bp) { return -age_bp; }
inline double age_bp_from_internal(double t) { return -t; }

// A centered reconstruction, values summing to zero.
struct AnomalySeries {
  ProxySeries series;
  double original_mean = 0.0;
};

AnomalySeries center(const ProxySeries& series);

// Replace near-coincident dates across the pooled set of all records by
// their group mean: sorted distinct dates are grouped greedily, starting a
// new group when the next date would stretch the group span beyond `width`.
// Throws BinCollisionError if two dates of one record land in one group.
std::vector<ProxySeries> bin_dates(const std::vector<ProxySeries>& series,
                                   double width);

// The merged set of distinct dates over all records, with the incidence maps
// back into each record and (optionally) the per-date averaged dating errors.
struct JointChronology {
  Vec t;     // distinct, strictly increasing, internal axis
  Vec psi;   // smoothed dating standard deviations (empty in fixed-date runs)
  std::vector<std::vector<std::size_t>> incidence;  // record -> joint indices
  Vec raw_sd;  // per joint date, averaged over records that share it
               // (empty when no record carries dating errors)

  std::size_t size() const { return t.size(); }
  std::size_t records() const { return incidence.size(); }
  std::size_t stacked_size() const;  // sum of record lengths
};

JointChronology merge_chronologies(const std::vector<AnomalySeries>& series);

// Local linear regression of the dating errors on time with a Gaussian
// kernel, evaluated at each date and clamped below at `floor` years.
Vec smooth_date_errors(const Vec& t, const Vec& sd, double bandwidth,
                       double floor = 1.0);

// Rule-of-thumb default bandwidth for smooth_date_errors.
double default_bandwidth(const Vec& t);

}  // namespace conscale
