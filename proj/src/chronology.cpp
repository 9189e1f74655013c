#include "conscale/chronology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "conscale/errors.hpp"

namespace conscale {

ProxySeries make_proxy_series(std::string id, Vec age_bp, Vec values,
                              std::optional<Vec> age_sd) {
  const std::size_t j = age_bp.size();
  if (j < 2)
    throw InvalidInputError("record '" + id + "': needs at least 2 samples");
  if (values.size() != j || (age_sd && age_sd->size() != j))
    throw InvalidInputError("record '" + id + "': column lengths differ");
  for (double a : age_bp)
    if (!std::isfinite(a))
      throw InvalidInputError("record '" + id + "': non-finite age");
  if (age_sd)
    for (double s : *age_sd)
      if (!(s >= 0.0))
        throw InvalidInputError("record '" + id + "': negative age_sd");

  std::vector<std::size_t> order(j);
  std::iota(order.begin(), order.end(), 0);
  // oldest first on the internal axis = descending age BP
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return age_bp[a] > age_bp[b]; });

  ProxySeries out;
  out.id = std::move(id);
  out.dates.resize(j);
  out.values.resize(j);
  if (age_sd) out.date_sd = Vec(j);
  for (std::size_t i = 0; i < j; ++i) {
    out.dates[i] = internal_from_age_bp(age_bp[order[i]]);
    out.values[i] = values[order[i]];
    if (age_sd) (*out.date_sd)[i] = (*age_sd)[order[i]];
  }
  for (std::size_t i = 1; i < j; ++i)
    if (!(out.dates[i] > out.dates[i - 1]))
      throw InvalidInputError("record '" + out.id + "': duplicate age " +
                              std::to_string(age_bp_from_internal(out.dates[i])) +
                              " BP");
  return out;
}

AnomalySeries center(const ProxySeries& series) {
  if (series.values.empty()) throw InvalidInputError("center: empty series");
  AnomalySeries out{series, vec_mean(series.values)};
  for (double& v : out.series.values) v -= out.original_mean;
  return out;
}

std::vector<ProxySeries> bin_dates(const std::vector<ProxySeries>& series,
                                   double width) {
  if (!(width >= 0.0)) throw InvalidInputError("bin_dates: negative width");
  // grouping runs on the age-BP axis, oldest bins anchored at the youngest
  // date of each group
  Vec pooled;
  for (const auto& s : series)
    for (double d : s.dates) pooled.push_back(age_bp_from_internal(d));
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::map<double, double> remap;  // age BP -> group mean age BP
  std::size_t start = 0;
  while (start < pooled.size()) {
    std::size_t end = start + 1;
    while (end < pooled.size() && pooled[end] - pooled[start] <= width) ++end;
    double mean = 0.0;
    for (std::size_t i = start; i < end; ++i) mean += pooled[i];
    mean /= (double)(end - start);
    for (std::size_t i = start; i < end; ++i) remap[pooled[i]] = mean;
    start = end;
  }

  std::vector<ProxySeries> out = series;
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    for (double& d : s.dates)
      d = internal_from_age_bp(remap.at(age_bp_from_internal(d)));
    for (std::size_t i = 1; i < s.dates.size(); ++i) {
      if (!(s.dates[i] > s.dates[i - 1])) {
        std::ostringstream msg;
        msg << "bin width " << width << " collapses dates "
            << age_bp_from_internal(series[k].dates[i]) << " BP and "
            << age_bp_from_internal(series[k].dates[i - 1])
            << " BP of record '" << s.id << "'";
        throw BinCollisionError(msg.str());
      }
    }
  }
  return out;
}

std::size_t JointChronology::stacked_size() const {
  std::size_t j = 0;
  for (const auto& inc : incidence) j += inc.size();
  return j;
}

JointChronology merge_chronologies(const std::vector<AnomalySeries>& series) {
  if (series.empty()) throw InvalidInputError("merge_chronologies: no records");
  Vec all;
  for (const auto& s : series)
    all.insert(all.end(), s.series.dates.begin(), s.series.dates.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  JointChronology joint;
  joint.t = all;
  joint.incidence.resize(series.size());
  bool any_sd = false;
  for (const auto& s : series) any_sd = any_sd || s.series.date_sd.has_value();
  Vec sd_sum(all.size(), 0.0), sd_count(all.size(), 0.0);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k].series;
    joint.incidence[k].resize(s.dates.size());
    for (std::size_t l = 0; l < s.dates.size(); ++l) {
      auto it = std::lower_bound(all.begin(), all.end(), s.dates[l]);
      const std::size_t idx = (std::size_t)(it - all.begin());
      joint.incidence[k][l] = idx;
      if (s.date_sd) {
        sd_sum[idx] += (*s.date_sd)[l];
        sd_count[idx] += 1.0;
      }
    }
  }
  if (any_sd) {
    joint.raw_sd.resize(all.size(), 0.0);
    for (std::size_t i = 0; i < all.size(); ++i)
      joint.raw_sd[i] = sd_count[i] > 0.0 ? sd_sum[i] / sd_count[i] : 0.0;
  }
  return joint;
}

Vec smooth_date_errors(const Vec& t, const Vec& sd, double bandwidth,
                       double floor) {
  if (t.size() != sd.size())
    throw InvalidInputError("smooth_date_errors: length mismatch");
  if (t.empty()) throw InvalidInputError("smooth_date_errors: empty input");
  if (!(bandwidth > 0.0))
    throw InvalidInputError("smooth_date_errors: bandwidth must be positive");
  for (double s : sd)
    if (!(s >= 0.0))
      throw InvalidInputError("smooth_date_errors: negative sd");

  const std::size_t n = t.size();
  Vec psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (t[j] - t[i]) / bandwidth;
      const double w = std::exp(-0.5 * d * d);
      const double x = t[j] - t[i];
      s0 += w;
      s1 += w * x;
      s2 += w * x * x;
      t0 += w * sd[j];
      t1 += w * sd[j] * x;
    }
    const double den = s0 * s2 - s1 * s1;
    double fit;
    if (den > 1e-12 * s0 * s2 + 1e-300)
      fit = (s2 * t0 - s1 * t1) / den;
    else
      fit = t0 / s0;  // kernel too narrow for a slope; fall back to the mean
    psi[i] = std::max(fit, floor);
  }
  return psi;
}

double default_bandwidth(const Vec& t) {
  const double spread = vec_sd(t);
  const double n = (double)t.size();
  const double bw = 1.06 * spread * std::pow(n, -0.2);
  return bw > 0.0 ? bw : 1.0;
}

}  // namespace conscale
