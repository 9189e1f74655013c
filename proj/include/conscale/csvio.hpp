#pragma once

#include <string>
#include <utility>
#include <vector>

#include "conscale/chronology.hpp"
#include "conscale/sampler.hpp"
#include "conscale/scalespace.hpp"

namespace conscale {

// Fixed-width-free decimal formatting shared by all writers, so identical
// runs produce identical bytes.
std::string fmt_double(double v);

// Input schema: header `record_id,age_bp,age_sd,value`, one row per sample.
// age_sd may be empty (uniformly per record). Throws with line numbers.
std::vector<ProxySeries> read_input_csv(const std::string& path);

// date, posterior mean and pointwise 5%/95% quantiles of the consensus at
// the joint dates, oldest first, ages in years BP.
void write_consensus_csv(const std::string& path, const JointChronology& joint,
                         const Chain& chain);

// One row per (scale level, time point): age_bp, lambda, flag in {-1,0,1}.
void write_map_csv(const std::string& path, const CredibilityMap& map);

// One row per (record, marker level, time point).
void write_contributions_csv(
    const std::string& path, const TimeGrid& grid,
    const std::vector<std::pair<std::string, ContributionCurve>>& curves);

// Wide per-iteration dump: iteration, lambda0, mu_*, tau_*, then the
// diagonal entries of every stored covariance.
void write_chain_csv(const std::string& path, const Chain& chain);

}  // namespace conscale
