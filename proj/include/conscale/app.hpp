#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "conscale/linalg.hpp"

namespace conscale {

// Everything a full analysis run depends on. Serialized verbatim into the
// run manifest so a run can be reproduced from it.
struct RunConfig {
  std::string input_path;
  std::string out_dir = ".";
  double bin_width = 15.0;
  std::string error_mode = "large";  // large | small | custom
  std::map<std::string, double> sigma_bar;  // per-record overrides
  double w = 0.0;                           // 0 keeps the mode default
  double eta = 20.0;
  double beta = 0.5;
  std::size_t iterations = 4000;
  std::size_t burn_in = 2000;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
  bool random_dates = false;
  bool extended = false;
  double alpha = 0.8;
  std::size_t scale_levels = 200;
  double scale_min = 0.0;  // 0 selects the effective-dof default
  double scale_max = 0.0;
  std::size_t time_points = 2000;
  std::vector<double> marker_edf = {12.0, 6.0, 3.0};
  double psi_floor = 1.0;
  double bandwidth = 0.0;  // 0 selects the rule-of-thumb default
  std::string chain_dump;  // optional path for the raw chain
  std::size_t threads = 0; // 0 uses all hardware threads
};

void write_manifest(const RunConfig& config, const std::string& path);
RunConfig read_manifest(const std::string& path);

// Full pipeline: ingest, bin, center, merge, sample, map, serialize.
// Writes consensus.csv, map.csv, map.svg, contributions.csv and
// run-manifest.json into config.out_dir.
void cmd_analyze(const RunConfig& config);

// Synthetic input generator for validation runs.
struct SyntheticSpec {
  std::string signal = "sum-of-sines";  // line | sine | sum-of-sines
  std::size_t records = 3;
  std::size_t points_per_record = 20;
  double amplitude = 1.0;
  double noise_sd = 0.2;
  double span_years = 9000.0;   // chronologies cover (0, span) years BP
  double date_sd_young = 0.0;   // dating error at the young end
  double date_sd_old = 0.0;     // dating error at the old end
  std::uint64_t seed = 0;
  std::string out_csv = "synthetic.csv";
  std::string truth_csv = "truth.csv";
};

double synthetic_signal(const SyntheticSpec& spec, double internal_t);
void cmd_simulate(const SyntheticSpec& spec);

}  // namespace conscale
