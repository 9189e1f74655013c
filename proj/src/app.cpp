#include "conscale/app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "conscale/csvio.hpp"
#include "conscale/errors.hpp"
#include "conscale/model.hpp"
#include "conscale/rng.hpp"
#include "conscale/sampler.hpp"
#include "conscale/scalespace.hpp"
#include "conscale/svg.hpp"

namespace conscale {

namespace {

using nlohmann::json;

json config_to_json(const RunConfig& c) {
  json j;
  j["input"] = c.input_path;
  j["out"] = c.out_dir;
  j["bin_width"] = c.bin_width;
  j["error_mode"] = c.error_mode;
  j["sigma_bar"] = c.sigma_bar;
  j["w"] = c.w;
  j["eta"] = c.eta;
  j["beta"] = c.beta;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  j["thinning"] = c.thinning;
  j["seed"] = c.seed;
  j["random_dates"] = c.random_dates;
  j["extended"] = c.extended;
  j["alpha"] = c.alpha;
  j["scale_levels"] = c.scale_levels;
  j["scale_min"] = c.scale_min;
  j["scale_max"] = c.scale_max;
  j["time_points"] = c.time_points;
  j["marker_edf"] = c.marker_edf;
  j["psi_floor"] = c.psi_floor;
  j["bandwidth"] = c.bandwidth;
  j["chain_dump"] = c.chain_dump;
  j["threads"] = c.threads;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.input_path = j.at("input").get<std::string>();
  c.out_dir = j.at("out").get<std::string>();
  c.bin_width = j.at("bin_width").get<double>();
  c.error_mode = j.at("error_mode").get<std::string>();
  c.sigma_bar = j.at("sigma_bar").get<std::map<std::string, double>>();
  c.w = j.at("w").get<double>();
  c.eta = j.at("eta").get<double>();
  c.beta = j.at("beta").get<double>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.thinning = j.at("thinning").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.random_dates = j.at("random_dates").get<bool>();
  c.extended = j.at("extended").get<bool>();
  c.alpha = j.at("alpha").get<double>();
  c.scale_levels = j.at("scale_levels").get<std::size_t>();
  c.scale_min = j.at("scale_min").get<double>();
  c.scale_max = j.at("scale_max").get<double>();
  c.time_points = j.at("time_points").get<std::size_t>();
  c.marker_edf = j.at("marker_edf").get<std::vector<double>>();
  c.psi_floor = j.at("psi_floor").get<double>();
  c.bandwidth = j.at("bandwidth").get<double>();
  c.chain_dump = j.at("chain_dump").get<std::string>();
  c.threads = j.at("threads").get<std::size_t>();
  return c;
}

void validate_config(const RunConfig& c) {
  if (c.input_path.empty()) throw ConfigError("no input file given");
  if (!(c.alpha > 0.0) || !(c.alpha < 1.0))
    throw ConfigError("--alpha must lie in (0, 1)");
  if (c.burn_in >= c.iterations)
    throw ConfigError("--burn-in must be below --iterations");
  if (c.thinning == 0) throw ConfigError("--thin must be at least 1");
  if (!(c.bin_width >= 0.0)) throw ConfigError("--bin-width must be >= 0");
  if (c.error_mode != "large" && c.error_mode != "small" &&
      c.error_mode != "custom")
    throw ConfigError("--error-mode must be large, small or custom");
  if (c.scale_levels == 0) throw ConfigError("--scale-levels must be positive");
  if (c.time_points < 2) throw ConfigError("--time-points must be at least 2");
  if ((c.scale_min > 0.0) != (c.scale_max > 0.0))
    throw ConfigError("--scale-min and --scale-max must be given together");
  if (c.scale_min > 0.0 && !(c.scale_max > c.scale_min))
    throw ConfigError("--scale-max must exceed --scale-min");
}

}  // namespace

void write_manifest(const RunConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << config_to_json(config).dump(2) << '\n';
}

RunConfig read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  json j;
  try {
    in >> j;
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + path + "': " + e.what());
  }
}

void cmd_analyze(const RunConfig& config) {
  validate_config(config);
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);

  // ingest
  std::vector<ProxySeries> raw = read_input_csv(config.input_path);
  if (config.random_dates)
    for (const auto& rec : raw)
      if (!rec.date_sd)
        throw ConfigError("--random-dates needs the age_sd column; record '" +
                          rec.id + "' has none");

  // bin, center, merge
  const std::vector<ProxySeries> binned =
      config.bin_width > 0.0 ? bin_dates(raw, config.bin_width) : raw;
  std::vector<AnomalySeries> anomalies;
  anomalies.reserve(binned.size());
  for (const auto& rec : binned) anomalies.push_back(center(rec));
  JointChronology joint = merge_chronologies(anomalies);

  // dating errors
  if (!joint.raw_sd.empty()) {
    const double bw = config.bandwidth > 0.0 ? config.bandwidth
                                             : default_bandwidth(joint.t);
    joint.psi =
        smooth_date_errors(joint.t, joint.raw_sd, bw, config.psi_floor);
  }
  if (config.random_dates) {
    bool all_zero = true;
    for (double v : joint.raw_sd) all_zero = all_zero && v == 0.0;
    if (joint.raw_sd.empty() || all_zero)
      throw ConfigError("--random-dates needs nonzero age_sd values");
  }

  // model configuration
  const ErrorMode mode =
      config.error_mode == "small" ? ErrorMode::Small : ErrorMode::Large;
  if (config.error_mode == "custom")
    for (const auto& a : anomalies)
      if (!config.sigma_bar.count(a.series.id))
        throw ConfigError("--error-mode custom needs --sigma-bar for record '" +
                          a.series.id + "'");
  ModelConfig model =
      make_model_config(anomalies, mode, config.sigma_bar, config.w);
  model.eta = config.eta;
  model.beta = config.beta;
  model.extended = config.extended;
  model.random_dates = config.random_dates;

  // sampling
  SamplerConfig sampler;
  sampler.iterations = config.iterations;
  sampler.burn_in = config.burn_in;
  sampler.thinning = config.thinning;
  sampler.seed = config.seed;
  const Chain chain = run_chain(anomalies, joint, model, sampler);

  // scale-space analysis
  const RoughnessMatrix rough{KnotGrid{joint.t}};
  const ScaleGrid scales =
      config.scale_min > 0.0
          ? make_log_scale_grid(config.scale_min, config.scale_max,
                                config.scale_levels)
          : default_scale_grid(rough, config.scale_levels);
  const TimeGrid times =
      make_uniform_time_grid(joint.t.front(), joint.t.back(),
                             config.time_points);
  const CredibilityMap map = build_credibility_map(chain, joint, scales, times,
                                                   config.alpha, config.threads);

  // marker levels for the drawing and the contribution curves
  Vec marker_lambdas;
  const double n = (double)joint.size();
  for (double edf : config.marker_edf) {
    const double clipped = std::min(std::max(edf, 2.05), n - 0.05);
    const double lam = lambda_for_edf(rough, clipped);
    if (lam >= scales.lambdas.front() && lam <= scales.lambdas.back())
      marker_lambdas.push_back(lam);
  }

  // outputs
  const auto path = [&](const char* name) {
    return (fs::path(config.out_dir) / name).string();
  };
  write_consensus_csv(path("consensus.csv"), joint, chain);
  write_map_csv(path("map.csv"), map);
  render_map_svg(map, path("map.svg"), marker_lambdas);

  if (!config.extended) {
    std::vector<Vec> data;
    for (const auto& a : anomalies) data.push_back(a.series.values);
    std::vector<std::pair<std::string, ContributionCurve>> curves;
    for (std::size_t k = 0; k < anomalies.size(); ++k)
      for (double lam : marker_lambdas)
        curves.emplace_back(anomalies[k].series.id,
                            record_contributions(chain, joint, data, k, lam,
                                                 times));
    write_contributions_csv(path("contributions.csv"), times, curves);
  }
  write_manifest(config, path("run-manifest.json"));
  if (!config.chain_dump.empty()) write_chain_csv(config.chain_dump, chain);

  // convergence diagnostics are reported, never enforced
  std::cout << "records: " << anomalies.size() << ", joint dates: "
            << joint.size() << ", stored samples: " << chain.size() << '\n';
  std::cout << "geweke z (lambda0): " << geweke_z(trace_lambda0(chain)) << '\n';
  std::cout << "geweke z (mu mid): "
            << geweke_z(trace_mu(chain, joint.size() / 2)) << '\n';
  if (!chain.tau_accept_rate.empty()) {
    const auto [lo, hi] = std::minmax_element(chain.tau_accept_rate.begin(),
                                              chain.tau_accept_rate.end());
    std::cout << "tau acceptance: " << *lo << " .. " << *hi << '\n';
  }
  if (map.clamped > 0)
    std::cout << "note: " << map.clamped
              << " evaluation points were clamped to a sample's knot span\n";
}

double synthetic_signal(const SyntheticSpec& spec, double internal_t) {
  const double u = (internal_t + spec.span_years) / spec.span_years;
  const double pi = 3.1415926535897932384626433832795;
  if (spec.signal == "line") return spec.amplitude * (2.0 * u - 1.0);
  if (spec.signal == "sine") return spec.amplitude * std::sin(2.0 * pi * u);
  // Two sines, even about the span center, with the harmonic weight kept
  // below 1/9 so the derivative changes sign exactly once, at mid-span.
  // Smoothing preserves that symmetry, so heavily smoothed versions keep
  // their single turning point in place.
  if (spec.signal == "sum-of-sines")
    return spec.amplitude *
           (std::sin(pi * u) + 0.08 * std::sin(3.0 * pi * u));
  throw ConfigError("unknown signal '" + spec.signal + "'");
}

void cmd_simulate(const SyntheticSpec& spec) {
  if (spec.records == 0 || spec.points_per_record < 2)
    throw ConfigError("simulate: need records >= 1 and >= 2 points each");
  if (!(spec.span_years > 0.0)) throw ConfigError("simulate: bad span");
  if (!(spec.noise_sd >= 0.0) || !(spec.date_sd_young >= 0.0) ||
      !(spec.date_sd_old >= 0.0))
    throw ConfigError("simulate: negative standard deviation");

  Rng rng(spec.seed);
  std::ofstream out(spec.out_csv, std::ios::binary);
  if (!out) throw IoError("cannot write '" + spec.out_csv + "'");
  out << "record_id,age_bp,age_sd,value\n";

  const bool dating_errors = spec.date_sd_young > 0.0 || spec.date_sd_old > 0.0;
  for (std::size_t k = 0; k < spec.records; ++k) {
    const std::size_t jn = spec.points_per_record;
    // jittered regular grid keeps within-record gaps well clear of binning
    Vec true_age(jn);
    for (std::size_t i = 0; i < jn; ++i)
      true_age[i] = spec.span_years *
                    ((double)i + 0.2 + 0.6 * rng.uniform()) / (double)jn;
    std::sort(true_age.begin(), true_age.end(), std::greater<>());

    Vec sd(jn), observed(jn);
    for (std::size_t i = 0; i < jn; ++i)
      sd[i] = spec.date_sd_young +
              (spec.date_sd_old - spec.date_sd_young) * true_age[i] /
                  spec.span_years;
    for (int attempt = 0;; ++attempt) {
      for (std::size_t i = 0; i < jn; ++i)
        observed[i] = true_age[i] + (sd[i] > 0.0 ? rng.normal(0.0, sd[i]) : 0.0);
      bool monotone = true;
      for (std::size_t i = 1; i < jn; ++i)
        monotone = monotone && observed[i] < observed[i - 1];
      if (monotone) break;
      if (attempt > 1000)
        throw NumericError("simulate: cannot keep observed chronology ordered; "
                           "reduce the dating-error profile");
    }

    for (std::size_t i = 0; i < jn; ++i) {
      const double value = synthetic_signal(spec, -true_age[i]) +
                           (spec.noise_sd > 0.0
                                ? rng.normal(0.0, spec.noise_sd)
                                : 0.0);
      out << "rec" << (k + 1) << ',' << fmt_double(observed[i]) << ',';
      if (dating_errors) out << fmt_double(sd[i]);
      out << ',' << fmt_double(value) << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + spec.out_csv + "'");

  std::ofstream truth(spec.truth_csv, std::ios::binary);
  if (!truth) throw IoError("cannot write '" + spec.truth_csv + "'");
  truth << "age_bp,value\n";
  const std::size_t grid_n = 2001;
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double age = spec.span_years * (double)i / (double)(grid_n - 1);
    truth << fmt_double(age) << ','
          << fmt_double(synthetic_signal(spec, -age)) << '\n';
  }
}

}  // namespace conscale
