#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "conscale/app.hpp"
#include "conscale/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void add_analyze_options(CLI::App* cmd, conscale::RunConfig& cfg,
                         std::string& manifest_path,
                         std::vector<std::string>& sigma_args) {
  cmd->add_option("input", cfg.input_path, "input CSV (record_id,age_bp,age_sd,value)");
  cmd->add_option("--from-manifest", manifest_path,
                  "load every setting from a run manifest");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--bin-width", cfg.bin_width, "date binning width in years");
  cmd->add_option("--error-mode", cfg.error_mode, "large, small or custom");
  cmd->add_option("--sigma-bar", sigma_args,
                  "per-record error bound override, record=value");
  cmd->add_option("--w", cfg.w, "prior scale diagonal override");
  cmd->add_option("--eta", cfg.eta, "shape of the smoothing-level prior");
  cmd->add_option("--beta", cfg.beta, "rate of the smoothing-level prior");
  cmd->add_option("--iterations", cfg.iterations, "total MCMC iterations");
  cmd->add_option("--burn-in", cfg.burn_in, "burn-in iterations");
  cmd->add_option("--thin", cfg.thinning, "keep every k-th post-burn-in state");
  cmd->add_option("--seed", cfg.seed, "RNG seed");
  cmd->add_flag("--random-dates", cfg.random_dates,
                "sample the true chronology");
  cmd->add_flag("--extended", cfg.extended,
                "pooled error covariance across records");
  cmd->add_option("--alpha", cfg.alpha, "credibility level");
  cmd->add_option("--scale-levels", cfg.scale_levels, "number of scale levels");
  cmd->add_option("--scale-min", cfg.scale_min, "smallest smoothing level");
  cmd->add_option("--scale-max", cfg.scale_max, "largest smoothing level");
  cmd->add_option("--time-points", cfg.time_points, "evaluation grid size");
  cmd->add_option("--marker-edf", cfg.marker_edf,
                  "effective dof of the marker/contribution levels");
  cmd->add_option("--psi-floor", cfg.psi_floor,
                  "lower bound for smoothed dating errors (years)");
  cmd->add_option("--bandwidth", cfg.bandwidth,
                  "dating-error smoothing bandwidth (years)");
  cmd->add_option("--dump-chain", cfg.chain_dump, "write the raw chain CSV here");
  cmd->add_option("--threads", cfg.threads, "map-stage worker threads");
}

void parse_sigma_overrides(const std::vector<std::string>& args,
                           conscale::RunConfig& cfg) {
  for (const auto& arg : args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= arg.size())
      throw conscale::ConfigError("--sigma-bar expects record=value, got '" +
                                  arg + "'");
    char* end = nullptr;
    const double v = std::strtod(arg.c_str() + eq + 1, &end);
    if (*end != '\0')
      throw conscale::ConfigError("--sigma-bar value in '" + arg +
                                  "' is not a number");
    cfg.sigma_bar[arg.substr(0, eq)] = v;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus analysis of noisy irregular time series with "
               "scale-space trend maps"};
  app.require_subcommand(1);

  conscale::RunConfig cfg;
  std::string manifest_path;
  std::vector<std::string> sigma_args;
  CLI::App* analyze = app.add_subcommand("analyze", "run the full pipeline");
  add_analyze_options(analyze, cfg, manifest_path, sigma_args);

  conscale::SyntheticSpec spec;
  CLI::App* simulate =
      app.add_subcommand("simulate", "generate synthetic input data");
  simulate->add_option("--signal", spec.signal, "line, sine or sum-of-sines");
  simulate->add_option("--records", spec.records, "number of records");
  simulate->add_option("--points", spec.points_per_record,
                       "samples per record");
  simulate->add_option("--amplitude", spec.amplitude, "signal amplitude");
  simulate->add_option("--noise-sd", spec.noise_sd, "value noise sd");
  simulate->add_option("--span", spec.span_years, "chronology span in years");
  simulate->add_option("--date-sd-young", spec.date_sd_young,
                       "dating error at the young end (years)");
  simulate->add_option("--date-sd-old", spec.date_sd_old,
                       "dating error at the old end (years)");
  simulate->add_option("--seed", spec.seed, "RNG seed");
  simulate->add_option("--out", spec.out_csv, "output CSV path");
  simulate->add_option("--truth", spec.truth_csv, "truth curve CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (analyze->parsed()) {
      if (!manifest_path.empty()) {
        const std::string out_override =
            analyze->count("--out") ? cfg.out_dir : "";
        cfg = conscale::read_manifest(manifest_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
      }
      parse_sigma_overrides(sigma_args, cfg);
      conscale::cmd_analyze(cfg);
    } else if (simulate->parsed()) {
      conscale::cmd_simulate(spec);
    }
  } catch (const conscale::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const conscale::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const conscale::InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const conscale::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
