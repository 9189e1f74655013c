// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "conscale/app.hpp"
#include "conscale/csvio.hpp"
#include "conscale/errors.hpp"
#include "conscale/model.hpp"
#include "conscale/rng.hpp"
#include "conscale/sampler.hpp"
#include "conscale/scalespace.hpp"
#include "conscale/spline.hpp"
#include "geweke_common.hpp"
#include "oracles.hpp"

using namespace conscale;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out{Outcome::kFail, "unhandled"};
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {Outcome::kFail, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  const char* tag = out.kind == Outcome::kPass
                        ? "PASS"
                        : (out.kind == Outcome::kSkip ? "SKIP" : "FAIL");
  std::printf("[%s] %s (%.1fs) %s\n", tag, name.c_str(), secs,
              out.detail.c_str());
  std::fflush(stdout);
  if (out.kind == Outcome::kFail) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "conscale_acceptance";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome roughness_oracle() {
  std::mt19937_64 eng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 4 + (std::size_t)(eng() % 27);  // 4..30
    const KnotGrid knots{oracles::random_grid(eng, n, 0.0, 10.0)};
    const RoughnessMatrix k(knots);
    const Vec mu = oracles::random_vector(eng, n);
    const double form = roughness(mu, k);
    const double reference = oracles::quadrature_roughness(
        [&](double x) { return interpolate(knots, mu, x); }, knots.values());
    worst = std::max(worst, std::fabs(form - reference) / reference);
  }
  if (worst < 1e-6)
    return {Outcome::kPass, fmt("max relative deviation %.2e", worst)};
  return {Outcome::kFail, fmt("relative deviation %.2e exceeds 1e-6", worst)};
}

Outcome smoother_oracle() {
  std::mt19937_64 eng(103);
  std::uniform_real_distribution<double> logl(-3.0, 3.0);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 4 + (std::size_t)(eng() % 22);
    const KnotGrid knots{oracles::random_grid(eng, n, 0.0, 8.0)};
    const RoughnessMatrix k(knots);
    const Vec mu = oracles::random_vector(eng, n);
    const double lambda = std::pow(10.0, logl(eng));
    Matrix system = k.dense();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) system(i, j) *= lambda;
      system(i, i) += 1.0;
    }
    const Vec expected = oracles::gauss_solve(system, mu);
    const Vec got = smooth(mu, lambda, k);
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::fabs(got[i] - expected[i]));
  }
  if (worst < 1e-8)
    return {Outcome::kPass, fmt("max deviation %.2e", worst)};
  return {Outcome::kFail, fmt("deviation %.2e exceeds 1e-8", worst)};
}

Outcome geweke_suite() {
  const geweke::Comparison c = geweke::run(100000, 424243);
  const std::string detail =
      fmt("max |z| mean %.2f, second moment %.2f (threshold 3)", c.max_z_mean,
          c.max_z_second);
  if (c.max_z_mean < 3.0 && c.max_z_second < 3.0)
    return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome tau_oracle() {
  // two-knot toy: one record, dates 6 years apart, dating sd 2 years
  const auto rec = center(make_proxy_series("a", Vec{100.0, 106.0},
                                            Vec{1.0, 2.0}, Vec{2.0, 2.0}));
  JointChronology joint = merge_chronologies({rec});
  joint.psi = Vec{2.0, 2.0};
  const Vec mu{0.0, 0.0};
  Vec tau = joint.t;
  Rng rng(1212);

  const std::size_t sweeps = 100000, burn = 1000;
  Vec samples;
  samples.reserve(sweeps);
  for (std::size_t i = 0; i < sweeps + burn; ++i) {
    (void)update_tau_mh(tau, mu, 1.0, joint.t, joint.psi, joint, rng);
    if (i >= burn) samples.push_back(tau[0]);
  }

  // marginal of tau_1: gaussian density times the order-constraint tail
  const double t1 = joint.t[0], t2 = joint.t[1], psi = 2.0;
  const oracles::TabulatedCdf cdf(
      [&](double u) {
        const double z = (u - t1) / psi;
        return std::exp(-0.5 * z * z) *
               0.5 * std::erfc((u - t2) / (psi * std::sqrt(2.0)));
      },
      t1 - 7.0 * psi, t1 + 7.0 * psi);
  const double d = oracles::ks_distance(samples, [&](double x) { return cdf(x); });
  const std::string detail = fmt("Kolmogorov distance %.4f over 1e5 sweeps", d);
  if (d < 0.02) return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

// shared state between the ground-truth criteria and the nesting check
struct GroundTruth {
  SyntheticSpec spec;
  std::vector<AnomalySeries> anomalies;
  JointChronology joint;
  Chain chain;
  bool ready = false;
};
GroundTruth g_truth;

Outcome ground_truth_recovery() {
  const fs::path dir = work_dir();
  SyntheticSpec spec;
  spec.signal = "sum-of-sines";
  spec.records = 3;
  spec.points_per_record = 20;
  spec.amplitude = 1.0;
  spec.noise_sd = 0.2;
  spec.span_years = 9000.0;
  spec.seed = 77;
  spec.out_csv = (dir / "gt_input.csv").string();
  spec.truth_csv = (dir / "gt_truth.csv").string();
  cmd_simulate(spec);

  const auto raw = read_input_csv(spec.out_csv);
  const auto binned = bin_dates(raw, 15.0);
  std::vector<AnomalySeries> anomalies;
  for (const auto& r : binned) anomalies.push_back(center(r));
  const JointChronology joint = merge_chronologies(anomalies);

  ModelConfig model = make_model_config(anomalies, ErrorMode::Small);
  SamplerConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 2000;
  cfg.seed = 7;
  const Chain chain = run_chain(anomalies, joint, model, cfg);

  // truth at the joint dates, centered the way the records were
  double level = 0.0;
  for (const auto& rec : raw) {
    double mean_k = 0.0;
    for (double t : rec.dates) mean_k += synthetic_signal(spec, t);
    level += mean_k / (double)rec.size();
  }
  level /= (double)raw.size();

  double rmse = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    const double truth = synthetic_signal(spec, joint.t[i]) - level;
    const double err = vec_mean(trace_mu(chain, i)) - truth;
    rmse += err * err;
  }
  rmse = std::sqrt(rmse / (double)joint.size());

  // coarse-scale map at effective dof 4
  const RoughnessMatrix rough{KnotGrid{joint.t}};
  const double lambda = lambda_for_edf(rough, 4.0);
  const TimeGrid grid =
      make_uniform_time_grid(joint.t.front(), joint.t.back(), 2000);
  const Matrix deriv = derivative_samples(chain, joint, lambda, grid);
  const std::vector<std::int8_t> flags = flag_joint_credible(deriv, 0.8);

  // true monotone segments of the sum of two sines: the derivative changes
  // sign exactly once, at mid-span (rising before, falling after)
  const double boundary = -0.5 * spec.span_years;
  std::size_t interior = 0, correct = 0, opposite = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double s = grid.s[j];
    if (std::fabs(s - boundary) < 1e-9) continue;
    const int sign = s < boundary ? +1 : -1;
    ++interior;
    if (flags[j] == sign) ++correct;
    if (flags[j] == -sign) ++opposite;
  }
  const double frac = (double)correct / (double)interior;

  g_truth = {spec, anomalies, joint, chain, true};

  const std::string detail = fmt(
      "rmse %.3f (limit 0.2), correct-sign fraction %.3f (floor 0.8), "
      "opposite flags %.0f",
      rmse, frac, (double)opposite);
  if (rmse <= 0.2 && frac >= 0.8 && opposite == 0)
    return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome coverage_appendix_a() {
  Rng rng(505);
  const std::size_t j = 50, reps = 1000;
  const double sigma = 1.3;
  std::size_t covered = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    Vec y(j);
    for (double& v : y) v = rng.normal(0.0, sigma);
    const double mean = vec_mean(y);
    for (double& v : y) v -= mean;
    covered += elicit_error_bound(y) >= sigma;
  }
  const double frac = (double)covered / (double)reps;
  const std::string detail = fmt("coverage %.3f (target 0.95 +- 0.02)", frac);
  if (std::fabs(frac - 0.95) <= 0.02) return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome contribution_identity() {
  // per-sample identity between the record split and the full slope
  std::mt19937_64 eng(707);
  const auto a = center(make_proxy_series(
      "a", Vec{100.0, 300.0, 500.0, 700.0, 900.0}, Vec{1.0, -0.5, 0.7, 0.2, -0.9},
      std::nullopt));
  const auto b = center(make_proxy_series(
      "b", Vec{200.0, 500.0, 800.0}, Vec{0.5, -0.2, 0.4}, std::nullopt));
  const JointChronology joint = merge_chronologies({a, b});
  const std::vector<Vec> data{a.series.values, b.series.values};

  ModelConfig model = make_model_config({a, b}, ErrorMode::Small);
  SamplerConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 100;
  cfg.seed = 31;
  Chain chain = run_chain({a, b}, joint, model, cfg);
  if (chain.size() != 100) return {Outcome::kFail, "unexpected chain length"};

  const TimeGrid grid =
      make_uniform_time_grid(joint.t.front(), joint.t.back(), 64);
  const double lambda = 50.0;
  double worst = 0.0;
  for (std::size_t s = 0; s < chain.size(); ++s) {
    Chain one;
    one.random_dates = chain.random_dates;
    one.samples = {chain.samples[s]};
    Vec total(grid.size(), 0.0);
    for (std::size_t rec = 0; rec < 2; ++rec) {
      const ContributionCurve c =
          record_contributions(one, joint, data, rec, lambda, grid);
      for (std::size_t jj = 0; jj < grid.size(); ++jj)
        total[jj] += c.values[jj];
    }
    // dense evaluation of the conditional-mean slope
    const RoughnessMatrix k{KnotGrid{joint.t}};
    Matrix prec = k.dense();
    const std::size_t n = joint.size();
    for (std::size_t i = 0; i < n * n; ++i)
      prec.data()[i] *= chain.samples[s].lambda0;
    Vec info(n, 0.0);
    for (std::size_t rec = 0; rec < 2; ++rec) {
      Matrix l = chain.samples[s].sigmas[rec];
      cholesky_inplace(l);
      const Matrix inv = chol_inverse(l);
      const auto& inc = joint.incidence[rec];
      for (std::size_t p = 0; p < inc.size(); ++p) {
        for (std::size_t q = 0; q < inc.size(); ++q)
          prec(inc[p], inc[q]) += inv(p, q);
        double dot = 0.0;
        for (std::size_t q = 0; q < inc.size(); ++q)
          dot += inv(p, q) * data[rec][q];
        info[inc[p]] += dot;
      }
    }
    const Vec mu0 = oracles::gauss_solve(prec, info);
    const Vec smoothed = smooth(mu0, lambda, k);
    const Vec m2 = k.second_derivatives(smoothed);
    const DerivativeMatrix d{KnotGrid{joint.t}, grid.s};
    const Vec slope = mat_vec(d.dense(), smoothed);
    for (std::size_t jj = 0; jj < grid.size(); ++jj)
      worst = std::max(worst, std::fabs(total[jj] - slope[jj]));
  }
  const std::string detail =
      fmt("max deviation %.2e over 100 samples (limit 1e-10)", worst);
  if (worst < 1e-10) return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome alpha_nesting() {
  if (!g_truth.ready)
    return {Outcome::kSkip, "ground-truth chain unavailable"};
  const RoughnessMatrix rough{KnotGrid{g_truth.joint.t}};
  const ScaleGrid scales = default_scale_grid(rough, 24);
  const TimeGrid times = make_uniform_time_grid(g_truth.joint.t.front(),
                                                g_truth.joint.t.back(), 400);
  const CredibilityMap loose = build_credibility_map(
      g_truth.chain, g_truth.joint, scales, times, 0.8);
  const CredibilityMap strict = build_credibility_map(
      g_truth.chain, g_truth.joint, scales, times, 0.95);
  std::size_t strict_cells = 0, violations = 0;
  for (std::size_t i = 0; i < loose.flags.size(); ++i) {
    if (strict.flags[i] != kNone) {
      ++strict_cells;
      if (strict.flags[i] != loose.flags[i]) ++violations;
    }
  }
  const std::string detail = fmt(
      "%.0f flagged cells at 0.95, %.0f nesting violations", (double)strict_cells,
      (double)violations);
  if (violations == 0) return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome determinism() {
  const fs::path dir = work_dir();
  SyntheticSpec spec;
  spec.signal = "sine";
  spec.records = 2;
  spec.points_per_record = 12;
  spec.noise_sd = 0.15;
  spec.span_years = 2000.0;
  spec.seed = 55;
  spec.out_csv = (dir / "det_input.csv").string();
  spec.truth_csv = (dir / "det_truth.csv").string();
  cmd_simulate(spec);

  RunConfig cfg;
  cfg.input_path = spec.out_csv;
  cfg.iterations = 600;
  cfg.burn_in = 300;
  cfg.seed = 99;
  cfg.error_mode = "small";
  cfg.scale_levels = 16;
  cfg.time_points = 120;
  cfg.out_dir = (dir / "det_a").string();
  cmd_analyze(cfg);
  RunConfig cfg2 = cfg;
  cfg2.out_dir = (dir / "det_b").string();
  cmd_analyze(cfg2);
  const bool consensus_same = slurp(dir / "det_a" / "consensus.csv") ==
                              slurp(dir / "det_b" / "consensus.csv");
  const bool map_same =
      slurp(dir / "det_a" / "map.csv") == slurp(dir / "det_b" / "map.csv");
  if (consensus_same && map_same)
    return {Outcome::kPass, "consensus.csv and map.csv byte-identical"};
  return {Outcome::kFail, std::string("consensus identical: ") +
                              (consensus_same ? "yes" : "no") +
                              ", map identical: " + (map_same ? "yes" : "no")};
}

Outcome supplement_bounds() {
  const char* env = std::getenv("CONSCALE_SUPPLEMENT");
  const std::string path = env ? env : "data/supplement_s2.csv";
  if (!fs::exists(path))
    return {Outcome::kSkip,
            "supplement data not present (set CONSCALE_SUPPLEMENT to the "
            "six-record input CSV)"};
  const auto records = read_input_csv(path);
  if (records.size() != 6)
    return {Outcome::kFail, fmt("expected 6 records, found %.0f",
                                (double)records.size())};
  const double expected[6] = {0.32, 0.27, 0.68, 0.59, 0.21, 0.71};
  double worst = 0.0;
  std::string per;
  for (std::size_t k = 0; k < 6; ++k) {
    const AnomalySeries a = center(records[k]);
    const double got = elicit_error_bound(a.series.values);
    worst = std::max(worst, std::fabs(got - expected[k]));
    per += fmt(" %.3f", got);
  }
  const std::string detail = fmt("max |deviation| %.4f;", worst) + per;
  if (worst <= 0.01) return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

Outcome performance() {
  const fs::path dir = work_dir();
  SyntheticSpec spec;
  spec.signal = "sum-of-sines";
  spec.records = 6;
  spec.points_per_record = 17;  // about 100 joint dates
  spec.noise_sd = 0.25;
  spec.span_years = 9000.0;
  spec.date_sd_young = 15.0;
  spec.date_sd_old = 80.0;
  spec.seed = 1234;
  spec.out_csv = (dir / "perf_input.csv").string();
  spec.truth_csv = (dir / "perf_truth.csv").string();
  cmd_simulate(spec);

  const auto raw = read_input_csv(spec.out_csv);
  const auto binned = bin_dates(raw, 15.0);
  std::vector<AnomalySeries> anomalies;
  for (const auto& r : binned) anomalies.push_back(center(r));
  JointChronology joint = merge_chronologies(anomalies);
  joint.psi = smooth_date_errors(joint.t, joint.raw_sd,
                                 default_bandwidth(joint.t), 1.0);

  ModelConfig model = make_model_config(anomalies, ErrorMode::Small);
  model.random_dates = true;
  SamplerConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 2000;
  cfg.seed = 8;

  const auto t0 = std::chrono::steady_clock::now();
  const Chain random_chain = run_chain(anomalies, joint, model, cfg);
  const double sampler_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  ModelConfig fixed = model;
  fixed.random_dates = false;
  const Chain fixed_chain = run_chain(anomalies, joint, fixed, cfg);

  const RoughnessMatrix rough{KnotGrid{joint.t}};
  const ScaleGrid scales = default_scale_grid(rough, 200);
  const TimeGrid times =
      make_uniform_time_grid(joint.t.front(), joint.t.back(), 2000);
  const auto t1 = std::chrono::steady_clock::now();
  const CredibilityMap map =
      build_credibility_map(fixed_chain, joint, scales, times, 0.8);
  const double map_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1)
          .count();

  const std::string detail = fmt(
      "n=%.0f joint dates; random-date sampler %.1fs (limit 600), "
      "200x2000 map %.1fs (limit 300)",
      (double)joint.size(), sampler_secs, map_secs);
  if (joint.size() < 80 || joint.size() > 130)
    return {Outcome::kFail, "unexpected joint size; " + detail};
  if (random_chain.size() != 2000 || map.levels() != 200)
    return {Outcome::kFail, "unexpected output shape; " + detail};
  if (sampler_secs < 600.0 && map_secs < 300.0)
    return {Outcome::kPass, detail};
  return {Outcome::kFail, detail};
}

}  // namespace

int main() {
  std::printf("acceptance criteria\n===================\n");
  report("roughness-matrix quadrature oracle", roughness_oracle);
  report("smoother quadratic-program oracle", smoother_oracle);
  report("conjugacy (Geweke joint-distribution) suite", geweke_suite);
  report("tau-conditional grid-integration oracle", tau_oracle);
  report("ground-truth recovery on synthetic sum of sines",
         ground_truth_recovery);
  report("reconstruction-error bound coverage", coverage_appendix_a);
  report("record-contribution decomposition identity", contribution_identity);
  report("alpha nesting of credibility flags", alpha_nesting);
  report("byte-identical reruns", determinism);
  report("supplement error-bound reproduction (conditional)",
         supplement_bounds);
  report("desk-scale performance", performance);
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
