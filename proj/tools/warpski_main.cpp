// warpski command line: experiment runs and the property suite.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "warpski/error.hpp"
#include "warpski/experiments.hpp"
#include "warpski/io.hpp"
#include "warpski/serialization.hpp"
#include "warpski/validation.hpp"

namespace {

using warpski::Json;

struct SolverFlags {
  std::optional<double> cg_tolerance;
  std::optional<double> fit_cg_tolerance;
  std::optional<int> probes;
  std::optional<int> lanczos_steps;
  std::optional<int> max_steps;

  void add(CLI::App* app) {
    app->add_option("--cg-tol", cg_tolerance, "CG tolerance of the inference solve");
    app->add_option("--fit-cg-tol", fit_cg_tolerance, "CG tolerance inside the likelihood");
    app->add_option("--probes", probes, "Rademacher probe vectors");
    app->add_option("--lanczos-steps", lanczos_steps, "Lanczos steps per probe");
    app->add_option("--max-steps", max_steps, "L-BFGS iteration budget");
  }
  void apply(Json& solver) const {
    if (cg_tolerance) solver["cg_tolerance"] = *cg_tolerance;
    if (fit_cg_tolerance) solver["fit_cg_tolerance"] = *fit_cg_tolerance;
    if (probes) solver["probes"] = *probes;
    if (lanczos_steps) solver["lanczos_steps"] = *lanczos_steps;
    if (max_steps) solver["max_steps"] = *max_steps;
  }
};

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<long long> n;
  std::optional<long long> seed;
  bool no_learn = false;
  SolverFlags solver;

  void add(CLI::App* app, const std::string& default_out) {
    out = default_out;
    app->add_option("--config", config, "JSON config; its values override flags")->check(CLI::ExistingFile);
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_option("--n", n, "Number of data points");
    app->add_option("--seed", seed, "Random seed");
    app->add_flag("--no-learn", no_learn, "Skip hyperparameter learning");
    solver.add(app);
  }
  void apply(Json& j) const {
    if (n) j["n"] = *n;
    if (seed) j["seed"] = *seed;
    if (no_learn) j["learn"] = false;
    if (!j.contains("solver")) j["solver"] = Json::object();
    solver.apply(j["solver"]);
  }
  Json with_config(Json j) const {
    apply(j);
    if (!config.empty()) j.merge_patch(warpski::read_json_file(config));
    return j;
  }
};

void print_report(const warpski::RunReport& r, const std::string& out) {
  for (const auto& [k, v] : r.metrics) std::printf("%-36s %s\n", k.c_str(), warpski::format_number(v).c_str());
  for (const auto& [k, v] : r.labels) std::printf("%-36s %s\n", k.c_str(), v.c_str());
  std::printf("outputs written to %s\n", out.c_str());
}

int run_validate(const std::string& filter, const std::string& out, bool list) {
  if (list) {
    for (const auto& c : warpski::property_suite()) std::printf("%-34s %s\n", c.name.c_str(), c.description.c_str());
    return 0;
  }
  const auto results = warpski::run_properties(filter, [](const warpski::CheckResult& r) {
    std::printf("%s %-34s measured %-12s threshold %-10s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                warpski::format_number(r.measured).c_str(), warpski::format_number(r.threshold).c_str(), r.seconds,
                r.detail.c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    failed += r.passed ? 0 : 1;
    total += r.seconds;
  }
  std::printf("%zu checks, %d failed, %.1f s\n", results.size(), failed, total);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& r : results) {
      rows.emplace_back(r.name, std::string(r.passed ? "PASS" : "FAIL") + " measured=" +
                                    warpski::format_number(r.measured) +
                                    " threshold=" + warpski::format_number(r.threshold) +
                                    " seconds=" + warpski::format_number(r.seconds));
    }
    warpski::write_key_values((std::filesystem::path(out) / "validation.csv").string(), rows);
  }
  if (results.empty()) {
    std::fprintf(stderr, "no check matches '%s'\n", filter.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpski: warped structured kernel interpolation for GP regression and source separation"};
  app.require_subcommand(1);

  // numeric2d
  auto* num = app.add_subcommand("numeric2d", "2-D warped SE benchmark: sample, learn, infer, time");
  CommonFlags num_flags;
  num_flags.add(num, "out/numeric2d");
  std::optional<double> noise_std;
  std::vector<long long> sweep_n, sweep_m;
  std::optional<int> timing_repeats;
  num->add_option("--noise-std", noise_std, "Noise standard deviation of the generated data");
  num->add_option("--sweep-n", sweep_n, "Extra n values for the time_vs_n curve");
  num->add_option("--sweep-m", sweep_m, "Extra total grid sizes for the time_vs_m curve");
  num->add_option("--timing-repeats", timing_repeats, "Timed repeats after the warm-up run");

  // separate
  auto* sep = app.add_subcommand("separate", "Quasi-periodic source separation with phase warps");
  CommonFlags sep_flags;
  sep_flags.add(sep, "out/separate");
  bool sep_preset = false;
  std::optional<double> sample_rate, snr_db;
  std::string data_csv;
  std::vector<std::string> event_csvs;
  sep->add_flag("--two-source", sep_preset, "Start from the built-in maternal/fetal two-source mixture");
  sep->add_option("--sample-rate", sample_rate, "Samples per second");
  sep->add_option("--snr-db", snr_db, "Weakest source power over noise power, in dB");
  sep->add_option("--data", data_csv, "Recorded (time,value) CSV instead of synthetic data");
  sep->add_option("--events", event_csvs, "One event CSV (column 'time') per source");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Exact vs approximate NLML over one parameter");
  CommonFlags sw_flags;
  sw_flags.add(sw, "out/sweep");
  bool sw_preset = false;
  std::optional<std::string> parameter;
  std::optional<int> points;
  std::optional<double> min_factor, max_factor;
  bool no_exact = false;
  sw->add_flag("--two-source", sw_preset, "Sweep the fetal amplitude of the built-in two-source mixture");
  sw->add_option("--parameter", parameter, "Parameter name, e.g. fetal.amplitude");
  sw->add_option("--points", points, "Sweep points");
  sw->add_option("--min-factor", min_factor, "Smallest value relative to the truth");
  sw->add_option("--max-factor", max_factor, "Largest value relative to the truth");
  sw->add_flag("--no-exact", no_exact, "Skip the dense exact curve");

  // validate
  auto* val = app.add_subcommand("validate", "Run the property suite against dense oracles");
  std::string filter, val_out;
  bool list = false;
  val->add_option("--filter", filter, "Only checks whose name contains this text");
  val->add_option("--out", val_out, "Directory for validation.csv");
  val->add_flag("--list", list, "List the checks and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*num) {
      Json j = warpski::Numeric2dConfig{}.to_json();
      if (noise_std) j["noise_std"] = *noise_std;
      if (!sweep_n.empty()) j["sweep_n"] = sweep_n;
      if (!sweep_m.empty()) j["sweep_m"] = sweep_m;
      if (timing_repeats) j["timing_repeats"] = *timing_repeats;
      const auto c = warpski::Numeric2dConfig::from_json(num_flags.with_config(j));
      const auto r = warpski::run_numeric2d(c);
      warpski::write_run_outputs(num_flags.out, c.to_json(), r);
      print_report(r, num_flags.out);
      return 0;
    }
    if (*sep) {
      Json j = sep_preset ? warpski::two_source_config().to_json() : Json::object();
      if (sample_rate) j["sample_rate"] = *sample_rate;
      if (snr_db) j["snr_db"] = *snr_db;
      if (!data_csv.empty()) j["data_csv"] = data_csv;
      if (!event_csvs.empty()) j["event_csvs"] = event_csvs;
      const auto c = warpski::Separation1dConfig::from_json(sep_flags.with_config(j));
      const auto r = warpski::run_separation1d(c);
      warpski::write_run_outputs(sep_flags.out, c.to_json(), r);
      print_report(r, sep_flags.out);
      return 0;
    }
    if (*sw) {
      Json j = sw_preset ? warpski::reference_sweep_config().to_json() : Json::object();
      Json data = j.contains("data") ? j["data"] : Json::object();
      sw_flags.apply(data);
      j["data"] = data;
      if (parameter) j["parameter"] = *parameter;
      if (points) j["points"] = *points;
      if (min_factor) j["min_factor"] = *min_factor;
      if (max_factor) j["max_factor"] = *max_factor;
      if (no_exact) j["exact"] = false;
      if (!sw_flags.config.empty()) j.merge_patch(warpski::read_json_file(sw_flags.config));
      const auto c = warpski::SweepConfig::from_json(j);
      const auto r = warpski::run_sweep(c);
      warpski::write_run_outputs(sw_flags.out, c.to_json(), r);
      print_report(r, sw_flags.out);
      return 0;
    }
    if (*val) return run_validate(filter, val_out, list);
  } catch (const warpski::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const warpski::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
