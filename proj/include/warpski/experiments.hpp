#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "warpski/gp.hpp"
#include "warpski/io.hpp"
#include "warpski/serialization.hpp"

namespace warpski {

/// Numbers, labels and tables produced by one experiment run.
struct RunReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, std::string>> labels;
  std::vector<std::pair<std::string, Table>> curves;
  std::vector<std::pair<std::string, Table>> separated;
  Json fit;

  void set(const std::string& key, double value);
  void label(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  /// Throws ConfigError for unknown keys.
  double get(const std::string& key) const;
  const Table& curve(const std::string& name) const;
};

/// Writes config_echo.json, report.csv, fit.json (when present),
/// curves/<name>.csv and separated/<name>.csv under `dir`.
void write_run_outputs(const std::string& dir, const Json& config_echo, const RunReport& report);

/// Wall time of `f` in seconds: one discarded warm-up run, then the median of
/// `repeats` runs.
double median_seconds(const std::function<void()>& f, int repeats = 3, bool warm_up = true);

/// Settings shared by the learning and inference steps of every experiment.
struct SolverConfig {
  double cg_tolerance = 0.1;       // inference solves
  double fit_cg_tolerance = 1e-2;  // solves inside the likelihood
  int probes = 20;
  int lanczos_steps = 30;
  int max_steps = 100;

  ApproxOptions approx(std::uint64_t seed) const;
  static SolverConfig from_json(const Json& j, const std::string& path);
  Json to_json() const;
};

// ---- 2-D warped SE benchmark --------------------------------------------

struct Numeric2dConfig {
  Index n = 10000;
  std::uint64_t seed = 1;
  double noise_std = 0.5;
  double amplitude = 1.5;
  double lengthscale = 0.4;
  std::vector<double> x_range{-1.2, 0.75};
  std::vector<double> y_range{-2.5, 2.5};
  std::vector<double> warp_coefficients{2.0, 0.0, 1.0};  // warp of the first input
  std::vector<Index> sample_counts{300, 240};  // grid used to draw the latent sample
  std::vector<Index> model_counts{118, 98};    // inference grid (about 1e4 nodes)
  double init_noise_std = 1.0;
  double init_amplitude = 1.0;
  double init_lengthscale = 0.8;
  bool learn = true;
  SolverConfig solver;
  std::vector<Index> sweep_n;  // extra n values for timing curves (fixed grid)
  std::vector<Index> sweep_m;  // extra total grid sizes (fixed n)
  int timing_repeats = 3;

  static Numeric2dConfig from_json(const Json& j);
  Json to_json() const;
};

struct Numeric2dData {
  Points X;
  Vector latent;
  Vector y;
  GpModel truth;
};

Warp numeric2d_warp(const Numeric2dConfig& config);
Numeric2dData make_numeric2d_data(const Numeric2dConfig& config, Index n, std::uint64_t seed);

/// Samples, learns (sigma, sigma_SE, l_SE), infers and reports RMSE against
/// the latent draw plus timings; optional timing sweeps over n and m.
RunReport run_numeric2d(const Numeric2dConfig& config);

// ---- synthetic quasi-periodic two-source separation ---------------------

/// ECG-like waveform as a function of phase (period 2 pi): a sum of five
/// Gaussian bumps standing in for the P, Q, R, S and T waves, R at phase 0.
double ecg_template(double phase);

struct SourceConfig {
  std::string name;
  double period = 0.8;       // seconds between events
  double jitter = 0.03;      // relative std of each period
  double amplitude = 1.0;
  double modulation = 0.1;   // relative slow amplitude modulation
  double modulation_period = 7.0;
  double first_event = 0.1;
  /// Kernel lengthscales in phase units (radians); required, no defaults.
  std::optional<double> lengthscale;
  std::optional<double> periodic_lengthscale;
  double points_per_lengthscale = 4.0;
  /// Explicit inducing-grid size; 0 derives it from points_per_lengthscale.
  Index inducing_points = 0;

  static SourceConfig from_json(const Json& j, const std::string& path);
  Json to_json() const;
};

struct Separation1dConfig {
  Index n = 20000;
  double sample_rate = 1000.0;
  std::uint64_t seed = 1;
  std::vector<SourceConfig> sources;
  /// Noise power relative to the weakest source's power, in dB.
  double snr_db = 10.0;
  bool learn = true;
  SolverConfig solver{5e-3, 1e-2, 20, 30, 100};
  Index oracle_max_n = 3000;
  /// Real-data mode: (time, value) CSV and one event CSV (column "time") per
  /// source. No ground truth is available then.
  std::string data_csv;
  std::vector<std::string> event_csvs;

  static Separation1dConfig from_json(const Json& j);
  Json to_json() const;
};

struct SeparationData {
  Vector t;
  Vector y;
  std::vector<Vector> truth;  // empty for ingested data
  std::vector<std::vector<double>> events;
  double noise_std = 0.0;
};

std::vector<double> jittered_events(double t0, double t1, double first, double period,
                                    double jitter, std::mt19937_64& gen);
SeparationData make_separation_data(const Separation1dConfig& config);
/// Quasi-periodic phase-warped model with one component per source; the
/// lengthscales and period are fixed, amplitudes and noise are free.
GpModel separation_model(const Separation1dConfig& config, const SeparationData& data);

RunReport run_separation1d(const Separation1dConfig& config);

/// Two-source ECG-like mixture: a "maternal" source (period 0.84 s,
/// amplitude 1) and a weaker, faster "fetal" source (period 0.3 s, amplitude
/// 0.3), envelope lengthscale 20 rad and periodic lengthscale 0.15.
Separation1dConfig two_source_config(Index n = 20000, double sample_rate = 1000.0);

// ---- likelihood-curve sweep -----------------------------------------------

struct SweepConfig {
  Separation1dConfig data;  // data generator and model
  std::string parameter;    // e.g. "source_a.amplitude"
  double min_factor = 0.5;  // sweep range relative to the true value
  double max_factor = 2.0;
  int points = 15;
  bool exact = true;        // also evaluate the dense exact curve

  static SweepConfig from_json(const Json& j);
  Json to_json() const;
};

/// Exact and approximate NLML over a log-spaced grid of one parameter.
RunReport run_sweep(const SweepConfig& config);

/// 15-point sweep of the fetal amplitude on a two_source_config(n, rate)
/// mixture, with 64 probes and 100 Lanczos steps.
SweepConfig reference_sweep_config(Index n = 2000, double sample_rate = 250.0);

}  // namespace warpski
