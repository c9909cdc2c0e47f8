#include "warpski/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "warpski/error.hpp"
#include "warpski/metrics.hpp"

namespace warpski {

namespace fs = std::filesystem;

void RunReport::set(const std::string& key, double value) {
  for (auto& [k, v] : metrics) {
    if (k == key) {
      v = value;
      return;
    }
  }
  metrics.emplace_back(key, value);
}

void RunReport::label(const std::string& key, const std::string& value) {
  for (auto& [k, v] : labels) {
    if (k == key) {
      v = value;
      return;
    }
  }
  labels.emplace_back(key, value);
}

bool RunReport::has(const std::string& key) const {
  return std::any_of(metrics.begin(), metrics.end(), [&](const auto& m) { return m.first == key; });
}

double RunReport::get(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw ConfigError("report has no metric '" + key + "'");
}

const Table& RunReport::curve(const std::string& name) const {
  for (const auto& [k, t] : curves) {
    if (k == name) return t;
  }
  throw ConfigError("report has no curve '" + name + "'");
}

void write_run_outputs(const std::string& dir, const Json& config_echo, const RunReport& report) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  write_json_file((fs::path(dir) / "config_echo.json").string(), config_echo);

  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& [k, v] : report.metrics) rows.emplace_back(k, format_number(v));
  for (const auto& [k, v] : report.labels) rows.emplace_back(k, v);
  write_key_values((fs::path(dir) / "report.csv").string(), rows);
  if (!report.fit.is_null()) write_json_file((fs::path(dir) / "fit.json").string(), report.fit);

  auto write_group = [&](const char* sub, const auto& tables) {
    if (tables.empty()) return;
    const fs::path d = fs::path(dir) / sub;
    fs::create_directories(d, ec);
    if (ec) throw IoError("cannot create '" + d.string() + "': " + ec.message());
    for (const auto& [name, t] : tables) write_csv((d / (name + ".csv")).string(), t);
  };
  write_group("curves", report.curves);
  write_group("separated", report.separated);
}

double median_seconds(const std::function<void()>& f, int repeats, bool warm_up) {
  if (warm_up) f();
  std::vector<double> t;
  for (int i = 0; i < std::max(repeats, 1); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
  return t[t.size() / 2];
}

// ---- solver settings --------------------------------------------------------

ApproxOptions SolverConfig::approx(std::uint64_t seed) const {
  ApproxOptions o;
  o.probes = probes;
  o.seed = seed;
  o.lanczos_steps = lanczos_steps;
  o.cg.tolerance = fit_cg_tolerance;
  return o;
}

SolverConfig SolverConfig::from_json(const Json& j, const std::string& path) {
  SolverConfig s;
  if (j.is_null()) return s;
  s.cg_tolerance = cfg::number_or(j, "cg_tolerance", s.cg_tolerance, path);
  s.fit_cg_tolerance = cfg::number_or(j, "fit_cg_tolerance", s.fit_cg_tolerance, path);
  s.probes = static_cast<int>(cfg::integer_or(j, "probes", s.probes, path));
  s.lanczos_steps = static_cast<int>(cfg::integer_or(j, "lanczos_steps", s.lanczos_steps, path));
  s.max_steps = static_cast<int>(cfg::integer_or(j, "max_steps", s.max_steps, path));
  if (!(s.cg_tolerance > 0.0)) throw ConfigError(path + ".cg_tolerance: must be > 0");
  if (!(s.fit_cg_tolerance > 0.0)) throw ConfigError(path + ".fit_cg_tolerance: must be > 0");
  if (s.probes < 1) throw ConfigError(path + ".probes: must be >= 1");
  if (s.lanczos_steps < 1) throw ConfigError(path + ".lanczos_steps: must be >= 1");
  if (s.max_steps < 0) throw ConfigError(path + ".max_steps: must be >= 0");
  return s;
}

Json SolverConfig::to_json() const {
  return {{"cg_tolerance", cg_tolerance},
          {"fit_cg_tolerance", fit_cg_tolerance},
          {"probes", probes},
          {"lanczos_steps", lanczos_steps},
          {"max_steps", max_steps}};
}

namespace {

std::vector<Index> counts_from_json(const Json& j, const std::string& key, std::vector<Index> fallback,
                                    const std::string& path) {
  if (!j.contains(key)) return fallback;
  std::vector<Index> out;
  for (double c : cfg::numbers(j, key, path)) {
    if (c < 1 || c != std::floor(c)) throw ConfigError(path + "." + key + ": expected positive integers");
    out.push_back(static_cast<Index>(c));
  }
  return out;
}

std::vector<double> pair_from_json(const Json& j, const std::string& key, std::vector<double> fallback,
                                   const std::string& path) {
  if (!j.contains(key)) return fallback;
  auto v = cfg::numbers(j, key, path);
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(path + "." + key + ": expected [lo, hi] with lo < hi");
  return v;
}

Index positive_n(const Json& j, Index fallback, const std::string& path) {
  const long long n = cfg::integer_or(j, "n", fallback, path);
  if (n < 1) throw ConfigError(path + ".n: must be >= 1, got " + std::to_string(n));
  return static_cast<Index>(n);
}

}  // namespace

// ---- 2-D warped SE benchmark --------------------------------------------

Numeric2dConfig Numeric2dConfig::from_json(const Json& j) {
  const std::string p = "numeric2d";
  Numeric2dConfig c;
  if (!j.is_object()) throw ConfigError(p + ": expected an object");
  c.n = positive_n(j, c.n, p);
  c.seed = static_cast<std::uint64_t>(cfg::integer_or(j, "seed", static_cast<long long>(c.seed), p));
  c.noise_std = cfg::number_or(j, "noise_std", c.noise_std, p);
  c.amplitude = cfg::number_or(j, "amplitude", c.amplitude, p);
  c.lengthscale = cfg::number_or(j, "lengthscale", c.lengthscale, p);
  c.x_range = pair_from_json(j, "x_range", c.x_range, p);
  c.y_range = pair_from_json(j, "y_range", c.y_range, p);
  if (j.contains("warp_coefficients")) c.warp_coefficients = cfg::numbers(j, "warp_coefficients", p);
  c.sample_counts = counts_from_json(j, "sample_counts", c.sample_counts, p);
  c.model_counts = counts_from_json(j, "model_counts", c.model_counts, p);
  c.init_noise_std = cfg::number_or(j, "init_noise_std", c.init_noise_std, p);
  c.init_amplitude = cfg::number_or(j, "init_amplitude", c.init_amplitude, p);
  c.init_lengthscale = cfg::number_or(j, "init_lengthscale", c.init_lengthscale, p);
  c.learn = cfg::boolean_or(j, "learn", c.learn, p);
  if (j.contains("solver")) c.solver = SolverConfig::from_json(j.at("solver"), p + ".solver");
  c.sweep_n = counts_from_json(j, "sweep_n", c.sweep_n, p);
  c.sweep_m = counts_from_json(j, "sweep_m", c.sweep_m, p);
  c.timing_repeats = static_cast<int>(cfg::integer_or(j, "timing_repeats", c.timing_repeats, p));
  for (double v : {c.noise_std, c.amplitude, c.lengthscale, c.init_noise_std, c.init_amplitude,
                   c.init_lengthscale}) {
    if (!(v > 0.0)) throw ConfigError(p + ": noise, amplitude and lengthscale values must be > 0");
  }
  if (c.sample_counts.size() != 2 || c.model_counts.size() != 2) {
    throw ConfigError(p + ".sample_counts/model_counts: expected two axis counts");
  }
  return c;
}

Json Numeric2dConfig::to_json() const {
  return {{"experiment", "numeric2d"},
          {"n", n},
          {"seed", seed},
          {"noise_std", noise_std},
          {"amplitude", amplitude},
          {"lengthscale", lengthscale},
          {"x_range", x_range},
          {"y_range", y_range},
          {"warp_coefficients", warp_coefficients},
          {"sample_counts", sample_counts},
          {"model_counts", model_counts},
          {"init_noise_std", init_noise_std},
          {"init_amplitude", init_amplitude},
          {"init_lengthscale", init_lengthscale},
          {"learn", learn},
          {"solver", solver.to_json()},
          {"sweep_n", sweep_n},
          {"sweep_m", sweep_m},
          {"timing_repeats", timing_repeats}};
}

Warp numeric2d_warp(const Numeric2dConfig& c) {
  return Warp::elementwise({Warp1D::polynomial(c.warp_coefficients, {c.x_range[0], c.x_range[1]}),
                            Warp1D::identity()});
}

namespace {

GpModel numeric2d_model(const Numeric2dConfig& c, double noise, double amp, double ell,
                        std::vector<Index> counts) {
  GpModel m;
  m.noise_std = noise;
  ComponentSpec s{"se", StationaryKernel::squared_exponential(amp, ell, 2), numeric2d_warp(c), {}};
  s.grid.counts = std::move(counts);
  m.components.push_back(std::move(s));
  return m;
}

// Per-axis counts with product close to `total`, split in proportion to the
// warped extents.
std::vector<Index> split_counts(const Numeric2dConfig& c, Index total) {
  const Warp w = numeric2d_warp(c);
  const double e0 = w.axes()[0].forward(c.x_range[1]) - w.axes()[0].forward(c.x_range[0]);
  const double e1 = c.y_range[1] - c.y_range[0];
  const auto c0 = std::max<Index>(kMinAxisCount, std::llround(std::sqrt(static_cast<double>(total) * e0 / e1)));
  const auto c1 = std::max<Index>(kMinAxisCount, std::llround(static_cast<double>(total) / static_cast<double>(c0)));
  return {c0, c1};
}

}  // namespace

Numeric2dData make_numeric2d_data(const Numeric2dConfig& c, Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("numeric2d.n: must be >= 1");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(c.x_range[0], c.x_range[1]), uy(c.y_range[0], c.y_range[1]);
  Numeric2dData d;
  d.X.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    d.X(i, 0) = ux(gen);
    d.X(i, 1) = uy(gen);
  }
  d.truth = numeric2d_model(c, c.noise_std, c.amplitude, c.lengthscale, c.sample_counts);
  // The sample grid covers the whole rectangle so draws for different n
  // come from the same latent field.
  Box box{Vector(2), Vector(2)};
  box.lo << c.x_range[0], c.y_range[0];
  box.hi << c.x_range[1], c.y_range[1];
  d.truth.components[0].grid.box = box;
  const PriorSample s = sample_prior(d.truth, d.X, gen());
  d.latent = s.latent;
  d.y = s.targets;
  return d;
}

RunReport run_numeric2d(const Numeric2dConfig& c) {
  RunReport r;
  const Numeric2dData d = make_numeric2d_data(c, c.n, c.seed);
  GpModel model = numeric2d_model(c, c.init_noise_std, c.init_amplitude, c.init_lengthscale, c.model_counts);
  r.set("n", static_cast<double>(c.n));
  r.set("m", static_cast<double>(c.model_counts[0] * c.model_counts[1]));

  if (c.learn) {
    FitOptions fo;
    fo.max_steps = c.solver.max_steps;
    fo.approx = c.solver.approx(c.seed);
    const FitResult f = fit(model, d.X, d.y, fo);
    model = f.model;
    r.fit = to_json(f);
    r.set("learning_seconds", f.seconds);
    r.set("fit_iterations", f.iterations);
    r.set("fit_line_search_failed", f.line_search_failed ? 1.0 : 0.0);
  }
  const Vector v = model.components[0].kernel.params().values();
  r.set("noise_std", model.noise_std);
  r.set("amplitude", v[0]);
  r.set("lengthscale", v[1]);
  r.set("noise_std_rel_error", std::abs(model.noise_std - c.noise_std) / c.noise_std);
  r.set("amplitude_rel_error", std::abs(v[0] - c.amplitude) / c.amplitude);
  r.set("lengthscale_rel_error", std::abs(v[1] - c.lengthscale) / c.lengthscale);

  const CgOptions cg{c.solver.cg_tolerance, 1000, {}};
  SeparationResult sep;
  const double infer = median_seconds([&] { sep = separate(model, d.X, d.y, cg); }, c.timing_repeats);
  r.set("inference_seconds", infer);
  r.set("inference_cg_iterations", sep.cg_iterations);
  r.set("rmse", rmse(sep.means[0], d.latent));
  r.set("nrmse", nrmse(sep.means[0], d.latent));
  {
    const MixtureOperator op = build_operator(model, d.X);
    r.set("nlml_eval_seconds", median_seconds([&] { (void)approx_nlml(op, d.y, c.solver.approx(c.seed)); },
                                              c.timing_repeats));
  }
  Table fitted;
  fitted.add_column("x0", Vector(d.X.col(0)));
  fitted.add_column("x1", Vector(d.X.col(1)));
  fitted.add_column("y", d.y);
  fitted.add_column("latent", d.latent);
  fitted.add_column("mean", sep.means[0]);
  r.separated.emplace_back("posterior_mean", std::move(fitted));

  // Timing curves use the generating hyperparameters so that every point
  // solves the same problem family.
  auto timing_row = [&](Index n, std::vector<Index> counts, std::vector<std::vector<double>>& cols) {
    const Numeric2dData dd = make_numeric2d_data(c, n, c.seed);
    const GpModel m = numeric2d_model(c, c.noise_std, c.amplitude, c.lengthscale, counts);
    const MixtureOperator op = build_operator(m, dd.X);
    const Vector probe = dd.y;
    const double mvm = median_seconds([&] { (void)op.matvec(probe); }, c.timing_repeats);
    SeparationResult s;
    const double inf = median_seconds([&] { s = separate(op, dd.y, cg); }, c.timing_repeats);
    const double nl = median_seconds([&] { (void)approx_nlml(op, dd.y, c.solver.approx(c.seed)); },
                                     std::min(c.timing_repeats, 1), false);
    const std::vector<double> row{static_cast<double>(n), static_cast<double>(counts[0] * counts[1]),
                                  mvm, inf, nl, static_cast<double>(s.cg_iterations),
                                  rmse(s.means[0], dd.latent)};
    for (std::size_t i = 0; i < row.size(); ++i) cols[i].push_back(row[i]);
  };
  auto make_table = [](std::vector<std::vector<double>> cols) {
    Table t;
    const char* names[] = {"n", "m", "mvm_seconds", "inference_seconds", "nlml_eval_seconds",
                           "cg_iterations", "rmse"};
    for (std::size_t i = 0; i < cols.size(); ++i) t.add_column(names[i], std::move(cols[i]));
    return t;
  };
  if (!c.sweep_n.empty()) {
    std::vector<std::vector<double>> cols(7);
    for (Index n : c.sweep_n) timing_row(n, c.model_counts, cols);
    r.curves.emplace_back("time_vs_n", make_table(std::move(cols)));
  }
  if (!c.sweep_m.empty()) {
    std::vector<std::vector<double>> cols(7);
    for (Index m : c.sweep_m) timing_row(c.n, split_counts(c, m), cols);
    r.curves.emplace_back("time_vs_m", make_table(std::move(cols)));
  }
  return r;
}

// ---- synthetic separation -------------------------------------------------

double ecg_template(double phase) {
  constexpr double pi = std::numbers::pi;
  static const double centers[] = {-pi / 3.0, -pi / 12.0, 0.0, pi / 12.0, pi / 2.0};
  static const double heights[] = {0.12, -0.15, 1.0, -0.25, 0.3};
  static const double widths[] = {0.25, 0.1, 0.1, 0.1, 0.4};
  double v = 0.0;
  for (int i = 0; i < 5; ++i) {
    double d = std::remainder(phase - centers[i], 2.0 * pi);
    v += heights[i] * std::exp(-0.5 * d * d / (widths[i] * widths[i]));
  }
  return v;
}

SourceConfig SourceConfig::from_json(const Json& j, const std::string& path) {
  SourceConfig s;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  s.name = cfg::string_or(j, "name", "", path);
  if (s.name.empty()) throw ConfigError(path + ".name: required");
  s.period = cfg::number_or(j, "period", s.period, path);
  s.jitter = cfg::number_or(j, "jitter", s.jitter, path);
  s.amplitude = cfg::number_or(j, "amplitude", s.amplitude, path);
  s.modulation = cfg::number_or(j, "modulation", s.modulation, path);
  s.modulation_period = cfg::number_or(j, "modulation_period", s.modulation_period, path);
  s.first_event = cfg::number_or(j, "first_event", s.first_event, path);
  if (j.contains("lengthscale")) s.lengthscale = cfg::number(j, "lengthscale", path);
  if (j.contains("periodic_lengthscale")) {
    s.periodic_lengthscale = cfg::number(j, "periodic_lengthscale", path);
  }
  s.points_per_lengthscale = cfg::number_or(j, "points_per_lengthscale", s.points_per_lengthscale, path);
  s.inducing_points = static_cast<Index>(cfg::integer_or(j, "inducing_points", 0, path));
  if (!(s.points_per_lengthscale > 0.0)) throw ConfigError(path + ".points_per_lengthscale: must be > 0");
  if (s.inducing_points != 0 && s.inducing_points < kMinAxisCount) {
    throw ConfigError(path + ".inducing_points: need at least " + std::to_string(kMinAxisCount) + " (or 0)");
  }
  if (!(s.period > 0.0)) throw ConfigError(path + ".period: must be > 0");
  if (s.jitter < 0.0 || s.jitter >= 0.5) throw ConfigError(path + ".jitter: must be in [0, 0.5)");
  if (s.amplitude < 0.0) throw ConfigError(path + ".amplitude: must be >= 0");
  if (!s.lengthscale || !(*s.lengthscale > 0.0)) {
    throw ConfigError(path + ".lengthscale: required (envelope lengthscale in radians of phase)");
  }
  if (!s.periodic_lengthscale || !(*s.periodic_lengthscale > 0.0)) {
    throw ConfigError(path + ".periodic_lengthscale: required (periodic lengthscale)");
  }
  return s;
}

Json SourceConfig::to_json() const {
  Json j{{"name", name},
         {"period", period},
         {"jitter", jitter},
         {"amplitude", amplitude},
         {"modulation", modulation},
         {"modulation_period", modulation_period},
         {"first_event", first_event},
         {"points_per_lengthscale", points_per_lengthscale},
         {"inducing_points", inducing_points}};
  if (lengthscale) j["lengthscale"] = *lengthscale;
  if (periodic_lengthscale) j["periodic_lengthscale"] = *periodic_lengthscale;
  return j;
}

Separation1dConfig Separation1dConfig::from_json(const Json& j) {
  const std::string p = "separation1d";
  Separation1dConfig c;
  if (!j.is_object()) throw ConfigError(p + ": expected an object");
  c.n = positive_n(j, c.n, p);
  c.sample_rate = cfg::number_or(j, "sample_rate", c.sample_rate, p);
  c.seed = static_cast<std::uint64_t>(cfg::integer_or(j, "seed", static_cast<long long>(c.seed), p));
  c.snr_db = cfg::number_or(j, "snr_db", c.snr_db, p);
  c.learn = cfg::boolean_or(j, "learn", c.learn, p);
  if (j.contains("solver")) c.solver = SolverConfig::from_json(j.at("solver"), p + ".solver");
  c.oracle_max_n = static_cast<Index>(cfg::integer_or(j, "oracle_max_n", c.oracle_max_n, p));
  c.data_csv = cfg::string_or(j, "data_csv", "", p);
  if (j.contains("event_csvs")) {
    for (const auto& e : j.at("event_csvs")) {
      if (!e.is_string()) throw ConfigError(p + ".event_csvs: expected file names");
      c.event_csvs.push_back(e.get<std::string>());
    }
  }
  if (!j.contains("sources") || !j.at("sources").is_array() || j.at("sources").empty()) {
    throw ConfigError(p + ".sources: required, a non-empty array of sources");
  }
  for (std::size_t i = 0; i < j.at("sources").size(); ++i) {
    c.sources.push_back(SourceConfig::from_json(j.at("sources")[i], p + ".sources[" + std::to_string(i) + "]"));
  }
  if (!(c.sample_rate > 0.0)) throw ConfigError(p + ".sample_rate: must be > 0");
  if (!c.data_csv.empty() && c.event_csvs.size() != c.sources.size()) {
    throw ConfigError(p + ".event_csvs: need one event file per source");
  }
  return c;
}

Json Separation1dConfig::to_json() const {
  Json src = Json::array();
  for (const auto& s : sources) src.push_back(s.to_json());
  Json j{{"experiment", "separation1d"},
         {"n", n},
         {"sample_rate", sample_rate},
         {"seed", seed},
         {"sources", src},
         {"snr_db", snr_db},
         {"learn", learn},
         {"solver", solver.to_json()},
         {"oracle_max_n", oracle_max_n}};
  if (!data_csv.empty()) {
    j["data_csv"] = data_csv;
    j["event_csvs"] = event_csvs;
  }
  return j;
}

std::vector<double> jittered_events(double t0, double t1, double first, double period, double jitter,
                                    std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  auto step = [&] { return period * std::clamp(1.0 + jitter * normal(gen), 0.5, 1.5); };
  double t = first;
  while (t >= t0) t -= period;  // at least one event before the window
  std::vector<double> out{t};
  while (out.back() <= t1) out.push_back(out.back() + step());
  return out;
}

SeparationData make_separation_data(const Separation1dConfig& c) {
  SeparationData d;
  if (!c.data_csv.empty()) {
    const Table t = read_csv(c.data_csv, {"time", "value"});
    d.t = t.column_vector("time");
    d.y = t.column_vector("value");
    for (const auto& path : c.event_csvs) d.events.push_back(read_csv(path, {"time"}).column("time"));
    return d;
  }
  std::mt19937_64 gen(c.seed);
  d.t = Vector::LinSpaced(c.n, 0.0, static_cast<double>(c.n - 1) / c.sample_rate);
  const double t1 = d.t[d.t.size() - 1];
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);
  double weakest = std::numeric_limits<double>::infinity();
  for (const auto& s : c.sources) {
    d.events.push_back(jittered_events(0.0, t1, s.first_event, s.period, s.jitter, gen));
    const Warp1D phase = phase_from_events(d.events.back());
    const double mphase = uphase(gen);
    Vector f(c.n);
    for (Index i = 0; i < c.n; ++i) {
      const double env =
          1.0 + s.modulation * std::sin(2.0 * std::numbers::pi * d.t[i] / s.modulation_period + mphase);
      f[i] = s.amplitude * env * ecg_template(phase.forward(d.t[i]));
    }
    const double power = f.squaredNorm() / static_cast<double>(c.n);
    if (power > 0.0) weakest = std::min(weakest, power);
    d.truth.push_back(std::move(f));
  }
  if (!std::isfinite(weakest)) throw ConfigError("separation1d.sources: all amplitudes are zero");
  d.noise_std = std::sqrt(weakest * std::pow(10.0, -c.snr_db / 10.0));
  std::normal_distribution<double> normal;
  d.y = Vector::Zero(c.n);
  for (const auto& f : d.truth) d.y += f;
  for (Index i = 0; i < c.n; ++i) d.y[i] += d.noise_std * normal(gen);
  return d;
}

GpModel separation_model(const Separation1dConfig& c, const SeparationData& d) {
  GpModel m;
  const double sy = std::sqrt((d.y.array() - d.y.mean()).square().mean());
  m.noise_std = 0.1 * sy;
  const double amp = sy / std::sqrt(static_cast<double>(c.sources.size()));
  for (std::size_t i = 0; i < c.sources.size(); ++i) {
    const auto& s = c.sources[i];
    ComponentSpec spec{s.name,
                       StationaryKernel::quasi_periodic(amp, *s.lengthscale, *s.periodic_lengthscale,
                                                        2.0 * std::numbers::pi),
                       Warp(phase_from_events(d.events.at(i))),
                       {}};
    spec.grid.points_per_lengthscale = s.points_per_lengthscale;
    if (s.inducing_points > 0) spec.grid.counts = {s.inducing_points};
    m.components.push_back(std::move(spec));
  }
  for (const auto& s : c.sources) {
    m.set_fixed(s.name + ".lengthscale");
    m.set_fixed(s.name + ".periodic_lengthscale");
    m.set_fixed(s.name + ".period");
  }
  return m;
}

RunReport run_separation1d(const Separation1dConfig& c) {
  RunReport r;
  const SeparationData d = make_separation_data(c);
  const Index n = d.y.size();
  Points X(n, 1);
  X.col(0) = d.t;
  GpModel model = separation_model(c, d);
  r.set("n", static_cast<double>(n));
  if (!d.truth.empty()) r.set("true_noise_std", d.noise_std);

  const auto t0 = std::chrono::steady_clock::now();
  MixtureOperator op = build_operator(model, X);
  r.set("build_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  for (const auto& comp : op.components()) {
    r.set(comp.name() + ".inducing_points", static_cast<double>(comp.grid().total_size()));
  }
  if (c.learn) {
    FitOptions fo;
    fo.max_steps = c.solver.max_steps;
    fo.approx = c.solver.approx(c.seed);
    const FitResult f = fit(model, X, d.y, fo);
    model = f.model;
    op = op.with_log_params(model.log_params());
    r.fit = to_json(f);
    r.set("learning_seconds", f.seconds);
    r.set("fit_iterations", f.iterations);
    r.set("fit_line_search_failed", f.line_search_failed ? 1.0 : 0.0);
  }
  for (const auto& comp : model.components) {
    r.set(comp.name + ".amplitude", comp.kernel.params().value(0));
  }
  r.set("noise_std", model.noise_std);

  const CgOptions cg{c.solver.cg_tolerance, 5000, {}};
  const SeparationResult sep = separate(op, d.y, cg);
  r.set("inference_seconds", sep.total_seconds);
  r.set("cg_iterations", sep.cg_iterations);
  r.set("cg_converged", sep.converged ? 1.0 : 0.0);

  Table mix;
  mix.add_column("time", d.t);
  mix.add_column("y", d.y);
  r.separated.emplace_back("mixture", std::move(mix));
  for (std::size_t i = 0; i < sep.means.size(); ++i) {
    Table t;
    t.add_column("time", d.t);
    t.add_column("mean", sep.means[i]);
    if (!d.truth.empty()) {
      t.add_column("truth", d.truth[i]);
      const std::string& name = sep.names[i];
      r.set(name + ".snr_improvement_db", snr_improvement(d.y, sep.means[i], d.truth[i]));
      r.set(name + ".rmse", rmse(sep.means[i], d.truth[i]));
    }
    r.separated.emplace_back(sep.names[i], std::move(t));
  }
  if (!d.truth.empty()) r.label("snr_improvement_formula", kSnrImprovementFormula);

  if (n <= c.oracle_max_n) {
    const ExactPosterior ex = exact_separate(model, X, d.y);
    double worst = 0.0;
    for (std::size_t i = 0; i < sep.means.size(); ++i) {
      const double e = relative_error(sep.means[i], ex.means[i]);
      r.set(sep.names[i] + ".oracle_rel_error", e);
      worst = std::max(worst, e);
    }
    r.set("oracle_max_rel_error", worst);
  }
  return r;
}

Separation1dConfig two_source_config(Index n, double sample_rate) {
  Separation1dConfig c;
  c.n = n;
  c.sample_rate = sample_rate;
  SourceConfig maternal;
  maternal.name = "maternal";
  maternal.period = 0.84;
  maternal.amplitude = 1.0;
  maternal.first_event = 0.2;
  maternal.lengthscale = 20.0;
  maternal.periodic_lengthscale = 0.15;
  SourceConfig fetal = maternal;
  fetal.name = "fetal";
  fetal.period = 0.3;
  fetal.amplitude = 0.3;
  fetal.first_event = 0.05;
  fetal.modulation_period = 11.0;
  c.sources = {maternal, fetal};
  return c;
}

// ---- likelihood sweep -------------------------------------------------------

SweepConfig SweepConfig::from_json(const Json& j) {
  const std::string p = "sweep";
  SweepConfig c;
  if (!j.is_object()) throw ConfigError(p + ": expected an object");
  if (!j.contains("data")) throw ConfigError(p + ".data: required (a separation1d config)");
  c.data = Separation1dConfig::from_json(j.at("data"));
  c.parameter = cfg::string_or(j, "parameter", "", p);
  if (c.parameter.empty()) throw ConfigError(p + ".parameter: required, e.g. \"<source>.amplitude\"");
  c.min_factor = cfg::number_or(j, "min_factor", c.min_factor, p);
  c.max_factor = cfg::number_or(j, "max_factor", c.max_factor, p);
  c.points = static_cast<int>(cfg::integer_or(j, "points", c.points, p));
  c.exact = cfg::boolean_or(j, "exact", c.exact, p);
  if (!(c.min_factor > 0.0) || !(c.max_factor > c.min_factor)) {
    throw ConfigError(p + ": need 0 < min_factor < max_factor");
  }
  if (c.points < 2) throw ConfigError(p + ".points: must be >= 2");
  return c;
}

Json SweepConfig::to_json() const {
  return {{"experiment", "sweep"},       {"data", data.to_json()},
          {"parameter", parameter},      {"min_factor", min_factor},
          {"max_factor", max_factor},    {"points", points},
          {"exact", exact}};
}

RunReport run_sweep(const SweepConfig& c) {
  RunReport r;
  const SeparationData d = make_separation_data(c.data);
  const Index n = d.y.size();
  Points X(n, 1);
  X.col(0) = d.t;
  GpModel model = separation_model(c.data, d);
  // Centre the sweep on the generating amplitudes and noise.
  if (!d.truth.empty()) {
    Vector theta = model.log_params();
    for (std::size_t i = 0; i < d.truth.size(); ++i) {
      const double rms = std::sqrt(d.truth[i].squaredNorm() / static_cast<double>(n));
      theta[model.param_index(c.data.sources[i].name + ".amplitude")] = std::log(std::max(rms, 1e-12));
    }
    theta[theta.size() - 1] = std::log(d.noise_std);
    model = model.with_log_params(theta);
  }
  const int which = model.param_index(c.parameter);
  const Vector theta0 = model.log_params();
  const MixtureOperator base = build_operator(model, X);

  std::vector<double> values, approx, exact;
  const ApproxOptions ao = c.data.solver.approx(c.data.seed);
  for (int k = 0; k < c.points; ++k) {
    const double f = c.min_factor * std::pow(c.max_factor / c.min_factor, k / double(c.points - 1));
    Vector theta = theta0;
    theta[which] += std::log(f);
    values.push_back(std::exp(theta[which]));
    approx.push_back(approx_nlml(base.with_log_params(theta), d.y, ao, false).value);
    if (c.exact) exact.push_back(exact_nlml(model.with_log_params(theta), X, d.y, false).value);
  }
  Table t;
  t.add_column("value", values);
  t.add_column("approx_nlml", approx);
  if (c.exact) t.add_column("exact_nlml", exact);

  auto argmin = [](const std::vector<double>& v) {
    return static_cast<double>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  r.set("n", static_cast<double>(n));
  r.set("points", c.points);
  r.set("approx_argmin_index", argmin(approx));
  r.set("approx_argmin_value", values[static_cast<std::size_t>(argmin(approx))]);
  if (c.exact) {
    r.set("exact_argmin_index", argmin(exact));
    r.set("exact_argmin_value", values[static_cast<std::size_t>(argmin(exact))]);
    r.set("argmin_index_distance", std::abs(argmin(exact) - argmin(approx)));
    const auto [lo, hi] = std::minmax_element(exact.begin(), exact.end());
    const double range = *hi - *lo;
    double offset = 0.0, raw_gap = 0.0, gap = 0.0;
    for (std::size_t k = 0; k < exact.size(); ++k) offset += (approx[k] - exact[k]) / exact.size();
    for (std::size_t k = 0; k < exact.size(); ++k) {
      raw_gap = std::max(raw_gap, std::abs(approx[k] - exact[k]));
      gap = std::max(gap, std::abs(approx[k] - offset - exact[k]));
    }
    r.set("exact_range", range);
    r.set("offset", offset);
    r.set("max_gap_over_range", gap / range);
    r.set("max_raw_gap_over_range", raw_gap / range);
  }
  r.curves.emplace_back("likelihood_curve", std::move(t));
  return r;
}

SweepConfig reference_sweep_config(Index n, double sample_rate) {
  SweepConfig c;
  c.data = two_source_config(n, sample_rate);
  c.data.learn = false;
  c.parameter = "fetal.amplitude";
  // The noise is small next to the maternal source, so K is badly
  // conditioned: quadrature needs more Lanczos steps than the learning
  // default, and more probes keep the curve smooth.
  c.data.solver.fit_cg_tolerance = 1e-6;
  c.data.solver.probes = 64;
  c.data.solver.lanczos_steps = 100;
  return c;
}

}  // namespace warpski
