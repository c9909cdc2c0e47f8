#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "oracle.hpp"
#include "warpski/error.hpp"
#include "warpski/experiments.hpp"
#include "warpski/metrics.hpp"
#include "warpski/serialization.hpp"

using namespace warpski;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("warpski_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("metrics") {
  Vector a(2), b(2);
  a << 0.0, 2.0;
  b << 0.0, 0.0;
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(2.0)));
  CHECK(rmse(a, a) == 0.0);
  Vector c(2);
  c << 1.0, 3.0;
  CHECK(nrmse(a, c) == doctest::Approx(1.0 / 2.0));
  CHECK_THROWS_AS(nrmse(a, b), DomainError);
  CHECK_THROWS_AS(rmse(a, Vector::Zero(3)), DimensionError);

  const Vector truth = test::gaussian_vector(50, 1);
  const Vector noise = test::gaussian_vector(50, 2);
  const Vector raw = truth + noise;
  const Vector cleaned = truth + 0.1 * noise;
  CHECK(snr_improvement(raw, cleaned, truth) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK_THROWS_AS(snr_improvement(raw, truth, truth), DomainError);
}

TEST_CASE("csv round trip is exact") {
  const fs::path dir = scratch_dir("csv");
  Table t;
  t.add_column("x", std::vector<double>{0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23});
  t.add_column("y", std::vector<double>{std::nextafter(1.0, 2.0), 0.0, -0.0, 123456789.125});
  const std::string path = (dir / "t.csv").string();
  write_csv(path, t);
  const Table back = read_csv(path, {"x", "y"});
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t r = 0; r < 4; ++r) CHECK(back.column(c)[r] == t.column(c)[r]);
  }
  write_csv((dir / "u.csv").string(), back);
  std::ifstream f1(path), f2(dir / "u.csv");
  const std::string s1((std::istreambuf_iterator<char>(f1)), {}), s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("csv errors name the problem") {
  const fs::path dir = scratch_dir("csv_err");
  const std::string missing = (dir / "nope.csv").string();
  try {
    (void)read_csv(missing);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  write_text(dir / "h.csv", "a,b\n1,2\n");
  try {
    (void)read_csv((dir / "h.csv").string(), {"time", "value"});
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("time,value") != std::string::npos);
  }
  write_text(dir / "bad.csv", "a,b\n1,2\n3,x\n");
  try {
    (void)read_csv((dir / "bad.csv").string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_text(dir / "short.csv", "a,b\n1\n");
  CHECK_THROWS_AS(read_csv((dir / "short.csv").string()), IoError);
}

TEST_CASE("model json round trip") {
  GpModel g;
  g.noise_std = 0.3;
  g.components.push_back({"slow", StationaryKernel::squared_exponential(1.2, 1.5),
                          Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 1.5}), {}});
  const std::vector<double> events{0.0, 0.9, 1.7, 2.6};
  g.components.push_back(
      {"beat", StationaryKernel::quasi_periodic(0.7, 20.0, 0.8, 6.283185307179586), phase_from_events(events), {}});
  g.components[1].grid.counts = {300};
  g.set_fixed("beat.period");
  g.set_prior("slow.lengthscale", {1.5, 0.3});
  const Json j = to_json(g);
  const GpModel back = model_from_json(Json::parse(j.dump()));
  CHECK(back.log_params() == g.log_params());
  CHECK(back.param_names() == g.param_names());
  CHECK(back.is_fixed(back.param_index("beat.period")));
  CHECK(back.components[1].grid.counts == std::vector<Index>{300});
  CHECK(back.components[1].warp.axes()[0].forward(1.2) == g.components[1].warp.axes()[0].forward(1.2));
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("config errors carry field paths") {
  Json j = Numeric2dConfig{}.to_json();
  j["n"] = 0;
  try {
    (void)Numeric2dConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("numeric2d.n") != std::string::npos);
  }
  Json s = two_source_config().to_json();
  s["sources"][1].erase("lengthscale");
  try {
    (void)Separation1dConfig::from_json(s);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sources[1].lengthscale") != std::string::npos);
  }
  Json m = Json::parse(R"({"components":[{"name":"a","kernel":{"type":"se","amplitude":1}}]})");
  CHECK_THROWS_AS(model_from_json(m), ConfigError);
}

TEST_CASE("configs survive a json round trip") {
  const auto c = two_source_config(2000, 250.0);
  CHECK(Separation1dConfig::from_json(c.to_json()).to_json() == c.to_json());
  const auto n = Numeric2dConfig{};
  CHECK(Numeric2dConfig::from_json(n.to_json()).to_json() == n.to_json());
  const auto w = reference_sweep_config();
  CHECK(SweepConfig::from_json(w.to_json()).to_json() == w.to_json());
}

TEST_CASE("two-source separation against the dense oracle") {
  auto c = two_source_config(2000, 250.0);
  c.learn = false;
  const RunReport r = run_separation1d(c);
  CHECK(r.get("oracle_max_rel_error") <= 5e-2);
  CHECK(r.get("cg_converged") == 1.0);
}

TEST_CASE("noise-free separation improves both sources by more than 10 dB") {
  auto c = two_source_config(2000, 250.0);
  c.learn = false;
  c.snr_db = 60.0;
  const RunReport r = run_separation1d(c);
  CHECK(r.get("maternal.snr_improvement_db") > 10.0);
  CHECK(r.get("fetal.snr_improvement_db") > 10.0);
}

TEST_CASE("a missing source shrinks its fitted amplitude") {
  auto c = two_source_config(2000, 250.0);
  c.sources[1].amplitude = 0.0;
  const RunReport r = run_separation1d(c);
  CHECK(r.get("fetal.amplitude") < 0.1 * r.get("maternal.amplitude"));
}

TEST_CASE("runs are deterministic and write their artifacts") {
  auto c = two_source_config(800, 250.0);
  c.solver.max_steps = 3;
  const RunReport a = run_separation1d(c);
  const RunReport b = run_separation1d(c);
  for (const auto& [k, v] : a.metrics) {
    if (k.find("seconds") == std::string::npos) CHECK_MESSAGE(b.get(k) == v, k);
  }
  const fs::path dir = scratch_dir("run");
  write_run_outputs(dir.string(), c.to_json(), a);
  CHECK(fs::exists(dir / "config_echo.json"));
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "fit.json"));
  const Table fetal = read_csv((dir / "separated" / "fetal.csv").string(), {"time", "mean", "truth"});
  CHECK(fetal.num_rows() == 800);
  CHECK(Separation1dConfig::from_json(read_json_file((dir / "config_echo.json").string())).to_json() == c.to_json());
}
