#include <doctest.h>

#include <Eigen/Dense>
#include <numbers>

#include "oracle.hpp"
#include "warpski/error.hpp"
#include "warpski/gp.hpp"

using namespace warpski;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Warp1D poly_warp() { return Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 1.5}); }

GpModel se_model(double amp, double ell, double noise, Warp warp = Warp::identity(1), Index m = 0) {
  GpModel g;
  g.noise_std = noise;
  ComponentSpec c{"f", StationaryKernel::squared_exponential(amp, ell), std::move(warp), {}};
  if (m > 0) c.grid.counts = {m};
  g.components.push_back(std::move(c));
  return g;
}

}  // namespace

TEST_CASE("parameter layout") {
  GpModel g = se_model(1.5, 0.4, 0.5);
  CHECK(g.num_params() == 3);
  CHECK(g.param_names() == std::vector<std::string>{"f.amplitude", "f.lengthscale", "noise_std"});
  CHECK(g.param_index("noise_std") == 2);
  CHECK(g.log_params()[2] == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(g.param_index("f.period"), ConfigError);
  g.set_fixed("f.lengthscale");
  CHECK(g.is_fixed(1));
  CHECK_FALSE(g.is_fixed(0));
}

TEST_CASE("exact nlml on one point") {
  GpModel g = se_model(1.0, 1.0, 1e-200);
  Points X(1, 1);
  X(0, 0) = 0.3;
  const auto r = exact_nlml(g, X, Vector::Zero(1), false);
  CHECK(r.value == doctest::Approx(0.5 * kLog2Pi).epsilon(1e-14));
}

TEST_CASE("exact nlml on two points by hand") {
  GpModel g = se_model(1.5, 0.4, 0.5);
  Points X(2, 1);
  X << 0.0, 0.4;
  Vector y(2);
  y << 1.0, -0.5;
  const double a = 2.25 + 0.25;
  const double b = 2.25 * std::exp(-0.5);
  const double det = a * a - b * b;
  // [a b; b a]^-1 = [a -b; -b a] / det
  const double fit = (a * y[0] * y[0] - 2.0 * b * y[0] * y[1] + a * y[1] * y[1]) / det;
  const auto r = exact_nlml(g, X, y, false);
  CHECK(r.data_fit == doctest::Approx(fit).epsilon(1e-13));
  CHECK(r.logdet == doctest::Approx(std::log(det)).epsilon(1e-13));
  CHECK(r.value == doctest::Approx(0.5 * (fit + std::log(det) + 2.0 * kLog2Pi)).epsilon(1e-13));
}

TEST_CASE("exact nlml gradient matches finite differences") {
  const Points X = test::uniform_points(60, -1.2, 0.75, 31);
  const GpModel g = se_model(1.5, 0.4, 0.5, poly_warp());
  const Vector y = test::gaussian_vector(60, 32);
  const auto r = exact_nlml(g, X, y, true);
  const Vector theta = g.log_params();
  for (Index j = 0; j < theta.size(); ++j) {
    const double h = 1e-5;
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const double fd = (exact_nlml(g.with_log_params(tp), X, y, false).value -
                       exact_nlml(g.with_log_params(tm), X, y, false).value) /
                      (2.0 * h);
    CHECK(std::abs(r.gradient[j] - fd) / std::max(1.0, std::abs(fd)) <= 1e-6);
  }
}

TEST_CASE("noise-only approximate nlml is exact") {
  GpModel g;
  g.noise_std = 0.7;
  const Points X = test::uniform_points(100, 0.0, 1.0, 33);
  const Vector y = test::gaussian_vector(100, 34);
  const auto r = approx_nlml(g, X, y, {}, false);
  const double s2 = 0.49;
  CHECK(r.value == doctest::Approx(0.5 * (y.squaredNorm() / s2 + 100.0 * std::log(s2) + 100.0 * kLog2Pi))
                       .epsilon(1e-12));
}

TEST_CASE("approximate nlml tracks the exact value") {
  const Points X = test::uniform_points(1000, -1.2, 0.75, 35);
  const GpModel g = se_model(1.5, 0.4, 0.5, poly_warp(), 1500);
  const Vector y = sample_prior(g, X, 36).targets;
  const double exact = exact_nlml(g, X, y, false).value;
  ApproxOptions o;
  o.cg.tolerance = 1e-8;
  const double approx = approx_nlml(g, X, y, o, false).value;
  CHECK(std::abs(approx - exact) / std::abs(exact) <= 2e-2);
}

TEST_CASE("stochastic gradient agrees with the exact gradient") {
  const Points X = test::uniform_points(300, -1.2, 0.75, 37);
  const GpModel g = se_model(1.5, 0.4, 0.5, Warp::identity(1), 600);
  const Vector y = sample_prior(g, X, 38).targets;
  const auto ex = exact_nlml(g, X, y, true);
  ApproxOptions o;
  o.cg.tolerance = 1e-10;
  o.probes = 40;
  const auto ap = approx_nlml(g, X, y, o, true);
  CHECK((ap.gradient - ex.gradient).norm() / ex.gradient.norm() <= 5e-2);
}

TEST_CASE("fitting the noise of pure noise data") {
  GpModel g;
  g.noise_std = 1.0;
  const Points X = test::uniform_points(2000, 0.0, 1.0, 39);
  const Vector y = 0.6 * test::gaussian_vector(2000, 40);
  const auto r = fit(g, X, y);
  const double mle = y.squaredNorm() / 2000.0;
  CHECK(std::abs(r.model.noise_std * r.model.noise_std - mle) / mle <= 5e-2);
}

TEST_CASE("fully fixed model is a no-op") {
  GpModel g = se_model(1.5, 0.4, 0.5, Warp::identity(1), 200);
  g.fixed.assign(3, true);
  const Points X = test::uniform_points(200, 0.0, 1.0, 41);
  const Vector y = test::gaussian_vector(200, 42);
  const auto r = fit(g, X, y);
  CHECK(r.theta == g.log_params());
  CHECK(r.iterations == 0);
}

TEST_CASE("hyper-prior penalty is minimal at the mode") {
  LogNormalPrior p{0.4, 0.5};
  double d = 1.0;
  const double at = p.penalty(std::log(0.4), &d);
  CHECK(d == doctest::Approx(0.0));
  CHECK(p.penalty(std::log(0.8)) > at);
  CHECK(p.penalty(std::log(0.2)) > at);
}

TEST_CASE("separation identity and noiseless interpolation") {
  const Points X = test::uniform_points(400, -1.2, 0.75, 43);
  GpModel g = se_model(1.5, 0.4, 0.5, poly_warp(), 800);
  g.components.push_back({"g", StationaryKernel::squared_exponential(0.5, 0.1), Warp::identity(1), {}});
  const Vector y = sample_prior(g, X, 44).targets;
  const auto s = separate(g, X, y, {1e-8, 2000, {}});
  REQUIRE(s.converged);
  const Vector total = s.means[0] + s.means[1] + 0.25 * s.alpha;
  CHECK((total - y).norm() / y.norm() <= 2e-8);
  CHECK((s.residual - (y - s.means[0] - s.means[1])).norm() <= 1e-12);

  const Vector pm = predict_mean(build_operator(g, X), X, s.alpha);
  CHECK((pm - s.means[0] - s.means[1]).norm() <= 1e-10 * pm.norm());

}

TEST_CASE("small noise posterior mean reproduces the data") {
  const Points X = test::uniform_points(200, -1.0, 0.5, 45);
  GpModel g = se_model(1.0, 0.3, 1e-3, Warp::identity(1), 400);
  GpModel smooth = se_model(1.0, 0.3, 1e-3, Warp::identity(1), 400);
  const Vector y = sample_prior(smooth, X, 46).latent;
  const auto s = separate(g, X, y, {1e-10, 5000, {}});
  CHECK((s.means[0] - y).norm() / y.norm() <= 1e-2);
}

TEST_CASE("posterior means match the dense oracle") {
  const Points X = test::uniform_points(500, -1.2, 0.75, 47);
  const GpModel g = se_model(1.5, 0.4, 0.5, poly_warp(), 1024);
  const Vector y = sample_prior(g, X, 48).targets;
  const auto s = separate(g, X, y, {1e-10, 2000, {}});
  const auto ex = exact_separate(g, X, y);
  CHECK((s.means[0] - ex.means[0]).norm() / ex.means[0].norm() <= 5e-2);
  const Points Xs = test::uniform_points(50, -1.1, 0.7, 49);
  const Vector pm = predict_mean(build_operator(g, X), Xs, s.alpha);
  const Vector pe = exact_predict_mean(g, X, y, Xs);
  CHECK((pm - pe).norm() / pe.norm() <= 5e-2);
}

TEST_CASE("prior samples") {
  const Points X = test::uniform_points(20, -1.0, 0.5, 50);
  GpModel tiny = se_model(1e-12, 0.3, 1e-9, Warp::identity(1), 100);
  CHECK(sample_prior(tiny, X, 1).latent.cwiseAbs().maxCoeff() <= 1e-9);

  Points P(2, 1);
  P << -0.2, 0.1;
  const GpModel g = se_model(1.3, 0.4, 0.1, poly_warp(), 200);
  GpModel box_model = g;
  box_model.components[0].grid.box = Box{Vector::Constant(1, -1.0), Vector::Constant(1, 0.5)};
  const int draws = 200;
  double v0 = 0.0, c01 = 0.0, v1 = 0.0;
  for (int s = 0; s < draws; ++s) {
    const Vector f = sample_prior(box_model, P, static_cast<std::uint64_t>(1000 + s)).latent;
    v0 += f[0] * f[0] / draws;
    v1 += f[1] * f[1] / draws;
    c01 += f[0] * f[1] / draws;
  }
  const double k0 = 1.69;
  const double k01 = test::se(1.3, 0.4, poly_warp().forward(-0.2) - poly_warp().forward(0.1));
  CHECK(std::abs(v0 - k0) / k0 <= 0.15);
  const double se_cov = std::sqrt((k0 * k0 + k01 * k01) / draws);
  CHECK(std::abs(c01 - k01) <= 3.0 * se_cov);
}
