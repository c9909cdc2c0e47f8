#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "warpski/error.hpp"
#include "warpski/kernels.hpp"

using namespace warpski;

TEST_CASE("squared exponential values") {
  const auto k = StationaryKernel::squared_exponential(1.5, 0.4);
  CHECK(k.eval(0.0) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(k.eval(0.4) == doctest::Approx(2.25 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(k.eval(0.4) == doctest::Approx(test::se(1.5, 0.4, 0.4)).epsilon(1e-14));
  CHECK(k.eval(-0.7) == k.eval(0.7));
  CHECK(k.variance() == doctest::Approx(2.25));
}

TEST_CASE("periodic kernel repeats every period") {
  const auto k = StationaryKernel::periodic(1.3, 0.7, 2.5);
  CHECK(k.eval(2.5) == doctest::Approx(k.eval(0.0)).epsilon(1e-13));
  CHECK(k.eval(0.3 + 5.0) == doctest::Approx(k.eval(0.3)).epsilon(1e-12));
  const double s = std::sin(std::numbers::pi * 0.3 / 2.5);
  CHECK(k.eval(0.3) == doctest::Approx(1.69 * std::exp(-2.0 * s * s / 0.49)).epsilon(1e-13));
}

TEST_CASE("quasi-periodic is periodic times SE") {
  const auto qp = StationaryKernel::quasi_periodic(0.8, 3.0, 0.5, 1.7);
  const auto p = StationaryKernel::periodic(0.8, 0.5, 1.7);
  for (double t : {0.0, 0.3, 1.1, 4.2}) {
    CHECK(qp.eval(t) == doctest::Approx(p.eval(t) * test::se(1.0, 3.0, t)).epsilon(1e-13));
  }
}

TEST_CASE("gradient with respect to log amplitude at zero lag is 2 sigma_f^2") {
  const auto k = StationaryKernel::squared_exponential(1.5, 0.4);
  const Vector g = k.grad(0.0);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == doctest::Approx(2.0 * 2.25));
  CHECK(g[1] == doctest::Approx(0.0));
}

TEST_CASE("log lengthscale gradient matches central differences") {
  const auto k = StationaryKernel::squared_exponential(1.5, 0.4);
  const double h = 1e-5;
  Vector lp = k.log_params();
  Vector up = lp, dn = lp;
  up[1] += h;
  dn[1] -= h;
  const double fd = (k.with_log_params(up).eval(0.4) - k.with_log_params(dn).eval(0.4)) / (2.0 * h);
  // closed form: k * tau^2 / l^2
  CHECK(k.grad(0.4)[1] == doctest::Approx(test::se(1.5, 0.4, 0.4)).epsilon(1e-14));
  CHECK(std::abs(k.grad(0.4)[1] - fd) / std::abs(fd) <= 1e-6);
}

TEST_CASE("sum kernel gradient concatenates children") {
  const auto a = StationaryKernel::squared_exponential(1.1, 0.3);
  const auto b = StationaryKernel::periodic(0.6, 0.9, 2.0);
  const auto s = StationaryKernel::sum({a, b});
  REQUIRE(s.num_params() == 5);
  const Vector g = s.grad(0.37);
  CHECK((g.head(2) - a.grad(0.37)).norm() == doctest::Approx(0.0));
  CHECK((g.tail(3) - b.grad(0.37)).norm() == doctest::Approx(0.0));
  CHECK(s.eval(0.37) == doctest::Approx(a.eval(0.37) + b.eval(0.37)));
}

TEST_CASE("product kernel over two dimensions") {
  const auto k = StationaryKernel::product(
      {StationaryKernel::squared_exponential(1.5, 0.4), StationaryKernel::squared_exponential(2.0, 0.7)});
  CHECK(k.dims() == 2);
  const double lag[2] = {0.2, -0.5};
  CHECK(k.eval(lag) == doctest::Approx(test::se(1.5, 0.4, 0.2) * test::se(2.0, 0.7, -0.5)));
  CHECK_THROWS_AS(k.eval(0.2), DimensionError);
  const auto terms = k.separable_terms();
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].factors.size() == 2);
}

TEST_CASE("nonpositive hyperparameters are rejected") {
  CHECK_THROWS_AS(StationaryKernel::squared_exponential(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(StationaryKernel::squared_exponential(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(StationaryKernel::periodic(1.0, 1.0, std::nan("")), DomainError);
}

TEST_CASE("toeplitz column") {
  const auto k = StationaryKernel::squared_exponential(1.0, 1.0);
  Vector axis(3);
  axis << 0.0, 1.0, 2.0;
  const Vector c = toeplitz_column(k, axis);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(c[2] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));

  Vector one(1);
  one << 4.0;
  CHECK(toeplitz_column(k, one)[0] == doctest::Approx(1.0));

  const Vector grid = Vector::LinSpaced(64, -1.0, 2.0);
  const Vector col = toeplitz_column(k, grid);
  double worst = 0.0;
  for (Index i = 0; i < 64; ++i) {
    for (Index j = 0; j < 64; ++j) {
      worst = std::max(worst, std::abs(col[std::abs(i - j)] - test::se(1.0, 1.0, grid[i] - grid[j])));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("non-equispaced axis names the first bad index") {
  Vector axis(5);
  axis << 0.0, 1.0, 2.0, 3.5, 4.0;
  CHECK(first_nonuniform_index(axis) == 3);
  try {
    (void)toeplitz_column(StationaryKernel::squared_exponential(1.0, 1.0), axis);
    FAIL("expected NotEquispacedError");
  } catch (const NotEquispacedError& e) {
    CHECK(e.index() == 3);
  }
}

TEST_CASE("kernel names round trip") {
  for (auto kind : {KernelKind::SquaredExponential, KernelKind::Periodic, KernelKind::QuasiPeriodic,
                    KernelKind::Product, KernelKind::Sum}) {
    CHECK(kernel_kind_from_string(to_string(kind)) == kind);
  }
}
