#include <doctest.h>

#include <numbers>
#include <vector>

#include "warpski/error.hpp"
#include "warpski/warping.hpp"

using namespace warpski;
using std::numbers::pi;

TEST_CASE("polynomial warp 2x^3 + x") {
  const auto w = Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 2.0});
  CHECK(w.forward(1.0) == doctest::Approx(3.0));
  CHECK(w.forward(-0.5) == doctest::Approx(-0.75));
  CHECK(w.derivative(1.0) == doctest::Approx(7.0));
  CHECK(w.inverse(3.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : {-1.9, -0.3, 0.0, 0.77, 1.99}) CHECK(w.inverse(w.forward(x)) == doctest::Approx(x).epsilon(1e-12));
  CHECK_THROWS_AS(w.forward(2.5), DomainError);
  CHECK_THROWS_AS(w.inverse(100.0), DomainError);
}

TEST_CASE("non-monotone polynomial is rejected") {
  CHECK_THROWS_AS(Warp1D::polynomial({1.0, 0.0, -1.0}, {-1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(Warp1D::polynomial({2.0, 0.0, 1.0}, {}), DomainError);
}

TEST_CASE("identity warp") {
  const auto w = Warp1D::identity();
  CHECK(w.forward(-3.25) == -3.25);
  CHECK(w.inverse(7.5) == 7.5);
}

TEST_CASE("piecewise linear phase") {
  const auto w = Warp1D::piecewise_linear({0.0, 1.0}, {0.0, 2.0 * pi});
  CHECK(w.forward(0.5) == doctest::Approx(pi));
  CHECK(w.inverse(pi) == doctest::Approx(0.5));
  CHECK(w.forward(1.5) == doctest::Approx(3.0 * pi));
  CHECK_THROWS_AS(Warp1D::piecewise_linear({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), DomainError);
}

TEST_CASE("phase from events") {
  const std::vector<double> a{0.0, 1.0, 2.0};
  CHECK(phase_from_events(a).forward(1.5) == doctest::Approx(3.0 * pi));
  const std::vector<double> b{0.0, 2.0};
  CHECK(phase_from_events(b).forward(1.0) == doctest::Approx(pi));
  const std::vector<double> c{0.0, 1.0, 3.0};
  const auto w = phase_from_events(c);
  CHECK(w.forward(2.0) == doctest::Approx(3.0 * pi));
  CHECK(w.derivative(0.5) == doctest::Approx(2.0 * w.derivative(2.0)));
  CHECK(phase_from_events(c, false).forward(2.0) == doctest::Approx(1.5));
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(phase_from_events(one), DomainError);
  const std::vector<double> back{0.0, 2.0, 1.0};
  CHECK_THROWS_AS(phase_from_events(back), DomainError);
}

TEST_CASE("elementwise and affine warps invert") {
  const Warp e = Warp::elementwise({Warp1D::polynomial({2.0, 0.0, 1.0}, {-1.2, 0.75}), Warp1D::identity()});
  const double x[2] = {0.5, -2.0};
  const Vector z = e.forward(x);
  CHECK(z[0] == doctest::Approx(0.75));
  CHECK(z[1] == doctest::Approx(-2.0));
  const Vector back = e.inverse(std::span<const double>(z.data(), 2));
  CHECK(back[0] == doctest::Approx(0.5).epsilon(1e-12));

  Matrix A(2, 2);
  A << 2.0, 1.0, 0.0, 3.0;
  Vector b(2);
  b << 1.0, -1.0;
  const Warp aff = Warp::affine(A, b);
  CHECK_FALSE(aff.is_elementwise());
  const Vector za = aff.forward(x);
  CHECK(za[0] == doctest::Approx(0.0));
  CHECK(za[1] == doctest::Approx(-7.0));
  const Vector xa = aff.inverse(std::span<const double>(za.data(), 2));
  CHECK(xa[0] == doctest::Approx(0.5));
  CHECK(xa[1] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(Warp::affine(Matrix::Zero(2, 2), b), DomainError);
}
