#include <doctest.h>

#include "oracle.hpp"
#include "warpski/error.hpp"
#include "warpski/operators.hpp"

using namespace warpski;

namespace {

ComponentSpec se_component(const std::string& name, double amp, double ell, Warp warp, Index m) {
  ComponentSpec s{name, StationaryKernel::squared_exponential(amp, ell), std::move(warp), {}};
  s.grid.counts = {m};
  return s;
}

Warp1D poly_warp() { return Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 1.5}); }

}  // namespace

TEST_CASE("identity warp reduces to plain SKI") {
  const Points X = test::uniform_points(300, -1.2, 0.75, 21);
  const auto c = SkiComponent::build(se_component("f", 1.5, 0.4, Warp::identity(1), 512), X);
  const Matrix oracle = test::dense_se(X, 1.5, 0.4, Warp1D::identity());
  CHECK(test::frobenius_rel(c.to_dense(), oracle) <= 1e-3);
  CHECK(c.grid().all_equispaced());
}

TEST_CASE("warped SKI approximates the warped kernel") {
  const Points X = test::uniform_points(300, -1.2, 0.75, 22);
  const auto c = SkiComponent::build(se_component("f", 1.5, 0.4, poly_warp(), 1024), X);
  CHECK(test::frobenius_rel(c.to_dense(), test::dense_se(X, 1.5, 0.4, poly_warp())) <= 1e-3);
  for (const auto& term : c.kuu_terms()) {
    CHECK(std::holds_alternative<SymToeplitz>(term.factor(0)));
  }
}

TEST_CASE("points on grid nodes give exact kernel entries") {
  const auto spec = se_component("f", 1.0, 0.3, Warp::identity(1), 40);
  const auto grid = InducingGrid::uniform({{-1.0, 1.0, 40}});
  Points X(30, 1);
  for (Index i = 0; i < 30; ++i) X(i, 0) = grid.axis(0)[i + 5];
  const Matrix K = SkiComponent::build(spec, grid, X).to_dense();
  const Matrix oracle = test::dense_se(X, 1.0, 0.3, Warp1D::identity());
  CHECK((K - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("mixture products") {
  const Points X = test::uniform_points(300, -1.2, 0.75, 23);
  const Vector v = test::gaussian_vector(300, 24);

  const MixtureOperator empty({}, 0.3, 300);
  CHECK((empty.matvec(v) - 0.09 * v).norm() <= 1e-14);

  const auto one = MixtureOperator::build({se_component("f", 1.5, 0.4, poly_warp(), 1024)}, 0.3, X);
  const Matrix K1 = test::dense_se(X, 1.5, 0.4, poly_warp());
  const Vector ref1 = K1 * v + 0.09 * v;
  CHECK((one.matvec(v) - ref1).norm() / ref1.norm() <= 1e-3);

  const auto two = MixtureOperator::build(
      {se_component("a", 1.5, 0.4, poly_warp(), 1024), se_component("b", 0.5, 0.1, Warp::identity(1), 1024)}, 0.3,
      X);
  const Matrix K2 = test::dense_se(X, 0.5, 0.1, Warp1D::identity());
  const Vector ref2 = K1 * v + K2 * v + 0.09 * v;
  CHECK((two.matvec(v) - ref2).norm() / ref2.norm() <= 1e-3);
  CHECK((two.to_dense() * v - two.matvec(v)).norm() <= 1e-10 * v.norm());
  CHECK((two.component_matvec(1, v) + two.component_matvec(0, v) + 0.09 * v - two.matvec(v)).norm() <= 1e-10);
}

TEST_CASE("parameter derivatives") {
  const Points X = test::uniform_points(200, -1.2, 0.75, 25);
  const auto op = MixtureOperator::build({se_component("f", 1.5, 0.4, poly_warp(), 800)}, 0.3, X);
  REQUIRE(op.num_params() == 3);
  const Vector v = test::gaussian_vector(200, 26);

  CHECK((op.derivative_matvec(2, v) - 2.0 * 0.09 * v).norm() <= 1e-14);
  CHECK((op.derivative_matvec(0, v) - 2.0 * op.component_matvec(0, v)).norm() <= 1e-10);

  // lengthscale: central differences of the dense warped kernel
  const double h = 1e-5;
  const double ell = 0.4;
  const Matrix dK = (test::dense_se(X, 1.5, ell * std::exp(h), poly_warp()) -
                     test::dense_se(X, 1.5, ell * std::exp(-h), poly_warp())) /
                    (2.0 * h);
  const Vector ref = dK * v;
  CHECK((op.derivative_matvec(1, v) - ref).norm() / ref.norm() <= 1e-4);
}

TEST_CASE("with_log_params keeps the weights") {
  const Points X = test::uniform_points(100, -1.0, 0.5, 27);
  const auto op = MixtureOperator::build({se_component("f", 1.5, 0.4, poly_warp(), 300)}, 0.3, X);
  Vector theta = op.log_params();
  theta[0] += std::log(2.0);
  const auto op2 = op.with_log_params(theta);
  CHECK(&op2.component(0).weights() == &op.component(0).weights());
  const Vector v = test::gaussian_vector(100, 28);
  CHECK((op2.component_matvec(0, v) - 4.0 * op.component_matvec(0, v)).norm() <= 1e-10);
  CHECK_THROWS_AS(op.with_log_params(Vector::Zero(2)), DimensionError);
}
