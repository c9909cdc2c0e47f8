#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>

#include "oracle.hpp"
#include "warpski/error.hpp"
#include "warpski/krylov.hpp"

using namespace warpski;

namespace {

Matrix random_spd(Index m, std::uint64_t seed, double shift) {
  const Vector v = test::gaussian_vector(m * m, seed);
  const Matrix A = Eigen::Map<const Matrix>(v.data(), m, m);
  return A * A.transpose() / static_cast<double>(m) + shift * Matrix::Identity(m, m);
}

MatVec dense(const Matrix& K) {
  return [&K](const Vector& v) -> Vector { return K * v; };
}

}  // namespace

TEST_CASE("cg on a multiple of the identity converges in one step") {
  const Vector y = test::gaussian_vector(50, 1);
  const auto r = cg_solve([](const Vector& v) -> Vector { return 2.0 * v; }, y);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK((r.solution - y / 2.0).norm() <= 1e-14);
}

TEST_CASE("cg matches a direct solve") {
  const Matrix K = random_spd(100, 2, 0.5);
  const Vector y = test::gaussian_vector(100, 3);
  const auto r = cg_solve(dense(K), y, {1e-8, 1000, {}});
  CHECK(r.converged);
  CHECK(r.relative_residual <= 1e-8);
  CHECK((K * r.solution - y).norm() / y.norm() <= 1e-8);
  const Vector x = K.llt().solve(y);
  CHECK((r.solution - x).norm() / x.norm() <= 1e-6);

  const Vector d = K.diagonal();
  CgOptions jac{1e-8, 1000, [d](const Vector& v) -> Vector { return v.cwiseQuotient(d); }};
  CHECK((cg_solve(dense(K), y, jac).solution - x).norm() / x.norm() <= 1e-6);
}

TEST_CASE("cg reports non-convergence instead of throwing") {
  const Matrix K = random_spd(100, 4, 1e-3);
  const auto r = cg_solve(dense(K), test::gaussian_vector(100, 5), {1e-14, 3, {}});
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
}

TEST_CASE("lanczos on small spectra") {
  Matrix D = Matrix::Zero(3, 3);
  D.diagonal() << 1.0, 2.0, 3.0;
  const auto f = lanczos(dense(D), Vector::Ones(3), 3);
  Vector ritz = f.ritz_values();
  std::sort(ritz.data(), ritz.data() + ritz.size());
  CHECK(std::abs(ritz[0] - 1.0) <= 1e-10);
  CHECK(std::abs(ritz[1] - 2.0) <= 1e-10);
  CHECK(std::abs(ritz[2] - 3.0) <= 1e-10);

  const Matrix C = 4.5 * Matrix::Identity(10, 10);
  const auto g = lanczos(dense(C), test::gaussian_vector(10, 6), 5);
  CHECK(g.steps == 1);
  CHECK(g.breakdown);
  CHECK(g.alpha[0] == doctest::Approx(4.5));
}

TEST_CASE("lanczos extreme ritz values approach the spectrum edges") {
  const Matrix K = random_spd(200, 7, 0.1);
  const Vector lam = Eigen::SelfAdjointEigenSolver<Matrix>(K).eigenvalues();
  const auto f = lanczos(dense(K), test::gaussian_vector(200, 8), 50);
  const Vector ritz = f.ritz_values();
  CHECK(ritz.minCoeff() >= lam[0] - 1e-10);
  CHECK(ritz.maxCoeff() <= lam[199] + 1e-10);
  CHECK(std::abs(ritz.maxCoeff() - lam[199]) / lam[199] <= 1e-6);
  const auto f10 = lanczos(dense(K), test::gaussian_vector(200, 8), 10);
  CHECK(std::abs(f10.ritz_values().maxCoeff() - lam[199]) >= std::abs(ritz.maxCoeff() - lam[199]));
  const Matrix Q = f.basis;
  CHECK((Q.transpose() * Q - Matrix::Identity(50, 50)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rademacher probes are reproducible") {
  const auto a = ProbeSet::rademacher(100, 5, 42);
  const auto b = ProbeSet::rademacher(100, 5, 42);
  const auto c = ProbeSet::rademacher(100, 5, 43);
  CHECK(a.vectors == b.vectors);
  CHECK(a.vectors != c.vectors);
  CHECK((a.vectors.array().abs() == 1.0).all());
}

TEST_CASE("slq log determinant") {
  const auto twice = [](const Vector& v) -> Vector { return 2.0 * v; };
  CHECK(slq_logdet(twice, 300, ProbeSet::rademacher(300, 4, 1), 10) ==
        doctest::Approx(300.0 * std::log(2.0)).epsilon(1e-13));

  // covariance-plus-noise instance, the setting the estimator is used in
  const Points X = test::uniform_points(500, 0.0, 4.0, 9);
  const Matrix K = test::dense_se(X, 1.2, 0.25, Warp1D::identity()) + 0.2 * Matrix::Identity(500, 500);
  const double exact = 2.0 * Eigen::LLT<Matrix>(K).matrixLLT().diagonal().array().log().sum();
  double mean = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const double est = slq_logdet(dense(K), 500, ProbeSet::rademacher(500, 20, s), 30);
    CHECK(std::abs(est - exact) / std::abs(exact) <= 3e-2);
    mean += est / 10.0;
  }
  CHECK(std::abs(mean - exact) / std::abs(exact) <= 1e-2);
}

TEST_CASE("slq tangent gradient matches finite differences of the estimator") {
  const Matrix A = random_spd(80, 10, 0.3);
  const Matrix B = random_spd(80, 11, 0.0);
  const auto op_at = [&](double t) { return Matrix(A + std::exp(t) * B); };
  const ProbeSet probes = ProbeSet::rademacher(80, 6, 3);
  const double t0 = 0.2;
  const Matrix K = op_at(t0);
  const Matrix dK = std::exp(t0) * B;
  const auto g = slq_logdet_with_gradient(
      dense(K), [&dK](int, const Vector& v) -> Vector { return dK * v; }, 1, 80, probes, 15);
  CHECK(g.value == doctest::Approx(slq_logdet(dense(K), 80, probes, 15)).epsilon(1e-12));
  const double h = 1e-5;
  const Matrix Kp = op_at(t0 + h), Km = op_at(t0 - h);
  const double fd = (slq_logdet(dense(Kp), 80, probes, 15) - slq_logdet(dense(Km), 80, probes, 15)) / (2.0 * h);
  CHECK(std::abs(g.gradient[0] - fd) / std::abs(fd) <= 1e-6);
}

TEST_CASE("stochastic gradient terms for the noise parameter") {
  const double s2 = 0.49;
  const auto K = [s2](const Vector& v) -> Vector { return s2 * v; };
  const auto dK = [s2](int, const Vector& v) -> Vector { return 2.0 * s2 * v; };
  const Vector y = test::gaussian_vector(60, 12);
  const Vector alpha = y / s2;
  const auto probes = ProbeSet::rademacher(60, 8, 2);
  const auto r = slq_nlml_gradient(K, dK, 1, alpha, probes, {1e-12, 100, {}});
  CHECK(r.trace_term[0] == doctest::Approx(2.0 * 60.0).epsilon(1e-12));
  CHECK(r.data_term[0] == doctest::Approx(-2.0 * s2 * alpha.squaredNorm()).epsilon(1e-12));

  const auto z = slq_nlml_gradient(K, dK, 1, Vector::Zero(60), probes, {1e-12, 100, {}});
  CHECK(z.data_term[0] == 0.0);
  CHECK(z.gradient[0] == doctest::Approx(0.5 * z.trace_term[0]));
}
