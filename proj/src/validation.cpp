#include "warpski/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "warpski/error.hpp"
#include "warpski/experiments.hpp"
#include "warpski/gp.hpp"
#include "warpski/grid.hpp"
#include "warpski/io.hpp"
#include "warpski/kernels.hpp"
#include "warpski/krylov.hpp"
#include "warpski/operators.hpp"
#include "warpski/structured.hpp"
#include "warpski/warping.hpp"

namespace warpski {

namespace {

constexpr double kPi = std::numbers::pi;

CheckResult result(double measured, double threshold, bool passed, std::string detail = {}) {
  CheckResult r;
  r.measured = measured;
  r.threshold = threshold;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

CheckResult at_most(double measured, double threshold, std::string detail = {}) {
  return result(measured, threshold, std::isfinite(measured) && measured <= threshold, std::move(detail));
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Vector random_vector(Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(gen);
  return v;
}

Points random_points(Index n, const Vector& lo, const Vector& hi, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points X(n, lo.size());
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < lo.size(); ++d) X(i, d) = lo[d] + (hi[d] - lo[d]) * u(gen);
  }
  return X;
}

Points points_1d(const Vector& x) {
  Points X(x.size(), 1);
  X.col(0) = x;
  return X;
}

/// Dense k(a_i - b_j) over warped coordinates.
Matrix dense_over(const StationaryKernel& k, const Points& A, const Points& B) {
  Matrix K(A.rows(), B.rows());
  std::vector<double> lag(static_cast<std::size_t>(A.cols()));
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < B.rows(); ++j) {
      for (Index d = 0; d < A.cols(); ++d) lag[static_cast<std::size_t>(d)] = A(i, d) - B(j, d);
      K(i, j) = k.eval(lag);
    }
  }
  return K;
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  }
  return K;
}

/// The kernel zoo used by the kernel checks, with random hyperparameters.
std::vector<StationaryKernel> kernel_zoo(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.3, 2.0);
  return {StationaryKernel::squared_exponential(u(gen), u(gen)),
          StationaryKernel::periodic(u(gen), u(gen), u(gen)),
          StationaryKernel::quasi_periodic(u(gen), u(gen) * 3.0, u(gen), u(gen)),
          StationaryKernel::squared_exponential(u(gen), u(gen), 2),
          StationaryKernel::product({StationaryKernel::squared_exponential(u(gen), u(gen)),
                                     StationaryKernel::periodic(u(gen), u(gen), u(gen))}),
          StationaryKernel::sum({StationaryKernel::squared_exponential(u(gen), u(gen)),
                                 StationaryKernel::quasi_periodic(u(gen), u(gen), u(gen), u(gen))})};
}

/// 2x^3 + x on a domain wider than the data range [-1.2, 0.75], so that
/// grid margins stay inside the warp's image.
Warp1D polynomial_axis() { return Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 1.5}); }
Warp polynomial_warp() { return Warp(polynomial_axis()); }

Warp phase_warp() {
  const std::vector<double> events{0.1, 0.9, 1.75, 2.5, 3.4, 4.2};
  return Warp(phase_from_events(events));
}

// ---- kernels ----------------------------------------------------------------

CheckResult kernels_symmetry() {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  double asym = 0.0, excess = 0.0;
  for (const auto& k : kernel_zoo(gen)) {
    const double k0 = k.variance();
    std::vector<double> lag(static_cast<std::size_t>(k.dims())), neg(lag.size());
    for (int t = 0; t < 1000; ++t) {
      for (std::size_t d = 0; d < lag.size(); ++d) {
        lag[d] = 3.0 * normal(gen);
        neg[d] = -lag[d];
      }
      const double a = k.eval(lag), b = k.eval(neg);
      asym = std::max(asym, std::abs(a - b));
      excess = std::max(excess, std::abs(a) - k0);
    }
    if (!(k0 > 0.0)) return result(k0, 0.0, false, "k(0) is not positive");
  }
  return result(asym, 0.0, asym == 0.0 && excess <= 0.0,
                "max |k(t)-k(-t)| over 1000 lags per kernel; max |k(t)|-k(0) = " + fmt(excess));
}

CheckResult kernels_gradient_fd() {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    for (const auto& k0 : kernel_zoo(gen)) {
      const StationaryKernel& k = k0;
      std::vector<double> lag(static_cast<std::size_t>(k.dims()));
      for (auto& l : lag) l = 2.0 * u(gen) * k.min_lengthscale();
      const Vector g = k.grad(lag);
      const Vector theta = k.log_params();
      Vector fd(theta.size());
      for (Index j = 0; j < theta.size(); ++j) {
        Vector tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        fd[j] = (k.with_log_params(tp).eval(lag) - k.with_log_params(tm).eval(lag)) / (2.0 * h);
      }
      const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-12 * k.variance());
      worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / scale);
    }
  }
  return at_most(worst, 1e-5, "max |grad - central FD| / max|grad|, 100 draws of every kernel kind");
}

CheckResult kernels_separability() {
  const StationaryKernel k0 = StationaryKernel::squared_exponential(1.3, 0.7);
  const StationaryKernel k1 = StationaryKernel::periodic(0.8, 1.1, 2.3);
  const StationaryKernel k = StationaryKernel::product({k0, k1});
  const Vector a0 = Vector::LinSpaced(12, -1.0, 2.0), a1 = Vector::LinSpaced(9, 0.0, 3.0);
  const InducingGrid g = InducingGrid::from_axes({a0, a1});
  const Points nodes = g.nodes();
  const Matrix dense = dense_over(k, nodes, nodes);
  const Matrix kr = kron(dense_over(k0, points_1d(a0), points_1d(a0)), dense_over(k1, points_1d(a1), points_1d(a1)));
  const double err = (dense - kr).cwiseAbs().maxCoeff() / dense.cwiseAbs().maxCoeff();
  return at_most(err, 1e-12, "12x9 grid, product kernel vs Kronecker of per-axis matrices");
}

CheckResult kernels_quasi_periodic_product() {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> normal;
  const auto qp = StationaryKernel::quasi_periodic(1.4, 2.5, 0.6, 1.7);
  const auto se = StationaryKernel::squared_exponential(1.4, 2.5);
  const auto per = StationaryKernel::periodic(1.0, 0.6, 1.7);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double lag = 4.0 * normal(gen);
    worst = std::max(worst, std::abs(qp.eval(lag) - se.eval(lag) * per.eval(lag)) / qp.variance());
  }
  return at_most(worst, 1e-14, "quasi-periodic vs SE times periodic, 1000 lags");
}

// ---- warping -----------------------------------------------------------------

struct NamedWarp {
  std::string name;
  Warp warp;
  Vector lo, hi;
};

std::vector<NamedWarp> warp_zoo() {
  std::vector<NamedWarp> out;
  auto box = [](std::initializer_list<double> lo, std::initializer_list<double> hi) {
    Vector l(static_cast<Index>(lo.size())), h(static_cast<Index>(hi.size()));
    std::copy(lo.begin(), lo.end(), l.data());
    std::copy(hi.begin(), hi.end(), h.data());
    return std::make_pair(l, h);
  };
  auto add = [&](std::string name, Warp w, std::pair<Vector, Vector> b) {
    out.push_back({std::move(name), std::move(w), std::move(b.first), std::move(b.second)});
  };
  add("identity", Warp::identity(1), box({-3.0}, {3.0}));
  add("polynomial", polynomial_warp(), box({-1.2}, {0.75}));
  add("phase", phase_warp(), box({0.0}, {5.0}));
  add("elementwise",
      Warp::elementwise({polynomial_axis(), Warp1D::identity(),
                         phase_warp().axes()[0]}),
      box({-1.2, -2.5, 0.0}, {0.75, 2.5, 5.0}));
  Matrix A(2, 2);
  A << 1.0, 0.4, -0.3, 0.8;
  add("affine", Warp::affine(A, Vector::Constant(2, 0.5)), box({-2.0, -2.0}, {2.0, 2.0}));
  return out;
}

CheckResult warping_round_trip() {
  std::mt19937_64 gen(21);
  double worst = 0.0;
  std::string where;
  for (const auto& w : warp_zoo()) {
    const Points X = random_points(10000, w.lo, w.hi, gen);
    const Points back = w.warp.inverse(w.warp.forward(X));
    const double e = (back - X).cwiseAbs().maxCoeff();
    if (e > worst) {
      worst = e;
      where = w.name;
    }
  }
  return at_most(worst, 1e-10, "max |inverse(forward(x)) - x| over 1e4 points per warp kind" +
                                   (where.empty() ? std::string() : ", worst: " + where));
}

CheckResult warping_monotone() {
  std::mt19937_64 gen(22);
  int violations = 0;
  double min_deriv = std::numeric_limits<double>::infinity();
  for (const auto& w : warp_zoo()) {
    if (!w.warp.is_elementwise()) continue;
    for (int d = 0; d < w.warp.dims(); ++d) {
      const Warp1D& a = w.warp.axes()[static_cast<std::size_t>(d)];
      std::uniform_real_distribution<double> u(w.lo[d], w.hi[d]);
      std::vector<double> x(1000);
      for (auto& v : x) v = u(gen);
      std::sort(x.begin(), x.end());
      double prev = -std::numeric_limits<double>::infinity();
      for (double v : x) {
        const double z = a.forward(v);
        if (!(z > prev)) ++violations;
        prev = z;
        min_deriv = std::min(min_deriv, a.derivative(v));
      }
    }
  }
  return result(violations, 0.0, violations == 0 && min_deriv > 0.0,
                "order violations on sorted samples; min derivative " + fmt(min_deriv));
}

CheckResult warping_lattice() {
  const Warp w = Warp::elementwise({polynomial_axis(), phase_warp().axes()[0]});
  const InducingGrid g = InducingGrid::from_axes({Vector::LinSpaced(9, -1.0, 0.7), Vector::LinSpaced(8, 0.2, 4.8)});
  const Points Z = w.forward(g.nodes());
  double dev = 0.0;
  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 8; ++j) {
      dev = std::max(dev, std::abs(Z(i * 8 + j, 0) - Z(i * 8, 0)));
      dev = std::max(dev, std::abs(Z(i * 8 + j, 1) - Z(j, 1)));
    }
  }
  return result(dev, 0.0, dev == 0.0, "warped lattice coordinates depend on their own axis only");
}

// ---- grid-interp -------------------------------------------------------------

CheckResult grid_row_sum_nnz() {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_sum = 0.0;
  int bad_rows = 0;
  for (int dims = 1; dims <= 3; ++dims) {
    for (int uniform = 0; uniform < 2; ++uniform) {
      std::vector<Vector> axes;
      for (int d = 0; d < dims; ++d) {
        Vector a = Vector::LinSpaced(10 + 3 * d, 0.0, 1.0);
        if (!uniform) a = a.array().pow(1.7) + 0.2 * a.array();
        axes.push_back(a);
      }
      const InducingGrid g = InducingGrid::from_axes(axes);
      Points X(300, dims);
      for (Index i = 0; i < X.rows(); ++i) {
        for (int d = 0; d < dims; ++d) {
          const Vector& a = g.axis(d);
          X(i, d) = a[1] + (a[a.size() - 2] - a[1]) * u(gen);
        }
      }
      const InterpWeights W = interpolation_weights(g, X);
      const auto expected = static_cast<std::size_t>(std::pow(4, dims));
      for (Index r = 0; r < W.rows(); ++r) {
        const auto idx = W.row_indices(r);
        const auto val = W.row_values(r);
        std::vector<Index> sorted(idx.begin(), idx.end());
        std::sort(sorted.begin(), sorted.end());
        const bool unique = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        if (idx.size() != expected || !unique) ++bad_rows;
        double s = 0.0;
        for (double v : val) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
  }
  return result(worst_sum, 1e-12, worst_sum <= 1e-12 && bad_rows == 0,
                "max |row sum - 1| for D = 1, 2, 3 (uniform and non-uniform axes); rows without 4^D "
                "distinct entries: " + std::to_string(bad_rows));
}

/// ||W K_UU W^T - K||_F / ||K||_F with K_UU and K given as dense matrices.
double ski_error(const InterpWeights& W, const Matrix& kuu, const Matrix& exact) {
  const Matrix Wd = W.to_dense();
  const Matrix approx = Wd * kuu * Wd.transpose();
  return (approx - exact).norm() / exact.norm();
}

CheckResult grid_interp_accuracy() {
  const Index n = 500, m = 400;
  const Vector x = Vector::LinSpaced(n, 0.0, 1.0);
  const Points X = points_1d(x);
  const InducingGrid g = InducingGrid::covering(Box::bounding(X), {m});
  const double h = g.spacing(0);
  double worst = 0.0;
  for (double factor : {3.0, 5.0, 10.0, 30.0}) {
    const auto k = StationaryKernel::squared_exponential(1.0, factor * h);
    const Points U = g.nodes();
    worst = std::max(worst, ski_error(interpolation_weights(g, X), dense_over(k, U, U), dense_over(k, X, X)));
  }
  return at_most(worst, 1e-3, "n=500, m=400, SE with lengthscale 3, 5, 10 and 30 spacings; worst relative "
                              "Frobenius error");
}

CheckResult grid_warped_grid_accuracy() {
  // Plain input-space cubic stencils on the non-uniform grid U_hat, compared
  // with the dense warped kernel.
  const Index n = 500, m = 400;
  const Warp w = polynomial_warp();
  const Points X = points_1d(Vector::LinSpaced(n, -1.2, 0.75));
  const InducingGrid U = InducingGrid::covering(Box::bounding(w.forward(X)), {m});
  const InducingGrid Uhat = warped_grid(U, w);
  double worst = 0.0;
  for (double factor : {3.0, 5.0, 10.0, 30.0}) {
    const auto k = StationaryKernel::squared_exponential(1.0, factor * U.spacing(0));
    const Points Zu = w.forward(Uhat.nodes()), Zx = w.forward(X);
    worst = std::max(worst, ski_error(interpolation_weights(Uhat, X), dense_over(k, Zu, Zu), dense_over(k, Zx, Zx)));
  }
  return at_most(worst, 2e-3, "input-space stencils on U_hat for phi(x)=2x^3+x, n=500, m=400; worst "
                              "relative Frobenius error");
}

// ---- structured-linalg -------------------------------------------------------

CheckResult structured_toeplitz_vs_dense() {
  std::mt19937_64 gen(41);
  std::uniform_int_distribution<int> um(2, 512);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = (t == 0) ? 2 : (t == 1 ? 512 : um(gen));
    const double h = u(gen) / m * 10.0;
    StationaryKernel k = StationaryKernel::squared_exponential(u(gen), u(gen));
    if (t % 3 == 1) k = StationaryKernel::quasi_periodic(u(gen), 5.0 * u(gen), u(gen), u(gen));
    if (t % 3 == 2) k = StationaryKernel::periodic(u(gen), u(gen), u(gen));
    Vector col = toeplitz_column(k, Vector::LinSpaced(m, 0.0, h * (m - 1)));
    col[0] += 0.01 * k.variance();
    const SymToeplitz T(col);
    Matrix dense(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) dense(i, j) = col[std::abs(i - j)];
    }
    const Vector v = random_vector(m, gen);
    const Vector ref = dense * v;
    worst = std::max(worst, (T.matvec(v) - ref).norm() / ref.norm());
  }
  return at_most(worst, 1e-10, "200 SPD Toeplitz matrices, m in [2, 512]; worst relative MVM error");
}

CheckResult structured_kron_vs_dense() {
  std::mt19937_64 gen(42);
  const std::vector<Index> shapes{1, 2, 3, 5};
  double worst = 0.0;
  int cases = 0;
  auto factor = [&](Index m, bool toeplitz) -> AxisOperator {
    const auto k = StationaryKernel::squared_exponential(1.0, 0.7);
    if (toeplitz) return SymToeplitz(toeplitz_column(k, Vector::LinSpaced(m, 0.0, 0.5 * (m - 1))));
    Matrix A = Matrix::NullaryExpr(m, m, [&] { return std::normal_distribution<double>()(gen); });
    return Matrix(A + A.transpose());
  };
  for (int dims = 1; dims <= 3; ++dims) {
    const int combos = static_cast<int>(std::pow(shapes.size(), dims));
    for (int c = 0; c < combos; ++c) {
      std::vector<AxisOperator> fs;
      int code = c;
      for (int d = 0; d < dims; ++d) {
        fs.push_back(factor(shapes[static_cast<std::size_t>(code % 4)], (c + d) % 2 == 0));
        code /= 4;
      }
      Matrix dense = axis_operator_dense(fs[0]);
      for (int d = 1; d < dims; ++d) dense = kron(dense, axis_operator_dense(fs[static_cast<std::size_t>(d)]));
      const KronOperator K(fs);
      const Vector v = random_vector(K.size(), gen);
      const Vector ref = dense * v;
      worst = std::max(worst, (K.matvec(v) - ref).norm() / std::max(ref.norm(), 1e-300));
      ++cases;
    }
  }
  return at_most(worst, 1e-12, std::to_string(cases) + " factor-shape combinations, D = 1, 2, 3, mixed "
                                                       "Toeplitz and dense factors");
}

/// Two-component warped mixture on scattered 1-D inputs.
GpModel two_component_model(double noise_std = 0.3) {
  GpModel m;
  m.noise_std = noise_std;
  m.components.push_back({"slow", StationaryKernel::squared_exponential(1.2, 1.5), polynomial_warp(), {}});
  m.components.push_back({"periodic", StationaryKernel::quasi_periodic(0.7, 20.0, 0.8, 2.0 * kPi),
                          Warp(phase_from_events(std::vector<double>{-1.3, -0.9, -0.5, -0.05, 0.3, 0.8})),
                          {}});
  return m;
}

double symmetry_defect(const MatVec& apply, Index n, std::mt19937_64& gen) {
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Vector v = random_vector(n, gen), w = random_vector(n, gen);
    const Vector Kv = apply(v), Kw = apply(w);
    worst = std::max(worst, std::abs(Kv.dot(w) - v.dot(Kw)) / (Kv.norm() * w.norm()));
  }
  return worst;
}

CheckResult structured_symmetry() {
  std::mt19937_64 gen(43);
  const KronOperator K({SymToeplitz(toeplitz_column(StationaryKernel::squared_exponential(1.0, 2.0),
                                                    Vector::LinSpaced(40, 0.0, 39.0))),
                        Matrix(Matrix::Identity(6, 6) * 2.0 + Matrix::Ones(6, 6)),
                        SymToeplitz(toeplitz_column(StationaryKernel::periodic(1.0, 0.8, 7.0),
                                                    Vector::LinSpaced(30, 0.0, 29.0)))});
  const double kron_defect = symmetry_defect([&](const Vector& v) { return K.matvec(v); }, K.size(), gen);
  const Points X = points_1d(Vector::LinSpaced(700, -1.2, 0.75));
  const MixtureOperator op = build_operator(two_component_model(), X);
  const double mix_defect = symmetry_defect([&](const Vector& v) { return op.matvec(v); }, op.size(), gen);
  return at_most(std::max(kron_defect, mix_defect), 1e-10,
                 "|<Kx,y> - <x,Ky>| / (|Kx||y|): Kronecker " + fmt(kron_defect) + ", mixture " + fmt(mix_defect));
}

CheckResult structured_toeplitz_scaling() {
  std::mt19937_64 gen(44);
  const auto k = StationaryKernel::squared_exponential(1.0, 50.0);
  std::vector<double> times;
  std::string detail = "measured FFTW plans; seconds per MVM:";
  const FftPlanning previous = fft_planning();
  set_fft_planning(FftPlanning::Measure);
  for (int p = 14; p <= 19; ++p) {
    const Index m = Index{1} << p;
    const SymToeplitz T(toeplitz_column(k, Vector::LinSpaced(m, 0.0, static_cast<double>(m - 1))));
    const Vector v = random_vector(m, gen);
    const double t = median_seconds([&] { (void)T.matvec(v); }, 7);
    times.push_back(t);
    detail += " " + fmt(t);
  }
  set_fft_planning(previous);
  double worst = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) worst = std::max(worst, times[i] / times[i - 1]);
  return at_most(worst, 2.6, "largest time ratio per doubling, m = 2^14..2^19; " + detail);
}

// ---- operators ---------------------------------------------------------------

CheckResult operators_weight_equivalence() {
  std::mt19937_64 gen(51);
  double worst = 0.0;
  auto compare = [&](const StationaryKernel& k, const Warp& w, const Points& X) {
    const InducingGrid U = component_grid({"c", k, w, {}}, X);
    const InterpWeights W6 = interpolation_weights(U, w.forward(X));
    const InterpWeights W7 = interpolation_weights_on_warped_grid(warped_grid(U, w), w, X);
    const SkiComponent comp = SkiComponent::build({"c", k, w, {}}, U, X);
    for (int t = 0; t < 5; ++t) {
      const Vector v = random_vector(X.rows(), gen);
      const Vector a = W6.matvec(comp.kuu_matvec(W6.rmatvec(v)));
      const Vector b = W7.matvec(comp.kuu_matvec(W7.rmatvec(v)));
      worst = std::max(worst, (a - b).norm() / a.norm());
    }
  };
  compare(StationaryKernel::squared_exponential(1.5, 0.4), polynomial_warp(),
          random_points(500, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen));
  compare(StationaryKernel::quasi_periodic(1.0, 10.0, 0.5, 2.0 * kPi), phase_warp(),
          random_points(500, Vector::Constant(1, 0.0), Vector::Constant(1, 5.0), gen));
  Vector lo(2), hi(2);
  lo << -1.2, -2.5;
  hi << 0.75, 2.5;
  compare(StationaryKernel::squared_exponential(1.5, 0.6, 2),
          Warp::elementwise({polynomial_axis(), Warp1D::identity()}),
          random_points(400, lo, hi, gen));
  return at_most(worst, 1e-12, "relative MVM difference between warped-point and warped-grid weights");
}

CheckResult operators_symmetry() {
  std::mt19937_64 gen(52);
  Vector lo(2), hi(2);
  lo << -1.2, -2.5;
  hi << 0.75, 2.5;
  const Points X = random_points(800, lo, hi, gen);
  GpModel m;
  m.noise_std = 0.2;
  m.components.push_back({"warped", StationaryKernel::squared_exponential(1.5, 0.5, 2),
                          Warp::elementwise({polynomial_axis(),
                                             Warp1D::identity()}),
                          {}});
  Matrix A(2, 2);
  A << 1.0, 0.3, -0.2, 0.9;
  m.components.push_back({"affine", StationaryKernel::squared_exponential(0.5, 0.8, 2),
                          Warp::affine(A, Vector::Zero(2)), {}});
  const MixtureOperator op = build_operator(m, X);
  const double d = symmetry_defect([&](const Vector& v) { return op.matvec(v); }, op.size(), gen);
  return at_most(d, 1e-10, "2-D mixture of an elementwise-warped and an affine-warped component");
}

CheckResult operators_positive_definite() {
  std::mt19937_64 gen(53);
  const double noise = 0.05;
  const Points X = random_points(2000, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen);
  const MixtureOperator op = build_operator(two_component_model(noise), X);
  const LanczosFactor f = lanczos([&](const Vector& v) { return op.matvec(v); }, random_vector(op.size(), gen), 80);
  const double smallest = f.ritz_values().minCoeff();
  const double bound = noise * noise * (1.0 - 1e-6);
  return result(smallest, bound, smallest >= bound,
                "smallest Ritz value after 80 Lanczos steps (measured) vs sigma^2 (1 - 1e-6)");
}

CheckResult operators_component_psd() {
  std::mt19937_64 gen(54);
  const Points X = random_points(400, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen);
  const MixtureOperator op = build_operator(two_component_model(), X);
  double worst = 0.0;
  for (const auto& c : op.components()) {
    const Matrix K = c.to_dense();
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(K, Eigen::EigenvaluesOnly).eigenvalues();
    worst = std::max(worst, -ev.minCoeff() / ev.maxCoeff());
  }
  return at_most(worst, 1e-10, "most negative eigenvalue of each W K_UU W^T relative to its largest");
}

double toeplitz_defect(const Matrix& K) {
  double d = 0.0;
  for (Index i = 0; i + 1 < K.rows(); ++i) {
    for (Index j = 0; j + 1 < K.cols(); ++j) d = std::max(d, std::abs(K(i + 1, j + 1) - K(i, j)));
  }
  return d / K.cwiseAbs().maxCoeff();
}

CheckResult operators_structure() {
  const Warp w = Warp::elementwise({polynomial_axis(), Warp1D::identity()});
  const auto k = StationaryKernel::squared_exponential(1.5, 0.4, 2);
  std::mt19937_64 gen(55);
  Vector lo(2), hi(2);
  lo << -1.2, -2.5;
  hi << 0.75, 2.5;
  const Points X = random_points(300, lo, hi, gen);
  const SkiComponent comp = SkiComponent::build({"c", k, w, {}}, X);
  bool all_toeplitz = true;
  for (const auto& term : comp.kuu_terms()) {
    for (int d = 0; d < term.num_factors(); ++d) all_toeplitz &= std::holds_alternative<SymToeplitz>(term.factor(d));
  }
  // First axis only: the warped kernel over the warpSKI nodes U_hat versus
  // over an input-space equispaced grid of the same size (plain SKI).
  const auto k1 = StationaryKernel::squared_exponential(1.5, 0.4);
  const Vector u = comp.grid().axis(0);
  const InducingGrid Uhat = warped_grid(InducingGrid::from_axes({u}), Warp(w.axes()[0]));
  const Warp1D& phi = w.axes()[0];
  Vector plain = Vector::LinSpaced(u.size(), Uhat.axis(0)[0], Uhat.axis(0)[u.size() - 1]);
  Vector zhat(u.size()), zplain(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    zhat[i] = phi.forward(Uhat.axis(0)[i]);
    zplain[i] = phi.forward(plain[i]);
  }
  const double warp_ski = toeplitz_defect(dense_over(k1, points_1d(zhat), points_1d(zhat)));
  const double plain_ski = toeplitz_defect(dense_over(k1, points_1d(zplain), points_1d(zplain)));
  const bool ok = all_toeplitz && warp_ski <= 1e-12 && plain_ski > 1e-3;
  return result(warp_ski, 1e-12, ok,
                std::string("K_UU factors all Toeplitz: ") + (all_toeplitz ? "yes" : "no") +
                    "; Toeplitz defect of the warped kernel on U_hat " + fmt(warp_ski) +
                    ", on an input-space equispaced grid " + fmt(plain_ski));
}

// ---- krylov ------------------------------------------------------------------

Matrix spd_matrix(Index n, std::mt19937_64& gen, double noise) {
  const Points X = random_points(n, Vector::Constant(1, 0.0), Vector::Constant(1, 10.0), gen);
  Matrix K = dense_over(StationaryKernel::squared_exponential(1.0, 0.5), X, X);
  K.diagonal().array() += noise;
  return K;
}

CheckResult krylov_cg_energy_monotone() {
  std::mt19937_64 gen(61);
  const Matrix A = spd_matrix(200, gen, 0.05);
  const Vector b = random_vector(200, gen);
  const Vector x = A.llt().solve(b);
  const MatVec apply = [&](const Vector& v) { return Vector(A * v); };
  double prev = b.dot(x);  // energy error of x0 = 0
  double worst_increase = 0.0;
  for (int k = 1; k <= 60; ++k) {
    const CgReport r = cg_solve(apply, b, {1e-14, k, {}});
    const Vector e = r.solution - x;
    const double energy = e.dot(A * e);
    worst_increase = std::max(worst_increase, (energy - prev) / b.dot(x));
    prev = energy;
  }
  return at_most(worst_increase, 1e-12, "largest relative increase of (x_k - x)^T A (x_k - x) over 60 "
                                        "CG iterations");
}

CheckResult krylov_slq_unbiased() {
  std::mt19937_64 gen(62);
  const Matrix A = spd_matrix(500, gen, 0.1);
  const double exact = 2.0 * Eigen::LLT<Matrix>(A).matrixLLT().diagonal().array().log().sum();
  const MatVec apply = [&](const Vector& v) { return Vector(A * v); };
  double mean = 0.0;
  for (int s = 0; s < 50; ++s) mean += slq_logdet(apply, 500, ProbeSet::rademacher(500, 20, 1000 + s), 30) / 50.0;
  return at_most(std::abs(mean - exact) / std::abs(exact), 5e-3,
                 "mean of 50 seeded estimates vs Cholesky log-determinant " + fmt(exact));
}

CheckResult krylov_probe_reproducible() {
  const ProbeSet a = ProbeSet::rademacher(1001, 7, 99), b = ProbeSet::rademacher(1001, 7, 99);
  const ProbeSet c = ProbeSet::rademacher(1001, 7, 100);
  const bool same = a.vectors.size() == b.vectors.size() &&
                    std::memcmp(a.vectors.data(), b.vectors.data(), sizeof(double) * a.vectors.size()) == 0;
  const bool differs = (a.vectors - c.vectors).cwiseAbs().maxCoeff() > 0.0;
  return result(same ? 0.0 : 1.0, 0.0, same && differs, "bitwise comparison of two draws with one seed");
}

CheckResult krylov_quadrature_exact() {
  std::mt19937_64 gen(63);
  const Index n = 120;
  const Vector levels = (Vector(5) << 0.3, 1.0, 2.5, 7.0, 40.0).finished();
  Vector lambda(n);
  for (Index i = 0; i < n; ++i) lambda[i] = levels[i % 5];
  const Matrix G = Matrix::NullaryExpr(n, n, [&] { return std::normal_distribution<double>()(gen); });
  const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
  const Matrix A = Q * lambda.asDiagonal() * Q.transpose();
  const Matrix logA = Q * lambda.array().log().matrix().asDiagonal() * Q.transpose();
  const MatVec apply = [&](const Vector& v) { return Vector(A * v); };
  const ProbeSet all = ProbeSet::rademacher(n, 10, 5);
  double worst = 0.0;
  for (int p = 0; p < all.count; ++p) {
    ProbeSet one;
    one.count = 1;
    one.seed = all.seed;
    one.vectors = all.vectors.col(p);
    const double est = slq_logdet(apply, n, one, 8);
    const Vector z = all.vectors.col(p);
    const double ref = static_cast<double>(n) * z.dot(logA * z) / z.squaredNorm();
    worst = std::max(worst, std::abs(est - ref) / std::abs(ref));
  }
  return at_most(worst, 1e-8, "5 distinct eigenvalues, 8 Lanczos steps; worst per-probe relative error");
}

// ---- gp ----------------------------------------------------------------------

struct OracleCase {
  std::string name;
  GpModel model;
  Points X;
};

std::vector<OracleCase> oracle_cases() {
  std::mt19937_64 gen(71);
  std::vector<OracleCase> out;
  const Index n = 300;
  auto add = [&](std::string name, ComponentSpec spec, double noise, Points X) {
    GpModel m;
    m.noise_std = noise;
    m.components.push_back(std::move(spec));
    out.push_back({std::move(name), std::move(m), std::move(X)});
  };
  const Points X1 = random_points(n, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen);
  add("SE/identity", {"f", StationaryKernel::squared_exponential(1.5, 0.25), Warp::identity(1), {}}, 0.3, X1);
  add("SE/polynomial", {"f", StationaryKernel::squared_exponential(1.5, 0.4), polynomial_warp(), {}}, 0.3, X1);
  add("QP/phase",
      {"f", StationaryKernel::quasi_periodic(1.0, 10.0, 0.6, 2.0 * kPi), phase_warp(), {}}, 0.3,
      random_points(n, Vector::Constant(1, 0.0), Vector::Constant(1, 5.0), gen));
  Vector lo(2), hi(2);
  lo << -1.2, -2.5;
  hi << 0.75, 2.5;
  add("SE2D/elementwise",
      {"f", StationaryKernel::squared_exponential(1.5, 0.8, 2),
       Warp::elementwise({polynomial_axis(), Warp1D::identity()}), {}},
      0.3, random_points(n, lo, hi, gen));
  return out;
}

CheckResult gp_oracle_convergence() {
  // A seeded SLQ estimate carries its own sampling error, which does not
  // vanish with grid density. It is measured on the exact kernel with the
  // same probes and removed, so what remains is the approximation error.
  const std::vector<double> densities{0.75, 1.5, 3.0};
  std::string detail;
  bool ok = true;
  double worst_final = 0.0;
  for (auto& c : oracle_cases()) {
    const Vector y = sample_prior(c.model, c.X, 7).targets;
    const NlmlResult exact = exact_nlml(c.model, c.X, y, false);
    ApproxOptions ao;
    ao.probes = 100;
    ao.lanczos_steps = 60;
    ao.seed = 3;
    ao.cg.tolerance = 1e-10;
    const Matrix K = dense_kernel(c.model, c.X);
    const double slq_exact = slq_logdet([&](const Vector& v) { return Vector(K * v); }, K.rows(),
                                        ProbeSet::rademacher(K.rows(), ao.probes, ao.seed), ao.lanczos_steps);
    const double ref_logdet = slq_exact;
    std::vector<double> errs;
    for (double ppl : densities) {
      GpModel m = c.model;
      m.components[0].grid.points_per_lengthscale = ppl;
      // Data-fit and log-determinant errors are counted separately so that
      // they cannot cancel.
      const ApproxNlmlResult a = approx_nlml(m, c.X, y, ao, false);
      errs.push_back(0.5 * (std::abs(a.data_fit - exact.data_fit) + std::abs(a.logdet - ref_logdet)) /
                     std::abs(exact.value));
    }
    const bool dec = errs[1] < errs[0] && errs[2] < errs[1];
    ok &= dec;
    worst_final = std::max(worst_final, errs.back());
    detail += c.name + ": " + fmt(errs[0]) + " > " + fmt(errs[1]) + " > " + fmt(errs[2]) +
              (dec ? "" : " (not decreasing)") + "; ";
  }
  return result(worst_final, 0.0, ok,
                "(|data-fit error| + |log-det error|) / 2 relative to the NLML, at 0.75, 1.5 and 3 inducing "
                "points per lengthscale; the log-det reference is SLQ with the same probes on the exact kernel: " + detail);
}

CheckResult gp_separation_identity() {
  std::mt19937_64 gen(73);
  const Points X = random_points(1500, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen);
  const GpModel m = two_component_model();
  const Vector y = sample_prior(m, X, 9).targets;
  const MixtureOperator op = build_operator(m, X);
  double worst = 0.0;
  for (double tol : {1e-2, 1e-4, 1e-8}) {
    const SeparationResult s = separate(op, y, {tol, 5000, {}});
    Vector sum = op.noise_variance() * s.alpha;
    for (const auto& f : s.means) sum += f;
    worst = std::max(worst, (y - sum).norm() / y.norm() / tol);
  }
  return at_most(worst, 1.5, "|y - sum_j E[f_j|y] - sigma^2 alpha| / |y| divided by the CG tolerance, "
                             "tolerances 1e-2, 1e-4, 1e-8");
}

CheckResult gp_gradient_consistency() {
  std::mt19937_64 gen(74);
  const Points X = random_points(400, Vector::Constant(1, -1.2), Vector::Constant(1, 0.75), gen);
  const GpModel m = two_component_model();
  const Vector y = sample_prior(m, X, 10).targets;
  const MixtureOperator op = build_operator(m, X);
  ApproxOptions ao;
  ao.gradient = GradientMethod::LanczosTangent;
  ao.cg.tolerance = 1e-12;
  ao.seed = 4;
  const Vector g = approx_nlml(op, y, ao, true).gradient;
  const Vector theta = op.log_params();
  const double h = 1e-5;
  Vector fd(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    fd[j] = (approx_nlml(op.with_log_params(tp), y, ao, false).value -
             approx_nlml(op.with_log_params(tm), y, ao, false).value) / (2.0 * h);
  }
  const double err = (g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff();
  return at_most(err, 1e-4, "seeded approximate NLML gradient vs central differences of the same objective");
}

CheckResult gp_argmin_stability() {
  const RunReport r = run_sweep(reference_sweep_config());
  const double dist = r.get("argmin_index_distance");
  return at_most(dist, 1.0, "exact vs approximate argmin, in sweep steps (fetal amplitude, n=2000); max "
                            "offset-aligned gap / range " + fmt(r.get("max_gap_over_range")));
}

// ---- cli ---------------------------------------------------------------------

Numeric2dConfig small_numeric2d() {
  Numeric2dConfig c;
  c.n = 600;
  c.sample_counts = {60, 60};
  c.model_counts = {40, 40};
  c.solver.max_steps = 8;
  c.timing_repeats = 1;
  c.sweep_n = {300, 600};
  c.sweep_m = {400, 800};
  return c;
}

bool same_tables(const std::vector<std::pair<std::string, Table>>& a,
                 const std::vector<std::pair<std::string, Table>>& b, bool skip_timings) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Table& ta = a[i].second;
    const Table& tb = b[i].second;
    if (a[i].first != b[i].first || ta.header() != tb.header()) return false;
    for (std::size_t c = 0; c < ta.num_columns(); ++c) {
      if (skip_timings && ta.header()[c].find("seconds") != std::string::npos) continue;
      if (ta.column(c) != tb.column(c)) return false;
    }
  }
  return true;
}

int report_differences(const RunReport& a, const RunReport& b) {
  int diff = 0;
  if (a.metrics.size() != b.metrics.size()) return 1;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    if (a.metrics[i].first.find("seconds") != std::string::npos) continue;
    if (a.metrics[i] != b.metrics[i]) ++diff;
  }
  if (!same_tables(a.curves, b.curves, true)) ++diff;
  if (!same_tables(a.separated, b.separated, false)) ++diff;
  return diff;
}

CheckResult cli_determinism() {
  Numeric2dConfig c = small_numeric2d();
  c.sweep_n.clear();
  c.sweep_m.clear();
  int diff = report_differences(run_numeric2d(c), run_numeric2d(c));
  Separation1dConfig s = two_source_config(1500, 250.0);
  s.solver.max_steps = 4;
  diff += report_differences(run_separation1d(s), run_separation1d(s));
  return result(diff, 0.0, diff == 0, "differing metrics or tables between two identical runs (numeric2d "
                                      "and separate, timings excluded)");
}

CheckResult cli_csv_regenerable() {
  Numeric2dConfig c = small_numeric2d();
  c.learn = false;
  const RunReport r = run_numeric2d(c);
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("warpski_validate_" + std::to_string(std::random_device{}()));
  write_run_outputs(dir.string(), c.to_json(), r);
  int mismatches = 0;
  auto check = [&](const char* sub, const std::vector<std::pair<std::string, Table>>& tables) {
    for (const auto& [name, t] : tables) {
      const Table back = read_csv((dir / sub / (name + ".csv")).string(), t.header());
      for (std::size_t i = 0; i < t.num_columns(); ++i) mismatches += back.column(i) != t.column(i);
    }
  };
  check("curves", r.curves);
  check("separated", r.separated);
  for (const auto& [k, v] : read_key_values((dir / "report.csv").string())) {
    if (r.has(k) && std::stod(v) != r.get(k)) ++mismatches;
  }
  std::filesystem::remove_all(dir);
  return result(mismatches, 0.0, mismatches == 0 && !r.curves.empty(),
                "columns of curves/, separated/ and report.csv that do not read back bit-identically");
}

}  // namespace

std::vector<PropertyCheck> property_suite() {
  std::vector<PropertyCheck> s;
  auto add = [&](std::string name, std::string description, CheckResult (*fn)()) {
    const std::string module = name.substr(0, name.find('.'));
    s.push_back({std::move(name), module, std::move(description), fn});
  };
  add("kernels.symmetry", "k(t) = k(-t) exactly and |k(t)| <= k(0)", kernels_symmetry);
  add("kernels.gradient_fd", "analytic log-parameter gradients match central differences", kernels_gradient_fd);
  add("kernels.separability", "product kernel on a grid equals the Kronecker product", kernels_separability);
  add("kernels.quasi_periodic_product", "quasi-periodic equals SE times periodic", kernels_quasi_periodic_product);
  add("warping.round_trip", "inverse(forward(x)) = x for every warp kind", warping_round_trip);
  add("warping.monotone", "forward preserves the order of sorted samples", warping_monotone);
  add("warping.lattice", "elementwise warps map lattices to lattices", warping_lattice);
  add("grid.row_sum_nnz", "interpolation rows sum to one with 4^D entries", grid_row_sum_nnz);
  add("grid.interp_accuracy", "SKI kernel matches the dense kernel", grid_interp_accuracy);
  add("grid.warped_grid_accuracy", "input-space stencils on a warped grid stay accurate", grid_warped_grid_accuracy);
  add("structured.toeplitz_vs_dense", "FFT Toeplitz MVM equals dense MVM", structured_toeplitz_vs_dense);
  add("structured.kron_vs_dense", "Kronecker MVM equals dense MVM", structured_kron_vs_dense);
  add("structured.symmetry", "structured operators are symmetric", structured_symmetry);
  add("structured.toeplitz_scaling", "Toeplitz MVM time is quasi-linear in m", structured_toeplitz_scaling);
  add("operators.weight_equivalence", "warped-point and warped-grid weights give the same operator", operators_weight_equivalence);
  add("operators.symmetry", "mixture operator is symmetric", operators_symmetry);
  add("operators.positive_definite", "Ritz values stay above the noise variance", operators_positive_definite);
  add("operators.component_psd", "each W K_UU W^T is positive semidefinite", operators_component_psd);
  add("operators.structure", "elementwise warps keep Kronecker-of-Toeplitz K_UU", operators_structure);
  add("krylov.cg_energy_monotone", "CG energy-norm error never increases", krylov_cg_energy_monotone);
  add("krylov.slq_unbiased", "SLQ log-determinant is unbiased over seeds", krylov_slq_unbiased);
  add("krylov.probe_reproducible", "probe vectors are reproducible from the seed", krylov_probe_reproducible);
  add("krylov.quadrature_exact", "Gauss quadrature is exact for few distinct eigenvalues", krylov_quadrature_exact);
  add("gp.oracle_convergence", "approximate NLML converges to the exact NLML with grid density", gp_oracle_convergence);
  add("gp.separation_identity", "source means plus sigma^2 alpha reproduce y", gp_separation_identity);
  add("gp.gradient_consistency", "approximate gradient matches differences of the seeded objective",
      gp_gradient_consistency);
  add("gp.argmin_stability", "exact and approximate likelihood sweeps share the argmin", gp_argmin_stability);
  add("cli.determinism", "identical configs give identical reports", cli_determinism);
  add("cli.csv_regenerable", "persisted CSVs reproduce every reported curve", cli_csv_regenerable);
  return s;
}

std::vector<CheckResult> run_properties(const std::string& filter,
                                        const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> out;
  for (const auto& check : property_suite()) {
    if (!filter.empty() && check.name.find(filter) == std::string::npos) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r = CheckResult{};
      r.detail = std::string("threw: ") + e.what();
    }
    r.name = check.name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace warpski
