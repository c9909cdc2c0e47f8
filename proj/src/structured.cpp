#include "warpski/structured.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>

#include "warpski/error.hpp"

namespace warpski {

namespace detail {

// Real-to-complex / complex-to-real plans of one transform length. Plans are
// created once under a lock (FFTW's planner is not thread safe) and executed
// through the new-array interface on caller-owned buffers.
// Buffer from fftw_malloc, aligned for the SIMD code paths of the plans.
template <class T>
class FftBuffer {
 public:
  FftBuffer() = default;
  explicit FftBuffer(std::size_t n) { reserve(n); }
  ~FftBuffer() { fftw_free(data_); }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  void reserve(std::size_t n) {
    if (n <= capacity_) return;
    fftw_free(data_);
    data_ = static_cast<T*>(fftw_malloc(n * sizeof(T)));
    if (!data_) throw Error("out of memory for an FFT buffer of length " + std::to_string(n));
    capacity_ = n;
  }
  T* data() { return data_; }

 private:
  T* data_ = nullptr;
  std::size_t capacity_ = 0;
};

struct FftPlan {
  Index length = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  FftPlan(Index n, unsigned flags) : length(n) {
    FftBuffer<double> real(static_cast<std::size_t>(n));
    FftBuffer<fftw_complex> spec(static_cast<std::size_t>(n / 2 + 1));
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), spec.data(), flags);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec.data(), real.data(), flags);
    if (!forward || !backward) throw Error("FFTW planning failed for length " + std::to_string(n));
  }
  ~FftPlan() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::atomic<FftPlanning> planning{FftPlanning::Estimate};

std::shared_ptr<const FftPlan> plan_for(Index n) {
  static std::map<std::pair<Index, FftPlanning>, std::shared_ptr<const FftPlan>> cache;
  const FftPlanning mode = planning.load();
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto& slot = cache[{n, mode}];
  if (!slot) slot = std::make_shared<const FftPlan>(n, mode == FftPlanning::Measure ? FFTW_MEASURE : FFTW_ESTIMATE);
  return slot;
}

}  // namespace
}  // namespace detail

void set_fft_planning(FftPlanning mode) { detail::planning.store(mode); }
FftPlanning fft_planning() { return detail::planning.load(); }

Index next_fft_size(Index n) {
  if (n <= 1) return 1;
  for (Index m = n;; ++m) {
    Index r = m;
    for (Index p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

SymToeplitz::SymToeplitz(Vector first_column) : column_(std::move(first_column)) {
  const Index m = column_.size();
  if (m == 0) throw DimensionError("Toeplitz matrix needs a nonempty first column");
  fft_size_ = next_fft_size(2 * m - 1);
  plan_ = detail::plan_for(fft_size_);

  detail::FftBuffer<double> circ(static_cast<std::size_t>(fft_size_));
  detail::FftBuffer<fftw_complex> spec(static_cast<std::size_t>(fft_size_ / 2 + 1));
  std::fill(circ.data(), circ.data() + fft_size_, 0.0);
  for (Index j = 0; j < m; ++j) circ.data()[j] = column_[j];
  for (Index j = 1; j < m; ++j) circ.data()[fft_size_ - j] = column_[j];
  fftw_execute_dft_r2c(plan_->forward, circ.data(), spec.data());
  spectrum_.resize(static_cast<std::size_t>(fft_size_ / 2 + 1));
  for (std::size_t k = 0; k < spectrum_.size(); ++k) {
    spectrum_[k] = spec.data()[k][0] / static_cast<double>(fft_size_);
  }
}

void SymToeplitz::apply(const double* x, Index x_stride, double* y, Index y_stride) const {
  const Index m = size();
  // Per-thread scratch reused across calls; fresh large allocations would
  // page-fault on every product.
  thread_local detail::FftBuffer<double> buf;
  thread_local detail::FftBuffer<fftw_complex> spec;
  buf.reserve(static_cast<std::size_t>(fft_size_));
  spec.reserve(spectrum_.size());
  double* b = buf.data();
  fftw_complex* c = spec.data();
  for (Index j = 0; j < m; ++j) b[j] = x[j * x_stride];
  std::fill(b + m, b + fft_size_, 0.0);
  fftw_execute_dft_r2c(plan_->forward, b, c);
  for (std::size_t k = 0; k < spectrum_.size(); ++k) {
    c[k][0] *= spectrum_[k];
    c[k][1] *= spectrum_[k];
  }
  fftw_execute_dft_c2r(plan_->backward, c, b);
  for (Index j = 0; j < m; ++j) y[j * y_stride] = b[j];
}

Vector SymToeplitz::matvec(const Vector& v) const {
  if (v.size() != size()) {
    throw DimensionError("Toeplitz of size " + std::to_string(size()) +
                         " applied to a vector of length " + std::to_string(v.size()));
  }
  Vector out(size());
  apply(v.data(), 1, out.data(), 1);
  return out;
}

Matrix SymToeplitz::to_dense() const {
  const Index m = size();
  Matrix T(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) T(i, j) = column_[std::abs(i - j)];
  }
  return T;
}

Index axis_operator_size(const AxisOperator& op) {
  return std::visit(
      [](const auto& f) -> Index {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SymToeplitz>) {
          return f.size();
        } else {
          return f.rows();
        }
      },
      op);
}

Matrix axis_operator_dense(const AxisOperator& op) {
  if (const auto* t = std::get_if<SymToeplitz>(&op)) return t->to_dense();
  return std::get<Matrix>(op);
}

void apply_mode_product(const AxisOperator& op, int mode, const std::vector<Index>& sizes,
                        Vector& v) {
  const auto d = static_cast<std::size_t>(mode);
  const Index md = sizes[d];
  if (axis_operator_size(op) != md) throw DimensionError("mode product size mismatch");
  Index outer = 1, inner = 1;
  for (std::size_t k = 0; k < d; ++k) outer *= sizes[k];
  for (std::size_t k = d + 1; k < sizes.size(); ++k) inner *= sizes[k];

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (Index o = 0; o < outer; ++o) {
    double* block = v.data() + o * md * inner;
    if (const auto* t = std::get_if<SymToeplitz>(&op)) {
      for (Index s = 0; s < inner; ++s) t->apply(block + s, inner, block + s, inner);
    } else {
      Eigen::Map<RowMajor> X(block, md, inner);
      const RowMajor Y = std::get<Matrix>(op) * X;
      X = Y;
    }
  }
}

KronOperator::KronOperator(std::vector<AxisOperator> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DimensionError("Kronecker operator needs at least one factor");
  size_ = 1;
  for (const auto& f : factors_) {
    if (const auto* M = std::get_if<Matrix>(&f); M && M->rows() != M->cols()) {
      throw DimensionError("Kronecker factors must be square");
    }
    size_ *= axis_operator_size(f);
  }
}

Vector KronOperator::matvec(const Vector& v) const {
  if (v.size() != size_) {
    throw DimensionError("Kronecker operator of size " + std::to_string(size_) +
                         " applied to a vector of length " + std::to_string(v.size()));
  }
  std::vector<Index> sizes;
  for (const auto& f : factors_) sizes.push_back(axis_operator_size(f));
  Vector out = v;
  for (int d = 0; d < num_factors(); ++d) apply_mode_product(factor(d), d, sizes, out);
  return out;
}

Matrix KronOperator::to_dense() const {
  Matrix K = axis_operator_dense(factors_.front());
  for (std::size_t d = 1; d < factors_.size(); ++d) {
    const Matrix B = axis_operator_dense(factors_[d]);
    Matrix next(K.rows() * B.rows(), K.cols() * B.cols());
    for (Index i = 0; i < K.rows(); ++i) {
      for (Index j = 0; j < K.cols(); ++j) {
        next.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = K(i, j) * B;
      }
    }
    K = std::move(next);
  }
  return K;
}

KronEigen KronEigen::decompose(const std::vector<Matrix>& factors) {
  if (factors.empty()) throw DimensionError("KronEigen needs at least one factor");
  KronEigen out;
  for (std::size_t d = 0; d < factors.size(); ++d) {
    const Matrix& K = factors[d];
    if (K.rows() != K.cols()) throw DimensionError("Kronecker factors must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    Vector lam = es.eigenvalues();
    const double top = lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() < -1e-8 * top) {
      throw NotPositiveDefiniteError("Kronecker factor " + std::to_string(d) +
                                     " has eigenvalue " + std::to_string(lam.minCoeff()) +
                                     " (largest " + std::to_string(top) + ")");
    }
    out.values_.push_back(lam.cwiseMax(0.0));
    out.vectors_.push_back(es.eigenvectors());
  }
  return out;
}

KronEigen KronEigen::decompose(const KronOperator& K) {
  std::vector<Matrix> dense;
  for (int d = 0; d < K.num_factors(); ++d) dense.push_back(axis_operator_dense(K.factor(d)));
  return decompose(dense);
}

Index KronEigen::size() const {
  Index n = 1;
  for (const auto& v : values_) n *= v.size();
  return n;
}

Vector KronEigen::eigenvalues() const {
  Vector lam = Vector::Ones(1);
  for (const auto& v : values_) {
    Vector next(lam.size() * v.size());
    for (Index i = 0; i < lam.size(); ++i) next.segment(i * v.size(), v.size()) = lam[i] * v;
    lam = std::move(next);
  }
  return lam;
}

Vector KronEigen::solve(double noise_variance, const Vector& y) const {
  if (y.size() != size()) throw DimensionError("KronEigen::solve size mismatch");
  std::vector<Index> sizes;
  for (const auto& v : values_) sizes.push_back(v.size());
  Vector t = y;
  for (int d = 0; d < num_factors(); ++d) {
    apply_mode_product(Matrix(vectors_[static_cast<std::size_t>(d)].transpose()), d, sizes, t);
  }
  t.array() /= eigenvalues().array() + noise_variance;
  for (int d = 0; d < num_factors(); ++d) {
    apply_mode_product(vectors_[static_cast<std::size_t>(d)], d, sizes, t);
  }
  return t;
}

double KronEigen::logdet(double noise_variance) const {
  return (eigenvalues().array() + noise_variance).log().sum();
}

Vector KronEigen::apply_sqrt(const Vector& x) const {
  if (x.size() != size()) throw DimensionError("KronEigen::apply_sqrt size mismatch");
  std::vector<Index> sizes;
  for (const auto& v : values_) sizes.push_back(v.size());
  Vector out = x;
  for (int d = 0; d < num_factors(); ++d) {
    const auto ud = static_cast<std::size_t>(d);
    const Matrix& Q = vectors_[ud];
    const Matrix S = Q * values_[ud].cwiseSqrt().asDiagonal() * Q.transpose();
    apply_mode_product(S, d, sizes, out);
  }
  return out;
}

}  // namespace warpski
