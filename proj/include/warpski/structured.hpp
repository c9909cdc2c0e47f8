#pragma once

#include <complex>
#include <memory>
#include <variant>
#include <vector>

#include "warpski/types.hpp"

namespace warpski {

/// FFTW planning effort for Toeplitz products. Measure finds faster plans
/// for long transforms at a one-off planning cost of seconds per length;
/// plans are cached per (length, mode).
enum class FftPlanning { Estimate, Measure };
void set_fft_planning(FftPlanning mode);
FftPlanning fft_planning();

/// Smallest n' >= n of the form 2^a 3^b 5^c 7^d.
Index next_fft_size(Index n);

namespace detail {
struct FftPlan;
}

/// Symmetric Toeplitz matrix given by its first column. Products use a
/// circulant embedding of length next_fft_size(2m - 1) and two real FFTs.
class SymToeplitz {
 public:
  SymToeplitz() = default;
  explicit SymToeplitz(Vector first_column);

  Index size() const { return column_.size(); }
  const Vector& first_column() const { return column_; }

  Vector matvec(const Vector& v) const;
  /// y = T x on strided data (used for Kronecker mode products).
  void apply(const double* x, Index x_stride, double* y, Index y_stride) const;

  Matrix to_dense() const;

 private:
  Vector column_;
  Index fft_size_ = 0;
  std::vector<double> spectrum_;  // real eigenvalues of the circulant
  std::shared_ptr<const detail::FftPlan> plan_;
};

/// One Kronecker factor: structured Toeplitz or a dense symmetric matrix.
using AxisOperator = std::variant<SymToeplitz, Matrix>;

Index axis_operator_size(const AxisOperator& op);
Matrix axis_operator_dense(const AxisOperator& op);

/// K = K_0 (x) K_1 (x) ... (x) K_{D-1} acting on vectors in flat grid order
/// (last axis fastest, see kLastAxisFastest).
class KronOperator {
 public:
  KronOperator() = default;
  explicit KronOperator(std::vector<AxisOperator> factors);

  Index size() const { return size_; }
  int num_factors() const { return static_cast<int>(factors_.size()); }
  const AxisOperator& factor(int d) const { return factors_[static_cast<std::size_t>(d)]; }
  Index factor_size(int d) const { return axis_operator_size(factor(d)); }

  /// Sequential mode-d products.
  Vector matvec(const Vector& v) const;

  Matrix to_dense() const;

 private:
  std::vector<AxisOperator> factors_;
  Index size_ = 0;
};

/// Applies a per-axis linear map to every fiber of a flat grid vector.
void apply_mode_product(const AxisOperator& op, int mode, const std::vector<Index>& sizes,
                        Vector& v);

/// Per-factor eigendecompositions K_d = Q_d V_d Q_d^T of a Kronecker
/// product; gives exact solves and log-determinants of K + sigma^2 I.
class KronEigen {
 public:
  /// Throws NotPositiveDefiniteError when a factor has an eigenvalue below
  /// -1e-8 times its largest one; smaller negative values are clamped to 0.
  static KronEigen decompose(const std::vector<Matrix>& factors);
  static KronEigen decompose(const KronOperator& K);

  Index size() const;
  int num_factors() const { return static_cast<int>(values_.size()); }
  const Vector& factor_eigenvalues(int d) const { return values_[static_cast<std::size_t>(d)]; }
  const Matrix& factor_eigenvectors(int d) const { return vectors_[static_cast<std::size_t>(d)]; }

  /// Global eigenvalues, products of factor eigenvalues in flat order.
  Vector eigenvalues() const;

  /// (K + noise_variance I)^{-1} y.
  Vector solve(double noise_variance, const Vector& y) const;
  /// log |K + noise_variance I| = sum_i log(V_ii + noise_variance).
  double logdet(double noise_variance) const;
  /// K^{1/2} x with the symmetric square root (x) Q_d V_d^{1/2} Q_d^T.
  Vector apply_sqrt(const Vector& x) const;

 private:
  std::vector<Vector> values_;
  std::vector<Matrix> vectors_;
};

}  // namespace warpski
