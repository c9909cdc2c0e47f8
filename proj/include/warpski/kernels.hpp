#pragma once

#include <span>
#include <string>
#include <vector>

#include "warpski/types.hpp"

namespace warpski {

enum class KernelKind { SquaredExponential, Periodic, QuasiPeriodic, Product, Sum };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Positive hyperparameters held in log-space.
class Hyperparameters {
 public:
  Hyperparameters() = default;

  /// Throws DomainError unless every value is finite and > 0.
  static Hyperparameters from_values(const std::vector<double>& values);
  static Hyperparameters from_log(const Vector& log_values);

  Index size() const { return log_values_.size(); }
  double value(Index i) const { return values_[i]; }
  double log_value(Index i) const { return log_values_[i]; }
  const Vector& values() const { return values_; }
  const Vector& log_values() const { return log_values_; }

 private:
  Vector log_values_;
  Vector values_;
};

/// One per-axis factor of a separable product term, holding a copy of the
/// leaf's parameters. `amplitude` marks the factor that carries the leaf's
/// sigma_f^2 (the first axis of the leaf).
struct AxisFactor {
  KernelKind kind = KernelKind::SquaredExponential;
  Vector leaf_params;  // raw (positive) values, leaf order
  int leaf_axis = 0;
  bool amplitude = false;
  int param_offset = 0;  // index of the leaf's first parameter in the root vector

  double value(double lag) const;
  /// Derivatives w.r.t. the leaf's log-parameters (leaf parameter order).
  Vector grad(double lag) const;
};

/// k(tau) = prod_d factors[d](tau_d); factors are listed per input dimension.
struct SeparableTerm {
  std::vector<AxisFactor> factors;
};

/// Stationary covariance k(tau), tau = x - x'.
///
/// Leaf parameter order (positive values, stored as logs):
///   SquaredExponential: amplitude, lengthscale
///   Periodic:           amplitude, lengthscale, period
///   QuasiPeriodic:      amplitude, lengthscale, periodic_lengthscale, period
/// Composite kernels flatten their children depth first. A Product places its
/// children on consecutive, disjoint input dimensions; a Sum adds children of
/// equal arity.
///
/// Kernels are immutable values; composites own copies of their children.
class StationaryKernel {
 public:
  static StationaryKernel squared_exponential(double amplitude, double lengthscale, int dims = 1);
  static StationaryKernel periodic(double amplitude, double lengthscale, double period);
  static StationaryKernel quasi_periodic(double amplitude, double lengthscale,
                                         double periodic_lengthscale, double period);
  static StationaryKernel product(std::vector<StationaryKernel> factors);
  static StationaryKernel sum(std::vector<StationaryKernel> terms);

  KernelKind kind() const { return kind_; }
  int dims() const { return dims_; }
  bool is_leaf() const { return children_.empty(); }
  const Hyperparameters& params() const { return params_; }
  const std::vector<StationaryKernel>& children() const { return children_; }

  int num_params() const;
  Vector log_params() const;
  StationaryKernel with_log_params(const Vector& log_params) const;
  std::vector<std::string> param_names() const;

  /// k(tau). Throws DimensionError if lag.size() != dims().
  double eval(std::span<const double> lag) const;
  double eval(double lag) const { return eval(std::span<const double>(&lag, 1)); }

  /// d k(tau) / d log(theta_j) for every flattened parameter j.
  Vector grad(std::span<const double> lag) const;
  Vector grad(double lag) const { return grad(std::span<const double>(&lag, 1)); }

  /// k(0).
  double variance() const;

  /// Smallest correlation length across the kernel. For periodic factors the
  /// local SE-equivalent width periodic_lengthscale * period / (2 pi) is used.
  double min_lengthscale() const;

  /// Expansion into a sum of per-axis products. Product-of-sum kernels are
  /// distributed; the result always has at least one term.
  std::vector<SeparableTerm> separable_terms() const;

 private:
  StationaryKernel(KernelKind kind, int dims, Hyperparameters params,
                   std::vector<StationaryKernel> children);

  void collect_terms(int dim_offset, int param_offset, std::vector<SeparableTerm>& out) const;
  void grad_into(std::span<const double> lag, double* out) const;
  void names_into(const std::string& prefix, std::vector<std::string>& out) const;
  StationaryKernel rebuild(const double*& cursor) const;

  KernelKind kind_ = KernelKind::SquaredExponential;
  int dims_ = 1;
  Hyperparameters params_;
  std::vector<StationaryKernel> children_;
};

/// First column of the kernel matrix over an equispaced 1-D axis:
/// c[j] = k(axis[j] - axis[0]). Throws NotEquispacedError (relative tolerance
/// 1e-9 on the spacing) naming the first offending index.
Vector toeplitz_column(const StationaryKernel& kernel_1d, const Vector& axis);

/// Same column for one per-axis factor of a separable term.
Vector factor_column(const AxisFactor& factor, const Vector& axis);

/// Relative tolerance used to decide whether an axis is equispaced.
inline constexpr double kEquispacedTolerance = 1e-9;

/// Index of the first spacing that deviates from axis[1]-axis[0] by more than
/// kEquispacedTolerance (relative), or -1 when the axis is equispaced.
Index first_nonuniform_index(const Vector& axis);

}  // namespace warpski
