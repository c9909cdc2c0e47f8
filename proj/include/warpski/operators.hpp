#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "warpski/grid.hpp"
#include "warpski/kernels.hpp"
#include "warpski/structured.hpp"
#include "warpski/types.hpp"
#include "warpski/warping.hpp"

namespace warpski {

/// How the (warped-space) inducing grid of a component is sized.
struct GridSpec {
  /// Explicit node count per axis; empty means "derive from density".
  std::vector<Index> counts;
  /// Nodes per smallest kernel lengthscale when counts is empty.
  double points_per_lengthscale = 4.0;
  /// Input-space box the grid must cover in addition to the data (e.g. the
  /// prediction region).
  std::optional<Box> box;
};

/// One additive source: stationary separable kernel on warped inputs.
struct ComponentSpec {
  std::string name;
  StationaryKernel kernel;
  Warp warp;
  GridSpec grid;
};

/// Equispaced warped-space grid for a component, covering warp(X) (and
/// warp(spec.grid.box) if given) with the standard margin.
InducingGrid component_grid(const ComponentSpec& spec, const Points& X);

/// K_UU for a kernel on an equispaced grid: one Kronecker product of
/// per-axis Toeplitz factors per separable term (dense factor for axes that
/// are not equispaced).
std::vector<KronOperator> build_kuu(const StationaryKernel& kernel, const InducingGrid& grid);

/// W K_UU W^T for one warped component. The weights are built once on the
/// warped points and shared between copies; changing hyperparameters only
/// rebuilds the Toeplitz columns.
class SkiComponent {
 public:
  static SkiComponent build(const ComponentSpec& spec, const Points& X);
  /// Same grid and weights, explicit grid.
  static SkiComponent build(const ComponentSpec& spec, const InducingGrid& grid, const Points& X);

  SkiComponent with_kernel(const StationaryKernel& kernel) const;

  const std::string& name() const { return name_; }
  const StationaryKernel& kernel() const { return kernel_; }
  const Warp& warp() const { return warp_; }
  const InducingGrid& grid() const { return *grid_; }
  const InterpWeights& weights() const { return *weights_; }
  const std::vector<KronOperator>& kuu_terms() const { return kuu_; }
  Index rows() const { return weights_->rows(); }
  int num_params() const { return kernel_.num_params(); }

  Vector kuu_matvec(const Vector& u) const;
  /// (d K_UU / d log theta_j) u for kernel parameter j.
  Vector kuu_derivative_matvec(int param, const Vector& u) const;

  /// W K_UU W^T v.
  Vector matvec(const Vector& v) const;
  Vector derivative_matvec(int param, const Vector& v) const;

  /// Cross-covariance rows for new points: W_* K_UU W^T v.
  Vector cross_matvec(const InterpWeights& rows_star, const Vector& v) const;

  /// Desk-scale helpers.
  Matrix kuu_dense() const;
  Matrix to_dense() const;

 private:
  struct DerivativeFactor {
    int term = 0;
    int axis = 0;
    int param = 0;
    AxisOperator op;
  };

  SkiComponent(std::string name, StationaryKernel kernel, Warp warp,
               std::shared_ptr<const InducingGrid> grid,
               std::shared_ptr<const InterpWeights> weights);
  void rebuild_kernel_structure();

  std::string name_;
  StationaryKernel kernel_;
  Warp warp_;
  std::shared_ptr<const InducingGrid> grid_;
  std::shared_ptr<const InterpWeights> weights_;
  std::vector<KronOperator> kuu_;
  std::vector<DerivativeFactor> derivatives_;
};

/// K = sum_i W_i K_UiUi W_i^T + sigma^2 I. Parameters are the components'
/// kernel log-parameters in order, followed by log(sigma).
class MixtureOperator {
 public:
  MixtureOperator(std::vector<SkiComponent> components, double noise_std, Index n);
  static MixtureOperator build(const std::vector<ComponentSpec>& specs, double noise_std,
                               const Points& X);

  Index size() const { return n_; }
  int num_components() const { return static_cast<int>(components_.size()); }
  const SkiComponent& component(int i) const { return components_[static_cast<std::size_t>(i)]; }
  const std::vector<SkiComponent>& components() const { return components_; }
  int num_params() const;
  double noise_std() const { return noise_std_; }
  double noise_variance() const { return noise_std_ * noise_std_; }

  Vector log_params() const;
  MixtureOperator with_log_params(const Vector& log_params) const;

  Vector matvec(const Vector& v) const;
  /// W_i K_UiUi W_i^T v, no noise.
  Vector component_matvec(int i, const Vector& v) const;
  /// (dK / d log theta_j) v; the last index is log(sigma) with dK = 2 sigma^2 I.
  Vector derivative_matvec(int which, const Vector& v) const;

  /// Explicitly assembled approximate kernel (desk scale).
  Matrix to_dense() const;

 private:
  std::vector<SkiComponent> components_;
  double noise_std_ = 1.0;
  Index n_ = 0;
};

}  // namespace warpski
