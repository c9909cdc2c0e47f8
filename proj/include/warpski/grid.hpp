#pragma once

#include <array>
#include <span>
#include <vector>

#include "warpski/types.hpp"
#include "warpski/warping.hpp"

namespace warpski {

/// Flattening convention shared by interpolation weights and Kronecker
/// operators: lexicographic multi-index with the LAST axis varying fastest,
///   flat = ((i_0 * m_1 + i_1) * m_2 + i_2) ...
/// Every grid-indexed vector in the library uses this order.
inline constexpr bool kLastAxisFastest = true;

Index flat_index(std::span<const Index> multi, std::span<const Index> sizes);

/// Axis-aligned bounding box.
struct Box {
  Vector lo;
  Vector hi;

  int dims() const { return static_cast<int>(lo.size()); }
  static Box bounding(const Points& points);
  /// Image of the box under an elementwise or affine warp (bounding box of
  /// the mapped corners; exact for both warp families).
  Box warped(const Warp& warp) const;
  Box merged(const Box& other) const;
};

struct AxisSpec {
  double min = 0.0;
  double max = 1.0;
  Index count = 0;
};

/// Minimum nodes per axis: a 4-point stencil plus two margin cells per side.
inline constexpr Index kMinAxisCount = 8;
/// Margin, in grid cells, kept between the data box and the grid boundary.
inline constexpr int kMarginCells = 2;

/// Rectilinear lattice given by per-axis strictly increasing coordinates.
class InducingGrid {
 public:
  InducingGrid() = default;

  /// Equispaced axes {min, min + h, ..., max}. Throws GridError when
  /// count < kMinAxisCount or min >= max.
  static InducingGrid uniform(const std::vector<AxisSpec>& axes);

  /// Explicit axes; equispacing is detected per axis.
  static InducingGrid from_axes(std::vector<Vector> axes);

  /// Equispaced grid with `counts[d]` nodes per axis whose span contains the
  /// box plus `margin_cells` spacings on both sides.
  static InducingGrid covering(const Box& data_box, const std::vector<Index>& counts,
                               int margin_cells = kMarginCells);

  int dims() const { return static_cast<int>(axes_.size()); }
  Index size(int d) const { return axes_[static_cast<std::size_t>(d)].size(); }
  std::vector<Index> sizes() const;
  Index total_size() const;
  const Vector& axis(int d) const { return axes_[static_cast<std::size_t>(d)]; }
  const std::vector<Vector>& axes() const { return axes_; }
  bool equispaced(int d) const { return equispaced_[static_cast<std::size_t>(d)]; }
  bool all_equispaced() const;
  /// Spacing of an equispaced axis (GridError otherwise).
  double spacing(int d) const;

  /// True when the cubic stencil is defined at p: axis[1] <= p_d <= axis[m-2].
  bool in_safe_region(std::span<const double> p) const;

  /// Throws GridError unless every axis extends at least `margin_cells`
  /// spacings (local spacing for non-uniform axes) beyond the box.
  void require_margin(const Box& box, int margin_cells = kMarginCells) const;

  /// Coordinates of every node, in flat order.
  Points nodes() const;

 private:
  std::vector<Vector> axes_;
  std::vector<bool> equispaced_;
};

/// Cubic interpolation weights of x against four increasing nodes, x in
/// [nodes[1], nodes[2]]: the Lagrange basis polynomials of the stencil.
/// Weights sum to one and reproduce cubics exactly on any stencil; at a cell
/// midpoint of a uniform stencil they are (-1/16, 9/16, 9/16, -1/16).
std::array<double, 4> cubic_weights(const std::array<double, 4>& nodes, double x);

/// Sparse n x m interpolation matrix with exactly 4^D entries per row.
class InterpWeights {
 public:
  InterpWeights() = default;
  InterpWeights(Index rows, Index cols, int dims);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  int dims() const { return dims_; }
  int stencil() const { return stencil_; }

  std::span<const Index> row_indices(Index r) const;
  std::span<const double> row_values(Index r) const;
  std::span<Index> row_indices(Index r);
  std::span<double> row_values(Index r);

  /// W v (length n).
  Vector matvec(const Vector& v) const;
  /// W^T v (length m).
  Vector rmatvec(const Vector& v) const;

  Matrix to_dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  int dims_ = 0;
  int stencil_ = 0;
  std::vector<Index> indices_;
  std::vector<double> values_;
};

/// W between `points` (already in the grid's coordinate system) and the
/// grid nodes. Throws OutOfGridError for the first point outside the safe
/// region.
InterpWeights interpolation_weights(const InducingGrid& grid, const Points& points);

/// Input-space inducing grid U_hat = warp^{-1}(U) for an elementwise warp
/// (or any 1-D warp). Requires every node inside the warp's image.
InducingGrid warped_grid(const InducingGrid& grid, const Warp& warp);

/// Interpolation between raw inputs X and an input-space grid U_hat, with
/// the stencil arithmetic carried out on warped coordinates. Produces the
/// same matrix as interpolation_weights(U, warp(X)) up to round-off.
InterpWeights interpolation_weights_on_warped_grid(const InducingGrid& grid_hat, const Warp& warp,
                                                   const Points& X);

}  // namespace warpski
