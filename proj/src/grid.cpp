#include "warpski/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "warpski/error.hpp"
#include "warpski/kernels.hpp"

namespace warpski {

namespace {

// Cell index i with axis[i] < x <= axis[i+1] (ties go left), clamped so
// that the stencil i-1 .. i+2 exists.
Index locate_cell(const Vector& axis, bool equispaced, double x) {
  const Index m = axis.size();
  Index i;
  if (equispaced) {
    const double h = (axis[m - 1] - axis[0]) / static_cast<double>(m - 1);
    i = static_cast<Index>(std::ceil((x - axis[0]) / h)) - 1;
    i = std::clamp<Index>(i, 0, m - 2);
    while (i + 1 < m - 1 && axis[i + 1] < x) ++i;
    while (i > 0 && axis[i] >= x) --i;
  } else {
    const auto it = std::lower_bound(axis.data(), axis.data() + m, x);
    i = static_cast<Index>(it - axis.data()) - 1;
  }
  return std::clamp<Index>(i, 1, m - 3);
}

std::string describe_point(std::span<const double> p) {
  std::ostringstream s;
  s.precision(10);
  s << "(";
  for (std::size_t d = 0; d < p.size(); ++d) s << (d ? ", " : "") << p[d];
  s << ")";
  return s.str();
}

// Fills one row of W given per-axis cells and 1-D weights.
void scatter_row(const std::vector<Index>& sizes, const std::vector<Index>& cells,
                 const std::vector<std::array<double, 4>>& weights, std::span<Index> out_idx,
                 std::span<double> out_val) {
  const int dims = static_cast<int>(sizes.size());
  std::vector<int> digit(static_cast<std::size_t>(dims), 0);
  std::vector<Index> multi(static_cast<std::size_t>(dims));
  const std::size_t stencil = out_idx.size();
  for (std::size_t s = 0; s < stencil; ++s) {
    double w = 1.0;
    for (int d = 0; d < dims; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      multi[ud] = cells[ud] - 1 + digit[ud];
      w *= weights[ud][static_cast<std::size_t>(digit[ud])];
    }
    out_idx[s] = flat_index(multi, sizes);
    out_val[s] = w;
    for (int d = dims - 1; d >= 0; --d) {
      auto& dg = digit[static_cast<std::size_t>(d)];
      if (++dg < 4) break;
      dg = 0;
    }
  }
}

}  // namespace

Index flat_index(std::span<const Index> multi, std::span<const Index> sizes) {
  static_assert(kLastAxisFastest);
  Index flat = 0;
  for (std::size_t d = 0; d < sizes.size(); ++d) flat = flat * sizes[d] + multi[d];
  return flat;
}

Box Box::bounding(const Points& points) {
  if (points.rows() == 0) throw DimensionError("bounding box of an empty point set");
  Box b;
  b.lo = points.colwise().minCoeff().transpose();
  b.hi = points.colwise().maxCoeff().transpose();
  return b;
}

Box Box::warped(const Warp& warp) const {
  if (warp.dims() != dims()) throw DimensionError("box and warp dimensions differ");
  Box out;
  if (warp.is_elementwise()) {
    out.lo.resize(dims());
    out.hi.resize(dims());
    for (int d = 0; d < dims(); ++d) {
      const auto& w = warp.axes()[static_cast<std::size_t>(d)];
      out.lo[d] = w.forward(lo[d]);
      out.hi[d] = w.forward(hi[d]);
    }
    return out;
  }
  const int corners = 1 << dims();
  for (int c = 0; c < corners; ++c) {
    Vector x(dims());
    for (int d = 0; d < dims(); ++d) x[d] = (c >> d) & 1 ? hi[d] : lo[d];
    const Vector z = warp.forward(std::span<const double>(x.data(), static_cast<std::size_t>(dims())));
    if (c == 0) {
      out.lo = z;
      out.hi = z;
    } else {
      out.lo = out.lo.cwiseMin(z);
      out.hi = out.hi.cwiseMax(z);
    }
  }
  return out;
}

Box Box::merged(const Box& other) const {
  if (other.dims() != dims()) throw DimensionError("cannot merge boxes of different dimension");
  return {lo.cwiseMin(other.lo), hi.cwiseMax(other.hi)};
}

InducingGrid InducingGrid::uniform(const std::vector<AxisSpec>& axes) {
  if (axes.empty()) throw GridError("grid needs at least one axis");
  std::vector<Vector> coords;
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const auto& a = axes[d];
    if (a.count < kMinAxisCount) {
      throw GridError("axis " + std::to_string(d) + " has " + std::to_string(a.count) +
                      " nodes; at least " + std::to_string(kMinAxisCount) + " are required");
    }
    if (!(a.min < a.max)) throw GridError("axis " + std::to_string(d) + " needs min < max");
    coords.push_back(Vector::LinSpaced(a.count, a.min, a.max));
  }
  InducingGrid g;
  g.axes_ = std::move(coords);
  g.equispaced_.assign(axes.size(), true);
  return g;
}

InducingGrid InducingGrid::from_axes(std::vector<Vector> axes) {
  if (axes.empty()) throw GridError("grid needs at least one axis");
  InducingGrid g;
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const Vector& a = axes[d];
    if (a.size() < kMinAxisCount) {
      throw GridError("axis " + std::to_string(d) + " has " + std::to_string(a.size()) +
                      " nodes; at least " + std::to_string(kMinAxisCount) + " are required");
    }
    for (Index j = 1; j < a.size(); ++j) {
      if (!(a[j] > a[j - 1])) {
        throw GridError("axis " + std::to_string(d) + " is not strictly increasing at index " +
                        std::to_string(j));
      }
    }
    g.equispaced_.push_back(first_nonuniform_index(a) < 0);
  }
  g.axes_ = std::move(axes);
  return g;
}

InducingGrid InducingGrid::covering(const Box& data_box, const std::vector<Index>& counts,
                                    int margin_cells) {
  if (static_cast<int>(counts.size()) != data_box.dims()) {
    throw DimensionError("need one node count per box dimension");
  }
  std::vector<AxisSpec> specs;
  for (int d = 0; d < data_box.dims(); ++d) {
    const Index count = counts[static_cast<std::size_t>(d)];
    const Index inner_cells = count - 1 - 2 * margin_cells;
    if (count < kMinAxisCount || inner_cells < 1) {
      throw GridError("axis " + std::to_string(d) + " has " + std::to_string(count) +
                      " nodes; at least " +
                      std::to_string(std::max<Index>(kMinAxisCount, 2 + 2 * margin_cells)) +
                      " are required for a margin of " + std::to_string(margin_cells) + " cells");
    }
    double lo = data_box.lo[d], hi = data_box.hi[d];
    if (!(hi > lo)) {
      const double pad = std::max(1.0, std::abs(lo)) * 1e-3;
      lo -= pad;
      hi += pad;
    }
    const double h = (hi - lo) / static_cast<double>(inner_cells);
    specs.push_back({lo - margin_cells * h, hi + margin_cells * h, count});
  }
  return uniform(specs);
}

std::vector<Index> InducingGrid::sizes() const {
  std::vector<Index> out;
  for (const auto& a : axes_) out.push_back(a.size());
  return out;
}

Index InducingGrid::total_size() const {
  Index m = 1;
  for (const auto& a : axes_) m *= a.size();
  return m;
}

bool InducingGrid::all_equispaced() const {
  return std::all_of(equispaced_.begin(), equispaced_.end(), [](bool b) { return b; });
}

double InducingGrid::spacing(int d) const {
  if (!equispaced(d)) throw GridError("axis " + std::to_string(d) + " is not equispaced");
  const Vector& a = axis(d);
  return (a[a.size() - 1] - a[0]) / static_cast<double>(a.size() - 1);
}

bool InducingGrid::in_safe_region(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dims()) return false;
  for (int d = 0; d < dims(); ++d) {
    const Vector& a = axis(d);
    const double x = p[static_cast<std::size_t>(d)];
    if (!(x >= a[1] && x <= a[a.size() - 2])) return false;
  }
  return true;
}

void InducingGrid::require_margin(const Box& box, int margin_cells) const {
  if (box.dims() != dims()) throw DimensionError("box and grid dimensions differ");
  for (int d = 0; d < dims(); ++d) {
    const Vector& a = axis(d);
    const Index m = a.size();
    const double tol = 1e-9 * std::max(1.0, a.cwiseAbs().maxCoeff());
    if (m <= 2 * margin_cells ||
        a[margin_cells] > box.lo[d] + tol || a[m - 1 - margin_cells] < box.hi[d] - tol) {
      std::ostringstream msg;
      msg << "grid axis " << d << " [" << a[0] << ", " << a[m - 1]
          << "] does not cover the data range [" << box.lo[d] << ", " << box.hi[d]
          << "] with a margin of " << margin_cells << " cells";
      throw GridError(msg.str());
    }
  }
}

Points InducingGrid::nodes() const {
  const auto sz = sizes();
  Points out(total_size(), dims());
  std::vector<Index> multi(sz.size(), 0);
  for (Index f = 0; f < out.rows(); ++f) {
    for (int d = 0; d < dims(); ++d) out(f, d) = axis(d)[multi[static_cast<std::size_t>(d)]];
    for (int d = dims() - 1; d >= 0; --d) {
      auto& md = multi[static_cast<std::size_t>(d)];
      if (++md < sz[static_cast<std::size_t>(d)]) break;
      md = 0;
    }
  }
  return out;
}

std::array<double, 4> cubic_weights(const std::array<double, 4>& x, double p) {
  std::array<double, 4> w{};
  for (int i = 0; i < 4; ++i) {
    double v = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j != i) v *= (p - x[j]) / (x[i] - x[j]);
    }
    w[i] = v;
  }
  return w;
}

InterpWeights::InterpWeights(Index rows, Index cols, int dims)
    : rows_(rows), cols_(cols), dims_(dims), stencil_(1 << (2 * dims)) {
  indices_.assign(static_cast<std::size_t>(rows * stencil_), 0);
  values_.assign(static_cast<std::size_t>(rows * stencil_), 0.0);
}

std::span<const Index> InterpWeights::row_indices(Index r) const {
  return {indices_.data() + r * stencil_, static_cast<std::size_t>(stencil_)};
}
std::span<const double> InterpWeights::row_values(Index r) const {
  return {values_.data() + r * stencil_, static_cast<std::size_t>(stencil_)};
}
std::span<Index> InterpWeights::row_indices(Index r) {
  return {indices_.data() + r * stencil_, static_cast<std::size_t>(stencil_)};
}
std::span<double> InterpWeights::row_values(Index r) {
  return {values_.data() + r * stencil_, static_cast<std::size_t>(stencil_)};
}

Vector InterpWeights::matvec(const Vector& v) const {
  if (v.size() != cols_) {
    throw DimensionError("W is " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         ", vector has length " + std::to_string(v.size()));
  }
  Vector out(rows_);
  const Index* idx = indices_.data();
  const double* val = values_.data();
  for (Index r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (int s = 0; s < stencil_; ++s) acc += val[s] * v[idx[s]];
    out[r] = acc;
    idx += stencil_;
    val += stencil_;
  }
  return out;
}

Vector InterpWeights::rmatvec(const Vector& v) const {
  if (v.size() != rows_) {
    throw DimensionError("W^T expects length " + std::to_string(rows_) + ", got " +
                         std::to_string(v.size()));
  }
  Vector out = Vector::Zero(cols_);
  const Index* idx = indices_.data();
  const double* val = values_.data();
  for (Index r = 0; r < rows_; ++r) {
    const double vr = v[r];
    for (int s = 0; s < stencil_; ++s) out[idx[s]] += val[s] * vr;
    idx += stencil_;
    val += stencil_;
  }
  return out;
}

Matrix InterpWeights::to_dense() const {
  Matrix D = Matrix::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r) {
    const auto idx = row_indices(r);
    const auto val = row_values(r);
    for (int s = 0; s < stencil_; ++s) D(r, idx[static_cast<std::size_t>(s)]) += val[static_cast<std::size_t>(s)];
  }
  return D;
}

InterpWeights interpolation_weights(const InducingGrid& grid, const Points& points) {
  if (points.cols() != grid.dims()) {
    throw DimensionError("points have " + std::to_string(points.cols()) +
                         " columns, grid has " + std::to_string(grid.dims()) + " axes");
  }
  const int dims = grid.dims();
  const auto sizes = grid.sizes();
  InterpWeights W(points.rows(), grid.total_size(), dims);
  std::vector<Index> cells(static_cast<std::size_t>(dims));
  std::vector<std::array<double, 4>> weights(static_cast<std::size_t>(dims));
  for (Index r = 0; r < points.rows(); ++r) {
    const std::span<const double> p(points.row(r).data(), static_cast<std::size_t>(dims));
    if (!grid.in_safe_region(p)) {
      throw OutOfGridError(static_cast<std::size_t>(r),
                           "point " + std::to_string(r) + " " + describe_point(p) +
                               " lies outside the grid's interpolation region");
    }
    for (int d = 0; d < dims; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const Vector& a = grid.axis(d);
      const Index i = locate_cell(a, grid.equispaced(d), p[ud]);
      cells[ud] = i;
      weights[ud] = cubic_weights({a[i - 1], a[i], a[i + 1], a[i + 2]}, p[ud]);
    }
    scatter_row(sizes, cells, weights, W.row_indices(r), W.row_values(r));
  }
  return W;
}

InducingGrid warped_grid(const InducingGrid& grid, const Warp& warp) {
  if (!warp.is_elementwise()) {
    throw DomainError("warped_grid needs an elementwise warp; general warps act on points");
  }
  if (warp.dims() != grid.dims()) throw DimensionError("grid and warp dimensions differ");
  std::vector<Vector> axes;
  for (int d = 0; d < grid.dims(); ++d) {
    const Vector& a = grid.axis(d);
    Vector out(a.size());
    for (Index j = 0; j < a.size(); ++j) out[j] = warp.axes()[static_cast<std::size_t>(d)].inverse(a[j]);
    axes.push_back(std::move(out));
  }
  return InducingGrid::from_axes(std::move(axes));
}

InterpWeights interpolation_weights_on_warped_grid(const InducingGrid& grid_hat, const Warp& warp,
                                                   const Points& X) {
  if (!warp.is_elementwise()) {
    throw DomainError("warped-grid interpolation needs an elementwise warp");
  }
  if (X.cols() != grid_hat.dims() || warp.dims() != grid_hat.dims()) {
    throw DimensionError("points, grid and warp dimensions differ");
  }
  const int dims = grid_hat.dims();
  const auto sizes = grid_hat.sizes();
  InterpWeights W(X.rows(), grid_hat.total_size(), dims);
  std::vector<Index> cells(static_cast<std::size_t>(dims));
  std::vector<std::array<double, 4>> weights(static_cast<std::size_t>(dims));
  for (Index r = 0; r < X.rows(); ++r) {
    const std::span<const double> p(X.row(r).data(), static_cast<std::size_t>(dims));
    if (!grid_hat.in_safe_region(p)) {
      throw OutOfGridError(static_cast<std::size_t>(r),
                           "point " + std::to_string(r) + " " + describe_point(p) +
                               " lies outside the warped grid's interpolation region");
    }
    for (int d = 0; d < dims; ++d) {
      const auto ud = static_cast<std::size_t>(d);
      const Warp1D& w = warp.axes()[ud];
      const Vector& a = grid_hat.axis(d);
      // The warp is increasing, so the cell found in input space is the cell
      // of the warped point in warped space.
      const Index i = locate_cell(a, false, p[ud]);
      cells[ud] = i;
      weights[ud] = cubic_weights(
          {w.forward(a[i - 1]), w.forward(a[i]), w.forward(a[i + 1]), w.forward(a[i + 2])},
          w.forward(p[ud]));
    }
    scatter_row(sizes, cells, weights, W.row_indices(r), W.row_values(r));
  }
  return W;
}

}  // namespace warpski
