#include "warpski/warping.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "warpski/error.hpp"

namespace warpski {

namespace {

constexpr int kMonotoneSamples = 1000;
constexpr int kMaxNewtonIterations = 100;
constexpr double kInverseTolerance = 1e-12;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] > v[k - 1])) {
      throw DomainError(std::string(what) + " must be strictly increasing (index " +
                        std::to_string(k) + ")");
    }
  }
}

}  // namespace

bool Interval::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

std::string to_string(WarpKind kind) {
  switch (kind) {
    case WarpKind::Identity:
      return "identity";
    case WarpKind::Polynomial1D:
      return "polynomial";
    case WarpKind::PiecewiseLinearPhase:
      return "piecewise_linear";
    case WarpKind::Elementwise:
      return "elementwise";
    case WarpKind::Affine:
      return "affine";
  }
  return "unknown";
}

Warp1D Warp1D::identity(Interval domain) {
  Warp1D w;
  w.kind_ = Kind::Identity;
  w.domain_ = domain;
  return w;
}

Warp1D Warp1D::polynomial(std::vector<double> coeffs, Interval domain, double offset) {
  if (coeffs.empty()) throw DomainError("polynomial warp needs at least one coefficient");
  if (!domain.bounded() || !(domain.lo < domain.hi)) {
    throw DomainError("polynomial warp needs a bounded domain with lo < hi");
  }
  Warp1D w;
  w.kind_ = Kind::Polynomial;
  w.domain_ = domain;
  w.coeffs_ = std::move(coeffs);
  w.offset_ = offset;
  for (int i = 0; i <= kMonotoneSamples; ++i) {
    const double x = domain.lo + (domain.hi - domain.lo) * i / kMonotoneSamples;
    if (!(w.deriv_unchecked(x) > 0.0)) {
      throw DomainError("polynomial warp is not strictly increasing at x = " + fmt(x));
    }
  }
  return w;
}

Warp1D Warp1D::piecewise_linear(std::vector<double> knots, std::vector<double> values,
                                Interval domain) {
  if (knots.size() < 2 || knots.size() != values.size()) {
    throw DomainError("piecewise-linear warp needs >= 2 knots with matching values");
  }
  require_increasing(knots, "warp knots");
  require_increasing(values, "warp knot values");
  Warp1D w;
  w.kind_ = Kind::PiecewiseLinear;
  w.domain_ = domain;
  w.knots_ = std::move(knots);
  w.values_ = std::move(values);
  return w;
}

double Warp1D::eval_unchecked(double x) const {
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Polynomial: {
      double acc = 0.0;
      for (double c : coeffs_) acc = acc * x + c;
      return acc * x + offset_;
    }
    case Kind::PiecewiseLinear: {
      const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin() - 1, 0));
      k = std::min(k, knots_.size() - 2);
      const double slope = (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
      return values_[k] + (x - knots_[k]) * slope;
    }
  }
  return x;
}

double Warp1D::deriv_unchecked(double x) const {
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::Polynomial: {
      // d/dx of sum c_i x^(N-i)
      const std::size_t n = coeffs_.size();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc = acc * x + static_cast<double>(n - i) * coeffs_[i];
      }
      return acc;
    }
    case Kind::PiecewiseLinear: {
      const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin() - 1, 0));
      k = std::min(k, knots_.size() - 2);
      return (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
    }
  }
  return 1.0;
}

Interval Warp1D::image() const {
  Interval out;
  out.lo = std::isfinite(domain_.lo) ? eval_unchecked(domain_.lo) : domain_.lo;
  out.hi = std::isfinite(domain_.hi) ? eval_unchecked(domain_.hi) : domain_.hi;
  return out;
}

double Warp1D::forward(double x) const {
  if (!domain_.contains(x)) {
    throw DomainError("warp input " + fmt(x) + " outside domain [" + fmt(domain_.lo) + ", " +
                      fmt(domain_.hi) + "]");
  }
  return eval_unchecked(x);
}

double Warp1D::derivative(double x) const {
  if (!domain_.contains(x)) throw DomainError("warp input " + fmt(x) + " outside domain");
  return deriv_unchecked(x);
}

double Warp1D::inverse(double z) const {
  const Interval img = image();
  if (!img.contains(z)) {
    throw DomainError("warped value " + fmt(z) + " outside warp image [" + fmt(img.lo) + ", " +
                      fmt(img.hi) + "]");
  }
  switch (kind_) {
    case Kind::Identity:
      return z;
    case Kind::PiecewiseLinear: {
      const auto it = std::upper_bound(values_.begin(), values_.end(), z);
      auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - values_.begin() - 1, 0));
      k = std::min(k, values_.size() - 2);
      const double slope = (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
      return knots_[k] + (z - values_[k]) / slope;
    }
    case Kind::Polynomial:
      break;
  }

  // Safeguarded Newton on the bracket [lo, hi]; phi is increasing.
  double lo = domain_.lo, hi = domain_.hi;
  double x = lo + (hi - lo) * (z - img.lo) / (img.hi - img.lo);
  double residual = eval_unchecked(x) - z;
  for (int it = 0; it < kMaxNewtonIterations && residual != 0.0; ++it) {
    if (residual < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double d = deriv_unchecked(x);
    double next = x - residual / d;
    if (!(d > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    residual = eval_unchecked(x) - z;
    if (step <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
  }
  if (std::abs(residual) > kInverseTolerance * std::max(1.0, std::abs(z))) {
    throw Error("polynomial warp inversion did not converge for z = " + fmt(z));
  }
  return x;
}

Warp1D phase_from_events(std::span<const double> event_times, bool two_pi_per_event) {
  if (event_times.size() < 2) throw DomainError("phase_from_events needs at least two events");
  std::vector<double> knots(event_times.begin(), event_times.end());
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (!(knots[k] > knots[k - 1])) {
      throw DomainError("event times must be strictly increasing (index " + std::to_string(k) +
                        ")");
    }
  }
  const double per_event = two_pi_per_event ? 2.0 * std::numbers::pi : 1.0;
  std::vector<double> phases(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) phases[k] = per_event * static_cast<double>(k);
  return Warp1D::piecewise_linear(std::move(knots), std::move(phases));
}

Warp::Warp(Warp1D axis) : dims_(1), affine_(false), axes_{std::move(axis)} {}

Warp Warp::identity(int dims) {
  if (dims < 1) throw DimensionError("warp needs dims >= 1");
  return elementwise(std::vector<Warp1D>(static_cast<std::size_t>(dims), Warp1D::identity()));
}

Warp Warp::elementwise(std::vector<Warp1D> axes) {
  if (axes.empty()) throw DimensionError("elementwise warp needs at least one axis");
  Warp w(axes.front());
  w.dims_ = static_cast<int>(axes.size());
  w.axes_ = std::move(axes);
  return w;
}

Warp Warp::affine(Matrix A, Vector b) {
  if (A.rows() != A.cols() || A.rows() != b.size() || A.rows() == 0) {
    throw DimensionError("affine warp needs a square matrix and matching shift");
  }
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw DomainError("affine warp matrix is singular");
  Warp w;
  w.dims_ = static_cast<int>(A.rows());
  w.affine_ = true;
  w.axes_.clear();
  w.A_inv_ = lu.inverse();
  w.A_ = std::move(A);
  w.b_ = std::move(b);
  return w;
}

WarpKind Warp::kind() const {
  if (affine_) return WarpKind::Affine;
  const bool all_identity = std::all_of(axes_.begin(), axes_.end(), [](const Warp1D& a) {
    return a.kind() == Warp1D::Kind::Identity;
  });
  if (all_identity) return WarpKind::Identity;
  if (dims_ == 1) {
    return axes_[0].kind() == Warp1D::Kind::Polynomial ? WarpKind::Polynomial1D
                                                       : WarpKind::PiecewiseLinearPhase;
  }
  return WarpKind::Elementwise;
}

Vector Warp::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dims_) {
    throw DimensionError("warp of dimension " + std::to_string(dims_) + " applied to a " +
                         std::to_string(x.size()) + "-dimensional point");
  }
  if (affine_) return A_ * Eigen::Map<const Vector>(x.data(), dims_) + b_;
  Vector z(dims_);
  for (int d = 0; d < dims_; ++d) z[d] = axes_[static_cast<std::size_t>(d)].forward(x[static_cast<std::size_t>(d)]);
  return z;
}

Vector Warp::inverse(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dims_) {
    throw DimensionError("warp of dimension " + std::to_string(dims_) + " inverted at a " +
                         std::to_string(z.size()) + "-dimensional point");
  }
  if (affine_) return A_inv_ * (Eigen::Map<const Vector>(z.data(), dims_) - b_);
  Vector x(dims_);
  for (int d = 0; d < dims_; ++d) x[d] = axes_[static_cast<std::size_t>(d)].inverse(z[static_cast<std::size_t>(d)]);
  return x;
}

Points Warp::forward(const Points& X) const {
  if (X.cols() != dims_) {
    throw DimensionError("warp of dimension " + std::to_string(dims_) + " applied to " +
                         std::to_string(X.cols()) + "-column points");
  }
  Points Z(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    Z.row(i) = forward(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(dims_))).transpose();
  }
  return Z;
}

Points Warp::inverse(const Points& Z) const {
  if (Z.cols() != dims_) {
    throw DimensionError("warp of dimension " + std::to_string(dims_) + " inverted at " +
                         std::to_string(Z.cols()) + "-column points");
  }
  Points X(Z.rows(), Z.cols());
  for (Index i = 0; i < Z.rows(); ++i) {
    X.row(i) = inverse(std::span<const double>(Z.row(i).data(), static_cast<std::size_t>(dims_))).transpose();
  }
  return X;
}

}  // namespace warpski
