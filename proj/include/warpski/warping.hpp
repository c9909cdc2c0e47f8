#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "warpski/types.hpp"

namespace warpski {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool bounded() const;
};

enum class WarpKind { Identity, Polynomial1D, PiecewiseLinearPhase, Elementwise, Affine };

std::string to_string(WarpKind kind);

/// Strictly increasing map of one coordinate.
class Warp1D {
 public:
  enum class Kind { Identity, Polynomial, PiecewiseLinear };

  static Warp1D identity(Interval domain = {});

  /// phi(x) = offset + sum_i coeffs[i] * x^(N - i), N = coeffs.size(); the
  /// highest power comes first and the last coefficient multiplies x, so
  /// {2, 0, 1} is 2x^3 + x. The domain must be bounded; the derivative is
  /// checked positive at 1000 points and DomainError is thrown otherwise.
  static Warp1D polynomial(std::vector<double> coeffs, Interval domain, double offset = 0.0);

  /// Linear interpolation through (knots[k], values[k]) with both sequences
  /// strictly increasing; extrapolated with the first/last segment's slope.
  static Warp1D piecewise_linear(std::vector<double> knots, std::vector<double> values,
                                 Interval domain = {});

  Kind kind() const { return kind_; }
  const Interval& domain() const { return domain_; }
  Interval image() const;
  const std::vector<double>& coefficients() const { return coeffs_; }
  double offset() const { return offset_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& knot_values() const { return values_; }

  /// Throws DomainError outside domain().
  double forward(double x) const;
  /// Throws DomainError outside image(). Polynomials are inverted by
  /// safeguarded Newton with bisection fallback.
  double inverse(double z) const;
  double derivative(double x) const;

 private:
  double eval_unchecked(double x) const;
  double deriv_unchecked(double x) const;

  Kind kind_ = Kind::Identity;
  Interval domain_;
  std::vector<double> coeffs_;
  double offset_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Phase function built from event annotations (e.g. R peaks): phi(t_k) = c*k
/// with c = 2 pi (or 1 when two_pi_per_event is false), linear in between and
/// extrapolated with the adjacent slope. Throws DomainError for fewer than
/// two events or non-increasing times.
Warp1D phase_from_events(std::span<const double> event_times, bool two_pi_per_event = true);

/// Invertible coordinate map R^D -> R^D. Either elementwise (one Warp1D per
/// axis) or affine z = A x + b, the latter standing in for general
/// non-elementwise warps.
class Warp {
 public:
  Warp() : Warp(identity(1)) {}
  Warp(Warp1D axis);  // NOLINT(google-explicit-constructor): a 1-D warp is a Warp

  static Warp identity(int dims);
  static Warp elementwise(std::vector<Warp1D> axes);
  static Warp affine(Matrix A, Vector b);

  WarpKind kind() const;
  int dims() const { return dims_; }
  bool is_elementwise() const { return !affine_; }
  const std::vector<Warp1D>& axes() const { return axes_; }
  const Matrix& linear() const { return A_; }
  const Vector& shift() const { return b_; }

  Vector forward(std::span<const double> x) const;
  Vector inverse(std::span<const double> z) const;
  Points forward(const Points& X) const;
  Points inverse(const Points& Z) const;

 private:
  int dims_ = 1;
  bool affine_ = false;
  std::vector<Warp1D> axes_;
  Matrix A_;
  Matrix A_inv_;
  Vector b_;
};

}  // namespace warpski
