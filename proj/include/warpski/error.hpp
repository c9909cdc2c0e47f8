#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace warpski {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector / point / operator sizes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain where an operation is defined
/// (out-of-domain warp input, nonpositive hyperparameter, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An axis that must be equispaced is not.
class NotEquispacedError : public Error {
 public:
  NotEquispacedError(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Inducing grid is too small or does not cover the data with enough margin.
class GridError : public Error {
 public:
  using Error::Error;
};

/// A point falls outside the region where the cubic stencil is defined.
class OutOfGridError : public Error {
 public:
  OutOfGridError(std::size_t point_index, const std::string& what)
      : Error(what), point_index_(point_index) {}
  std::size_t point_index() const noexcept { return point_index_; }

 private:
  std::size_t point_index_;
};

/// Factorization or quadrature hit a nonpositive eigen/Ritz value.
/// Usually fixed by a larger noise floor (jitter).
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment / model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File parsing and writing failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace warpski
