#pragma once

#include <cmath>
#include <random>

#include "warpski/kernels.hpp"
#include "warpski/types.hpp"
#include "warpski/warping.hpp"

namespace test {

using warpski::Index;
using warpski::Matrix;
using warpski::Points;
using warpski::Vector;

inline double se(double amplitude, double lengthscale, double tau) {
  return amplitude * amplitude * std::exp(-0.5 * tau * tau / (lengthscale * lengthscale));
}

inline Points uniform_points(Index n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Points X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = u(gen);
  return X;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(gen);
  return v;
}

// Dense SE kernel on warped 1-D inputs, written out from the closed form.
inline Matrix dense_se(const Points& X, double amplitude, double lengthscale,
                       const warpski::Warp1D& warp) {
  const Index n = X.rows();
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      K(i, j) = se(amplitude, lengthscale, warp.forward(X(i, 0)) - warp.forward(X(j, 0)));
    }
  }
  return K;
}

inline double frobenius_rel(const Matrix& A, const Matrix& B) { return (A - B).norm() / B.norm(); }

}  // namespace test
