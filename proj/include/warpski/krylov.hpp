#pragma once

#include <cstdint>
#include <functional>

#include "warpski/types.hpp"

namespace warpski {

/// Matrix-free access to a symmetric operator.
using MatVec = std::function<Vector(const Vector&)>;
/// (dK / d theta_j) v.
using DerivativeMatVec = std::function<Vector(int, const Vector&)>;

struct CgOptions {
  double tolerance = 1e-8;  // on ||K x - y|| / ||y||
  int max_iterations = 1000;
  /// Optional M^{-1} v; empty means no preconditioning.
  MatVec preconditioner;
};

struct CgReport {
  Vector solution;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Linear conjugate gradients from x0 = 0. Never throws on
/// non-convergence; check CgReport::converged.
CgReport cg_solve(const MatVec& apply, const Vector& y, const CgOptions& options = {});

struct LanczosFactor {
  Vector alpha;  // diagonal, length steps
  Vector beta;   // off-diagonal, length steps - 1
  Matrix basis;  // n x steps, orthonormal columns
  int steps = 0;
  bool breakdown = false;  // stopped early on an invariant subspace

  Matrix tridiagonal() const;
  Vector ritz_values() const;
};

/// k steps of Lanczos with full (twice classical Gram-Schmidt)
/// reorthogonalization, started from start / ||start||.
LanczosFactor lanczos(const MatVec& apply, const Vector& start, int k);

/// Rademacher probe vectors, reproducible bit-for-bit from the seed.
struct ProbeSet {
  int count = 0;
  std::uint64_t seed = 0;
  Matrix vectors;  // n x count, entries +-1

  static ProbeSet rademacher(Index n, int count, std::uint64_t seed);
};

/// Gauss quadrature estimate of log|K| from k-step Lanczos runs on each
/// probe. Throws NotPositiveDefiniteError on a nonpositive Ritz value.
double slq_logdet(const MatVec& apply, Index n, const ProbeSet& probes, int k);

struct SlqLogdetGradient {
  double value = 0.0;
  Vector gradient;
};

/// Same estimate as slq_logdet together with its exact derivative with
/// respect to each parameter, obtained by differentiating the Lanczos
/// recurrence (tangent mode). The gradient is the derivative of the seeded
/// estimator itself, so it agrees with finite differences of slq_logdet.
/// Costs two extra MVMs per parameter per Lanczos step.
SlqLogdetGradient slq_logdet_with_gradient(const MatVec& apply, const DerivativeMatVec& derivative,
                                           int num_params, Index n, const ProbeSet& probes, int k);

struct NlmlGradientReport {
  /// d NLML / d theta_j with NLML = (y^T K^-1 y + log|K| + n log 2 pi) / 2.
  Vector gradient;
  /// -alpha^T dK_j alpha.
  Vector data_term;
  /// mean over probes of (K^-1 z)^T dK_j z, an estimate of tr(K^-1 dK_j).
  Vector trace_term;
  int max_probe_iterations = 0;
  bool probes_converged = true;
};

/// Stochastic trace estimate of the NLML gradient given alpha = K^-1 y.
/// Probe solves use the same CG options as alpha.
NlmlGradientReport slq_nlml_gradient(const MatVec& apply, const DerivativeMatVec& derivative,
                                     int num_params, const Vector& alpha, const ProbeSet& probes,
                                     const CgOptions& cg);

}  // namespace warpski
