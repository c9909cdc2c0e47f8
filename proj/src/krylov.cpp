#include "warpski/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <string>

#include "warpski/error.hpp"

namespace warpski {

CgReport cg_solve(const MatVec& apply, const Vector& y, const CgOptions& options) {
  if (!(options.tolerance > 0.0)) throw DomainError("CG tolerance must be positive");
  CgReport rep;
  rep.solution = Vector::Zero(y.size());
  const double ynorm = y.norm();
  if (ynorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  Vector r = y;
  Vector z = options.preconditioner ? options.preconditioner(r) : r;
  Vector p = z;
  double rz = r.dot(z);
  rep.relative_residual = 1.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Vector Ap = apply(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) {
      throw NotPositiveDefiniteError("CG met a direction with p^T K p = " + std::to_string(pAp));
    }
    const double a = rz / pAp;
    rep.solution += a * p;
    r -= a * Ap;
    rep.iterations = it + 1;
    rep.relative_residual = r.norm() / ynorm;
    if (rep.relative_residual <= options.tolerance) {
      rep.converged = true;
      return rep;
    }
    z = options.preconditioner ? options.preconditioner(r) : r;
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return rep;
}

Matrix LanczosFactor::tridiagonal() const {
  Matrix T = Matrix::Zero(steps, steps);
  for (int j = 0; j < steps; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  return T;
}

Vector LanczosFactor::ritz_values() const {
  if (steps == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(tridiagonal(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

namespace {

// Relative size of beta below which the Krylov space is taken as invariant.
constexpr double kBreakdown = 1e-12;

}  // namespace

LanczosFactor lanczos(const MatVec& apply, const Vector& start, int k) {
  const Index n = start.size();
  if (k < 1 || k > n) {
    throw DimensionError("Lanczos needs 1 <= k <= n, got k=" + std::to_string(k) +
                         " for n=" + std::to_string(n));
  }
  const double snorm = start.norm();
  if (!(snorm > 0.0)) throw DomainError("Lanczos start vector is zero");

  Matrix Q(n, k);
  Vector alpha(k), beta(k);
  Q.col(0) = start / snorm;
  double scale = 0.0;
  int steps = 0;
  bool breakdown = false;
  for (int j = 0; j < k; ++j) {
    Vector w = apply(Q.col(j));
    scale = std::max(scale, w.norm());
    double a = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = Q.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * h;
      a += h[j];
    }
    alpha[j] = a;
    steps = j + 1;
    if (j + 1 == k) break;
    const double b = w.norm();
    if (b <= kBreakdown * scale) {
      breakdown = true;
      break;
    }
    beta[j] = b;
    Q.col(j + 1) = w / b;
  }
  LanczosFactor f;
  f.steps = steps;
  f.alpha = alpha.head(steps);
  f.beta = beta.head(std::max(steps - 1, 0));
  f.basis = Q.leftCols(steps);
  f.breakdown = breakdown;
  return f;
}

ProbeSet ProbeSet::rademacher(Index n, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("need at least one probe vector");
  ProbeSet p;
  p.count = count;
  p.seed = seed;
  p.vectors.resize(n, count);
  std::mt19937_64 gen(seed);
  std::uint64_t bits = 0;
  int left = 0;
  for (int c = 0; c < count; ++c) {
    for (Index i = 0; i < n; ++i) {
      if (left == 0) {
        bits = gen();
        left = 64;
      }
      p.vectors(i, c) = (bits & 1U) ? 1.0 : -1.0;
      bits >>= 1U;
      --left;
    }
  }
  return p;
}

namespace {

struct Quadrature {
  Vector nodes;    // Ritz values
  Vector weights;  // squared first eigenvector components
  Matrix vectors;  // eigenvectors of T
};

Quadrature gauss_quadrature(const Matrix& T) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(T);
  if (es.info() != Eigen::Success) throw Error("tridiagonal eigendecomposition failed");
  Quadrature q;
  q.nodes = es.eigenvalues();
  q.vectors = es.eigenvectors();
  q.weights = q.vectors.row(0).transpose().array().square();
  if (q.nodes.minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError("Lanczos produced a nonpositive Ritz value " +
                                   std::to_string(q.nodes.minCoeff()) +
                                   "; the operator is not positive definite (add jitter)");
  }
  return q;
}

double quadrature_log(const Quadrature& q) {
  return q.weights.dot(q.nodes.array().log().matrix());
}

void check_probes(Index n, const ProbeSet& probes) {
  if (probes.vectors.rows() != n) {
    throw DimensionError("probe vectors have length " + std::to_string(probes.vectors.rows()) +
                         ", operator size is " + std::to_string(n));
  }
}

}  // namespace

double slq_logdet(const MatVec& apply, Index n, const ProbeSet& probes, int k) {
  check_probes(n, probes);
  const int steps = static_cast<int>(std::min<Index>(k, n));
  double total = 0.0;
  for (int c = 0; c < probes.count; ++c) {
    const Vector z = probes.vectors.col(c);
    const LanczosFactor f = lanczos(apply, z, steps);
    total += z.squaredNorm() * quadrature_log(gauss_quadrature(f.tridiagonal()));
  }
  return total / probes.count;
}

SlqLogdetGradient slq_logdet_with_gradient(const MatVec& apply, const DerivativeMatVec& derivative,
                                           int num_params, Index n, const ProbeSet& probes,
                                           int k) {
  check_probes(n, probes);
  const int kmax = static_cast<int>(std::min<Index>(k, n));
  const auto P = static_cast<std::size_t>(num_params);
  SlqLogdetGradient out;
  out.gradient = Vector::Zero(num_params);

  for (int c = 0; c < probes.count; ++c) {
    const Vector z = probes.vectors.col(c);
    Matrix Q(n, kmax);
    std::vector<Matrix> dQ(P, Matrix::Zero(n, kmax));
    Vector alpha(kmax), beta(kmax);
    Matrix dalpha = Matrix::Zero(num_params, kmax), dbeta = Matrix::Zero(num_params, kmax);
    Q.col(0) = z / z.norm();
    double scale = 0.0;
    int steps = 0;
    for (int j = 0; j < kmax; ++j) {
      const Vector qj = Q.col(j);
      Vector w = apply(qj);
      std::vector<Vector> dw(P);
      for (std::size_t p = 0; p < P; ++p) {
        dw[p] = derivative(static_cast<int>(p), qj) + apply(dQ[p].col(j));
      }
      scale = std::max(scale, w.norm());
      const auto Qj = Q.leftCols(j + 1);
      double a = 0.0;
      Vector da = Vector::Zero(num_params);
      for (int pass = 0; pass < 2; ++pass) {
        const Vector h = Qj.transpose() * w;
        for (std::size_t p = 0; p < P; ++p) {
          const auto dQj = dQ[p].leftCols(j + 1);
          const Vector dh = dQj.transpose() * w + Qj.transpose() * dw[p];
          dw[p] -= dQj * h + Qj * dh;
          da[static_cast<Index>(p)] += dh[j];
        }
        w -= Qj * h;
        a += h[j];
      }
      alpha[j] = a;
      dalpha.col(j) = da;
      steps = j + 1;
      if (j + 1 == kmax) break;
      const double b = w.norm();
      if (b <= kBreakdown * scale) break;
      beta[j] = b;
      Q.col(j + 1) = w / b;
      for (std::size_t p = 0; p < P; ++p) {
        const double db = w.dot(dw[p]) / b;
        dbeta(static_cast<Index>(p), j) = db;
        dQ[p].col(j + 1) = (dw[p] - db * Q.col(j + 1)) / b;
      }
    }

    Matrix T = Matrix::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    const Quadrature q = gauss_quadrature(T);
    const double zz = z.squaredNorm();
    out.value += zz * quadrature_log(q);

    // d(e1^T log(T) e1) = sum_ab G_ab dT_ab with G = V (v v^T o L) V^T,
    // L the divided differences of log at the Ritz values.
    const Vector v = q.vectors.row(0).transpose();
    Matrix M(steps, steps);
    for (int a = 0; a < steps; ++a) {
      for (int b = 0; b < steps; ++b) {
        const double la = q.nodes[a], lb = q.nodes[b];
        const double L = std::abs(la - lb) <= 1e-12 * std::max(la, lb)
                             ? 2.0 / (la + lb)
                             : (std::log(la) - std::log(lb)) / (la - lb);
        M(a, b) = v[a] * v[b] * L;
      }
    }
    const Matrix G = q.vectors * M * q.vectors.transpose();
    for (int p = 0; p < num_params; ++p) {
      double g = 0.0;
      for (int j = 0; j < steps; ++j) {
        g += G(j, j) * dalpha(p, j);
        if (j + 1 < steps) g += 2.0 * G(j, j + 1) * dbeta(p, j);
      }
      out.gradient[p] += zz * g;
    }
  }
  out.value /= probes.count;
  out.gradient /= probes.count;
  return out;
}

NlmlGradientReport slq_nlml_gradient(const MatVec& apply, const DerivativeMatVec& derivative,
                                     int num_params, const Vector& alpha, const ProbeSet& probes,
                                     const CgOptions& cg) {
  check_probes(alpha.size(), probes);
  NlmlGradientReport rep;
  rep.data_term = Vector::Zero(num_params);
  rep.trace_term = Vector::Zero(num_params);
  for (int j = 0; j < num_params; ++j) rep.data_term[j] = -alpha.dot(derivative(j, alpha));

  for (int c = 0; c < probes.count; ++c) {
    const Vector z = probes.vectors.col(c);
    const CgReport s = cg_solve(apply, z, cg);
    rep.max_probe_iterations = std::max(rep.max_probe_iterations, s.iterations);
    rep.probes_converged = rep.probes_converged && s.converged;
    for (int j = 0; j < num_params; ++j) rep.trace_term[j] += s.solution.dot(derivative(j, z));
  }
  rep.trace_term /= probes.count;
  rep.gradient = 0.5 * (rep.data_term + rep.trace_term);
  return rep;
}

}  // namespace warpski
