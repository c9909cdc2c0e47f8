#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpski/krylov.hpp"
#include "warpski/operators.hpp"

namespace warpski {

/// Log-normal hyper-prior on a positive parameter, given by its mode and the
/// standard deviation of its logarithm.
struct LogNormalPrior {
  double mode = 1.0;
  double log_std = 1.0;

  /// -log density as a function of u = log(value), up to a constant, and its
  /// u-derivative. Minimal at u = log(mode).
  double penalty(double u, double* derivative = nullptr) const;
};

/// Additive mixture of warped stationary GPs plus white noise.
///
/// The flat parameter vector theta holds every component's kernel
/// log-parameters (component order, then kernel order) followed by
/// log(noise_std).
struct GpModel {
  std::vector<ComponentSpec> components;
  double noise_std = 1.0;
  /// Per theta entry; empty means all free.
  std::vector<bool> fixed;
  /// Per theta entry; empty or nullopt means no prior.
  std::vector<std::optional<LogNormalPrior>> priors;

  int num_params() const;
  Vector log_params() const;
  GpModel with_log_params(const Vector& theta) const;
  /// "component.param" names plus "noise_std".
  std::vector<std::string> param_names() const;
  int param_index(const std::string& name) const;

  bool is_fixed(int i) const;
  void set_fixed(const std::string& name, bool value = true);
  void set_prior(const std::string& name, LogNormalPrior prior);
  /// Sum of the hyper-prior penalties; gradient added into *grad if given.
  double prior_penalty(const Vector& theta, Vector* grad = nullptr) const;
};

// ---- exact dense oracle -----------------------------------------------------

/// k_j(phi_j(a), phi_j(b)) for every pair of rows.
Matrix dense_component_kernel(const ComponentSpec& spec, const Points& A, const Points& B);
/// sum_j k_j(phi_j(x), phi_j(x')) + sigma^2 I.
Matrix dense_kernel(const GpModel& model, const Points& X);

struct NlmlResult {
  double value = 0.0;
  Vector gradient;  // d value / d theta, same order as GpModel::log_params
  double data_fit = 0.0;  // y^T K^-1 y
  double logdet = 0.0;
};

/// (y^T K^-1 y + log|K| + n log 2 pi) / 2 by dense Cholesky. The gradient is
/// (tr(K^-1 dK) - alpha^T dK alpha) / 2. Throws NotPositiveDefiniteError if
/// the factorization fails.
NlmlResult exact_nlml(const GpModel& model, const Points& X, const Vector& y,
                      bool with_gradient = true);

struct ExactPosterior {
  Vector alpha;
  std::vector<Vector> means;  // per component at X
};

/// Dense per-component posterior means k_j(X, X) K^-1 y.
ExactPosterior exact_separate(const GpModel& model, const Points& X, const Vector& y);
/// Dense predictive mean sum_j k_j(X*, X) K^-1 y.
Vector exact_predict_mean(const GpModel& model, const Points& X, const Vector& y,
                          const Points& Xstar);

// ---- approximate path ------------------------------------------------------

enum class GradientMethod {
  /// tr(K^-1 dK) estimated as mean z^T K^-1 dK z with CG probe solves.
  StochasticTrace,
  /// Derivative of the seeded Lanczos log-determinant estimate itself.
  LanczosTangent,
};

struct ApproxOptions {
  int probes = 20;
  std::uint64_t seed = 0;
  int lanczos_steps = 30;
  CgOptions cg{1e-2, 1000, {}};
  GradientMethod gradient = GradientMethod::StochasticTrace;
};

struct ApproxNlmlResult {
  double value = 0.0;
  Vector gradient;
  double data_fit = 0.0;
  double logdet = 0.0;
  int cg_iterations = 0;
  bool cg_converged = true;
  int max_probe_iterations = 0;
};

MixtureOperator build_operator(const GpModel& model, const Points& X);

/// (y^T alpha + slq log|K| + n log 2 pi) / 2 with alpha from CG.
ApproxNlmlResult approx_nlml(const MixtureOperator& op, const Vector& y,
                             const ApproxOptions& options = {}, bool with_gradient = true);
ApproxNlmlResult approx_nlml(const GpModel& model, const Points& X, const Vector& y,
                             const ApproxOptions& options = {}, bool with_gradient = true);

enum class Objective { Approximate, Exact };

struct FitOptions {
  int max_steps = 100;
  Objective objective = Objective::Approximate;
  ApproxOptions approx;
  /// New probe seed on every objective evaluation (the surrogate is no
  /// longer deterministic).
  bool rerandomize_probes = false;
  double gradient_tolerance = 1e-6;
  double function_tolerance = 1e-8;
};

struct FitStep {
  int iteration = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
};

struct FitResult {
  GpModel model;
  Vector initial_theta;
  Vector theta;
  double initial_value = 0.0;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool line_search_failed = false;
  std::string termination;
  std::vector<FitStep> trace;
  double seconds = 0.0;
};

/// L-BFGS on the free log-parameters of the NLML plus hyper-prior penalties.
/// The inducing grids are built once from the initial model. Returns the best
/// point found; line_search_failed flags an early stop.
FitResult fit(const GpModel& model, const Points& X, const Vector& y, const FitOptions& options = {});

struct SeparationResult {
  std::vector<std::string> names;
  std::vector<Vector> means;  // posterior mean of each component at X
  Vector alpha;
  Vector residual;  // y - sum_j means
  int cg_iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  double solve_seconds = 0.0;
  double total_seconds = 0.0;
};

/// One CG solve alpha = K^-1 y, then one structured MVM per component.
SeparationResult separate(const MixtureOperator& op, const Vector& y, const CgOptions& cg = {});
SeparationResult separate(const GpModel& model, const Points& X, const Vector& y,
                          const CgOptions& cg = {});

/// sum_j W_j,* K_UjUj W_j^T alpha with fresh interpolation rows for X*.
/// Throws OutOfGridError if a test point leaves a component's grid.
Vector predict_mean(const MixtureOperator& op, const Points& Xstar, const Vector& alpha);

struct PriorSample {
  std::vector<Vector> components;  // latent draw of each component at X
  Vector latent;                   // their sum
  Vector targets;                  // latent + white noise
};

/// Draws u ~ N(0, K_UU) per component through the Kronecker eigen square
/// root, interpolates f = W u and adds N(0, noise_std^2) noise. A factor
/// that is not PSD gets one retry with diagonal jitter.
PriorSample sample_prior(const GpModel& model, const Points& X, std::uint64_t seed);

}  // namespace warpski
