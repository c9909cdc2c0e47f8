#include "warpski/gp.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "warpski/error.hpp"

namespace warpski {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

double LogNormalPrior::penalty(double u, double* derivative) const {
  if (!(mode > 0.0) || !(log_std > 0.0)) throw DomainError("log-normal prior needs mode, log_std > 0");
  const double s2 = log_std * log_std;
  const double mu = std::log(mode) + s2;
  if (derivative) *derivative = (u - mu) / s2 + 1.0;
  return 0.5 * (u - mu) * (u - mu) / s2 + u;
}

int GpModel::num_params() const {
  int total = 1;
  for (const auto& c : components) total += c.kernel.num_params();
  return total;
}

Vector GpModel::log_params() const {
  Vector theta(num_params());
  Index at = 0;
  for (const auto& c : components) {
    const Vector p = c.kernel.log_params();
    theta.segment(at, p.size()) = p;
    at += p.size();
  }
  theta[at] = std::log(noise_std);
  return theta;
}

GpModel GpModel::with_log_params(const Vector& theta) const {
  if (theta.size() != num_params()) {
    throw DimensionError("model has " + std::to_string(num_params()) + " parameters, got " +
                         std::to_string(theta.size()));
  }
  GpModel out = *this;
  Index at = 0;
  for (auto& c : out.components) {
    const int k = c.kernel.num_params();
    c.kernel = c.kernel.with_log_params(theta.segment(at, k));
    at += k;
  }
  out.noise_std = std::exp(theta[at]);
  return out;
}

std::vector<std::string> GpModel::param_names() const {
  std::vector<std::string> names;
  for (const auto& c : components) {
    for (const auto& p : c.kernel.param_names()) names.push_back(c.name + "." + p);
  }
  names.emplace_back("noise_std");
  return names;
}

int GpModel::param_index(const std::string& name) const {
  const auto names = param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  std::string known;
  for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown parameter '" + name + "' (known: " + known + ")");
}

bool GpModel::is_fixed(int i) const {
  return !fixed.empty() && fixed.at(static_cast<std::size_t>(i));
}

void GpModel::set_fixed(const std::string& name, bool value) {
  const int i = param_index(name);
  fixed.resize(static_cast<std::size_t>(num_params()), false);
  fixed[static_cast<std::size_t>(i)] = value;
}

void GpModel::set_prior(const std::string& name, LogNormalPrior prior) {
  const int i = param_index(name);
  priors.resize(static_cast<std::size_t>(num_params()));
  priors[static_cast<std::size_t>(i)] = prior;
}

double GpModel::prior_penalty(const Vector& theta, Vector* grad) const {
  double total = 0.0;
  for (std::size_t i = 0; i < priors.size() && i < static_cast<std::size_t>(theta.size()); ++i) {
    if (!priors[i]) continue;
    double d = 0.0;
    total += priors[i]->penalty(theta[static_cast<Index>(i)], &d);
    if (grad) (*grad)[static_cast<Index>(i)] += d;
  }
  return total;
}

Matrix dense_component_kernel(const ComponentSpec& spec, const Points& A, const Points& B) {
  const Points ZA = spec.warp.forward(A);
  const Points ZB = spec.warp.forward(B);
  const int D = spec.kernel.dims();
  if (ZA.cols() != D) throw DimensionError("kernel arity does not match the points");
  Matrix K(A.rows(), B.rows());
  std::vector<double> lag(static_cast<std::size_t>(D));
  for (Index i = 0; i < ZA.rows(); ++i) {
    for (Index j = 0; j < ZB.rows(); ++j) {
      for (int d = 0; d < D; ++d) lag[static_cast<std::size_t>(d)] = ZA(i, d) - ZB(j, d);
      K(i, j) = spec.kernel.eval(lag);
    }
  }
  return K;
}

Matrix dense_kernel(const GpModel& model, const Points& X) {
  Matrix K = model.noise_std * model.noise_std * Matrix::Identity(X.rows(), X.rows());
  for (const auto& c : model.components) K += dense_component_kernel(c, X, X);
  return K;
}

namespace {

Eigen::LLT<Matrix> factor_or_throw(const Matrix& K) {
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError(
        "dense Cholesky failed; the kernel matrix is not positive definite (increase the noise "
        "or add jitter)");
  }
  return llt;
}

}  // namespace

NlmlResult exact_nlml(const GpModel& model, const Points& X, const Vector& y, bool with_gradient) {
  const Index n = X.rows();
  if (y.size() != n) throw DimensionError("y has the wrong length");
  const Matrix K = dense_kernel(model, X);
  const auto llt = factor_or_throw(K);
  const Vector alpha = llt.solve(y);
  NlmlResult r;
  r.data_fit = y.dot(alpha);
  r.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  r.value = 0.5 * (r.data_fit + r.logdet + static_cast<double>(n) * kLog2Pi);
  if (!with_gradient) return r;

  // d value / d theta_j = sum_ab M_ab dK_ab / 2 with M = K^-1 - alpha alpha^T.
  Matrix M = llt.solve(Matrix::Identity(n, n));
  M.noalias() -= alpha * alpha.transpose();
  r.gradient = Vector::Zero(model.num_params());
  Index offset = 0;
  for (const auto& c : model.components) {
    const Points Z = c.warp.forward(X);
    const int D = c.kernel.dims();
    std::vector<double> lag(static_cast<std::size_t>(D));
    Vector acc = Vector::Zero(c.kernel.num_params());
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j <= i; ++j) {
        for (int d = 0; d < D; ++d) lag[static_cast<std::size_t>(d)] = Z(i, d) - Z(j, d);
        const double w = (i == j) ? M(i, i) : 2.0 * M(i, j);
        acc += w * c.kernel.grad(lag);
      }
    }
    r.gradient.segment(offset, acc.size()) = 0.5 * acc;
    offset += acc.size();
  }
  r.gradient[offset] = model.noise_std * model.noise_std * M.trace();
  return r;
}

ExactPosterior exact_separate(const GpModel& model, const Points& X, const Vector& y) {
  const auto llt = factor_or_throw(dense_kernel(model, X));
  ExactPosterior p;
  p.alpha = llt.solve(y);
  for (const auto& c : model.components) p.means.push_back(dense_component_kernel(c, X, X) * p.alpha);
  return p;
}

Vector exact_predict_mean(const GpModel& model, const Points& X, const Vector& y,
                          const Points& Xstar) {
  const auto llt = factor_or_throw(dense_kernel(model, X));
  const Vector alpha = llt.solve(y);
  Vector mean = Vector::Zero(Xstar.rows());
  for (const auto& c : model.components) mean += dense_component_kernel(c, Xstar, X) * alpha;
  return mean;
}

MixtureOperator build_operator(const GpModel& model, const Points& X) {
  return MixtureOperator::build(model.components, model.noise_std, X);
}

ApproxNlmlResult approx_nlml(const MixtureOperator& op, const Vector& y, const ApproxOptions& options,
                             bool with_gradient) {
  const Index n = op.size();
  if (y.size() != n) throw DimensionError("y has the wrong length");
  const MatVec apply = [&op](const Vector& v) { return op.matvec(v); };
  const DerivativeMatVec dapply = [&op](int j, const Vector& v) {
    return op.derivative_matvec(j, v);
  };

  ApproxNlmlResult r;
  const CgReport cg = cg_solve(apply, y, options.cg);
  r.cg_iterations = cg.iterations;
  r.cg_converged = cg.converged;
  const Vector& alpha = cg.solution;
  r.data_fit = y.dot(alpha);

  const ProbeSet probes = ProbeSet::rademacher(n, options.probes, options.seed);
  const int P = op.num_params();
  if (with_gradient && options.gradient == GradientMethod::LanczosTangent) {
    const auto s = slq_logdet_with_gradient(apply, dapply, P, n, probes, options.lanczos_steps);
    r.logdet = s.value;
    r.gradient = 0.5 * s.gradient;
    for (int j = 0; j < P; ++j) r.gradient[j] -= 0.5 * alpha.dot(op.derivative_matvec(j, alpha));
  } else {
    r.logdet = slq_logdet(apply, n, probes, options.lanczos_steps);
    if (with_gradient) {
      const auto g = slq_nlml_gradient(apply, dapply, P, alpha, probes, options.cg);
      r.gradient = g.gradient;
      r.max_probe_iterations = g.max_probe_iterations;
      r.cg_converged = r.cg_converged && g.probes_converged;
    }
  }
  r.value = 0.5 * (r.data_fit + r.logdet + static_cast<double>(n) * kLog2Pi);
  return r;
}

ApproxNlmlResult approx_nlml(const GpModel& model, const Points& X, const Vector& y,
                             const ApproxOptions& options, bool with_gradient) {
  return approx_nlml(build_operator(model, X), y, options, with_gradient);
}

namespace {

// NLML + priors over the free parameters only.
class FitObjective final : public ceres::FirstOrderFunction {
 public:
  FitObjective(const GpModel& model, const Points& X, const Vector& y, const FitOptions& options,
               std::vector<int> free)
      : model_(model), X_(X), y_(y), options_(options), free_(std::move(free)),
        theta0_(model.log_params()) {
    if (options.objective == Objective::Approximate) base_.emplace(build_operator(model, X));
    best_theta_ = theta0_;
  }

  int NumParameters() const override { return static_cast<int>(free_.size()); }

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    Vector theta = theta0_;
    for (std::size_t i = 0; i < free_.size(); ++i) theta[free_[i]] = parameters[i];
    try {
      double value = 0.0;
      Vector grad;
      if (options_.objective == Objective::Exact) {
        const auto r = exact_nlml(model_.with_log_params(theta), X_, y_, gradient != nullptr);
        value = r.value;
        grad = r.gradient;
      } else {
        ApproxOptions ao = options_.approx;
        if (options_.rerandomize_probes) ao.seed += static_cast<std::uint64_t>(evaluations_);
        const auto r = approx_nlml(base_->with_log_params(theta), y_, ao, gradient != nullptr);
        value = r.value;
        grad = r.gradient;
      }
      if (grad.size() == 0) grad = Vector::Zero(theta.size());
      value += model_.prior_penalty(theta, &grad);
      ++evaluations_;
      if (!std::isfinite(value) || !grad.allFinite()) return false;
      *cost = value;
      if (gradient) {
        for (std::size_t i = 0; i < free_.size(); ++i) gradient[i] = grad[free_[i]];
      }
      if (value < best_value_) {
        best_value_ = value;
        best_theta_ = theta;
      }
      return true;
    } catch (const Error&) {
      return false;  // the line search backs off
    }
  }

  int evaluations() const { return evaluations_; }
  double best_value() const { return best_value_; }
  const Vector& best_theta() const { return best_theta_; }
  const Vector& initial_theta() const { return theta0_; }

 private:
  const GpModel& model_;
  const Points& X_;
  const Vector& y_;
  const FitOptions& options_;
  std::vector<int> free_;
  Vector theta0_;
  std::optional<MixtureOperator> base_;
  mutable int evaluations_ = 0;
  mutable double best_value_ = std::numeric_limits<double>::infinity();
  mutable Vector best_theta_;
};

}  // namespace

FitResult fit(const GpModel& model, const Points& X, const Vector& y, const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> free;
  for (int i = 0; i < model.num_params(); ++i) {
    if (!model.is_fixed(i)) free.push_back(i);
  }
  FitResult out;
  out.initial_theta = model.log_params();
  out.theta = out.initial_theta;
  out.model = model;
  if (free.empty()) {
    out.termination = "all parameters fixed";
    out.seconds = seconds_since(t0);
    return out;
  }

  auto* objective = new FitObjective(model, X, y, options, free);
  ceres::GradientProblem problem(objective);  // takes ownership
  std::vector<double> params;
  for (int i : free) params.push_back(out.initial_theta[i]);
  {
    double v = 0.0;
    if (!objective->Evaluate(params.data(), &v, nullptr)) {
      throw Error("objective could not be evaluated at the initial parameters");
    }
    out.initial_value = v;
  }

  ceres::GradientProblemSolver::Options opts;
  opts.line_search_direction_type = ceres::LBFGS;
  opts.line_search_type = ceres::WOLFE;
  opts.max_num_iterations = options.max_steps;
  opts.gradient_tolerance = options.gradient_tolerance;
  opts.function_tolerance = options.function_tolerance;
  opts.parameter_tolerance = 1e-10;
  opts.logging_type = ceres::SILENT;
  opts.minimizer_progress_to_stdout = false;
  struct Recorder : ceres::IterationCallback {
    std::vector<FitStep>* trace = nullptr;
    ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
      trace->push_back({s.iteration, s.cost, s.gradient_norm});
      return ceres::SOLVER_CONTINUE;
    }
  } recorder;
  recorder.trace = &out.trace;
  opts.callbacks.push_back(&recorder);
  opts.update_state_every_iteration = false;

  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(opts, problem, params.data(), &summary);

  out.iterations = static_cast<int>(summary.iterations.size()) - 1;
  out.evaluations = objective->evaluations();
  out.termination = summary.message;
  out.line_search_failed = summary.termination_type == ceres::FAILURE;
  Vector theta = out.initial_theta;
  for (std::size_t i = 0; i < free.size(); ++i) theta[free[i]] = params[i];
  out.theta = theta;
  out.value = summary.final_cost;
  if (objective->best_value() < out.value) {
    out.theta = objective->best_theta();
    out.value = objective->best_value();
  }
  out.model = model.with_log_params(out.theta);
  out.seconds = seconds_since(t0);
  return out;
}

SeparationResult separate(const MixtureOperator& op, const Vector& y, const CgOptions& cg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (y.size() != op.size()) throw DimensionError("y has the wrong length");
  SeparationResult r;
  const CgReport s = cg_solve([&op](const Vector& v) { return op.matvec(v); }, y, cg);
  r.solve_seconds = seconds_since(t0);
  r.alpha = s.solution;
  r.cg_iterations = s.iterations;
  r.relative_residual = s.relative_residual;
  r.converged = s.converged;
  r.residual = y;
  for (int j = 0; j < op.num_components(); ++j) {
    r.names.push_back(op.component(j).name());
    r.means.push_back(op.component_matvec(j, r.alpha));
    r.residual -= r.means.back();
  }
  r.total_seconds = seconds_since(t0);
  return r;
}

SeparationResult separate(const GpModel& model, const Points& X, const Vector& y,
                          const CgOptions& cg) {
  return separate(build_operator(model, X), y, cg);
}

Vector predict_mean(const MixtureOperator& op, const Points& Xstar, const Vector& alpha) {
  if (alpha.size() != op.size()) throw DimensionError("alpha has the wrong length");
  Vector mean = Vector::Zero(Xstar.rows());
  for (const auto& c : op.components()) {
    const InterpWeights Ws = interpolation_weights(c.grid(), c.warp().forward(Xstar));
    mean += c.cross_matvec(Ws, alpha);
  }
  return mean;
}

namespace {

KronEigen decompose_with_retry(const KronOperator& K) {
  try {
    return KronEigen::decompose(K);
  } catch (const NotPositiveDefiniteError&) {
    std::vector<Matrix> factors;
    for (int d = 0; d < K.num_factors(); ++d) {
      Matrix F = axis_operator_dense(K.factor(d));
      F.diagonal().array() += 1e-6 * F.diagonal().cwiseAbs().maxCoeff();
      factors.push_back(std::move(F));
    }
    return KronEigen::decompose(factors);
  }
}

}  // namespace

PriorSample sample_prior(const GpModel& model, const Points& X, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  PriorSample s;
  s.latent = Vector::Zero(X.rows());
  for (const auto& spec : model.components) {
    const SkiComponent c = SkiComponent::build(spec, X);
    Vector u = Vector::Zero(c.grid().total_size());
    for (const auto& term : c.kuu_terms()) {
      const KronEigen eig = decompose_with_retry(term);
      Vector xi(u.size());
      for (Index i = 0; i < xi.size(); ++i) xi[i] = normal(gen);
      u += eig.apply_sqrt(xi);
    }
    s.components.push_back(c.weights().matvec(u));
    s.latent += s.components.back();
  }
  s.targets = s.latent;
  for (Index i = 0; i < s.targets.size(); ++i) s.targets[i] += model.noise_std * normal(gen);
  return s;
}

}  // namespace warpski
