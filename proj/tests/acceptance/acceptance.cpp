// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   warpski_acceptance            all criteria
//   warpski_acceptance 3 6        selected criteria only

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "warpski/experiments.hpp"
#include "warpski/gp.hpp"
#include "warpski/grid.hpp"
#include "warpski/krylov.hpp"
#include "warpski/operators.hpp"
#include "warpski/validation.hpp"

using namespace warpski;

namespace {

// Pinned tolerances.
constexpr double kSkiFrobenius = 1e-3;
constexpr double kSkiSeconds = 5.0;
constexpr double kPathAgreement = 1e-12;
constexpr double kCgVsDense = 1e-6;
constexpr double kSeparationVsExact = 5e-2;
constexpr double kSlqMean = 1e-2;
constexpr double kSlqSingle = 3e-2;
constexpr double kExactGradFd = 1e-6;
constexpr double kApproxGradFd = 1e-4;
constexpr double kGradCosine = 0.99;
constexpr int kArgminSteps = 1;
constexpr double kCurveGap = 2e-2;
constexpr double kHyperRecovery = 0.2;
constexpr double kRmse = 0.5;
constexpr double kLearningSeconds = 600.0;
constexpr double kDoublingRatio = 2.6;
constexpr double kSeparationDb = 10.0;
constexpr double kSuiteSeconds = 900.0;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Points uniform_points(Index n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Points X(n, 1);
  for (Index i = 0; i < n; ++i) X(i, 0) = u(gen);
  return X;
}

Warp1D cubic_warp() { return Warp1D::polynomial({2.0, 0.0, 1.0}, {-2.0, 1.5}); }

// sigma_f^2 exp(-d^2 / 2 l^2) on warped inputs, written out directly.
Matrix dense_se(const Points& X, double amp, double ell, const Warp1D& w) {
  const Index n = X.rows();
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = w.forward(X(i, 0));
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double d = z[i] - z[j];
      K(i, j) = amp * amp * std::exp(-0.5 * d * d / (ell * ell));
    }
  }
  return K;
}

double cholesky_logdet(const Matrix& K) {
  const Eigen::LLT<Matrix> llt(K);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

GpModel two_component_model() {
  GpModel m;
  m.noise_std = 0.3;
  m.components.push_back({"slow", StationaryKernel::squared_exponential(1.2, 1.5), Warp(cubic_warp()), {}});
  std::vector<double> events;
  for (double t = -1.35; t < 0.9; t += 0.37) events.push_back(t);
  m.components.push_back({"beat", StationaryKernel::quasi_periodic(0.7, 20.0, 0.8, 2.0 * std::numbers::pi),
                          Warp(phase_from_events(events)), {}});
  return m;
}

Outcome ski_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const Points X = uniform_points(500, -1.2, 0.75, 1);
  ComponentSpec spec{"se", StationaryKernel::squared_exponential(1.5, 0.4), Warp::identity(1), {}};
  spec.grid.counts = {512};
  const Matrix K = SkiComponent::build(spec, X).to_dense();
  const Matrix D = dense_se(X, 1.5, 0.4, Warp1D::identity());
  const double err = (K - D).norm() / D.norm();
  const double secs = seconds_since(t0);
  return {err <= kSkiFrobenius && secs < kSkiSeconds,
          "||K_ski - K||_F/||K||_F = " + num(err) + " (<= " + num(kSkiFrobenius) + "), " + num(secs) + " s (< " +
              num(kSkiSeconds) + ")"};
}

Outcome warpski_fidelity() {
  const Points X = uniform_points(500, -1.2, 0.75, 2);
  const Warp warp(cubic_warp());
  ComponentSpec spec{"se", StationaryKernel::squared_exponential(1.5, 0.4), warp, {}};
  spec.grid.counts = {1024};
  const SkiComponent c = SkiComponent::build(spec, X);
  const Matrix K = c.to_dense();
  const Matrix D = dense_se(X, 1.5, 0.4, cubic_warp());
  const double err = (K - D).norm() / D.norm();

  // Second construction: input-space grid U_hat = warp^-1(U), weights built
  // against U_hat, and K(U_hat, U_hat) from the warped kernel directly.
  const InducingGrid grid_hat = warped_grid(c.grid(), warp);
  const Matrix W_hat = interpolation_weights_on_warped_grid(grid_hat, warp, X).to_dense();
  Points U_hat(grid_hat.size(0), 1);
  U_hat.col(0) = grid_hat.axis(0);
  const Matrix K_hat = W_hat * dense_se(U_hat, 1.5, 0.4, cubic_warp()) * W_hat.transpose();
  const double path = (K - K_hat).cwiseAbs().maxCoeff() / K.cwiseAbs().maxCoeff();
  return {err <= kSkiFrobenius && path <= kPathAgreement,
          "Frobenius " + num(err) + " (<= " + num(kSkiFrobenius) + "), grid-space vs input-space construction " +
              num(path) + " (<= " + num(kPathAgreement) + ")"};
}

Outcome inference_oracle() {
  const Points X = uniform_points(1500, -1.2, 0.75, 3);
  GpModel model = two_component_model();
  for (auto& c : model.components) c.grid.points_per_lengthscale = 6.0;
  const Vector y = sample_prior(model, X, 4).targets;
  const MixtureOperator op = build_operator(model, X);
  const SeparationResult s = separate(op, y, {1e-8, 5000, {}});
  const Matrix K = op.to_dense();
  const Vector alpha = Eigen::LLT<Matrix>(K).solve(y);
  const double solve_err = (s.alpha - alpha).norm() / alpha.norm();
  const ExactPosterior ex = exact_separate(model, X, y);
  double sep_err = 0.0;
  for (std::size_t i = 0; i < s.means.size(); ++i) {
    sep_err = std::max(sep_err, (s.means[i] - ex.means[i]).norm() / ex.means[i].norm());
  }
  return {s.converged && solve_err <= kCgVsDense && sep_err <= kSeparationVsExact,
          "CG vs dense solve " + num(solve_err) + " (<= " + num(kCgVsDense) + "), " +
              std::to_string(s.cg_iterations) + " iterations; worst source mean vs exact GP " + num(sep_err) +
              " (<= " + num(kSeparationVsExact) + ")"};
}

Outcome slq_accuracy() {
  const Index n = 500;
  const Points X = uniform_points(n, 0.0, 5.0, 5);
  const Matrix K = dense_se(X, 1.0, 0.3, Warp1D::identity()) + 0.1 * Matrix::Identity(n, n);
  const double exact = cholesky_logdet(K);
  const MatVec apply = [&K](const Vector& v) -> Vector { return K * v; };
  double mean = 0.0, worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double est = slq_logdet(apply, n, ProbeSet::rademacher(n, 20, seed), 30);
    worst = std::max(worst, std::abs(est - exact) / std::abs(exact));
    mean += est / 10.0;
  }
  const double mean_err = std::abs(mean - exact) / std::abs(exact);
  return {mean_err <= kSlqMean && worst <= kSlqSingle,
          "10-seed mean rel. error " + num(mean_err) + " (<= " + num(kSlqMean) + "), worst single seed " +
              num(worst) + " (<= " + num(kSlqSingle) + ")"};
}

Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& theta, double h) {
  Vector g(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    Vector p = theta, m = theta;
    p[j] += h;
    m[j] -= h;
    g[j] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

Outcome gradient_checks() {
  // (a) exact dense gradient
  const Points Xa = uniform_points(200, -1.2, 0.75, 6);
  const GpModel ma = two_component_model();
  const Vector ya = sample_prior(ma, Xa, 7).targets;
  const Vector ga = exact_nlml(ma, Xa, ya, true).gradient;
  const Vector fa = central_difference(
      [&](const Vector& t) { return exact_nlml(ma.with_log_params(t), Xa, ya, false).value; }, ma.log_params(), 1e-5);
  const double err_a = (ga - fa).norm() / fa.norm();

  // (b) seeded approximate objective and its own gradient
  const Points Xb = uniform_points(600, -1.2, 0.75, 8);
  const GpModel mb = two_component_model();
  const Vector yb = sample_prior(mb, Xb, 9).targets;
  const MixtureOperator op = build_operator(mb, Xb);
  ApproxOptions ob;
  ob.seed = 11;
  ob.cg.tolerance = 1e-12;
  ob.gradient = GradientMethod::LanczosTangent;
  const Vector gb = approx_nlml(op, yb, ob, true).gradient;
  const Vector fb = central_difference(
      [&](const Vector& t) { return approx_nlml(op.with_log_params(t), yb, ob, false).value; }, mb.log_params(), 1e-5);
  const double err_b = (gb - fb).norm() / fb.norm();

  // (c) direction of the default stochastic gradient vs the exact one, n = 1000
  double worst_cos = 1.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Points Xc = uniform_points(1000, -1.2, 0.75, 20 + s);
    GpModel truth = two_component_model();
    const Vector yc = sample_prior(truth, Xc, 30 + s).targets;
    Vector theta = truth.log_params();
    theta.array() += 0.3 * (s % 2 == 0 ? 1.0 : -1.0);  // away from the optimum
    const GpModel mc = truth.with_log_params(theta);
    const Vector ge = exact_nlml(mc, Xc, yc, true).gradient;
    ApproxOptions oc;
    oc.seed = 40 + s;
    oc.cg.tolerance = 1e-6;
    const Vector gc = approx_nlml(mc, Xc, yc, oc, true).gradient;
    worst_cos = std::min(worst_cos, gc.dot(ge) / (gc.norm() * ge.norm()));
  }
  const bool ok = err_a <= kExactGradFd && err_b <= kApproxGradFd && worst_cos >= kGradCosine;
  return {ok, "(a) exact vs FD " + num(err_a) + " (<= " + num(kExactGradFd) + "); (b) approx vs FD " + num(err_b) +
                  " (<= " + num(kApproxGradFd) + "); (c) min cosine over 3 instances " + num(worst_cos) + " (>= " +
                  num(kGradCosine) + ")"};
}

Outcome likelihood_curve() {
  const SweepConfig c = reference_sweep_config();
  const RunReport r = run_sweep(c);
  const double steps = r.get("argmin_index_distance");
  const double gap = r.get("max_gap_over_range");
  const double raw = r.get("max_raw_gap_over_range");
  return {steps <= kArgminSteps && gap <= kCurveGap,
          "argmin distance " + num(steps) + " steps (<= " + std::to_string(kArgminSteps) +
              "), max gap after removing the mean offset " + num(gap) + " of range (<= " + num(kCurveGap) +
              "); without offset removal " + num(raw)};
}

Outcome desk_replica() {
  Numeric2dConfig c;
  c.timing_repeats = 1;
  const RunReport r = run_numeric2d(c);
  const double e_noise = r.get("noise_std_rel_error");
  const double e_amp = r.get("amplitude_rel_error");
  const double e_ell = r.get("lengthscale_rel_error");
  const double rm = r.get("rmse");
  const double secs = r.get("learning_seconds");
  const bool ok = std::max({e_noise, e_amp, e_ell}) <= kHyperRecovery && rm <= kRmse && secs <= kLearningSeconds;
  return {ok, "learned (sigma, sigma_SE, l_SE) = (" + num(r.get("noise_std")) + ", " + num(r.get("amplitude")) +
                  ", " + num(r.get("lengthscale")) + "), rel. errors " + num(e_noise) + ", " + num(e_amp) + ", " +
                  num(e_ell) + " (<= " + num(kHyperRecovery) + "); RMSE " + num(rm) + " (<= " + num(kRmse) +
                  "); learning " + num(secs) + " s (<= " + num(kLearningSeconds) + ")"};
}

struct ScalingRow {
  double mvm = 0.0;
  double inference = 0.0;
};

ScalingRow time_operator(Index n, const std::vector<Index>& counts) {
  Numeric2dConfig c;
  const Numeric2dData d = make_numeric2d_data(c, n, 77);
  GpModel m = d.truth;
  m.components[0].grid.counts = counts;
  const MixtureOperator op = build_operator(m, d.X);
  const Vector v = d.y;
  ScalingRow row;
  row.mvm = median_seconds([&] { (void)op.matvec(v); }, 5);
  row.inference = median_seconds([&] { (void)separate(op, d.y, {0.1, 1000, {}}); }, 3);
  return row;
}

Outcome scaling() {
  double worst = 0.0;
  std::string detail = "time ratios per doubling; n at m = 128x128:";
  std::vector<ScalingRow> rows;
  for (Index n : {10000, 20000, 40000, 80000, 160000}) rows.push_back(time_operator(n, {128, 128}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = rows[i].mvm / rows[i - 1].mvm, b = rows[i].inference / rows[i - 1].inference;
    worst = std::max({worst, a, b});
    detail += " " + num(a) + "/" + num(b);
  }
  detail += "; m at n = 20000:";
  rows.clear();
  const std::vector<std::vector<Index>> grids{{128, 128}, {256, 128}, {256, 256}, {512, 256}, {512, 512}};
  for (const auto& g : grids) rows.push_back(time_operator(20000, g));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = rows[i].mvm / rows[i - 1].mvm, b = rows[i].inference / rows[i - 1].inference;
    worst = std::max({worst, a, b});
    detail += " " + num(a) + "/" + num(b);
  }
  return {worst <= kDoublingRatio,
          "largest ratio " + num(worst) + " (<= " + num(kDoublingRatio) + "); " + detail + " (mvm/inference)"};
}

Outcome separation_quality() {
  const Separation1dConfig c = two_source_config();
  const RunReport r = run_separation1d(c);
  const double fetal = r.get("fetal.snr_improvement_db");
  return {fetal > kSeparationDb,
          "n = " + num(r.get("n")) + ", fetal (weaker) " + num(fetal) + " dB (> " + num(kSeparationDb) +
              "), maternal " + num(r.get("maternal.snr_improvement_db")) + " dB; learning " +
              num(r.get("learning_seconds")) + " s"};
}

Outcome property_suites() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_properties();
  const double secs = seconds_since(t0);
  int failed = 0;
  std::string names;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      names += " " + r.name;
    }
  }
  return {failed == 0 && secs <= kSuiteSeconds,
          std::to_string(results.size()) + " checks, " + std::to_string(failed) + " failed" + names + ", " +
              num(secs) + " s (<= " + num(kSuiteSeconds) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ski_fidelity", ski_fidelity},         {"warpski_fidelity", warpski_fidelity},
      {"inference_oracle", inference_oracle}, {"slq_accuracy", slq_accuracy},
      {"gradient_checks", gradient_checks},   {"likelihood_curve", likelihood_curve},
      {"desk_replica", desk_replica},         {"scaling", scaling},
      {"separation_quality", separation_quality}, {"property_suites", property_suites}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %2d %-20s %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
