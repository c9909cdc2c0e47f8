#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "warpski/error.hpp"
#include "warpski/experiments.hpp"
#include "warpski/gp.hpp"
#include "warpski/grid.hpp"
#include "warpski/krylov.hpp"
#include "warpski/serialization.hpp"
#include "warpski/structured.hpp"
#include "warpski/validation.hpp"

namespace py = pybind11;
using namespace warpski;

namespace {

// JSON crosses the boundary as text; the Python layer does json.dumps/loads.
GpModel model_from_text(const std::string& text) { return model_from_json(Json::parse(text)); }

py::dict report_dict(const RunReport& r) {
  py::dict metrics, labels;
  for (const auto& [k, v] : r.metrics) metrics[py::str(k)] = v;
  for (const auto& [k, v] : r.labels) labels[py::str(k)] = v;
  py::dict out;
  out["metrics"] = metrics;
  out["labels"] = labels;
  out["fit"] = r.fit.is_null() ? std::string() : r.fit.dump();
  return out;
}

ApproxOptions approx_options(int probes, std::uint64_t seed, int lanczos_steps, double cg_tolerance,
                             const std::string& gradient) {
  ApproxOptions o;
  o.probes = probes;
  o.seed = seed;
  o.lanczos_steps = lanczos_steps;
  o.cg.tolerance = cg_tolerance;
  if (gradient == "trace") {
    o.gradient = GradientMethod::StochasticTrace;
  } else if (gradient == "lanczos") {
    o.gradient = GradientMethod::LanczosTangent;
  } else {
    throw ConfigError("gradient: expected 'trace' or 'lanczos', got '" + gradient + "'");
  }
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Warped structured kernel interpolation for Gaussian processes";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<StationaryKernel>(m, "Kernel")
      .def_static("squared_exponential", &StationaryKernel::squared_exponential, py::arg("amplitude"),
                  py::arg("lengthscale"), py::arg("dims") = 1)
      .def_static("periodic", &StationaryKernel::periodic, py::arg("amplitude"), py::arg("lengthscale"),
                  py::arg("period"))
      .def_static("quasi_periodic", &StationaryKernel::quasi_periodic, py::arg("amplitude"),
                  py::arg("lengthscale"), py::arg("periodic_lengthscale"), py::arg("period"))
      .def_static("product", &StationaryKernel::product)
      .def_static("sum", &StationaryKernel::sum)
      .def_property_readonly("dims", &StationaryKernel::dims)
      .def("__call__", [](const StationaryKernel& k, double lag) { return k.eval(lag); })
      .def("eval", [](const StationaryKernel& k, const std::vector<double>& lag) { return k.eval(lag); })
      .def("grad", [](const StationaryKernel& k, const std::vector<double>& lag) { return k.grad(lag); })
      .def("log_params", &StationaryKernel::log_params)
      .def("with_log_params", &StationaryKernel::with_log_params)
      .def("param_names", &StationaryKernel::param_names)
      .def("to_json", [](const StationaryKernel& k) { return to_json(k).dump(); });

  py::class_<Warp1D>(m, "Warp1D")
      .def_static("identity", [] { return Warp1D::identity(); })
      .def_static(
          "polynomial",
          [](std::vector<double> coeffs, double lo, double hi, double offset) {
            return Warp1D::polynomial(std::move(coeffs), {lo, hi}, offset);
          },
          py::arg("coefficients"), py::arg("lo"), py::arg("hi"), py::arg("offset") = 0.0)
      .def_static(
          "piecewise_linear",
          [](std::vector<double> knots, std::vector<double> values) {
            return Warp1D::piecewise_linear(std::move(knots), std::move(values));
          },
          py::arg("knots"), py::arg("values"))
      .def("forward", &Warp1D::forward)
      .def("inverse", &Warp1D::inverse)
      .def("derivative", &Warp1D::derivative);
  m.def(
      "phase_from_events",
      [](const std::vector<double>& events, bool two_pi) { return phase_from_events(events, two_pi); },
      py::arg("events"), py::arg("two_pi_per_event") = true);

  m.def(
      "interpolation_matrix",
      [](const std::vector<Vector>& axes, const Points& points) {
        return interpolation_weights(InducingGrid::from_axes(axes), points).to_dense();
      },
      py::arg("axes"), py::arg("points"), "Dense n x m cubic interpolation matrix against a rectilinear grid.");
  m.def(
      "toeplitz_matvec", [](const Vector& column, const Vector& v) { return SymToeplitz(column).matvec(v); },
      py::arg("first_column"), py::arg("v"));
  m.def(
      "kron_matvec",
      [](const std::vector<Matrix>& factors, const Vector& v) {
        std::vector<AxisOperator> ops(factors.begin(), factors.end());
        return KronOperator(std::move(ops)).matvec(v);
      },
      py::arg("factors"), py::arg("v"));

  m.def(
      "cg_solve",
      [](const Matrix& K, const Vector& y, double tolerance, int max_iterations) {
        const CgReport r = cg_solve([&K](const Vector& v) -> Vector { return K * v; }, y,
                                    {tolerance, max_iterations, {}});
        return py::make_tuple(r.solution, r.iterations, r.converged);
      },
      py::arg("K"), py::arg("y"), py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 1000);
  m.def(
      "slq_logdet",
      [](const Matrix& K, int probes, int steps, std::uint64_t seed) {
        return slq_logdet([&K](const Vector& v) -> Vector { return K * v; }, K.rows(),
                          ProbeSet::rademacher(K.rows(), probes, seed), steps);
      },
      py::arg("K"), py::arg("probes") = 20, py::arg("steps") = 30, py::arg("seed") = 0);

  py::class_<GpModel>(m, "Model")
      .def_static("from_json", &model_from_text, py::arg("text"))
      .def("to_json", [](const GpModel& g) { return to_json(g).dump(); })
      .def_property_readonly("noise_std", [](const GpModel& g) { return g.noise_std; })
      .def("log_params", &GpModel::log_params)
      .def("with_log_params", &GpModel::with_log_params)
      .def("param_names", &GpModel::param_names)
      .def("dense_kernel", [](const GpModel& g, const Points& X) { return dense_kernel(g, X); })
      .def("approx_kernel", [](const GpModel& g, const Points& X) { return build_operator(g, X).to_dense(); });

  m.def(
      "exact_nlml",
      [](const GpModel& g, const Points& X, const Vector& y) {
        const NlmlResult r = exact_nlml(g, X, y, true);
        return py::make_tuple(r.value, r.gradient);
      },
      py::arg("model"), py::arg("X"), py::arg("y"));
  m.def(
      "approx_nlml",
      [](const GpModel& g, const Points& X, const Vector& y, int probes, std::uint64_t seed, int lanczos_steps,
         double cg_tolerance, const std::string& gradient) {
        const auto r = approx_nlml(g, X, y, approx_options(probes, seed, lanczos_steps, cg_tolerance, gradient));
        return py::make_tuple(r.value, r.gradient);
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("probes") = 20, py::arg("seed") = 0,
      py::arg("lanczos_steps") = 30, py::arg("cg_tolerance") = 1e-2, py::arg("gradient") = "trace");
  m.def(
      "separate",
      [](const GpModel& g, const Points& X, const Vector& y, double tolerance) {
        const SeparationResult r = separate(g, X, y, {tolerance, 5000, {}});
        py::dict means;
        for (std::size_t i = 0; i < r.names.size(); ++i) means[py::str(r.names[i])] = r.means[i];
        return py::make_tuple(means, r.cg_iterations, r.converged);
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("tolerance") = 1e-8);
  m.def(
      "fit",
      [](const GpModel& g, const Points& X, const Vector& y, int max_steps, int probes, std::uint64_t seed,
         double cg_tolerance, bool exact) {
        FitOptions o;
        o.max_steps = max_steps;
        o.approx.probes = probes;
        o.approx.seed = seed;
        o.approx.cg.tolerance = cg_tolerance;
        o.objective = exact ? Objective::Exact : Objective::Approximate;
        FitResult r;
        {
          py::gil_scoped_release release;
          r = fit(g, X, y, o);
        }
        return py::make_tuple(r.model, to_json(r).dump());
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("max_steps") = 100, py::arg("probes") = 20,
      py::arg("seed") = 0, py::arg("cg_tolerance") = 1e-2, py::arg("exact") = false);
  m.def(
      "sample_prior",
      [](const GpModel& g, const Points& X, std::uint64_t seed) {
        const PriorSample s = sample_prior(g, X, seed);
        return py::make_tuple(s.latent, s.targets, s.components);
      },
      py::arg("model"), py::arg("X"), py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& kind, const std::string& config, const std::string& out) {
        const Json j = Json::parse(config);
        RunReport r;
        Json echo;
        {
          py::gil_scoped_release release;
          if (kind == "numeric2d") {
            const auto c = Numeric2dConfig::from_json(j);
            r = run_numeric2d(c);
            echo = c.to_json();
          } else if (kind == "separation1d") {
            const auto c = Separation1dConfig::from_json(j);
            r = run_separation1d(c);
            echo = c.to_json();
          } else if (kind == "sweep") {
            const auto c = SweepConfig::from_json(j);
            r = run_sweep(c);
            echo = c.to_json();
          } else {
            throw ConfigError("kind: expected numeric2d, separation1d or sweep, got '" + kind + "'");
          }
          if (!out.empty()) write_run_outputs(out, echo, r);
        }
        return report_dict(r);
      },
      py::arg("kind"), py::arg("config"), py::arg("out") = "");
  m.def("two_source_config", [](Index n, double rate) { return two_source_config(n, rate).to_json().dump(); },
        py::arg("n") = 20000, py::arg("sample_rate") = 1000.0);

  m.def(
      "validate",
      [](const std::string& filter) {
        py::list out;
        for (const auto& r : run_properties(filter)) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["measured"] = r.measured;
          d["threshold"] = r.threshold;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("filter") = "");
}
