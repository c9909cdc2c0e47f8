#include "warpski/serialization.hpp"

#include <cmath>
#include <fstream>

#include "warpski/error.hpp"

namespace warpski {

namespace cfg {

namespace {

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": required field is missing");
  return *it;
}

}  // namespace

double number(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return number(j, key, path);
}

long long integer_or(const Json& j, const std::string& key, long long fallback,
                     const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<long long>();
}

std::vector<double> numbers(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = field(j, key, path);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::string string_or(const Json& j, const std::string& key, const std::string& fallback,
                      const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool boolean_or(const Json& j, const std::string& key, bool fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected true or false");
  return v.get<bool>();
}

}  // namespace cfg

namespace {

// Rewraps library errors raised while constructing an object so the message
// carries the config path.
template <typename F>
auto at_path(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json bound(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Interval interval_from_json(const Json& j, const std::string& key, const std::string& path) {
  Interval iv;
  if (!j.contains(key) || j.at(key).is_null()) return iv;
  const Json& d = j.at(key);
  if (!d.is_array() || d.size() != 2) {
    throw ConfigError(path + "." + key + ": expected [lo, hi] (null for unbounded)");
  }
  if (!d[0].is_null()) iv.lo = d[0].get<double>();
  if (!d[1].is_null()) iv.hi = d[1].get<double>();
  return iv;
}

}  // namespace

Json to_json(const StationaryKernel& k) {
  Json j;
  j["type"] = to_string(k.kind());
  const Vector v = k.params().values();
  switch (k.kind()) {
    case KernelKind::SquaredExponential:
      j["amplitude"] = v[0];
      j["lengthscale"] = v[1];
      j["dims"] = k.dims();
      break;
    case KernelKind::Periodic:
      j["amplitude"] = v[0];
      j["lengthscale"] = v[1];
      j["period"] = v[2];
      break;
    case KernelKind::QuasiPeriodic:
      j["amplitude"] = v[0];
      j["lengthscale"] = v[1];
      j["periodic_lengthscale"] = v[2];
      j["period"] = v[3];
      break;
    case KernelKind::Product:
    case KernelKind::Sum: {
      Json parts = Json::array();
      for (const auto& c : k.children()) parts.push_back(to_json(c));
      j[k.kind() == KernelKind::Product ? "factors" : "terms"] = parts;
      break;
    }
  }
  return j;
}

StationaryKernel kernel_from_json(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigError(path + ".type: required (se, periodic, quasi_periodic, product, sum)");
  }
  KernelKind kind{};
  try {
    kind = kernel_kind_from_string(j.at("type").get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(path + ".type: " + e.what());
  }
  return at_path(path, [&]() -> StationaryKernel {
    switch (kind) {
      case KernelKind::SquaredExponential:
        return StationaryKernel::squared_exponential(
            cfg::number(j, "amplitude", path), cfg::number(j, "lengthscale", path),
            static_cast<int>(cfg::integer_or(j, "dims", 1, path)));
      case KernelKind::Periodic:
        return StationaryKernel::periodic(cfg::number(j, "amplitude", path),
                                          cfg::number(j, "lengthscale", path),
                                          cfg::number(j, "period", path));
      case KernelKind::QuasiPeriodic:
        return StationaryKernel::quasi_periodic(
            cfg::number(j, "amplitude", path), cfg::number(j, "lengthscale", path),
            cfg::number(j, "periodic_lengthscale", path), cfg::number(j, "period", path));
      case KernelKind::Product:
      case KernelKind::Sum: {
        const std::string key = kind == KernelKind::Product ? "factors" : "terms";
        if (!j.contains(key) || !j.at(key).is_array()) {
          throw ConfigError(path + "." + key + ": expected an array of kernels");
        }
        std::vector<StationaryKernel> parts;
        for (std::size_t i = 0; i < j.at(key).size(); ++i) {
          parts.push_back(
              kernel_from_json(j.at(key)[i], path + "." + key + "[" + std::to_string(i) + "]"));
        }
        return kind == KernelKind::Product ? StationaryKernel::product(std::move(parts))
                                           : StationaryKernel::sum(std::move(parts));
      }
    }
    throw ConfigError(path + ": unknown kernel");
  });
}

Json to_json(const Warp1D& w) {
  Json j;
  j["domain"] = Json::array({bound(w.domain().lo), bound(w.domain().hi)});
  switch (w.kind()) {
    case Warp1D::Kind::Identity:
      j["type"] = "identity";
      break;
    case Warp1D::Kind::Polynomial:
      j["type"] = "polynomial";
      j["coefficients"] = w.coefficients();
      j["offset"] = w.offset();
      break;
    case Warp1D::Kind::PiecewiseLinear:
      j["type"] = "piecewise_linear";
      j["knots"] = w.knots();
      j["values"] = w.knot_values();
      break;
  }
  return j;
}

Warp1D warp1d_from_json(const Json& j, const std::string& path) {
  const std::string type = cfg::string_or(j, "type", "", path);
  const Interval domain = interval_from_json(j, "domain", path);
  return at_path(path, [&]() -> Warp1D {
    if (type == "identity") return Warp1D::identity(domain);
    if (type == "polynomial") {
      return Warp1D::polynomial(cfg::numbers(j, "coefficients", path), domain,
                                cfg::number_or(j, "offset", 0.0, path));
    }
    if (type == "piecewise_linear") {
      return Warp1D::piecewise_linear(cfg::numbers(j, "knots", path),
                                      cfg::numbers(j, "values", path), domain);
    }
    if (type == "phase_from_events") {
      const auto events = cfg::numbers(j, "events", path);
      return phase_from_events(events, cfg::boolean_or(j, "two_pi_per_event", true, path));
    }
    throw ConfigError(path + ".type: expected identity, polynomial, piecewise_linear or "
                      "phase_from_events, got '" + type + "'");
  });
}

Json to_json(const Warp& w) {
  if (!w.is_elementwise()) {
    Json j;
    j["type"] = "affine";
    Json A = Json::array();
    for (Index r = 0; r < w.linear().rows(); ++r) {
      std::vector<double> row;
      for (Index c = 0; c < w.linear().cols(); ++c) row.push_back(w.linear()(r, c));
      A.push_back(row);
    }
    j["A"] = A;
    j["b"] = std::vector<double>(w.shift().data(), w.shift().data() + w.shift().size());
    return j;
  }
  if (w.dims() == 1) return to_json(w.axes().front());
  Json j;
  j["type"] = "elementwise";
  j["axes"] = Json::array();
  for (const auto& a : w.axes()) j["axes"].push_back(to_json(a));
  return j;
}

Warp warp_from_json(const Json& j, const std::string& path) {
  const std::string type = cfg::string_or(j, "type", "", path);
  if (type == "elementwise") {
    if (!j.contains("axes") || !j.at("axes").is_array()) {
      throw ConfigError(path + ".axes: expected an array of 1-D warps");
    }
    std::vector<Warp1D> axes;
    for (std::size_t i = 0; i < j.at("axes").size(); ++i) {
      axes.push_back(warp1d_from_json(j.at("axes")[i], path + ".axes[" + std::to_string(i) + "]"));
    }
    return at_path(path, [&] { return Warp::elementwise(std::move(axes)); });
  }
  if (type == "identity" && j.contains("dims")) {
    return at_path(path, [&] { return Warp::identity(static_cast<int>(cfg::integer_or(j, "dims", 1, path))); });
  }
  if (type == "affine") {
    if (!j.contains("A") || !j.at("A").is_array()) throw ConfigError(path + ".A: expected a matrix");
    const Json& A = j.at("A");
    const auto b = cfg::numbers(j, "b", path);
    const auto D = static_cast<Index>(b.size());
    Matrix M(D, D);
    if (static_cast<Index>(A.size()) != D) throw ConfigError(path + ".A: expected " + std::to_string(D) + " rows");
    for (Index r = 0; r < D; ++r) {
      const Json& row = A[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != D) {
        throw ConfigError(path + ".A[" + std::to_string(r) + "]: expected " + std::to_string(D) + " numbers");
      }
      for (Index c = 0; c < D; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return at_path(path, [&] { return Warp::affine(M, Eigen::Map<const Vector>(b.data(), D)); });
  }
  return Warp(warp1d_from_json(j, path));
}

Json to_json(const GridSpec& g) {
  Json j;
  if (!g.counts.empty()) j["counts"] = g.counts;
  j["points_per_lengthscale"] = g.points_per_lengthscale;
  if (g.box) {
    j["box"]["lo"] = std::vector<double>(g.box->lo.data(), g.box->lo.data() + g.box->lo.size());
    j["box"]["hi"] = std::vector<double>(g.box->hi.data(), g.box->hi.data() + g.box->hi.size());
  }
  return j;
}

GridSpec grid_spec_from_json(const Json& j, const std::string& path) {
  GridSpec g;
  if (j.is_null()) return g;
  if (j.contains("counts")) {
    for (double c : cfg::numbers(j, "counts", path)) {
      if (c < static_cast<double>(kMinAxisCount) || c != std::floor(c)) {
        throw ConfigError(path + ".counts: each count must be an integer >= " +
                          std::to_string(kMinAxisCount));
      }
      g.counts.push_back(static_cast<Index>(c));
    }
  }
  g.points_per_lengthscale = cfg::number_or(j, "points_per_lengthscale", 4.0, path);
  if (!(g.points_per_lengthscale > 0.0)) {
    throw ConfigError(path + ".points_per_lengthscale: must be > 0");
  }
  if (j.contains("box")) {
    const auto lo = cfg::numbers(j.at("box"), "lo", path + ".box");
    const auto hi = cfg::numbers(j.at("box"), "hi", path + ".box");
    if (lo.size() != hi.size()) throw ConfigError(path + ".box: lo and hi differ in length");
    Box b;
    b.lo = Eigen::Map<const Vector>(lo.data(), static_cast<Index>(lo.size()));
    b.hi = Eigen::Map<const Vector>(hi.data(), static_cast<Index>(hi.size()));
    g.box = b;
  }
  return g;
}

Json to_json(const ComponentSpec& c) {
  Json j;
  j["name"] = c.name;
  j["kernel"] = to_json(c.kernel);
  j["warp"] = to_json(c.warp);
  j["grid"] = to_json(c.grid);
  return j;
}

ComponentSpec component_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  ComponentSpec c{cfg::string_or(j, "name", "f", path),
                  kernel_from_json(j.contains("kernel") ? j.at("kernel") : Json(), path + ".kernel"),
                  Warp::identity(1), GridSpec{}};
  if (j.contains("warp")) {
    c.warp = warp_from_json(j.at("warp"), path + ".warp");
  } else {
    c.warp = Warp::identity(c.kernel.dims());
  }
  if (c.warp.dims() != c.kernel.dims()) {
    throw ConfigError(path + ": warp dimension " + std::to_string(c.warp.dims()) +
                      " does not match kernel arity " + std::to_string(c.kernel.dims()));
  }
  if (j.contains("grid")) c.grid = grid_spec_from_json(j.at("grid"), path + ".grid");
  return c;
}

Json to_json(const GpModel& m) {
  Json j;
  j["components"] = Json::array();
  for (const auto& c : m.components) j["components"].push_back(to_json(c));
  j["noise_std"] = m.noise_std;
  const auto names = m.param_names();
  Json fixed = Json::array();
  for (int i = 0; i < m.num_params(); ++i) {
    if (m.is_fixed(i)) fixed.push_back(names[static_cast<std::size_t>(i)]);
  }
  j["fixed"] = fixed;
  Json priors = Json::object();
  for (std::size_t i = 0; i < m.priors.size(); ++i) {
    if (m.priors[i]) priors[names[i]] = {{"mode", m.priors[i]->mode}, {"log_std", m.priors[i]->log_std}};
  }
  j["priors"] = priors;
  return j;
}

GpModel model_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  GpModel m;
  if (j.contains("components")) {
    const Json& cs = j.at("components");
    if (!cs.is_array()) throw ConfigError(path + ".components: expected an array");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      m.components.push_back(
          component_from_json(cs[i], path + ".components[" + std::to_string(i) + "]"));
    }
  }
  m.noise_std = cfg::number(j, "noise_std", path);
  if (!(m.noise_std > 0.0)) throw ConfigError(path + ".noise_std: must be > 0");
  if (j.contains("fixed")) {
    const Json& f = j.at("fixed");
    if (!f.is_array()) throw ConfigError(path + ".fixed: expected an array of parameter names");
    for (const auto& name : f) {
      if (!name.is_string()) throw ConfigError(path + ".fixed: expected parameter names");
      try {
        m.set_fixed(name.get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(path + ".fixed: " + e.what());
      }
    }
  }
  if (j.contains("priors")) {
    const Json& p = j.at("priors");
    if (!p.is_object()) throw ConfigError(path + ".priors: expected an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      const std::string sub = path + ".priors." + it.key();
      LogNormalPrior prior{cfg::number(it.value(), "mode", sub), cfg::number(it.value(), "log_std", sub)};
      if (!(prior.mode > 0.0) || !(prior.log_std > 0.0)) throw ConfigError(sub + ": mode and log_std must be > 0");
      try {
        m.set_prior(it.key(), prior);
      } catch (const ConfigError& e) {
        throw ConfigError(path + ".priors: " + e.what());
      }
    }
  }
  return m;
}

Json to_json(const FitResult& f) {
  Json j;
  const auto names = f.model.param_names();
  Json params = Json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = {{"initial", std::exp(f.initial_theta[static_cast<Index>(i)])},
                        {"fitted", std::exp(f.theta[static_cast<Index>(i)])}};
  }
  j["parameters"] = params;
  j["initial_value"] = f.initial_value;
  j["value"] = f.value;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  j["line_search_failed"] = f.line_search_failed;
  j["termination"] = f.termination;
  j["seconds"] = f.seconds;
  Json trace = Json::array();
  for (const auto& s : f.trace) trace.push_back({{"iteration", s.iteration}, {"value", s.value}, {"gradient_norm", s.gradient_norm}});
  j["trace"] = trace;
  j["model"] = to_json(f.model);
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace warpski
