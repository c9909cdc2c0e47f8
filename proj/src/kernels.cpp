#include "warpski/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "warpski/error.hpp"

namespace warpski {

namespace {

constexpr double kPi = std::numbers::pi;

int leaf_param_count(KernelKind kind) {
  switch (kind) {
    case KernelKind::SquaredExponential:
      return 2;
    case KernelKind::Periodic:
      return 3;
    case KernelKind::QuasiPeriodic:
      return 4;
    default:
      return 0;
  }
}

const char* const* leaf_param_names(KernelKind kind) {
  static const char* const se[] = {"amplitude", "lengthscale"};
  static const char* const pe[] = {"amplitude", "lengthscale", "period"};
  static const char* const qp[] = {"amplitude", "lengthscale", "periodic_lengthscale", "period"};
  switch (kind) {
    case KernelKind::SquaredExponential:
      return se;
    case KernelKind::Periodic:
      return pe;
    case KernelKind::QuasiPeriodic:
      return qp;
    default:
      return nullptr;
  }
}

// One axis of a leaf, without amplitude.
double axis_shape(KernelKind kind, const Vector& p, double lag) {
  switch (kind) {
    case KernelKind::SquaredExponential:
      return std::exp(-0.5 * lag * lag / (p[1] * p[1]));
    case KernelKind::Periodic: {
      const double s = std::sin(kPi * lag / p[2]);
      return std::exp(-2.0 * s * s / (p[1] * p[1]));
    }
    case KernelKind::QuasiPeriodic: {
      const double s = std::sin(kPi * lag / p[3]);
      return std::exp(-0.5 * lag * lag / (p[1] * p[1]) - 2.0 * s * s / (p[2] * p[2]));
    }
    default:
      throw Error("axis_shape called on a composite kernel");
  }
}

// d(axis value)/d log(p_i), amplitude derivative included when `amplitude`.
void axis_grad(KernelKind kind, const Vector& p, double lag, bool amplitude, double* out) {
  const double shape = axis_shape(kind, p, lag);
  const double amp2 = amplitude ? p[0] * p[0] : 1.0;
  const double v = amp2 * shape;
  out[0] = amplitude ? 2.0 * v : 0.0;
  switch (kind) {
    case KernelKind::SquaredExponential:
      out[1] = v * lag * lag / (p[1] * p[1]);
      break;
    case KernelKind::Periodic: {
      const double arg = kPi * lag / p[2];
      const double s = std::sin(arg);
      out[1] = v * 4.0 * s * s / (p[1] * p[1]);
      out[2] = v * 2.0 * arg * std::sin(2.0 * arg) / (p[1] * p[1]);
      break;
    }
    case KernelKind::QuasiPeriodic: {
      const double arg = kPi * lag / p[3];
      const double s = std::sin(arg);
      out[1] = v * lag * lag / (p[1] * p[1]);
      out[2] = v * 4.0 * s * s / (p[2] * p[2]);
      out[3] = v * 2.0 * arg * std::sin(2.0 * arg) / (p[2] * p[2]);
      break;
    }
    default:
      throw Error("axis_grad called on a composite kernel");
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::SquaredExponential:
      return "se";
    case KernelKind::Periodic:
      return "periodic";
    case KernelKind::QuasiPeriodic:
      return "quasi_periodic";
    case KernelKind::Product:
      return "product";
    case KernelKind::Sum:
      return "sum";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "se" || name == "squared_exponential") return KernelKind::SquaredExponential;
  if (name == "periodic") return KernelKind::Periodic;
  if (name == "quasi_periodic") return KernelKind::QuasiPeriodic;
  if (name == "product") return KernelKind::Product;
  if (name == "sum") return KernelKind::Sum;
  throw ConfigError("unknown kernel kind '" + name + "'");
}

Hyperparameters Hyperparameters::from_values(const std::vector<double>& values) {
  Hyperparameters h;
  h.values_.resize(static_cast<Index>(values.size()));
  h.log_values_.resize(h.values_.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0) {
      std::ostringstream msg;
      msg << "hyperparameter " << i << " must be finite and positive, got " << values[i];
      throw DomainError(msg.str());
    }
    h.values_[static_cast<Index>(i)] = values[i];
    h.log_values_[static_cast<Index>(i)] = std::log(values[i]);
  }
  return h;
}

Hyperparameters Hyperparameters::from_log(const Vector& log_values) {
  Hyperparameters h;
  h.log_values_ = log_values;
  h.values_ = log_values.array().exp();
  for (Index i = 0; i < h.values_.size(); ++i) {
    if (!std::isfinite(h.values_[i]) || h.values_[i] <= 0.0) {
      throw DomainError("log-hyperparameter " + std::to_string(i) + " maps outside (0, inf)");
    }
  }
  return h;
}

double AxisFactor::value(double lag) const {
  const double amp2 = amplitude ? leaf_params[0] * leaf_params[0] : 1.0;
  return amp2 * axis_shape(kind, leaf_params, lag);
}

Vector AxisFactor::grad(double lag) const {
  Vector g(leaf_params.size());
  axis_grad(kind, leaf_params, lag, amplitude, g.data());
  return g;
}

StationaryKernel::StationaryKernel(KernelKind kind, int dims, Hyperparameters params,
                                   std::vector<StationaryKernel> children)
    : kind_(kind), dims_(dims), params_(std::move(params)), children_(std::move(children)) {}

StationaryKernel StationaryKernel::squared_exponential(double amplitude, double lengthscale,
                                                       int dims) {
  if (dims < 1) throw DimensionError("squared exponential kernel needs dims >= 1");
  return {KernelKind::SquaredExponential, dims,
          Hyperparameters::from_values({amplitude, lengthscale}), {}};
}

StationaryKernel StationaryKernel::periodic(double amplitude, double lengthscale, double period) {
  return {KernelKind::Periodic, 1, Hyperparameters::from_values({amplitude, lengthscale, period}),
          {}};
}

StationaryKernel StationaryKernel::quasi_periodic(double amplitude, double lengthscale,
                                                  double periodic_lengthscale, double period) {
  return {KernelKind::QuasiPeriodic, 1,
          Hyperparameters::from_values({amplitude, lengthscale, periodic_lengthscale, period}),
          {}};
}

StationaryKernel StationaryKernel::product(std::vector<StationaryKernel> factors) {
  if (factors.empty()) throw ConfigError("product kernel needs at least one factor");
  int dims = 0;
  for (const auto& f : factors) dims += f.dims();
  return {KernelKind::Product, dims, {}, std::move(factors)};
}

StationaryKernel StationaryKernel::sum(std::vector<StationaryKernel> terms) {
  if (terms.empty()) throw ConfigError("sum kernel needs at least one term");
  const int dims = terms.front().dims();
  for (const auto& t : terms) {
    if (t.dims() != dims) throw DimensionError("sum kernel terms must share the same arity");
  }
  return {KernelKind::Sum, dims, {}, std::move(terms)};
}

int StationaryKernel::num_params() const {
  if (is_leaf()) return static_cast<int>(params_.size());
  int total = 0;
  for (const auto& c : children_) total += c.num_params();
  return total;
}

Vector StationaryKernel::log_params() const {
  if (is_leaf()) return params_.log_values();
  Vector out(num_params());
  Index at = 0;
  for (const auto& c : children_) {
    const Vector v = c.log_params();
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

StationaryKernel StationaryKernel::rebuild(const double*& cursor) const {
  if (is_leaf()) {
    Vector logs = Eigen::Map<const Vector>(cursor, params_.size());
    cursor += params_.size();
    return {kind_, dims_, Hyperparameters::from_log(logs), {}};
  }
  std::vector<StationaryKernel> kids;
  kids.reserve(children_.size());
  for (const auto& c : children_) kids.push_back(c.rebuild(cursor));
  return {kind_, dims_, {}, std::move(kids)};
}

StationaryKernel StationaryKernel::with_log_params(const Vector& log_params) const {
  if (log_params.size() != num_params()) {
    throw DimensionError("expected " + std::to_string(num_params()) + " log-parameters, got " +
                         std::to_string(log_params.size()));
  }
  const double* cursor = log_params.data();
  return rebuild(cursor);
}

void StationaryKernel::names_into(const std::string& prefix, std::vector<std::string>& out) const {
  if (is_leaf()) {
    const char* const* names = leaf_param_names(kind_);
    for (int i = 0; i < leaf_param_count(kind_); ++i) out.push_back(prefix + names[i]);
    return;
  }
  for (std::size_t i = 0; i < children_.size(); ++i) {
    children_[i].names_into(prefix + std::to_string(i) + ".", out);
  }
}

std::vector<std::string> StationaryKernel::param_names() const {
  std::vector<std::string> out;
  names_into("", out);
  return out;
}

double StationaryKernel::eval(std::span<const double> lag) const {
  if (static_cast<int>(lag.size()) != dims_) {
    throw DimensionError("kernel of arity " + std::to_string(dims_) + " evaluated at a " +
                         std::to_string(lag.size()) + "-dimensional lag");
  }
  switch (kind_) {
    case KernelKind::SquaredExponential: {
      double r2 = 0.0;
      for (double t : lag) r2 += t * t;
      const double a = params_.value(0), l = params_.value(1);
      return a * a * std::exp(-0.5 * r2 / (l * l));
    }
    case KernelKind::Periodic:
    case KernelKind::QuasiPeriodic: {
      const double a = params_.value(0);
      return a * a * axis_shape(kind_, params_.values(), lag[0]);
    }
    case KernelKind::Product: {
      double v = 1.0;
      std::size_t at = 0;
      for (const auto& c : children_) {
        v *= c.eval(lag.subspan(at, static_cast<std::size_t>(c.dims())));
        at += static_cast<std::size_t>(c.dims());
      }
      return v;
    }
    case KernelKind::Sum: {
      double v = 0.0;
      for (const auto& c : children_) v += c.eval(lag);
      return v;
    }
  }
  return 0.0;
}

void StationaryKernel::grad_into(std::span<const double> lag, double* out) const {
  switch (kind_) {
    case KernelKind::SquaredExponential: {
      double r2 = 0.0;
      for (double t : lag) r2 += t * t;
      const double a = params_.value(0), l = params_.value(1);
      const double v = a * a * std::exp(-0.5 * r2 / (l * l));
      out[0] = 2.0 * v;
      out[1] = v * r2 / (l * l);
      return;
    }
    case KernelKind::Periodic:
    case KernelKind::QuasiPeriodic:
      axis_grad(kind_, params_.values(), lag[0], true, out);
      return;
    case KernelKind::Product: {
      // d(prod f_c) = df_c * prod_{c' != c} f_c'
      std::vector<double> values(children_.size());
      std::size_t at = 0;
      for (std::size_t i = 0; i < children_.size(); ++i) {
        values[i] = children_[i].eval(lag.subspan(at, static_cast<std::size_t>(children_[i].dims())));
        at += static_cast<std::size_t>(children_[i].dims());
      }
      at = 0;
      double* cursor = out;
      for (std::size_t i = 0; i < children_.size(); ++i) {
        const auto& c = children_[i];
        double others = 1.0;
        for (std::size_t j = 0; j < children_.size(); ++j) {
          if (j != i) others *= values[j];
        }
        c.grad_into(lag.subspan(at, static_cast<std::size_t>(c.dims())), cursor);
        for (int p = 0; p < c.num_params(); ++p) cursor[p] *= others;
        cursor += c.num_params();
        at += static_cast<std::size_t>(c.dims());
      }
      return;
    }
    case KernelKind::Sum: {
      double* cursor = out;
      for (const auto& c : children_) {
        c.grad_into(lag, cursor);
        cursor += c.num_params();
      }
      return;
    }
  }
}

Vector StationaryKernel::grad(std::span<const double> lag) const {
  if (static_cast<int>(lag.size()) != dims_) {
    throw DimensionError("kernel of arity " + std::to_string(dims_) + " differentiated at a " +
                         std::to_string(lag.size()) + "-dimensional lag");
  }
  Vector g(num_params());
  grad_into(lag, g.data());
  return g;
}

double StationaryKernel::variance() const {
  const std::vector<double> zero(static_cast<std::size_t>(dims_), 0.0);
  return eval(zero);
}

double StationaryKernel::min_lengthscale() const {
  switch (kind_) {
    case KernelKind::SquaredExponential:
      return params_.value(1);
    case KernelKind::Periodic:
      return params_.value(1) * params_.value(2) / (2.0 * kPi);
    case KernelKind::QuasiPeriodic:
      return std::min(params_.value(1), params_.value(2) * params_.value(3) / (2.0 * kPi));
    default: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : children_) best = std::min(best, c.min_lengthscale());
      return best;
    }
  }
}

void StationaryKernel::collect_terms(int dim_offset, int param_offset,
                                     std::vector<SeparableTerm>& out) const {
  if (is_leaf()) {
    SeparableTerm term;
    for (int d = 0; d < dims_; ++d) {
      AxisFactor f;
      f.kind = kind_;
      f.leaf_params = params_.values();
      f.leaf_axis = d;
      f.amplitude = (d == 0);
      f.param_offset = param_offset;
      term.factors.push_back(std::move(f));
    }
    out.push_back(std::move(term));
    return;
  }
  if (kind_ == KernelKind::Sum) {
    int p = param_offset;
    for (const auto& c : children_) {
      c.collect_terms(dim_offset, p, out);
      p += c.num_params();
    }
    return;
  }
  // Product: cartesian product of the children's expansions.
  std::vector<SeparableTerm> acc(1);
  int p = param_offset;
  int d = dim_offset;
  for (const auto& c : children_) {
    std::vector<SeparableTerm> child_terms;
    c.collect_terms(d, p, child_terms);
    std::vector<SeparableTerm> next;
    next.reserve(acc.size() * child_terms.size());
    for (const auto& a : acc) {
      for (const auto& b : child_terms) {
        SeparableTerm t = a;
        t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
        next.push_back(std::move(t));
      }
    }
    acc = std::move(next);
    p += c.num_params();
    d += c.dims();
  }
  out.insert(out.end(), acc.begin(), acc.end());
}

std::vector<SeparableTerm> StationaryKernel::separable_terms() const {
  std::vector<SeparableTerm> out;
  collect_terms(0, 0, out);
  return out;
}

Index first_nonuniform_index(const Vector& axis) {
  if (axis.size() < 3) return -1;
  const double h = axis[1] - axis[0];
  for (Index j = 2; j < axis.size(); ++j) {
    const double hj = axis[j] - axis[j - 1];
    if (std::abs(hj - h) > kEquispacedTolerance * std::abs(h)) return j;
  }
  return -1;
}

Vector toeplitz_column(const StationaryKernel& kernel_1d, const Vector& axis) {
  if (kernel_1d.dims() != 1) {
    throw DimensionError("toeplitz_column needs a 1-D kernel, got arity " +
                         std::to_string(kernel_1d.dims()));
  }
  if (const Index bad = first_nonuniform_index(axis); bad >= 0) {
    throw NotEquispacedError(static_cast<std::size_t>(bad),
                             "axis is not equispaced at index " + std::to_string(bad));
  }
  Vector c(axis.size());
  for (Index j = 0; j < axis.size(); ++j) c[j] = kernel_1d.eval(axis[j] - axis[0]);
  return c;
}

Vector factor_column(const AxisFactor& factor, const Vector& axis) {
  if (const Index bad = first_nonuniform_index(axis); bad >= 0) {
    throw NotEquispacedError(static_cast<std::size_t>(bad),
                             "axis is not equispaced at index " + std::to_string(bad));
  }
  Vector c(axis.size());
  for (Index j = 0; j < axis.size(); ++j) c[j] = factor.value(axis[j] - axis[0]);
  return c;
}

}  // namespace warpski
