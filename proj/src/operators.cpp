#include "warpski/operators.hpp"

#include <cmath>

#include "warpski/error.hpp"

namespace warpski {

namespace {

AxisOperator axis_factor_operator(const Vector& axis, bool equispaced,
                                  const std::function<double(double)>& k) {
  const Index m = axis.size();
  if (equispaced) {
    Vector c(m);
    for (Index j = 0; j < m; ++j) c[j] = k(axis[j] - axis[0]);
    return SymToeplitz(std::move(c));
  }
  Matrix K(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = k(axis[i] - axis[j]);
  }
  return K;
}

}  // namespace

InducingGrid component_grid(const ComponentSpec& spec, const Points& X) {
  if (X.cols() != spec.warp.dims() || spec.kernel.dims() != spec.warp.dims()) {
    throw DimensionError("component '" + spec.name + "': kernel arity " +
                         std::to_string(spec.kernel.dims()) + ", warp dimension " +
                         std::to_string(spec.warp.dims()) + ", points have " +
                         std::to_string(X.cols()) + " columns");
  }
  Box box = Box::bounding(spec.warp.forward(X));
  if (spec.grid.box) box = box.merged(spec.grid.box->warped(spec.warp));

  std::vector<Index> counts = spec.grid.counts;
  if (counts.empty()) {
    if (!(spec.grid.points_per_lengthscale > 0.0)) {
      throw ConfigError("component '" + spec.name + "': points_per_lengthscale must be > 0");
    }
    const double h = spec.kernel.min_lengthscale() / spec.grid.points_per_lengthscale;
    for (int d = 0; d < box.dims(); ++d) {
      const double extent = box.hi[d] - box.lo[d];
      const auto cells = static_cast<Index>(std::ceil(extent / h));
      counts.push_back(std::max<Index>(kMinAxisCount, cells + 1 + 2 * kMarginCells));
    }
  } else if (static_cast<int>(counts.size()) != box.dims()) {
    throw ConfigError("component '" + spec.name + "': need " + std::to_string(box.dims()) +
                      " grid counts, got " + std::to_string(counts.size()));
  }
  return InducingGrid::covering(box, counts);
}

std::vector<KronOperator> build_kuu(const StationaryKernel& kernel, const InducingGrid& grid) {
  if (kernel.dims() != grid.dims()) {
    throw DimensionError("kernel arity " + std::to_string(kernel.dims()) + " vs grid dimension " +
                         std::to_string(grid.dims()));
  }
  std::vector<KronOperator> out;
  for (const auto& term : kernel.separable_terms()) {
    std::vector<AxisOperator> factors;
    for (int d = 0; d < grid.dims(); ++d) {
      const AxisFactor& f = term.factors[static_cast<std::size_t>(d)];
      factors.push_back(axis_factor_operator(grid.axis(d), grid.equispaced(d),
                                             [&f](double t) { return f.value(t); }));
    }
    out.emplace_back(std::move(factors));
  }
  return out;
}

SkiComponent SkiComponent::build(const ComponentSpec& spec, const Points& X) {
  return build(spec, component_grid(spec, X), X);
}

SkiComponent SkiComponent::build(const ComponentSpec& spec, const InducingGrid& grid,
                                 const Points& X) {
  auto weights =
      std::make_shared<const InterpWeights>(interpolation_weights(grid, spec.warp.forward(X)));
  return SkiComponent(spec.name, spec.kernel, spec.warp, std::make_shared<const InducingGrid>(grid),
                      std::move(weights));
}

SkiComponent::SkiComponent(std::string name, StationaryKernel kernel, Warp warp,
                           std::shared_ptr<const InducingGrid> grid,
                           std::shared_ptr<const InterpWeights> weights)
    : name_(std::move(name)),
      kernel_(std::move(kernel)),
      warp_(std::move(warp)),
      grid_(std::move(grid)),
      weights_(std::move(weights)) {
  rebuild_kernel_structure();
}

SkiComponent SkiComponent::with_kernel(const StationaryKernel& kernel) const {
  if (kernel.dims() != kernel_.dims() || kernel.num_params() != kernel_.num_params()) {
    throw DimensionError("replacement kernel has a different structure");
  }
  SkiComponent c = *this;
  c.kernel_ = kernel;
  c.rebuild_kernel_structure();
  return c;
}

void SkiComponent::rebuild_kernel_structure() {
  kuu_ = build_kuu(kernel_, *grid_);
  derivatives_.clear();
  const auto terms = kernel_.separable_terms();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (int d = 0; d < grid_->dims(); ++d) {
      const AxisFactor& f = terms[t].factors[static_cast<std::size_t>(d)];
      for (Index p = 0; p < f.leaf_params.size(); ++p) {
        if (p == 0 && !f.amplitude) continue;  // amplitude lives on the leaf's first axis
        derivatives_.push_back(
            {static_cast<int>(t), d, f.param_offset + static_cast<int>(p),
             axis_factor_operator(grid_->axis(d), grid_->equispaced(d),
                                  [&f, p](double tau) { return f.grad(tau)[p]; })});
      }
    }
  }
}

Vector SkiComponent::kuu_matvec(const Vector& u) const {
  Vector out = kuu_.front().matvec(u);
  for (std::size_t t = 1; t < kuu_.size(); ++t) out += kuu_[t].matvec(u);
  return out;
}

Vector SkiComponent::kuu_derivative_matvec(int param, const Vector& u) const {
  if (param < 0 || param >= num_params()) {
    throw DimensionError("component '" + name_ + "' has no parameter " + std::to_string(param));
  }
  if (u.size() != grid_->total_size()) throw DimensionError("K_UU derivative size mismatch");
  const auto sizes = grid_->sizes();
  Vector out = Vector::Zero(u.size());
  for (const auto& df : derivatives_) {
    if (df.param != param) continue;
    const KronOperator& K = kuu_[static_cast<std::size_t>(df.term)];
    Vector t = u;
    for (int d = 0; d < K.num_factors(); ++d) {
      apply_mode_product(d == df.axis ? df.op : K.factor(d), d, sizes, t);
    }
    out += t;
  }
  return out;
}

Vector SkiComponent::matvec(const Vector& v) const {
  return weights_->matvec(kuu_matvec(weights_->rmatvec(v)));
}

Vector SkiComponent::derivative_matvec(int param, const Vector& v) const {
  return weights_->matvec(kuu_derivative_matvec(param, weights_->rmatvec(v)));
}

Vector SkiComponent::cross_matvec(const InterpWeights& rows_star, const Vector& v) const {
  if (rows_star.cols() != grid_->total_size()) {
    throw DimensionError("cross weights were built on a different grid");
  }
  return rows_star.matvec(kuu_matvec(weights_->rmatvec(v)));
}

Matrix SkiComponent::kuu_dense() const {
  Matrix K = kuu_.front().to_dense();
  for (std::size_t t = 1; t < kuu_.size(); ++t) K += kuu_[t].to_dense();
  return K;
}

Matrix SkiComponent::to_dense() const {
  const InterpWeights& W = *weights_;
  const Index n = W.rows(), m = W.cols();
  // B = K_UU W^T column by column, then K = W B.
  Matrix B(m, n);
  for (Index r = 0; r < n; ++r) {
    Vector e = Vector::Zero(m);
    const auto idx = W.row_indices(r);
    const auto val = W.row_values(r);
    for (std::size_t s = 0; s < idx.size(); ++s) e[idx[s]] += val[s];
    B.col(r) = kuu_matvec(e);
  }
  Matrix K(n, n);
  for (Index c = 0; c < n; ++c) K.col(c) = W.matvec(B.col(c));
  return 0.5 * (K + K.transpose());
}

MixtureOperator::MixtureOperator(std::vector<SkiComponent> components, double noise_std, Index n)
    : components_(std::move(components)), noise_std_(noise_std), n_(n) {
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) {
    throw DomainError("noise standard deviation must be positive");
  }
  for (const auto& c : components_) {
    if (c.rows() != n) throw DimensionError("component '" + c.name() + "' has a different size");
  }
}

MixtureOperator MixtureOperator::build(const std::vector<ComponentSpec>& specs, double noise_std,
                                       const Points& X) {
  std::vector<SkiComponent> comps;
  comps.reserve(specs.size());
  for (const auto& s : specs) comps.push_back(SkiComponent::build(s, X));
  return {std::move(comps), noise_std, X.rows()};
}

int MixtureOperator::num_params() const {
  int total = 1;
  for (const auto& c : components_) total += c.num_params();
  return total;
}

Vector MixtureOperator::log_params() const {
  Vector theta(num_params());
  Index at = 0;
  for (const auto& c : components_) {
    const Vector p = c.kernel().log_params();
    theta.segment(at, p.size()) = p;
    at += p.size();
  }
  theta[at] = std::log(noise_std_);
  return theta;
}

MixtureOperator MixtureOperator::with_log_params(const Vector& log_params) const {
  if (log_params.size() != num_params()) {
    throw DimensionError("expected " + std::to_string(num_params()) + " log-parameters, got " +
                         std::to_string(log_params.size()));
  }
  std::vector<SkiComponent> comps;
  Index at = 0;
  for (const auto& c : components_) {
    const Vector p = log_params.segment(at, c.num_params());
    comps.push_back(c.with_kernel(c.kernel().with_log_params(p)));
    at += c.num_params();
  }
  return {std::move(comps), std::exp(log_params[at]), n_};
}

Vector MixtureOperator::matvec(const Vector& v) const {
  if (v.size() != n_) {
    throw DimensionError("operator of size " + std::to_string(n_) +
                         " applied to a vector of length " + std::to_string(v.size()));
  }
  Vector out = noise_variance() * v;
  for (const auto& c : components_) out += c.matvec(v);
  return out;
}

Vector MixtureOperator::component_matvec(int i, const Vector& v) const {
  if (i < 0 || i >= num_components()) throw DimensionError("no component " + std::to_string(i));
  if (v.size() != n_) throw DimensionError("component_matvec size mismatch");
  return components_[static_cast<std::size_t>(i)].matvec(v);
}

Vector MixtureOperator::derivative_matvec(int which, const Vector& v) const {
  if (which < 0 || which >= num_params()) {
    throw DimensionError("parameter index " + std::to_string(which) + " out of range [0, " +
                         std::to_string(num_params()) + ")");
  }
  if (v.size() != n_) throw DimensionError("derivative_matvec size mismatch");
  int offset = 0;
  for (const auto& c : components_) {
    if (which < offset + c.num_params()) return c.derivative_matvec(which - offset, v);
    offset += c.num_params();
  }
  return 2.0 * noise_variance() * v;
}

Matrix MixtureOperator::to_dense() const {
  Matrix K = noise_variance() * Matrix::Identity(n_, n_);
  for (const auto& c : components_) K += c.to_dense();
  return K;
}

}  // namespace warpski
