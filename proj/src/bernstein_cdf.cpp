#include "dive/bernstein_cdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dive/errors.hpp"
#include "dive/special.hpp"

namespace dive {

LinkFunction LinkFunction::parse(std::string_view name) {
  if (name == "standard-normal" || name == "normal") return LinkFunction(LinkKind::standard_normal);
  if (name == "standard-logistic" || name == "logistic") return LinkFunction(LinkKind::standard_logistic);
  if (name == "min-extreme-value" || name == "minev") return LinkFunction(LinkKind::min_extreme_value);
  if (name == "max-extreme-value" || name == "maxev") return LinkFunction(LinkKind::max_extreme_value);
  throw DomainError("unknown link function: " + std::string(name));
}

std::string_view LinkFunction::name() const {
  switch (kind_) {
    case LinkKind::standard_normal: return "standard-normal";
    case LinkKind::standard_logistic: return "standard-logistic";
    case LinkKind::min_extreme_value: return "min-extreme-value";
    case LinkKind::max_extreme_value: return "max-extreme-value";
  }
  return "standard-normal";
}

double LinkFunction::cdf(double x) const {
  switch (kind_) {
    case LinkKind::standard_normal: return normal_cdf(x);
    case LinkKind::standard_logistic: return expit(x);
    case LinkKind::min_extreme_value: return -std::expm1(-std::exp(x));
    case LinkKind::max_extreme_value: return std::exp(-std::exp(-x));
  }
  return 0.0;
}

double LinkFunction::sf(double x) const {
  switch (kind_) {
    case LinkKind::standard_normal: return normal_cdf(-x);
    case LinkKind::standard_logistic: return expit(-x);
    case LinkKind::min_extreme_value: return std::exp(-std::exp(x));
    case LinkKind::max_extreme_value: return -std::expm1(-std::exp(-x));
  }
  return 1.0;
}

double LinkFunction::log_pdf(double x) const {
  switch (kind_) {
    case LinkKind::standard_normal: return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
    case LinkKind::standard_logistic: return -std::abs(x) - 2.0 * std::log1p(std::exp(-std::abs(x)));
    case LinkKind::min_extreme_value: return x - std::exp(x);
    case LinkKind::max_extreme_value: return -x - std::exp(-x);
  }
  return 0.0;
}

double LinkFunction::pdf(double x) const {
  switch (kind_) {
    case LinkKind::standard_normal: return normal_pdf(x);
    case LinkKind::standard_logistic: {
      const double p = expit(x);
      return p * (1.0 - p);
    }
    default: return std::exp(log_pdf(x));
  }
}

double LinkFunction::dlog_pdf(double x) const {
  switch (kind_) {
    case LinkKind::standard_normal: return -x;
    case LinkKind::standard_logistic: return 1.0 - 2.0 * expit(x);
    case LinkKind::min_extreme_value: return 1.0 - std::exp(x);
    case LinkKind::max_extreme_value: return std::exp(-x) - 1.0;
  }
  return 0.0;
}

ResponseScaler::ResponseScaler(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper))
    throw DomainError("ResponseScaler: need finite lower < upper");
}

ResponseScaler ResponseScaler::from_sample(std::span<const double> y, double pad) {
  if (y.empty()) throw DataError("ResponseScaler: empty sample");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  if (!(range > 0)) throw DataError("ResponseScaler: response has zero range");
  return ResponseScaler(*lo - pad * range, *hi + pad * range);
}

namespace {

void check_basis_args(double u, int order) {
  if (order < 1) throw DomainError("bernstein basis: order must be >= 1");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("bernstein basis: u must lie in [0, 1]");
}

// de Casteljau-style triangle: b^m_k = (1-u) b^{m-1}_k + u b^{m-1}_{k-1}.
// Every step is a convex combination, so no binomials or powers are formed.
void basis_into(double u, int order, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(order) + 1, 0.0);
  out[0] = 1.0;
  const double v = 1.0 - u;
  for (int m = 1; m <= order; ++m) {
    for (int k = m; k >= 1; --k) out[k] = v * out[k] + u * out[k - 1];
    out[0] *= v;
  }
}

}  // namespace

std::vector<double> bernstein_basis(double u, int order) {
  check_basis_args(u, order);
  std::vector<double> out;
  basis_into(u, order, out);
  return out;
}

std::vector<double> bernstein_basis_derivative(double u, int order) {
  check_basis_args(u, order);
  std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
  if (order == 1) {
    out[0] = -1.0;
    out[1] = 1.0;
    return out;
  }
  std::vector<double> lower;
  basis_into(u, order - 1, lower);
  for (int k = 0; k <= order; ++k) {
    const double left = k >= 1 ? lower[k - 1] : 0.0;
    const double right = k <= order - 1 ? lower[k] : 0.0;
    out[k] = order * (left - right);
  }
  return out;
}

MonotoneCoefficients::MonotoneCoefficients(std::vector<double> theta, double bound, bool clipped)
    : theta_(std::move(theta)), bound_(bound), clipped_(clipped) {
  if (theta_.size() < 2) throw DomainError("MonotoneCoefficients: need order >= 1");
  if (!(bound > 0)) throw DomainError("MonotoneCoefficients: bound must be positive");
  for (std::size_t j = 0; j < theta_.size(); ++j) {
    if (!std::isfinite(theta_[j])) throw DomainError("MonotoneCoefficients: non-finite entry");
    if (std::abs(theta_[j]) >= bound_) throw DomainError("MonotoneCoefficients: entry outside (-bound, bound)");
    if (j > 0 && theta_[j] < theta_[j - 1]) throw DomainError("MonotoneCoefficients: theta must be non-decreasing");
  }
}

bool MonotoneCoefficients::strictly_increasing() const {
  return std::adjacent_find(theta_.begin(), theta_.end(), std::greater_equal<>()) == theta_.end();
}

bool MonotoneCoefficients::non_degenerate() const { return theta_.front() < theta_.back(); }

namespace {

double inside_bound(double bound) { return std::nextafter(bound, 0.0); }

}  // namespace

MonotoneCoefficients constrain(const UnconstrainedParams& params, double bound) {
  const auto& g = params.gamma;
  if (g.size() < 2) throw DomainError("constrain: need at least two parameters");
  for (double v : g)
    if (!std::isfinite(v)) throw DomainError("constrain: non-finite parameter");
  std::vector<double> theta(g.size());
  theta[0] = g[0];
  for (std::size_t j = 1; j < g.size(); ++j) theta[j] = theta[j - 1] + std::max(softplus(g[j]), kMinIncrement);
  const double b = inside_bound(bound);
  bool clipped = false;
  for (double& t : theta) {
    if (t > b || t < -b) {
      t = std::clamp(t, -b, b);
      clipped = true;
    }
  }
  return MonotoneCoefficients(std::move(theta), bound, clipped);
}

UnconstrainedParams unconstrain(const MonotoneCoefficients& coeffs) {
  const auto theta = coeffs.theta();
  if (!coeffs.strictly_increasing()) throw DomainError("unconstrain: theta must be strictly increasing");
  UnconstrainedParams p;
  p.gamma.resize(theta.size());
  p.gamma[0] = theta[0];
  for (std::size_t j = 1; j < theta.size(); ++j) p.gamma[j] = softplus_inv(theta[j] - theta[j - 1]);
  return p;
}

std::vector<double> constrain_backward(const UnconstrainedParams& params, std::span<const double> grad_theta,
                                       double bound) {
  const auto& g = params.gamma;
  if (grad_theta.size() != g.size()) throw DomainError("constrain_backward: size mismatch");
  // Recompute the unclipped forward pass to know which entries are active.
  const std::size_t m = g.size();
  std::vector<double> raw(m);
  raw[0] = g[0];
  for (std::size_t j = 1; j < m; ++j) raw[j] = raw[j - 1] + std::max(softplus(g[j]), kMinIncrement);
  const double b = inside_bound(bound);
  std::vector<double> out(m, 0.0);
  double tail = 0.0;  // sum of active grad_theta[k] for k >= j
  for (std::size_t jj = m; jj-- > 0;) {
    if (raw[jj] <= b && raw[jj] >= -b) tail += grad_theta[jj];
    if (jj == 0) {
      out[0] = tail;
    } else {
      const bool floored = softplus(g[jj]) < kMinIncrement;
      out[jj] = floored ? 0.0 : expit(g[jj]) * tail;
    }
  }
  return out;
}

ParametricCDF::ParametricCDF(ResponseScaler scaler, LinkFunction link, MonotoneCoefficients coeffs)
    : scaler_(scaler), link_(link), coeffs_(std::move(coeffs)) {}

double ParametricCDF::index(double y) const {
  const double u = std::clamp(scaler_.scale(y), 0.0, 1.0);
  const auto b = bernstein_basis(u, order());
  const auto theta = coeffs_.theta();
  double h = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) h += b[k] * theta[k];
  return h;
}

double ParametricCDF::index_slope(double y) const {
  const double u = std::clamp(scaler_.scale(y), 0.0, 1.0);
  const int m = order();
  const auto theta = coeffs_.theta();
  // a'(u).theta = M * sum_k b^{M-1}_k(u) (theta[k+1] - theta[k]); every term is >= 0.
  std::vector<double> lower;
  if (m == 1) {
    lower = {1.0};
  } else {
    lower = bernstein_basis(u, m - 1);
  }
  double s = 0.0;
  for (int k = 0; k < m; ++k) s += lower[k] * (theta[k + 1] - theta[k]);
  return m * s / scaler_.width();
}

double ParametricCDF::cdf(double y) const { return link_.cdf(index(y)); }

double ParametricCDF::sf(double y) const { return link_.sf(index(y)); }

double ParametricCDF::pdf(double y) const {
  if (!(y >= lower() && y <= upper())) throw DomainError("pdf: y outside [L, U]");
  return link_.pdf(index(y)) * index_slope(y);
}

double ParametricCDF::quantile(double tau) const {
  if (!coeffs_.non_degenerate()) throw DegenerateCdfError("quantile: CDF is flat (constant coefficients)");
  const double f_lo = cdf(lower());
  const double f_hi = cdf(upper());
  if (!(tau >= f_lo && tau <= f_hi)) throw RangeError("quantile: tau outside the attained range of the CDF");
  double lo = lower();
  double hi = upper();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = cdf(mid);
    if (std::abs(f - tau) <= 1e-12) return mid;
    if (f < tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(cdf(lo) - tau) <= std::abs(cdf(hi) - tau) ? lo : hi;
}

ParametricCDF CdfFamily::make(std::span<const double> gamma) const {
  if (gamma.size() != num_params()) throw DomainError("CdfFamily::make: wrong parameter count");
  UnconstrainedParams p{{gamma.begin(), gamma.end()}};
  return ParametricCDF(scaler, link, constrain(p, bound));
}

UnconstrainedParams CdfFamily::ramp(double lo, double hi) const {
  std::vector<double> theta(num_params());
  for (int k = 0; k <= order; ++k) theta[k] = lo + (hi - lo) * k / order;
  return unconstrain(MonotoneCoefficients(std::move(theta), bound));
}

}  // namespace dive
