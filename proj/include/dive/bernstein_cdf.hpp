#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dive {

/// Strictly increasing CDF on the reals composed with the Bernstein index.
enum class LinkKind { standard_normal, standard_logistic, min_extreme_value, max_extreme_value };

class LinkFunction {
 public:
  constexpr LinkFunction() = default;
  constexpr explicit LinkFunction(LinkKind kind) : kind_(kind) {}

  static LinkFunction parse(std::string_view name);

  LinkKind kind() const { return kind_; }
  std::string_view name() const;

  double cdf(double x) const;
  // 1 - cdf(x) without cancellation in the upper tail
  double sf(double x) const;
  double pdf(double x) const;
  // d/dx log pdf(x)
  double dlog_pdf(double x) const;
  double log_pdf(double x) const;

  friend bool operator==(LinkFunction, LinkFunction) = default;

 private:
  LinkKind kind_ = LinkKind::standard_normal;
};

/// Affine map of the response support [lower, upper] onto [0, 1].
class ResponseScaler {
 public:
  ResponseScaler(double lower, double upper);

  // Padded support [min - pad*range, max + pad*range].
  static ResponseScaler from_sample(std::span<const double> y, double pad = 0.1);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  double scale(double y) const { return (y - lower_) / (upper_ - lower_); }
  double unscale(double u) const { return lower_ + u * (upper_ - lower_); }

  friend bool operator==(const ResponseScaler&, const ResponseScaler&) = default;

 private:
  double lower_;
  double upper_;
};

/// Bernstein basis of order M at u in [0, 1]: M+1 values binom(M,k) u^k (1-u)^(M-k).
std::vector<double> bernstein_basis(double u, int order);
/// Componentwise d/du of bernstein_basis.
std::vector<double> bernstein_basis_derivative(double u, int order);

inline constexpr double kDefaultBound = 15.0;

/// Non-decreasing coefficient vector of length M+1 with entries inside (-bound, bound).
class MonotoneCoefficients {
 public:
  MonotoneCoefficients(std::vector<double> theta, double bound = kDefaultBound, bool clipped = false);

  std::span<const double> theta() const { return theta_; }
  int order() const { return static_cast<int>(theta_.size()) - 1; }
  double bound() const { return bound_; }
  // Set when constrain() had to pull an entry back inside the bound.
  bool clipped() const { return clipped_; }
  bool strictly_increasing() const;
  // At least two distinct entries.
  bool non_degenerate() const;

 private:
  std::vector<double> theta_;
  double bound_;
  bool clipped_;
};

/// Unconstrained parameters; theta[0] = gamma[0], theta[j] = theta[j-1] + softplus(gamma[j]).
struct UnconstrainedParams {
  std::vector<double> gamma;
};

// Smallest increment produced by constrain(); keeps theta strictly increasing
// when softplus underflows.
inline constexpr double kMinIncrement = 1e-12;

MonotoneCoefficients constrain(const UnconstrainedParams& params, double bound = kDefaultBound);
UnconstrainedParams unconstrain(const MonotoneCoefficients& coeffs);

/// Backpropagates a gradient w.r.t. theta onto gamma through constrain().
/// Entries that were clipped, or whose increment hit kMinIncrement, contribute zero.
std::vector<double> constrain_backward(const UnconstrainedParams& params, std::span<const double> grad_theta,
                                       double bound = kDefaultBound);

/// F(y) = link(a_M(scale(y)) . theta)
class ParametricCDF {
 public:
  ParametricCDF(ResponseScaler scaler, LinkFunction link, MonotoneCoefficients coeffs);

  const ResponseScaler& scaler() const { return scaler_; }
  LinkFunction link() const { return link_; }
  const MonotoneCoefficients& coeffs() const { return coeffs_; }
  int order() const { return coeffs_.order(); }
  double lower() const { return scaler_.lower(); }
  double upper() const { return scaler_.upper(); }

  // Basis expansion at y, with y clamped to [L, U].
  double index(double y) const;
  // d index / d y on [L, U]; non-negative for monotone coefficients.
  double index_slope(double y) const;

  double cdf(double y) const;
  // 1 - cdf(y), accurate where cdf(y) rounds to 1
  double sf(double y) const;
  // Throws DomainError outside [L, U].
  double pdf(double y) const;
  // Throws DegenerateCdfError for constant theta, RangeError when tau is not
  // within [cdf(L), cdf(U)].
  double quantile(double tau) const;

 private:
  ResponseScaler scaler_;
  LinkFunction link_;
  MonotoneCoefficients coeffs_;
};

/// Shared support, link, order and bound for a family of parametric CDFs.
struct CdfFamily {
  ResponseScaler scaler;
  LinkFunction link;
  int order = 50;
  double bound = kDefaultBound;

  std::size_t num_params() const { return static_cast<std::size_t>(order) + 1; }
  ParametricCDF make(std::span<const double> gamma) const;
  // gamma producing theta equally spaced over [lo, hi].
  UnconstrainedParams ramp(double lo = -2.0, double hi = 2.0) const;
};

}  // namespace dive
