#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <string_view>
#include <vector>

#include "dive/criteria.hpp"
#include "dive/errors.hpp"
#include "dive/special.hpp"

namespace dive {

/// Anything with a CDF, its inverse and a bounded support.
template <class F>
concept CdfOnSupport = requires(const F& f, double x) {
  { f.cdf(x) } -> std::convertible_to<double>;
  { f.quantile(x) } -> std::convertible_to<double>;
  { f.lower() } -> std::convertible_to<double>;
  { f.upper() } -> std::convertible_to<double>;
};

enum class EffectKind { dte, qte, dok, logit_ce };

std::string_view to_string(EffectKind kind);
EffectKind parse_effect_kind(std::string_view name);

/// Effect evaluated on a strictly increasing abscissa; masked points carry no value.
struct EffectCurve {
  EffectKind kind;
  std::vector<double> abscissa;
  std::vector<std::optional<double>> values;

  std::size_t size() const { return abscissa.size(); }
};

/// n equally spaced points over [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t n);
/// 201 points over the support.
std::vector<double> default_y_grid(double lower, double upper);
/// {0.05, 0.06, ..., 0.95}
std::vector<double> default_tau_grid();

namespace detail {

template <class F0, class F1>
void require_common_support(const F0& f0, const F1& f1) {
  if (f0.lower() != f1.lower() || f0.upper() != f1.upper())
    throw DomainError("effects: CDFs are defined on different supports");
}

void require_increasing(const std::vector<double>& grid);

template <class F>
bool in_attained_range(const F& f, double tau) {
  return tau >= f.cdf(f.lower()) && tau <= f.cdf(f.upper());
}

}  // namespace detail

/// F1(y) - F0(y)
template <CdfOnSupport F0, CdfOnSupport F1>
EffectCurve dte(const F0& f0, const F1& f1, const std::vector<double>& grid) {
  detail::require_common_support(f0, f1);
  detail::require_increasing(grid);
  EffectCurve out{EffectKind::dte, grid, {}};
  for (double y : grid) out.values.emplace_back(f1.cdf(y) - f0.cdf(y));
  return out;
}

/// Q1(tau) - Q0(tau). Throws RangeError when tau is outside either attained range.
template <CdfOnSupport F0, CdfOnSupport F1>
EffectCurve qte(const F0& f0, const F1& f1, const std::vector<double>& tau_grid) {
  detail::require_common_support(f0, f1);
  detail::require_increasing(tau_grid);
  EffectCurve out{EffectKind::qte, tau_grid, {}};
  for (double tau : tau_grid) {
    if (!detail::in_attained_range(f0, tau) || !detail::in_attained_range(f1, tau))
      throw RangeError("qte: tau " + std::to_string(tau) + " outside the attained range of a CDF");
    out.values.emplace_back(f1.quantile(tau) - f0.quantile(tau));
  }
  return out;
}

/// Q0(F1(y)) - y, masked where F1(y) leaves the range attained by F0.
template <CdfOnSupport F0, CdfOnSupport F1>
EffectCurve dok(const F0& f0, const F1& f1, const std::vector<double>& grid) {
  detail::require_common_support(f0, f1);
  detail::require_increasing(grid);
  EffectCurve out{EffectKind::dok, grid, {}};
  for (double y : grid) {
    const double tau = f1.cdf(y);
    if (detail::in_attained_range(f0, tau)) {
      out.values.emplace_back(f0.quantile(tau) - y);
    } else {
      out.values.emplace_back(std::nullopt);
    }
  }
  return out;
}

/// logit(F1(y)) - logit(F0(y)) with CDF values clamped into [eps, 1 - eps].
template <CdfOnSupport F0, CdfOnSupport F1>
EffectCurve logit_ce(const F0& f0, const F1& f1, const std::vector<double>& grid, double eps = kResidualEps) {
  detail::require_common_support(f0, f1);
  detail::require_increasing(grid);
  EffectCurve out{EffectKind::logit_ce, grid, {}};
  for (double y : grid) {
    const double a = std::clamp(f1.cdf(y), eps, 1.0 - eps);
    const double b = std::clamp(f0.cdf(y), eps, 1.0 - eps);
    out.values.emplace_back(logit(a) - logit(b));
  }
  return out;
}

/// U - integral of F over [L, U], trapezoid rule.
template <class F>
double interventional_mean(const F& f, std::size_t points = 512) {
  if (points < 2) throw DomainError("interventional_mean: need at least two quadrature points");
  const double lo = f.lower();
  const double hi = f.upper();
  const double h = (hi - lo) / static_cast<double>(points - 1);
  double acc = 0.5 * (f.cdf(lo) + f.cdf(hi));
  for (std::size_t k = 1; k + 1 < points; ++k) acc += f.cdf(lo + h * static_cast<double>(k));
  return hi - acc * h;
}

/// E[Y | do(1)] - E[Y | do(0)]
template <class F0, class F1>
double ace(const F0& f0, const F1& f1, std::size_t points = 512) {
  detail::require_common_support(f0, f1);
  return interventional_mean(f1, points) - interventional_mean(f0, points);
}

}  // namespace dive
