#pragma once

// Reference implementations used only by the tests. Each one follows the
// textbook definition directly and shares no code with the library beyond
// basic data containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace oracle {

// Integral of (F_n(u) - u)^2 over [0, 1]. The integrand is quadratic between
// consecutive sample points, so Simpson's rule on each piece is exact; F_n is
// evaluated by counting.
inline double cvm_integral(std::span<const double> r) {
  const double n = static_cast<double>(r.size());
  std::vector<double> knots(r.begin(), r.end());
  for (double& k : knots) k = std::clamp(k, 0.0, 1.0);
  knots.push_back(0.0);
  knots.push_back(1.0);
  std::sort(knots.begin(), knots.end());
  auto ecdf = [&](double u) {
    double c = 0;
    for (double x : r) c += (x <= u) ? 1.0 : 0.0;
    return c / n;
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k];
    const double b = knots[k + 1];
    if (b <= a) continue;
    const double fm = ecdf(0.5 * (a + b));  // constant on the open piece
    auto g = [&](double u) { return (fm - u) * (fm - u); };
    total += (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
  }
  return total;
}

inline double probit(double p) {
  static const boost::math::normal_distribution<double> nd;
  return boost::math::quantile(nd, p);
}

inline double gauss(double a, double b, double bw) { return std::exp(-(a - b) * (a - b) / (2.0 * bw * bw)); }

// Median of |x_i - x_j| over i < j; 1 when zero.
inline double median_pairwise(std::span<const double> x) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) d.push_back(std::abs(x[i] - x[j]));
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  const double med = m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  return med > 0 ? med : 1.0;
}

// Literal V-statistic: (1/n^2) sum_ij K_ij L_ij + (1/n^4) sum_ijqr K_ij L_qr - (2/n^3) sum_ijq K_ij L_iq.
inline double hsic_sums(const std::vector<std::vector<double>>& K, const std::vector<std::vector<double>>& L) {
  const std::size_t n = K.size();
  const double nn = static_cast<double>(n);
  double a = 0, b = 0, c = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a += K[i][j] * L[i][j];
      for (std::size_t q = 0; q < n; ++q) {
        c += K[i][j] * L[i][q];
        for (std::size_t r = 0; r < n; ++r) b += K[i][j] * L[q][r];
      }
    }
  return a / (nn * nn) + b / (nn * nn * nn * nn) - 2.0 * c / (nn * nn * nn);
}

template <class Kernel>
std::vector<std::vector<double>> gram(std::span<const double> x, Kernel k) {
  std::vector<std::vector<double>> g(x.size(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) g[i][j] = k(x[i], x[j]);
  return g;
}

// Bernstein polynomial binom(M, k) u^k (1-u)^(M-k) evaluated with lgamma.
inline double bernstein(int M, int k, double u) {
  if (u == 0.0) return k == 0 ? 1.0 : 0.0;
  if (u == 1.0) return k == M ? 1.0 : 0.0;
  const double lc = std::lgamma(M + 1.0) - std::lgamma(k + 1.0) - std::lgamma(M - k + 1.0);
  return std::exp(lc + k * std::log(u) + (M - k) * std::log1p(-u));
}

// Kolmogorov distance between the empirical CDF of xs and a continuous cdf.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    worst = std::max({worst, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return worst;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int points) {
  const double h = (b - a) / (points - 1);
  double s = 0.5 * (f(a) + f(b));
  for (int k = 1; k + 1 < points; ++k) s += f(a + k * h);
  return s * h;
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace oracle

namespace oracle {

// Central difference of f along coordinate k. When `signature` changes between
// x - h e_k and x + h e_k (a kink of an almost-everywhere differentiable loss
// lies inside the stencil), h is halved until both sides agree.
template <class Value, class Signature>
double central_difference(const Value& f, const Signature& signature, std::vector<double> x, std::size_t k,
                          double h) {
  const double x0 = x[k];
  for (int attempt = 0; attempt < 30; ++attempt, h *= 0.5) {
    x[k] = x0 + h;
    const auto sp = signature(x);
    const auto fp = f(x);
    x[k] = x0 - h;
    const auto sm = signature(x);
    const auto fm = f(x);
    if (sp == sm || attempt == 29) return static_cast<double>((fp - fm) / (2.0 * h));
  }
  return 0.0;
}

// Same stencil for an evaluator returning {value, signature} in one call.
template <class Eval>
double central_difference(const Eval& eval, std::vector<double> x, std::size_t k, double h) {
  const double x0 = x[k];
  for (int attempt = 0; attempt < 30; ++attempt, h *= 0.5) {
    x[k] = x0 + h;
    const auto [fp, sp] = eval(x);
    x[k] = x0 - h;
    const auto [fm, sm] = eval(x);
    if (sp == sm || attempt == 29) return static_cast<double>((fp - fm) / (2.0 * h));
  }
  return 0.0;
}

}  // namespace oracle
