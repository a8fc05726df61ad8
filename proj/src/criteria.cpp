#include "dive/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "dive/errors.hpp"
#include "dive/special.hpp"

namespace dive {

ResidualVector::ResidualVector(std::vector<double> values, double eps) : values_(std::move(values)) {
  for (double& v : values_) v = std::clamp(v, eps, 1.0 - eps);
}

std::span<const double> Instrument::column_copy_into(std::size_t c, std::vector<double>& buf) const {
  const std::size_t n = size();
  buf.resize(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = values[i * dim + c];
  return buf;
}

double median_heuristic(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 1.0;
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(std::abs(x[i] - x[j]));
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>((d.size() - 1) / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    // even count: average the two central order statistics
    const double next = *std::min_element(mid + 1, d.end());
    med = 0.5 * (med + next);
  }
  return med > 0 ? med : 1.0;
}

KernelSpec resolve_kernel(const KernelSpec& spec, std::span<const double> x) {
  if (spec.family == KernelFamily::indicator || spec.rule == BandwidthRule::fixed) return spec;
  KernelSpec out = spec;
  out.rule = BandwidthRule::fixed;
  out.bandwidth = {median_heuristic(x)};
  return out;
}

KernelSpec resolve_kernel(const KernelSpec& spec, const Instrument& z) {
  if (spec.family == KernelFamily::indicator || spec.rule == BandwidthRule::fixed) return spec;
  KernelSpec out = spec;
  out.rule = BandwidthRule::fixed;
  out.bandwidth.clear();
  std::vector<double> buf;
  for (std::size_t c = 0; c < z.dim; ++c) out.bandwidth.push_back(median_heuristic(z.column_copy_into(c, buf)));
  return out;
}

namespace {

double bandwidth_at(const KernelSpec& spec, std::size_t c) {
  if (spec.bandwidth.empty()) throw DomainError("gaussian kernel bandwidth not resolved");
  const double bw = spec.bandwidth.size() == 1 ? spec.bandwidth[0] : spec.bandwidth.at(c);
  if (!(bw > 0)) throw DomainError("gaussian kernel bandwidth must be positive");
  return bw;
}

}  // namespace

GramMatrix::GramMatrix(std::span<const double> x, const KernelSpec& k) : n_(x.size()), data_(n_ * n_) {
  if (k.family == KernelFamily::indicator) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) data_[i * n_ + j] = x[i] == x[j] ? 1.0 : 0.0;
  } else {
    const double c = -0.5 / (bandwidth_at(k, 0) * bandwidth_at(k, 0));
    for (std::size_t i = 0; i < n_; ++i) {
      data_[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double diff = x[i] - x[j];
        const double v = std::exp(c * diff * diff);
        data_[i * n_ + j] = v;
        data_[j * n_ + i] = v;
      }
    }
  }
  finish();
}

GramMatrix::GramMatrix(const Instrument& z, const KernelSpec& k) : n_(z.size()), data_(n_ * n_) {
  const std::size_t dim = z.dim;
  if (k.family == KernelFamily::indicator) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const auto a = z.row(i);
        const auto b = z.row(j);
        data_[i * n_ + j] = std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
      }
  } else {
    std::vector<double> coef(dim);
    for (std::size_t c = 0; c < dim; ++c) coef[c] = -0.5 / (bandwidth_at(k, c) * bandwidth_at(k, c));
    for (std::size_t i = 0; i < n_; ++i) {
      data_[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        double e = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          const double diff = z.values[i * dim + c] - z.values[j * dim + c];
          e += coef[c] * diff * diff;
        }
        const double v = std::exp(e);
        data_[i * n_ + j] = v;
        data_[j * n_ + i] = v;
      }
    }
  }
  finish();
}

void GramMatrix::finish() {
  row_sums_.assign(n_, 0.0);
  total_ = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += data_[i * n_ + j];
    row_sums_[i] = s;
    total_ += s;
  }
}

double cvm_statistic(std::span<const double> r) {
  if (r.empty()) throw DomainError("cvm_statistic: empty input");
  std::vector<double> x(r.begin(), r.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = (static_cast<double>(i) + 0.5) / n - x[i];
    acc += diff * diff;
  }
  return 1.0 / (12.0 * n * n) + acc / n;
}

std::vector<double> probit_transform(std::span<const double> r, double eps) {
  if (!(eps > 0 && eps < 0.5)) throw DomainError("probit_transform: eps must lie in (0, 0.5)");
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = normal_quantile(std::clamp(r[i], eps, 1.0 - eps));
  return out;
}

double hsic_from_grams(const GramMatrix& k, const GramMatrix& l) {
  const std::size_t n = k.size();
  if (l.size() != n) throw DomainError("hsic: Gram matrices differ in size");
  double joint = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ki = k.row(i);
    const auto li = l.row(i);
    for (std::size_t j = 0; j < n; ++j) joint += ki[j] * li[j];
  }
  double cross = 0.0;
  const auto rk = k.row_sums();
  const auto rl = l.row_sums();
  for (std::size_t i = 0; i < n; ++i) cross += rk[i] * rl[i];
  const double nn = static_cast<double>(n);
  return joint / (nn * nn) + k.total() * l.total() / (nn * nn * nn * nn) - 2.0 * cross / (nn * nn * nn);
}

double hsic_statistic(std::span<const double> r, const Instrument& z, const KernelSpec& k_r, const KernelSpec& k_z) {
  if (r.size() != z.size()) throw DomainError("hsic_statistic: residuals and instrument differ in length");
  if (r.size() < 2) throw DomainError("hsic_statistic: need n >= 2");
  const auto s = probit_transform(r);
  const GramMatrix k(s, resolve_kernel(k_r, s));
  const GramMatrix l(z, resolve_kernel(k_z, z));
  return hsic_from_grams(k, l);
}

double aggregate(Aggregation beta, double a, double b) { return beta == Aggregation::sum ? a + b : std::max(a, b); }

LossTerms div_loss_terms(std::span<const double> r, const Instrument& z, double lambda, Aggregation beta,
                         const KernelSpec& k_r, const KernelSpec& k_z) {
  if (!(lambda > 0)) throw DomainError("div_loss: lambda must be positive");
  LossTerms t;
  t.cvm = cvm_statistic(r);
  t.hsic = hsic_statistic(r, z, k_r, k_z);
  t.value = aggregate(beta, t.cvm, lambda * t.hsic);
  return t;
}

}  // namespace dive
