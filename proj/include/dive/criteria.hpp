#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dive {

inline constexpr double kResidualEps = 1e-6;

/// Residuals F_{d_i}(y_i), clamped into [eps, 1 - eps].
class ResidualVector {
 public:
  ResidualVector() = default;
  explicit ResidualVector(std::vector<double> values, double eps = kResidualEps);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  operator std::span<const double>() const { return values_; }  // NOLINT

 private:
  std::vector<double> values_;
};

enum class InstrumentType { continuous, discrete };

/// n observations of a dim-dimensional instrument, stored row-major.
struct Instrument {
  std::vector<double> values;
  std::size_t dim = 1;
  InstrumentType type = InstrumentType::continuous;

  static Instrument scalar(std::vector<double> z, InstrumentType type = InstrumentType::continuous) {
    return Instrument{std::move(z), 1, type};
  }
  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<const double> column_copy_into(std::size_t c, std::vector<double>& buf) const;
};

enum class KernelFamily { gaussian, indicator };
enum class BandwidthRule { median_heuristic, fixed };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  BandwidthRule rule = BandwidthRule::median_heuristic;
  // One entry per coordinate once resolved; a single fixed value applies to all.
  std::vector<double> bandwidth;

  static KernelSpec gaussian_median() { return {}; }
  static KernelSpec gaussian_fixed(double bw) { return {KernelFamily::gaussian, BandwidthRule::fixed, {bw}}; }
  static KernelSpec indicator() { return {KernelFamily::indicator, BandwidthRule::fixed, {}}; }

  // Kernel matching the declared instrument type.
  static KernelSpec for_instrument(InstrumentType type) {
    return type == InstrumentType::discrete ? indicator() : gaussian_median();
  }
};

/// Median of pairwise absolute differences; 1.0 when that median is zero.
double median_heuristic(std::span<const double> x);

/// Fixes the bandwidth of a median-heuristic gaussian kernel on the given sample.
KernelSpec resolve_kernel(const KernelSpec& spec, std::span<const double> x);
KernelSpec resolve_kernel(const KernelSpec& spec, const Instrument& z);

/// Dense symmetric n x n kernel matrix with cached row sums.
class GramMatrix {
 public:
  GramMatrix(std::span<const double> x, const KernelSpec& resolved);
  GramMatrix(const Instrument& z, const KernelSpec& resolved);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  std::span<const double> row_sums() const { return row_sums_; }
  double total() const { return total_; }

 private:
  void finish();

  std::size_t n_;
  std::vector<double> data_;
  std::vector<double> row_sums_;
  double total_ = 0.0;
};

/// Integral of (empirical CDF - u)^2 over [0, 1], via the order-statistic closed form.
double cvm_statistic(std::span<const double> r);

/// Phi^{-1}(clamp(r_i, eps, 1 - eps)).
std::vector<double> probit_transform(std::span<const double> r, double eps = kResidualEps);

/// Biased V-statistic HSIC from two Gram matrices.
double hsic_from_grams(const GramMatrix& k, const GramMatrix& l);

/// HSIC between probit-transformed residuals and the instrument. Median-heuristic
/// bandwidths are resolved on the probit values / the instrument coordinates.
double hsic_statistic(std::span<const double> r, const Instrument& z, const KernelSpec& k_r, const KernelSpec& k_z);

enum class Aggregation { sum, max };

struct LossTerms {
  double cvm = 0.0;
  double hsic = 0.0;
  double value = 0.0;
};

double aggregate(Aggregation beta, double a, double b);

LossTerms div_loss_terms(std::span<const double> r, const Instrument& z, double lambda, Aggregation beta,
                         const KernelSpec& k_r, const KernelSpec& k_z);

inline double div_loss(std::span<const double> r, const Instrument& z, double lambda, Aggregation beta,
                       const KernelSpec& k_r, const KernelSpec& k_z) {
  return div_loss_terms(r, z, lambda, beta, k_r, k_z).value;
}

}  // namespace dive
