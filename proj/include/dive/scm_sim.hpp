#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dive/dataset.hpp"
#include "dive/errors.hpp"

namespace dive {

/// Generative IV-SCMs with known interventional CDFs.
///
/// S1-S4 share the treatment equation D = 1(4Z + 4H >= N_D) with logistic
/// noises. EX1 has no instrument in its treatment equation; its sampler emits
/// an independent standard-normal z. LIN is a Gaussian linear IV model used
/// for loss landscapes.
enum class Scenario { S1, S2, S3, S4, EX1, LIN };

Scenario parse_scenario(std::string_view name);
std::string_view to_string(Scenario scn);

inline constexpr Scenario kSimulationScenarios[] = {Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4};

// Interventional means of the LIN scenario; Y(d) ~ N(mu_d, 2).
inline constexpr double kLinMu0 = 0.0;
inline constexpr double kLinMu1 = 1.0;

/// n i.i.d. draws of (Z, D, Y), deterministic in seed. For n >= 20 a draw
/// missing a treatment arm is replaced by a draw from the next substream.
IVDataset sample(Scenario scn, std::size_t n, std::uint64_t seed);

/// Draws of Y under do(D = d).
std::vector<double> sample_interventional(Scenario scn, int d, std::size_t n, std::uint64_t seed);

/// Closed-form interventional CDF F*_d(y). S2 uses Gauss-Legendre quadrature over H.
double true_cdf(Scenario scn, int d, double y);

/// Monte-Carlo estimate of F*_d(y) from `draws` interventional samples.
double true_cdf_mc(Scenario scn, int d, double y, std::size_t draws, std::uint64_t seed);

/// Observational P(Y <= y | D = d), estimated by Monte-Carlo on `draws` joint samples.
double observational_cdf_mc(Scenario scn, int d, double y, std::size_t draws, std::uint64_t seed);

/// true_cdf bound to an arm and a support, usable wherever a CDF object is expected.
class ScenarioCdf {
 public:
  ScenarioCdf(Scenario scn, int d, double lower, double upper) : scn_(scn), d_(d), lower_(lower), upper_(upper) {}

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double cdf(double y) const { return true_cdf(scn_, d_, std::clamp(y, lower_, upper_)); }
  double quantile(double tau) const;

 private:
  Scenario scn_;
  int d_;
  double lower_;
  double upper_;
};

/// (1/n) sum_i (F*_{d_i}(y_i) - Fhat_{d_i}(y_i))^2
template <class Cdf0, class Cdf1>
double mse(const Cdf0& fhat0, const Cdf1& fhat1, Scenario scn, const IVDataset& data) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int d = data.d()[i];
    const double y = data.y()[i];
    const double diff = true_cdf(scn, d, y) - (d == 0 ? fhat0.cdf(y) : fhat1.cdf(y));
    acc += diff * diff;
  }
  return acc / static_cast<double>(data.size());
}

/// max_i |F*_{d_i}(y_i) - Fhat_{d_i}(y_i)|
template <class Cdf0, class Cdf1>
double mae(const Cdf0& fhat0, const Cdf1& fhat1, Scenario scn, const IVDataset& data) {
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int d = data.d()[i];
    const double y = data.y()[i];
    worst = std::max(worst, std::abs(true_cdf(scn, d, y) - (d == 0 ? fhat0.cdf(y) : fhat1.cdf(y))));
  }
  return worst;
}

}  // namespace dive
