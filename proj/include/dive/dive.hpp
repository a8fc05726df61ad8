#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dive/bernstein_cdf.hpp"
#include "dive/criteria.hpp"
#include "dive/dataset.hpp"
#include "dive/optimizer.hpp"
#include "dive/stat_tests.hpp"

namespace dive {

struct DiveConfig {
  int order = 50;
  double alpha = 0.1;
  int max_restarts = 10;
  // step sizes nu_t = nu / t
  double nu = 5.0;
  LinkFunction link;
  Aggregation beta = Aggregation::sum;
  double bound = kDefaultBound;
  OptimizerConfig optimizer;
  // Optimizer settings for the conditional-CDF maximum-likelihood warm start.
  OptimizerConfig mle_optimizer{.max_epochs = 2000};
  int cvm_replicates = kDefaultCvmReplicates;
  int hsic_permutations = kDefaultPermutations;
  std::uint64_t seed = 0;
  KernelSpec residual_kernel = KernelSpec::gaussian_median();
  // Defaults to the kernel matching the instrument's declared type.
  std::optional<KernelSpec> instrument_kernel;
  // Defaults to the padded sample range of y.
  std::optional<ResponseScaler> support;

  void validate() const;
  KernelSpec instrument_kernel_for(const IVDataset& data) const;
  CdfFamily family_for(const IVDataset& data) const;
};

struct CcdfFit {
  ParametricCDF f0;
  ParametricCDF f1;
  UnconstrainedParams g0;
  UnconstrainedParams g1;
  std::vector<std::string> warnings;
};

/// Per-arm maximum likelihood fit of P(Y <= y | D = d) in the Bernstein family.
CcdfFit fit_ccdf_mle(const IVDataset& data, const CdfFamily& family,
                     const OptimizerConfig& config = OptimizerConfig{.max_epochs = 2000});

/// Mean log-likelihood of one arm under F.
double arm_log_likelihood(const ParametricCDF& f, const IVDataset& data, int arm);

/// r_i = F_{d_i}(y_i), epsilon-clamped.
template <class Cdf0, class Cdf1>
ResidualVector ipit_residuals(const Cdf0& f0, const Cdf1& f1, const IVDataset& data) {
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) r[i] = data.d()[i] == 0 ? f0.cdf(data.y()[i]) : f1.cdf(data.y()[i]);
  return ResidualVector(std::move(r));
}

/// cvm / hsic, or 1 when hsic is numerically zero.
double lambda_from_terms(double cvm, double hsic);

struct LambdaInit {
  double lambda;
  double cvm;
  double hsic;
  CcdfFit ccdf;
};

LambdaInit initialize_lambda(const IVDataset& data, const DiveConfig& config);

/// lambda * (1 + nu_t)^(2 * 1(p_I <= p_U) - 1)
double next_lambda(double lambda, double p_uniform, double p_independent, double nu_t);

struct RestartRecord {
  double lambda;
  double loss;
  double p_uniform;
  double p_independent;
  OptTrace trace;
};

struct DiveFit {
  ParametricCDF f0;
  ParametricCDF f1;
  double lambda_init = 0.0;
  double lambda_final = 0.0;
  double p_uniform = 0.0;
  double p_independent = 0.0;
  bool converged = false;
  int restarts_used = 0;
  // lambda used in each restart
  std::vector<double> lambda_path{};
  std::vector<RestartRecord> restarts{};
  std::vector<std::string> warnings{};
};

inline constexpr const char* kNotConvergedWarning = "Warning: DIVE did not converge.";

DiveFit dive_fit(const IVDataset& data, const DiveConfig& config);

}  // namespace dive
