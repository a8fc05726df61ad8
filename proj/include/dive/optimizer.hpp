#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "dive/bernstein_cdf.hpp"
#include "dive/criteria.hpp"
#include "dive/dataset.hpp"

namespace dive {

struct PlateauRule {
  int patience;
  double tolerance;
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 1000;
  PlateauRule reduce_lr{20, 1e-3};
  double reduce_lr_factor = 0.5;
  PlateauRule early_stop{60, 1e-4};
  std::uint64_t seed = 0;

  // Throws DomainError on invalid settings.
  void validate() const;
};

enum class StopReason { early_stop, max_epochs, non_finite };
std::string_view to_string(StopReason reason);

struct OptTrace {
  std::vector<double> loss;  // loss at the start of each epoch
  std::vector<double> learning_rate;
  int stopped_epoch = 0;
  int best_epoch = 0;
  StopReason stop_reason = StopReason::max_epochs;
};

/// Returns the objective value at x and writes the gradient into grad.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeResult {
  std::vector<double> params;  // best recorded parameters
  double loss = 0.0;
  OptTrace trace;
};

/// Full-batch Adam with plateau-based learning-rate reduction and early stopping.
/// Plateau checks compare against the best loss with absolute tolerances.
MinimizeResult adam_minimize(const Objective& objective, std::vector<double> init, const OptimizerConfig& config);

/// The distributional IV loss as a function of the stacked parameters (gamma_0, gamma_1).
///
/// Per-observation basis rows and the doubly centred instrument Gram matrix HLH
/// are precomputed. The residual kernel bandwidth is held fixed at construction
/// so that the loss is a smooth function of the parameters away from ties in the
/// residual ordering.
class DivObjective {
 public:
  DivObjective(const IVDataset& data, CdfFamily family, double lambda, Aggregation beta, KernelSpec k_r_resolved,
               const KernelSpec& k_z);

  std::size_t dimension() const { return 2 * family_.num_params(); }
  const CdfFamily& family() const { return family_; }
  double lambda() const { return lambda_; }
  const KernelSpec& residual_kernel() const { return k_r_; }

  LossTerms terms(std::span<const double> params) const;
  double operator()(std::span<const double> params, std::span<double> grad) const;

  std::vector<double> residuals(std::span<const double> params) const;

 private:
  double evaluate(std::span<const double> params, std::span<double> grad, LossTerms* terms) const;

  CdfFamily family_;
  double lambda_;
  Aggregation beta_;
  KernelSpec k_r_;
  std::size_t n_;
  std::vector<int> arm_;
  std::vector<double> basis_;     // n x (M+1), row-major
  std::vector<double> centered_;  // HLH, n x n
};

/// Kernel for the residuals with its bandwidth fixed on the probit residuals of (g0, g1).
KernelSpec resolve_residual_kernel(const IVDataset& data, const CdfFamily& family, std::span<const double> g0,
                                   std::span<const double> g1, const KernelSpec& k_r);

struct LossAndGradient {
  double value;
  std::vector<double> gradient;  // 2(M+1): gamma_0 block then gamma_1 block
};

LossAndGradient loss_and_gradient(std::span<const double> g0, std::span<const double> g1, const IVDataset& data,
                                  const CdfFamily& family, double lambda, Aggregation beta, const KernelSpec& k_r,
                                  const KernelSpec& k_z);

struct DivMinimizeResult {
  UnconstrainedParams g0;
  UnconstrainedParams g1;
  double loss;
  OptTrace trace;
};

DivMinimizeResult minimize_div(const OptimizerConfig& config, const DivObjective& objective,
                               const UnconstrainedParams& g0, const UnconstrainedParams& g1);

}  // namespace dive
