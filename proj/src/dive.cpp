#include "dive/dive.hpp"

#include <algorithm>
#include <cmath>

#include "dive/errors.hpp"
#include "dive/rng.hpp"

namespace dive {

void DiveConfig::validate() const {
  if (order < 1) throw DomainError("order must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (max_restarts < 1) throw DomainError("max_restarts must be >= 1");
  if (!(nu > 0)) throw DomainError("nu must be positive");
  if (!(bound > 0)) throw DomainError("bound must be positive");
  if (cvm_replicates < 99 || hsic_permutations < 99) throw DomainError("tests need at least 99 replicates");
  optimizer.validate();
  mle_optimizer.validate();
}

KernelSpec DiveConfig::instrument_kernel_for(const IVDataset& data) const {
  return instrument_kernel ? *instrument_kernel : KernelSpec::for_instrument(data.z().type);
}

CdfFamily DiveConfig::family_for(const IVDataset& data) const {
  const ResponseScaler scaler = support ? *support : ResponseScaler::from_sample(data.y());
  return CdfFamily{scaler, link, order, bound};
}

namespace {

// Mean negative log-likelihood of one arm with analytic gradient in gamma.
class ArmLikelihood {
 public:
  ArmLikelihood(const IVDataset& data, int arm, const CdfFamily& family) : family_(family) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.d()[i] != arm) continue;
      const double u = std::clamp(family.scaler.scale(data.y()[i]), 0.0, 1.0);
      const auto b = bernstein_basis(u, family.order);
      const auto db = bernstein_basis_derivative(u, family.order);
      const auto c = family.order == 1 ? std::vector<double>{1.0} : bernstein_basis(u, family.order - 1);
      basis_.insert(basis_.end(), b.begin(), b.end());
      lower_.insert(lower_.end(), c.begin(), c.end());
      dbasis_.insert(dbasis_.end(), db.begin(), db.end());
      ++n_;
    }
  }

  std::size_t size() const { return n_; }

  double operator()(std::span<const double> gamma, std::span<double> grad) const {
    const std::size_t p = family_.num_params();
    const UnconstrainedParams g{{gamma.begin(), gamma.end()}};
    const auto coeffs = constrain(g, family_.bound);
    const auto theta = coeffs.theta();
    const double log_width = std::log(family_.scaler.width());
    std::vector<double> gt(p, 0.0);
    double nll = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double* b = basis_.data() + i * p;
      const double* db = dbasis_.data() + i * p;
      double h = 0.0;
      for (std::size_t k = 0; k < p; ++k) h += b[k] * theta[k];
      // M * sum_k c_k (theta_{k+1} - theta_k): every term is non-negative
      const double* c = lower_.data() + i * (p - 1);
      double slope = 0.0;
      for (std::size_t k = 0; k + 1 < p; ++k) slope += c[k] * (theta[k + 1] - theta[k]);
      slope *= family_.order;
      slope = std::max(slope, 1e-300);
      nll -= family_.link.log_pdf(h) + std::log(slope) - log_width;
      const double dl = family_.link.dlog_pdf(h);
      for (std::size_t k = 0; k < p; ++k) gt[k] -= dl * b[k] + db[k] / slope;
    }
    const double inv = 1.0 / static_cast<double>(n_);
    for (double& v : gt) v *= inv;
    const auto gg = constrain_backward(g, gt, family_.bound);
    std::copy(gg.begin(), gg.end(), grad.begin());
    return nll * inv;
  }

 private:
  CdfFamily family_;
  std::size_t n_ = 0;
  std::vector<double> basis_;
  std::vector<double> dbasis_;
  std::vector<double> lower_;  // order M-1 basis
};

}  // namespace

double arm_log_likelihood(const ParametricCDF& f, const IVDataset& data, int arm) {
  double ll = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.d()[i] != arm) continue;
    const double y = std::clamp(data.y()[i], f.lower(), f.upper());
    ll += std::log(f.pdf(y));
    ++n;
  }
  return ll / static_cast<double>(n);
}

CcdfFit fit_ccdf_mle(const IVDataset& data, const CdfFamily& family, const OptimizerConfig& config) {
  std::vector<std::string> warnings;
  std::vector<UnconstrainedParams> params;
  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<double> ys;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.d()[i] == arm) ys.push_back(data.y()[i]);
    if (ys.empty()) throw DataError("both treatment arms required");
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    if (!(*hi > *lo)) throw DataError("ccdf fit: response is constant in arm " + std::to_string(arm));
    if (static_cast<double>(ys.size()) < family.order / 2.0)
      warnings.push_back("ccdf fit: arm " + std::to_string(arm) + " has fewer than order/2 observations");
    const ArmLikelihood nll(data, arm, family);
    auto res = adam_minimize([&](std::span<const double> g, std::span<double> grad) { return nll(g, grad); },
                             family.ramp().gamma, config);
    params.push_back({std::move(res.params)});
  }
  auto f0 = family.make(params[0].gamma);
  auto f1 = family.make(params[1].gamma);
  return CcdfFit{std::move(f0), std::move(f1), std::move(params[0]), std::move(params[1]), std::move(warnings)};
}

double lambda_from_terms(double cvm, double hsic) {
  if (hsic <= 1e-12) return 1.0;
  return cvm / hsic;
}

LambdaInit initialize_lambda(const IVDataset& data, const DiveConfig& config) {
  const CdfFamily family = config.family_for(data);
  CcdfFit ccdf = fit_ccdf_mle(data, family, config.mle_optimizer);
  const auto r = ipit_residuals(ccdf.f0, ccdf.f1, data);
  const double cvm = cvm_statistic(r);
  const double hsic = hsic_statistic(r, data.z(), config.residual_kernel, config.instrument_kernel_for(data));
  return LambdaInit{lambda_from_terms(cvm, hsic), cvm, hsic, std::move(ccdf)};
}

double next_lambda(double lambda, double p_uniform, double p_independent, double nu_t) {
  return p_independent <= p_uniform ? lambda * (1.0 + nu_t) : lambda / (1.0 + nu_t);
}

DiveFit dive_fit(const IVDataset& data, const DiveConfig& config) {
  config.validate();
  const CdfFamily family = config.family_for(data);
  const KernelSpec k_z = config.instrument_kernel_for(data);
  LambdaInit init = initialize_lambda(data, config);

  UnconstrainedParams g0 = init.ccdf.g0;
  UnconstrainedParams g1 = init.ccdf.g1;
  double lambda = init.lambda;
  const Rng root(config.seed);

  DiveFit fit{.f0 = init.ccdf.f0, .f1 = init.ccdf.f1};
  fit.lambda_init = init.lambda;
  fit.warnings = init.ccdf.warnings;
  for (int t = 1; t <= config.max_restarts; ++t) {
    const KernelSpec k_r = resolve_residual_kernel(data, family, g0.gamma, g1.gamma, config.residual_kernel);
    const DivObjective objective(data, family, lambda, config.beta, k_r, k_z);
    auto res = minimize_div(config.optimizer, objective, g0, g1);
    g0 = std::move(res.g0);
    g1 = std::move(res.g1);
    fit.f0 = family.make(g0.gamma);
    fit.f1 = family.make(g1.gamma);

    const auto r = ipit_residuals(fit.f0, fit.f1, data);
    const auto stream = static_cast<std::uint64_t>(t);
    const auto u = cvm_test(r, config.cvm_replicates, root.substream(2 * stream).key());
    const auto ind =
        hsic_perm_test(r, data.z(), config.hsic_permutations, root.substream(2 * stream + 1).key(),
                       config.residual_kernel, k_z);

    fit.lambda_path.push_back(lambda);
    fit.restarts.push_back({lambda, res.loss, u.p_value, ind.p_value, std::move(res.trace)});
    fit.lambda_final = lambda;
    fit.p_uniform = u.p_value;
    fit.p_independent = ind.p_value;
    fit.restarts_used = t;
    if (std::min(u.p_value, ind.p_value) > config.alpha) {
      fit.converged = true;
      break;
    }
    lambda = next_lambda(lambda, u.p_value, ind.p_value, config.nu / t);
  }
  if (fit.f0.coeffs().clipped() || fit.f1.coeffs().clipped())
    fit.warnings.push_back("coefficients clipped at the bound");
  if (!fit.converged) fit.warnings.push_back(kNotConvergedWarning);
  return fit;
}

}  // namespace dive
