#include "dive/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dive/errors.hpp"
#include "dive/special.hpp"

namespace dive {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0)) throw DomainError("optimizer: learning_rate must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw DomainError("optimizer: adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw DomainError("optimizer: adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0)) throw DomainError("optimizer: adam_eps must be positive");
  if (max_epochs < 1) throw DomainError("optimizer: max_epochs must be >= 1");
  if (reduce_lr.patience < 1 || early_stop.patience < 1) throw DomainError("optimizer: patiences must be >= 1");
  if (!(reduce_lr_factor > 0 && reduce_lr_factor < 1)) throw DomainError("optimizer: reduce_lr_factor in (0, 1)");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::early_stop: return "early-stop";
    case StopReason::max_epochs: return "max-epochs";
    case StopReason::non_finite: return "non-finite";
  }
  return "max-epochs";
}

namespace {

class Plateau {
 public:
  explicit Plateau(PlateauRule rule) : rule_(rule) {}

  // True once the loss has failed to beat the best by the tolerance for `patience` epochs.
  bool update(double loss) {
    if (loss < best_ - rule_.tolerance) {
      best_ = loss;
      wait_ = 0;
      return false;
    }
    return ++wait_ >= rule_.patience;
  }
  void reset_wait() { wait_ = 0; }

 private:
  PlateauRule rule_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

MinimizeResult adam_minimize(const Objective& objective, std::vector<double> init, const OptimizerConfig& config) {
  config.validate();
  const std::size_t dim = init.size();
  std::vector<double> x = std::move(init);
  std::vector<double> grad(dim);
  std::vector<double> m(dim, 0.0);
  std::vector<double> v(dim, 0.0);

  MinimizeResult result;
  OptTrace& trace = result.trace;
  double lr = config.learning_rate;
  Plateau reduce(config.reduce_lr);
  Plateau stop(config.early_stop);
  double best = std::numeric_limits<double>::infinity();
  double b1t = 1.0;
  double b2t = 1.0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = objective(x, grad);
    if (!std::isfinite(loss) || !all_finite(grad)) {
      if (epoch == 0) {
        std::ostringstream msg;
        msg << "non-finite loss at initialization (loss=" << loss << ", dim=" << dim << ")";
        throw std::runtime_error(msg.str());
      }
      trace.stop_reason = StopReason::non_finite;
      trace.stopped_epoch = epoch;
      return result;
    }
    trace.loss.push_back(loss);
    trace.learning_rate.push_back(lr);
    if (loss < best) {
      best = loss;
      result.params = x;
      result.loss = loss;
      trace.best_epoch = epoch;
    }
    if (stop.update(loss)) {
      trace.stop_reason = StopReason::early_stop;
      trace.stopped_epoch = epoch + 1;
      return result;
    }
    if (reduce.update(loss)) {
      lr *= config.reduce_lr_factor;
      reduce.reset_wait();
    }
    b1t *= config.adam_beta1;
    b2t *= config.adam_beta2;
    for (std::size_t k = 0; k < dim; ++k) {
      m[k] = config.adam_beta1 * m[k] + (1 - config.adam_beta1) * grad[k];
      v[k] = config.adam_beta2 * v[k] + (1 - config.adam_beta2) * grad[k] * grad[k];
      const double mhat = m[k] / (1 - b1t);
      const double vhat = v[k] / (1 - b2t);
      x[k] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
  trace.stop_reason = StopReason::max_epochs;
  trace.stopped_epoch = config.max_epochs;
  return result;
}

DivObjective::DivObjective(const IVDataset& data, CdfFamily family, double lambda, Aggregation beta,
                           KernelSpec k_r_resolved, const KernelSpec& k_z)
    : family_(family),
      lambda_(lambda),
      beta_(beta),
      k_r_(std::move(k_r_resolved)),
      n_(data.size()),
      arm_(data.d()),
      basis_(n_ * family.num_params()),
      centered_(n_ * n_) {
  if (!(lambda > 0)) throw DomainError("DivObjective: lambda must be positive");
  if (k_r_.family == KernelFamily::gaussian && k_r_.bandwidth.empty())
    throw DomainError("DivObjective: residual kernel bandwidth must be resolved");
  if (n_ < 2) throw DataError("DivObjective: need at least two observations");
  const std::size_t p = family_.num_params();
  for (std::size_t i = 0; i < n_; ++i) {
    const double u = std::clamp(family_.scaler.scale(data.y()[i]), 0.0, 1.0);
    const auto b = bernstein_basis(u, family_.order);
    std::copy(b.begin(), b.end(), basis_.begin() + static_cast<std::ptrdiff_t>(i * p));
  }
  // HLH with H = I - 11'/n
  const GramMatrix l(data.z(), resolve_kernel(k_z, data.z()));
  const double nn = static_cast<double>(n_);
  const auto rs = l.row_sums();
  const double grand = l.total() / (nn * nn);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) centered_[i * n_ + j] = l(i, j) - rs[i] / nn - rs[j] / nn + grand;
}

std::vector<double> DivObjective::residuals(std::span<const double> params) const {
  const std::size_t p = family_.num_params();
  if (params.size() != 2 * p) throw DomainError("DivObjective: wrong parameter count");
  const auto t0 = constrain({{params.begin(), params.begin() + static_cast<std::ptrdiff_t>(p)}}, family_.bound);
  const auto t1 = constrain({{params.begin() + static_cast<std::ptrdiff_t>(p), params.end()}}, family_.bound);
  std::vector<double> r(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto theta = arm_[i] == 0 ? t0.theta() : t1.theta();
    const double* b = basis_.data() + i * p;
    double h = 0.0;
    for (std::size_t k = 0; k < p; ++k) h += b[k] * theta[k];
    r[i] = family_.link.cdf(h);
  }
  return r;
}

LossTerms DivObjective::terms(std::span<const double> params) const {
  LossTerms t;
  evaluate(params, {}, &t);
  return t;
}

double DivObjective::operator()(std::span<const double> params, std::span<double> grad) const {
  return evaluate(params, grad, nullptr);
}

double DivObjective::evaluate(std::span<const double> params, std::span<double> grad, LossTerms* terms) const {
  const std::size_t p = family_.num_params();
  if (params.size() != 2 * p) throw DomainError("DivObjective: wrong parameter count");
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != 2 * p) throw DomainError("DivObjective: wrong gradient size");

  const UnconstrainedParams g0{{params.begin(), params.begin() + static_cast<std::ptrdiff_t>(p)}};
  const UnconstrainedParams g1{{params.begin() + static_cast<std::ptrdiff_t>(p), params.end()}};
  const auto t0 = constrain(g0, family_.bound);
  const auto t1 = constrain(g1, family_.bound);

  const double nn = static_cast<double>(n_);
  std::vector<double> index(n_);
  std::vector<double> r(n_);
  std::vector<char> active(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto theta = arm_[i] == 0 ? t0.theta() : t1.theta();
    const double* b = basis_.data() + i * p;
    double h = 0.0;
    for (std::size_t k = 0; k < p; ++k) h += b[k] * theta[k];
    index[i] = h;
    const double raw = family_.link.cdf(h);
    r[i] = std::clamp(raw, kResidualEps, 1.0 - kResidualEps);
    active[i] = raw > kResidualEps && raw < 1.0 - kResidualEps;
  }

  // CvM closed form; the sort order is held fixed for the derivative.
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
  double cvm = 1.0 / (12.0 * nn * nn);
  std::vector<double> grad_cvm(want_grad ? n_ : 0);
  for (std::size_t rank = 0; rank < n_; ++rank) {
    const std::size_t i = order[rank];
    const double diff = r[i] - (static_cast<double>(rank) + 0.5) / nn;
    cvm += diff * diff / nn;
    if (want_grad) grad_cvm[i] = 2.0 * diff / nn;
  }

  // HSIC = tr(K HLH) / n^2 on probit residuals.
  std::vector<double> s(n_);
  for (std::size_t i = 0; i < n_; ++i) s[i] = normal_quantile(r[i]);
  const double bw = k_r_.family == KernelFamily::gaussian ? k_r_.bandwidth.at(0) : 1.0;
  const double coef = -0.5 / (bw * bw);
  const double inv_bw2 = 1.0 / (bw * bw);
  std::vector<double> grad_s(want_grad ? n_ : 0, 0.0);
  double hsic_acc = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* ci = centered_.data() + i * n_;
    hsic_acc += ci[i];
    double off = 0.0;
    double gi = 0.0;
    const double si = s[i];
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double diff = si - s[j];
      double kij;
      if (k_r_.family == KernelFamily::gaussian) {
        kij = std::exp(coef * diff * diff);
      } else {
        kij = si == s[j] ? 1.0 : 0.0;
      }
      const double w = ci[j] * kij;
      off += w;
      if (want_grad && k_r_.family == KernelFamily::gaussian) {
        // d K_ij / d s_i = -K_ij (s_i - s_j) / bw^2; symmetric in (i, j) with opposite sign
        const double dk = -w * diff * inv_bw2;
        gi += dk;
        grad_s[j] -= dk;
      }
    }
    hsic_acc += 2.0 * off;
    if (want_grad) grad_s[i] += gi;
  }
  const double hsic = hsic_acc / (nn * nn);
  const double penalty = lambda_ * hsic;
  const double value = aggregate(beta_, cvm, penalty);
  if (terms) *terms = {cvm, hsic, value};
  if (!want_grad) return value;

  // Active branch weights; max() ties go to the CvM branch.
  double w_cvm = 1.0;
  double w_hsic = lambda_;
  if (beta_ == Aggregation::max) {
    const bool cvm_branch = cvm >= penalty;
    w_cvm = cvm_branch ? 1.0 : 0.0;
    w_hsic = cvm_branch ? 0.0 : lambda_;
  }
  const double hsic_scale = 2.0 / (nn * nn);
  std::vector<double> gt0(p, 0.0);
  std::vector<double> gt1(p, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    if (!active[i]) continue;
    const double ds_dr = 1.0 / normal_pdf(s[i]);
    const double g_r = w_cvm * grad_cvm[i] + w_hsic * hsic_scale * grad_s[i] * ds_dr;
    const double g_h = g_r * family_.link.pdf(index[i]);
    auto& gt = arm_[i] == 0 ? gt0 : gt1;
    const double* b = basis_.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) gt[k] += g_h * b[k];
  }
  const auto gg0 = constrain_backward(g0, gt0, family_.bound);
  const auto gg1 = constrain_backward(g1, gt1, family_.bound);
  std::copy(gg0.begin(), gg0.end(), grad.begin());
  std::copy(gg1.begin(), gg1.end(), grad.begin() + static_cast<std::ptrdiff_t>(p));
  return value;
}

KernelSpec resolve_residual_kernel(const IVDataset& data, const CdfFamily& family, std::span<const double> g0,
                                   std::span<const double> g1, const KernelSpec& k_r) {
  if (k_r.family == KernelFamily::indicator || k_r.rule == BandwidthRule::fixed) return k_r;
  const auto f0 = family.make(g0);
  const auto f1 = family.make(g1);
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) r[i] = (data.d()[i] == 0 ? f0 : f1).cdf(data.y()[i]);
  return resolve_kernel(k_r, probit_transform(r));
}

LossAndGradient loss_and_gradient(std::span<const double> g0, std::span<const double> g1, const IVDataset& data,
                                  const CdfFamily& family, double lambda, Aggregation beta, const KernelSpec& k_r,
                                  const KernelSpec& k_z) {
  for (double v : g0)
    if (!std::isfinite(v)) throw DomainError("loss_and_gradient: non-finite parameters");
  for (double v : g1)
    if (!std::isfinite(v)) throw DomainError("loss_and_gradient: non-finite parameters");
  const DivObjective objective(data, family, lambda, beta, resolve_residual_kernel(data, family, g0, g1, k_r), k_z);
  std::vector<double> x(g0.begin(), g0.end());
  x.insert(x.end(), g1.begin(), g1.end());
  LossAndGradient out{0.0, std::vector<double>(x.size())};
  out.value = objective(x, out.gradient);
  return out;
}

DivMinimizeResult minimize_div(const OptimizerConfig& config, const DivObjective& objective,
                               const UnconstrainedParams& g0, const UnconstrainedParams& g1) {
  const std::size_t p = objective.family().num_params();
  if (g0.gamma.size() != p || g1.gamma.size() != p) throw DomainError("minimize_div: wrong parameter count");
  std::vector<double> x(g0.gamma);
  x.insert(x.end(), g1.gamma.begin(), g1.gamma.end());
  auto res = adam_minimize([&](std::span<const double> v, std::span<double> g) { return objective(v, g); },
                           std::move(x), config);
  DivMinimizeResult out;
  out.g0.gamma.assign(res.params.begin(), res.params.begin() + static_cast<std::ptrdiff_t>(p));
  out.g1.gamma.assign(res.params.begin() + static_cast<std::ptrdiff_t>(p), res.params.end());
  out.loss = res.loss;
  out.trace = std::move(res.trace);
  return out;
}

}  // namespace dive
