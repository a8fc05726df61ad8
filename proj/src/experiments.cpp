#include "dive/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "dive/rng.hpp"
#include "dive/special.hpp"

namespace dive {

std::string_view to_string(Method m) { return m == Method::dive ? "DIVE" : "CCDF"; }

unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DIVE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min(hw, static_cast<unsigned>(v));
  }
  return hw;
}

namespace {

struct Job {
  Scenario scenario;
  std::size_t n;
  int replicate;
  std::uint64_t seed;
};

std::vector<BenchmarkRow> run_job(const Job& job, const BenchmarkSpec& spec) {
  const Rng rng(job.seed);
  const IVDataset data = sample(job.scenario, job.n, rng.substream(0).key());
  DiveConfig config = spec.config;
  config.seed = rng.substream(1).key();

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const DiveFit fit = dive_fit(data, config);
  const auto t1 = clock::now();
  const CcdfFit ccdf = fit_ccdf_mle(data, config.family_for(data), config.mle_optimizer);
  const auto t2 = clock::now();
  const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };

  std::vector<BenchmarkRow> rows;
  rows.push_back({job.scenario, job.n, job.replicate, job.seed, Method::dive, mse(fit.f0, fit.f1, job.scenario, data),
                  mae(fit.f0, fit.f1, job.scenario, data), fit.converged, secs(t0, t1), std::nullopt});
  rows.push_back({job.scenario, job.n, job.replicate, job.seed, Method::ccdf,
                  mse(ccdf.f0, ccdf.f1, job.scenario, data), mae(ccdf.f0, ccdf.f1, job.scenario, data), true,
                  secs(t1, t2), std::nullopt});
  if (spec.keep_models) {
    rows[0].model.emplace(fit.f0, fit.f1);
    rows[1].model.emplace(ccdf.f0, ccdf.f1);
  }
  return rows;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec,
                                        const std::function<void(const std::vector<BenchmarkRow>&)>& on_job) {
  std::vector<Job> jobs;
  const Rng root(spec.seed);
  for (Scenario scn : spec.scenarios)
    for (std::size_t n : spec.n_list)
      for (int rep = 0; rep < spec.replicates; ++rep) {
        const std::uint64_t key = (static_cast<std::uint64_t>(scn) << 48) ^ (static_cast<std::uint64_t>(n) << 16) ^
                                  static_cast<std::uint64_t>(rep);
        jobs.push_back({scn, n, rep, root.substream(key).key()});
      }

  std::vector<std::vector<BenchmarkRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      try {
        auto rows = run_job(jobs[k], spec);
        std::lock_guard lock(mu);
        results[k] = std::move(rows);
        if (on_job) on_job(results[k]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(spec.threads ? spec.threads : worker_threads(), static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<BenchmarkRow> out;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  return out;
}

std::vector<LandscapePoint> run_landscape(const std::vector<double>& mu_grid, const std::vector<double>& lambdas,
                                          std::size_t n, std::uint64_t seed, Aggregation beta) {
  if (mu_grid.empty() || lambdas.empty()) throw DomainError("landscape: grids must be nonempty");
  for (double l : lambdas)
    if (!(l > 0)) throw DomainError("landscape: lambda must be positive");
  const IVDataset data = sample(Scenario::LIN, n, seed);
  const KernelSpec k_r = KernelSpec::gaussian_median();
  const KernelSpec k_z = KernelSpec::for_instrument(data.z().type);
  struct Terms {
    double cvm;
    double hsic;
  };
  std::vector<Terms> terms;
  terms.reserve(mu_grid.size() * mu_grid.size());
  std::vector<double> r(data.size());
  for (double mu0 : mu_grid)
    for (double mu1 : mu_grid) {
      for (std::size_t i = 0; i < data.size(); ++i)
        r[i] = normal_cdf((data.y()[i] - (data.d()[i] == 0 ? mu0 : mu1)) / std::numbers::sqrt2);
      const ResidualVector res(r);
      terms.push_back({cvm_statistic(res), hsic_statistic(res, data.z(), k_r, k_z)});
    }
  std::vector<LandscapePoint> out;
  out.reserve(lambdas.size() * terms.size());
  for (double lambda : lambdas)
    for (std::size_t a = 0; a < mu_grid.size(); ++a)
      for (std::size_t b = 0; b < mu_grid.size(); ++b) {
        const Terms& t = terms[a * mu_grid.size() + b];
        out.push_back({lambda, mu_grid[a], mu_grid[b], aggregate(beta, t.cvm, lambda * t.hsic)});
      }
  return out;
}

}  // namespace dive
