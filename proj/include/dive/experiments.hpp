#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dive/dive.hpp"
#include "dive/scm_sim.hpp"

namespace dive {

enum class Method { dive, ccdf };
std::string_view to_string(Method m);

struct BenchmarkRow {
  Scenario scenario;
  std::size_t n;
  int replicate;
  std::uint64_t seed;
  Method method;
  double mse;
  double mae;
  bool converged;  // always true for the CCDF baseline
  double wall_time_s;
  // Fitted pair, kept in memory for downstream checks; not serialized.
  std::optional<std::pair<ParametricCDF, ParametricCDF>> model;
};

struct BenchmarkSpec {
  std::vector<Scenario> scenarios;
  std::vector<std::size_t> n_list;
  int replicates = 10;
  std::uint64_t seed = 0;
  DiveConfig config;
  // 0 selects DIVE_THREADS or the hardware concurrency.
  unsigned threads = 0;
  bool keep_models = false;
};

/// Worker count from DIVE_THREADS, capped by the hardware concurrency.
unsigned worker_threads();

/// Runs every (scenario, n, replicate) job; each job draws its data and fit
/// seeds from (seed, scenario, n, replicate), so results do not depend on the
/// number of workers. on_job is called once per finished job, in completion order.
std::vector<BenchmarkRow> run_benchmark(
    const BenchmarkSpec& spec, const std::function<void(const std::vector<BenchmarkRow>&)>& on_job = {});

struct LandscapePoint {
  double lambda;
  double mu0;
  double mu1;
  double loss;
};

/// DIV loss of the pair F_d(y) = Phi((y - mu_d) / sqrt(2)) on LIN data, rows
/// ordered lambda-major then mu0 then mu1.
std::vector<LandscapePoint> run_landscape(const std::vector<double>& mu_grid, const std::vector<double>& lambdas,
                                          std::size_t n, std::uint64_t seed, Aggregation beta = Aggregation::sum);

}  // namespace dive
