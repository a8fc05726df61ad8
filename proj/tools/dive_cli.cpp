// Command-line front end: simulate, fit, effects, benchmark, landscape.
//
// Exit codes: 0 success, 1 I/O failure, 2 usage or parse error,
// 3 fit did not converge (fit still written), 4 effect-domain error.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dive/dive.hpp"
#include "dive/effects.hpp"
#include "dive/errors.hpp"
#include "dive/experiments.hpp"
#include "dive/io.hpp"
#include "dive/scm_sim.hpp"
#include "dive/version.hpp"

namespace {

using nlohmann::json;
namespace io = dive::io;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitEffectDomain = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item);
        used = item.size();
      } else if constexpr (std::is_same_v<T, double>) {
        out.push_back(std::stod(item, &used));
      } else {
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid ") + what + " entry: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string(what) + " list is empty");
  return out;
}

struct Common {
  bool record_time = false;
};

io::RunManifest manifest(const std::string& command, const Common& common) {
  io::RunManifest m;
  m.command = command;
  if (common.record_time) m.started = io::utc_timestamp();
  return m;
}

void finish(io::RunManifest& m, const Common& common) {
  if (common.record_time) m.finished = io::utc_timestamp();
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  dive::Scenario scn;
  try {
    scn = dive::parse_scenario(a.scenario);
  } catch (const dive::DomainError& e) {
    throw UsageError(e.what());
  }
  const auto data = dive::sample(scn, a.n, a.seed);
  io::write_dataset_csv(a.out, data);
  return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string in;
  std::string out;
  int order = 50;
  double alpha = 0.1;
  int max_restarts = 10;
  double nu = 5.0;
  std::string link = "standard-normal";
  std::string beta = "sum";
  double lr = 0.1;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
  std::string z_type = "auto";
  int cvm_replicates = dive::kDefaultCvmReplicates;
  int permutations = dive::kDefaultPermutations;
};

int cmd_fit(const FitArgs& a, const Common& common) {
  auto m = manifest("fit", common);
  std::optional<dive::InstrumentType> z_type;
  if (a.z_type == "continuous") z_type = dive::InstrumentType::continuous;
  if (a.z_type == "discrete") z_type = dive::InstrumentType::discrete;
  const auto data = io::read_dataset_csv(a.in, z_type);
  if (!z_type) {
    std::clog << "info: instrument treated as "
              << (data.z().type == dive::InstrumentType::discrete ? "discrete" : "continuous")
              << " (use --z-type to override)\n";
  }

  dive::DiveConfig config;
  config.order = a.order;
  config.alpha = a.alpha;
  config.max_restarts = a.max_restarts;
  config.nu = a.nu;
  config.link = dive::LinkFunction::parse(a.link);
  config.beta = a.beta == "max" ? dive::Aggregation::max : dive::Aggregation::sum;
  config.optimizer.learning_rate = a.lr;
  config.optimizer.max_epochs = a.max_epochs;
  config.optimizer.seed = a.seed;
  config.cvm_replicates = a.cvm_replicates;
  config.hsic_permutations = a.permutations;
  config.seed = a.seed;
  try {
    config.validate();
  } catch (const dive::DomainError& e) {
    throw UsageError(e.what());
  }

  const auto fit = dive::dive_fit(data, config);
  json j = io::to_json(fit);
  j["config"] = io::to_json(config);
  j["config"]["z_type"] = data.z().type == dive::InstrumentType::discrete ? "discrete" : "continuous";
  m.config = j["config"];
  m.seed = a.seed;
  m.inputs = {a.in};
  m.outputs = {a.out};
  finish(m, common);
  j["manifest"] = io::to_json(m);
  io::write_text(a.out, dump(j));
  for (const auto& w : fit.warnings)
    if (w != dive::kNotConvergedWarning) std::clog << "warning: " << w << "\n";
  if (!fit.converged) {
    std::cerr << dive::kNotConvergedWarning << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- effects

struct EffectsArgs {
  std::string fit;
  std::string kind;
  std::string out;
  std::string format = "auto";
  std::size_t grid_points = 201;
  std::optional<double> y_min;
  std::optional<double> y_max;
  double tau_min = 0.05;
  double tau_max = 0.95;
  double tau_step = 0.01;
  std::size_t ace_points = 512;
};

std::vector<double> tau_grid(double lo, double hi, double step) {
  if (!(lo > 0 && hi < 1 && lo <= hi && step > 0)) throw UsageError("tau grid must satisfy 0 < min <= max < 1");
  std::vector<double> g;
  for (long k = 0;; ++k) {
    const double t = lo + static_cast<double>(k) * step;
    if (t > hi + 1e-12) break;
    // round to suppress accumulation noise like 0.30000000000000004
    g.push_back(std::round(t * 1e12) / 1e12);
  }
  return g;
}

int cmd_effects(const EffectsArgs& a, const Common& common) {
  auto m = manifest("effects", common);
  const json fit_json = io::read_json(a.fit);
  const auto stored = io::fit_from_json(fit_json);
  const auto& f0 = stored.f0;
  const auto& f1 = stored.f1;
  m.inputs = {a.fit};
  m.outputs = {a.out};
  m.config = {{"kind", a.kind}, {"grid_points", a.grid_points}, {"tau_min", a.tau_min}, {"tau_max", a.tau_max},
              {"tau_step", a.tau_step}, {"ace_points", a.ace_points}};
  if (fit_json.contains("manifest")) m.seed = fit_json["manifest"].value("seed", std::uint64_t{0});

  if (a.kind == "ace") {
    const double e0 = dive::interventional_mean(f0, a.ace_points);
    const double e1 = dive::interventional_mean(f1, a.ace_points);
    finish(m, common);
    const json j{{"manifest", io::to_json(m)}, {"kind", "ace"}, {"value", dive::ace(f0, f1, a.ace_points)},
                 {"E0", e0},
                 {"E1", e1},
                 {"points", a.ace_points}};
    io::write_text(a.out, dump(j));
    return kExitOk;
  }

  dive::EffectKind kind;
  try {
    kind = dive::parse_effect_kind(a.kind);
  } catch (const dive::DomainError& e) {
    throw UsageError(e.what());
  }
  dive::EffectCurve curve;
  if (kind == dive::EffectKind::qte) {
    curve = dive::qte(f0, f1, tau_grid(a.tau_min, a.tau_max, a.tau_step));
  } else {
    const double lo = a.y_min.value_or(f0.lower());
    const double hi = a.y_max.value_or(f0.upper());
    if (a.grid_points < 2 || !(hi > lo)) throw UsageError("y grid needs >= 2 points and y-max > y-min");
    const auto grid = dive::linear_grid(lo, hi, a.grid_points);
    if (kind == dive::EffectKind::dte) curve = dive::dte(f0, f1, grid);
    if (kind == dive::EffectKind::dok) curve = dive::dok(f0, f1, grid);
    if (kind == dive::EffectKind::logit_ce) curve = dive::logit_ce(f0, f1, grid);
  }
  const bool csv = a.format == "csv" || (a.format == "auto" && a.out.size() >= 4 &&
                                         a.out.compare(a.out.size() - 4, 4, ".csv") == 0);
  if (csv) {
    std::ostringstream os;
    io::write_effect_csv(os, curve);
    io::write_text(a.out, os.str());
  } else {
    finish(m, common);
    json j = io::to_json(curve);
    j["manifest"] = io::to_json(m);
    io::write_text(a.out, dump(j));
  }
  return kExitOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string scenarios = "S1,S2,S3,S4";
  std::string n_list = "100,400,1600";
  int replicates = 10;
  std::uint64_t seed = 0;
  int order = 50;
  int max_epochs = 1000;
  std::string out;
};

json row_json(const dive::BenchmarkRow& r) {
  return json{{"scenario", std::string(dive::to_string(r.scenario))},
              {"n", r.n},
              {"replicate", r.replicate},
              {"seed", r.seed},
              {"method", std::string(dive::to_string(r.method))},
              {"mse", r.mse},
              {"mae", r.mae},
              {"converged", r.converged},
              {"wall_time_s", r.wall_time_s}};
}

int cmd_benchmark(const BenchmarkArgs& a, const Common& common) {
  auto m = manifest("benchmark", common);
  dive::BenchmarkSpec spec;
  try {
    for (const auto& name : parse_list<std::string>(a.scenarios, "scenario"))
      spec.scenarios.push_back(dive::parse_scenario(name));
  } catch (const dive::DomainError& e) {
    throw UsageError(e.what());
  }
  spec.n_list = parse_list<std::size_t>(a.n_list, "n");
  if (a.replicates < 1) throw UsageError("replicates must be >= 1");
  spec.replicates = a.replicates;
  spec.seed = a.seed;
  spec.config.order = a.order;
  spec.config.optimizer.max_epochs = a.max_epochs;

  const std::string partial = a.out + ".partial.jsonl";
  std::ofstream flush(partial, std::ios::trunc);
  if (!flush) throw std::runtime_error("cannot write " + partial);
  const auto rows = dive::run_benchmark(spec, [&](const std::vector<dive::BenchmarkRow>& job) {
    for (const auto& r : job) flush << row_json(r).dump() << "\n";
    flush.flush();
  });
  json table = json::array();
  for (const auto& r : rows) table.push_back(row_json(r));
  m.seed = a.seed;
  m.config = {{"scenarios", a.scenarios}, {"n", a.n_list}, {"replicates", a.replicates},
              {"dive", io::to_json(spec.config)}};
  m.outputs = {a.out};
  finish(m, common);
  io::write_text(a.out, dump(json{{"manifest", io::to_json(m)}, {"rows", table}}));
  flush.close();
  std::filesystem::remove(partial);
  return kExitOk;
}

// ---------------------------------------------------------------- landscape

struct LandscapeArgs {
  std::string mu_grid = "-4,-3,-2,-1,0,1,2,3,4";
  std::string lambdas = "0.01,0.1,1";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string beta = "sum";
  std::string out;
};

int cmd_landscape(const LandscapeArgs& a) {
  const auto mu = parse_list<double>(a.mu_grid, "mu-grid");
  const auto lambdas = parse_list<double>(a.lambdas, "lambda");
  for (double l : lambdas)
    if (!(l > 0)) throw UsageError("lambda values must be positive");
  if (a.n < 5) throw UsageError("n must be >= 5");
  const auto points = dive::run_landscape(mu, lambdas, a.n, a.seed,
                                          a.beta == "max" ? dive::Aggregation::max : dive::Aggregation::sum);
  std::ostringstream os;
  os << "lambda,mu0,mu1,loss\n";
  for (const auto& p : points)
    os << io::format_double(p.lambda) << ',' << io::format_double(p.mu0) << ',' << io::format_double(p.mu1) << ','
       << io::format_double(p.loss) << '\n';
  io::write_text(a.out, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributional instrumental variable estimation"};
  app.set_version_flag("--version", dive::kVersion);
  app.require_subcommand(1);
  Common common;
  app.add_flag("--record-time", common.record_time, "Embed wall-clock timestamps in output manifests");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from a simulation scenario");
  simulate->add_option("--scenario", sim.scenario, "S1, S2, S3, S4, EX1 or LIN")->required();
  simulate->add_option("--n", sim.n, "Sample size")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output CSV (z,d,y)")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Estimate interventional CDFs from a z,d,y CSV");
  fit->add_option("--in", fa.in, "Input CSV")->required();
  fit->add_option("--out", fa.out, "Output fit JSON")->required();
  fit->add_option("--order", fa.order, "Bernstein order M")->check(CLI::Range(1, 200));
  fit->add_option("--alpha", fa.alpha, "Level of the stopping tests")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--max-restarts", fa.max_restarts, "Maximum number of lambda updates T")->check(CLI::PositiveNumber);
  fit->add_option("--nu", fa.nu, "Step size scale; nu_t = nu / t")->check(CLI::PositiveNumber);
  fit->add_option("--link", fa.link, "Link CDF")
      ->check(CLI::IsMember({"standard-normal", "standard-logistic", "min-extreme-value", "max-extreme-value"}));
  fit->add_option("--beta", fa.beta, "Aggregation of the two loss terms")->check(CLI::IsMember({"sum", "max"}));
  fit->add_option("--lr", fa.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  fit->add_option("--max-epochs", fa.max_epochs, "Epoch cap per restart")->check(CLI::PositiveNumber);
  fit->add_option("--seed", fa.seed, "Seed for the Monte-Carlo and permutation tests");
  fit->add_option("--z-type", fa.z_type, "Instrument kernel selection")
      ->check(CLI::IsMember({"auto", "continuous", "discrete"}));
  fit->add_option("--cvm-replicates", fa.cvm_replicates, "Monte-Carlo replicates for the uniformity test")
      ->check(CLI::Range(99, 1000000));
  fit->add_option("--permutations", fa.permutations, "Permutations for the independence test")
      ->check(CLI::Range(99, 1000000));

  EffectsArgs ea;
  auto* effects = app.add_subcommand("effects", "Derive causal effects from a fit");
  effects->add_option("--fit", ea.fit, "Fit JSON")->required();
  effects->add_option("--kind", ea.kind, "Effect")->required()->check(CLI::IsMember({"dte", "qte", "dok", "logitce", "ace"}));
  effects->add_option("--out", ea.out, "Output file (.csv or .json)")->required();
  effects->add_option("--format", ea.format, "Curve format")->check(CLI::IsMember({"auto", "csv", "json"}));
  effects->add_option("--grid-points", ea.grid_points, "Points of the response grid");
  effects->add_option("--y-min", ea.y_min, "Response grid start (default L)");
  effects->add_option("--y-max", ea.y_max, "Response grid end (default U)");
  effects->add_option("--tau-min", ea.tau_min, "First quantile level");
  effects->add_option("--tau-max", ea.tau_max, "Last quantile level");
  effects->add_option("--tau-step", ea.tau_step, "Quantile level step");
  effects->add_option("--ace-points", ea.ace_points, "Trapezoid points for the ACE")->check(CLI::Range(2, 10000000));

  BenchmarkArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Simulation study of DIVE against the CCDF baseline");
  bench->add_option("--scenarios", ba.scenarios, "Comma-separated scenario list");
  bench->add_option("--n", ba.n_list, "Comma-separated sample sizes");
  bench->add_option("--replicates", ba.replicates, "Replicates per cell");
  bench->add_option("--seed", ba.seed, "Master seed");
  bench->add_option("--order", ba.order, "Bernstein order M")->check(CLI::Range(1, 200));
  bench->add_option("--max-epochs", ba.max_epochs, "Epoch cap per restart")->check(CLI::PositiveNumber);
  bench->add_option("--out", ba.out, "Output JSON table")->required();

  LandscapeArgs la;
  auto* land = app.add_subcommand("landscape", "Loss surface over interventional means on linear-Gaussian IV data");
  land->add_option("--mu-grid", la.mu_grid, "Comma-separated means, used for both arms");
  land->add_option("--lambdas", la.lambdas, "Comma-separated lambda values");
  land->add_option("--n", la.n, "Sample size");
  land->add_option("--seed", la.seed, "Seed");
  land->add_option("--beta", la.beta, "Aggregation")->check(CLI::IsMember({"sum", "max"}));
  land->add_option("--out", la.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fit) return cmd_fit(fa, common);
    if (*effects) return cmd_effects(ea, common);
    if (*bench) return cmd_benchmark(ba, common);
    if (*land) return cmd_landscape(la);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dive::DegenerateCdfError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEffectDomain;
  } catch (const dive::RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEffectDomain;
  } catch (const dive::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dive::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
