#include "dive/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dive/version.hpp"

namespace dive::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_field(std::string_view field, std::size_t row, std::size_t col, const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != last) {
    throw CsvError("row " + std::to_string(row) + ", column " + std::to_string(col) + " (" + name +
                       "): cannot parse '" + std::string(field) + "' as a number",
                   row, col);
  }
  if (!std::isfinite(v)) {
    throw CsvError("row " + std::to_string(row) + ", column " + std::to_string(col) + " (" + name +
                       "): value is not finite",
                   row, col);
  }
  return v;
}

}  // namespace

IVDataset read_dataset_csv(std::istream& in, std::optional<InstrumentType> z_type) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty input: expected header 'z,d,y'", 1, 1);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  if (trim_cr(line) != "z,d,y") throw CsvError("row 1: header must be exactly 'z,d,y'", 1, 1);
  std::vector<double> z;
  std::vector<int> d;
  std::vector<double> y;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (fields.size() != 3)
      throw CsvError("row " + std::to_string(row) + ": expected 3 fields, found " + std::to_string(fields.size()),
                     row, std::min<std::size_t>(fields.size(), 4));
    z.push_back(parse_field(fields[0], row, 1, "z"));
    const double dv = parse_field(fields[1], row, 2, "d");
    if (dv != 0.0 && dv != 1.0)
      throw CsvError("row " + std::to_string(row) + ", column 2 (d): treatment must be 0 or 1", row, 2);
    d.push_back(static_cast<int>(dv));
    y.push_back(parse_field(fields[2], row, 3, "y"));
  }
  if (y.empty()) throw CsvError("no data rows", 2, 1);
  const InstrumentType type = z_type ? *z_type : infer_instrument_type(z);
  return IVDataset(Instrument::scalar(std::move(z), type), std::move(d), std::move(y));
}

IVDataset read_dataset_csv(const std::filesystem::path& path, std::optional<InstrumentType> z_type) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in, z_type);
}

void write_dataset_csv(std::ostream& out, const IVDataset& data) {
  if (data.z().dim != 1) throw DataError("CSV export supports a scalar instrument only");
  out << "z,d,y\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    out << format_double(data.z().values[i]) << ',' << data.d()[i] << ',' << format_double(data.y()[i]) << '\n';
}

void write_dataset_csv(const std::filesystem::path& path, const IVDataset& data) {
  std::ostringstream os;
  write_dataset_csv(os, data);
  write_text(path, os.str());
}

json to_json(const ParametricCDF& f) {
  const auto theta = f.coeffs().theta();
  return json{{"link", std::string(f.link().name())},
              {"L", f.lower()},
              {"U", f.upper()},
              {"theta", std::vector<double>(theta.begin(), theta.end())}};
}

ParametricCDF cdf_from_json(const json& j, double bound) {
  try {
    const auto link = LinkFunction::parse(j.at("link").get<std::string>());
    const ResponseScaler scaler(j.at("L").get<double>(), j.at("U").get<double>());
    auto theta = j.at("theta").get<std::vector<double>>();
    return ParametricCDF(scaler, link, MonotoneCoefficients(std::move(theta), bound));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed CDF JSON: ") + e.what());
  }
}

json to_json(const OptimizerConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"max_epochs", c.max_epochs},
              {"reduce_lr", {{"patience", c.reduce_lr.patience}, {"tolerance", c.reduce_lr.tolerance},
                             {"factor", c.reduce_lr_factor}}},
              {"early_stop", {{"patience", c.early_stop.patience}, {"tolerance", c.early_stop.tolerance}}}};
}

namespace {

json kernel_json(const KernelSpec& k) {
  json j{{"family", k.family == KernelFamily::gaussian ? "gaussian" : "discrete-indicator"},
         {"rule", k.rule == BandwidthRule::median_heuristic ? "median-heuristic" : "fixed"}};
  if (!k.bandwidth.empty()) j["bandwidth"] = k.bandwidth;
  return j;
}

}  // namespace

json to_json(const DiveConfig& c) {
  json j{{"order", c.order},
         {"alpha", c.alpha},
         {"max_restarts", c.max_restarts},
         {"nu", c.nu},
         {"link", std::string(c.link.name())},
         {"beta", c.beta == Aggregation::sum ? "sum" : "max"},
         {"bound", c.bound},
         {"optimizer", to_json(c.optimizer)},
         {"mle_optimizer", to_json(c.mle_optimizer)},
         {"cvm_replicates", c.cvm_replicates},
         {"hsic_permutations", c.hsic_permutations},
         {"seed", c.seed},
         {"residual_kernel", kernel_json(c.residual_kernel)}};
  if (c.instrument_kernel) j["instrument_kernel"] = kernel_json(*c.instrument_kernel);
  if (c.support) j["support"] = {c.support->lower(), c.support->upper()};
  return j;
}

json to_json(const DiveFit& fit) {
  json restarts = json::array();
  for (const auto& r : fit.restarts) {
    restarts.push_back({{"lambda", r.lambda},
                        {"loss", r.loss},
                        {"p_uniform", r.p_uniform},
                        {"p_independent", r.p_independent},
                        {"epochs", r.trace.stopped_epoch},
                        {"best_epoch", r.trace.best_epoch},
                        {"stop_reason", std::string(to_string(r.trace.stop_reason))},
                        {"loss_trace", r.trace.loss},
                        {"lr_trace", r.trace.learning_rate}});
  }
  return json{{"F0", to_json(fit.f0)},
              {"F1", to_json(fit.f1)},
              {"lambda_init", fit.lambda_init},
              {"lambda_final", fit.lambda_final},
              {"lambda_path", fit.lambda_path},
              {"p_uniform", fit.p_uniform},
              {"p_independent", fit.p_independent},
              {"converged", fit.converged},
              {"restarts_used", fit.restarts_used},
              {"restarts", restarts},
              {"warnings", fit.warnings}};
}

StoredFit fit_from_json(const json& j) {
  try {
    const double bound =
        j.contains("config") && j["config"].contains("bound") ? j["config"]["bound"].get<double>() : kDefaultBound;
    return StoredFit{cdf_from_json(j.at("F0"), bound), cdf_from_json(j.at("F1"), bound),
                     j.at("converged").get<bool>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit JSON: ") + e.what());
  }
}

json to_json(const EffectCurve& curve) {
  json values = json::array();
  for (const auto& v : curve.values) values.push_back(v ? json(*v) : json(nullptr));
  return json{{"kind", std::string(to_string(curve.kind))}, {"abscissa", curve.abscissa}, {"values", values}};
}

void write_effect_csv(std::ostream& out, const EffectCurve& curve) {
  out << "abscissa,value\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out << format_double(curve.abscissa[k]) << ',';
    if (curve.values[k]) {
      out << format_double(*curve.values[k]);
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

json to_json(const RunManifest& m) {
  json j{{"command", m.command},
         {"version", kVersion},
         {"seed", m.seed},
         {"config", m.config},
         {"inputs", m.inputs},
         {"outputs", m.outputs}};
  if (m.started) j["started"] = *m.started;
  if (m.finished) j["finished"] = *m.finished;
  return j;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

}  // namespace dive::io
