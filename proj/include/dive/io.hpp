#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dive/bernstein_cdf.hpp"
#include "dive/dataset.hpp"
#include "dive/dive.hpp"
#include "dive/effects.hpp"

namespace dive::io {

/// Parse failure carrying the 1-based row (header = row 1) and column of the offending field.
class CsvError : public DataError {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column)
      : DataError(what), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Reads the `z,d,y` dataset schema. z_type applies to the instrument;
/// when empty it is inferred from the number of distinct z values.
IVDataset read_dataset_csv(std::istream& in, std::optional<InstrumentType> z_type = std::nullopt);
IVDataset read_dataset_csv(const std::filesystem::path& path, std::optional<InstrumentType> z_type = std::nullopt);
void write_dataset_csv(std::ostream& out, const IVDataset& data);
void write_dataset_csv(const std::filesystem::path& path, const IVDataset& data);

nlohmann::json to_json(const ParametricCDF& f);
ParametricCDF cdf_from_json(const nlohmann::json& j, double bound = kDefaultBound);

nlohmann::json to_json(const OptimizerConfig& c);
nlohmann::json to_json(const DiveConfig& c);
nlohmann::json to_json(const DiveFit& fit);

struct StoredFit {
  ParametricCDF f0;
  ParametricCDF f1;
  bool converged;
};
StoredFit fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EffectCurve& curve);
void write_effect_csv(std::ostream& out, const EffectCurve& curve);

/// Reproducibility record embedded in every JSON output.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  // Wall-clock timestamps break byte-identical reruns, so they are opt-in.
  std::optional<std::string> started;
  std::optional<std::string> finished;
};
nlohmann::json to_json(const RunManifest& m);

std::string utc_timestamp();

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dive::io
