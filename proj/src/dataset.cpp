#include "dive/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dive/errors.hpp"

namespace dive {

IVDataset::IVDataset(Instrument z, std::vector<int> d, std::vector<double> y)
    : z_(std::move(z)), d_(std::move(d)), y_(std::move(y)) {
  if (z_.dim == 0) throw DataError("instrument dimension must be >= 1");
  if (z_.values.size() % z_.dim != 0) throw DataError("instrument values not a multiple of its dimension");
  if (z_.size() != y_.size() || d_.size() != y_.size()) throw DataError("z, d and y must have equal lengths");
  if (y_.empty()) throw DataError("dataset is empty");
  for (int v : d_)
    if (v != 0 && v != 1) throw DataError("treatment must be binary (0/1)");
  for (double v : y_)
    if (!std::isfinite(v)) throw DataError("response contains non-finite values");
  for (double v : z_.values)
    if (!std::isfinite(v)) throw DataError("instrument contains non-finite values");
  if (arm_size(0) == 0 || arm_size(1) == 0) throw DataError("both treatment arms required");
}

std::size_t IVDataset::arm_size(int arm) const {
  return static_cast<std::size_t>(std::count(d_.begin(), d_.end(), arm));
}

IVDataset IVDataset::permuted(const std::vector<std::size_t>& perm) const {
  if (perm.size() != size()) throw DataError("permutation has wrong length");
  Instrument z{{}, z_.dim, z_.type};
  z.values.reserve(z_.values.size());
  std::vector<int> d;
  std::vector<double> y;
  for (std::size_t i : perm) {
    const auto row = z_.row(i);
    z.values.insert(z.values.end(), row.begin(), row.end());
    d.push_back(d_[i]);
    y.push_back(y_[i]);
  }
  return IVDataset(std::move(z), std::move(d), std::move(y));
}

InstrumentType infer_instrument_type(const std::vector<double>& z, std::size_t max_levels) {
  std::set<double> levels;
  for (double v : z) {
    levels.insert(v);
    if (levels.size() > max_levels) return InstrumentType::continuous;
  }
  return InstrumentType::discrete;
}

}  // namespace dive
