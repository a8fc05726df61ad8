#pragma once

#include <cstddef>
#include <vector>

#include "dive/criteria.hpp"

namespace dive {

/// n observations (z_i, d_i, y_i) with binary treatment; validated on construction.
class IVDataset {
 public:
  IVDataset(Instrument z, std::vector<int> d, std::vector<double> y);

  const Instrument& z() const { return z_; }
  const std::vector<int>& d() const { return d_; }
  const std::vector<double>& y() const { return y_; }
  std::size_t size() const { return y_.size(); }
  std::size_t arm_size(int arm) const;

  // Copy with rows reordered: row i of the result is row perm[i] of this.
  IVDataset permuted(const std::vector<std::size_t>& perm) const;

 private:
  Instrument z_;
  std::vector<int> d_;
  std::vector<double> y_;
};

/// discrete when z takes at most max_levels distinct values.
InstrumentType infer_instrument_type(const std::vector<double>& z, std::size_t max_levels = 10);

}  // namespace dive
