#pragma once

#include <cstdint>
#include <vector>

#include "imbalkit/tabular.hpp"

namespace imbalkit::detail {

/// A feature column discretized into ordered bins. Row r falls in bin
/// codes[r]; bin b and everything below it satisfy value <= thresholds[b].
struct BinnedFeature {
  std::vector<double> thresholds;  // n_bins - 1 cut points
  std::vector<std::uint32_t> codes;

  std::size_t n_bins() const { return thresholds.size() + 1; }
};

/// max_bins == 0, or a column with at most max_bins distinct values, gives one
/// bin per distinct value. Otherwise bins hold roughly equal row counts.
BinnedFeature bin_feature(const Matrix& X, Eigen::Index column, int max_bins);

std::vector<BinnedFeature> bin_all(const Matrix& X, int max_bins);

}  // namespace imbalkit::detail
