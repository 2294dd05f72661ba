#include "binning.hpp"

#include <algorithm>

namespace imbalkit::detail {
namespace {

// Cut point strictly between two distinct doubles lo < hi.
double cut_between(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid >= hi ? lo : mid;
}

}  // namespace

BinnedFeature bin_feature(const Matrix& X, Eigen::Index column, int max_bins) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = X(static_cast<Eigen::Index>(i), column);
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(0);
    }
    ++counts.back();
  }

  BinnedFeature out;
  if (max_bins <= 0 || distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t k = 1; k < distinct.size(); ++k) {
      out.thresholds.push_back(cut_between(distinct[k - 1], distinct[k]));
    }
  } else {
    const double per_bin = static_cast<double>(n) / max_bins;
    std::size_t cumulative = 0;
    double next_cut = per_bin;
    for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
      cumulative += counts[k];
      if (static_cast<double>(cumulative) >= next_cut &&
          out.thresholds.size() + 1 < static_cast<std::size_t>(max_bins)) {
        out.thresholds.push_back(cut_between(distinct[k], distinct[k + 1]));
        while (next_cut <= static_cast<double>(cumulative)) next_cut += per_bin;
      }
    }
  }

  out.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = X(static_cast<Eigen::Index>(i), column);
    out.codes[i] = static_cast<std::uint32_t>(
        std::lower_bound(out.thresholds.begin(), out.thresholds.end(), v) - out.thresholds.begin());
  }
  return out;
}

std::vector<BinnedFeature> bin_all(const Matrix& X, int max_bins) {
  std::vector<BinnedFeature> bins;
  bins.reserve(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) bins.push_back(bin_feature(X, j, max_bins));
  return bins;
}

}  // namespace imbalkit::detail
