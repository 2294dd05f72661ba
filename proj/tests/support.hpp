#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "imbalkit/report.hpp"
#include "imbalkit/tabular.hpp"

namespace testing_support {

using imbalkit::ColumnKind;
using imbalkit::EncodedMatrix;
using imbalkit::Matrix;

/// Gaussian features; label 1 when a noisy linear score exceeds `cut`.
inline EncodedMatrix linear_problem(std::size_t n, std::size_t d, std::uint64_t seed, double noise = 0.3,
                                    double cut = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  EncodedMatrix m;
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    m.column_names.push_back("x" + std::to_string(j));
    m.kinds.push_back(ColumnKind::continuous);
    m.cardinality.push_back(0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double v = normal(gen);
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      score += v / static_cast<double>(j + 1);
    }
    m.target.push_back(score + noise * normal(gen) > cut ? 1 : 0);
    m.row_ids.push_back(static_cast<std::int64_t>(i));
  }
  return m;
}

/// The bundled synthetic survey data, label encoded.
inline EncodedMatrix synthetic_matrix(std::uint64_t seed = 2024, std::size_t rows = 2000, std::size_t positives = 308) {
  imbalkit::SyntheticOptions o;
  o.seed = seed;
  o.rows = rows;
  o.positives = positives;
  return imbalkit::label_encode(imbalkit::generate_synthetic(o)).matrix;
}

inline double accuracy(const std::vector<double>& prob, const std::vector<int>& y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += (prob[i] >= 0.5) == (y[i] == 1);
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace testing_support
