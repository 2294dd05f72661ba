#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "imbalkit/metrics.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

/// Upper tail of chi-square with df degrees of freedom, 50 decimal digits.
inline double chi2_sf(double x, int df) {
  return static_cast<double>(boost::math::gamma_q(Big(df) / 2, Big(x) / 2));
}

/// Two-sided Student t tail probability, 50 decimal digits.
inline double t_two_tailed(double t, int df) {
  Big v(df), tt(t);
  return static_cast<double>(boost::math::ibeta(v / 2, Big(0.5), v / (v + tt * tt)));
}

struct Metrics {
  double accuracy, macro_precision, macro_recall, macro_f1, recall, specificity, g_mean, iba;
};

/// Expands the confusion matrix to label/prediction vectors and counts per class.
inline Metrics brute_force_metrics(const imbalkit::ConfusionMatrix& cm, double alpha = 0.1) {
  std::vector<int> label, pred;
  auto push = [&](std::int64_t n, int l, int p) {
    for (std::int64_t i = 0; i < n; ++i) {
      label.push_back(l);
      pred.push_back(p);
    }
  };
  push(cm.tp, 1, 1);
  push(cm.fn, 1, 0);
  push(cm.fp, 0, 1);
  push(cm.tn, 0, 0);
  double precision[2], recall[2];
  std::size_t correct = 0;
  for (int c = 0; c < 2; ++c) {
    std::size_t hit = 0, predicted = 0, actual = 0;
    for (std::size_t i = 0; i < label.size(); ++i) {
      hit += label[i] == c && pred[i] == c;
      predicted += pred[i] == c;
      actual += label[i] == c;
    }
    precision[c] = predicted ? static_cast<double>(hit) / static_cast<double>(predicted) : 0.0;
    recall[c] = actual ? static_cast<double>(hit) / static_cast<double>(actual) : 0.0;
  }
  for (std::size_t i = 0; i < label.size(); ++i) correct += label[i] == pred[i];
  Metrics m{};
  m.accuracy = label.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(label.size());
  m.macro_precision = 0.5 * (precision[0] + precision[1]);
  m.macro_recall = 0.5 * (recall[0] + recall[1]);
  double s = m.macro_precision + m.macro_recall;
  m.macro_f1 = s > 0 ? 2.0 * m.macro_precision * m.macro_recall / s : 0.0;
  m.recall = recall[1];
  m.specificity = recall[0];
  m.g_mean = std::sqrt(recall[1] * recall[0]);
  m.iba = (1.0 + alpha * (recall[1] - recall[0])) * recall[1] * recall[0];
  return m;
}

/// P(score_pos > score_neg) + 0.5 P(tie) over all pairs.
inline double pairwise_auc(std::span<const double> s, std::span<const int> y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

/// Tucker congruence of two loading vectors.
inline double congruence(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
}

/// Best absolute congruence of each true factor with any estimated factor.
inline std::vector<double> factor_congruences(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  std::vector<double> out;
  for (Eigen::Index k = 0; k < truth.cols(); ++k) {
    double best = 0.0;
    for (Eigen::Index m = 0; m < estimate.cols(); ++m)
      best = std::max(best, std::abs(congruence(truth.col(k), estimate.col(m))));
    out.push_back(best);
  }
  return out;
}

/// Shapley values from the subset formula with v(S) = mean over background of
/// f(x on S, background elsewhere).
template <class F>
std::vector<double> shapley_by_subsets(F f, const std::vector<double>& x, const Eigen::MatrixXd& background) {
  const std::size_t d = x.size();
  std::vector<double> value(std::size_t{1} << d, 0.0);
  for (std::size_t mask = 0; mask < value.size(); ++mask) {
    for (Eigen::Index r = 0; r < background.rows(); ++r) {
      std::vector<double> z(d);
      for (std::size_t j = 0; j < d; ++j) z[j] = (mask >> j) & 1 ? x[j] : background(r, static_cast<Eigen::Index>(j));
      value[mask] += f(z);
    }
    value[mask] /= static_cast<double>(background.rows());
  }
  std::vector<double> fact(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
  std::vector<double> phi(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t mask = 0; mask < value.size(); ++mask) {
      if ((mask >> i) & 1) continue;
      const auto s = static_cast<std::size_t>(__builtin_popcountll(mask));
      phi[i] += fact[s] * fact[d - s - 1] / fact[d] * (value[mask | (std::size_t{1} << i)] - value[mask]);
    }
  return phi;
}

}  // namespace oracle
