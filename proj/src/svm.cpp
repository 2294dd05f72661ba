#include <algorithm>
#include <cmath>
#include <limits>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"

namespace imbalkit {

namespace {

double kernel_value(Kernel kernel, double gamma, std::span<const double> a, std::span<const double> b) {
  if (kernel == Kernel::linear) {
    double dot = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
    return dot;
  }
  double dist = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    dist += diff * diff;
  }
  return std::exp(-gamma * dist);
}

std::span<const double> row_span(const Matrix& X, Eigen::Index i) {
  return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
}

// Kernel rows; the full Gram matrix is kept when it fits comfortably.
class KernelRows {
 public:
  static constexpr Eigen::Index kFullLimit = 4500;

  KernelRows(const Matrix& X, Kernel kernel, double gamma) : X_(X), kernel_(kernel), gamma_(gamma) {
    const Eigen::Index n = X.rows();
    diag_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) diag_[i] = kernel_value(kernel, gamma, row_span(X, i), row_span(X, i));
    if (n <= kFullLimit) {
      full_.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double k = i == j ? diag_[i] : kernel_value(kernel, gamma, row_span(X, i), row_span(X, j));
          full_(i, j) = k;
          full_(j, i) = k;
        }
      }
    } else {
      slots_.assign(2, Vector());
      slot_owner_.assign(2, -1);
    }
  }

  double diag(Eigen::Index i) const { return diag_[i]; }

  // The returned pointer stays valid until two further distinct rows are requested.
  const double* row(Eigen::Index i) {
    if (full_.size() > 0) return full_.data() + i * full_.cols();
    for (std::size_t s = 0; s < 2; ++s) {
      if (slot_owner_[s] == i) return slots_[s].data();
    }
    const std::size_t s = next_slot_;
    next_slot_ = 1 - next_slot_;
    auto& out = slots_[s];
    out.resize(X_.rows());
    for (Eigen::Index j = 0; j < X_.rows(); ++j) out[j] = kernel_value(kernel_, gamma_, row_span(X_, i), row_span(X_, j));
    slot_owner_[s] = i;
    return out.data();
  }

 private:
  const Matrix& X_;
  Kernel kernel_;
  double gamma_;
  Vector diag_;
  Matrix full_;
  std::vector<Vector> slots_;
  std::vector<Eigen::Index> slot_owner_;
  std::size_t next_slot_ = 0;
};

// Platt scaling by Newton's method with backtracking (Lin, Lin and Weng).
std::pair<double, double> fit_platt(std::span<const double> f, std::span<const int> y) {
  double prior1 = 0.0, prior0 = 0.0;
  for (int label : y) (label == 1 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  const std::size_t n = f.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

  double A = 0.0;
  double B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = f[i] * a + b;
      total += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return total;
  };
  double fval = objective(A, B);
  constexpr double sigma = 1e-12;
  for (int it = 0; it < 100; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = f[i] * A + B;
      double p, q;
      if (z >= 0.0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {A, B};
}

}  // namespace

double SvmModel::decision(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(support_vectors.cols())) {
    throw std::invalid_argument("svm: feature count mismatch");
  }
  std::vector<double> scaled;
  if (input.active()) {
    input.apply(x, scaled);
    x = scaled;
  }
  double f = bias;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i) {
    f += dual_coef[i] * kernel_value(kernel, gamma, row_span(support_vectors, i), x);
  }
  return f;
}

double predict_one(const SvmModel& m, std::span<const double> x) {
  const double z = m.platt_a * m.decision(x) + m.platt_b;
  // 1 / (1 + exp(z))
  return sigmoid(-z);
}

SvmModel fit_svm(const ModelSpec& spec, const EncodedMatrix& train) {
  if (!train.values.allFinite()) throw DataError("svm: non-finite feature values");
  SvmModel model;
  if (spec.get_string("standardize") == "yes") model.input = Standardizer::fit(train.values);
  const Matrix X = model.input.active() ? model.input.apply(train.values) : train.values;
  const Eigen::Index n = X.rows();
  const auto balance = class_distribution(train);
  if (balance.count_class0 == 0 || balance.count_class1 == 0) {
    throw DataError("svm: training data must contain both classes");
  }

  model.kernel = spec.get_string("kernel") == "linear" ? Kernel::linear : Kernel::rbf;
  model.C = spec.get_double("C");
  model.gamma = spec.get_double("gamma");
  if (model.gamma <= 0.0) {
    const double var = (X.array() - X.mean()).square().mean();
    model.gamma = var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
  }
  const double tol = spec.get_double("tol");
  std::size_t max_iter = static_cast<std::size_t>(spec.get_int("max_iter"));
  if (max_iter == 0) max_iter = std::max<std::size_t>(10'000'000, 100 * static_cast<std::size_t>(n));

  const double C = model.C;
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = train.target[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  Vector alpha = Vector::Zero(n);
  Vector G = Vector::Constant(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  KernelRows K(X, model.kernel, model.gamma);
  constexpr double tau = 1e-12;

  auto dual = [&] { return 0.5 * alpha.dot(G - Vector::Ones(n)); };
  auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    if (iter % static_cast<std::size_t>(n) == 0 && iter > 0) model.dual_objective.push_back(dual());

    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * G[t] > gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    }
    if (i < 0) break;
    const double* Ki = K.row(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, y[t] * G[t]);
      const double b = gmax + y[t] * G[t];
      if (b <= 0.0) continue;
      double a = K.diag(i) + K.diag(t) - 2.0 * Ki[t];
      if (a <= 0.0) a = tau;
      const double score = -(b * b) / a;
      if (score < best) {
        best = score;
        j = t;
      }
    }
    if (j < 0 || gmax + gmax2 < tol) break;
    const double* Kj = K.row(j);
    Ki = K.row(i);

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double Qij = y[i] * y[j] * Ki[j];
    if (y[i] != y[j]) {
      double quad = K.diag(i) + K.diag(j) + 2.0 * Qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = K.diag(i) + K.diag(j) - 2.0 * Qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (Eigen::Index t = 0; t < n; ++t) {
      G[t] += y[t] * (y[i] * Ki[t] * dai + y[j] * Kj[t] * daj);
    }
  }
  model.dual_objective.push_back(dual());
  model.iterations = iter;

  // rho as in LIBSVM: average over free vectors, else midpoint of the bounds.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  model.bias = -rho;

  std::vector<Eigen::Index> support;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), X.cols());
  model.dual_coef.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = X.row(support[s]);
    model.dual_coef[static_cast<Eigen::Index>(s)] = alpha[support[s]] * y[support[s]];
  }

  // f_t = (Q a)_t * y_t - rho = (G_t + 1) * y_t - rho
  std::vector<double> decision(static_cast<std::size_t>(n));
  model.slacks.resize(n);
  double hinge = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    decision[static_cast<std::size_t>(t)] = (G[t] + 1.0) * y[t] - rho;
    model.slacks[t] = std::max(0.0, 1.0 - y[t] * decision[static_cast<std::size_t>(t)]);
    hinge += model.slacks[t];
  }
  model.primal_objective = 0.5 * alpha.dot(G + Vector::Ones(n)) + C * hinge;

  const auto [a, b] = fit_platt(decision, train.target);
  model.platt_a = a;
  model.platt_b = b;
  return model;
}

}  // namespace imbalkit
