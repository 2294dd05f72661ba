#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"

namespace imbalkit {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logistic_response(const LinearParams& params, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(params.weights.size())) {
    throw std::invalid_argument("logistic_response: expected " +
                                std::to_string(params.weights.size()) + " features, got " +
                                std::to_string(x.size()));
  }
  double z = params.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) z += params.weights[static_cast<Eigen::Index>(j)] * x[j];
  return sigmoid(z);
}

double predict_one(const LogisticModel& m, std::span<const double> x) {
  return logistic_response(m.params, x);
}

namespace {

Penalty parse_penalty(const std::string& text) {
  if (text == "l1") return Penalty::l1;
  if (text == "none") return Penalty::none;
  return Penalty::l2;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// Logistic regression on a standardized design Z = [1 | standardized X].
class LogisticProblem {
 public:
  LogisticProblem(const Matrix& Z, std::span<const int> y) : Z_(Z), y_(y.size()) {
    for (std::size_t i = 0; i < y.size(); ++i) y_[static_cast<Eigen::Index>(i)] = y[i];
  }

  Eigen::Index n() const { return Z_.rows(); }
  Eigen::Index p() const { return Z_.cols(); }

  double mean_loss(const Vector& theta) const {
    const Vector z = Z_ * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - y_[i] * z[i];
    return total / static_cast<double>(n());
  }

  Vector gradient(const Vector& theta, Vector* weights_out = nullptr) const {
    Vector residual = Z_ * theta;
    Vector w(residual.size());
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
      const double prob = sigmoid(residual[i]);
      w[i] = prob * (1.0 - prob);
      residual[i] = prob - y_[i];
    }
    if (weights_out) *weights_out = std::move(w);
    return Z_.transpose() * residual / static_cast<double>(n());
  }

  const Matrix& design() const { return Z_; }

 private:
  const Matrix& Z_;
  Vector y_;
};

// Penalized Newton iterations; `ridge` multiplies ||w||^2 / 2 (intercept free).
Vector solve_newton(const LogisticProblem& problem, Vector theta, double ridge, int max_iter,
                    double tol, int& iterations) {
  auto objective = [&](const Vector& t) {
    return problem.mean_loss(t) + 0.5 * ridge * t.tail(t.size() - 1).squaredNorm();
  };
  double current = objective(theta);
  for (iterations = 0; iterations < max_iter; ++iterations) {
    Vector hess_weights;
    Vector grad = problem.gradient(theta, &hess_weights);
    grad.tail(grad.size() - 1) += ridge * theta.tail(theta.size() - 1);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14) break;

    const Matrix& Z = problem.design();
    Eigen::MatrixXd H = Z.transpose() * hess_weights.asDiagonal() * Z / static_cast<double>(problem.n());
    for (Eigen::Index j = 1; j < H.rows(); ++j) H(j, j) += ridge;

    Vector step;
    if (ridge > 0.0) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      step = ldlt.solve(grad);
    } else {
      // Minimum-norm step keeps duplicated columns symmetric.
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(H);
      cod.setThreshold(1e-12);
      step = cod.solve(grad);
    }
    if (!step.allFinite()) throw NumericError("logistic regression: Newton step is not finite");

    const double slope = grad.dot(step);
    double t = 1.0;
    Vector candidate = theta - step;
    double value = objective(candidate);
    while (value > current - 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      candidate = theta - t * step;
      value = objective(candidate);
    }
    if (value > current) break;
    const double change = (t * step).lpNorm<Eigen::Infinity>();
    theta = std::move(candidate);
    current = value;
    if (change <= tol * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      ++iterations;
      break;
    }
  }
  return theta;
}

// Accelerated proximal gradient (FISTA with backtracking and adaptive restart)
// on mean log-loss + l1 * ||w||_1.
Vector solve_proximal(const LogisticProblem& problem, Vector theta, double l1, int max_iter,
                      double tol, int& iterations) {
  auto shrink = [&](Vector v, double step) {
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      const double a = std::abs(v[j]) - step * l1;
      v[j] = a > 0.0 ? std::copysign(a, v[j]) : 0.0;
    }
    return v;
  };
  auto objective = [&](const Vector& t) {
    return problem.mean_loss(t) + l1 * t.tail(t.size() - 1).lpNorm<1>();
  };
  Vector momentum = theta;
  double accel = 1.0;
  double lipschitz = 1.0;
  double current = objective(theta);
  for (iterations = 0; iterations < max_iter; ++iterations) {
    const double base_loss = problem.mean_loss(momentum);
    const Vector grad = problem.gradient(momentum);
    Vector next;
    for (;;) {
      next = shrink(momentum - grad / lipschitz, 1.0 / lipschitz);
      const Vector diff = next - momentum;
      const double bound = base_loss + grad.dot(diff) + 0.5 * lipschitz * diff.squaredNorm();
      if (problem.mean_loss(next) <= bound + 1e-15) break;
      lipschitz *= 2.0;
    }
    const double value = objective(next);
    const double change = (next - theta).lpNorm<Eigen::Infinity>();
    if (value > current) {
      // Restart momentum.
      momentum = theta;
      accel = 1.0;
      continue;
    }
    const double accel_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * accel * accel));
    momentum = next + ((accel - 1.0) / accel_next) * (next - theta);
    accel = accel_next;
    theta = std::move(next);
    current = value;
    lipschitz = std::max(lipschitz * 0.9, 1e-8);
    if (change <= tol * (1.0 + theta.lpNorm<Eigen::Infinity>())) {
      ++iterations;
      break;
    }
  }
  return theta;
}

}  // namespace

LogisticModel fit_logistic(const ModelSpec& spec, const EncodedMatrix& train) {
  const auto& X = train.values;
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0) throw DataError("logistic regression: empty training set");

  std::vector<Eigen::Index> active;
  Vector mean = X.colwise().mean().transpose();
  Vector scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    scale[j] = std::sqrt((X.col(j).array() - mean[j]).square().mean());
    if (scale[j] > 0.0) active.push_back(j);
  }
  Matrix Z(n, static_cast<Eigen::Index>(active.size()) + 1);
  Z.col(0).setOnes();
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Eigen::Index j = active[a];
    Z.col(static_cast<Eigen::Index>(a) + 1) = (X.col(j).array() - mean[j]) / scale[j];
  }

  const Penalty penalty = parse_penalty(spec.get_string("penalty"));
  const double C = spec.get_double("C");
  const int max_iter = static_cast<int>(spec.get_int("max_iter"));
  const double tol = spec.get_double("tol");

  const LogisticProblem problem(Z, train.target);
  Vector theta = Vector::Zero(Z.cols());
  const auto balance = class_distribution(train);
  const double prevalence = static_cast<double>(balance.count_class1) / static_cast<double>(n);
  if (prevalence > 0.0 && prevalence < 1.0) theta[0] = std::log(prevalence / (1.0 - prevalence));

  int iterations = 0;
  const double per_sample = 1.0 / (C * static_cast<double>(n));
  switch (penalty) {
    case Penalty::l2: theta = solve_newton(problem, theta, per_sample, std::min(max_iter, 100), tol, iterations); break;
    case Penalty::none: theta = solve_newton(problem, theta, 0.0, std::min(max_iter, 100), tol, iterations); break;
    case Penalty::l1: theta = solve_proximal(problem, theta, per_sample, max_iter, tol, iterations); break;
  }

  LogisticModel model;
  auto& params = model.params;
  params.penalty = penalty;
  params.C = C;
  params.iterations = iterations;
  params.weights = Vector::Zero(d);
  params.intercept = theta[0];
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Eigen::Index j = active[a];
    const double w = theta[static_cast<Eigen::Index>(a) + 1];
    params.weights[j] = w / scale[j];
    params.intercept -= w * mean[j] / scale[j];
  }
  return model;
}

}  // namespace imbalkit
