#include <algorithm>
#include <cmath>
#include <limits>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

std::size_t MlpNetwork::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return total;
}

Vector MlpNetwork::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(weights[l].data(), weights[l].data() + weights[l].size(), flat.data() + at);
    at += weights[l].size();
    std::copy(biases[l].data(), biases[l].data() + biases[l].size(), flat.data() + at);
    at += biases[l].size();
  }
  return flat;
}

void MlpNetwork::unflatten(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw std::invalid_argument("MlpNetwork::unflatten: expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(flat.size()));
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(flat.data() + at, flat.data() + at + weights[l].size(), weights[l].data());
    at += weights[l].size();
    std::copy(flat.data() + at, flat.data() + at + biases[l].size(), biases[l].data());
    at += biases[l].size();
  }
}

namespace {

void activate(Matrix& Z, Activation activation) {
  if (activation == Activation::tanh) Z = Z.array().tanh();
  else Z = Z.array().max(0.0);
}

// Returns activations per layer; the last entry holds output logits.
std::vector<Matrix> forward(const MlpNetwork& net, const Matrix& X) {
  std::vector<Matrix> outputs;
  outputs.reserve(net.weights.size() + 1);
  outputs.push_back(X);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Matrix Z = outputs.back() * net.weights[l];
    Z.rowwise() += net.biases[l].transpose();
    if (l + 1 < net.weights.size()) activate(Z, net.activation);
    outputs.push_back(std::move(Z));
  }
  return outputs;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double mlp_loss(const MlpNetwork& network, const Matrix& X, std::span<const int> y, double alpha,
                MlpNetwork* gradient) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw std::invalid_argument("mlp_loss: row/label mismatch");
  if (n == 0) throw std::invalid_argument("mlp_loss: empty batch");
  const auto outputs = forward(network, X);
  const Matrix& logits = outputs.back();
  const double inv_n = 1.0 / static_cast<double>(n);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = logits(i, 0);
    loss += softplus(z) - y[static_cast<std::size_t>(i)] * z;
  }
  loss *= inv_n;
  double penalty = 0.0;
  for (const auto& W : network.weights) penalty += W.squaredNorm();
  loss += 0.5 * alpha * inv_n * penalty;

  if (gradient) {
    const std::size_t L = network.weights.size();
    gradient->activation = network.activation;
    gradient->weights.resize(L);
    gradient->biases.resize(L);
    Matrix delta(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) delta(i, 0) = (sigmoid(logits(i, 0)) - y[static_cast<std::size_t>(i)]) * inv_n;
    for (std::size_t l = L; l-- > 0;) {
      gradient->weights[l] = outputs[l].transpose() * delta + alpha * inv_n * network.weights[l];
      gradient->biases[l] = delta.colwise().sum().transpose();
      if (l == 0) break;
      Matrix back = delta * network.weights[l].transpose();
      const Matrix& H = outputs[l];
      if (network.activation == Activation::tanh) back.array() *= 1.0 - H.array().square();
      else back.array() *= (H.array() > 0.0).cast<double>();
      delta = std::move(back);
    }
  }
  return loss;
}

std::vector<double> predict_batch(const MlpModel& m, const Matrix& X) {
  if (X.cols() != m.input_mean.size()) throw std::invalid_argument("mlp: feature count mismatch");
  Matrix Z = (X.rowwise() - m.input_mean.transpose()).array().rowwise() / m.input_scale.transpose().array();
  const auto outputs = forward(m.network, Z);
  std::vector<double> p(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) p[static_cast<std::size_t>(i)] = sigmoid(outputs.back()(i, 0));
  return p;
}

MlpModel fit_mlp(const ModelSpec& spec, const EncodedMatrix& train) {
  const Matrix& X = train.values;
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (!X.allFinite()) throw DataError("mlp: non-finite feature values");
  if (n == 0) throw DataError("mlp: empty training set");

  MlpModel model;
  model.input_mean = X.colwise().mean().transpose();
  model.input_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((X.col(j).array() - model.input_mean[j]).square().mean());
    model.input_scale[j] = sd > 0.0 ? sd : 1.0;
  }
  const Matrix Z = (X.rowwise() - model.input_mean.transpose()).array().rowwise() /
                   model.input_scale.transpose().array();

  auto& net = model.network;
  net.activation = spec.get_string("activation") == "relu" ? Activation::relu : Activation::tanh;
  std::vector<Eigen::Index> sizes{d};
  for (auto h : spec.get_int_list("hidden_layer_sizes")) sizes.push_back(static_cast<Eigen::Index>(h));
  sizes.push_back(1);
  Rng init(spec.seed, Stream::mlp_init);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const bool output = l + 2 == sizes.size();
    const double bound = std::sqrt((output ? 2.0 : 6.0) / static_cast<double>(sizes[l] + sizes[l + 1]));
    Matrix W(sizes[l], sizes[l + 1]);
    for (Eigen::Index k = 0; k < W.size(); ++k) W.data()[k] = init.uniform(-bound, bound);
    Vector b(sizes[l + 1]);
    for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = init.uniform(-bound, bound);
    net.weights.push_back(std::move(W));
    net.biases.push_back(std::move(b));
  }

  const double lr = spec.get_double("learning_rate");
  const double alpha = spec.get_double("alpha");
  const double tol = spec.get_double("tol");
  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(spec.get_int("batch_size")), static_cast<std::size_t>(n));
  const int max_iter = static_cast<int>(spec.get_int("max_iter"));
  const int patience = static_cast<int>(spec.get_int("n_iter_no_change"));
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Vector theta = net.flatten();
  Vector m1 = Vector::Zero(theta.size());
  Vector m2 = Vector::Zero(theta.size());
  std::size_t step = 0;
  double best = std::numeric_limits<double>::infinity();
  int stalls = 0;
  MlpNetwork grad;
  Matrix Xb;
  std::vector<int> yb;

  for (int epoch = 0; epoch < max_iter; ++epoch) {
    Rng shuffle_rng(spec.seed, Stream::mlp_batches, static_cast<std::uint64_t>(epoch));
    const auto order = random_permutation(static_cast<std::size_t>(n), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      Xb.resize(static_cast<Eigen::Index>(stop - start), d);
      yb.resize(stop - start);
      for (std::size_t r = start; r < stop; ++r) {
        Xb.row(static_cast<Eigen::Index>(r - start)) = Z.row(static_cast<Eigen::Index>(order[r]));
        yb[r - start] = train.target[order[r]];
      }
      epoch_loss += mlp_loss(net, Xb, yb, alpha, &grad) * static_cast<double>(stop - start);
      const Vector g = grad.flatten();
      ++step;
      m1 = beta1 * m1 + (1.0 - beta1) * g;
      m2 = beta2 * m2 + (1.0 - beta2) * g.cwiseProduct(g);
      const double rate = lr * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                          (1.0 - std::pow(beta1, static_cast<double>(step)));
      theta.array() -= rate * m1.array() / (m2.array().sqrt() + eps);
      net.unflatten(theta);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw NumericError("mlp: training loss diverged");
    model.loss_curve.push_back(epoch_loss);
    model.epochs = epoch + 1;
    if (epoch_loss > best - tol) ++stalls;
    else stalls = 0;
    best = std::min(best, epoch_loss);
    if (stalls > patience) break;
  }
  return model;
}

}  // namespace imbalkit
