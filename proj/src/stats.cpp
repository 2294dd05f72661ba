#include "imbalkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "imbalkit/distributions.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/log.hpp"
#include "imbalkit/parallel.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

namespace {

std::vector<double> distinct(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t position(const std::vector<double>& sorted, double value) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

double unbiased_variance(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

ContingencyTable contingency(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("contingency: columns differ in length");
  if (a.empty()) throw DataError("contingency: empty columns");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw DataError("contingency: non-finite value");
  }
  ContingencyTable table;
  table.row_labels = distinct(a);
  table.col_labels = distinct(b);
  table.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.row_labels.size()),
                                       static_cast<Eigen::Index>(table.col_labels.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    table.counts(static_cast<Eigen::Index>(position(table.row_labels, a[i])),
                 static_cast<Eigen::Index>(position(table.col_labels, b[i]))) += 1.0;
  }
  return table;
}

ChiSquare chi_square(const ContingencyTable& table, bool yates) {
  const auto& O = table.counts;
  if ((O.array() < 0.0).any()) throw DataError("chi-square: negative count");
  const double n = O.sum();
  if (!(n > 0.0)) throw DataError("chi-square: table total is zero");
  const Eigen::VectorXd rows = O.rowwise().sum();
  const Eigen::RowVectorXd cols = O.colwise().sum();
  ChiSquare out;
  out.df = static_cast<int>((O.rows() - 1) * (O.cols() - 1));
  const bool correct = yates && O.rows() == 2 && O.cols() == 2;
  int empty_cells = 0;
  for (Eigen::Index i = 0; i < O.rows(); ++i) {
    for (Eigen::Index j = 0; j < O.cols(); ++j) {
      const double E = rows[i] * cols[j] / n;
      if (E == 0.0) {
        ++empty_cells;
        continue;
      }
      double diff = std::abs(O(i, j) - E);
      if (correct) diff = std::max(0.0, diff - 0.5);
      out.chi2 += diff * diff / E;
    }
  }
  if (empty_cells > 0) log_warning("chi-square: " + std::to_string(empty_cells) + " cell(s) with zero expected count skipped");
  out.p_value = out.df > 0 ? chi2_sf(out.chi2, out.df) : 1.0;
  return out;
}

AssociationResult chi_square_association(std::span<const double> feature, std::span<const int> target, double alpha,
                                         bool yates) {
  std::vector<double> y(target.begin(), target.end());
  const auto table = contingency(feature, y);
  const auto chi = chi_square(table, yates);
  AssociationResult r;
  r.chi2 = chi.chi2;
  r.df = chi.df;
  r.p_value = chi.p_value;
  r.alpha = alpha;
  r.significant = chi.df > 0 && chi.p_value < alpha;
  if (chi.df > 0) {
    const auto m = std::min(table.counts.rows(), table.counts.cols());
    const double plain = yates ? chi_square(table, false).chi2 : chi.chi2;
    r.cramers_v = std::clamp(std::sqrt(plain / (table.total() * static_cast<double>(m - 1))), 0.0, 1.0);
  }
  return r;
}

double cramers_v(std::span<const double> a, std::span<const double> b) {
  const auto table = contingency(a, b);
  const auto m = std::min(table.counts.rows(), table.counts.cols());
  if (m < 2) {
    log_warning("Cramer's V: a column has a single category; reporting 0");
    return 0.0;
  }
  const auto chi = chi_square(table, false);
  return std::clamp(std::sqrt(chi.chi2 / (table.total() * static_cast<double>(m - 1))), 0.0, 1.0);
}

Eigen::MatrixXd cramers_v_matrix(const Matrix& data) {
  const Eigen::Index p = data.cols();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(p, p);
  std::vector<std::vector<double>> columns(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    columns[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i) columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = data(i, j);
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (distinct(columns[static_cast<std::size_t>(i)]).size() < 2) V(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < p; ++j) {
      V(i, j) = V(j, i) = cramers_v(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]);
    }
  }
  return V;
}

ReliabilityResult cronbach_alpha(const Matrix& items) {
  const Eigen::Index n = items.rows();
  const Eigen::Index k = items.cols();
  if (k < 2) throw std::invalid_argument("Cronbach's alpha needs at least 2 items");
  if (n < 2) throw std::invalid_argument("Cronbach's alpha needs at least 2 respondents");
  ReliabilityResult r;
  r.k = static_cast<int>(k);
  double sum_var = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double v = unbiased_variance(items.col(j));
    r.item_variances.push_back(v);
    sum_var += v;
  }
  r.total_variance = unbiased_variance(items.rowwise().sum());
  if (!(r.total_variance > 0.0)) throw NumericError("Cronbach's alpha: total score variance is zero");
  const double kk = static_cast<double>(k);
  r.alpha = kk / (kk - 1.0) * (1.0 - sum_var / r.total_variance);
  return r;
}

Eigen::MatrixXd correlation_matrix(const Matrix& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw DataError("correlation needs at least 2 rows");
  Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::VectorXd sd = centered.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd[j] > 0.0)) throw DataError("correlation: column " + std::to_string(j) + " is constant");
  }
  Eigen::MatrixXd R = (centered.transpose() * centered).array() / (sd * sd.transpose()).array();
  R.diagonal().setOnes();
  return R;
}

double kmo(const Eigen::MatrixXd& R) {
  if (R.rows() != R.cols() || R.rows() < 2) throw std::invalid_argument("KMO needs a square matrix of size >= 2");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw NumericError("KMO: correlation matrix is singular");
  const Eigen::MatrixXd inv = lu.inverse();
  double r2 = 0.0, q2 = 0.0;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      if (i == j) continue;
      const double q = -inv(i, j) / std::sqrt(inv(i, i) * inv(j, j));
      r2 += R(i, j) * R(i, j);
      q2 += q * q;
    }
  }
  if (!(r2 + q2 > 0.0)) throw NumericError("KMO: no off-diagonal correlation");
  return r2 / (r2 + q2);
}

BartlettResult bartlett_sphericity(const Eigen::MatrixXd& R, std::size_t n) {
  const auto p = static_cast<double>(R.rows());
  if (R.rows() != R.cols()) throw std::invalid_argument("Bartlett: matrix is not square");
  if (static_cast<double>(n) <= p) throw std::invalid_argument("Bartlett: sample size must exceed the variable count");
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) throw NumericError("Bartlett: correlation matrix is not positive definite");
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  BartlettResult r;
  r.chi2 = -(static_cast<double>(n) - 1.0 - (2.0 * p + 5.0) / 6.0) * log_det;
  if (r.chi2 == 0.0) r.chi2 = 0.0;  // normalize -0
  r.df = static_cast<int>(p * (p - 1.0) / 2.0);
  r.p_value = r.df > 0 ? chi2_sf(r.chi2, r.df) : 1.0;
  return r;
}

namespace {

double varimax_criterion(const Eigen::MatrixXd& L) {
  const double p = static_cast<double>(L.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    const Eigen::ArrayXd sq = L.col(j).array().square();
    total += (p * sq.square().sum() - sq.sum() * sq.sum()) / (p * p);
  }
  return total;
}

}  // namespace

Eigen::MatrixXd varimax_rotation(const Eigen::MatrixXd& loadings, std::vector<double>* history, double tol,
                                 int max_sweeps) {
  const Eigen::Index p = loadings.rows();
  const Eigen::Index k = loadings.cols();
  Eigen::VectorXd h = loadings.rowwise().norm();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(h[i] > 0.0)) h[i] = 1.0;
  }
  Eigen::MatrixXd L = loadings.array().colwise() / h.array();
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(k, k);
  double current = varimax_criterion(L);
  if (history) history->push_back(current);
  const double pp = static_cast<double>(p);
  for (int sweep = 0; sweep < max_sweeps && k > 1; ++sweep) {
    for (Eigen::Index a = 0; a + 1 < k; ++a) {
      for (Eigen::Index b = a + 1; b < k; ++b) {
        const Eigen::ArrayXd x = L.col(a).array();
        const Eigen::ArrayXd y = L.col(b).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double A = u.sum(), B = v.sum();
        const double C = (u.square() - v.square()).sum();
        const double D = 2.0 * (u * v).sum();
        const double phi = 0.25 * std::atan2(D - 2.0 * A * B / pp, C - (A * A - B * B) / pp);
        if (std::abs(phi) < 1e-15) continue;
        const double c = std::cos(phi), s = std::sin(phi);
        const Eigen::VectorXd la = L.col(a), lb = L.col(b);
        L.col(a) = c * la + s * lb;
        L.col(b) = -s * la + c * lb;
        const Eigen::VectorXd ta = T.col(a), tb = T.col(b);
        T.col(a) = c * ta + s * tb;
        T.col(b) = -s * ta + c * tb;
      }
    }
    const double next = varimax_criterion(L);
    if (history) history->push_back(next);
    const double change = next - current;
    current = next;
    if (std::abs(change) < tol) break;
  }
  return T;
}

FactorModel efa_varimax(const Matrix& data, int n_factors) {
  const Eigen::Index p = data.cols();
  if (n_factors < 1 || n_factors > p) {
    throw std::invalid_argument("n_factors must be in [1, " + std::to_string(p) + "]");
  }
  const Eigen::MatrixXd R = correlation_matrix(data);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
  if (eig.info() != Eigen::Success) throw NumericError("EFA: eigendecomposition failed");
  FactorModel model;
  const Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index j = p; j-- > 0;) model.eigenvalues.push_back(values[j]);
  const auto k = static_cast<Eigen::Index>(n_factors);
  model.unrotated_loadings.resize(p, k);
  for (Eigen::Index f = 0; f < k; ++f) {
    const Eigen::Index src = p - 1 - f;
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    if (v.sum() < 0.0) v = -v;
    model.unrotated_loadings.col(f) = v * std::sqrt(std::max(0.0, values[src]));
  }

  Eigen::MatrixXd T = varimax_rotation(model.unrotated_loadings, &model.criterion_history);
  Eigen::MatrixXd L = model.unrotated_loadings * T;

  // Order factors by explained variance, then fix signs.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return L.col(a).squaredNorm() > L.col(b).squaredNorm();
  });
  model.rotation.resize(k, k);
  model.loadings.resize(p, k);
  for (Eigen::Index f = 0; f < k; ++f) {
    const Eigen::Index src = order[static_cast<std::size_t>(f)];
    const double sign = L.col(src).sum() < 0.0 ? -1.0 : 1.0;
    model.rotation.col(f) = sign * T.col(src);
    model.loadings.col(f) = sign * L.col(src);
  }
  for (Eigen::Index i = 0; i < p; ++i) model.communalities.push_back(model.loadings.row(i).squaredNorm());
  try {
    model.kmo = kmo(R);
  } catch (const NumericError&) {
    model.kmo = std::numeric_limits<double>::quiet_NaN();
    log_warning("EFA: correlation matrix is singular; KMO undefined");
  }
  try {
    model.bartlett = bartlett_sphericity(R, static_cast<std::size_t>(data.rows()));
  } catch (const std::exception& e) {
    log_warning(std::string("EFA: Bartlett test unavailable: ") + e.what());
    model.bartlett = {std::numeric_limits<double>::quiet_NaN(), 0, std::numeric_limits<double>::quiet_NaN()};
  }
  return model;
}

PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test: samples differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired t-test needs at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  // Differences equal up to rounding, e.g. 0.9 - 0.8 and 0.8 - 0.7.
  if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) throw NumericError("paired t-test: degenerate differences (zero variance)");
  PairedTestResult r;
  r.mean_difference = mean;
  r.sd_difference = sd;
  r.cohens_d = mean / sd;
  r.t = r.cohens_d * std::sqrt(static_cast<double>(n));
  r.df = static_cast<int>(n - 1);
  r.p_value = t_two_tailed_p(r.t, r.df);
  return r;
}

double bonferroni_adjust(double alpha, int comparisons) {
  if (comparisons < 1) throw std::invalid_argument("Bonferroni: comparisons must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("Bonferroni: alpha must be in (0, 1)");
  return alpha / comparisons;
}

double report_metric(const EvaluationReport& r, const std::string& name) {
  if (name == "accuracy") return r.accuracy;
  if (name == "macro_precision") return r.macro_precision;
  if (name == "macro_recall") return r.macro_recall;
  if (name == "macro_f1") return r.macro_f1;
  if (name == "auc") return r.auc;
  if (name == "specificity") return r.specificity;
  if (name == "recall") return r.recall;
  if (name == "g_mean") return r.g_mean;
  if (name == "iba") return r.iba;
  throw ConfigError("unknown metric '" + name + "'");
}

std::vector<double> CvRun::metric(const std::string& model, const std::string& name) const {
  auto it = fold_reports.find(model);
  if (it == fold_reports.end()) throw std::invalid_argument("no cross-validation results for '" + model + "'");
  std::vector<double> out;
  for (const auto& r : it->second) out.push_back(report_metric(r, name));
  return out;
}

CvRun cross_validate(const std::vector<NamedSpec>& models, const EncodedMatrix& data, int folds,
                     const std::optional<SmoteOptions>& resampler, std::uint64_t seed) {
  if (models.empty()) throw ConfigError("cross_validate: no models");
  CvRun run;
  run.resampler = resampler;
  run.fold_assignment = stratified_fold_assignment(data.target, folds, seed);
  const auto k = static_cast<std::size_t>(folds);
  std::vector<EncodedMatrix> train(k), plain_train(k), valid(k);
  run.validation_row_ids.resize(k);
  run.training_row_ids.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < data.rows(); ++i) (static_cast<std::size_t>(run.fold_assignment[i]) == f ? va : tr).push_back(i);
    plain_train[f] = take_rows(data, tr);
    valid[f] = take_rows(data, va);
    train[f] = resampler ? smote(plain_train[f], *resampler, derive_seed(seed, Stream::smote, f)) : plain_train[f];
    run.validation_row_ids[f] = valid[f].row_ids;
    run.training_row_ids[f] = train[f].row_ids;
  }

  const std::size_t m = models.size();
  std::vector<EvaluationReport> reports(m * k);
  std::vector<std::exception_ptr> errors(m * k);
  parallel_for(m * k, [&](std::size_t job) {
    const std::size_t c = job / k;
    const std::size_t f = job % k;
    try {
      std::vector<double> p;
      if (const auto* spec = std::get_if<ModelSpec>(&models[c].spec)) {
        p = predict_proba(fit_model(*spec, train[f]), valid[f]);
      } else {
        StackingSpec stacking = std::get<StackingSpec>(models[c].spec);
        if (resampler && !stacking.resampler) stacking.resampler = resampler;
        p = stack_predict_proba(stack_fit(stacking, plain_train[f]), valid[f]);
      }
      reports[job] = evaluate(p, valid[f].target);
    } catch (...) {
      errors[job] = std::current_exception();
    }
  });
  for (std::size_t job = 0; job < errors.size(); ++job) {
    if (errors[job]) std::rethrow_exception(errors[job]);
  }
  for (std::size_t c = 0; c < m; ++c) {
    auto& list = run.fold_reports[models[c].name];
    list.assign(reports.begin() + static_cast<std::ptrdiff_t>(c * k), reports.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
  }
  return run;
}

CvRun cross_validate(const AnySpec& spec, const EncodedMatrix& data, int folds,
                     const std::optional<SmoteOptions>& resampler, std::uint64_t seed) {
  const std::string name = std::holds_alternative<ModelSpec>(spec) ? to_string(std::get<ModelSpec>(spec).algorithm)
                                                                   : std::string("stacked");
  return cross_validate(std::vector<NamedSpec>{{name, spec}}, data, folds, resampler, seed);
}

}  // namespace imbalkit
