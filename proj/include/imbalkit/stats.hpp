#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imbalkit/metrics.hpp"
#include "imbalkit/stacking.hpp"
#include "imbalkit/tabular.hpp"

namespace imbalkit {

// ---------------------------------------------------------------------------
// Categorical association

struct ContingencyTable {
  Eigen::MatrixXd counts;
  std::vector<double> row_labels;  // distinct codes of the first column
  std::vector<double> col_labels;

  double total() const { return counts.sum(); }
};

/// Cross-tabulates two equal-length code columns; each distinct value is a category.
ContingencyTable contingency(std::span<const double> a, std::span<const double> b);

struct ChiSquare {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Pearson chi-square. `yates` applies the continuity correction to 2x2 tables.
ChiSquare chi_square(const ContingencyTable& table, bool yates = false);

struct AssociationResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
  double alpha = 0.10;
  bool significant = false;  // p < alpha
  std::optional<double> cramers_v;
};

AssociationResult chi_square_association(std::span<const double> feature, std::span<const int> target,
                                         double alpha = 0.10, bool yates = false);

/// sqrt(chi2 / (n (min(r, c) - 1))) in [0, 1]; 0 with a warning when either
/// column has a single category.
double cramers_v(std::span<const double> a, std::span<const double> b);
/// Pairwise matrix over the columns of `data`.
Eigen::MatrixXd cramers_v_matrix(const Matrix& data);

// ---------------------------------------------------------------------------
// Psychometrics

struct ReliabilityResult {
  double alpha = 0.0;
  int k = 0;
  std::vector<double> item_variances;
  double total_variance = 0.0;
};

/// Items are the columns of an n x k score matrix; unbiased variances.
ReliabilityResult cronbach_alpha(const Matrix& items);

/// Pearson correlation matrix of the columns; DataError on constant columns.
Eigen::MatrixXd correlation_matrix(const Matrix& data);

/// Kaiser-Meyer-Olkin measure from a correlation matrix. NumericError when singular.
double kmo(const Eigen::MatrixXd& R);
inline bool kmo_adequate(double value) { return value >= 0.5; }

struct BartlettResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

BartlettResult bartlett_sphericity(const Eigen::MatrixXd& R, std::size_t n);

struct FactorModel {
  Eigen::MatrixXd loadings;            // p x k, rotated
  Eigen::MatrixXd unrotated_loadings;  // p x k
  Eigen::MatrixXd rotation;            // k x k orthogonal: loadings = unrotated * rotation
  std::vector<double> eigenvalues;     // all p, descending
  std::vector<double> communalities;
  std::vector<double> criterion_history;  // varimax criterion after each sweep
  double kmo = 0.0;
  BartlettResult bartlett;
};

/// Principal-component extraction on the correlation matrix followed by
/// varimax with Kaiser normalization. Factors are ordered by explained
/// variance and signed so that their loading sum is positive.
FactorModel efa_varimax(const Matrix& data, int n_factors);

/// Varimax on an arbitrary loading matrix; returns the rotation matrix.
Eigen::MatrixXd varimax_rotation(const Eigen::MatrixXd& loadings, std::vector<double>* criterion_history = nullptr,
                                 double tol = 1e-8, int max_sweeps = 1000);

// ---------------------------------------------------------------------------
// Model comparison

struct PairedTestResult {
  double t = 0.0;
  int df = 0;
  double p_value = 1.0;
  double cohens_d = 0.0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
};

/// Paired t-test on a - b. NumericError "degenerate differences" when the
/// differences have zero variance (relative tolerance 1e-12).
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double bonferroni_adjust(double alpha, int comparisons);

using AnySpec = std::variant<ModelSpec, StackingSpec>;

struct NamedSpec {
  std::string name;
  AnySpec spec;
};

struct CvRun {
  std::map<std::string, std::vector<EvaluationReport>> fold_reports;
  std::vector<int> fold_assignment;  // fold of each input row
  std::optional<SmoteOptions> resampler;
  // Per fold: row ids of the validation partition and of the (resampled) training partition.
  std::vector<std::vector<std::int64_t>> validation_row_ids;
  std::vector<std::vector<std::int64_t>> training_row_ids;

  /// Metric value per fold for one model (accuracy, auc, g_mean, ...).
  std::vector<double> metric(const std::string& model, const std::string& name) const;
};

/// Stratified k-fold evaluation of several models on shared folds. SMOTE, when
/// given, touches training partitions only; stacked models apply it inside
/// their own out-of-fold partitions.
CvRun cross_validate(const std::vector<NamedSpec>& models, const EncodedMatrix& data, int folds = 10,
                     const std::optional<SmoteOptions>& resampler = std::nullopt, std::uint64_t seed = 0);

CvRun cross_validate(const AnySpec& spec, const EncodedMatrix& data, int folds = 10,
                     const std::optional<SmoteOptions>& resampler = std::nullopt, std::uint64_t seed = 0);

double report_metric(const EvaluationReport& report, const std::string& name);

}  // namespace imbalkit
