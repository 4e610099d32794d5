// Kernels, single-view SVM, the two-view SVM-2K learner and
// cross-validation.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vantage/errors.hpp"

namespace vantage {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// RBF kernel exp(-gamma |a - b|^2).
struct KernelSpec {
  double gamma = 1.0;
};

/// Rows of A against rows of B. Throws InvalidArgument on column mismatch
/// or gamma <= 0.
MatrixXd gram(const KernelSpec& spec, const MatrixXd& a, const MatrixXd& b);

/// 1 / median squared pairwise row distance (1 when that median is 0).
double median_heuristic_gamma(const MatrixXd& x);

/// Per-column z-score. Columns whose standard deviation is below 1e-12 are
/// dropped by apply().
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const MatrixXd& x);

  MatrixXd apply(const MatrixXd& x) const;
  VectorXd apply(const VectorXd& x) const;

  std::size_t input_dim() const { return mean_.size(); }
  std::size_t output_dim() const { return kept_.size(); }
  const VectorXd& mean() const { return mean_; }
  const VectorXd& scale() const { return scale_; }
  const std::vector<int>& kept() const { return kept_; }

  static Standardizer from_parts(VectorXd mean, VectorXd scale);

 private:
  VectorXd mean_;
  VectorXd scale_;
  std::vector<int> kept_;
};

/// Two-view training data: row i of `view_v` (image features) and of
/// `view_g` (geometric features) describe sample i with label y[i] = +-1.
struct Dataset {
  std::vector<std::string> ids;
  MatrixXd view_v;
  MatrixXd view_g;
  VectorXd y;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  /// Throws InvalidArgument on inconsistent sizes or labels other than +-1.
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

// ---------------------------------------------------------------------------
// Single-view soft-margin SVM

struct SvmModel {
  KernelSpec kernel;
  double c = 1.0;
  MatrixXd support;  ///< training rows with nonzero multiplier
  VectorXd coef;     ///< y_i alpha_i for each support row
  double bias = 0.0;
  /// Primal objective 1/2 |w|^2 + C sum(xi).
  double objective = 0.0;
  /// Largest KKT violation at termination.
  double kkt_violation = 0.0;
  std::size_t iterations = 0;

  double decision_value(const VectorXd& x) const;
};

/// SMO with second-order working-set selection on already standardized
/// rows. Throws InvalidArgument when only one class is present.
SvmModel train_svm(const MatrixXd& x, const VectorXd& y, double c, const KernelSpec& spec,
                   double tol = 1e-6);

// ---------------------------------------------------------------------------
// SVM-2K

struct Svm2kParams {
  double epsilon = 0.01;
  double c_v = 4.0;
  double c_g = 4.0;
  double d = 0.1;
  /// Median heuristic on the standardized view when unset.
  std::optional<double> gamma_v;
  std::optional<double> gamma_g;
  /// Stopping threshold on the largest first-order violation.
  double tol = 1e-7;
  /// Relative primal-dual gap accepted at termination.
  double gap_tol = 1e-3;
  /// 0 picks a size-dependent default.
  std::size_t max_iterations = 0;
};

struct Svm2kDiagnostics {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double max_violation = 0.0;
  double slack_v = 0.0;    ///< sum xi_V
  double slack_g = 0.0;    ///< sum xi_G
  double slack_eta = 0.0;  ///< sum eta
  /// max_i (|f_V - f_G| - eta_i - epsilon), <= 0 when feasible
  double coupling_violation = 0.0;
  std::size_t iterations = 0;
};

struct ViewOutputs {
  double f_v = 0.0;
  double f_g = 0.0;
  double f() const { return 0.5 * (f_v + f_g); }
};

struct Svm2kModel {
  Svm2kParams params;
  Standardizer standardizer_v;
  Standardizer standardizer_g;
  KernelSpec kernel_v;
  KernelSpec kernel_g;
  MatrixXd support_v;  ///< standardized rows
  MatrixXd support_g;
  VectorXd coef_v;  ///< expansion weights of w_V over support_v
  VectorXd coef_g;
  double bias_v = 0.0;
  double bias_g = 0.0;
  Svm2kDiagnostics diagnostics;

  /// Raw (unstandardized) feature rows in.
  ViewOutputs outputs(const VectorXd& raw_v, const VectorXd& raw_g) const;
  /// Outputs for already standardized rows.
  ViewOutputs outputs_standardized(const VectorXd& v, const VectorXd& g) const;
};

/// Carries the last (feasible) iterate when training stops early.
class Svm2kConvergenceError : public ConvergenceError {
 public:
  Svm2kConvergenceError(const std::string& what, Svm2kModel model)
      : ConvergenceError(what), model_(std::move(model)) {}
  const Svm2kModel& model() const noexcept { return model_; }
  double relative_gap() const noexcept { return model_.diagnostics.relative_gap; }

 private:
  Svm2kModel model_;
};

/// Solves the SVM-2K dual by decomposition; biases minimize the primal
/// for the resulting weight vectors. Throws Svm2kConvergenceError when the
/// iteration budget runs out or the final gap exceeds params.gap_tol.
Svm2kModel train_svm2k(const Dataset& data, const Svm2kParams& params = {});

/// Same on already standardized views, with explicit kernels.
Svm2kModel train_svm2k_standardized(const MatrixXd& xv, const MatrixXd& xg,
                                    const VectorXd& y, const Svm2kParams& params,
                                    const KernelSpec& kv, const KernelSpec& kg);

/// Primal objective of SVM-2K for given expansion weights and biases on the
/// training data (slacks taken at their minimum).
double svm2k_primal_objective(const MatrixXd& kv, const MatrixXd& kg, const VectorXd& y,
                              const VectorXd& coef_v, const VectorXd& coef_g,
                              double bias_v, double bias_g, const Svm2kParams& params);

/// sign(f) with f = 0 mapped to +1.
int decide(double f);
int decide(const Svm2kModel& model, const VectorXd& raw_v, const VectorXd& raw_g);
/// 1 / (1 + exp(-f))
double score(double f);
double score(const Svm2kModel& model, const VectorXd& raw_v, const VectorXd& raw_g);

void save_model(const Svm2kModel& model, const std::filesystem::path& path);
Svm2kModel load_model(const std::filesystem::path& path);
std::string model_to_json(const Svm2kModel& model);
Svm2kModel model_from_json(const std::string& text, const std::string& source = "<string>");

// ---------------------------------------------------------------------------
// Cross-validation

enum class Learner { Svm2k, ImageOnly, GeometryOnly };

struct CvReport {
  std::vector<double> fold_errors;  ///< NaN for skipped folds
  std::vector<bool> skipped;
  double mean_error = 0.0;          ///< over folds that ran
  std::vector<std::string> warnings;
};

/// Stratified folds assigned from a seeded shuffle of each class.
std::vector<int> stratified_folds(const VectorXd& y, int folds, std::uint64_t seed);

/// Standardization and kernel widths are fitted on each training fold.
CvReport crossvalidate(const Dataset& data, int folds, const Svm2kParams& params,
                       std::uint64_t seed, Learner learner = Learner::Svm2k);

}  // namespace vantage
