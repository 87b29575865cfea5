#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ddcqa/acpf.hpp"
#include "ddcqa/sampler.hpp"

namespace ddcqa {

/// q(x) = x_v' A x_v + B' x_v + c, where x_v = x[vars].
struct ConvexQuadratic {
  QuantityId target;
  std::vector<int> vars;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double c = 0.0;

  /// `x` is the full voltage vector.
  double eval(const Eigen::VectorXd& x) const;
  /// One value per row of `xs` (full voltage vectors as rows).
  Eigen::VectorXd eval_rows(const Eigen::MatrixXd& xs) const;
  double min_eigenvalue() const;
  bool operator==(const ConvexQuadratic&) const = default;
};

enum class FeaturePattern { Dense, AdmittanceSparse };

/// Monomials kept for one target: all variables linearly, and the listed
/// local index pairs (a <= b) quadratically.
struct FeatureSpec {
  std::vector<int> vars;
  std::vector<std::pair<int, int>> pairs;

  int feature_count() const { return 1 + static_cast<int>(vars.size() + pairs.size()); }
};

FeatureSpec dense_spec(std::vector<int> vars);
/// Dense over the target's structural variables, or restricted to the
/// structurally nonzero pairs of its exact matrix.
FeatureSpec target_spec(const QuantityId& target, const AdmittanceMatrix& y, FeaturePattern pattern);

/// [1, x_1..x_d, x_a x_b for each pair]; `x` has one entry per spec variable.
Eigen::VectorXd quadratic_features(const Eigen::VectorXd& x, const FeatureSpec& spec);

/// Frobenius-nearest PSD matrix by eigenvalue clipping. Rejects inputs whose
/// skew part exceeds 1e-9.
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& m);

/// 0.5 (y - yhat)^2.
double loss(double y, double yhat);

struct LearnerOptions {
  FeaturePattern injection_pattern = FeaturePattern::AdmittanceSparse;
  FeaturePattern flow_pattern = FeaturePattern::Dense;
  /// Ridge weight. When `ridge_relative`, lambda = ridge * trace(Gram) / features.
  double ridge = 1e-4;
  bool ridge_relative = true;
  /// Project each learner's Hessian; otherwise only the collapsed model of a
  /// boosted ensemble is projected, then its linear part refit.
  bool project_each = true;
  /// Refuse training sets smaller than minimum_samples().
  bool enforce_min_samples = true;

  FeaturePattern pattern_for(const QuantityId& id) const {
    return id.is_injection() ? injection_pattern : flow_pattern;
  }
};

/// Ridge fit on fixed samples, reused across responses. Variables are centered
/// and scaled per bus (e and f share a scale) before fitting; constant columns
/// are dropped and come back as zero coefficients.
class QuadraticDesign {
public:
  /// `xs` holds the spec variables as columns, one sample per row.
  QuadraticDesign(const Eigen::MatrixXd& xs, const FeatureSpec& spec, const LearnerOptions& opts);

  /// Ridge fit, projection of the Hessian (when `project`), and a plain
  /// least-squares refit of the linear part with the Hessian frozen.
  ConvexQuadratic fit(const Eigen::VectorXd& response, bool project = true) const;
  /// Least-squares linear part and constant for a fixed Hessian.
  void refit_linear(ConvexQuadratic& q, const Eigen::VectorXd& response) const;

  double lambda() const { return lambda_; }
  const FeatureSpec& spec() const { return spec_; }

private:
  FeatureSpec spec_;
  Eigen::MatrixXd xs_;
  std::vector<int> kept_;       // local variable indices with nonconstant columns
  std::vector<int> kept_pairs_; // indices into spec_.pairs over kept variables
  Eigen::VectorXd mean_;        // over kept variables
  Eigen::VectorXd scale_;
  double lambda_ = 0.0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> ridge_qr_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> linear_qr_;
  Eigen::Index rows_ = 0;
};

/// Spec variables of `ds.x`, one sample per row.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, const std::vector<int>& vars);

ConvexQuadratic fit_base_learner(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                                 const LearnerOptions& opts = {});

enum class Method { PR, GB, BAG };
std::string method_name(Method m);
Method parse_method(const std::string& s);

enum class BetaMode { Search, Constant };

struct EnsembleModel {
  Method kind = Method::PR;
  QuantityId target;
  double gamma = 0.0;
  std::vector<ConvexQuadratic> members;
  std::vector<double> weights;
  int requested = 1;      // T or BT
  int bootstrap_size = 0; // M'
  int stopped_at = 0;     // learners tried before an early stop, 0 when none
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string train_fingerprint;
  ConvexQuadratic collapsed;

  /// Member-wise evaluation, independent of `collapsed`.
  double eval(const Eigen::VectorXd& x) const;
};

struct BoostOptions {
  int learners = 100;
  BetaMode beta_mode = BetaMode::Search;
  double beta = 0.1;  // used in constant mode
  int stall_limit = 5;
};

struct BagOptions {
  int bootstraps = 50;
  int bootstrap_size = 0;  // 0 means the training size
  std::uint64_t seed = 1;
  /// Use rows 0..M'-1 in order instead of drawing; for checking the
  /// degenerate case against a single learner.
  bool identity_resample = false;
};

/// Per-learner training and test predictions, for sweeps.
struct FitTrace {
  std::vector<Eigen::VectorXd> train;  // prediction after each step
  std::vector<Eigen::VectorXd> test;
};

EnsembleModel pr_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                     const LearnerOptions& opts = {});
EnsembleModel gb_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                     const BoostOptions& boost, const LearnerOptions& opts = {}, const Dataset* test = nullptr,
                     FitTrace* trace = nullptr);
/// For bagging, `trace` receives each single learner's predictions, not the
/// running average.
EnsembleModel bagging_fit(const Dataset& train, const QuantityId& target, const AdmittanceMatrix& y,
                          const BagOptions& bag, const LearnerOptions& opts = {}, const Dataset* test = nullptr,
                          FitTrace* trace = nullptr);

/// Weighted sum of members plus gamma.
ConvexQuadratic collapse(const EnsembleModel& model);

enum class Family { P, Q, Pij, Qij };
std::string family_name(Family f);
bool in_family(const QuantityId& id, Family f);

double target_rmse(const ConvexQuadratic& q, const Dataset& ds);
/// Mean of per-target RMSE over the models of one family.
double family_rmse(const std::vector<ConvexQuadratic>& models, const Dataset& ds, Family f);

struct SweepPoint {
  int step = 0;
  double train = 0.0;
  double test = 0.0;
  double single_train = 0.0;  // bagging only
  double single_test = 0.0;
};

/// Family RMSE curves for 1..learners (GB) or 1..bootstraps (BAG).
std::vector<SweepPoint> tune_sweep(const Dataset& train, const Dataset& test, Family family,
                                   const std::vector<QuantityId>& targets, const AdmittanceMatrix& y, Method method,
                                   const BoostOptions& boost, const BagOptions& bag, const LearnerOptions& opts = {},
                                   int workers = 1);

/// JSON model file; `with_members` adds the individual learners.
std::string render_model(const EnsembleModel& m, int phase_count, bool with_members);
EnsembleModel parse_model(const std::string& text);

}  // namespace ddcqa
