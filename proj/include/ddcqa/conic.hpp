#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ddcqa/surrogate.hpp"

namespace ddcqa {

/// sum(coef * x[var]) + constant.
struct LinearExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double k) : constant(k) {}
  LinearExpr& add(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
  double eval(const Eigen::VectorXd& x) const;
  bool operator==(const LinearExpr&) const = default;
};

enum class ConeType {
  NonNeg,      // every row >= 0
  SOC,         // row0 >= ||rows 1..||
  RotatedSOC,  // 2 row0 row1 >= ||rows 2..||^2, row0, row1 >= 0
};

struct ConeBlock {
  ConeType type = ConeType::NonNeg;
  std::vector<LinearExpr> rows;
  std::string tag;  // which constraint family produced the block
  bool operator==(const ConeBlock&) const = default;
};

/// minimize objective subject to equalities == 0 and each block's rows in its
/// cone.
struct ConicProblem {
  std::vector<std::string> var_names;
  LinearExpr objective;
  std::vector<LinearExpr> equalities;
  std::vector<ConeBlock> cones;

  int var_count() const { return static_cast<int>(var_names.size()); }
  int add_var(std::string name) {
    var_names.push_back(std::move(name));
    return var_count() - 1;
  }
  /// Throws ValidationError on out-of-range variables, rotated blocks with
  /// fewer than 3 rows, empty blocks, or untagged blocks.
  void validate() const;
  bool operator==(const ConicProblem&) const = default;
};

/// Encodes X' A X + B X + c <= bound as a rotated cone over F' X with
/// A = F F' (eigenvalues below 1e-12 dropped); a zero A gives one linear row.
/// `var_of[k]` is the problem variable holding q.vars[k].
ConeBlock quad_to_soc(const ConvexQuadratic& q, const LinearExpr& bound, const std::vector<int>& var_of,
                      std::string tag);

/// True when every row of the block lies in its cone, with slack `tol`.
bool cone_contains(const ConeBlock& block, const Eigen::VectorXd& x, double tol = 0.0);

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter, NumericalFailure };
std::string status_name(SolveStatus s);

struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double max() const { return std::max(primal, std::max(dual, gap)); }
};

struct IterationRecord {
  double pcost = 0.0;
  double dcost = 0.0;
  double gap = 0.0;  // s'z / tau^2 at the iterate
  double pres = 0.0;
  double dres = 0.0;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Eigen::VectorXd x;  // primal variables
  Eigen::VectorXd y;  // one multiplier per equality
  Eigen::VectorXd z;  // one multiplier per cone row, block order
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  std::vector<IterationRecord> history;
};

/// Residuals of (x, y, z) recomputed from the problem data alone:
/// primal: equality residual and cone violation of the rows at x;
/// dual: stationarity residual and cone violation of z;
/// gap: |primal objective - dual objective|; each relative to 1 + data norms.
KktResiduals kkt_residuals(const ConicProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& z);
KktResiduals kkt_residuals(const ConicProblem& p, const ConicSolution& s);

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

class ConicBackend {
public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual ConicSolution solve(const ConicProblem& p, const SolverOptions& opts) const = 0;
};

/// Dense primal-dual interior-point method on the homogeneous self-dual
/// embedding with Nesterov-Todd scaling and Mehrotra correction.
class EmbeddedIpm : public ConicBackend {
public:
  std::string name() const override { return "embedded-ipm"; }
  ConicSolution solve(const ConicProblem& p, const SolverOptions& opts) const override;
};

ConicSolution solve_ipm(const ConicProblem& p, const SolverOptions& opts = {});

/// Plain-text exchange format; numbers carry 17 significant digits.
std::string write_conic_text(const ConicProblem& p);
ConicProblem parse_conic_text(const std::string& text);

}  // namespace ddcqa
