#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddcqa/acpf.hpp"
#include "ddcqa/conic.hpp"
#include "ddcqa/netmodel.hpp"
#include "ddcqa/surrogate.hpp"

namespace ddcqa {

enum class OpfMode {
  Transmission,  // full quadratic generation cost
  Distribution,  // linear price c1 per source
};
std::string opf_mode_name(OpfMode m);
OpfMode parse_opf_mode(const std::string& s);

struct OpfOptions {
  OpfMode mode = OpfMode::Transmission;
  /// Loads to serve; the case's base loads when empty.
  std::optional<LoadProfile> loads;
  SolverOptions solver;
  /// Bound on |V| below which the audit raises a flag; the bus minimum when
  /// finite, otherwise this value.
  double default_v_min = 0.0;
  /// Optional box on every voltage component (both empty or both sized to
  /// the state dimension). Keeps the program inside the region the
  /// surrogates were fitted on.
  Eigen::VectorXd x_lower;
  Eigen::VectorXd x_upper;
};

/// Per-component range of the voltages in `ds`, widened on each side by
/// `margin` times the range (and at least `floor`).
std::pair<Eigen::VectorXd, Eigen::VectorXd> component_bounds(const Dataset& ds, double margin, double floor = 1e-6);

/// Where each quantity lives among the conic variables.
struct OpfLayout {
  std::vector<int> x;                    // voltage component k -> variable
  std::vector<std::vector<int>> pg;      // [source][slot]
  std::vector<std::vector<int>> qg;
  std::vector<QuantityId> flows;         // monitored branch-phases, Pij kind
  std::vector<int> flow_p;               // parallel to `flows`
  std::vector<int> flow_q;
};

using ModelSet = std::map<QuantityId, ConvexQuadratic>;

struct OpfProblem {
  ConicProblem conic;
  OpfLayout layout;
  ModelSet models;  // the surrogates the rows were built from
  LoadProfile loads;
  OpfMode mode = OpfMode::Transmission;
  double default_v_min = 0.0;
  SolverOptions solver;
  std::string case_fingerprint;
};

/// Targets the OPF needs: P and Q at every node, Pij and Qij on every
/// monitored branch-phase.
std::vector<QuantityId> opf_targets(const NetworkCase& net);

/// Throws ValidationError for a missing model or a case without cost data,
/// NumericError for a model whose Hessian is not PSD.
OpfProblem build_ddcqa_opf(const NetworkCase& net, const ModelSet& models, const OpfOptions& opts = {});

/// Relaxation with the exact network: the summed active injections (the
/// losses, a PSD form) bounded by total generation minus load, plus the
/// voltage, generator, and flow-limit rows that need no surrogate. Its
/// optimum bounds the AC optimum from below.
OpfProblem build_exact_relaxation(const NetworkCase& net, const AdmittanceMatrix& y, const OpfOptions& opts = {});

/// Block counts by constraint family.
struct ConstraintCensus {
  int injection = 0;   // surrogate P and Q rows
  int voltage = 0;     // |V| <= Vmax cones
  int generator = 0;   // source box blocks (one per source-phase)
  int apparent = 0;    // |S| <= Smax cones
  int flow = 0;        // surrogate line-flow rows
  int epigraph = 0;    // quadratic cost cones
  int component = 0;   // voltage component boxes
  int power_factor = 0;
  int losses = 0;      // exact relaxation only
};
ConstraintCensus census(const OpfProblem& p);

struct OpfAudit {
  /// Node-indexed (phase-major), like the injection vectors.
  Eigen::VectorXd p_surrogate, q_surrogate;
  Eigen::VectorXd p_exact, q_exact;
  Eigen::VectorXd p_mismatch, q_mismatch;  // surrogate - exact
  Eigen::VectorXd p_balance, q_balance;    // generation - load - exact
  Eigen::VectorXd v_mag;
  double mean_abs_mismatch = 0.0;          // over P and Q entries with a model
  double max_abs_balance = 0.0;
  std::vector<int> low_voltage;            // nodes below their lower bound
  std::vector<std::string> violations;     // exact-model limit violations

  bool lower_voltage_flag() const { return !low_voltage.empty(); }
};

struct OpfSolution {
  SolveStatus status = SolveStatus::MaxIter;
  std::vector<std::vector<double>> pg;  // [source][slot], per unit
  std::vector<std::vector<double>> qg;
  Eigen::VectorXd x;                    // voltage vector
  std::vector<QuantityId> flows;
  Eigen::VectorXd flow_p, flow_q;
  double objective = 0.0;               // $/hr
  double runtime_s = 0.0;
  int iterations = 0;
  KktResiduals residuals;
  OpfAudit audit;
};

/// Solves, unmaps variables, and audits the point against the exact network.
OpfSolution solve_ddcqa_opf(const OpfProblem& problem, const NetworkCase& net, const AdmittanceMatrix& y,
                            const ConicBackend& backend = EmbeddedIpm());

/// `models` may be exact forms or surrogates; only evaluated at `sol.x`.
OpfAudit feasibility_audit(const OpfSolution& sol, const NetworkCase& net, const AdmittanceMatrix& y,
                           const ModelSet& models, const LoadProfile& loads, double default_v_min = 0.0,
                           double tol = 1e-6);

/// |ref - ov| / ref * 100, rounded to two decimals. Requires ref > 0.
double optimality_gap(double ov_ref, double ov);

/// Generation cost of a dispatch in $/hr; `linear_only` drops c0 and c2.
double dispatch_cost(const NetworkCase& net, const std::vector<std::vector<double>>& pg, bool linear_only = false);

/// Lossless merit-order dispatch of the total load within source limits.
std::vector<std::vector<double>> economic_dispatch(const NetworkCase& net, const LoadProfile& loads);

struct OracleOptions {
  int points = 11;  // grid points per free dimension
  bool refine = true;
  /// Source indices swept on the grid; the others keep their economic
  /// dispatch. Empty means every source except the slack's first.
  std::vector<int> free_sources;
  /// Adds one dimension scaling every PV and slack voltage setpoint, on top
  /// of the dispatch dimensions.
  bool sweep_voltage = false;
  double vset_lo = 0.95;
  double vset_hi = 1.05;
  /// When a grid point violates a limit, search the PV and slack setpoints
  /// for a feasible power flow before discarding it.
  bool repair_voltage = true;
  int repair_sweeps = 10;
  std::optional<LoadProfile> loads;
  int workers = 1;
  double tol = 1e-6;  // total limit violation accepted on exact quantities
  OpfMode mode = OpfMode::Transmission;
  double default_v_min = 0.0;
};

struct OracleResult {
  OpfSolution solution;
  int evaluated = 0;
  int feasible = 0;
  std::vector<int> free_sources;
};

/// Grid search over dispatch with a Newton power flow per point. Throws
/// ValidationError for more than three dispatch dimensions and Error when no grid
/// point is feasible.
OracleResult acopf_oracle(const NetworkCase& net, const OracleOptions& opts = {});

/// JSON solution file.
std::string render_solution(const OpfSolution& sol, const NetworkCase& net, const std::string& case_fingerprint);

}  // namespace ddcqa
