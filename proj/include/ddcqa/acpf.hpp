#pragma once

#include <compare>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ddcqa/netmodel.hpp"

namespace ddcqa {

/// Rectangular voltage components, phase-major: all a-phase buses as
/// [e_1, f_1, ..., e_n, f_n], then b, then c.
struct VoltageState {
  int bus_count = 0;
  int phase_count = 1;
  Eigen::VectorXd x;

  /// Magnitudes at setpoints (1.0 for PQ buses), nominal phase angles.
  static VoltageState flat(const NetworkCase& net);

  int dim() const { return static_cast<int>(x.size()); }
  int e_index(int bus, int phase) const { return 2 * (phase * bus_count + bus); }
  int f_index(int bus, int phase) const { return e_index(bus, phase) + 1; }
  std::complex<double> phasor(int bus, int phase) const {
    return {x[e_index(bus, phase)], x[f_index(bus, phase)]};
  }
  Eigen::VectorXcd phasors() const;
};

enum class QuantityKind { P, Q, Pij, Qij, Pji, Qji };

/// One dependent quantity: a bus injection or a directed branch flow, per phase.
struct QuantityId {
  QuantityKind kind = QuantityKind::P;
  int element = 0;  // bus or branch position
  int phase = 0;

  bool is_injection() const { return kind == QuantityKind::P || kind == QuantityKind::Q; }
  bool is_active() const { return kind == QuantityKind::P || kind == QuantityKind::Pij || kind == QuantityKind::Pji; }
  /// "p_3", "qij_7", or with a phase suffix for three-phase cases: "p_3b".
  std::string name(int phase_count) const;
  static QuantityId parse(const std::string& name);

  auto operator<=>(const QuantityId&) const = default;
};

std::string kind_prefix(QuantityKind kind);

struct Injections {
  Eigen::VectorXd p;  // indexed by node = phase * bus_count + bus
  Eigen::VectorXd q;
};

/// Per-phase flows at both ends of one branch.
struct BranchFlows {
  Eigen::VectorXd p_from;
  Eigen::VectorXd q_from;
  Eigen::VectorXd p_to;
  Eigen::VectorXd q_to;
};

Injections eval_injections(const VoltageState& state, const AdmittanceMatrix& y);
BranchFlows eval_line_flows(const VoltageState& state, const AdmittanceMatrix& y, int branch);
double eval_quantity(const VoltageState& state, const AdmittanceMatrix& y, const QuantityId& id);

/// Quadratic form x_local' M x_local over a subset of the voltage vector.
struct LocalQuadratic {
  std::vector<int> vars;  // global indices into the voltage vector, ascending
  Eigen::MatrixXd m;      // symmetric
  /// Local index pairs (a <= b) whose coupling is structurally present in the
  /// admittance pattern, whether or not the numeric coefficient vanishes.
  std::vector<std::pair<int, int>> structure;

  double eval(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense(int dim) const;
};

/// Exact symmetric matrix of a quantity: value = X' M X.
LocalQuadratic injection_matrix(const QuantityId& id, const AdmittanceMatrix& y);

/// Per-node specified injections for a power-flow solve.
struct LoadProfile {
  Eigen::VectorXd p;  // node-indexed loads, per unit
  Eigen::VectorXd q;

  static LoadProfile base(const NetworkCase& net);
};

struct PowerFlowOptions {
  double tol = 1e-8;
  int max_iter = 50;
  bool enforce_q_limits = false;
  /// One extra Newton step after convergence drives the residual to
  /// round-off, which keeps repeated solves reproducible.
  bool polish = true;
  std::optional<VoltageState> initial;
};

struct PowerFlowResult {
  VoltageState state;
  int iterations = 0;
  double mismatch = 0.0;
};

/// Rectangular-coordinate Newton-Raphson. Generator outputs come from
/// `net.sources[*].p_set` (and `q_set` at PQ buses); the slack absorbs the
/// imbalance. Throws ConvergenceError or NumericError (singular Jacobian).
PowerFlowResult newton_raphson_pf(const NetworkCase& net, const AdmittanceMatrix& y, const LoadProfile& loads,
                                  const PowerFlowOptions& opts = {});

/// Infinity norm of the power-flow equations at `state` (PQ: P and Q; PV: P
/// and |V|^2; the slack is excluded). Computed from eval_injections.
double pf_mismatch(const NetworkCase& net, const AdmittanceMatrix& y, const LoadProfile& loads,
                   const VoltageState& state);

/// Scheduled generation per node from source setpoints.
Eigen::VectorXd scheduled_generation(const NetworkCase& net, bool reactive);

}  // namespace ddcqa
