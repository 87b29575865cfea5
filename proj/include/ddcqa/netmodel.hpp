#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ddcqa {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class BusType { PQ, PV, Slack };

/// Per-phase quantities are stored as vectors of length `phase_count`; all
/// powers are per unit on the case base.
struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  std::vector<double> p_load;
  std::vector<double> q_load;
  std::vector<double> g_shunt;
  std::vector<double> b_shunt;
  double v_set = 1.0;  // magnitude setpoint for PV and slack buses
  double v_max = kUnbounded;
  double v_min = 0.0;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from = 0;  // bus positions, not ids
  int to = 0;
  /// Series impedance, phase_count x phase_count, row-major.
  std::vector<std::complex<double>> z;
  double b_charge = 0.0;  // total line charging per phase
  double rate = kUnbounded;
  double tap = 1.0;  // off-nominal ratio on the from side

  bool monitored() const { return rate < kUnbounded; }
  std::complex<double> z_at(int row, int col, int phases) const { return z[static_cast<size_t>(row * phases + col)]; }
  bool operator==(const Branch&) const = default;
};

/// Generation cost c0 + c1 p + c2 p^2 with p in per unit.
struct CostCurve {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double p) const { return c0 + (c1 + c2 * p) * p; }
  bool operator==(const CostCurve&) const = default;
};

struct Source {
  int bus = 0;  // bus position
  std::vector<int> phases;  // 0 = a, 1 = b, 2 = c
  std::vector<double> p_set;  // one entry per listed phase
  std::vector<double> q_set;
  std::vector<double> p_min;
  std::vector<double> p_max;
  std::vector<double> q_min;
  std::vector<double> q_max;
  CostCurve cost;
  std::optional<double> pf_min;

  /// Index into the per-phase vectors, or -1 when the source lacks the phase.
  int phase_slot(int phase) const;
  bool operator==(const Source&) const = default;
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  int phase_count = 1;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Source> sources;

  int bus_count() const { return static_cast<int>(buses.size()); }
  int branch_count() const { return static_cast<int>(branches.size()); }
  /// Position of the unique slack bus.
  int slack_bus() const;
  /// Position of the bus with the given id; throws ValidationError when absent.
  int bus_position(int id) const;
  /// Dimension of the rectangular voltage vector: 2 * buses * phases.
  int state_dim() const { return 2 * bus_count() * phase_count; }

  /// Throws ValidationError on the first violated invariant.
  void validate() const;

  bool operator==(const NetworkCase&) const = default;
};

/// Parses the documented subset of the MATPOWER case grammar. Loads and
/// limits are converted to per unit, gencost rows to per-unit coefficients.
/// Non-fatal observations (ignored columns) are appended to `warnings`.
NetworkCase parse_matpower_case(std::string_view text, std::vector<std::string>* warnings = nullptr);

NetworkCase parse_json_case(std::string_view text);
std::string render_json(const NetworkCase& net);

/// Dispatches on extension: `.m` is MATPOWER, anything else JSON.
NetworkCase load_case(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Three identical, uncoupled phases, each a copy of the single-phase case.
/// Throws ValidationError for a three-phase input or an off-nominal tap.
NetworkCase balanced_three_phase(const NetworkCase& net);

/// Stable 64-bit FNV-1a hash of the canonical JSON rendering, as 16 hex digits.
std::string case_fingerprint(const NetworkCase& net);
/// 64-bit FNV-1a of arbitrary bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

struct BranchAdmittance {
  int from = 0;
  int to = 0;
  Eigen::MatrixXcd ff;  // from-side current per unit from-side voltage
  Eigen::MatrixXcd ft;
  Eigen::MatrixXcd tf;
  Eigen::MatrixXcd tt;
};

/// Bus admittance matrix indexed by node = phase * bus_count + bus, which
/// matches the phase-major layout of the voltage vector.
struct AdmittanceMatrix {
  int bus_count = 0;
  int phase_count = 1;
  Eigen::MatrixXcd y;
  std::vector<BranchAdmittance> branches;

  int node(int bus, int phase) const { return phase * bus_count + bus; }
  int node_count() const { return bus_count * phase_count; }
  Eigen::MatrixXd g() const { return y.real(); }
  Eigen::MatrixXd b() const { return y.imag(); }
};

AdmittanceMatrix build_admittance(const NetworkCase& net);

/// Nominal phase angle (radians) of phase 0, 1, 2: 0, -120, +120 degrees.
double phase_angle(int phase);

}  // namespace ddcqa
