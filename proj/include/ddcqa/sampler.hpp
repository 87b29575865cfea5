#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ddcqa/acpf.hpp"
#include "ddcqa/netmodel.hpp"

namespace ddcqa {

enum class MultiplierMode { PerBus, Global };

struct SamplingOptions {
  int count = 100;
  double lo = 0.6;
  double hi = 1.1;
  std::uint64_t seed = 1;
  MultiplierMode mode = MultiplierMode::PerBus;
  /// Multiplier range on non-slack active setpoints, clipped to [p_min, p_max].
  /// The default [1, 1] keeps the base dispatch.
  double gen_lo = 1.0;
  double gen_hi = 1.0;
  /// Multiplier range on PV and slack voltage setpoints.
  double vset_lo = 1.0;
  double vset_hi = 1.0;

  bool randomizes_dispatch() const { return gen_lo != 1.0 || gen_hi != 1.0; }
  bool randomizes_voltage() const { return vset_lo != 1.0 || vset_hi != 1.0; }
  /// Throws ValidationError on an empty or non-positive range, or count < 1.
  void validate() const;
};

struct Scenario {
  int id = 0;
  std::vector<double> load_mult;  // one per bus, or a single entry in global mode
  std::vector<double> gen_mult;   // one per source when dispatch is randomized
  std::vector<double> vset_mult;  // one per bus when setpoints are randomized
};

/// Each scenario draws from its own stream keyed by (seed, id), so any subset
/// can be regenerated independently.
std::vector<Scenario> sample_load_scenarios(const NetworkCase& net, const SamplingOptions& opts);

/// Loads of a scenario on `net`'s base profile.
LoadProfile scenario_loads(const NetworkCase& net, const Scenario& sc);
/// Copy of `net` with the scenario's dispatch and voltage setpoints applied.
NetworkCase scenario_case(const NetworkCase& net, const Scenario& sc);

/// Target columns in dataset order: p, q per node, then pij, qij, pji, qji per
/// branch-phase.
std::vector<QuantityId> dataset_targets(const NetworkCase& net);

struct Dataset {
  std::string case_fingerprint;
  int bus_count = 0;
  int phase_count = 1;
  int branch_count = 0;
  std::uint64_t seed = 0;
  double lo = 0.6;
  double hi = 1.1;
  MultiplierMode mode = MultiplierMode::PerBus;
  double gen_lo = 1.0;
  double gen_hi = 1.0;
  double vset_lo = 1.0;
  double vset_hi = 1.0;
  double pf_tol = 1e-8;
  double max_residual = 0.0;
  int attempted = 0;
  int dropped = 0;

  std::vector<int> ids;
  Eigen::MatrixXd load_mult;  // rows are samples
  Eigen::MatrixXd gen_mult;   // zero columns unless dispatch is randomized
  Eigen::MatrixXd vset_mult;  // zero columns unless setpoints are randomized
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;  // columns follow `targets`
  std::vector<QuantityId> targets;

  int size() const { return static_cast<int>(ids.size()); }
  /// Column of `id` in `y`; throws ValidationError when absent.
  int target_column(const QuantityId& id) const;
  /// Rows `rows` in the given order, metadata copied.
  Dataset subset(const std::vector<int>& rows) const;
  bool operator==(const Dataset&) const = default;
};

struct GenerateOptions {
  PowerFlowOptions pf;
  int workers = 1;
};

/// Solves every scenario; warm starts from the base-case solution. Diverged
/// scenarios are dropped and counted. Throws Error when fewer than half
/// converge.
Dataset generate_dataset(const NetworkCase& net, const std::vector<Scenario>& scenarios, const SamplingOptions& opts,
                         const GenerateOptions& gen = {});

/// Minimum training size before fitting: twice the bus count for
/// single-phase cases, six times for three-phase ones.
int minimum_samples(int bus_count, int phase_count);

/// Deterministic disjoint split; each part keeps the original row order.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction, std::uint64_t seed);

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string render_dataset(const Dataset& ds);
/// When `expected` is given and its fingerprint differs, a warning is appended.
Dataset read_dataset(const std::filesystem::path& path, const NetworkCase* expected = nullptr,
                     std::vector<std::string>* warnings = nullptr);
Dataset parse_dataset(const std::string& text, const NetworkCase* expected = nullptr,
                      std::vector<std::string>* warnings = nullptr);

}  // namespace ddcqa
