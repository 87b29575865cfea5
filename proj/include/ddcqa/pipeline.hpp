#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ddcqa/config.hpp"
#include "ddcqa/opf.hpp"

namespace ddcqa {

/// Loads `cfg.case_path`; UsageError when the file does not exist.
NetworkCase load_run_case(const RunConfig& cfg);

/// Targets trained for `cfg.targets`, in dataset order.
std::vector<QuantityId> training_targets(const NetworkCase& net, TargetSet set);

/// Every command writes `<out>/resolved-config` before its outputs.
void write_resolved_config(const RunConfig& cfg);

/// Samples, solves, and writes `<out>/dataset.csv`.
Dataset run_generate(const RunConfig& cfg, std::ostream& log);

/// Reads the dataset at `cfg.dataset_path()`, checking it against the case.
Dataset load_run_dataset(const RunConfig& cfg, const NetworkCase& net);

struct FamilyScore {
  Family family = Family::P;
  double test = 0.0;   // mean per-target RMSE, per unit
  double train = 0.0;
};

struct TrainReport {
  std::vector<EnsembleModel> models;
  std::vector<FamilyScore> scores;  // families with at least one target
};

/// Fits every target and writes `models/*.json` and `tables/rmse.{csv,md}`
/// (values in units of 1e-5).
TrainReport run_train(const RunConfig& cfg, std::ostream& log);

/// Writes `curves/<method>_<family>.csv` for each configured family.
void run_tune(const RunConfig& cfg, std::ostream& log);

struct OpfReport {
  OpfSolution ddcqa;
  std::optional<OracleResult> oracle;
  std::optional<double> gap;  // percent, when both are optimal
  std::string oracle_error;   // why the oracle produced nothing
};

/// Solves the surrogate OPF from `models/`, runs the oracle when enabled, and
/// writes `solutions/*.json`, `tables/opf.{csv,md}` and the runtimes to
/// `tables/opf_runtime.{csv,md}`.
OpfReport run_opf(const RunConfig& cfg, std::ostream& log);

/// Collects `tables/*.md` into `<out>/report.md`.
void run_report(const RunConfig& cfg, std::ostream& log);

/// Table text helpers shared by the commands.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace ddcqa
