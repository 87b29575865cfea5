#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ddcqa/error.hpp"
#include "ddcqa/opf.hpp"
#include "ddcqa/sampler.hpp"
#include "ddcqa/surrogate.hpp"

namespace ddcqa {

/// Bad invocation: unknown key, out-of-range value, missing input file.
class UsageError : public Error {
public:
  using Error::Error;
};

/// Forward: p, q per node and pij, qij per branch-phase. All adds the
/// to-end flows.
enum class TargetSet { Forward, All };

struct RunConfig {
  std::filesystem::path case_path;
  std::filesystem::path out = "out";
  std::filesystem::path dataset;  // defaults to <out>/dataset.csv
  std::uint64_t seed = 1;         // sampling, split and bootstrap streams
  int workers = 1;

  SamplingOptions sampling;
  double split_fraction = 0.5;

  Method method = Method::GB;
  int T = 200;
  int BT = 50;
  int bootstrap_size = 0;
  double lambda = 1e-4;
  bool lambda_relative = true;
  FeaturePattern pattern = FeaturePattern::AdmittanceSparse;
  BetaMode beta_mode = BetaMode::Search;
  double beta = 0.1;
  TargetSet targets = TargetSet::Forward;
  bool enforce_min_samples = true;

  std::vector<Family> tune_families{Family::P, Family::Q, Family::Pij, Family::Qij};
  int tune_steps = 0;  // 0: T for gb, BT for bag

  OpfMode opf_mode = OpfMode::Transmission;
  double box_margin = 0.1;  // negative disables the voltage box
  double v_min_default = 0.9;
  bool oracle = true;
  int oracle_points = 11;
  std::vector<int> oracle_free;  // 0-based source indices
  bool oracle_voltage = false;
  bool oracle_refine = true;

  std::filesystem::path dataset_path() const { return dataset.empty() ? out / "dataset.csv" : dataset; }
  /// Throws UsageError on the first invalid field.
  void validate() const;
};

/// Applies `key = value` to `cfg`; throws UsageError for unknown keys and
/// unparsable values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` lines; `#` starts a comment. Relative case and dataset
/// paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig read_config(const std::filesystem::path& path);

/// Every key in sorted order; parsing the result gives back `cfg`.
std::string render_config(const RunConfig& cfg);
std::map<std::string, std::string> config_entries(const RunConfig& cfg);

}  // namespace ddcqa
