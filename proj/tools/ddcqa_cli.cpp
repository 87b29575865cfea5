// Command-line front end: ddcqa <generate|train|tune|opf|report> [flags]

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddcqa/config.hpp"
#include "ddcqa/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct Flags {
  std::string config;
  std::string case_path;
  std::string out;
  std::string method;
  std::vector<std::string> sets;
  long long seed = -1;
  int T = 0;
  int BT = 0;
  int workers = 0;
};

ddcqa::RunConfig resolve(const Flags& f) {
  ddcqa::RunConfig cfg = f.config.empty() ? ddcqa::RunConfig{} : ddcqa::read_config(f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ddcqa::UsageError("--set expects key=value, got '" + kv + "'");
    ddcqa::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.case_path.empty()) cfg.case_path = f.case_path;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.method.empty()) ddcqa::set_config_value(cfg, "train.method", f.method);
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.T > 0) cfg.T = f.T;
  if (f.BT > 0) cfg.BT = f.BT;
  if (f.workers > 0) cfg.workers = f.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex quadratic power-flow surrogates: sampling, training, and OPF"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--case", flags.case_path, "MATPOWER (.m) or JSON case file");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "seed for sampling, splitting and bootstraps")->check(CLI::NonNegativeNumber);
    sub->add_option("--method", flags.method, "pr, gb or bag");
    sub->add_option("--T", flags.T, "boosting learners")->check(CLI::PositiveNumber);
    sub->add_option("--BT", flags.BT, "bagging bootstraps")->check(CLI::PositiveNumber);
    sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", flags.sets, "override a config key, key=value (repeatable)");
  };
  auto* generate = app.add_subcommand("generate", "sample scenarios and write the dataset");
  auto* train = app.add_subcommand("train", "fit surrogates and write models and the RMSE table");
  auto* tune = app.add_subcommand("tune", "write RMSE curves over the number of learners");
  auto* opf = app.add_subcommand("opf", "solve the surrogate OPF and compare with the oracle");
  auto* report = app.add_subcommand("report", "collect tables into report.md");
  for (auto* sub : {generate, train, tune, opf, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const ddcqa::RunConfig cfg = resolve(flags);
    if (generate->parsed()) {
      ddcqa::run_generate(cfg, std::cout);
    } else if (train->parsed()) {
      ddcqa::run_train(cfg, std::cout);
    } else if (tune->parsed()) {
      ddcqa::run_tune(cfg, std::cout);
    } else if (opf->parsed()) {
      const auto r = ddcqa::run_opf(cfg, std::cout);
      if (r.ddcqa.status != ddcqa::SolveStatus::Optimal) {
        std::cerr << "error: surrogate OPF ended with status " << ddcqa::status_name(r.ddcqa.status) << "\n";
        return kSolver;
      }
      if (cfg.oracle && !r.oracle) {
        std::cerr << "error: oracle failed: " << r.oracle_error << "\n";
        return kSolver;
      }
    } else if (report->parsed()) {
      ddcqa::run_report(cfg, std::cout);
    }
  } catch (const ddcqa::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ddcqa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
