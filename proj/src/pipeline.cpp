#include "ddcqa/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "ddcqa/parallel.hpp"

namespace ddcqa {

namespace fs = std::filesystem;

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LearnerOptions learner_options(const RunConfig& cfg) {
  LearnerOptions lo;
  lo.injection_pattern = cfg.pattern;
  lo.ridge = cfg.lambda;
  lo.ridge_relative = cfg.lambda_relative;
  lo.enforce_min_samples = cfg.enforce_min_samples;
  return lo;
}

BoostOptions boost_options(const RunConfig& cfg) {
  BoostOptions bo;
  bo.learners = cfg.T;
  bo.beta_mode = cfg.beta_mode;
  bo.beta = cfg.beta;
  return bo;
}

BagOptions bag_options(const RunConfig& cfg) {
  BagOptions bag;
  bag.bootstraps = cfg.BT;
  bag.bootstrap_size = cfg.bootstrap_size;
  bag.seed = cfg.seed;
  return bag;
}

EnsembleModel fit_one(const RunConfig& cfg, const Dataset& train, const QuantityId& id, const AdmittanceMatrix& y) {
  switch (cfg.method) {
    case Method::PR: return pr_fit(train, id, y, learner_options(cfg));
    case Method::GB: return gb_fit(train, id, y, boost_options(cfg), learner_options(cfg));
    case Method::BAG: return bagging_fit(train, id, y, bag_options(cfg), learner_options(cfg));
  }
  throw UsageError("unknown method");
}

std::pair<Dataset, Dataset> run_split(const RunConfig& cfg, const Dataset& ds) {
  return split_train_test(ds, cfg.split_fraction, cfg.seed);
}

fs::path model_path(const RunConfig& cfg, const QuantityId& id, int phase_count) {
  return cfg.out / "models" / (id.name(phase_count) + ".json");
}

}  // namespace

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
  };
  line(header);
  out += "|";
  for (size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& r : rows) line(r);
  return out;
}

NetworkCase load_run_case(const RunConfig& cfg) {
  if (!fs::exists(cfg.case_path)) throw UsageError("case file not found: " + cfg.case_path.string());
  return load_case(cfg.case_path);
}

std::vector<QuantityId> training_targets(const NetworkCase& net, TargetSet set) {
  std::vector<QuantityId> out;
  for (const auto& id : dataset_targets(net)) {
    if (set == TargetSet::All || id.kind == QuantityKind::P || id.kind == QuantityKind::Q ||
        id.kind == QuantityKind::Pij || id.kind == QuantityKind::Qij) {
      out.push_back(id);
    }
  }
  return out;
}

void write_resolved_config(const RunConfig& cfg) { write_text(cfg.out / "resolved-config", render_config(cfg)); }

Dataset run_generate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const NetworkCase net = load_run_case(cfg);
  write_resolved_config(cfg);
  SamplingOptions so = cfg.sampling;
  so.seed = cfg.seed;
  GenerateOptions gen;
  gen.workers = cfg.workers;
  const Dataset ds = generate_dataset(net, sample_load_scenarios(net, so), so, gen);
  write_dataset(ds, cfg.dataset_path());
  log << "case " << net.name << ": " << ds.size() << " of " << ds.attempted << " scenarios converged, " << ds.dropped
      << " dropped, max residual " << general(ds.max_residual) << "\n";
  log << "wrote " << cfg.dataset_path().string() << "\n";
  return ds;
}

Dataset load_run_dataset(const RunConfig& cfg, const NetworkCase& net) {
  const fs::path path = cfg.dataset_path();
  if (!fs::exists(path)) throw UsageError("dataset not found: " + path.string());
  std::vector<std::string> warnings;
  Dataset ds = read_dataset(path, &net, &warnings);
  if (!warnings.empty()) throw ValidationError("dataset " + path.string() + ": " + warnings.front());
  return ds;
}

TrainReport run_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const NetworkCase net = load_run_case(cfg);
  const Dataset ds = load_run_dataset(cfg, net);
  write_resolved_config(cfg);
  const AdmittanceMatrix y = build_admittance(net);
  const auto [train, test] = run_split(cfg, ds);
  const auto targets = training_targets(net, cfg.targets);

  TrainReport report;
  report.models.resize(targets.size());
  parallel_for(static_cast<int>(targets.size()), cfg.workers,
               [&](int i) { report.models[static_cast<size_t>(i)] = fit_one(cfg, train, targets[static_cast<size_t>(i)], y); });

  const std::string train_fp = fnv1a_hex(render_dataset(train));
  for (auto& m : report.models) {
    m.train_fingerprint = train_fp;
    write_text(model_path(cfg, m.target, net.phase_count), render_model(m, net.phase_count, false));
  }

  std::vector<std::vector<std::string>> rows;
  for (Family f : {Family::P, Family::Q, Family::Pij, Family::Qij}) {
    std::vector<ConvexQuadratic> fam;
    for (const auto& m : report.models) {
      if (in_family(m.target, f)) fam.push_back(m.collapsed);
    }
    if (fam.empty()) continue;
    FamilyScore s{f, family_rmse(fam, test, f), family_rmse(fam, train, f)};
    report.scores.push_back(s);
    rows.push_back({family_name(f), fixed2(s.test * 1e5), fixed2(s.train * 1e5)});
  }
  const std::string method = method_name(cfg.method);
  const std::vector<std::string> header{"family", method + "_test", method + "_train"};
  write_text(cfg.out / "tables" / "rmse.csv", csv_table(header, rows));
  write_text(cfg.out / "tables" / "rmse.md", "RMSE (1e-5 per unit), " + net.name + ", " + method + ", " +
                                                  std::to_string(train.size()) + " training / " +
                                                  std::to_string(test.size()) + " test samples\n\n" +
                                                  markdown_table(header, rows));
  log << "trained " << report.models.size() << " " << method << " models on " << train.size() << " samples\n";
  for (const auto& s : report.scores) {
    log << "  " << family_name(s.family) << ": test " << fixed2(s.test * 1e5) << ", train " << fixed2(s.train * 1e5)
        << " (1e-5)\n";
  }
  return report;
}

void run_tune(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.method == Method::PR) throw UsageError("tune: method pr has no sweep; use gb or bag");
  const NetworkCase net = load_run_case(cfg);
  const Dataset ds = load_run_dataset(cfg, net);
  write_resolved_config(cfg);
  const AdmittanceMatrix y = build_admittance(net);
  const auto [train, test] = run_split(cfg, ds);
  const auto targets = training_targets(net, cfg.targets);

  BoostOptions bo = boost_options(cfg);
  BagOptions bag = bag_options(cfg);
  if (cfg.tune_steps > 0) (cfg.method == Method::GB ? bo.learners : bag.bootstraps) = cfg.tune_steps;
  const bool bagging = cfg.method == Method::BAG;

  for (Family f : cfg.tune_families) {
    const auto pts = tune_sweep(train, test, f, targets, y, cfg.method, bo, bag, learner_options(cfg), cfg.workers);
    std::vector<std::string> header{"step", "train", "test", "log_train", "log_test"};
    if (bagging) {
      header.push_back("single_train");
      header.push_back("single_test");
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : pts) {
      std::vector<std::string> r{std::to_string(p.step), general(p.train), general(p.test), general(std::log(p.train)),
                                 general(std::log(p.test))};
      if (bagging) {
        r.push_back(general(p.single_train));
        r.push_back(general(p.single_test));
      }
      rows.push_back(std::move(r));
    }
    const fs::path path = cfg.out / "curves" / (method_name(cfg.method) + "_" + family_name(f) + ".csv");
    write_text(path, csv_table(header, rows));
    log << "wrote " << path.string() << " (" << rows.size() << " points)\n";
  }
}

OpfReport run_opf(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const NetworkCase net = load_run_case(cfg);
  write_resolved_config(cfg);
  const AdmittanceMatrix y = build_admittance(net);
  const std::string fp = case_fingerprint(net);

  ModelSet models;
  for (const auto& id : opf_targets(net)) {
    const fs::path path = model_path(cfg, id, net.phase_count);
    if (!fs::exists(path)) throw UsageError("model not found: " + path.string() + " (run train first)");
    models.emplace(id, parse_model(read_text(path)).collapsed);
  }

  OpfOptions oo;
  oo.mode = cfg.opf_mode;
  oo.default_v_min = cfg.v_min_default;
  if (cfg.box_margin >= 0.0) {
    const Dataset ds = load_run_dataset(cfg, net);
    const Dataset train = run_split(cfg, ds).first;
    std::tie(oo.x_lower, oo.x_upper) = component_bounds(train, cfg.box_margin);
  }

  OpfReport report;
  const OpfProblem problem = build_ddcqa_opf(net, models, oo);
  report.ddcqa = solve_ddcqa_opf(problem, net, y);
  write_text(cfg.out / "solutions" / "ddcqa.json", render_solution(report.ddcqa, net, fp));
  log << "ddcqa opf: " << status_name(report.ddcqa.status) << ", objective " << fixed2(report.ddcqa.objective)
      << ", mean injection mismatch " << general(report.ddcqa.audit.mean_abs_mismatch) << "\n";

  if (cfg.oracle) {
    OracleOptions oracle;
    oracle.points = cfg.oracle_points;
    oracle.refine = cfg.oracle_refine;
    oracle.free_sources = cfg.oracle_free;
    oracle.sweep_voltage = cfg.oracle_voltage;
    oracle.workers = cfg.workers;
    oracle.mode = cfg.opf_mode;
    oracle.default_v_min = cfg.v_min_default;
    try {
      report.oracle = acopf_oracle(net, oracle);
      write_text(cfg.out / "solutions" / "oracle.json", render_solution(report.oracle->solution, net, fp));
      log << "oracle: objective " << fixed2(report.oracle->solution.objective) << " (" << report.oracle->feasible
          << " of " << report.oracle->evaluated << " grid points feasible)\n";
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      report.oracle_error = e.what();
      log << "oracle: " << e.what() << "\n";
    }
  }
  if (report.oracle && report.ddcqa.status == SolveStatus::Optimal && report.oracle->solution.objective > 0.0) {
    report.gap = optimality_gap(report.oracle->solution.objective, report.ddcqa.objective);
    log << "Err " << fixed2(*report.gap) << "%\n";
  }

  auto objective_cell = [](const OpfSolution& s) {
    return s.status == SolveStatus::Optimal ? fixed2(s.objective) : std::string("-");
  };
  std::vector<std::string> header{"case", "ddcqa_status", "ddcqa_objective"};
  std::vector<std::string> row{net.name, status_name(report.ddcqa.status), objective_cell(report.ddcqa)};
  std::vector<std::string> rt_header{"case", "ddcqa_runtime_s", "ddcqa_iterations"};
  std::vector<std::string> rt_row{net.name, general(report.ddcqa.runtime_s), std::to_string(report.ddcqa.iterations)};
  if (cfg.oracle) {
    header.insert(header.begin() + 1, "oracle_objective");
    row.insert(row.begin() + 1, report.oracle ? fixed2(report.oracle->solution.objective) : std::string("-"));
    header.push_back("err_percent");
    row.push_back(report.gap ? fixed2(*report.gap) : std::string("-"));
    rt_header.push_back("oracle_runtime_s");
    rt_row.push_back(report.oracle ? general(report.oracle->solution.runtime_s) : std::string("-"));
  }
  write_text(cfg.out / "tables" / "opf.csv", csv_table(header, {row}));
  write_text(cfg.out / "tables" / "opf.md", "OPF objective ($/hr)\n\n" + markdown_table(header, {row}));
  write_text(cfg.out / "tables" / "opf_runtime.csv", csv_table(rt_header, {rt_row}));
  write_text(cfg.out / "tables" / "opf_runtime.md", "OPF runtime\n\n" + markdown_table(rt_header, {rt_row}));
  return report;
}

void run_report(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = cfg.out / "tables";
  if (!fs::is_directory(dir)) throw UsageError("no tables under " + dir.string());
  std::set<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".md") files.insert(entry.path());
  }
  if (files.empty()) throw UsageError("no tables under " + dir.string());
  write_resolved_config(cfg);
  std::string text = "# Report\n";
  for (const auto& f : files) text += "\n## " + f.stem().string() + "\n\n" + read_text(f);
  write_text(cfg.out / "report.md", text);
  log << "wrote " << (cfg.out / "report.md").string() << " from " << files.size() << " tables\n";
}

}  // namespace ddcqa
