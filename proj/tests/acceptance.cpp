// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ddcqa/config.hpp"
#include "ddcqa/error.hpp"
#include "ddcqa/pipeline.hpp"
#include "ddcqa/rng.hpp"
#include "socp_oracle.hpp"

using namespace ddcqa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

NetworkCase case_named(const std::string& name) {
  return load_case(fs::path(DDCQA_DATA_DIR) / "cases" / (name + ".m"));
}

NetworkCase feeder() { return load_case(fs::path(DDCQA_TEST_DATA) / "feeder4.json"); }

Dataset sample(const NetworkCase& net, int count, std::uint64_t seed) {
  SamplingOptions so;
  so.count = count;
  so.seed = seed;
  return generate_dataset(net, sample_load_scenarios(net, so), so);
}

std::vector<QuantityId> all_quantities(const NetworkCase& net) {
  std::vector<QuantityId> out;
  for (int ph = 0; ph < net.phase_count; ++ph) {
    for (int i = 0; i < net.bus_count(); ++i) {
      out.push_back({QuantityKind::P, i, ph});
      out.push_back({QuantityKind::Q, i, ph});
    }
    for (int b = 0; b < net.branch_count(); ++b) {
      for (auto k : {QuantityKind::Pij, QuantityKind::Qij, QuantityKind::Pji, QuantityKind::Qji}) {
        out.push_back({k, b, ph});
      }
    }
  }
  return out;
}

// Injections and flows straight from the admittance entries, without the
// library's evaluation routines.
double direct_value(const NetworkCase& net, const AdmittanceMatrix& y, const Eigen::VectorXd& x,
                    const QuantityId& id) {
  const int n = net.bus_count();
  auto v = [&](int bus, int ph) {
    const int node = ph * n + bus;
    return std::complex<double>(x[2 * node], x[2 * node + 1]);
  };
  if (id.kind == QuantityKind::P || id.kind == QuantityKind::Q) {
    const int i = id.phase * n + id.element;
    const double ei = x[2 * i];
    const double fi = x[2 * i + 1];
    double a = 0.0, b = 0.0;
    for (int k = 0; k < y.node_count(); ++k) {
      const double g = y.y(i, k).real();
      const double bb = y.y(i, k).imag();
      a += g * x[2 * k] - bb * x[2 * k + 1];
      b += g * x[2 * k + 1] + bb * x[2 * k];
    }
    return id.kind == QuantityKind::P ? ei * a + fi * b : fi * a - ei * b;
  }
  const auto& br = y.branches[static_cast<size_t>(id.element)];
  const int phases = net.phase_count;
  const bool from_side = id.kind == QuantityKind::Pij || id.kind == QuantityKind::Qij;
  std::complex<double> current = 0.0;
  for (int q = 0; q < phases; ++q) {
    if (from_side) {
      current += br.ff(id.phase, q) * v(br.from, q) + br.ft(id.phase, q) * v(br.to, q);
    } else {
      current += br.tf(id.phase, q) * v(br.from, q) + br.tt(id.phase, q) * v(br.to, q);
    }
  }
  const std::complex<double> s = v(from_side ? br.from : br.to, id.phase) * std::conj(current);
  return (id.kind == QuantityKind::Pij || id.kind == QuantityKind::Pji) ? s.real() : s.imag();
}

double form_value(const LocalQuadratic& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd xl(static_cast<Eigen::Index>(m.vars.size()));
  for (size_t k = 0; k < m.vars.size(); ++k) xl[static_cast<Eigen::Index>(k)] = x[m.vars[k]];
  return xl.dot(m.m * xl);
}

// Largest |direct - X'MX| over random states near the flat profile.
double form_error(const NetworkCase& net, int states, std::uint64_t seed) {
  const AdmittanceMatrix y = build_admittance(net);
  KeyedStream rng{seed};
  const auto ids = all_quantities(net);
  std::vector<LocalQuadratic> forms;
  for (const auto& id : ids) forms.push_back(injection_matrix(id, y));
  const int nodes = y.node_count();
  double worst = 0.0;
  for (int s = 0; s < states; ++s) {
    Eigen::VectorXd x(2 * nodes);
    for (int node = 0; node < nodes; ++node) {
      const double mag = rng.uniform(0.9, 1.1);
      const double ang = phase_angle(node / net.bus_count()) + rng.uniform(-0.5, 0.5);
      x[2 * node] = mag * std::cos(ang);
      x[2 * node + 1] = mag * std::sin(ang);
    }
    for (size_t k = 0; k < ids.size(); ++k) {
      worst = std::max(worst, std::abs(direct_value(net, y, x, ids[k]) - form_value(forms[k], x)));
    }
  }
  return worst;
}

// ---- individual checks ------------------------------------------------------

Outcome forms_check(const std::vector<NetworkCase>& nets) {
  double worst = 0.0;
  for (const auto& net : nets) worst = std::max(worst, form_error(net, 100, 7));
  return {worst <= 1e-12, "max |direct - X'MX| " + sci(worst)};
}

struct PfStats {
  double base_residual = 0.0;
  double worst_rate = 1.0;
  std::string detail;
};

PfStats pf_check(const std::vector<std::pair<NetworkCase, bool>>& nets) {
  PfStats st;
  std::ostringstream d;
  for (const auto& [net, sampled] : nets) {
    const AdmittanceMatrix y = build_admittance(net);
    const LoadProfile loads = LoadProfile::base(net);
    const auto r = newton_raphson_pf(net, y, loads);
    const double res = pf_mismatch(net, y, loads, r.state);
    st.base_residual = std::max(st.base_residual, res);
    d << net.name << " residual " << sci(res);
    if (sampled) {
      SamplingOptions so;
      so.count = 1000;
      so.seed = 4;
      so.lo = 0.6;
      so.hi = 1.1;
      double rate = 0.0;
      try {
        const Dataset ds = generate_dataset(net, sample_load_scenarios(net, so), so);
        rate = static_cast<double>(ds.size()) / ds.attempted;
      } catch (const Error&) {
        rate = 0.0;  // fewer than half converged
      }
      st.worst_rate = std::min(st.worst_rate, rate);
      d << " converged " << fixed(100 * rate, 1) << "%";
    }
    d << "; ";
  }
  st.detail = d.str();
  return st;
}

double min_hessian_eig(const EnsembleModel& m) {
  double lo = m.collapsed.min_eigenvalue();
  for (const auto& member : m.members) lo = std::min(lo, member.min_eigenvalue());
  return lo;
}

double convexity_check(const NetworkCase& net, const Dataset& train, int T, int BT) {
  const AdmittanceMatrix y = build_admittance(net);
  BoostOptions bo;
  bo.learners = T;
  BagOptions bag;
  bag.bootstraps = BT;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& id : train.targets) {
    lo = std::min(lo, min_hessian_eig(pr_fit(train, id, y)));
    lo = std::min(lo, min_hessian_eig(gb_fit(train, id, y, bo)));
    lo = std::min(lo, min_hessian_eig(bagging_fit(train, id, y, bag)));
  }
  return lo;
}

// Largest increase of a family's training RMSE from one learner to the next.
double monotonicity_check(const NetworkCase& net, const Dataset& train, const Dataset& test, int T) {
  const AdmittanceMatrix y = build_admittance(net);
  BoostOptions bo;
  bo.learners = T;
  double worst = -std::numeric_limits<double>::infinity();
  for (auto fam : {Family::P, Family::Q, Family::Pij, Family::Qij}) {
    const auto pts = tune_sweep(train, test, fam, train.targets, y, Method::GB, bo, BagOptions{});
    for (size_t i = 1; i < pts.size(); ++i) worst = std::max(worst, pts[i].train - pts[i - 1].train);
  }
  return worst;
}

RunConfig run_config(const std::string& name, const fs::path& out) {
  RunConfig cfg;
  cfg.case_path = fs::path(DDCQA_DATA_DIR) / "cases" / (name + ".m");
  cfg.out = out;
  cfg.T = 200;
  return cfg;
}

// ---- criteria --------------------------------------------------------------

Outcome criterion1() {
  return forms_check({case_named("case5"), case_named("case9")});
}

Outcome criterion2() {
  const PfStats st = pf_check({{case_named("case5"), true},
                               {case_named("case9"), true},
                               {case_named("case57"), true},
                               {case_named("case118"), false}});
  return {st.base_residual <= 1e-8 && st.worst_rate >= 0.95, st.detail};
}

Outcome criterion3() {
  double lo = std::numeric_limits<double>::infinity();
  for (const char* name : {"case5", "case9"}) {
    const NetworkCase net = case_named(name);
    const auto [train, test] = split_train_test(sample(net, 200, 8), 0.5, 8);
    lo = std::min(lo, convexity_check(net, train, 250, 50));
  }
  return {lo >= -1e-9, "min Hessian eigenvalue " + sci(lo) + " over PR, GB T=250, BAG BT=50"};
}

Outcome criterion4() {
  double worst = -std::numeric_limits<double>::infinity();
  for (const char* name : {"case5", "case9"}) {
    const NetworkCase net = case_named(name);
    const auto [train, test] = split_train_test(sample(net, 200, 9), 0.5, 9);
    worst = std::max(worst, monotonicity_check(net, train, test, 250));
  }
  return {worst <= 1e-15, "largest step-to-step training RMSE change " + sci(worst)};
}

Outcome criterion5() {
  std::ostringstream d;
  bool pass = true;
  for (const char* name : {"case5", "case9"}) {
    const NetworkCase net = case_named(name);
    const AdmittanceMatrix y = build_admittance(net);
    int gb_wins = 0, bag_wins = 0, bag_family_wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto [train, test] = split_train_test(sample(net, 200, 100 + seed), 0.5, seed);
      const auto targets = training_targets(net, TargetSet::Forward);
      BoostOptions bo;
      bo.learners = 200;
      BagOptions bag;
      bag.bootstraps = 50;
      bag.seed = seed;
      std::vector<ConvexQuadratic> pr, gb, bg;
      for (const auto& id : targets) {
        pr.push_back(pr_fit(train, id, y).collapsed);
        gb.push_back(gb_fit(train, id, y, bo).collapsed);
        bg.push_back(bagging_fit(train, id, y, bag).collapsed);
      }
      // GB must win family by family; bagging on the mean RMSE over all
      // targets, with its per-family record reported alongside
      bool gb_ok = true, bag_family_ok = true;
      for (auto fam : {Family::P, Family::Q, Family::Pij, Family::Qij}) {
        const double p = family_rmse(pr, test, fam);
        gb_ok = gb_ok && family_rmse(gb, test, fam) <= p;
        bag_family_ok = bag_family_ok && family_rmse(bg, test, fam) <= p;
      }
      double pr_mean = 0.0, bag_mean = 0.0;
      for (size_t k = 0; k < targets.size(); ++k) {
        pr_mean += target_rmse(pr[k], test) / static_cast<double>(targets.size());
        bag_mean += target_rmse(bg[k], test) / static_cast<double>(targets.size());
      }
      const bool bag_ok = bag_mean <= pr_mean;
      bag_family_wins += bag_family_ok;
      gb_wins += gb_ok;
      bag_wins += bag_ok;
    }
    d << name << ": GB <= PR in every family " << gb_wins << "/10, BAG <= PR on mean RMSE " << bag_wins
      << "/10 (in every family " << bag_family_wins << "/10); ";
    pass = pass && gb_wins >= 8 && bag_wins >= 8;
  }
  return {pass, d.str()};
}

Outcome criterion6() {
  KeyedStream rng{61};
  double recovery = 0.0;
  for (int d = 1; d <= 6; ++d) {
    Eigen::MatrixXd f(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) f(i, j) = rng.uniform(-1.0, 1.0);
    }
    const Eigen::MatrixXd a = f * f.transpose();
    Eigen::VectorXd b(d);
    for (int i = 0; i < d; ++i) b[i] = rng.uniform(-1.0, 1.0);
    const double c = rng.uniform(-1.0, 1.0);
    std::vector<int> vars;
    for (int i = 0; i < d; ++i) vars.push_back(i);
    const FeatureSpec spec = dense_spec(vars);
    const int m = 3 * spec.feature_count() + 5;
    Eigen::MatrixXd xs(m, d);
    Eigen::VectorXd resp(m);
    for (int r = 0; r < m; ++r) {
      for (int i = 0; i < d; ++i) xs(r, i) = rng.uniform(-1.0, 1.0);
      const Eigen::VectorXd x = xs.row(r).transpose();
      resp[r] = x.dot(a * x) + b.dot(x) + c;
    }
    LearnerOptions opts;
    opts.ridge = 0.0;
    const ConvexQuadratic q = QuadraticDesign(xs, spec, opts).fit(resp);
    recovery = std::max({recovery, (q.a - a).cwiseAbs().maxCoeff(), (q.b - b).cwiseAbs().maxCoeff(),
                         std::abs(q.c - c)});
  }
  double projection = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + static_cast<int>(rng.below(10));
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::MatrixXd oracle =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    projection = std::max(projection, (nearest_psd(m) - oracle).norm());
  }
  return {recovery <= 1e-6 && projection <= 1e-10,
          "planted recovery error " + sci(recovery) + ", projection error " + sci(projection)};
}

Outcome criterion7() {
  KeyedStream rng{71};
  double worst_obj = 0.0, worst_kkt = 0.0;
  int optimal = 0;
  for (int t = 0; t < 200; ++t) {
    const auto s = testing_support::random_socp(rng);
    const ConicSolution sol = solve_ipm(s.problem);
    if (sol.status != SolveStatus::Optimal) continue;
    ++optimal;
    worst_obj = std::max(worst_obj, std::abs(sol.objective - testing_support::brute_force_minimum(s)));
    worst_kkt = std::max(worst_kkt, kkt_residuals(s.problem, sol).max());
  }
  return {optimal == 200 && worst_obj <= 1e-4 && worst_kkt <= 1e-8,
          std::to_string(optimal) + "/200 optimal, max |objective - brute force| " + sci(worst_obj) + ", max KKT residual " +
              sci(worst_kkt)};
}

Outcome criterion8(const fs::path& work) {
  struct Run {
    const char* name;
    int count;
    std::vector<int> free;
    int points;
    double limit;
  };
  const std::vector<Run> runs = {
      {"case5", 200, {0, 2, 4}, 11, 2.0},
      {"case9", 200, {}, 11, 2.0},
      {"case57", 400, {2, 4, 6}, 7, 3.0},
  };
  std::ostringstream d;
  bool pass = std::abs(optimality_gap(17551.89, 17518.12) - 0.19) < 1e-12 &&
              std::abs(optimality_gap(129660.70, 129454.02) - 0.16) < 1e-12;
  d << "Err formula " << (pass ? "reproduces" : "misses") << " 0.19 and 0.16; ";
  for (const auto& r : runs) {
    RunConfig cfg = run_config(r.name, work / r.name);
    cfg.sampling.count = r.count;
    cfg.oracle_free = r.free;
    cfg.oracle_points = r.points;
    std::ostringstream log;
    run_generate(cfg, log);
    run_train(cfg, log);
    const OpfReport rep = run_opf(cfg, log);
    d << r.name << " ";
    if (!rep.gap) {
      d << "ddcqa " << status_name(rep.ddcqa.status);
      if (!rep.oracle) d << ", oracle failed (" << rep.oracle_error << ")";
      d << "; ";
      pass = false;
      continue;
    }
    d << fixed(rep.ddcqa.objective) << " vs " << fixed(rep.oracle->solution.objective) << " Err " << fixed(*rep.gap)
      << "% (limit " << fixed(r.limit, 0) << "%); ";
    pass = pass && *rep.gap <= r.limit;
  }
  return {pass, d.str()};
}

Outcome criterion9() {
  const NetworkCase one = case_named("case9");
  const NetworkCase three = balanced_three_phase(one);
  const AdmittanceMatrix y1 = build_admittance(one);
  const AdmittanceMatrix y3 = build_admittance(three);
  const int n = one.bus_count();

  double ybus = 0.0;
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      const Eigen::MatrixXcd block = y3.y.block(p * n, q * n, n, n);
      ybus = std::max(ybus, p == q ? (block - y1.y).cwiseAbs().maxCoeff() : block.cwiseAbs().maxCoeff());
    }
  }

  const auto pf1 = newton_raphson_pf(one, y1, LoadProfile::base(one));
  const auto pf3 = newton_raphson_pf(three, y3, LoadProfile::base(three));
  double pf = 0.0;
  for (int ph = 0; ph < 3; ++ph) {
    for (int b = 0; b < n; ++b) {
      const auto v = pf3.state.phasor(b, ph) * std::polar(1.0, -phase_angle(ph));
      pf = std::max(pf, std::abs(v - pf1.state.phasor(b, 0)));
    }
  }

  const Dataset d1 = sample(one, 200, 12);
  const Dataset d3 = sample(three, 200, 12);
  const auto [t1, e1] = split_train_test(d1, 0.5, 12);
  const auto [t3, e3] = split_train_test(d3, 0.5, 12);
  BoostOptions bo;
  bo.learners = 200;
  double pred = 0.0;
  ModelSet m1, m3;
  for (const auto& id : opf_targets(one)) {
    const ConvexQuadratic g1 = gb_fit(t1, id, y1, bo).collapsed;
    m1.emplace(id, g1);
    for (int ph = 0; ph < 3; ++ph) {
      const QuantityId id3{id.kind, id.element, ph};
      const ConvexQuadratic g3 = gb_fit(t3, id3, y3, bo).collapsed;
      m3.emplace(id3, g3);
      for (int r = 0; r < e1.size(); ++r) {
        const double a = g1.eval(e1.x.row(r).transpose());
        const double b = g3.eval(e3.x.row(r).transpose());
        pred = std::max(pred, std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
    }
  }
  OpfOptions o1, o3;
  std::tie(o1.x_lower, o1.x_upper) = component_bounds(t1, 0.1);
  std::tie(o3.x_lower, o3.x_upper) = component_bounds(t3, 0.1);
  const auto s1 = solve_ddcqa_opf(build_ddcqa_opf(one, m1, o1), one, y1);
  const auto s3 = solve_ddcqa_opf(build_ddcqa_opf(three, m3, o3), three, y3);
  const bool solved = s1.status == SolveStatus::Optimal && s3.status == SolveStatus::Optimal;
  const double obj = solved ? std::abs(s3.objective / 3.0 - s1.objective) / std::abs(s1.objective) : 1.0;
  const bool balanced = ybus <= 1e-10 && pf <= 1e-10 && pred <= 1e-10 && obj <= 1e-10;

  // unbalanced feeder: the first four criteria at six samples per bus
  const NetworkCase fd = feeder();
  const double forms = form_error(fd, 100, 13);
  const PfStats st = pf_check({{fd, true}});
  const int m = minimum_samples(fd.bus_count(), fd.phase_count);
  const Dataset train = sample(fd, m, 14);
  const Dataset test = sample(fd, m, 15);
  const double eig = convexity_check(fd, train, 250, 50);
  const double mono = monotonicity_check(fd, train, test, 250);
  const bool unbalanced = forms <= 1e-12 && st.base_residual <= 1e-8 && st.worst_rate >= 0.95 && eig >= -1e-9 &&
                          mono <= 1e-15;

  std::ostringstream d;
  d << "balanced case9: Y-bus " << sci(ybus) << ", PF " << sci(pf) << ", predictions " << sci(pred)
    << ", OPF objective rel " << (solved ? sci(obj) : std::string("not solved")) << "; feeder (" << m
    << " samples): forms " << sci(forms) << ", " << st.detail << "min eig " << sci(eig) << ", GB step "
    << sci(mono);
  return {balanced && unbalanced, d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10(const fs::path& work) {
  std::vector<fs::path> dirs;
  for (int workers : {1, 4}) {
    const fs::path dir = work / ("workers" + std::to_string(workers));
    RunConfig cfg = run_config("case9", dir);
    cfg.sampling.count = 200;
    cfg.workers = workers;
    cfg.tune_steps = 50;
    cfg.oracle_points = 7;
    std::ostringstream log;
    run_generate(cfg, log);
    run_train(cfg, log);
    run_tune(cfg, log);
    run_opf(cfg, log);
    dirs.push_back(dir);
  }
  // a second run from the first run's written config
  const fs::path rerun = work / "rerun";
  RunConfig again = read_config(dirs[0] / "resolved-config");
  again.out = rerun;
  again.dataset.clear();
  {
    std::ostringstream log;
    run_generate(again, log);
    run_train(again, log);
    run_tune(again, log);
    run_opf(again, log);
  }
  dirs.push_back(rerun);

  int compared = 0, differing = 0;
  std::string first_diff;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dirs[0]);
    const std::string top = rel.begin()->string();
    const bool kept = rel == "dataset.csv" || top == "models" || top == "curves" ||
                      (top == "tables" && !rel.filename().string().starts_with("opf_runtime"));
    if (!kept) continue;
    const std::string ref = slurp(e.path());
    for (size_t k = 1; k < dirs.size(); ++k) {
      ++compared;
      if (!fs::exists(dirs[k] / rel) || slurp(dirs[k] / rel) != ref) {
        ++differing;
        if (first_diff.empty()) first_diff = rel.string();
      }
    }
  }
  return {differing == 0 && compared > 0,
          std::to_string(compared) + " file comparisons across workers 1, 4 and a rerun, " +
              std::to_string(differing) + " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = fs::temp_directory_path() / "ddcqa-acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  struct Criterion {
    int number;
    const char* name;
    double budget_s;  // 0 when the criterion sets no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "quadratic-form equivalence", 5.0, criterion1},
      {2, "power-flow contract", 60.0, criterion2},
      {3, "convexity suite", 600.0, criterion3},
      {4, "GB monotonicity", 0.0, criterion4},
      {5, "method ordering", 0.0, criterion5},
      {6, "recovery oracle", 0.0, criterion6},
      {7, "conic solver", 120.0, criterion7},
      {8, "OPF gap", 0.0, [&] { return criterion8(work); }},
      {9, "three-phase path", 0.0, criterion9},
      {10, "reproducibility", 0.0, [&] { return criterion10(work); }},
  };

  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += "; over the " + fixed(c.budget_s, 0) + " s budget";
    }
    if (!out.pass) ++failed;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << c.number << " " << c.name << ": " << out.detail
              << " [" << fixed(secs, 1) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
