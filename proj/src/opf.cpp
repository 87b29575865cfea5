#include "ddcqa/opf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "ddcqa/error.hpp"

namespace ddcqa {
namespace {

using json = nlohmann::ordered_json;

std::string phase_suffix(int phase, int phase_count) {
  return phase_count > 1 ? std::string(1, static_cast<char>('a' + phase)) : std::string();
}

bool has_cost(const NetworkCase& net) {
  return std::any_of(net.sources.begin(), net.sources.end(),
                     [](const Source& s) { return s.cost.c1 != 0.0 || s.cost.c2 != 0.0; });
}

// Variables and rows every variant of the program shares: voltages, source
// outputs with their boxes, the voltage caps, power-factor rows, and cost.
struct Skeleton {
  ConicProblem cp;
  OpfLayout layout;
  std::vector<LinearExpr> gen_p;  // per node
  std::vector<LinearExpr> gen_q;
};

Skeleton skeleton(const NetworkCase& net, const OpfOptions& opts) {
  const OpfMode mode = opts.mode;
  if (!has_cost(net)) throw ValidationError("case has no cost data");
  Skeleton sk;
  const int n = net.bus_count();
  const int phases = net.phase_count;
  auto& cp = sk.cp;
  auto& lay = sk.layout;
  for (int ph = 0; ph < phases; ++ph) {
    for (int i = 0; i < n; ++i) {
      const std::string tail = std::to_string(net.buses[static_cast<size_t>(i)].id) + phase_suffix(ph, phases);
      lay.x.push_back(cp.add_var("e_" + tail));
      lay.x.push_back(cp.add_var("f_" + tail));
    }
  }
  sk.gen_p.assign(static_cast<size_t>(n * phases), LinearExpr());
  sk.gen_q.assign(static_cast<size_t>(n * phases), LinearExpr());
  for (size_t s = 0; s < net.sources.size(); ++s) {
    const auto& src = net.sources[s];
    std::vector<int> ps, qs;
    for (size_t k = 0; k < src.phases.size(); ++k) {
      const std::string tail = std::to_string(s + 1) + phase_suffix(src.phases[k], phases);
      ps.push_back(cp.add_var("pg_" + tail));
      qs.push_back(cp.add_var("qg_" + tail));
      const int node = src.phases[k] * n + src.bus;
      sk.gen_p[static_cast<size_t>(node)].add(ps.back(), 1.0);
      sk.gen_q[static_cast<size_t>(node)].add(qs.back(), 1.0);
    }
    lay.pg.push_back(std::move(ps));
    lay.qg.push_back(std::move(qs));
  }

  // generation cost, applied to each phase of a source
  for (size_t s = 0; s < net.sources.size(); ++s) {
    const auto& src = net.sources[s];
    for (size_t k = 0; k < src.phases.size(); ++k) {
      const int pg = lay.pg[s][k];
      if (mode == OpfMode::Distribution) {
        if (src.cost.c1 != 0.0) cp.objective.add(pg, src.cost.c1);
        continue;
      }
      cp.objective.constant += src.cost.c0;
      if (src.cost.c1 != 0.0) cp.objective.add(pg, src.cost.c1);
      if (src.cost.c2 > 0.0) {
        const int t = cp.add_var("cost_" + std::to_string(s + 1) + phase_suffix(src.phases[k], phases));
        cp.objective.add(t, 1.0);
        LinearExpr tt;
        tt.add(t, 1.0);
        LinearExpr w;
        w.add(pg, std::sqrt(src.cost.c2));
        cp.cones.push_back({ConeType::RotatedSOC, {tt, LinearExpr(0.5), w}, "epigraph " + cp.var_names[t]});
      } else if (src.cost.c2 < 0.0) {
        throw ValidationError("source " + std::to_string(s + 1) + " has a concave cost");
      }
    }
  }

  for (int ph = 0; ph < phases; ++ph) {
    for (int i = 0; i < n; ++i) {
      const double vmax = net.buses[static_cast<size_t>(i)].v_max;
      if (!std::isfinite(vmax)) continue;
      const int k = 2 * (ph * n + i);
      LinearExpr e, f;
      e.add(lay.x[static_cast<size_t>(k)], 1.0);
      f.add(lay.x[static_cast<size_t>(k + 1)], 1.0);
      cp.cones.push_back({ConeType::SOC, {LinearExpr(vmax), e, f}, "voltage " + cp.var_names[lay.x[k]].substr(2)});
    }
  }

  if (opts.x_lower.size() || opts.x_upper.size()) {
    if (opts.x_lower.size() != net.state_dim() || opts.x_upper.size() != net.state_dim()) {
      throw ValidationError("voltage component bounds do not match the state dimension");
    }
    for (int k = 0; k < net.state_dim(); ++k) {
      const int var = lay.x[static_cast<size_t>(k)];
      LinearExpr lo(-opts.x_lower[k]);
      lo.add(var, 1.0);
      LinearExpr hi(opts.x_upper[k]);
      hi.add(var, -1.0);
      cp.cones.push_back({ConeType::NonNeg, {lo, hi}, "component " + cp.var_names[var]});
    }
  }

  for (size_t s = 0; s < net.sources.size(); ++s) {
    const auto& src = net.sources[s];
    for (size_t k = 0; k < src.phases.size(); ++k) {
      ConeBlock box{ConeType::NonNeg, {}, "generator " + cp.var_names[lay.pg[s][k]].substr(3)};
      auto bound = [&](int var, double limit, double sign) {
        if (!std::isfinite(limit)) return;
        LinearExpr e(-sign * limit);
        e.add(var, sign);
        box.rows.push_back(std::move(e));
      };
      bound(lay.pg[s][k], src.p_min[k], 1.0);
      bound(lay.pg[s][k], src.p_max[k], -1.0);
      bound(lay.qg[s][k], src.q_min[k], 1.0);
      bound(lay.qg[s][k], src.q_max[k], -1.0);
      if (!box.rows.empty()) cp.cones.push_back(std::move(box));
      if (src.pf_min) {
        const double slope = std::tan(std::acos(*src.pf_min));
        LinearExpr up, down;
        up.add(lay.pg[s][k], slope).add(lay.qg[s][k], -1.0);
        down.add(lay.pg[s][k], slope).add(lay.qg[s][k], 1.0);
        cp.cones.push_back(
            {ConeType::NonNeg, {up, down}, "power-factor " + cp.var_names[lay.pg[s][k]].substr(3)});
      }
    }
  }
  return sk;
}

std::vector<int> map_vars(const ConvexQuadratic& q, const OpfLayout& lay) {
  std::vector<int> out;
  for (int v : q.vars) {
    if (v < 0 || v >= static_cast<int>(lay.x.size())) throw ValidationError("model variable out of range");
    out.push_back(lay.x[static_cast<size_t>(v)]);
  }
  return out;
}

const ConvexQuadratic& need(const ModelSet& models, const QuantityId& id, int phases) {
  const auto it = models.find(id);
  if (it == models.end()) throw ValidationError("missing model for " + id.name(phases));
  return it->second;
}

std::string tag_family(const std::string& tag) { return tag.substr(0, tag.find(' ')); }

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> component_bounds(const Dataset& ds, double margin, double floor) {
  if (ds.size() == 0) throw ValidationError("empty dataset");
  Eigen::VectorXd lo = ds.x.colwise().minCoeff().transpose();
  Eigen::VectorXd hi = ds.x.colwise().maxCoeff().transpose();
  const Eigen::VectorXd pad = ((hi - lo) * margin).cwiseMax(floor);
  return {lo - pad, hi + pad};
}

std::string opf_mode_name(OpfMode m) { return m == OpfMode::Transmission ? "transmission" : "distribution"; }

OpfMode parse_opf_mode(const std::string& s) {
  if (s == "transmission") return OpfMode::Transmission;
  if (s == "distribution") return OpfMode::Distribution;
  throw ValidationError("unknown OPF mode '" + s + "'");
}

std::vector<QuantityId> opf_targets(const NetworkCase& net) {
  std::vector<QuantityId> out;
  for (int ph = 0; ph < net.phase_count; ++ph) {
    for (int i = 0; i < net.bus_count(); ++i) {
      out.push_back({QuantityKind::P, i, ph});
      out.push_back({QuantityKind::Q, i, ph});
    }
  }
  for (int ph = 0; ph < net.phase_count; ++ph) {
    for (int b = 0; b < net.branch_count(); ++b) {
      if (!net.branches[static_cast<size_t>(b)].monitored()) continue;
      out.push_back({QuantityKind::Pij, b, ph});
      out.push_back({QuantityKind::Qij, b, ph});
    }
  }
  return out;
}

OpfProblem build_ddcqa_opf(const NetworkCase& net, const ModelSet& models, const OpfOptions& opts) {
  net.validate();
  OpfProblem out;
  out.loads = opts.loads ? *opts.loads : LoadProfile::base(net);
  out.mode = opts.mode;
  out.default_v_min = opts.default_v_min;
  out.solver = opts.solver;
  out.case_fingerprint = case_fingerprint(net);
  Skeleton sk = skeleton(net, opts);
  auto& cp = sk.cp;
  auto& lay = sk.layout;
  const int n = net.bus_count();
  const int phases = net.phase_count;

  for (int ph = 0; ph < phases; ++ph) {
    for (int i = 0; i < n; ++i) {
      const int node = ph * n + i;
      for (const auto kind : {QuantityKind::P, QuantityKind::Q}) {
        const QuantityId id{kind, i, ph};
        const auto& q = need(models, id, phases);
        LinearExpr bound = kind == QuantityKind::P ? sk.gen_p[static_cast<size_t>(node)]
                                                   : sk.gen_q[static_cast<size_t>(node)];
        bound.constant -= kind == QuantityKind::P ? out.loads.p[node] : out.loads.q[node];
        cp.cones.push_back(quad_to_soc(q, bound, map_vars(q, lay), "injection " + id.name(phases)));
        out.models.emplace(id, q);
      }
    }
  }

  for (int ph = 0; ph < phases; ++ph) {
    for (int b = 0; b < net.branch_count(); ++b) {
      const auto& br = net.branches[static_cast<size_t>(b)];
      if (!br.monitored()) continue;
      const QuantityId pid{QuantityKind::Pij, b, ph};
      const QuantityId qid{QuantityKind::Qij, b, ph};
      const int pv = cp.add_var(pid.name(phases));
      const int qv = cp.add_var(qid.name(phases));
      lay.flows.push_back(pid);
      lay.flow_p.push_back(pv);
      lay.flow_q.push_back(qv);
      LinearExpr pe, qe;
      pe.add(pv, 1.0);
      qe.add(qv, 1.0);
      cp.cones.push_back({ConeType::SOC, {LinearExpr(br.rate), pe, qe}, "apparent " + pid.name(phases).substr(4)});
      for (const auto& [id, var] : {std::pair{pid, pv}, std::pair{qid, qv}}) {
        const auto& q = need(models, id, phases);
        LinearExpr bound;
        bound.add(var, 1.0);
        cp.cones.push_back(quad_to_soc(q, bound, map_vars(q, lay), "flow " + id.name(phases)));
        out.models.emplace(id, q);
      }
    }
  }
  out.conic = std::move(cp);
  out.layout = std::move(lay);
  return out;
}

OpfProblem build_exact_relaxation(const NetworkCase& net, const AdmittanceMatrix& y, const OpfOptions& opts) {
  net.validate();
  OpfProblem out;
  out.loads = opts.loads ? *opts.loads : LoadProfile::base(net);
  out.mode = opts.mode;
  out.default_v_min = opts.default_v_min;
  out.solver = opts.solver;
  out.case_fingerprint = case_fingerprint(net);
  Skeleton sk = skeleton(net, opts);
  const int dim = net.state_dim();
  Eigen::MatrixXd loss = Eigen::MatrixXd::Zero(dim, dim);
  for (int node = 0; node < y.node_count(); ++node) {
    loss += injection_matrix({QuantityKind::P, node % y.bus_count, node / y.bus_count}, y).dense(dim);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(loss, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, loss.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw NumericError("network losses are not a convex function of the voltages");
  }
  ConvexQuadratic q;
  q.target = {QuantityKind::P, 0, 0};
  for (int k = 0; k < dim; ++k) q.vars.push_back(k);
  q.a = nearest_psd(loss);
  q.b = Eigen::VectorXd::Zero(dim);
  LinearExpr bound;
  for (const auto& g : sk.gen_p) {
    for (const auto& t : g.terms) bound.terms.push_back(t);
  }
  bound.constant = -out.loads.p.sum();
  auto blk = quad_to_soc(q, bound, map_vars(q, sk.layout), "losses total");
  sk.cp.cones.push_back(std::move(blk));
  out.conic = std::move(sk.cp);
  out.layout = std::move(sk.layout);
  return out;
}

ConstraintCensus census(const OpfProblem& p) {
  ConstraintCensus c;
  for (const auto& blk : p.conic.cones) {
    const std::string fam = tag_family(blk.tag);
    if (fam == "injection") ++c.injection;
    else if (fam == "voltage") ++c.voltage;
    else if (fam == "generator") ++c.generator;
    else if (fam == "apparent") ++c.apparent;
    else if (fam == "flow") ++c.flow;
    else if (fam == "epigraph") ++c.epigraph;
    else if (fam == "power-factor") ++c.power_factor;
    else if (fam == "losses") ++c.losses;
    else if (fam == "component") ++c.component;
  }
  return c;
}

OpfSolution solve_ddcqa_opf(const OpfProblem& problem, const NetworkCase& net, const AdmittanceMatrix& y,
                            const ConicBackend& backend) {
  OpfSolution sol;
  const auto start = std::chrono::steady_clock::now();
  const ConicSolution cs = backend.solve(problem.conic, problem.solver);
  sol.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sol.status = cs.status;
  sol.iterations = cs.iterations;
  sol.residuals = cs.residuals;
  sol.objective = cs.objective;
  const auto& lay = problem.layout;
  sol.x.resize(static_cast<Eigen::Index>(lay.x.size()));
  for (size_t k = 0; k < lay.x.size(); ++k) sol.x[static_cast<Eigen::Index>(k)] = cs.x[lay.x[k]];
  for (size_t s = 0; s < lay.pg.size(); ++s) {
    std::vector<double> p, q;
    for (size_t k = 0; k < lay.pg[s].size(); ++k) {
      p.push_back(cs.x[lay.pg[s][k]]);
      q.push_back(cs.x[lay.qg[s][k]]);
    }
    sol.pg.push_back(std::move(p));
    sol.qg.push_back(std::move(q));
  }
  sol.flows = lay.flows;
  sol.flow_p.resize(static_cast<Eigen::Index>(lay.flows.size()));
  sol.flow_q.resize(static_cast<Eigen::Index>(lay.flows.size()));
  for (size_t k = 0; k < lay.flows.size(); ++k) {
    sol.flow_p[static_cast<Eigen::Index>(k)] = cs.x[lay.flow_p[k]];
    sol.flow_q[static_cast<Eigen::Index>(k)] = cs.x[lay.flow_q[k]];
  }
  if (cs.status != SolveStatus::Infeasible && cs.status != SolveStatus::Unbounded) {
    sol.audit = feasibility_audit(sol, net, y, problem.models, problem.loads, problem.default_v_min);
  }
  return sol;
}

OpfAudit feasibility_audit(const OpfSolution& sol, const NetworkCase& net, const AdmittanceMatrix& y,
                           const ModelSet& models, const LoadProfile& loads, double default_v_min, double tol) {
  OpfAudit a;
  const int n = net.bus_count();
  const int phases = net.phase_count;
  const int nodes = n * phases;
  VoltageState st{n, phases, sol.x};
  const Injections inj = eval_injections(st, y);
  a.p_exact = inj.p;
  a.q_exact = inj.q;
  a.p_surrogate = inj.p;
  a.q_surrogate = inj.q;
  a.p_mismatch = Eigen::VectorXd::Zero(nodes);
  a.q_mismatch = Eigen::VectorXd::Zero(nodes);
  double sum = 0.0;
  int counted = 0;
  for (int node = 0; node < nodes; ++node) {
    for (const auto kind : {QuantityKind::P, QuantityKind::Q}) {
      const auto it = models.find({kind, node % n, node / n});
      if (it == models.end()) continue;
      const double pred = it->second.eval(sol.x);
      if (kind == QuantityKind::P) {
        a.p_surrogate[node] = pred;
        a.p_mismatch[node] = pred - inj.p[node];
        sum += std::abs(a.p_mismatch[node]);
      } else {
        a.q_surrogate[node] = pred;
        a.q_mismatch[node] = pred - inj.q[node];
        sum += std::abs(a.q_mismatch[node]);
      }
      ++counted;
    }
  }
  a.mean_abs_mismatch = counted ? sum / counted : 0.0;

  Eigen::VectorXd gp = -loads.p;
  Eigen::VectorXd gq = -loads.q;
  for (size_t s = 0; s < net.sources.size() && s < sol.pg.size(); ++s) {
    const auto& src = net.sources[s];
    for (size_t k = 0; k < src.phases.size(); ++k) {
      const int node = src.phases[k] * n + src.bus;
      gp[node] += sol.pg[s][k];
      gq[node] += sol.qg[s][k];
      const std::string name = std::to_string(s + 1) + phase_suffix(src.phases[k], phases);
      if (sol.pg[s][k] < src.p_min[k] - tol || sol.pg[s][k] > src.p_max[k] + tol) {
        a.violations.push_back("pg_" + name + " outside its limits");
      }
      if (sol.qg[s][k] < src.q_min[k] - tol || sol.qg[s][k] > src.q_max[k] + tol) {
        a.violations.push_back("qg_" + name + " outside its limits");
      }
    }
  }
  a.p_balance = gp - inj.p;
  a.q_balance = gq - inj.q;
  a.max_abs_balance = std::max(a.p_balance.cwiseAbs().maxCoeff(), a.q_balance.cwiseAbs().maxCoeff());

  a.v_mag.resize(nodes);
  for (int node = 0; node < nodes; ++node) {
    const int bus = node % n;
    const auto& b = net.buses[static_cast<size_t>(bus)];
    const double v = std::abs(st.phasor(bus, node / n));
    a.v_mag[node] = v;
    const std::string name = std::to_string(b.id) + phase_suffix(node / n, phases);
    const double vmin = b.v_min > 0.0 ? b.v_min : default_v_min;
    if (v < vmin - tol) {
      a.low_voltage.push_back(node);
      a.violations.push_back("bus " + name + " below its lower voltage bound");
    }
    if (v > b.v_max + tol) a.violations.push_back("bus " + name + " above its upper voltage bound");
  }
  for (int br = 0; br < net.branch_count(); ++br) {
    const auto& branch = net.branches[static_cast<size_t>(br)];
    if (!branch.monitored()) continue;
    const BranchFlows f = eval_line_flows(st, y, br);
    for (int ph = 0; ph < phases; ++ph) {
      const double sf = std::hypot(f.p_from[ph], f.q_from[ph]);
      const double stt = std::hypot(f.p_to[ph], f.q_to[ph]);
      if (std::max(sf, stt) > branch.rate + tol) {
        a.violations.push_back("branch " + std::to_string(br + 1) + phase_suffix(ph, phases) + " above its rating");
      }
    }
  }
  return a;
}

double optimality_gap(double ov_ref, double ov) {
  if (!(ov_ref > 0.0)) throw ValidationError("reference objective must be positive");
  return std::round(std::abs(ov_ref - ov) / ov_ref * 100.0 * 100.0) / 100.0;
}

double dispatch_cost(const NetworkCase& net, const std::vector<std::vector<double>>& pg, bool linear_only) {
  double total = 0.0;
  for (size_t s = 0; s < net.sources.size() && s < pg.size(); ++s) {
    const auto& c = net.sources[s].cost;
    for (double p : pg[s]) total += linear_only ? c.c1 * p : c(p);
  }
  return total;
}

std::vector<std::vector<double>> economic_dispatch(const NetworkCase& net, const LoadProfile& loads) {
  const int n = net.bus_count();
  std::vector<std::vector<double>> out;
  for (const auto& src : net.sources) out.emplace_back(src.phases.size(), 0.0);
  for (int ph = 0; ph < net.phase_count; ++ph) {
    struct Unit {
      size_t s, k;
      double lo, hi, c1, c2;
    };
    std::vector<Unit> units;
    for (size_t s = 0; s < net.sources.size(); ++s) {
      const auto& src = net.sources[s];
      for (size_t k = 0; k < src.phases.size(); ++k) {
        if (src.phases[k] != ph) continue;
        const double lo = std::isfinite(src.p_min[k]) ? src.p_min[k] : 0.0;
        const double hi = std::isfinite(src.p_max[k]) ? src.p_max[k] : lo + 1e6;
        units.push_back({s, k, lo, hi, src.cost.c1, std::max(src.cost.c2, 0.0)});
      }
    }
    if (units.empty()) continue;
    const double demand = loads.p.segment(ph * n, n).sum();
    // output at marginal price lam; `upper` picks the top of a flat segment
    auto output = [](const Unit& u, double lam, bool upper) {
      if (u.c2 > 0.0) return std::clamp((lam - u.c1) / (2.0 * u.c2), u.lo, u.hi);
      if (lam > u.c1 || (lam == u.c1 && upper)) return u.hi;
      return u.lo;
    };
    auto total = [&](double lam, bool upper) {
      double t = 0.0;
      for (const auto& u : units) t += output(u, lam, upper);
      return t;
    };
    double lo = 0.0, hi = 0.0;
    for (const auto& u : units) {
      lo = std::min(lo, u.c1 + 2.0 * u.c2 * u.lo - 1.0);
      hi = std::max(hi, u.c1 + 2.0 * u.c2 * u.hi + 1.0);
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid, false) < demand ? lo : hi) = mid;
    }
    // units that move between lo and hi share what is left
    double base = 0.0, room = 0.0;
    std::vector<double> a(units.size()), b(units.size());
    for (size_t u = 0; u < units.size(); ++u) {
      a[u] = output(units[u], lo, false);
      b[u] = output(units[u], hi, true);
      base += a[u];
      room += b[u] - a[u];
    }
    const double share = room > 0.0 ? std::clamp((demand - base) / room, 0.0, 1.0) : 0.0;
    for (size_t u = 0; u < units.size(); ++u) out[units[u].s][units[u].k] = a[u] + share * (b[u] - a[u]);
  }
  return out;
}

std::string render_solution(const OpfSolution& sol, const NetworkCase& net, const std::string& case_fingerprint) {
  const int phases = net.phase_count;
  json root;
  root["case_fingerprint"] = case_fingerprint;
  root["status"] = status_name(sol.status);
  root["objective"] = sol.objective;
  root["runtime_s"] = sol.runtime_s;
  root["iterations"] = sol.iterations;
  root["residuals"] = {{"primal", sol.residuals.primal}, {"dual", sol.residuals.dual}, {"gap", sol.residuals.gap}};
  json dispatch = json::array();
  for (size_t s = 0; s < net.sources.size() && s < sol.pg.size(); ++s) {
    const auto& src = net.sources[s];
    json phs = json::array();
    for (int ph : src.phases) phs.push_back(std::string(1, static_cast<char>('a' + ph)));
    dispatch.push_back({{"source", s + 1},
                        {"bus", net.buses[static_cast<size_t>(src.bus)].id},
                        {"phases", phs},
                        {"p", sol.pg[s]},
                        {"q", sol.qg[s]}});
  }
  root["dispatch"] = dispatch;
  root["X"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
  json flows = json::object();
  for (size_t k = 0; k < sol.flows.size(); ++k) {
    flows[sol.flows[k].name(phases).substr(4)] = {{"p", sol.flow_p[static_cast<Eigen::Index>(k)]},
                                                  {"q", sol.flow_q[static_cast<Eigen::Index>(k)]}};
  }
  root["flows"] = flows;
  const auto& a = sol.audit;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json low = json::array();
  for (int node : a.low_voltage) {
    const int n = net.bus_count();
    low.push_back(std::to_string(net.buses[static_cast<size_t>(node % n)].id) + phase_suffix(node / n, phases));
  }
  root["audit"] = {{"mean_abs_mismatch", a.mean_abs_mismatch},
                   {"max_abs_balance", a.max_abs_balance},
                   {"low_voltage", low},
                   {"violations", a.violations},
                   {"v_mag", vec(a.v_mag)},
                   {"p_mismatch", vec(a.p_mismatch)},
                   {"q_mismatch", vec(a.q_mismatch)},
                   {"p_balance", vec(a.p_balance)},
                   {"q_balance", vec(a.q_balance)}};
  return root.dump(1) + "\n";
}

}  // namespace ddcqa
