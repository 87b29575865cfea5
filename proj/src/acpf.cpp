#include "ddcqa/acpf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ddcqa/error.hpp"

namespace ddcqa {

using cd = std::complex<double>;

VoltageState VoltageState::flat(const NetworkCase& net) {
  VoltageState s;
  s.bus_count = net.bus_count();
  s.phase_count = net.phase_count;
  s.x = Eigen::VectorXd::Zero(net.state_dim());
  for (int i = 0; i < s.bus_count; ++i) {
    const auto& bus = net.buses[static_cast<size_t>(i)];
    const double mag = bus.type == BusType::PQ ? 1.0 : bus.v_set;
    for (int p = 0; p < s.phase_count; ++p) {
      const cd v = std::polar(mag, phase_angle(p));
      s.x[s.e_index(i, p)] = v.real();
      s.x[s.f_index(i, p)] = p == 0 ? 0.0 : v.imag();
    }
  }
  return s;
}

Eigen::VectorXcd VoltageState::phasors() const {
  const int nodes = bus_count * phase_count;
  Eigen::VectorXcd v(nodes);
  for (int k = 0; k < nodes; ++k) v[k] = cd(x[2 * k], x[2 * k + 1]);
  return v;
}

std::string kind_prefix(QuantityKind kind) {
  switch (kind) {
    case QuantityKind::P: return "p";
    case QuantityKind::Q: return "q";
    case QuantityKind::Pij: return "pij";
    case QuantityKind::Qij: return "qij";
    case QuantityKind::Pji: return "pji";
    case QuantityKind::Qji: return "qji";
  }
  return "p";
}

std::string QuantityId::name(int phase_count) const {
  std::string s = kind_prefix(kind) + "_" + std::to_string(element + 1);
  if (phase_count > 1) s += static_cast<char>('a' + phase);
  return s;
}

QuantityId QuantityId::parse(const std::string& name) {
  const auto us = name.find('_');
  if (us == std::string::npos || us + 1 >= name.size()) throw ValidationError("invalid quantity id '" + name + "'");
  const std::string prefix = name.substr(0, us);
  QuantityId id;
  static const std::map<std::string, QuantityKind> kinds = {
      {"p", QuantityKind::P},     {"q", QuantityKind::Q},     {"pij", QuantityKind::Pij},
      {"qij", QuantityKind::Qij}, {"pji", QuantityKind::Pji}, {"qji", QuantityKind::Qji}};
  const auto it = kinds.find(prefix);
  if (it == kinds.end()) throw ValidationError("invalid quantity id '" + name + "'");
  id.kind = it->second;
  std::string rest = name.substr(us + 1);
  id.phase = 0;
  if (!rest.empty() && rest.back() >= 'a' && rest.back() <= 'c') {
    id.phase = rest.back() - 'a';
    rest.pop_back();
  }
  if (rest.empty() || !std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ValidationError("invalid quantity id '" + name + "'");
  }
  id.element = std::stoi(rest) - 1;
  if (id.element < 0) throw ValidationError("invalid quantity id '" + name + "'");
  return id;
}

namespace {

void check_dims(const VoltageState& state, const AdmittanceMatrix& y) {
  if (state.x.size() != 2 * y.node_count() || state.bus_count != y.bus_count || state.phase_count != y.phase_count) {
    throw ValidationError("voltage state dimension does not match the admittance matrix");
  }
}

}  // namespace

Injections eval_injections(const VoltageState& state, const AdmittanceMatrix& y) {
  check_dims(state, y);
  const Eigen::VectorXcd v = state.phasors();
  const Eigen::VectorXcd i = y.y * v;
  const Eigen::VectorXcd s = v.cwiseProduct(i.conjugate());
  return {s.real(), s.imag()};
}

BranchFlows eval_line_flows(const VoltageState& state, const AdmittanceMatrix& y, int branch) {
  check_dims(state, y);
  if (branch < 0 || branch >= static_cast<int>(y.branches.size())) throw ValidationError("invalid branch index");
  const auto& ba = y.branches[static_cast<size_t>(branch)];
  const int phases = y.phase_count;
  Eigen::VectorXcd vf(phases), vt(phases);
  for (int p = 0; p < phases; ++p) {
    vf[p] = state.phasor(ba.from, p);
    vt[p] = state.phasor(ba.to, p);
  }
  const Eigen::VectorXcd sf = vf.cwiseProduct((ba.ff * vf + ba.ft * vt).conjugate());
  const Eigen::VectorXcd st = vt.cwiseProduct((ba.tf * vf + ba.tt * vt).conjugate());
  return {sf.real(), sf.imag(), st.real(), st.imag()};
}

double eval_quantity(const VoltageState& state, const AdmittanceMatrix& y, const QuantityId& id) {
  if (id.is_injection()) {
    const auto inj = eval_injections(state, y);
    const int node = y.node(id.element, id.phase);
    return id.kind == QuantityKind::P ? inj.p[node] : inj.q[node];
  }
  const auto f = eval_line_flows(state, y, id.element);
  switch (id.kind) {
    case QuantityKind::Pij: return f.p_from[id.phase];
    case QuantityKind::Qij: return f.q_from[id.phase];
    case QuantityKind::Pji: return f.p_to[id.phase];
    default: return f.q_to[id.phase];
  }
}

// ---------------------------------------------------------------------------
// Quadratic forms

double LocalQuadratic::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd xl(static_cast<Eigen::Index>(vars.size()));
  for (size_t k = 0; k < vars.size(); ++k) xl[static_cast<Eigen::Index>(k)] = x[vars[k]];
  return xl.dot(m * xl);
}

Eigen::MatrixXd LocalQuadratic::dense(int dim) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  for (size_t a = 0; a < vars.size(); ++a) {
    for (size_t b = 0; b < vars.size(); ++b) {
      out(vars[a], vars[b]) = m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

namespace {

/// Accumulates S = V_r * conj(sum_c Y_rc V_c) as a quadratic form.
class FormBuilder {
public:
  explicit FormBuilder(bool active) : active_(active) {}

  void add(int row_node, int col_node, cd yrc) {
    const int a = 2 * row_node, b = a + 1;  // e_r, f_r
    const int e = 2 * col_node, f = e + 1;  // e_c, f_c
    const double g = yrc.real(), s = yrc.imag();
    if (active_) {
      // P = e_r (G e_c - B f_c) + f_r (G f_c + B e_c)
      term(a, e, g);
      term(a, f, -s);
      term(b, f, g);
      term(b, e, s);
    } else {
      // Q = f_r (G e_c - B f_c) - e_r (G f_c + B e_c)
      term(b, e, g);
      term(b, f, -s);
      term(a, f, -g);
      term(a, e, -s);
    }
  }

  LocalQuadratic finish() const {
    LocalQuadratic lq;
    std::map<int, int> local;
    for (const auto& [key, coef] : coef_) {
      local.emplace(key.first, 0);
      local.emplace(key.second, 0);
    }
    int k = 0;
    for (auto& [global, idx] : local) {
      idx = k++;
      lq.vars.push_back(global);
    }
    lq.m = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [key, coef] : coef_) {
      const int u = local.at(key.first), v = local.at(key.second);
      lq.m(u, v) += 0.5 * coef;
      lq.m(v, u) += 0.5 * coef;
      lq.structure.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(lq.structure.begin(), lq.structure.end());
    lq.structure.erase(std::unique(lq.structure.begin(), lq.structure.end()), lq.structure.end());
    return lq;
  }

private:
  void term(int u, int v, double c) { coef_[{std::min(u, v), std::max(u, v)}] += c; }

  bool active_;
  std::map<std::pair<int, int>, double> coef_;
};

}  // namespace

LocalQuadratic injection_matrix(const QuantityId& id, const AdmittanceMatrix& y) {
  const int phases = y.phase_count;
  if (id.phase < 0 || id.phase >= phases) throw ValidationError("invalid target phase");
  FormBuilder fb(id.is_active());
  if (id.is_injection()) {
    if (id.element < 0 || id.element >= y.bus_count) throw ValidationError("invalid target bus");
    const int r = y.node(id.element, id.phase);
    for (int c = 0; c < y.node_count(); ++c) {
      if (y.y(r, c) != cd(0.0, 0.0) || c == r) fb.add(r, c, y.y(r, c));
    }
    return fb.finish();
  }
  if (id.element < 0 || id.element >= static_cast<int>(y.branches.size())) {
    throw ValidationError("invalid target branch");
  }
  const auto& ba = y.branches[static_cast<size_t>(id.element)];
  const bool from_side = id.kind == QuantityKind::Pij || id.kind == QuantityKind::Qij;
  const int own_bus = from_side ? ba.from : ba.to;
  const Eigen::MatrixXcd& self = from_side ? ba.ff : ba.tt;
  const Eigen::MatrixXcd& mutual = from_side ? ba.ft : ba.tf;
  const int other_bus = from_side ? ba.to : ba.from;
  const int r = y.node(own_bus, id.phase);
  for (int g = 0; g < phases; ++g) {
    if (self(id.phase, g) != cd(0.0, 0.0) || g == id.phase) fb.add(r, y.node(own_bus, g), self(id.phase, g));
    if (mutual(id.phase, g) != cd(0.0, 0.0) || g == id.phase) fb.add(r, y.node(other_bus, g), mutual(id.phase, g));
  }
  return fb.finish();
}

// ---------------------------------------------------------------------------
// Newton-Raphson

LoadProfile LoadProfile::base(const NetworkCase& net) {
  const int n = net.bus_count();
  LoadProfile lp;
  lp.p = Eigen::VectorXd::Zero(n * net.phase_count);
  lp.q = Eigen::VectorXd::Zero(n * net.phase_count);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < net.phase_count; ++p) {
      lp.p[p * n + i] = net.buses[static_cast<size_t>(i)].p_load[static_cast<size_t>(p)];
      lp.q[p * n + i] = net.buses[static_cast<size_t>(i)].q_load[static_cast<size_t>(p)];
    }
  }
  return lp;
}

Eigen::VectorXd scheduled_generation(const NetworkCase& net, bool reactive) {
  const int n = net.bus_count();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n * net.phase_count);
  for (const auto& src : net.sources) {
    for (size_t k = 0; k < src.phases.size(); ++k) {
      g[src.phases[k] * n + src.bus] += reactive ? src.q_set[k] : src.p_set[k];
    }
  }
  return g;
}

namespace {

enum class NodeRole { Slack, PV, PQ };

struct Equations {
  std::vector<NodeRole> role;   // per node
  std::vector<int> unknown;     // per node: offset of (e, f) in the unknown vector, -1 for slack
  Eigen::VectorXd p_spec, q_spec, v2_spec;
  int size = 0;
};

Equations setup(const NetworkCase& net, const LoadProfile& loads, const std::vector<bool>& pv_as_pq,
                const Eigen::VectorXd& q_fixed) {
  const int n = net.bus_count();
  const int nodes = n * net.phase_count;
  Equations eq;
  eq.role.resize(static_cast<size_t>(nodes));
  eq.unknown.assign(static_cast<size_t>(nodes), -1);
  eq.p_spec = scheduled_generation(net, false) - loads.p;
  eq.q_spec = scheduled_generation(net, true) - loads.q;
  eq.v2_spec = Eigen::VectorXd::Zero(nodes);
  int next = 0;
  for (int p = 0; p < net.phase_count; ++p) {
    for (int i = 0; i < n; ++i) {
      const int node = p * n + i;
      const auto& bus = net.buses[static_cast<size_t>(i)];
      NodeRole role = bus.type == BusType::Slack ? NodeRole::Slack
                      : bus.type == BusType::PV  ? NodeRole::PV
                                                 : NodeRole::PQ;
      if (role == NodeRole::PV && pv_as_pq[static_cast<size_t>(node)]) {
        role = NodeRole::PQ;
        eq.q_spec[node] = q_fixed[node] - loads.q[node];
      }
      eq.role[static_cast<size_t>(node)] = role;
      eq.v2_spec[node] = bus.v_set * bus.v_set;
      if (role != NodeRole::Slack) {
        eq.unknown[static_cast<size_t>(node)] = next;
        next += 2;
      }
    }
  }
  eq.size = next;
  return eq;
}

Eigen::VectorXd residual(const Equations& eq, const VoltageState& st, const Eigen::VectorXcd& v,
                         const Eigen::VectorXcd& s) {
  Eigen::VectorXd r(eq.size);
  for (size_t node = 0; node < eq.role.size(); ++node) {
    const int u = eq.unknown[node];
    if (u < 0) continue;
    const auto k = static_cast<Eigen::Index>(node);
    r[u] = eq.p_spec[k] - s[k].real();
    r[u + 1] = eq.role[node] == NodeRole::PQ ? eq.q_spec[k] - s[k].imag() : eq.v2_spec[k] - std::norm(v[k]);
  }
  (void)st;
  return r;
}

void fix_slack(const NetworkCase& net, VoltageState& st) {
  const int slack = net.slack_bus();
  const double mag = net.buses[static_cast<size_t>(slack)].v_set;
  for (int p = 0; p < net.phase_count; ++p) {
    const cd v = std::polar(mag, phase_angle(p));
    st.x[st.e_index(slack, p)] = v.real();
    st.x[st.f_index(slack, p)] = p == 0 ? 0.0 : v.imag();
  }
}

/// Runs Newton iterations on a fixed equation set. Returns the iteration count.
int iterate(const NetworkCase& net, const AdmittanceMatrix& y, const Equations& eq, const PowerFlowOptions& opts,
            VoltageState& st, double& mismatch) {
  const int nodes = y.node_count();
  Eigen::MatrixXd jac(eq.size, eq.size);
  auto evaluate = [&](Eigen::VectorXcd& v, Eigen::VectorXcd& current, Eigen::VectorXcd& s) {
    v = st.phasors();
    current = y.y * v;
    s = v.cwiseProduct(current.conjugate());
  };
  Eigen::VectorXcd v, current, s;
  evaluate(v, current, s);
  Eigen::VectorXd r = residual(eq, st, v, s);
  mismatch = eq.size ? r.lpNorm<Eigen::Infinity>() : 0.0;
  int iter = 0;
  bool polished = !opts.polish;
  const cd j(0.0, 1.0);
  while (mismatch > opts.tol || !polished) {
    if (mismatch <= opts.tol) polished = true;
    if (iter >= opts.max_iter) {
      throw ConvergenceError("power flow did not converge in " + std::to_string(opts.max_iter) +
                                 " iterations (mismatch " + std::to_string(mismatch) + ")",
                             iter, mismatch);
    }
    ++iter;
    jac.setZero();
    for (int k = 0; k < nodes; ++k) {
      const int row = eq.unknown[static_cast<size_t>(k)];
      if (row < 0) continue;
      const bool pq = eq.role[static_cast<size_t>(k)] == NodeRole::PQ;
      const cd ick = std::conj(current[k]);
      for (int m = 0; m < nodes; ++m) {
        const int col = eq.unknown[static_cast<size_t>(m)];
        if (col < 0) continue;
        const cd ykm = y.y(k, m);
        if (ykm == cd(0.0, 0.0) && m != k) continue;
        // dS_k/de_m and dS_k/df_m; residuals are spec - calc, so J = d(calc).
        cd dse = v[k] * std::conj(ykm);
        cd dsf = -j * v[k] * std::conj(ykm);
        if (m == k) {
          dse += ick;
          dsf += j * ick;
        }
        jac(row, col) = dse.real();
        jac(row, col + 1) = dsf.real();
        if (pq) {
          jac(row + 1, col) = dse.imag();
          jac(row + 1, col + 1) = dsf.imag();
        }
      }
      if (!pq) {
        jac(row + 1, row) = 2.0 * v[k].real();
        jac(row + 1, row + 1) = 2.0 * v[k].imag();
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14)) throw NumericError("singular power-flow Jacobian");
    const Eigen::VectorXd dx = lu.solve(r);
    if (!dx.allFinite()) throw NumericError("singular power-flow Jacobian");
    const Eigen::VectorXd x_prev = st.x;
    for (int k = 0; k < nodes; ++k) {
      const int u = eq.unknown[static_cast<size_t>(k)];
      if (u < 0) continue;
      st.x[2 * k] += dx[u];
      st.x[2 * k + 1] += dx[u + 1];
    }
    evaluate(v, current, s);
    r = residual(eq, st, v, s);
    const double next = r.lpNorm<Eigen::Infinity>();
    if (polished && next > mismatch) {
      // The polishing step made things worse at round-off level; undo it.
      st.x = x_prev;
      break;
    }
    mismatch = next;
    if (!std::isfinite(mismatch)) {
      throw ConvergenceError("power flow diverged", iter, mismatch);
    }
  }
  (void)net;
  return iter;
}

}  // namespace

double pf_mismatch(const NetworkCase& net, const AdmittanceMatrix& y, const LoadProfile& loads,
                   const VoltageState& state) {
  const int nodes = y.node_count();
  const Equations eq = setup(net, loads, std::vector<bool>(static_cast<size_t>(nodes), false),
                             Eigen::VectorXd::Zero(nodes));
  const auto inj = eval_injections(state, y);
  const Eigen::VectorXcd v = state.phasors();
  double worst = 0.0;
  for (int k = 0; k < nodes; ++k) {
    if (eq.unknown[static_cast<size_t>(k)] < 0) continue;
    worst = std::max(worst, std::abs(eq.p_spec[k] - inj.p[k]));
    const double second = eq.role[static_cast<size_t>(k)] == NodeRole::PQ ? eq.q_spec[k] - inj.q[k]
                                                                          : eq.v2_spec[k] - std::norm(v[k]);
    worst = std::max(worst, std::abs(second));
  }
  return worst;
}

PowerFlowResult newton_raphson_pf(const NetworkCase& net, const AdmittanceMatrix& y, const LoadProfile& loads,
                                  const PowerFlowOptions& opts) {
  const int nodes = y.node_count();
  if (loads.p.size() != nodes || loads.q.size() != nodes) throw ValidationError("load profile size mismatch");
  if (!loads.p.allFinite() || !loads.q.allFinite()) throw ValidationError("loads must be finite");

  VoltageState st = opts.initial ? *opts.initial : VoltageState::flat(net);
  if (st.dim() != net.state_dim()) throw ValidationError("initial state dimension mismatch");
  fix_slack(net, st);

  std::vector<bool> pv_as_pq(static_cast<size_t>(nodes), false);
  Eigen::VectorXd q_fixed = Eigen::VectorXd::Zero(nodes);
  PowerFlowResult res;
  int total_iter = 0;
  for (int round = 0;; ++round) {
    const Equations eq = setup(net, loads, pv_as_pq, q_fixed);
    double mismatch = 0.0;
    total_iter += iterate(net, y, eq, opts, st, mismatch);
    res.mismatch = mismatch;
    if (!opts.enforce_q_limits || round > nodes) break;

    // Switch PV nodes whose reactive output leaves the aggregated limits.
    const auto inj = eval_injections(st, y);
    bool changed = false;
    const int n = net.bus_count();
    for (int p = 0; p < net.phase_count; ++p) {
      for (int i = 0; i < n; ++i) {
        const int node = p * n + i;
        if (net.buses[static_cast<size_t>(i)].type != BusType::PV || pv_as_pq[static_cast<size_t>(node)]) continue;
        double qmin = 0.0, qmax = 0.0;
        for (const auto& src : net.sources) {
          const int slot = src.phase_slot(p);
          if (src.bus != i || slot < 0) continue;
          qmin += src.q_min[static_cast<size_t>(slot)];
          qmax += src.q_max[static_cast<size_t>(slot)];
        }
        const double qgen = inj.q[node] + loads.q[node];
        if (qgen > qmax || qgen < qmin) {
          pv_as_pq[static_cast<size_t>(node)] = true;
          q_fixed[node] = qgen > qmax ? qmax : qmin;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  res.state = std::move(st);
  res.iterations = total_iter;
  return res;
}

}  // namespace ddcqa
