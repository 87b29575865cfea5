#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ddcqa/error.hpp"
#include "ddcqa/opf.hpp"
#include "ddcqa/parallel.hpp"

namespace ddcqa {
namespace {

struct Point {
  bool converged = false;
  bool feasible = false;
  double violation = std::numeric_limits<double>::infinity();
  double slack_violation = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> pg, qg;
  std::vector<double> vset;
  VoltageState state;
};

class Oracle {
public:
  Oracle(const NetworkCase& net, const OracleOptions& opts)
      : net_(net), opts_(opts), y_(build_admittance(net)), loads_(opts.loads ? *opts.loads : LoadProfile::base(net)) {
    net_.validate();
    slack_source_ = -1;
    for (size_t s = 0; s < net_.sources.size(); ++s) {
      if (net_.sources[s].bus == net_.slack_bus()) {
        slack_source_ = static_cast<int>(s);
        break;
      }
    }
    if (slack_source_ < 0) throw ValidationError("no source at the slack bus");
    free_ = opts.free_sources;
    if (free_.empty()) {
      for (int s = 0; s < static_cast<int>(net_.sources.size()); ++s) {
        if (s != slack_source_) free_.push_back(s);
      }
    }
    for (int s : free_) {
      if (s < 0 || s >= static_cast<int>(net_.sources.size())) throw ValidationError("free source out of range");
      if (s == slack_source_) throw ValidationError("the slack source cannot be swept");
      const auto& src = net_.sources[static_cast<size_t>(s)];
      for (size_t k = 0; k < src.phases.size(); ++k) {
        if (!std::isfinite(src.p_min[k]) || !std::isfinite(src.p_max[k])) {
          throw ValidationError("source " + std::to_string(s + 1) + " lacks finite active limits");
        }
      }
    }
    if (free_.size() > 3) {
      throw ValidationError("grid search supports at most 3 dispatch dimensions, got " +
                            std::to_string(free_.size()));
    }
    dims_ = static_cast<int>(free_.size()) + (opts.sweep_voltage ? 1 : 0);
    if (opts.points < 2 && dims_ > 0) throw ValidationError("grid needs at least 2 points per dimension");
    pinned_ = economic_dispatch(net_, loads_);
    base_ = newton_raphson_pf(net_, y_, loads_).state;
    if (opts.repair_voltage) {
      // setpoints that make the economic dispatch feasible, tried first at
      // every grid point
      std::vector<double> vset;
      for (const auto& bus : net_.buses) vset.push_back(bus.v_set);
      Point pt = run(pinned_, vset);
      if (pt.converged && !pt.feasible) pt = repair(pinned_, std::move(pt));
      if (pt.feasible) repaired_base_ = pt.vset;
    }
  }

  int dims() const { return dims_; }
  const std::vector<int>& free_sources() const { return free_; }

  // Power flow at a dispatch and per-bus voltage setpoints; `violation` sums
  // how far the exact quantities fall outside their limits.
  Point run(const std::vector<std::vector<double>>& pset, const std::vector<double>& vset) const {
    NetworkCase c = net_;
    for (size_t s = 0; s < c.sources.size(); ++s) c.sources[s].p_set = pset[s];
    for (size_t b = 0; b < c.buses.size(); ++b) c.buses[b].v_set = vset[b];
    Point pt;
    PowerFlowOptions pf;
    pf.initial = base_;
    PowerFlowResult res;
    try {
      res = newton_raphson_pf(c, y_, loads_, pf);
    } catch (const Error&) {
      try {
        pf.initial.reset();
        res = newton_raphson_pf(c, y_, loads_, pf);
      } catch (const Error&) {
        return pt;
      }
    }
    pt.state = res.state;
    pt.vset = vset;
    const int n = c.bus_count();
    const Injections inj = eval_injections(res.state, y_);
    auto outside = [](double v, double lo, double hi) { return std::max(0.0, std::max(lo - v, v - hi)); };
    pt.pg = pset;
    pt.qg.clear();
    for (const auto& src : c.sources) pt.qg.push_back(src.q_set);
    double viol = 0.0;
    // slack source absorbs the active imbalance at its bus
    {
      const auto& src = c.sources[static_cast<size_t>(slack_source_)];
      for (size_t k = 0; k < src.phases.size(); ++k) {
        const int node = src.phases[k] * n + src.bus;
        double others = 0.0;
        for (size_t s = 0; s < c.sources.size(); ++s) {
          if (static_cast<int>(s) == slack_source_) continue;
          const auto& o = c.sources[s];
          const int slot = o.bus == src.bus ? o.phase_slot(src.phases[k]) : -1;
          if (slot >= 0) others += o.p_set[static_cast<size_t>(slot)];
        }
        const double p = inj.p[node] + loads_.p[node] - others;
        pt.pg[static_cast<size_t>(slack_source_)][k] = p;
        pt.slack_violation += outside(p, src.p_min[k], src.p_max[k]);
      }
      viol += pt.slack_violation;
    }
    // reactive output at voltage-controlled buses, split by a common fraction
    for (int node = 0; node < n * c.phase_count; ++node) {
      const int bus = node % n;
      const int ph = node / n;
      if (c.buses[static_cast<size_t>(bus)].type == BusType::PQ) continue;
      double qmin = 0.0, qmax = 0.0;
      std::vector<std::pair<size_t, int>> at;
      for (size_t s = 0; s < c.sources.size(); ++s) {
        const int slot = c.sources[s].bus == bus ? c.sources[s].phase_slot(ph) : -1;
        if (slot < 0) continue;
        at.emplace_back(s, slot);
        qmin += c.sources[s].q_min[static_cast<size_t>(slot)];
        qmax += c.sources[s].q_max[static_cast<size_t>(slot)];
      }
      if (at.empty()) continue;
      const double q = inj.q[node] + loads_.q[node];
      viol += outside(q, qmin, qmax);
      const double theta = std::clamp(qmax > qmin ? (q - qmin) / (qmax - qmin) : 0.0, 0.0, 1.0);
      for (const auto& [s, slot] : at) {
        const auto& src = c.sources[s];
        const auto k = static_cast<size_t>(slot);
        pt.qg[s][k] = std::isfinite(qmin) && std::isfinite(qmax)
                          ? src.q_min[k] + theta * (src.q_max[k] - src.q_min[k])
                          : q / static_cast<double>(at.size());
      }
    }
    for (int node = 0; node < n * c.phase_count; ++node) {
      const auto& b = c.buses[static_cast<size_t>(node % n)];
      const double v = std::abs(res.state.phasor(node % n, node / n));
      const double vmin = b.v_min > 0.0 ? b.v_min : opts_.default_v_min;
      viol += outside(v, vmin, b.v_max);
    }
    for (int br = 0; br < c.branch_count(); ++br) {
      const auto& branch = c.branches[static_cast<size_t>(br)];
      if (!branch.monitored()) continue;
      const BranchFlows f = eval_line_flows(res.state, y_, br);
      for (int ph = 0; ph < c.phase_count; ++ph) {
        viol += std::max(0.0, std::hypot(f.p_from[ph], f.q_from[ph]) - branch.rate);
        viol += std::max(0.0, std::hypot(f.p_to[ph], f.q_to[ph]) - branch.rate);
      }
    }
    pt.converged = true;
    pt.violation = viol;
    pt.feasible = viol <= opts_.tol;
    if (pt.feasible) pt.cost = dispatch_cost(c, pt.pg, opts_.mode == OpfMode::Distribution);
    return pt;
  }

  // Pattern search on the setpoints of voltage-controlled buses, stopping at
  // the first point without violations.
  Point repair(const std::vector<std::vector<double>>& pset, Point from) const {
    static constexpr double kSteps[] = {0.02, 0.01, 0.005, 0.0025};
    std::vector<int> controlled;
    for (int b = 0; b < net_.bus_count(); ++b) {
      if (net_.buses[static_cast<size_t>(b)].type != BusType::PQ) controlled.push_back(b);
    }
    for (double step : kSteps) {
      for (int sweep = 0; sweep < opts_.repair_sweeps; ++sweep) {
        bool improved = false;
        for (int b : controlled) {
          const auto& bus = net_.buses[static_cast<size_t>(b)];
          const double lo = bus.v_min > 0.0 ? bus.v_min : 0.9;
          const double hi = std::isfinite(bus.v_max) ? bus.v_max : 1.1;
          for (double dir : {1.0, -1.0}) {
            auto v = from.vset;
            v[static_cast<size_t>(b)] = std::clamp(v[static_cast<size_t>(b)] + dir * step, lo, hi);
            if (v == from.vset) continue;
            Point trial = run(pset, v);
            if (trial.converged && trial.violation < from.violation) {
              from = std::move(trial);
              improved = true;
              if (from.feasible) return from;
              break;
            }
          }
        }
        if (!improved) break;
      }
    }
    return from;
  }

  // coordinates in [0, 1] per source dimension, the voltage scale as is
  Point evaluate(const std::vector<double>& coord) const {
    auto pset = pinned_;
    for (size_t d = 0; d < free_.size(); ++d) {
      const auto& src = net_.sources[static_cast<size_t>(free_[d])];
      for (size_t k = 0; k < src.phases.size(); ++k) {
        pset[static_cast<size_t>(free_[d])][k] = src.p_min[k] + coord[d] * (src.p_max[k] - src.p_min[k]);
      }
    }
    std::vector<double> vset;
    for (const auto& bus : net_.buses) vset.push_back(bus.v_set * (opts_.sweep_voltage ? coord.back() : 1.0));
    Point pt = run(pset, vset);
    if (pt.feasible || !opts_.repair_voltage || !pt.converged) return pt;
    if (!repaired_base_.empty() && !opts_.sweep_voltage) {
      Point alt = run(pset, repaired_base_);
      if (alt.feasible) return alt;
      if (alt.converged && alt.violation < pt.violation) pt = std::move(alt);
    }
    // voltages barely move the slack output, so a large shortfall there is final
    if (pt.slack_violation > 1e-2) return pt;
    return repair(pset, std::move(pt));
  }

  // sweeps the box [lo, hi] per dimension; returns the index of the best point
  Point sweep(const std::vector<double>& lo, const std::vector<double>& hi, int& evaluated, int& feasible,
              std::vector<double>& best_coord) const {
    const int per = dims_ == 0 ? 1 : opts_.points;
    int count = 1;
    for (int d = 0; d < dims_; ++d) count *= per;
    std::vector<std::vector<double>> coords(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      int rem = i;
      for (int d = 0; d < dims_; ++d) {
        const int j = rem % per;
        rem /= per;
        const double t = per > 1 ? static_cast<double>(j) / (per - 1) : 0.0;
        coords[static_cast<size_t>(i)].push_back(lo[static_cast<size_t>(d)] +
                                                 t * (hi[static_cast<size_t>(d)] - lo[static_cast<size_t>(d)]));
      }
    }
    std::vector<Point> pts(static_cast<size_t>(count));
    parallel_for(count, opts_.workers, [&](int i) { pts[static_cast<size_t>(i)] = evaluate(coords[static_cast<size_t>(i)]); });
    int best = -1;
    for (int i = 0; i < count; ++i) {
      const auto& p = pts[static_cast<size_t>(i)];
      ++evaluated;
      if (!p.feasible) continue;
      ++feasible;
      if (best < 0 || p.cost < pts[static_cast<size_t>(best)].cost) best = i;
    }
    if (best < 0) return Point{};
    best_coord = coords[static_cast<size_t>(best)];
    return pts[static_cast<size_t>(best)];
  }

  std::vector<double> lower() const {
    std::vector<double> v(free_.size(), 0.0);
    if (opts_.sweep_voltage) v.push_back(opts_.vset_lo);
    return v;
  }
  std::vector<double> upper() const {
    std::vector<double> v(free_.size(), 1.0);
    if (opts_.sweep_voltage) v.push_back(opts_.vset_hi);
    return v;
  }

private:
  NetworkCase net_;
  OracleOptions opts_;
  AdmittanceMatrix y_;
  LoadProfile loads_;
  int slack_source_ = -1;
  std::vector<int> free_;
  int dims_ = 0;
  std::vector<std::vector<double>> pinned_;
  VoltageState base_;
  std::vector<double> repaired_base_;
};

}  // namespace

OracleResult acopf_oracle(const NetworkCase& net, const OracleOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  Oracle oracle(net, opts);
  OracleResult out;
  out.free_sources = oracle.free_sources();
  auto lo = oracle.lower();
  auto hi = oracle.upper();
  std::vector<double> coord;
  Point best = oracle.sweep(lo, hi, out.evaluated, out.feasible, coord);
  if (!best.feasible) throw Error("no feasible grid point");
  if (opts.refine && oracle.dims() > 0) {
    for (int d = 0; d < oracle.dims(); ++d) {
      const auto k = static_cast<size_t>(d);
      const double step = (hi[k] - lo[k]) / (opts.points - 1);
      const double l = std::max(lo[k], coord[k] - step);
      const double h = std::min(hi[k], coord[k] + step);
      lo[k] = l;
      hi[k] = h;
    }
    std::vector<double> fine_coord;
    Point fine = oracle.sweep(lo, hi, out.evaluated, out.feasible, fine_coord);
    if (fine.feasible && fine.cost < best.cost) best = std::move(fine);
  }
  auto& sol = out.solution;
  sol.status = SolveStatus::Optimal;
  sol.pg = best.pg;
  sol.qg = best.qg;
  sol.x = best.state.x;
  sol.objective = best.cost;
  sol.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const LoadProfile loads = opts.loads ? *opts.loads : LoadProfile::base(net);
  sol.audit = feasibility_audit(sol, net, build_admittance(net), {}, loads, opts.default_v_min);
  return out;
}

}  // namespace ddcqa
