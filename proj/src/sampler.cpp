#include "ddcqa/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "ddcqa/error.hpp"
#include "ddcqa/parallel.hpp"
#include "ddcqa/rng.hpp"

namespace ddcqa {

namespace {

constexpr std::uint64_t kScenarioStream = 0x5343454eULL;
constexpr std::uint64_t kSplitStream = 0x53504c54ULL;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_range(double lo, double hi, const char* what) {
  if (!(lo > 0.0) || !(lo <= hi) || !std::isfinite(hi)) {
    throw ValidationError(std::string("invalid ") + what + " range [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
}

}  // namespace

void SamplingOptions::validate() const {
  if (count < 1) throw ValidationError("scenario count must be at least 1");
  check_range(lo, hi, "load multiplier");
  check_range(gen_lo, gen_hi, "dispatch multiplier");
  check_range(vset_lo, vset_hi, "voltage setpoint multiplier");
}

std::vector<Scenario> sample_load_scenarios(const NetworkCase& net, const SamplingOptions& opts) {
  opts.validate();
  const int n = net.bus_count();
  const int gens = static_cast<int>(net.sources.size());
  std::vector<Scenario> out(static_cast<size_t>(opts.count));
  for (int id = 0; id < opts.count; ++id) {
    KeyedStream rng{kScenarioStream, opts.seed, static_cast<std::uint64_t>(id)};
    Scenario& sc = out[static_cast<size_t>(id)];
    sc.id = id;
    if (opts.mode == MultiplierMode::Global) {
      sc.load_mult.assign(static_cast<size_t>(n), rng.uniform(opts.lo, opts.hi));
    } else {
      sc.load_mult.resize(static_cast<size_t>(n));
      for (auto& m : sc.load_mult) m = rng.uniform(opts.lo, opts.hi);
    }
    if (opts.randomizes_dispatch()) {
      sc.gen_mult.resize(static_cast<size_t>(gens));
      for (auto& m : sc.gen_mult) m = rng.uniform(opts.gen_lo, opts.gen_hi);
    }
    if (opts.randomizes_voltage()) {
      sc.vset_mult.resize(static_cast<size_t>(n));
      for (auto& m : sc.vset_mult) m = rng.uniform(opts.vset_lo, opts.vset_hi);
    }
  }
  return out;
}

LoadProfile scenario_loads(const NetworkCase& net, const Scenario& sc) {
  LoadProfile lp = LoadProfile::base(net);
  const int n = net.bus_count();
  if (static_cast<int>(sc.load_mult.size()) != n) throw ValidationError("scenario multiplier count mismatch");
  for (int p = 0; p < net.phase_count; ++p) {
    for (int i = 0; i < n; ++i) {
      lp.p[p * n + i] *= sc.load_mult[static_cast<size_t>(i)];
      lp.q[p * n + i] *= sc.load_mult[static_cast<size_t>(i)];
    }
  }
  return lp;
}

NetworkCase scenario_case(const NetworkCase& net, const Scenario& sc) {
  NetworkCase out = net;
  const int slack = net.slack_bus();
  if (!sc.gen_mult.empty()) {
    if (sc.gen_mult.size() != net.sources.size()) throw ValidationError("scenario dispatch count mismatch");
    for (size_t g = 0; g < out.sources.size(); ++g) {
      auto& src = out.sources[g];
      if (src.bus == slack) continue;
      for (size_t k = 0; k < src.phases.size(); ++k) {
        src.p_set[k] = std::clamp(src.p_set[k] * sc.gen_mult[g], src.p_min[k], src.p_max[k]);
      }
    }
  }
  if (!sc.vset_mult.empty()) {
    if (static_cast<int>(sc.vset_mult.size()) != net.bus_count()) {
      throw ValidationError("scenario setpoint count mismatch");
    }
    for (size_t i = 0; i < out.buses.size(); ++i) {
      auto& bus = out.buses[i];
      if (bus.type == BusType::PQ) continue;
      bus.v_set *= sc.vset_mult[i];
      if (bus.v_set > bus.v_max) bus.v_set = bus.v_max;
      if (bus.v_set < bus.v_min) bus.v_set = bus.v_min;
    }
  }
  return out;
}

std::vector<QuantityId> dataset_targets(const NetworkCase& net) {
  std::vector<QuantityId> ids;
  for (QuantityKind kind : {QuantityKind::P, QuantityKind::Q}) {
    for (int p = 0; p < net.phase_count; ++p) {
      for (int i = 0; i < net.bus_count(); ++i) ids.push_back({kind, i, p});
    }
  }
  for (QuantityKind kind : {QuantityKind::Pij, QuantityKind::Qij, QuantityKind::Pji, QuantityKind::Qji}) {
    for (int p = 0; p < net.phase_count; ++p) {
      for (int b = 0; b < net.branch_count(); ++b) ids.push_back({kind, b, p});
    }
  }
  return ids;
}

int Dataset::target_column(const QuantityId& id) const {
  const auto it = std::find(targets.begin(), targets.end(), id);
  if (it == targets.end()) throw ValidationError("dataset has no column for " + id.name(phase_count));
  return static_cast<int>(it - targets.begin());
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out = *this;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.ids.resize(rows.size());
  out.load_mult.resize(m, load_mult.cols());
  out.gen_mult.resize(m, gen_mult.cols());
  out.vset_mult.resize(m, vset_mult.cols());
  out.x.resize(m, x.cols());
  out.y.resize(m, y.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const int src = rows[static_cast<size_t>(r)];
    if (src < 0 || src >= size()) throw ValidationError("subset row out of range");
    out.ids[static_cast<size_t>(r)] = ids[static_cast<size_t>(src)];
    out.load_mult.row(r) = load_mult.row(src);
    out.gen_mult.row(r) = gen_mult.row(src);
    out.vset_mult.row(r) = vset_mult.row(src);
    out.x.row(r) = x.row(src);
    out.y.row(r) = y.row(src);
  }
  return out;
}

namespace {

Eigen::VectorXd target_values(const VoltageState& st, const AdmittanceMatrix& y, int branches) {
  const auto inj = eval_injections(st, y);
  const int nodes = y.node_count();
  const int phases = y.phase_count;
  Eigen::VectorXd out(2 * nodes + 4 * branches * phases);
  out.head(nodes) = inj.p;
  out.segment(nodes, nodes) = inj.q;
  const Eigen::Index base = 2 * nodes;
  const Eigen::Index stride = static_cast<Eigen::Index>(branches) * phases;
  for (int b = 0; b < branches; ++b) {
    const auto f = eval_line_flows(st, y, b);
    for (int p = 0; p < phases; ++p) {
      const Eigen::Index k = static_cast<Eigen::Index>(p) * branches + b;
      out[base + k] = f.p_from[p];
      out[base + stride + k] = f.q_from[p];
      out[base + 2 * stride + k] = f.p_to[p];
      out[base + 3 * stride + k] = f.q_to[p];
    }
  }
  return out;
}

}  // namespace

Dataset generate_dataset(const NetworkCase& net, const std::vector<Scenario>& scenarios, const SamplingOptions& opts,
                         const GenerateOptions& gen) {
  opts.validate();
  if (scenarios.empty()) throw ValidationError("no scenarios to solve");
  const AdmittanceMatrix y = build_admittance(net);
  PowerFlowOptions base_opts = gen.pf;
  base_opts.initial.reset();
  const VoltageState base_state = newton_raphson_pf(net, y, LoadProfile::base(net), base_opts).state;

  struct Solved {
    std::optional<VoltageState> state;
    double mismatch = 0.0;
  };
  std::vector<Solved> solved(scenarios.size());
  parallel_for(static_cast<int>(scenarios.size()), gen.workers, [&](int k) {
    const Scenario& sc = scenarios[static_cast<size_t>(k)];
    const NetworkCase local = scenario_case(net, sc);
    const LoadProfile loads = scenario_loads(net, sc);
    PowerFlowOptions pf = gen.pf;
    pf.initial = base_state;
    std::optional<PowerFlowResult> res;
    try {
      res = newton_raphson_pf(local, y, loads, pf);
    } catch (const ConvergenceError&) {
    } catch (const NumericError&) {
    }
    if (!res) {
      pf.initial.reset();
      try {
        res = newton_raphson_pf(local, y, loads, pf);
      } catch (const ConvergenceError&) {
      } catch (const NumericError&) {
      }
    }
    if (!res) return;
    // The contract is re-checked from the injections, not taken from the solver loop.
    const double mismatch = pf_mismatch(local, y, loads, res->state);
    if (!(mismatch <= gen.pf.tol)) return;
    solved[static_cast<size_t>(k)] = {std::move(res->state), mismatch};
  });

  Dataset ds;
  ds.case_fingerprint = case_fingerprint(net);
  ds.bus_count = net.bus_count();
  ds.phase_count = net.phase_count;
  ds.branch_count = net.branch_count();
  ds.seed = opts.seed;
  ds.lo = opts.lo;
  ds.hi = opts.hi;
  ds.mode = opts.mode;
  ds.gen_lo = opts.gen_lo;
  ds.gen_hi = opts.gen_hi;
  ds.vset_lo = opts.vset_lo;
  ds.vset_hi = opts.vset_hi;
  ds.pf_tol = gen.pf.tol;
  ds.attempted = static_cast<int>(scenarios.size());
  ds.targets = dataset_targets(net);

  std::vector<int> kept;
  for (size_t k = 0; k < solved.size(); ++k) {
    if (solved[k].state) kept.push_back(static_cast<int>(k));
  }
  ds.dropped = ds.attempted - static_cast<int>(kept.size());
  if (2 * static_cast<int>(kept.size()) < ds.attempted) {
    throw Error("only " + std::to_string(kept.size()) + " of " + std::to_string(ds.attempted) +
                " power-flow scenarios converged");
  }
  const auto m = static_cast<Eigen::Index>(kept.size());
  const int n = net.bus_count();
  const Scenario& first = scenarios.front();
  ds.load_mult.resize(m, n);
  ds.gen_mult.resize(m, static_cast<Eigen::Index>(first.gen_mult.size()));
  ds.vset_mult.resize(m, static_cast<Eigen::Index>(first.vset_mult.size()));
  ds.x.resize(m, net.state_dim());
  ds.y.resize(m, static_cast<Eigen::Index>(ds.targets.size()));
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto k = static_cast<size_t>(kept[static_cast<size_t>(r)]);
    const Scenario& sc = scenarios[k];
    ds.ids.push_back(sc.id);
    for (int i = 0; i < n; ++i) ds.load_mult(r, i) = sc.load_mult[static_cast<size_t>(i)];
    for (Eigen::Index g = 0; g < ds.gen_mult.cols(); ++g) ds.gen_mult(r, g) = sc.gen_mult[static_cast<size_t>(g)];
    for (Eigen::Index i = 0; i < ds.vset_mult.cols(); ++i) ds.vset_mult(r, i) = sc.vset_mult[static_cast<size_t>(i)];
    ds.x.row(r) = solved[k].state->x.transpose();
    ds.y.row(r) = target_values(*solved[k].state, y, net.branch_count()).transpose();
    ds.max_residual = std::max(ds.max_residual, solved[k].mismatch);
  }
  return ds;
}

int minimum_samples(int bus_count, int phase_count) { return (phase_count == 1 ? 2 : 6) * bus_count; }

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie strictly between 0 and 1");
  if (ds.size() == 0) throw ValidationError("cannot split an empty dataset");
  const int m = ds.size();
  std::vector<int> perm(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<size_t>(i)] = i;
  KeyedStream rng{kSplitStream, seed};
  for (int i = m - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  int train_count = static_cast<int>(std::lround(fraction * m));
  train_count = std::clamp(train_count, m > 1 ? 1 : 0, m > 1 ? m - 1 : m);
  std::vector<int> train(perm.begin(), perm.begin() + train_count);
  std::vector<int> test(perm.begin() + train_count, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> column_names(const Dataset& ds) {
  std::vector<std::string> cols{"scenario_id"};
  for (int i = 1; i <= ds.bus_count; ++i) cols.push_back("mult_bus_" + std::to_string(i));
  for (Eigen::Index g = 1; g <= ds.gen_mult.cols(); ++g) cols.push_back("mult_gen_" + std::to_string(g));
  for (Eigen::Index i = 1; i <= ds.vset_mult.cols(); ++i) cols.push_back("mult_vset_" + std::to_string(i));
  const int d = 2 * ds.bus_count * ds.phase_count;
  for (int k = 1; k <= d; ++k) cols.push_back("x_" + std::to_string(k));
  for (const auto& id : ds.targets) cols.push_back(id.name(ds.phase_count));
  return cols;
}

const char* mode_name(MultiplierMode m) { return m == MultiplierMode::Global ? "global" : "per_bus"; }

}  // namespace

std::string render_dataset(const Dataset& ds) {
  std::ostringstream os;
  os << "# case_fingerprint=" << ds.case_fingerprint << "\n";
  os << "# seed=" << ds.seed << "\n";
  os << "# range=" << fmt(ds.lo) << "," << fmt(ds.hi) << "\n";
  os << "# mode=" << mode_name(ds.mode) << "\n";
  os << "# gen_range=" << fmt(ds.gen_lo) << "," << fmt(ds.gen_hi) << "\n";
  os << "# vset_range=" << fmt(ds.vset_lo) << "," << fmt(ds.vset_hi) << "\n";
  os << "# pf_tol=" << fmt(ds.pf_tol) << "\n";
  os << "# max_residual=" << fmt(ds.max_residual) << "\n";
  os << "# attempted=" << ds.attempted << "\n";
  os << "# dropped=" << ds.dropped << "\n";
  os << "# buses=" << ds.bus_count << "\n";
  os << "# phases=" << ds.phase_count << "\n";
  os << "# branches=" << ds.branch_count << "\n";
  const auto cols = column_names(ds);
  for (size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << "\n";
  for (int r = 0; r < ds.size(); ++r) {
    os << ds.ids[static_cast<size_t>(r)];
    for (const Eigen::MatrixXd* block : {&ds.load_mult, &ds.gen_mult, &ds.vset_mult, &ds.x, &ds.y}) {
      for (Eigen::Index c = 0; c < block->cols(); ++c) os << "," << fmt((*block)(r, c));
    }
    os << "\n";
  }
  return os.str();
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << render_dataset(ds);
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

double parse_number(const std::string& s, int line) {
  if (s.empty()) throw ParseError("empty numeric field", line);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError("invalid number '" + s + "'", line);
  return v;
}

std::pair<double, double> parse_pair(const std::string& s, int line) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ParseError("expected 'lo,hi' but found '" + s + "'", line);
  return {parse_number(s.substr(0, comma), line), parse_number(s.substr(comma + 1), line)};
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset parse_dataset(const std::string& text, const NetworkCase* expected, std::vector<std::string>* warnings) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::map<std::string, std::pair<std::string, int>> meta;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      meta[key] = {line.substr(eq + 1), line_no};
      continue;
    }
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw ParseError("missing column header", line_no);
  auto need = [&](const std::string& key) -> const std::pair<std::string, int>& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("missing header field '" + key + "'", 0);
    return it->second;
  };
  auto need_int = [&](const std::string& key) {
    const auto& [v, ln] = need(key);
    return static_cast<int>(parse_number(v, ln));
  };

  Dataset ds;
  ds.case_fingerprint = need("case_fingerprint").first;
  {
    const auto& [v, ln] = need("seed");
    char* end = nullptr;
    ds.seed = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) throw ParseError("invalid seed '" + v + "'", ln);
  }
  std::tie(ds.lo, ds.hi) = parse_pair(need("range").first, need("range").second);
  if (meta.count("mode")) {
    const auto& [v, ln] = meta.at("mode");
    if (v == "global") {
      ds.mode = MultiplierMode::Global;
    } else if (v != "per_bus") {
      throw ParseError("unknown multiplier mode '" + v + "'", ln);
    }
  }
  if (meta.count("gen_range")) std::tie(ds.gen_lo, ds.gen_hi) = parse_pair(meta["gen_range"].first, meta["gen_range"].second);
  if (meta.count("vset_range")) {
    std::tie(ds.vset_lo, ds.vset_hi) = parse_pair(meta["vset_range"].first, meta["vset_range"].second);
  }
  ds.pf_tol = parse_number(need("pf_tol").first, need("pf_tol").second);
  if (meta.count("max_residual")) ds.max_residual = parse_number(meta["max_residual"].first, meta["max_residual"].second);
  if (meta.count("attempted")) ds.attempted = need_int("attempted");
  if (meta.count("dropped")) ds.dropped = need_int("dropped");
  ds.bus_count = need_int("buses");
  ds.phase_count = need_int("phases");
  ds.branch_count = need_int("branches");
  if (ds.bus_count < 1 || (ds.phase_count != 1 && ds.phase_count != 3) || ds.branch_count < 0) {
    throw ParseError("invalid dataset dimensions", 0);
  }
  NetworkCase shape;
  shape.phase_count = ds.phase_count;
  shape.buses.resize(static_cast<size_t>(ds.bus_count));
  shape.branches.resize(static_cast<size_t>(ds.branch_count));
  ds.targets = dataset_targets(shape);

  int gens = 0, vsets = 0;
  for (const auto& h : header) {
    if (h.rfind("mult_gen_", 0) == 0) ++gens;
    if (h.rfind("mult_vset_", 0) == 0) ++vsets;
  }
  ds.gen_mult.resize(0, gens);
  ds.vset_mult.resize(0, vsets);
  const auto expected_cols = column_names(ds);
  if (header != expected_cols) throw ParseError("column header does not match the declared dimensions", line_no);

  const int d = 2 * ds.bus_count * ds.phase_count;
  const auto width = static_cast<Eigen::Index>(expected_cols.size());
  std::vector<std::vector<double>> rows;
  std::vector<int> ids;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row_no;
    const auto fields = split_fields(line);
    if (static_cast<Eigen::Index>(fields.size()) != width) {
      throw ParseError("row " + std::to_string(row_no) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(width),
                       line_no);
    }
    ids.push_back(static_cast<int>(parse_number(fields[0], line_no)));
    std::vector<double> vals(fields.size() - 1);
    for (size_t c = 1; c < fields.size(); ++c) vals[c - 1] = parse_number(fields[c], line_no);
    rows.push_back(std::move(vals));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  ds.ids = ids;
  ds.load_mult.resize(m, ds.bus_count);
  ds.gen_mult.resize(m, gens);
  ds.vset_mult.resize(m, vsets);
  ds.x.resize(m, d);
  ds.y.resize(m, static_cast<Eigen::Index>(ds.targets.size()));
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& v = rows[static_cast<size_t>(r)];
    Eigen::Index c = 0;
    for (Eigen::MatrixXd* block : {&ds.load_mult, &ds.gen_mult, &ds.vset_mult, &ds.x, &ds.y}) {
      for (Eigen::Index k = 0; k < block->cols(); ++k) (*block)(r, k) = v[static_cast<size_t>(c++)];
    }
  }
  if (expected && warnings) {
    const std::string fp = case_fingerprint(*expected);
    if (fp != ds.case_fingerprint) {
      warnings->push_back("dataset was generated from case " + ds.case_fingerprint + " but the supplied case is " + fp);
    }
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path, const NetworkCase* expected,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), expected, warnings);
}

}  // namespace ddcqa
