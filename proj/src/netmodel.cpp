#include "ddcqa/netmodel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddcqa/error.hpp"

namespace ddcqa {

using json = nlohmann::ordered_json;
using cd = std::complex<double>;

int Source::phase_slot(int phase) const {
  for (size_t k = 0; k < phases.size(); ++k) {
    if (phases[k] == phase) return static_cast<int>(k);
  }
  return -1;
}

int NetworkCase::slack_bus() const {
  for (int i = 0; i < bus_count(); ++i) {
    if (buses[static_cast<size_t>(i)].type == BusType::Slack) return i;
  }
  throw ValidationError("case has no slack bus");
}

int NetworkCase::bus_position(int id) const {
  for (int i = 0; i < bus_count(); ++i) {
    if (buses[static_cast<size_t>(i)].id == id) return i;
  }
  throw ValidationError("reference to nonexistent bus " + std::to_string(id));
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void require_size(const std::vector<double>& v, size_t n, const std::string& what) {
  require(v.size() == n, what + ": expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
}

}  // namespace

void NetworkCase::validate() const {
  require(base_mva > 0.0 && std::isfinite(base_mva), "base_mva must be positive");
  require(phase_count == 1 || phase_count == 3, "phase_count must be 1 or 3");
  require(!buses.empty(), "case has no buses");
  const auto phases = static_cast<size_t>(phase_count);

  std::set<int> ids;
  int slack_count = 0;
  for (const auto& bus : buses) {
    const std::string tag = "bus " + std::to_string(bus.id);
    require(ids.insert(bus.id).second, "duplicate bus id " + std::to_string(bus.id));
    if (bus.type == BusType::Slack) ++slack_count;
    require_size(bus.p_load, phases, tag + " p_load");
    for (size_t p = 0; p < bus.p_load.size(); ++p) {
      require(std::isfinite(bus.p_load[p]) && std::isfinite(bus.q_load.size() > p ? bus.q_load[p] : 0.0),
              tag + ": loads must be finite");
    }
    require_size(bus.q_load, phases, tag + " q_load");
    require_size(bus.g_shunt, phases, tag + " g_shunt");
    require_size(bus.b_shunt, phases, tag + " b_shunt");
    require(bus.v_set > 0.0 && std::isfinite(bus.v_set), tag + ": voltage setpoint must be positive");
    require(!std::isnan(bus.v_max) && !std::isnan(bus.v_min) && bus.v_min <= bus.v_max,
            tag + ": voltage limits out of order");
  }
  if (slack_count == 0) throw ValidationError("case has no slack bus");
  require(slack_count == 1, "case has " + std::to_string(slack_count) + " slack buses, expected exactly one");

  for (size_t k = 0; k < branches.size(); ++k) {
    const auto& br = branches[k];
    const std::string tag = "branch " + std::to_string(k + 1);
    require(br.from >= 0 && br.from < bus_count() && br.to >= 0 && br.to < bus_count(),
            tag + " references a nonexistent bus");
    require(br.from != br.to, tag + " is a self loop");
    require(br.z.size() == phases * phases, tag + ": impedance block has wrong size");
    require(br.tap > 0.0 && std::isfinite(br.tap), tag + ": tap ratio must be positive");
    require(phase_count == 1 || br.tap == 1.0, tag + ": off-nominal taps are single-phase only");
    require(!std::isnan(br.rate) && br.rate > 0.0, tag + ": rating must be positive or unbounded");
    for (int r = 0; r < phase_count; ++r) {
      for (int c = 0; c < r; ++c) {
        require(br.z_at(r, c, phase_count) == br.z_at(c, r, phase_count),
                tag + ": phase impedance matrix is not symmetric");
      }
    }
  }

  for (size_t k = 0; k < sources.size(); ++k) {
    const auto& src = sources[k];
    const std::string tag = "source " + std::to_string(k + 1);
    require(src.bus >= 0 && src.bus < bus_count(), tag + " references a nonexistent bus");
    require(!src.phases.empty() && src.phases.size() <= phases, tag + ": bad phase set");
    std::set<int> seen;
    for (int ph : src.phases) {
      require(ph >= 0 && ph < phase_count && seen.insert(ph).second, tag + ": bad phase set");
    }
    const size_t np = src.phases.size();
    require_size(src.p_set, np, tag + " p_set");
    require_size(src.q_set, np, tag + " q_set");
    require_size(src.p_min, np, tag + " p_min");
    require_size(src.p_max, np, tag + " p_max");
    require_size(src.q_min, np, tag + " q_min");
    require_size(src.q_max, np, tag + " q_max");
    for (size_t p = 0; p < np; ++p) {
      require(!std::isnan(src.p_min[p]) && !std::isnan(src.p_max[p]) && src.p_min[p] <= src.p_max[p],
              tag + ": p_min exceeds p_max");
      require(!std::isnan(src.q_min[p]) && !std::isnan(src.q_max[p]) && src.q_min[p] <= src.q_max[p],
              tag + ": q_min exceeds q_max");
    }
    require(std::isfinite(src.cost.c0) && std::isfinite(src.cost.c1) && std::isfinite(src.cost.c2),
            tag + ": cost coefficients must be finite");
    if (src.pf_min) require(*src.pf_min > 0.0 && *src.pf_min <= 1.0, tag + ": power factor floor must lie in (0, 1]");
  }
}

// ---------------------------------------------------------------------------
// JSON case format

namespace {

const char* kPhaseNames[] = {"a", "b", "c"};

const char* bus_type_name(BusType t) {
  switch (t) {
    case BusType::Slack: return "slack";
    case BusType::PV: return "pv";
    case BusType::PQ: return "pq";
  }
  return "pq";
}

json limit_to_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

json vec_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(limit_to_json(x));
  return out;
}

[[noreturn]] void schema_error(const std::string& what) { throw ParseError("schema violation: " + what, 0); }

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(std::string("missing key '") + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& what, double null_value) {
  if (v.is_null()) return null_value;
  if (!v.is_number()) schema_error(what + " must be a number");
  return v.get<double>();
}

double opt_number(const json& obj, const char* key, double fallback, double null_value) {
  if (!obj.contains(key)) return fallback;
  return number(obj.at(key), key, null_value);
}

std::vector<double> number_array(const json& obj, const char* key, size_t n, double null_value, bool required,
                                 double fallback = 0.0) {
  if (!obj.contains(key)) {
    if (required) schema_error(std::string("missing key '") + key + "'");
    return std::vector<double>(n, fallback);
  }
  const json& arr = obj.at(key);
  if (!arr.is_array() || arr.size() != n) {
    schema_error(std::string("'") + key + "' must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(number(v, key, null_value));
  return out;
}

int phase_from_json(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    for (int k = 0; k < 3; ++k) {
      if (s == kPhaseNames[k]) return k;
    }
  }
  schema_error("phases must be drawn from \"a\", \"b\", \"c\"");
}

}  // namespace

std::string render_json(const NetworkCase& net) {
  json root;
  root["name"] = net.name;
  root["base_mva"] = net.base_mva;
  root["phase_count"] = net.phase_count;

  json buses = json::array();
  for (const auto& bus : net.buses) {
    json b;
    b["id"] = bus.id;
    b["type"] = bus_type_name(bus.type);
    b["p_load"] = vec_to_json(bus.p_load);
    b["q_load"] = vec_to_json(bus.q_load);
    b["g_shunt"] = vec_to_json(bus.g_shunt);
    b["b_shunt"] = vec_to_json(bus.b_shunt);
    b["v_set"] = bus.v_set;
    b["v_max"] = limit_to_json(bus.v_max);
    b["v_min"] = limit_to_json(bus.v_min);
    buses.push_back(std::move(b));
  }
  root["buses"] = std::move(buses);

  json branches = json::array();
  for (const auto& br : net.branches) {
    json b;
    b["from"] = net.buses[static_cast<size_t>(br.from)].id;
    b["to"] = net.buses[static_cast<size_t>(br.to)].id;
    json z = json::array();
    for (int r = 0; r < net.phase_count; ++r) {
      json row = json::array();
      for (int c = 0; c < net.phase_count; ++c) {
        const auto v = br.z_at(r, c, net.phase_count);
        row.push_back(json::array({v.real(), v.imag()}));
      }
      z.push_back(std::move(row));
    }
    b["z_phase"] = std::move(z);
    b["b_charge"] = br.b_charge;
    b["rate"] = limit_to_json(br.rate);
    b["tap"] = br.tap;
    branches.push_back(std::move(b));
  }
  root["branches"] = std::move(branches);

  json sources = json::array();
  for (const auto& src : net.sources) {
    json s;
    s["bus"] = net.buses[static_cast<size_t>(src.bus)].id;
    json phases = json::array();
    for (int ph : src.phases) phases.push_back(kPhaseNames[ph]);
    s["phases"] = std::move(phases);
    s["p_set"] = vec_to_json(src.p_set);
    s["q_set"] = vec_to_json(src.q_set);
    s["p_min"] = vec_to_json(src.p_min);
    s["p_max"] = vec_to_json(src.p_max);
    s["q_min"] = vec_to_json(src.q_min);
    s["q_max"] = vec_to_json(src.q_max);
    s["cost"] = json{{"c0", src.cost.c0}, {"c1", src.cost.c1}, {"c2", src.cost.c2}};
    s["pf_min"] = src.pf_min ? json(*src.pf_min) : json(nullptr);
    sources.push_back(std::move(s));
  }
  root["sources"] = std::move(sources);
  return root.dump(2) + "\n";
}

NetworkCase parse_json_case(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  if (!root.is_object()) schema_error("top level must be an object");

  NetworkCase net;
  net.name = root.contains("name") && root["name"].is_string() ? root["name"].get<std::string>() : "";
  net.base_mva = number(field(root, "base_mva"), "base_mva", kUnbounded);
  const json& pc = field(root, "phase_count");
  if (!pc.is_number_integer()) schema_error("phase_count must be an integer");
  net.phase_count = pc.get<int>();
  if (net.phase_count != 1 && net.phase_count != 3) schema_error("phase_count must be 1 or 3");
  const auto phases = static_cast<size_t>(net.phase_count);

  const json& buses = field(root, "buses");
  if (!buses.is_array()) schema_error("'buses' must be an array");
  for (const auto& b : buses) {
    Bus bus;
    const json& id = field(b, "id");
    if (!id.is_number_integer()) schema_error("bus id must be an integer");
    bus.id = id.get<int>();
    const json& type = field(b, "type");
    const auto t = type.is_string() ? type.get<std::string>() : std::string();
    if (t == "slack") {
      bus.type = BusType::Slack;
    } else if (t == "pv") {
      bus.type = BusType::PV;
    } else if (t == "pq") {
      bus.type = BusType::PQ;
    } else {
      schema_error("bus type must be \"slack\", \"pv\" or \"pq\"");
    }
    bus.p_load = number_array(b, "p_load", phases, kUnbounded, false);
    bus.q_load = number_array(b, "q_load", phases, kUnbounded, false);
    bus.g_shunt = number_array(b, "g_shunt", phases, kUnbounded, false);
    bus.b_shunt = number_array(b, "b_shunt", phases, kUnbounded, false);
    bus.v_set = opt_number(b, "v_set", 1.0, kUnbounded);
    bus.v_max = opt_number(b, "v_max", kUnbounded, kUnbounded);
    bus.v_min = opt_number(b, "v_min", 0.0, 0.0);
    net.buses.push_back(std::move(bus));
  }

  auto position = [&](const json& v) {
    if (!v.is_number_integer()) schema_error("bus references must be integers");
    return net.bus_position(v.get<int>());
  };

  const json& branches = field(root, "branches");
  if (!branches.is_array()) schema_error("'branches' must be an array");
  for (const auto& b : branches) {
    Branch br;
    br.from = position(field(b, "from"));
    br.to = position(field(b, "to"));
    const json& z = field(b, "z_phase");
    if (!z.is_array() || z.size() != phases) schema_error("'z_phase' must be a phase_count x phase_count array");
    for (const auto& row : z) {
      if (!row.is_array() || row.size() != phases) {
        schema_error("'z_phase' must be a phase_count x phase_count array");
      }
      for (const auto& entry : row) {
        if (!entry.is_array() || entry.size() != 2) schema_error("'z_phase' entries must be [r, x] pairs");
        br.z.emplace_back(number(entry[0], "r", kUnbounded), number(entry[1], "x", kUnbounded));
      }
    }
    br.b_charge = opt_number(b, "b_charge", 0.0, 0.0);
    br.rate = opt_number(b, "rate", kUnbounded, kUnbounded);
    br.tap = opt_number(b, "tap", 1.0, 1.0);
    net.branches.push_back(std::move(br));
  }

  const json& sources = field(root, "sources");
  if (!sources.is_array()) schema_error("'sources' must be an array");
  for (const auto& s : sources) {
    Source src;
    src.bus = position(field(s, "bus"));
    const json& ph = field(s, "phases");
    if (!ph.is_array() || ph.empty()) schema_error("'phases' must be a non-empty array");
    for (const auto& p : ph) src.phases.push_back(phase_from_json(p));
    const size_t np = src.phases.size();
    src.p_set = number_array(s, "p_set", np, kUnbounded, false);
    src.q_set = number_array(s, "q_set", np, kUnbounded, false);
    src.p_min = number_array(s, "p_min", np, -kUnbounded, true);
    src.p_max = number_array(s, "p_max", np, kUnbounded, true);
    src.q_min = number_array(s, "q_min", np, -kUnbounded, false, -kUnbounded);
    src.q_max = number_array(s, "q_max", np, kUnbounded, false, kUnbounded);
    if (s.contains("cost")) {
      const json& c = s.at("cost");
      src.cost.c0 = opt_number(c, "c0", 0.0, 0.0);
      src.cost.c1 = opt_number(c, "c1", 0.0, 0.0);
      src.cost.c2 = opt_number(c, "c2", 0.0, 0.0);
    }
    if (s.contains("pf_min") && !s.at("pf_min").is_null()) src.pf_min = number(s.at("pf_min"), "pf_min", 1.0);
    net.sources.push_back(std::move(src));
  }

  net.validate();
  return net;
}

NetworkCase load_case(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open case file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  NetworkCase net = path.extension() == ".m" ? parse_matpower_case(text, warnings) : parse_json_case(text);
  if (net.name.empty()) net.name = path.stem().string();
  return net;
}

NetworkCase balanced_three_phase(const NetworkCase& net) {
  if (net.phase_count != 1) throw ValidationError("balanced_three_phase expects a single-phase case");
  auto triple = [](const std::vector<double>& v) { return std::vector<double>(3, v.at(0)); };
  NetworkCase out = net;
  out.phase_count = 3;
  for (auto& bus : out.buses) {
    bus.p_load = triple(bus.p_load);
    bus.q_load = triple(bus.q_load);
    bus.g_shunt = triple(bus.g_shunt);
    bus.b_shunt = triple(bus.b_shunt);
  }
  for (auto& br : out.branches) {
    if (br.tap != 1.0) throw ValidationError("off-nominal taps have no three-phase form");
    const std::complex<double> z = br.z.at(0);
    br.z.assign(9, {0.0, 0.0});
    for (int p = 0; p < 3; ++p) br.z[static_cast<size_t>(4 * p)] = z;
  }
  for (auto& src : out.sources) {
    src.phases = {0, 1, 2};
    for (auto* v : {&src.p_set, &src.q_set, &src.p_min, &src.p_max, &src.q_min, &src.q_max}) *v = triple(*v);
  }
  out.validate();
  return out;
}

std::string case_fingerprint(const NetworkCase& net) { return fnv1a_hex(render_json(net)); }

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Admittance

double phase_angle(int phase) {
  constexpr double third = 2.0 * std::numbers::pi / 3.0;
  switch (phase) {
    case 1: return -third;
    case 2: return third;
    default: return 0.0;
  }
}

namespace {

Eigen::MatrixXcd series_admittance(const Branch& br, int phases, size_t index) {
  Eigen::MatrixXcd z(phases, phases);
  bool diagonal = true;
  for (int r = 0; r < phases; ++r) {
    for (int c = 0; c < phases; ++c) {
      z(r, c) = br.z_at(r, c, phases);
      if (r != c && z(r, c) != cd(0.0, 0.0)) diagonal = false;
    }
  }
  const std::string tag = "branch " + std::to_string(index + 1);
  if (diagonal) {
    // Element-wise inversion keeps uncoupled phases exactly uncoupled.
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(phases, phases);
    for (int p = 0; p < phases; ++p) {
      if (std::abs(z(p, p)) == 0.0) throw NumericError(tag + " has zero series impedance");
      y(p, p) = 1.0 / z(p, p);
    }
    return y;
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(z);
  if (!lu.isInvertible()) throw NumericError(tag + " has a singular phase impedance matrix");
  return lu.inverse();
}

}  // namespace

AdmittanceMatrix build_admittance(const NetworkCase& net) {
  AdmittanceMatrix adm;
  adm.bus_count = net.bus_count();
  adm.phase_count = net.phase_count;
  const int nodes = adm.node_count();
  const int phases = net.phase_count;
  adm.y = Eigen::MatrixXcd::Zero(nodes, nodes);

  for (size_t k = 0; k < net.branches.size(); ++k) {
    const auto& br = net.branches[k];
    const Eigen::MatrixXcd ys = series_admittance(br, phases, k);
    const Eigen::MatrixXcd charge = Eigen::MatrixXcd::Identity(phases, phases) * cd(0.0, br.b_charge / 2.0);
    BranchAdmittance ba;
    ba.from = br.from;
    ba.to = br.to;
    ba.tt = ys + charge;
    ba.ff = ba.tt / (br.tap * br.tap);
    ba.ft = -ys / br.tap;
    ba.tf = -ys / br.tap;
    for (int p = 0; p < phases; ++p) {
      for (int q = 0; q < phases; ++q) {
        const int fp = adm.node(br.from, p), fq = adm.node(br.from, q);
        const int tp = adm.node(br.to, p), tq = adm.node(br.to, q);
        adm.y(fp, fq) += ba.ff(p, q);
        adm.y(fp, tq) += ba.ft(p, q);
        adm.y(tp, fq) += ba.tf(p, q);
        adm.y(tp, tq) += ba.tt(p, q);
      }
    }
    adm.branches.push_back(std::move(ba));
  }

  for (int i = 0; i < net.bus_count(); ++i) {
    const auto& bus = net.buses[static_cast<size_t>(i)];
    for (int p = 0; p < phases; ++p) {
      const int n = adm.node(i, p);
      adm.y(n, n) += cd(bus.g_shunt[static_cast<size_t>(p)], bus.b_shunt[static_cast<size_t>(p)]);
    }
  }
  return adm;
}

}  // namespace ddcqa
