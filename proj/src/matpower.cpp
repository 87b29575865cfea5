// Reader for the subset of the MATPOWER case format used by the shipped
// cases: mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch and mpc.gencost
// (polynomial model). Everything else in the file is skipped.

#include <charconv>
#include <cmath>
#include <map>

#include "ddcqa/error.hpp"
#include "ddcqa/netmodel.hpp"

namespace ddcqa {
namespace {

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // source line of each row
  int line = 0;            // line of the assignment
};

struct RawCase {
  std::optional<double> base_mva;
  int base_line = 0;
  std::map<std::string, Table> tables;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view tok, int line) {
  if (tok == "Inf" || tok == "inf" || tok == "+Inf") return kUnbounded;
  if (tok == "-Inf" || tok == "-inf") return -kUnbounded;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("expected a number, found '" + std::string(tok) + "'", line);
  }
  return v;
}

/// Splits the case text into logical lines with comments removed.
std::vector<std::string> strip_comments(std::string_view text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    bool in_quote = false;
    size_t cut = line.size();
    for (size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '\'') in_quote = !in_quote;
      if (line[k] == '%' && !in_quote) {
        cut = k;
        break;
      }
    }
    lines.emplace_back(line.substr(0, cut));
    pos = nl + 1;
  }
  return lines;
}

RawCase scan(std::string_view text) {
  RawCase raw;
  const auto lines = strip_comments(text);
  size_t i = 0;
  while (i < lines.size()) {
    const int lineno = static_cast<int>(i) + 1;
    std::string_view line = trim(lines[i]);
    if (line.rfind("mpc.", 0) != 0) {
      ++i;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected '=' after field name", lineno);
    const std::string name(trim(line.substr(4, eq - 4)));
    std::string_view rhs = trim(line.substr(eq + 1));

    if (!rhs.empty() && rhs.front() == '[') {
      Table table;
      table.line = lineno;
      rhs.remove_prefix(1);
      bool closed = false;
      std::vector<double> row;
      int row_line = lineno;
      size_t j = i;
      while (!closed) {
        std::string_view body = rhs;
        if (const auto close = body.find(']'); close != std::string_view::npos) {
          body = body.substr(0, close);
          closed = true;
        }
        size_t k = 0;
        auto flush = [&] {
          if (!row.empty()) {
            table.rows.push_back(std::move(row));
            table.lines.push_back(row_line);
            row.clear();
          }
        };
        while (k < body.size()) {
          const char ch = body[k];
          if (ch == ' ' || ch == '\t' || ch == '\r' || ch == ',') {
            ++k;
          } else if (ch == ';') {
            flush();
            ++k;
          } else {
            size_t e = k;
            while (e < body.size() && body[e] != ' ' && body[e] != '\t' && body[e] != '\r' && body[e] != ',' &&
                   body[e] != ';') {
              ++e;
            }
            if (row.empty()) row_line = static_cast<int>(j) + 1;
            row.push_back(parse_number(body.substr(k, e - k), static_cast<int>(j) + 1));
            k = e;
          }
        }
        flush();  // a newline also ends a row
        if (!closed) {
          ++j;
          if (j >= lines.size()) throw ParseError("unterminated matrix for mpc." + name, lineno);
          rhs = trim(lines[j]);
        }
      }
      raw.tables[name] = std::move(table);
      i = j + 1;
    } else if (!rhs.empty() && rhs.front() == '{') {
      // Cell arrays (bus names and similar) are skipped.
      size_t j = i;
      while (lines[j].find('}') == std::string::npos) {
        ++j;
        if (j >= lines.size()) throw ParseError("unterminated cell array for mpc." + name, lineno);
      }
      i = j + 1;
    } else {
      if (name == "baseMVA") {
        auto value = rhs;
        if (const auto semi = value.find(';'); semi != std::string_view::npos) value = value.substr(0, semi);
        raw.base_mva = parse_number(trim(value), lineno);
        raw.base_line = lineno;
      }
      ++i;
    }
  }
  return raw;
}

const Table& table(const RawCase& raw, const std::string& name, size_t min_cols) {
  const auto it = raw.tables.find(name);
  if (it == raw.tables.end()) throw ParseError("missing mpc." + name + " table", 0);
  for (size_t r = 0; r < it->second.rows.size(); ++r) {
    if (it->second.rows[r].size() < min_cols) {
      throw ParseError("mpc." + name + " row needs at least " + std::to_string(min_cols) + " columns",
                       it->second.lines[r]);
    }
  }
  return it->second;
}

bool any_nonzero_beyond(const std::vector<double>& row, size_t first) {
  for (size_t k = first; k < row.size(); ++k) {
    if (row[k] != 0.0) return true;
  }
  return false;
}

void warn(std::vector<std::string>* warnings, const std::string& what) {
  if (warnings) warnings->push_back(what);
}

int as_int(double v, int line, const char* what) {
  if (v != std::floor(v)) throw ParseError(std::string(what) + " must be an integer", line);
  return static_cast<int>(v);
}

}  // namespace

NetworkCase parse_matpower_case(std::string_view text, std::vector<std::string>* warnings) {
  const RawCase raw = scan(text);
  if (!raw.base_mva) throw ParseError("missing mpc.baseMVA", 0);
  NetworkCase net;
  net.base_mva = *raw.base_mva;
  if (!(net.base_mva > 0.0)) throw ValidationError("base_mva must be positive");
  const double base = net.base_mva;
  net.phase_count = 1;

  const Table& bus_t = table(raw, "bus", 13);
  const Table& gen_t = table(raw, "gen", 10);
  const Table& branch_t = table(raw, "branch", 9);

  std::map<int, int> position;
  for (size_t r = 0; r < bus_t.rows.size(); ++r) {
    const auto& row = bus_t.rows[r];
    const int line = bus_t.lines[r];
    Bus bus;
    bus.id = as_int(row[0], line, "BUS_I");
    if (!position.emplace(bus.id, static_cast<int>(net.buses.size())).second) {
      throw ValidationError("duplicate bus id " + std::to_string(bus.id));
    }
    switch (as_int(row[1], line, "TYPE")) {
      case 1: bus.type = BusType::PQ; break;
      case 2: bus.type = BusType::PV; break;
      case 3: bus.type = BusType::Slack; break;
      default: throw ParseError("unsupported bus type (isolated buses are not modeled)", line);
    }
    bus.p_load = {row[2] / base};
    bus.q_load = {row[3] / base};
    bus.g_shunt = {row[4] / base};
    bus.b_shunt = {row[5] / base};
    bus.v_set = row[7];
    bus.v_max = row[11];
    bus.v_min = row[12];
    net.buses.push_back(std::move(bus));
  }

  auto bus_of = [&](double id, int line, const char* what) {
    const int key = as_int(id, line, what);
    const auto it = position.find(key);
    if (it == position.end()) throw ValidationError(std::string(what) + " references nonexistent bus " + std::to_string(key));
    return it->second;
  };

  bool warned_gen_cols = false;
  std::vector<size_t> gen_rows;  // in-service generator rows, for gencost pairing
  std::vector<bool> has_gen(net.buses.size(), false);
  for (size_t r = 0; r < gen_t.rows.size(); ++r) {
    const auto& row = gen_t.rows[r];
    const int line = gen_t.lines[r];
    if (row[7] <= 0.0) {
      warn(warnings, "generator on line " + std::to_string(line) + " is out of service and was skipped");
      continue;
    }
    if (!warned_gen_cols && any_nonzero_beyond(row, 10)) {
      warn(warnings, "mpc.gen columns beyond PMIN (capability curve, ramping, APF) are ignored");
      warned_gen_cols = true;
    }
    Source src;
    src.bus = bus_of(row[0], line, "generator");
    src.phases = {0};
    src.p_set = {row[1] / base};
    src.q_set = {row[2] / base};
    src.q_max = {row[3] / base};
    src.q_min = {row[4] / base};
    src.p_max = {row[8] / base};
    src.p_min = {row[9] / base};
    auto& bus = net.buses[static_cast<size_t>(src.bus)];
    if (!has_gen[static_cast<size_t>(src.bus)] && bus.type != BusType::PQ) bus.v_set = row[5];
    has_gen[static_cast<size_t>(src.bus)] = true;
    net.sources.push_back(std::move(src));
    gen_rows.push_back(r);
  }
  for (size_t i = 0; i < net.buses.size(); ++i) {
    if (net.buses[i].type == BusType::PV && !has_gen[i]) {
      warn(warnings, "PV bus " + std::to_string(net.buses[i].id) + " has no generator and is treated as PQ");
      net.buses[i].type = BusType::PQ;
    }
  }

  bool warned_angle = false;
  for (size_t r = 0; r < branch_t.rows.size(); ++r) {
    const auto& row = branch_t.rows[r];
    const int line = branch_t.lines[r];
    if (row.size() > 10 && row[10] <= 0.0) {
      warn(warnings, "branch on line " + std::to_string(line) + " is out of service and was skipped");
      continue;
    }
    if (row.size() > 9 && row[9] != 0.0) {
      throw ValidationError("branch on line " + std::to_string(line) +
                            " has a phase shift; phase-shifting transformers are not supported");
    }
    if (!warned_angle && row.size() > 12 && (row[11] > -360.0 || row[12] < 360.0)) {
      warn(warnings, "branch angle-difference limits (ANGMIN/ANGMAX) are ignored");
      warned_angle = true;
    }
    Branch br;
    br.from = bus_of(row[0], line, "branch");
    br.to = bus_of(row[1], line, "branch");
    br.z = {std::complex<double>(row[2], row[3])};
    br.b_charge = row[4];
    br.rate = row[5] > 0.0 ? row[5] / base : kUnbounded;
    br.tap = row[8] != 0.0 ? row[8] : 1.0;
    net.branches.push_back(std::move(br));
  }

  if (const auto it = raw.tables.find("gencost"); it != raw.tables.end()) {
    const Table& cost_t = table(raw, "gencost", 4);
    if (cost_t.rows.size() < gen_t.rows.size()) {
      throw ValidationError("mpc.gencost has fewer rows than mpc.gen");
    }
    if (cost_t.rows.size() > gen_t.rows.size()) warn(warnings, "reactive power cost rows in mpc.gencost are ignored");
    bool warned_startup = false;
    for (size_t g = 0; g < gen_rows.size(); ++g) {
      const auto& row = cost_t.rows[gen_rows[g]];
      const int line = cost_t.lines[gen_rows[g]];
      if (as_int(row[0], line, "MODEL") != 2) throw ParseError("only polynomial gencost (MODEL 2) is supported", line);
      if (!warned_startup && (row[1] != 0.0 || row[2] != 0.0)) {
        warn(warnings, "gencost STARTUP/SHUTDOWN costs are ignored");
        warned_startup = true;
      }
      const int ncost = as_int(row[3], line, "NCOST");
      if (ncost < 1 || row.size() < static_cast<size_t>(4 + ncost)) {
        throw ParseError("gencost row has fewer coefficients than NCOST", line);
      }
      // Coefficients are listed highest order first.
      std::vector<double> c(static_cast<size_t>(ncost));
      for (int k = 0; k < ncost; ++k) c[static_cast<size_t>(k)] = row[static_cast<size_t>(4 + ncost - 1 - k)];
      for (size_t k = 3; k < c.size(); ++k) {
        if (c[k] != 0.0) throw ParseError("gencost polynomials above degree 2 are not supported", line);
      }
      auto& cost = net.sources[g].cost;
      cost.c0 = c.size() > 0 ? c[0] : 0.0;
      cost.c1 = c.size() > 1 ? c[1] * base : 0.0;
      cost.c2 = c.size() > 2 ? c[2] * base * base : 0.0;
    }
  }

  net.validate();
  return net;
}

}  // namespace ddcqa
