#include "ddcqa/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ddcqa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Family to_family(const std::string& key, const std::string& v) {
  for (Family f : {Family::P, Family::Q, Family::Pij, Family::Qij}) {
    if (family_name(f) == v) return f;
  }
  throw UsageError(key + ": unknown family '" + v + "' (P, Q, Pij, Qij)");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"case", [](RunConfig& c, const std::string&, const std::string& v) { c.case_path = v; }},
      {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"dataset", [](RunConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
      {"seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_int(k, v);
         if (s < 0) throw UsageError(k + ": must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"workers", [](RunConfig& c, const std::string& k, const std::string& v) { c.workers = static_cast<int>(to_int(k, v)); }},
      {"sampling.count",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.count = static_cast<int>(to_int(k, v)); }},
      {"sampling.lo", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.lo = to_double(k, v); }},
      {"sampling.hi", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.hi = to_double(k, v); }},
      {"sampling.mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "per_bus") {
           c.sampling.mode = MultiplierMode::PerBus;
         } else if (v == "global") {
           c.sampling.mode = MultiplierMode::Global;
         } else {
           throw UsageError(k + ": expected per_bus or global");
         }
       }},
      {"sampling.gen_lo", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.gen_lo = to_double(k, v); }},
      {"sampling.gen_hi", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.gen_hi = to_double(k, v); }},
      {"sampling.vset_lo", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.vset_lo = to_double(k, v); }},
      {"sampling.vset_hi", [](RunConfig& c, const std::string& k, const std::string& v) { c.sampling.vset_hi = to_double(k, v); }},
      {"split.fraction", [](RunConfig& c, const std::string& k, const std::string& v) { c.split_fraction = to_double(k, v); }},
      {"train.method",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.method = parse_method(v);
         } catch (const Error&) {
           throw UsageError(k + ": unknown method '" + v + "' (pr, gb, bag)");
         }
       }},
      {"train.T", [](RunConfig& c, const std::string& k, const std::string& v) { c.T = static_cast<int>(to_int(k, v)); }},
      {"train.BT", [](RunConfig& c, const std::string& k, const std::string& v) { c.BT = static_cast<int>(to_int(k, v)); }},
      {"train.bootstrap_size",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.bootstrap_size = static_cast<int>(to_int(k, v)); }},
      {"train.lambda", [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda = to_double(k, v); }},
      {"train.lambda_relative",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda_relative = to_bool(k, v); }},
      {"train.pattern",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "sparse") {
           c.pattern = FeaturePattern::AdmittanceSparse;
         } else if (v == "dense") {
           c.pattern = FeaturePattern::Dense;
         } else {
           throw UsageError(k + ": expected sparse or dense");
         }
       }},
      {"train.beta_mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "search") {
           c.beta_mode = BetaMode::Search;
         } else if (v == "constant") {
           c.beta_mode = BetaMode::Constant;
         } else {
           throw UsageError(k + ": expected search or constant");
         }
       }},
      {"train.beta", [](RunConfig& c, const std::string& k, const std::string& v) { c.beta = to_double(k, v); }},
      {"train.targets",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "forward") {
           c.targets = TargetSet::Forward;
         } else if (v == "all") {
           c.targets = TargetSet::All;
         } else {
           throw UsageError(k + ": expected forward or all");
         }
       }},
      {"train.enforce_min_samples",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.enforce_min_samples = to_bool(k, v); }},
      {"tune.families",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.tune_families.clear();
         for (const auto& item : split_list(v)) c.tune_families.push_back(to_family(k, item));
       }},
      {"tune.steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.tune_steps = static_cast<int>(to_int(k, v)); }},
      {"opf.mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.opf_mode = parse_opf_mode(v);
         } catch (const Error&) {
           throw UsageError(k + ": expected transmission or distribution");
         }
       }},
      {"opf.box_margin", [](RunConfig& c, const std::string& k, const std::string& v) { c.box_margin = to_double(k, v); }},
      {"opf.v_min_default", [](RunConfig& c, const std::string& k, const std::string& v) { c.v_min_default = to_double(k, v); }},
      {"opf.oracle", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle = to_bool(k, v); }},
      {"opf.oracle_points",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_points = static_cast<int>(to_int(k, v)); }},
      {"opf.oracle_free",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.oracle_free.clear();
         for (const auto& item : split_list(v)) {
           const long long s = to_int(k, item);
           if (s < 1) throw UsageError(k + ": source numbers start at 1");
           c.oracle_free.push_back(static_cast<int>(s - 1));
         }
       }},
      {"opf.oracle_voltage", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_voltage = to_bool(k, v); }},
      {"opf.oracle_refine", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_refine = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (case_path.empty()) throw UsageError("case: no case file given");
  if (workers < 1) throw UsageError("workers: must be at least 1");
  if (sampling.count < 1) throw UsageError("sampling.count: must be at least 1");
  try {
    sampling.validate();
  } catch (const ValidationError& e) {
    throw UsageError(std::string("sampling: ") + e.what());
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw UsageError("split.fraction: must lie in (0, 1)");
  if (T < 1) throw UsageError("train.T: must be at least 1");
  if (BT < 1) throw UsageError("train.BT: must be at least 1");
  if (bootstrap_size < 0) throw UsageError("train.bootstrap_size: must be non-negative");
  if (!(lambda >= 0.0)) throw UsageError("train.lambda: must be non-negative");
  if (!(beta > 0.0)) throw UsageError("train.beta: must be positive");
  if (tune_families.empty()) throw UsageError("tune.families: empty");
  if (tune_steps < 0) throw UsageError("tune.steps: must be non-negative");
  if (oracle_points < 2) throw UsageError("opf.oracle_points: must be at least 2");
  if (!(v_min_default >= 0.0)) throw UsageError("opf.v_min_default: must be non-negative");
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(ln) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(ln) + ": " + e.what());
    }
  }
  if (!base_dir.empty()) {
    if (!cfg.case_path.empty() && cfg.case_path.is_relative()) cfg.case_path = base_dir / cfg.case_path;
    if (!cfg.dataset.empty() && cfg.dataset.is_relative()) cfg.dataset = base_dir / cfg.dataset;
  }
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> m;
  m["case"] = c.case_path.string();
  m["out"] = c.out.string();
  m["dataset"] = c.dataset_path().string();
  m["seed"] = std::to_string(c.seed);
  m["workers"] = std::to_string(c.workers);
  m["sampling.count"] = std::to_string(c.sampling.count);
  m["sampling.lo"] = fmt(c.sampling.lo);
  m["sampling.hi"] = fmt(c.sampling.hi);
  m["sampling.mode"] = c.sampling.mode == MultiplierMode::Global ? "global" : "per_bus";
  m["sampling.gen_lo"] = fmt(c.sampling.gen_lo);
  m["sampling.gen_hi"] = fmt(c.sampling.gen_hi);
  m["sampling.vset_lo"] = fmt(c.sampling.vset_lo);
  m["sampling.vset_hi"] = fmt(c.sampling.vset_hi);
  m["split.fraction"] = fmt(c.split_fraction);
  m["train.method"] = method_name(c.method);
  m["train.T"] = std::to_string(c.T);
  m["train.BT"] = std::to_string(c.BT);
  m["train.bootstrap_size"] = std::to_string(c.bootstrap_size);
  m["train.lambda"] = fmt(c.lambda);
  m["train.lambda_relative"] = fmt(c.lambda_relative);
  m["train.pattern"] = c.pattern == FeaturePattern::Dense ? "dense" : "sparse";
  m["train.beta_mode"] = c.beta_mode == BetaMode::Constant ? "constant" : "search";
  m["train.beta"] = fmt(c.beta);
  m["train.targets"] = c.targets == TargetSet::All ? "all" : "forward";
  m["train.enforce_min_samples"] = fmt(c.enforce_min_samples);
  std::string fams;
  for (Family f : c.tune_families) fams += (fams.empty() ? "" : ",") + family_name(f);
  m["tune.families"] = fams;
  m["tune.steps"] = std::to_string(c.tune_steps);
  m["opf.mode"] = opf_mode_name(c.opf_mode);
  m["opf.box_margin"] = fmt(c.box_margin);
  m["opf.v_min_default"] = fmt(c.v_min_default);
  m["opf.oracle"] = fmt(c.oracle);
  m["opf.oracle_points"] = std::to_string(c.oracle_points);
  std::string free;
  for (int s : c.oracle_free) free += (free.empty() ? "" : ",") + std::to_string(s + 1);
  m["opf.oracle_free"] = free;
  m["opf.oracle_voltage"] = fmt(c.oracle_voltage);
  m["opf.oracle_refine"] = fmt(c.oracle_refine);
  return m;
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace ddcqa
