#pragma once

// Experiment documents (flat TOML subset), result files and run manifests.
//
// Accepted syntax: `[section]` headers, `key = value` lines, `#` comments.
// Values are numbers, "strings", true/false, or [number, ...] arrays.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sglab/nemytskii.hpp"
#include "sglab/noise_model.hpp"
#include "sglab/simulator.hpp"
#include "sglab/spectral_space.hpp"

namespace sglab {

inline constexpr const char* kCodeVersion = "0.3.1";

struct ConfigError : std::runtime_error {
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct CoefficientConfig {
  std::string preset = "additive_one";  // empty when f and b are expressions
  std::string f;
  std::string b;
  double q = 0.0;
  double lip_f = 0.0;
  bool operator==(const CoefficientConfig&) const = default;
};

struct RunConfig {
  double T = 1.0;
  int n_steps = 1024;
  int N = 64;
  int n_traj = 100;
  double p = 2.0;
  std::uint64_t seed = 1;
  std::vector<double> checkpoints{1.0};
  bool operator==(const RunConfig&) const = default;
};

struct AnalysisConfig {
  std::vector<double> gamma_grid;
  std::vector<double> r_list{0.0};
  std::vector<int> N_list;
  std::vector<double> h_list;
  double t_base = 0.5;
  double slope_tol = 0.05;
  std::vector<double> alpha_list;
  bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "unnamed";
  OperatorSpec op;
  CovarianceSpectrum noise;
  bool J_tracks_N = false;  // noise truncation follows the Galerkin truncation in scans
  CoefficientConfig coefficients;
  InitialCondition initial;
  RunConfig run;
  AnalysisConfig analysis;

  NemytskiiPair pair() const {
    if (!coefficients.preset.empty()) return make_preset(coefficients.preset, op.d);
    return make_custom_pair(coefficients.f, coefficients.b, coefficients.q, coefficients.lip_f);
  }

  /// Simulation setup at truncation N (J follows N when J_tracks_N).
  SimulationConfig simulation(int N = 0) const {
    SimulationConfig s;
    s.op = op;
    s.spec = noise;
    s.pair = pair();
    s.initial = initial;
    s.T = run.T;
    s.n_steps = run.n_steps;
    s.n_modes = N > 0 ? N : run.N;
    if (J_tracks_N) s.spec.n_noise = s.n_modes;
    s.n_traj = run.n_traj;
    s.p = run.p;
    s.seed = run.seed;
    s.checkpoints = run.checkpoints;
    return s;
  }

  bool operator==(const ExperimentConfig& o) const {
    return name == o.name && op == o.op && noise == o.noise && J_tracks_N == o.J_tracks_N &&
           coefficients == o.coefficients && initial.profile == o.initial.profile && initial.coeffs == o.initial.coeffs &&
           run == o.run && analysis == o.analysis;
  }
};

namespace detail {

using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

struct RawEntry {
  ConfigValue value;
  int line = 0;
};

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline double parse_number(const std::string& text, int line) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(line, "malformed number '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(line, "malformed number '" + text + "'");
  return v;
}

inline ConfigValue parse_value(const std::string& text, int line) {
  if (text.empty()) throw ConfigError(line, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw ConfigError(line, "unterminated string");
    const std::string inner = text.substr(1, text.size() - 2);
    if (inner.find('"') != std::string::npos) throw ConfigError(line, "embedded quote in string");
    return inner;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') throw ConfigError(line, "unterminated array");
    std::vector<double> out;
    const std::string inner = trim(std::string_view(text).substr(1, text.size() - 2));
    if (inner.empty()) return out;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), line));
    return out;
  }
  return parse_number(text, line);
}

// Strips a trailing comment that is not inside a string.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '"') in_string = !in_string;
    if (line[k] == '#' && !in_string) return line.substr(0, k);
  }
  return line;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, RawEntry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  double number(const std::string& key, double fallback) {
    auto it = take(key);
    if (it == nullptr) return fallback;
    if (auto* v = std::get_if<double>(&it->value)) return *v;
    throw ConfigError(it->line, "'" + key + "' must be a number");
  }

  int integer(const std::string& key, int fallback) {
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(line(key), "'" + key + "' must be an integer");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v) || v < 0 || v > 9.007199254740992e15)
      throw ConfigError(line(key), "'" + key + "' must be a non-negative integer below 2^53");
    return static_cast<std::uint64_t>(v);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    auto it = take(key);
    if (it == nullptr) return fallback;
    if (auto* v = std::get_if<std::string>(&it->value)) return *v;
    throw ConfigError(it->line, "'" + key + "' must be a string");
  }

  bool flag(const std::string& key, bool fallback) {
    auto it = take(key);
    if (it == nullptr) return fallback;
    if (auto* v = std::get_if<bool>(&it->value)) return *v;
    throw ConfigError(it->line, "'" + key + "' must be true or false");
  }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) {
    auto it = take(key);
    if (it == nullptr) return fallback;
    if (auto* v = std::get_if<std::vector<double>>(&it->value)) return *v;
    throw ConfigError(it->line, "'" + key + "' must be an array of numbers");
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) {
    const int ln = line(key);
    std::vector<double> fb(fallback.begin(), fallback.end());
    std::vector<int> out;
    for (double v : list(key, fb)) {
      if (v != std::floor(v)) throw ConfigError(ln, "'" + key + "' must hold integers");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) throw ConfigError(entry.line, "unknown key '" + key + "'");
  }

 private:
  const RawEntry* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_[key] = true;
    return &it->second;
  }

  std::map<std::string, RawEntry> entries_;
  std::map<std::string, bool> used_;
};

inline std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep a decimal mark so the value reads back as a float-looking literal.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt17(v[k]);
  return s + "]";
}

inline std::string fmt_int_list(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + std::to_string(v[k]);
  return s + "]";
}

}  // namespace detail

/// Parses an experiment document; errors carry the offending line number.
inline ExperimentConfig parse_config(std::string_view text) {
  static const std::vector<std::string> sections{"operator", "noise", "coefficients", "initial", "run", "analysis"};
  std::map<std::string, detail::RawEntry> entries;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (std::find(sections.begin(), sections.end(), section) == sections.end())
        throw ConfigError(line_no, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (entries.count(full)) throw ConfigError(line_no, "duplicate key '" + full + "'");
    entries[full] = {detail::parse_value(detail::trim(std::string_view(line).substr(eq + 1)), line_no), line_no};
  }

  detail::Reader r(std::move(entries));
  ExperimentConfig c;
  c.name = r.text("name", c.name);
  c.op.d = r.integer("operator.d", 1);
  c.op.kappa = r.number("operator.kappa", 1.0);
  c.op.eta = r.number("operator.eta", 0.0);
  if (c.op.eta != 0.0) throw ConfigError(r.line("operator.eta"), "only eta = 0 is supported");

  const std::string kind = r.text("noise.kind", "commutative");
  try {
    c.noise.kind = noise_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.line("noise.kind"), e.what());
  }
  c.noise.d = c.op.d;
  c.noise.nu = r.number("noise.nu", 1.0);
  c.noise.rho = r.number("noise.rho", 2.0);
  c.noise.n_noise = r.integer("noise.J", 64);
  c.noise.custom_mu = r.list("noise.mu", {});
  c.J_tracks_N = r.flag("noise.J_tracks_N", false);

  const bool has_expr = r.has("coefficients.f") || r.has("coefficients.b");
  c.coefficients.preset = r.text("coefficients.preset", has_expr ? "" : "additive_one");
  c.coefficients.f = r.text("coefficients.f", "");
  c.coefficients.b = r.text("coefficients.b", "");
  c.coefficients.q = r.number("coefficients.q", 0.0);
  c.coefficients.lip_f = r.number("coefficients.lip_f", 0.0);
  if (!c.coefficients.preset.empty() && has_expr)
    throw ConfigError(r.line("coefficients.preset"), "give either a preset or expressions f, b, not both");

  c.initial.profile = r.text("initial.profile", "zero");
  c.initial.coeffs = r.list("initial.coeffs", {});

  c.run.T = r.number("run.T", 1.0);
  c.run.n_steps = r.integer("run.n_steps", 1024);
  c.run.N = r.integer("run.N", 64);
  c.run.n_traj = r.integer("run.n_traj", 100);
  c.run.p = r.number("run.p", 2.0);
  if (!(c.run.p >= 2.0)) throw ConfigError(r.line("run.p"), "p must be >= 2");
  c.run.seed = r.unsigned_integer("run.seed", 1);
  c.run.checkpoints = r.list("run.checkpoints", {c.run.T});

  c.analysis.gamma_grid = r.list("analysis.gamma_grid", {});
  c.analysis.r_list = r.list("analysis.r_list", {0.0});
  c.analysis.N_list = r.int_list("analysis.N_list", {});
  c.analysis.h_list = r.list("analysis.h_list", {});
  c.analysis.t_base = r.number("analysis.t_base", 0.5);
  c.analysis.slope_tol = r.number("analysis.slope_tol", 0.05);
  c.analysis.alpha_list = r.list("analysis.alpha_list", {});
  r.reject_unknown();

  // Semantic checks, anchored at the relevant key.
  auto check = [&](auto&& fn, const char* key) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(r.line(key), e.what());
    } catch (const ExpressionError& e) {
      throw ConfigError(r.line(key), e.what());
    }
  };
  check([&] { c.op.validate(); }, "operator.d");
  check([&] { c.noise.validate(); }, "noise.kind");
  if (has_expr) {
    check([&] { (void)Expression::parse(c.coefficients.f); }, "coefficients.f");
    check([&] { (void)Expression::parse(c.coefficients.b); }, "coefficients.b");
  }
  check([&] { (void)c.pair(); }, has_expr ? "coefficients.q" : "coefficients.preset");
  check([&] { (void)c.initial.build(c.op, c.run.N); }, "initial.profile");
  check([&] { c.simulation().validate(); }, "run.checkpoints");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::fmt17;
  std::ostringstream o;
  o << "name = \"" << c.name << "\"\n\n";
  o << "[operator]\nd = " << c.op.d << "\nkappa = " << fmt17(c.op.kappa) << "\n\n";
  o << "[noise]\nkind = \"" << to_string(c.noise.kind) << "\"\nnu = " << fmt17(c.noise.nu)
    << "\nrho = " << fmt17(c.noise.rho) << "\nJ = " << c.noise.n_noise << "\n";
  if (!c.noise.custom_mu.empty()) o << "mu = " << detail::fmt_list(c.noise.custom_mu) << "\n";
  o << "J_tracks_N = " << (c.J_tracks_N ? "true" : "false") << "\n\n";
  o << "[coefficients]\n";
  if (!c.coefficients.preset.empty()) {
    o << "preset = \"" << c.coefficients.preset << "\"\n";
  } else {
    o << "f = \"" << c.coefficients.f << "\"\nb = \"" << c.coefficients.b << "\"\n";
  }
  if (c.coefficients.q != 0.0) o << "q = " << fmt17(c.coefficients.q) << "\n";
  if (c.coefficients.lip_f != 0.0) o << "lip_f = " << fmt17(c.coefficients.lip_f) << "\n";
  o << "\n[initial]\nprofile = \"" << c.initial.profile << "\"\n";
  if (!c.initial.coeffs.empty()) o << "coeffs = " << detail::fmt_list(c.initial.coeffs) << "\n";
  o << "\n[run]\nT = " << fmt17(c.run.T) << "\nn_steps = " << c.run.n_steps << "\nN = " << c.run.N
    << "\nn_traj = " << c.run.n_traj << "\np = " << fmt17(c.run.p) << "\nseed = " << c.run.seed
    << "\ncheckpoints = " << detail::fmt_list(c.run.checkpoints) << "\n\n";
  o << "[analysis]\ngamma_grid = " << detail::fmt_list(c.analysis.gamma_grid)
    << "\nr_list = " << detail::fmt_list(c.analysis.r_list) << "\nN_list = " << detail::fmt_int_list(c.analysis.N_list)
    << "\nh_list = " << detail::fmt_list(c.analysis.h_list) << "\nt_base = " << fmt17(c.analysis.t_base)
    << "\nslope_tol = " << fmt17(c.analysis.slope_tol) << "\nalpha_list = " << detail::fmt_list(c.analysis.alpha_list)
    << "\n";
  return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_config(c))));
  return buf;
}

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kMomentHeader = "run_id,t,r,p,estimate,std_error,n_traj,N,J,dt,seed";

/// Moment rows sorted by (t, r) with 17 significant digits.
inline std::string moments_csv(const std::string& run_id, MomentTable rows, std::uint64_t seed) {
  std::stable_sort(rows.begin(), rows.end(), [](const MomentRow& a, const MomentRow& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.r < b.r;
  });
  std::string out = std::string(kMomentHeader) + "\n";
  for (const auto& m : rows) {
    out += run_id + "," + csv_number(m.t) + "," + csv_number(m.r) + "," + csv_number(m.p) + "," + csv_number(m.estimate) +
           "," + csv_number(m.std_error) + "," + std::to_string(m.n_traj) + "," + std::to_string(m.N) + "," +
           std::to_string(m.J) + "," + csv_number(m.dt) + "," + std::to_string(seed) + "\n";
  }
  return out;
}

inline constexpr const char* kIncrementHeader = "run_id,t,h,r,p,estimate,std_error,n_traj,N,J,dt,seed";

inline std::string increments_csv(const std::string& run_id, IncrementTable rows, std::uint64_t seed) {
  std::stable_sort(rows.begin(), rows.end(), [](const IncrementRow& a, const IncrementRow& b) {
    if (a.h != b.h) return a.h < b.h;
    return a.r < b.r;
  });
  std::string out = std::string(kIncrementHeader) + "\n";
  for (const auto& m : rows) {
    out += run_id + "," + csv_number(m.t) + "," + csv_number(m.h) + "," + csv_number(m.r) + "," + csv_number(m.p) + "," +
           csv_number(m.estimate) + "," + csv_number(m.std_error) + "," + std::to_string(m.n_traj) + "," +
           std::to_string(m.N) + "," + std::to_string(m.J) + "," + csv_number(m.dt) + "," + std::to_string(seed) + "\n";
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double num(std::size_t row, const std::string& name) const { return std::stod(rows[row][column(name)]); }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  if (std::getline(f, line)) t.header = split(line);
  while (std::getline(f, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

inline nlohmann::ordered_json manifest_json(const ExperimentConfig& c, const std::string& command, double wall_seconds,
                                            int workers) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["command"] = command;
  j["config_hash"] = config_hash(c);
  j["code_version"] = kCodeVersion;
  j["wall_time_s"] = wall_seconds;
  j["workers"] = workers;
  j["seed"] = c.run.seed;
  j["config"] = serialize_config(c);
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
}

}  // namespace sglab
