#pragma once

// Run configuration in a small TOML subset: [section] headers, key = value
// lines, '#' comments. Values are quoted strings, booleans or numbers
// (inf allowed). Every key of RunConfig is written by serialize, so
// load -> serialize -> load is the identity.

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ddsim/bounds.hpp"
#include "ddsim/errors.hpp"
#include "ddsim/io.hpp"
#include "ddsim/newton.hpp"
#include "ddsim/scenarios.hpp"

namespace ddsim {

struct OutputConfig {
  std::string directory = "out";
  bool profile = true;
  bool sweep = true;
  bool lbic = true;

  bool operator==(const OutputConfig&) const = default;
};

struct SweepConfig {
  std::string parameter = "G0";
  std::string values = "1e-2:1e2:log5";

  bool operator==(const SweepConfig&) const = default;
};

struct LbicConfig {
  bool grid = false;
  double line_y = 2.0;
  int threads = 1;

  bool operator==(const LbicConfig&) const = default;
};

struct RunConfig {
  ScenarioParameters scenario;
  NewtonConfig solver;
  LadderSettings ladders;
  BoundsConfig bounds;
  SweepConfig sweep;
  LbicConfig lbic;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

enum class ValueKind { Number, Integer, Boolean, String };

// One key bound to a field: reads from and writes to its text form.
struct KeyBinding {
  ValueKind kind;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

inline std::string unquote(const std::string& raw, const std::string& key) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') throw ConfigError(key + ": expected a quoted string");
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) ++i;
    out += raw[i];
  }
  return out;
}

inline double to_number(const std::string& raw, const std::string& key) {
  try {
    return parse_number(raw);
  } catch (const ConfigError&) {
    throw ConfigError(key + ": expected a number, got '" + raw + "'");
  }
}

inline int to_integer(const std::string& raw, const std::string& key) {
  const double v = to_number(raw, key);
  if (v != std::floor(v) || std::fabs(v) > 1e9) throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  return static_cast<int>(v);
}

inline bool to_bool(const std::string& raw, const std::string& key) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + raw + "'");
}

template <class T>
KeyBinding number_key(T RunConfig::*section, double T::*field) {
  return {ValueKind::Number,
          [=](RunConfig& c, const std::string& raw) { c.*section.*field = to_number(raw, ""); },
          [=](const RunConfig& c) { return format_number(c.*section.*field); }};
}

template <class T>
KeyBinding integer_key(T RunConfig::*section, int T::*field) {
  return {ValueKind::Integer,
          [=](RunConfig& c, const std::string& raw) { c.*section.*field = to_integer(raw, ""); },
          [=](const RunConfig& c) { return std::to_string(c.*section.*field); }};
}

template <class T>
KeyBinding bool_key(T RunConfig::*section, bool T::*field) {
  return {ValueKind::Boolean,
          [=](RunConfig& c, const std::string& raw) { c.*section.*field = to_bool(raw, ""); },
          [=](const RunConfig& c) { return std::string(c.*section.*field ? "true" : "false"); }};
}

template <class T>
KeyBinding string_key(T RunConfig::*section, std::string T::*field) {
  return {ValueKind::String,
          [=](RunConfig& c, const std::string& raw) { c.*section.*field = unquote(raw, ""); },
          [=](const RunConfig& c) { return quote(c.*section.*field); }};
}

// Ordered list of (section.key, binding); the order is the serialization order.
inline const std::vector<std::pair<std::string, KeyBinding>>& key_table() {
  using R = RunConfig;
  using S = ScenarioParameters;
  using N = NewtonConfig;
  using L = LadderSettings;
  using B = BoundsConfig;
  static const std::vector<std::pair<std::string, KeyBinding>> table{
      {"scenario.preset", string_key(&R::scenario, &S::preset)},
      {"scenario.species", integer_key(&R::scenario, &S::species)},
      {"scenario.voltage", number_key(&R::scenario, &S::voltage)},
      {"scenario.generation", number_key(&R::scenario, &S::generation)},
      {"scenario.debye_length", number_key(&R::scenario, &S::debye_length)},
      {"scenario.doping", number_key(&R::scenario, &S::doping)},
      {"scenario.ion_doping", number_key(&R::scenario, &S::ion_doping)},
      {"scenario.saturation", number_key(&R::scenario, &S::saturation)},
      {"scenario.ion_mass", number_key(&R::scenario, &S::ion_mass)},
      {"scenario.electron_statistics", string_key(&R::scenario, &S::electron_statistics)},
      {"scenario.hole_statistics", string_key(&R::scenario, &S::hole_statistics)},
      {"scenario.radiative", number_key(&R::scenario, &S::radiative)},
      {"scenario.srh", bool_key(&R::scenario, &S::srh)},
      {"scenario.tau_n", number_key(&R::scenario, &S::tau_n)},
      {"scenario.tau_p", number_key(&R::scenario, &S::tau_p)},
      {"scenario.reference_n", number_key(&R::scenario, &S::reference_n)},
      {"scenario.reference_p", number_key(&R::scenario, &S::reference_p)},
      {"scenario.spacing", number_key(&R::scenario, &S::spacing)},
      {"scenario.beam_x", number_key(&R::scenario, &S::beam_x)},
      {"scenario.beam_y", number_key(&R::scenario, &S::beam_y)},
      {"scenario.beam_width", number_key(&R::scenario, &S::beam_width)},
      {"solver.max_iter", integer_key(&R::solver, &N::max_iterations)},
      {"solver.atol", number_key(&R::solver, &N::absolute_tolerance)},
      {"solver.rtol", number_key(&R::solver, &N::relative_tolerance)},
      {"solver.damping_initial", number_key(&R::solver, &N::initial_damping)},
      {"solver.damping_growth", number_key(&R::solver, &N::damping_growth)},
      {"solver.damping_min", number_key(&R::solver, &N::minimum_damping)},
      {"solver.polish_steps", integer_key(&R::solver, &N::polish_steps)},
      {"solver.voltage_steps", integer_key(&R::ladders, &L::voltage_steps)},
      {"solver.generation_start", number_key(&R::ladders, &L::generation_start)},
      {"bounds.p", number_key(&R::bounds, &B::p)},
      {"bounds.K", number_key(&R::bounds, &B::structural_constant)},
      {"bounds.K_q", number_key(&R::bounds, &B::k_q)},
      {"bounds.K_r", number_key(&R::bounds, &B::k_r)},
      {"bounds.r0", number_key(&R::bounds, &B::r0)},
      {"sweep.param", string_key(&R::sweep, &SweepConfig::parameter)},
      {"sweep.values", string_key(&R::sweep, &SweepConfig::values)},
      {"lbic.grid", bool_key(&R::lbic, &LbicConfig::grid)},
      {"lbic.line_y", number_key(&R::lbic, &LbicConfig::line_y)},
      {"lbic.threads", integer_key(&R::lbic, &LbicConfig::threads)},
      {"output.dir", string_key(&R::output, &OutputConfig::directory)},
      {"output.profile", bool_key(&R::output, &OutputConfig::profile)},
      {"output.sweep", bool_key(&R::output, &OutputConfig::sweep)},
      {"output.lbic", bool_key(&R::output, &OutputConfig::lbic)},
  };
  return table;
}

inline const KeyBinding& binding(const std::string& key) {
  for (const auto& [name, b] : key_table()) {
    if (name == key) return b;
  }
  throw ConfigError("unknown key '" + key + "'");
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Drops a trailing comment that is not inside a string.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline void assign(RunConfig& c, const std::string& key, const std::string& raw) {
  const KeyBinding& b = binding(key);
  try {
    b.set(c, raw);
  } catch (const ConfigError& e) {
    throw ConfigError(key + std::string(e.what()));
  }
}

}  // namespace detail

/// Parses config text; `origin` names the source in error messages.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "config") {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = detail::trim(detail::strip_comment(line));
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + "malformed section header");
      section = detail::trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    if (seen.count(full)) throw ConfigError(where + "duplicate key '" + full + "'");
    seen[full] = lineno;
    try {
      detail::assign(cfg, full, detail::trim(body.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, b] : detail::key_table()) {
    const auto dot = name.find('.');
    const std::string sec = name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << name.substr(dot + 1) << " = " << b.get(cfg) << '\n';
  }
  return os.str();
}

/// Applies one `section.key=value` override. String values may be given
/// without quotes.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = detail::trim(assignment.substr(0, eq));
  std::string raw = detail::trim(assignment.substr(eq + 1));
  if (detail::binding(key).kind == detail::ValueKind::String && (raw.empty() || raw.front() != '"')) {
    raw = detail::quote(raw);
  }
  detail::assign(cfg, key, raw);
}

/// "a:b:N" (linear), "a:b:logN" (logarithmic) or a comma list.
inline std::vector<double> parse_values(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') == std::string::npos) {
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::to_number(detail::trim(item), "values"));
    if (out.empty()) throw ConfigError("empty value list");
    return out;
  }
  std::vector<std::string> parts;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(detail::trim(item));
  if (parts.size() != 3) throw ConfigError("value range '" + spec + "' is not a:b:N or a:b:logN");
  const double a = detail::to_number(parts[0], "values");
  const double b = detail::to_number(parts[1], "values");
  const bool log = parts[2].rfind("log", 0) == 0;
  const int n = detail::to_integer(log ? parts[2].substr(3) : parts[2], "values");
  if (n < 1) throw ConfigError("value range needs at least one point");
  if (log && !(a > 0.0 && b > 0.0)) throw ConfigError("logarithmic range needs positive ends");
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    double v = log ? std::pow(10.0, std::log10(a) + t * (std::log10(b) - std::log10(a))) : a + t * (b - a);
    if (i == 0) v = a;
    if (i + 1 == n) v = b;
    out.push_back(v);
  }
  return out;
}

}  // namespace ddsim
