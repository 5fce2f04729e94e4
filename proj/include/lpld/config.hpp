#pragma once

// Experiment configuration: a flat key = value file (TOML subset) with a canonical serialization.
//
//   config    := (line '\n')*
//   line      := ws (comment | entry)? ws
//   entry     := key ws '=' ws value ws comment?
//   comment   := '#' any*
//   value     := number | 'inf' | '"' chars '"' | bareword | '[' (value (',' value)*)? ']'
//
// Keys: experiment, p, q, n_list, beta, epsilon, budget, seed, out_dir, k, measure, method,
// burn_in, thin.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lpld/error.hpp"
#include "lpld/exponent.hpp"

namespace lpld {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"sample", "pbm", "rate-curve", "gibbs", "maxent", "surface-check"};
  return names;
}

struct ExperimentConfig {
  std::string experiment = "sample";
  PExponent p = PExponent::finite(2.0);
  PExponent q = PExponent::finite(1.0);
  std::vector<std::size_t> n_list = {10};
  double beta = 0.5;
  /// Widening of the conditioning interval [0, beta + epsilon]; NaN selects 0.01 * beta.
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::size_t budget = 10000;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t k = 1;
  std::string measure = "cone";
  std::string method = "TiltedIS";
  std::size_t burn_in = 1000;
  std::size_t thin = 10;

  double effective_epsilon() const { return std::isnan(epsilon) ? 0.01 * beta : epsilon; }

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    const bool eps_equal = (std::isnan(a.epsilon) && std::isnan(b.epsilon)) || a.epsilon == b.epsilon;
    return a.experiment == b.experiment && a.p == b.p && a.q == b.q && a.n_list == b.n_list && a.beta == b.beta &&
           eps_equal && a.budget == b.budget && a.seed == b.seed && a.out_dir == b.out_dir && a.k == b.k &&
           a.measure == b.measure && a.method == b.method && a.burn_in == b.burn_in && a.thin == b.thin;
  }

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (v == "inf") return std::numeric_limits<double>::infinity();
  if (v == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + raw + "'");
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + raw + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': integer out of range");
  }
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ConfigError("config key '" + key + "': expected [a, b, ...]");
  v = v.substr(1, v.size() - 2);
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_unsigned(key, item));
  }
  return out;
}

}  // namespace detail

/// Apply one key/value pair (raw value text as it appears in the file or on the command line).
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  if (key == "experiment") c.experiment = unquote(raw);
  else if (key == "p") c.p = PExponent::parse(unquote(raw));
  else if (key == "q") c.q = PExponent::parse(unquote(raw));
  else if (key == "n_list") c.n_list = parse_size_list(key, raw);
  else if (key == "beta") c.beta = parse_double(key, raw);
  else if (key == "epsilon") c.epsilon = parse_double(key, raw);
  else if (key == "budget") c.budget = parse_unsigned(key, raw);
  else if (key == "seed") c.seed = parse_unsigned(key, raw);
  else if (key == "out_dir") c.out_dir = unquote(raw);
  else if (key == "k") c.k = parse_unsigned(key, raw);
  else if (key == "measure") c.measure = unquote(raw);
  else if (key == "method") c.method = unquote(raw);
  else if (key == "burn_in") c.burn_in = parse_unsigned(key, raw);
  else if (key == "thin") c.thin = parse_unsigned(key, raw);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Canonical text form: keys in lexicographic order, one per line.
/// `include_output` controls whether out_dir is written (it is left out of content hashes).
inline std::string serialize_config(const ExperimentConfig& c, bool include_output = true) {
  std::map<std::string, std::string> kv;
  kv["experiment"] = "\"" + c.experiment + "\"";
  kv["p"] = c.p.to_string();
  kv["q"] = c.q.to_string();
  std::string list = "[";
  for (std::size_t i = 0; i < c.n_list.size(); ++i) list += (i ? ", " : "") + std::to_string(c.n_list[i]);
  kv["n_list"] = list + "]";
  kv["beta"] = detail::format_double(c.beta);
  kv["epsilon"] = std::isnan(c.epsilon) ? "nan" : detail::format_double(c.epsilon);
  kv["budget"] = std::to_string(c.budget);
  kv["seed"] = std::to_string(c.seed);
  if (include_output) kv["out_dir"] = "\"" + c.out_dir + "\"";
  kv["k"] = std::to_string(c.k);
  kv["measure"] = "\"" + c.measure + "\"";
  kv["method"] = "\"" + c.method + "\"";
  kv["burn_in"] = std::to_string(c.burn_in);
  kv["thin"] = std::to_string(c.thin);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline void ExperimentConfig::validate() const {
  bool known = false;
  for (const auto& e : experiment_names()) known = known || e == experiment;
  detail::require(known, "unknown experiment '" + experiment + "'");
  detail::require(budget >= 1000, "budget must be >= 1000");
  const bool needs_q = experiment == "rate-curve" || experiment == "gibbs" || experiment == "maxent";
  if (needs_q) {
    detail::require(q < p, "experiment '" + experiment + "' requires q < p");
    detail::require(p.is_finite(), "experiment '" + experiment + "' requires finite p");
    detail::require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  }
  if (experiment != "maxent") {
    detail::require(!n_list.empty(), "n_list must not be empty");
    for (auto n : n_list) detail::require(n >= 1, "n_list entries must be >= 1");
  }
  if (experiment == "surface-check") detail::require(p.is_finite(), "surface-check requires finite p");
  if (experiment == "pbm") {
    detail::require(k >= 1, "k must be >= 1");
    for (auto n : n_list) detail::require(k <= n, "k must not exceed any n in n_list");
    detail::require(measure == "cone" || measure == "surface", "measure must be 'cone' or 'surface'");
    detail::require(measure == "cone" || p.is_finite(), "surface measure requires finite p");
  }
  if (experiment == "rate-curve") detail::require(method == "TiltedIS" || method == "Direct", "method must be 'TiltedIS' or 'Direct'");
  if (experiment == "gibbs") {
    detail::require(thin >= 1, "thin must be >= 1");
    detail::require(effective_epsilon() >= 0.0, "epsilon must be nonnegative");
  }
  detail::require(!out_dir.empty(), "out_dir must not be empty");
}

}  // namespace lpld
