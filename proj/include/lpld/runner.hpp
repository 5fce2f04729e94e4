#pragma once

// Experiment runner behind the command-line tool: dispatches a config to a module pipeline,
// writes per-metric CSV tables and one JSON manifest into out_dir.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpld/analytic.hpp"
#include "lpld/config.hpp"
#include "lpld/entropy_rate.hpp"
#include "lpld/error.hpp"
#include "lpld/maxent.hpp"
#include "lpld/measures.hpp"
#include "lpld/rare_event.hpp"
#include "lpld/rng.hpp"
#include "lpld/sampling.hpp"

#ifndef LPLD_VERSION
#define LPLD_VERSION "0.0.0"
#endif

namespace lpld {

inline constexpr const char* kLibraryVersion = LPLD_VERSION;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitUnreliable = 4 };

/// A CSV file: optional "# key=value" header block, one header row, data rows.
struct Table {
  std::string file;
  std::vector<std::pair<std::string, std::string>> header_block;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    for (const auto& [k, v] : header_block) out += "# " + k + "=" + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    }
    return out;
  }
};

struct RunOptions {
  std::size_t threads = 1;
};

struct RunResult {
  nlohmann::json manifest;
  std::vector<Table> tables;
  int exit_code = kExitOk;
  std::string manifest_path;
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

inline nlohmann::json exponent_json(PExponent e) {
  if (e.is_infinite()) return "inf";
  return e.value();
}

inline std::string sha1_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 || EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericError("sha1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Write to a sibling temporary file, then rename over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write to '" + tmp.string() + "'");
    os << content;
    if (!os) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Run f(i) for i in [0, count) on up to `threads` workers; the first failure by index is rethrown.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<std::pair<std::string, std::string>> header_block(const ExperimentConfig& c, const std::string& n,
                                                                      const std::string& interval, const std::string& method) {
  return {{"p", c.p.to_string()}, {"q", c.q.to_string()}, {"n", n},
          {"interval", interval}, {"seed", std::to_string(c.seed)}, {"method", method}};
}

inline std::string interval_text(const Interval& iv) { return "[" + fmt(iv.lo) + "," + fmt(iv.hi) + "]"; }

inline std::string n_list_text(const std::vector<std::size_t>& ns) {
  std::string s;
  for (std::size_t i = 0; i < ns.size(); ++i) s += (i ? ";" : "") + std::to_string(ns[i]);
  return s;
}

inline Table empirical_table(const std::string& file, const EmpiricalMeasure& m) {
  Table t{file, {}, {"atom", "weight"}, {}};
  for (std::size_t i = 0; i < m.size(); ++i) t.rows.push_back({fmt(m.atoms()[i]), fmt(m.weights()[i])});
  return t;
}

// Stream ids per experiment; draws inside an experiment use child streams so results do not depend on n_list order.
inline constexpr std::uint64_t kStreamSample = 0x53414d50;
inline constexpr std::uint64_t kStreamPbm = 0x50424d00;
inline constexpr std::uint64_t kStreamRate = 0x52415445;
inline constexpr std::uint64_t kStreamGibbs = 0x47494242;
inline constexpr std::uint64_t kStreamSurface = 0x53555246;

struct Outcome {
  std::vector<Table> tables;
  nlohmann::json results = nlohmann::json::object();
  bool unreliable = false;
};

inline Outcome run_sample(const ExperimentConfig& c, std::size_t threads) {
  const auto& ns = c.n_list;
  std::vector<std::vector<std::string>> rows(ns.size());
  std::vector<Table> empiricals(ns.size());
  const auto mu = AnalyticDensity::generalized_gaussian(c.p);
  parallel_for(ns.size(), threads, [&](std::size_t e) {
    const std::size_t n = ns[e];
    const RngStream parent(c.seed, kStreamSample);
    const double scale = std::pow(static_cast<double>(n), c.p.reciprocal());
    double max_err = 0.0;
    double mq_sum = 0.0;
    std::vector<double> first(c.budget);
    for (std::size_t d = 0; d < c.budget; ++d) {
      auto rng = child_stream(parent, d);
      const auto x = sample_cone(c.p, n, rng);
      const auto L = empirical_from_sphere(x);
      max_err = std::max(max_err, std::abs(moment(L, c.p) - 1.0));
      mq_sum += moment(L, c.q);
      first[d] = scale * x.coords[0];
      if (d == 0) empiricals[e] = empirical_table("sample_n" + std::to_string(n) + "_empirical.csv", L);
    }
    const double ks = ks_distance(EmpiricalMeasure::uniform(std::move(first)), mu);
    rows[e] = {fmt(n), fmt(c.budget), fmt(max_err), fmt(mq_sum / static_cast<double>(c.budget)), fmt(ks)};
  });
  Outcome o;
  o.tables.push_back({"sample.csv", header_block(c, n_list_text(ns), "", "cone"),
                      {"n", "draws", "max_abs_mp_error", "mean_m_q", "ks_first_coordinate"}, rows});
  for (auto& t : empiricals) o.tables.push_back(std::move(t));
  o.results["reference_density"] = {{"family", "generalized_gaussian"}, {"p", exponent_json(c.p)}};
  return o;
}

inline Outcome run_pbm(const ExperimentConfig& c, std::size_t threads) {
  const auto& ns = c.n_list;
  const auto measure = parse_sphere_measure(c.measure);
  const auto mu = AnalyticDensity::generalized_gaussian(c.p);
  std::vector<std::vector<std::string>> rows(ns.size());
  std::vector<Table> marginals(ns.size());
  parallel_for(ns.size(), threads, [&](std::size_t e) {
    const std::size_t n = ns[e];
    RngStream rng(c.seed, kStreamPbm);
    const auto batch = pbm_marginals(c.p, n, c.k, c.budget, measure, rng);
    const auto col0 = batch.column(0);
    double ks_max = 0.0;
    for (std::size_t j = 0; j < c.k; ++j) ks_max = std::max(ks_max, ks_distance(batch.column(j), mu));
    rows[e] = {fmt(n), fmt(c.budget), fmt(c.k), c.measure, fmt(ks_distance(col0, mu)), fmt(ks_max),
               fmt(wasserstein_q(col0, mu, 1.0))};
    Table t{"pbm_n" + std::to_string(n) + "_marginals.csv", header_block(c, std::to_string(n), "", c.measure), {}, {}};
    for (std::size_t j = 0; j < c.k; ++j) t.columns.push_back("x" + std::to_string(j + 1));
    for (std::size_t d = 0; d < batch.draws; ++d) {
      std::vector<std::string> r;
      for (std::size_t j = 0; j < c.k; ++j) r.push_back(fmt(batch.at(d, j)));
      t.rows.push_back(std::move(r));
    }
    marginals[e] = std::move(t);
  });
  Outcome o;
  o.tables.push_back({"pbm.csv", header_block(c, n_list_text(ns), "", c.measure),
                      {"n", "draws", "k", "measure", "ks_first_coordinate", "ks_max_coordinate", "w1_first_coordinate"},
                      rows});
  for (auto& t : marginals) o.tables.push_back(std::move(t));
  o.results["reference_density"] = {{"family", "generalized_gaussian"}, {"p", exponent_json(c.p)}};
  return o;
}

inline nlohmann::json solution_json(const MaxEntSolution& s) {
  auto j = s.to_json();
  j["family"] = "exp_family";
  return j;
}

inline Outcome run_rate_curve(const ExperimentConfig& c, std::size_t threads) {
  const auto& ns = c.n_list;
  const auto method = parse_rare_method(c.method);
  const auto interval = Interval::make(0.0, c.beta);
  std::vector<RareEventEstimate> est(ns.size());
  parallel_for(ns.size(), threads, [&](std::size_t e) {
    RngStream rng(c.seed, detail::mix64(kStreamRate) ^ ns[e]);
    est[e] = estimate_rare_prob(c.p, c.q, ns[e], interval, method, c.budget, rng);
  });
  const auto sol = solve_nu_star(c.p, c.q, c.beta);
  Outcome o;
  Table t{"rate_curve.csv", header_block(c, n_list_text(ns), interval_text(interval), c.method),
          {"n", "method", "log_prob", "std_error", "neg_log_prob_over_n", "n_samples", "hits", "effective_sample_size",
           "reliable"},
          {}};
  std::vector<RareEventEstimate> usable;
  for (const auto& r : est) {
    t.rows.push_back({fmt(r.n), to_string(r.method), fmt(r.log_prob), fmt(r.std_error),
                      fmt(-r.log_prob / static_cast<double>(r.n)), fmt(r.n_samples), fmt(r.hits),
                      fmt(r.effective_sample_size), fmt(r.reliable)});
    if (!r.reliable) o.unreliable = true;
    if (r.reliable && std::isfinite(r.log_prob) && r.std_error > 0.0) usable.push_back(r);
  }
  o.tables.push_back(std::move(t));
  o.results["nu_star"] = solution_json(sol);
  o.results["analytic_rate"] = sol.rate;
  o.results["interval"] = {interval.lo, interval.hi};
  bool distinct = false;
  for (std::size_t i = 1; i < usable.size(); ++i) distinct = distinct || usable[i].n != usable[0].n;
  if (distinct) {
    const auto fit = fit_rate_slope(usable);
    o.results["slope_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"slope_std_error", fit.slope_std_error}};
  } else {
    o.results["slope_fit"] = nullptr;
  }
  return o;
}

inline Outcome run_gibbs(const ExperimentConfig& c, std::size_t threads) {
  const auto& ns = c.n_list;
  const auto interval = Interval::make(0.0, c.beta + c.effective_epsilon());
  const auto limit = solve_nu_star(c.p, c.q, c.beta);
  const auto limit_density = limit.density();
  const auto mu = AnalyticDensity::generalized_gaussian(c.p);
  std::vector<std::vector<std::string>> rows(ns.size());
  std::vector<Table> samples(ns.size());
  parallel_for(ns.size(), threads, [&](std::size_t e) {
    const std::size_t n = ns[e];
    ConditionalChainConfig cc;
    cc.n = n;
    cc.burn_in = c.burn_in;
    cc.thin = c.thin;
    cc.target_interval = interval;
    ConditionalChain chain(c.p, c.q, cc, RngStream(c.seed, detail::mix64(kStreamGibbs) ^ n));
    const std::size_t mid = n / 2;
    const double scale = std::pow(static_cast<double>(n), c.p.reciprocal());
    std::vector<double> first(c.budget), middle(c.budget);
    Table t{"gibbs_n" + std::to_string(n) + "_samples.csv",
            header_block(c, std::to_string(n), interval_text(interval), "RWM"),
            {"x1", "x" + std::to_string(mid + 1)},
            {}};
    t.rows.reserve(c.budget);
    for (std::size_t s = 0; s < c.budget; ++s) {
      const auto x = chain.next();
      first[s] = scale * x.coords[0];
      middle[s] = scale * x.coords[mid];
      t.rows.push_back({fmt(first[s]), fmt(middle[s])});
    }
    const auto f = EmpiricalMeasure::uniform(first);
    const auto m = EmpiricalMeasure::uniform(middle);
    rows[e] = {fmt(n),
               fmt(c.budget),
               fmt(chain.acceptance_rate()),
               fmt(chain.proposal_scale()),
               fmt(ks_distance(f, limit_density)),
               fmt(ks_distance(f, mu)),
               fmt(ks_distance(f, m))};
    samples[e] = std::move(t);
  });
  Outcome o;
  o.tables.push_back({"gibbs.csv", header_block(c, n_list_text(ns), interval_text(interval), "RWM"),
                      {"n", "kept", "acceptance_rate", "proposal_scale", "ks_first_to_limit", "ks_first_to_mu_p",
                       "ks_first_vs_middle"},
                      rows});
  for (auto& t : samples) o.tables.push_back(std::move(t));
  o.results["limit"] = solution_json(limit);
  o.results["interval"] = {interval.lo, interval.hi};
  o.results["epsilon"] = c.effective_epsilon();
  return o;
}

inline Outcome run_maxent(const ExperimentConfig& c) {
  const auto sol = solve_nu_star(c.p, c.q, c.beta);
  const auto th = thresholds(c.p, c.q.value());
  Outcome o;
  o.results = solution_json(sol);
  o.results["beta_small"] = th.beta_small;
  o.results["beta_large"] = th.beta_large;
  o.results["dual_gradient_norm"] = sol.dual_gradient_norm;
  o.tables.push_back({"maxent.csv",
                      {},
                      {"p", "q", "beta", "regime", "kappa0", "kappa_p", "kappa_q", "m_p", "m_q", "rate"},
                      {{fmt(sol.params.p), fmt(sol.params.q), fmt(sol.beta), to_string(sol.regime), fmt(sol.params.kappa0),
                        fmt(sol.params.kappa_p), fmt(sol.params.kappa_q), fmt(sol.m_p_value), fmt(sol.m_q_value),
                        fmt(sol.rate)}}});
  // Regime diagram: rate against beta across both thresholds.
  Table curve{"maxent_curve.csv", {}, {"beta", "regime", "kappa_p", "kappa_q", "rate"}, {}};
  constexpr int kGrid = 60;
  const double hi = 1.25 * th.beta_large;
  for (int i = 1; i <= kGrid; ++i) {
    const double b = hi * i / kGrid;
    const auto s = solve_nu_star(c.p, c.q, b);
    curve.rows.push_back({fmt(b), to_string(s.regime), fmt(s.params.kappa_p), fmt(s.params.kappa_q), fmt(s.rate)});
  }
  o.tables.push_back(std::move(curve));
  return o;
}

inline Outcome run_surface_check(const ExperimentConfig& c, std::size_t threads) {
  const auto& ns = c.n_list;
  std::vector<std::vector<std::string>> rows(ns.size());
  const double r = 2.0 * c.p.value() - 2.0;
  parallel_for(ns.size(), threads, [&](std::size_t e) {
    const std::size_t n = ns[e];
    RngStream rng(c.seed, detail::mix64(kStreamSurface) ^ n);
    const auto batch = sample_surface(c.p, n, c.budget, rng);
    double mr_min = std::numeric_limits<double>::infinity(), mr_max = 0.0;
    for (const auto& x : batch.points) {
      const double m = moment(empirical_from_sphere(x), r);
      mr_min = std::min(mr_min, m);
      mr_max = std::max(mr_max, m);
    }
    const double edge = std::pow(static_cast<double>(n), 1.0 - 2.0 / c.p.value());
    const double lo = std::min(1.0, edge), hi = std::max(1.0, edge);
    const bool moment_ok = mr_min >= lo * (1.0 - 1e-12) && mr_max <= hi * (1.0 + 1e-12);
    const auto& st = batch.stats;
    rows[e] = {fmt(n),         fmt(c.budget), fmt(st.log_weight_min), fmt(st.log_weight_max), fmt(st.width()),
               fmt(st.bound()), fmt(st.within_bound()), fmt(mr_min),   fmt(mr_max),             fmt(lo),
               fmt(hi),        fmt(moment_ok),          fmt(batch.effective_sample_size)};
  });
  Outcome o;
  o.tables.push_back({"surface_check.csv", header_block(c, n_list_text(ns), "", "SNIS"),
                      {"n", "batch", "log_weight_min", "log_weight_max", "width", "bound", "within_bound", "m_r_min",
                       "m_r_max", "m_r_lower", "m_r_upper", "moments_within_bounds", "effective_sample_size"},
                      rows});
  o.results["moment_order"] = r;
  return o;
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment}, {"p", exponent_json(c.p)},  {"q", exponent_json(c.q)},
          {"n_list", c.n_list},         {"beta", c.beta},            {"epsilon", c.effective_epsilon()},
          {"budget", c.budget},         {"seed", c.seed},            {"out_dir", c.out_dir},
          {"k", c.k},                   {"measure", c.measure},      {"method", c.method},
          {"burn_in", c.burn_in},       {"thin", c.thin}};
}

}  // namespace detail

/// Git-style blob hash of the canonical config text (out_dir excluded).
inline std::string input_hash(const ExperimentConfig& c) {
  const auto body = serialize_config(c, false);
  return detail::sha1_hex("blob " + std::to_string(body.size()) + std::string(1, '\0') + body);
}

/// Execute the configured experiment and write its artifacts. Throws ConfigError or NumericError;
/// unreliable estimates are reported through exit_code after all artifacts are written.
inline RunResult run(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create out_dir '" + config.out_dir + "': " + ec.message());

  const std::size_t threads = std::max<std::size_t>(1, options.threads);
  detail::Outcome o;
  const auto& x = config.experiment;
  if (x == "sample") o = detail::run_sample(config, threads);
  else if (x == "pbm") o = detail::run_pbm(config, threads);
  else if (x == "rate-curve") o = detail::run_rate_curve(config, threads);
  else if (x == "gibbs") o = detail::run_gibbs(config, threads);
  else if (x == "maxent") o = detail::run_maxent(config);
  else if (x == "surface-check") o = detail::run_surface_check(config, threads);
  else throw ConfigError("unknown experiment '" + x + "'");

  RunResult res;
  res.exit_code = o.unreliable ? kExitUnreliable : kExitOk;
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& t : o.tables) {
    detail::write_atomic(dir / t.file, t.render());
    outputs.push_back({{"file", t.file}, {"columns", t.columns}, {"rows", t.rows.size()}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.manifest = {{"experiment", x},
                  {"config", detail::config_json(config)},
                  {"results", o.results},
                  {"outputs", outputs},
                  {"library_version", kLibraryVersion},
                  {"input_hash", input_hash(config)},
                  {"wall_time_seconds", wall},
                  {"exit_code", res.exit_code}};
  res.manifest_path = (dir / "manifest.json").string();
  detail::write_atomic(dir / "manifest.json", res.manifest.dump(2) + "\n");
  res.tables = std::move(o.tables);
  return res;
}

}  // namespace lpld
