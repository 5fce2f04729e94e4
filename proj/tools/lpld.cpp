// Command-line front end: lpld <subcommand> [--config FILE] [flags]; flags override the file.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lpld/config.hpp"
#include "lpld/runner.hpp"

namespace {

struct Flags {
  std::optional<std::string> config_file, p, q, beta, epsilon, out, measure, method;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget, k, burn_in, thin;
  std::optional<std::vector<std::size_t>> n_list;
  std::size_t threads = 1;
  bool print_config = false;
};

lpld::ExperimentConfig assemble(const std::string& experiment, const Flags& f) {
  lpld::ExperimentConfig c;
  if (f.config_file) c = lpld::load_config(*f.config_file);
  c.experiment = experiment;
  if (f.p) lpld::apply_setting(c, "p", *f.p);
  if (f.q) lpld::apply_setting(c, "q", *f.q);
  if (f.beta) lpld::apply_setting(c, "beta", *f.beta);
  if (f.epsilon) lpld::apply_setting(c, "epsilon", *f.epsilon);
  if (f.out) c.out_dir = *f.out;
  if (f.measure) c.measure = *f.measure;
  if (f.method) c.method = *f.method;
  if (f.seed) c.seed = *f.seed;
  if (f.budget) c.budget = *f.budget;
  if (f.k) c.k = *f.k;
  if (f.burn_in) c.burn_in = *f.burn_in;
  if (f.thin) c.thin = *f.thin;
  if (f.n_list) c.n_list = *f.n_list;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation laboratory for empirical measures on l^p spheres"};
  app.set_version_flag("--version", std::string(lpld::kLibraryVersion));
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config_file, "Flat key = value config file")->option_text("FILE");
  app.add_option("--seed", f.seed, "64-bit RNG seed");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--threads", f.threads, "Worker threads across n_list entries")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", f.print_config, "Print the canonical config and exit");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"sample", "Cone draws: sphere constraint and first-coordinate KS"},
      {"pbm", "Finite-dimensional marginals against mu_p"},
      {"rate-curve", "Rare-event probabilities and rate-slope fit"},
      {"gibbs", "Conditional marginals under the rare event"},
      {"maxent", "Max-entropy optimizer and regime diagram"},
      {"surface-check", "Surface importance-weight bounds"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--p", f.p, "Sphere exponent (number or inf)");
    sub->add_option("--q", f.q, "Moment exponent (number or inf)");
    sub->add_option("--n", f.n_list, "Dimensions")->delimiter(',');
    sub->add_option("--beta", f.beta, "Moment bound beta");
    sub->add_option("--epsilon", f.epsilon, "Interval widening (default 0.01 beta)");
    sub->add_option("--budget", f.budget, "Samples per n");
    sub->add_option("--k", f.k, "Number of marginal coordinates");
    sub->add_option("--measure", f.measure, "cone or surface");
    sub->add_option("--method", f.method, "TiltedIS or Direct");
    sub->add_option("--burn-in", f.burn_in, "Burn-in sweeps");
    sub->add_option("--thin", f.thin, "Sweeps between kept samples");
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lpld::kExitConfig;
  }

  try {
    const auto config = assemble(app.get_subcommands().front()->get_name(), f);
    if (f.print_config) {
      std::cout << lpld::serialize_config(config);
      return lpld::kExitOk;
    }
    const auto res = lpld::run(config, {f.threads});
    std::cout << res.manifest_path << "\n";
    if (res.exit_code == lpld::kExitUnreliable) std::cerr << "warning: at least one estimate is unreliable (low effective sample size)\n";
    return res.exit_code;
  } catch (const lpld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lpld::kExitConfig;
  } catch (const lpld::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return lpld::kExitNumeric;
  } catch (const lpld::UnreliableEstimate& e) {
    std::cerr << "unreliable estimate: " << e.what() << "\n";
    return lpld::kExitUnreliable;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lpld::kExitConfig;
  }
}
