#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lab/experiment.hpp"
#include "paneitz/error.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<int> n;
  std::optional<std::string> K;
  std::optional<double> eta, cbar, c0, mu, m1, warm_lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> budget;

  lab::ExperimentConfig apply() const {
    lab::ExperimentConfig c;
    if (!config.empty()) c = lab::load_config(config);
    if (n) c.n = *n;
    if (K) c.K = *K;
    if (eta) c.eta = *eta;
    if (cbar) c.c_bar = *cbar;
    if (c0) c.c_0 = *c0;
    if (mu) c.mu = *mu;
    if (m1) c.m1 = *m1;
    if (warm_lambda) c.warm_lambda = *warm_lambda;
    if (seed) c.seed = *seed;
    if (out) c.out = *out;
    if (budget) c.budget = *budget;
    return c;
  }
};

void add_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  sub->add_option("--n", o.n, "sphere dimension (>= 5)");
  sub->add_option("--K", o.K, "curvature: expression in x1..x_{n+1} or family(...)");
  sub->add_option("--eta", o.eta, "positivity threshold eta");
  sub->add_option("--cbar", o.cbar, "lower curvature bound c_bar");
  sub->add_option("--c0", o.c0, "pinching constant c_0");
  sub->add_option("--mu", o.mu, "flow neighbourhood radius (0 = automatic)");
  sub->add_option("--m1", o.m1, "flow constant m1");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--budget", o.budget, "quadrature budget");
  sub->add_option("--warm-lambda", o.warm_lambda, "bubble concentration of the solver warm start");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for prescribed Paneitz curvature on spheres"};
  app.require_subcommand(1);
  Overrides o;
  using Runner = lab::RunResult (*)(const lab::ExperimentConfig&);
  std::vector<std::pair<CLI::App*, Runner>> subs = {
      {app.add_subcommand("verify", "constants, expansion, gradient and normal-form checks"), lab::run_verify},
      {app.add_subcommand("flow", "pseudogradient flow ensemble and classification"), lab::run_flow},
      {app.add_subcommand("morse", "critical points, Morse complex and assumption report"), lab::run_morse},
      {app.add_subcommand("perturb", "local perturbation of K at saddle points"), lab::run_perturb},
      {app.add_subcommand("solve", "Newton solve of the axisymmetric equation"), lab::run_solve},
  };
  for (auto& [sub, fn] : subs) add_flags(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : lab::kConfigError;
  }

  try {
    lab::ExperimentConfig cfg = o.apply();
    cfg.validate();
    for (auto& [sub, fn] : subs) {
      if (!sub->parsed()) continue;
      lab::RunResult r = fn(cfg);
      lab::write_outputs(r, cfg.out);
      std::cout << r.summary << "\n";
      return r.exit_code;
    }
  } catch (const paneitz::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lab::kNonConvergence;
  } catch (const paneitz::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return lab::kConfigError;
  } catch (const paneitz::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return lab::kConfigError;
  } catch (const paneitz::PreconditionError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return lab::kConfigError;
  } catch (const paneitz::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lab::kCriterionFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lab::kCriterionFailed;
  }
  return lab::kConfigError;
}
