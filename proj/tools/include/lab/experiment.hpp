#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paneitz/curvature.hpp"

namespace lab {

enum ExitCode : int { kOk = 0, kConfigError = 1, kCriterionFailed = 2, kNonConvergence = 3 };

struct ExperimentConfig {
  int n = 5;
  std::uint64_t seed = 1;
  std::string out = "out";
  // Expression in x1..x_{n+1}, or family(c, ...) with family one of
  // constant, affine, quadratic, bumps.
  std::string K = "1+0.1*x6";

  double eta = 1e-2;
  double c_bar = 0.96;
  double c_0 = 0.1;
  int budget = 3;
  double lambda_min = 1;
  double lambda_max = 1e6;

  double mu = 0;  // 0 = automatic
  double m1 = 0.1;
  int trajectories = 100;
  double init_lambda = 10;
  int basin_starts = 5;

  int l = -1;  // -1 = default upper group
  int seeds = 64;
  int directions = 48;

  double rho = 0.3;
  double c1_tol = 0.05;

  double warm_lambda = 2;
  int grid = 400;
  int max_iters = 40;
  double tolerance = 5e-9;
  double init_noise = 0;

  void validate() const;
};

// Flat key = value lines with [section] headers; '#' and ';' start comments.
// Unknown keys and malformed values throw paneitz::ConfigurationError.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string to_ini(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

paneitz::CurvatureField make_curvature(int n, const std::string& spec);

struct RunResult {
  int exit_code = kOk;
  std::string summary;
  // Relative path -> contents, in a deterministic order.
  std::vector<std::pair<std::string, std::string>> files;
  const std::string* find(const std::string& name) const;
};

RunResult run_verify(const ExperimentConfig& cfg);
RunResult run_flow(const ExperimentConfig& cfg);
RunResult run_morse(const ExperimentConfig& cfg);
RunResult run_perturb(const ExperimentConfig& cfg);
RunResult run_solve(const ExperimentConfig& cfg);

// Writes every file under dir through a temporary name and a rename.
void write_outputs(const RunResult& r, const std::string& dir);

}  // namespace lab
