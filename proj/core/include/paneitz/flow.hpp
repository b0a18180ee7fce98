#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "paneitz/curvature.hpp"
#include "paneitz/error.hpp"
#include "paneitz/morse.hpp"

namespace paneitz {

// 0 for t <= 1, 1 for t >= 2, 3s^2 - 2s^3 in between with s = t - 1.
double cutoff_phi(double t);

struct FlowConfig {
  double mu = 0;  // 0 selects choose_mu
  double m1 = 0.1;
  double lambda_min = 1.0;
  double lambda_max = 1e6;
  // Case 2/3 weight is 1 for d <= inner*mu and 0 for d >= outer*mu.
  double band_inner = 0.25;
  double band_outer = 0.5;
  double rtol = 1e-9;
  double atol = 1e-11;
  double min_step = 1e-12;
  double initial_step = 1e-2;
  double time_budget = 0;  // 0 selects a budget from lambda and the diameter
  int max_steps = 200000;
  std::vector<CriticalPointRecord> crits;
  // Margin used for the |Delta K| check on the 2 mu balls, as a fraction of |Delta K(y)|.
  double margin_fraction = 0.5;
  double verified_margin = 0;

  void validate() const;
};

// Shrinks mu from min(0.5, dist/4) by 0.8 until |Delta K| keeps the margin on
// every 2 mu ball. Throws ConfigurationError if that never happens.
double choose_mu(const CurvatureField& K, const std::vector<CriticalPointRecord>& crits, double margin_fraction = 0.5,
                 double* verified_margin = nullptr);

// Fills mu (if zero) and verified_margin; validates.
FlowConfig prepare_flow_config(const CurvatureField& K, FlowConfig cfg);

struct FlowState {
  Point a;
  double lambda = 1;
  double s = 0;
};

struct CaseWeights {
  double z1 = 1, z2 = 0, z3 = 0;
  int nearest = -1;  // index into cfg.crits of the active neighbourhood
};

struct WVector {
  Vec da;  // ambient tangent vector at a
  double dlambda = 0;
  CaseWeights weights;
};

WVector pseudogradient_W(const FlowState& state, const CurvatureField& K, const FlowConfig& cfg);

enum class OutcomeKind { BlowUp, LambdaCollapse, Wandering };
const char* to_string(OutcomeKind k);

struct FlowSample {
  double s = 0;
  Vec a;
  double lambda = 0;
  std::array<double, 3> weights{};
  std::optional<double> ratio;
};

struct FlowOutcome {
  OutcomeKind kind = OutcomeKind::Wandering;
  std::optional<Point> limit;  // the critical point for BlowUp
  int limit_index = -1;        // into cfg.crits
  std::vector<FlowSample> trajectory;
  FlowState final_state;
  int steps = 0;
  int rejected = 0;
  std::string diagnostics;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, std::vector<FlowSample> dump)
      : Error(what), trajectory(std::move(dump)) {}
  std::vector<FlowSample> trajectory;
};

FlowOutcome integrate_flow(const FlowState& init, const CurvatureField& K, const FlowConfig& cfg);

std::vector<FlowOutcome> integrate_ensemble(const std::vector<FlowState>& inits, const CurvatureField& K,
                                            const FlowConfig& cfg, unsigned threads = 0);

struct DecreaseOptions {
  int budget = 2;
  double lambda_lo = 10;
  double lambda_hi = 500;
  double threshold = 0;
  int max_states = 16;  // per trajectory, evenly spread over the eligible samples
};

struct DecreaseReport {
  Status status = Status::Unknown;
  double min_ratio = 0;
  int checked = 0;
  int skipped = 0;
  std::string evidence;
};

// Fills FlowSample::ratio for the checked samples.
DecreaseReport decrease_check(FlowOutcome& traj, const CurvatureField& K, const FlowConfig& cfg,
                              const DecreaseOptions& opts = {});

struct CriticalPointAtInfinity {
  Point y;
  double K_value = 0;
  double laplacian = 0;
  double level = 0;
};

std::vector<CriticalPointAtInfinity> critical_points_at_infinity(const CurvatureField& K,
                                                                 const std::vector<CriticalPointRecord>& crits,
                                                                 double degeneracy_tol = 1e-8);

std::string trajectory_csv(const FlowOutcome& out, int n);

}  // namespace paneitz
