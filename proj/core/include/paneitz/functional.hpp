#pragma once

#include <optional>
#include <vector>

#include "paneitz/bubbles.hpp"
#include "paneitz/curvature.hpp"
#include "paneitz/quadrature.hpp"

namespace paneitz {

class AxisymField;

struct ExpansionBreakdown {
  double leading = 0;
  double laplacian_term = 0;
  double interaction_term = 0;
  double total = 0;
};

struct FunctionalTolerances {
  double eta = 1e-2;
  double eps_neighborhood = 0.1;
  int quad_budget = 3;
  void validate() const;
};

double J_value(const Configuration& config, const CurvatureField& K, const QuadratureRule& quad);

ExpansionBreakdown expansion_J(const Configuration& config, const CurvatureField& K, const BubbleConstants& consts);

struct GradientPairings {
  double g_lambda = 0;
  Vec g_a;  // in tangent_frame(b.a)
  double J = 0;
};

GradientPairings grad_J_pairings(const Bubble& b, double alpha, const CurvatureField& K, const QuadratureRule& quad);

struct C3Calibration {
  int n = 0;
  double value = 0;  // estimate reported as c3
  double drift = 0;  // (max - min) / value over the window
  std::vector<double> lambdas;
  std::vector<double> samples;
};

// Fits g_a against -2 J^{(2n-4)/(n-4)} grad K / lambda for K = 1 + 0.1 x_{n+1}
// at a point a off the critical set. Cached per n.
const C3Calibration& calibrate_c3(int n, int budget = 3);
std::optional<C3Calibration> cached_c3(int n);

struct GradientPrediction {
  double g_lambda_pred = 0;
  // With c3 unknown this is -2 J^{(2n-4)/(n-4)} grad K / lambda, i.e. c3 = 1.
  Vec g_a_pred;
  std::optional<double> c3_estimate;
  double J = 0;
};

GradientPrediction expansion_grad(const Bubble& b, double alpha, const CurvatureField& K, const BubbleConstants& consts);

double vbar_bound(const Configuration& config, const CurvatureField& K);

double v_eta_measure(const AxisymField& u, const CurvatureField& K);

double normal_form_psi(const Point& a_bar, double l_bar, const CurvatureField& K, const Point& y, double eta_nf,
                       const BubbleConstants& consts);

struct NeighborhoodMembership {
  bool scales_ok = false;       // every lambda_i > 1/eps
  bool weights_ok = false;      // |alpha_i^{8/(n-4)} K(a_i) / alpha_j^{8/(n-4)} K(a_j) - 1| < eps
  bool interactions_ok = false; // every eps_ij < eps
  double max_weight_ratio_dev = 0;
  double max_eps_ij = 0;
  bool member() const { return scales_ok && weights_ok && interactions_ok; }
};

NeighborhoodMembership v_membership(const Configuration& config, const CurvatureField& K, double eps);

}  // namespace paneitz
