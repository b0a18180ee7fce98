#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paneitz/curvature.hpp"

namespace paneitz {

using Real = long double;
using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Zonal functions u(t), t = cos(theta), sampled on a mapped Chebyshev-Gauss-Lobatto
// grid: xi_k = cos(pi k / M), t = sin(s pi xi / 2) / sin(s pi / 2). The map with
// s close to 1 spreads nodes near the poles so that concentrated bubbles resolve.
// Node 0 is theta = 0 (north pole), node M is theta = pi.
class AxisymGrid {
 public:
  AxisymGrid(int n, int M, double map_strength = 0.97);

  int n() const { return n_; }
  int M() const { return M_; }
  int size() const { return M_ + 1; }
  double map_strength() const { return s_; }

  const RVec& t() const { return t_; }
  const RVec& one_minus_t() const { return omt_; }
  const RVec& one_plus_t() const { return opt_; }
  std::vector<double> theta() const;
  // Volume weights: integral over S^n of a zonal function = sum w_k u_k.
  const RVec& weights() const { return w_; }

  RVec d_dt(const RVec& u) const;
  RVec laplacian(const RVec& u) const;
  RVec paneitz(const RVec& u) const;

  // Dense double-precision copy of the Laplacian matrix (for factorisation).
  Eigen::MatrixXd laplacian_matrix() const;

 private:
  int n_, M_;
  double s_;
  RVec t_, omt_, opt_, gp_, w_;
  RMat doff_;  // (c_i / c_j) / (xi_i - xi_j), zero on the diagonal
};

class AxisymField {
 public:
  AxisymField(std::shared_ptr<const AxisymGrid> grid, RVec values);
  static AxisymField sample(std::shared_ptr<const AxisymGrid> grid, const std::function<Real(Real t, Real omt, Real opt)>& f);

  const AxisymGrid& grid() const { return *grid_; }
  const std::shared_ptr<const AxisymGrid>& grid_ptr() const { return grid_; }
  const RVec& values() const { return v_; }
  RVec& values() { return v_; }
  int n() const { return grid_->n(); }

 private:
  std::shared_ptr<const AxisymGrid> grid_;
  RVec v_;
};

enum class Pole { North, South };

// Bubble centred at a pole, sampled on the grid.
AxisymField axisym_bubble(std::shared_ptr<const AxisymGrid> grid, double lambda, Pole pole = Pole::North);

AxisymField laplacian_axisym(const AxisymField& u);
AxisymField paneitz_apply(const AxisymField& u);

Real integrate(const AxisymField& u);
// <u, v>_P = integral of (P u) v.
Real pairing_P(const AxisymField& u, const AxisymField& v);
Real norm_P(const AxisymField& u);

// Restriction of K to the meridian; throws PreconditionError unless K is
// invariant under rotations fixing the x_{n+1} axis (sampled check).
RVec axisym_curvature(const AxisymGrid& grid, const CurvatureField& K);

// J(u) = ||u||_P^2 / (int K |u|^{2n/(n-4)})^{(n-4)/n}.
Real J_axisym(const AxisymField& u, const RVec& K);

struct BubbleFit {
  double alpha = 0;
  Pole pole = Pole::North;
  double lambda = 1;
  double fit_residual = 0;  // ||u - alpha delta||_P / ||u||_P
  // All local minima over (pole, lambda), best first.
  std::vector<BubbleFit> candidates;
};

BubbleFit fit_single_bubble(const AxisymField& u);

struct SolveOptions {
  int max_iters = 40;
  double tolerance = 5e-9;  // on residual_sup
  int refinement_steps = 4;
  double min_step = 1.0 / 1024;
  bool fit_bubble = true;
  double eta = 1e-2;
};

struct SolveReport {
  bool converged = false;
  double residual_sup = 0;  // sup|F| / sup|K u_+^p|
  int newton_iters = 0;
  bool positivity = false;
  std::optional<BubbleFit> bubble_fit;
  double J = 0;
  double v_eta = 0;
  std::vector<double> residual_history;  // accepted merit values sup|F|
  std::vector<double> relative_history;
  std::string stop_reason;
};

// Damped Newton for P u = K u_+^{(n+4)/(n-4)}.
std::pair<AxisymField, SolveReport> solve_equation3(const CurvatureField& K, const AxisymField& init,
                                                    const SolveOptions& opts = {});

// Relative residual sup|P u - K u_+^p| / sup|K u_+^p|.
double equation3_residual(const AxisymField& u, const RVec& K);

// Solves (P - diag(q)) w = f with iterative refinement in extended precision.
RVec solve_linearized(const AxisymGrid& grid, const RVec& q, const RVec& f, int refinement_steps = 4);

struct NegativePart {
  double u_minus_norm = 0;  // |u^-|_{L^{2n/(n-4)}}
  AxisymField w_minus;
  double w_minus_norm = 0;  // ||w^-||_P
  double w1_ratio = 0;
  double w_minus_max = 0;   // w^- <= 0 is expected
  // c_K |u^-|^{2n/(n-4)},  ||w^-||^2,  |u^-|^{2(n+4)/(n-4)} (without C)
  double chain_lhs = 0, chain_mid = 0, chain_rhs = 0;
};

NegativePart negative_part_machinery(const AxisymField& u, const CurvatureField& K);

}  // namespace paneitz
