#pragma once

#include <optional>
#include <vector>

#include "paneitz/bubbles.hpp"
#include "paneitz/sphere.hpp"

namespace paneitz {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch rule for the weight (1 - t)^alpha (1 + t)^beta on [-1, 1].
GaussRule gauss_jacobi(int m, double alpha, double beta);
GaussRule gauss_legendre(int m);

// Product rule on the unit d-sphere in R^{d+1}; order q per polar angle.
struct SphereRule {
  Mat nodes;  // (d+1) x N
  Vec weights;
};
SphereRule sphere_product_rule(int d, int q);

class QuadratureRule {
 public:
  int n = 0;
  Mat nodes;  // (n+1) x N, one node per column
  Vec weights;
  // 1 - x . c for the owning centre; owner = -1 marks a uniform node.
  Vec omc;
  std::vector<int> owner;
  std::vector<Point> centers;
  std::vector<double> scales;

  int size() const { return static_cast<int>(weights.size()); }
  auto node(int i) const { return nodes.col(i); }
  // 1 - x_i . a, exact when a is the owning centre.
  double one_minus_cos(int i, const Point& a) const;

  template <class F>
  double integrate(F&& f) const {
    double s = 0, comp = 0;
    for (int i = 0; i < size(); ++i) {
      double term = weights[i] * f(i);
      double t = s + term;
      comp += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
      s = t;
    }
    return s + comp;
  }
};

// Budget is the angular order per polar angle; below this it is refused.
constexpr int kMinQuadratureBudget = 2;
int minimum_budget(int n);

QuadratureRule build_quadrature(int n, const std::optional<Bubble>& concentration, int budget);
// Several concentrations glued by a partition of unity built from the bubbles.
QuadratureRule build_quadrature(int n, const std::vector<Bubble>& concentrations, int budget);

}  // namespace paneitz
