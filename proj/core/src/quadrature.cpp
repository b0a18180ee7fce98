#include "paneitz/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "paneitz/error.hpp"

namespace paneitz {

GaussRule gauss_jacobi(int m, double alpha, double beta) {
  if (m < 1) throw DomainError("Gauss rule needs at least one node");
  if (alpha <= -1 || beta <= -1) throw DomainError("Jacobi exponents must exceed -1");
  const double ab = alpha + beta;
  Vec diag(m), sub(std::max(m - 1, 1));
  for (int k = 0; k < m; ++k) {
    double s = 2.0 * k + ab;
    diag[k] = (k == 0) ? (beta - alpha) / (ab + 2) : (beta * beta - alpha * alpha) / (s * (s + 2));
  }
  for (int k = 1; k < m; ++k) {
    double s = 2.0 * k + ab;
    double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
    double den = s * s * (s + 1) * (s - 1);
    sub[k - 1] = std::sqrt(num / den);
  }
  double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) - std::lgamma(ab + 2));
  GaussRule r;
  if (m == 1) {
    r.nodes = {diag[0]};
    r.weights = {mu0};
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es;
  es.computeFromTridiagonal(diag, sub.head(m - 1), Eigen::ComputeEigenvectors);
  r.nodes.resize(m);
  r.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  // Symmetric weights: enforce exact node symmetry so odd moments cancel.
  if (alpha == beta) {
    for (int i = 0; i < m / 2; ++i) {
      int j = m - 1 - i;
      double x = 0.5 * (r.nodes[j] - r.nodes[i]);
      double w = 0.5 * (r.weights[i] + r.weights[j]);
      r.nodes[i] = -x;
      r.nodes[j] = x;
      r.weights[i] = r.weights[j] = w;
    }
    if (m % 2) r.nodes[m / 2] = 0.0;
  }
  return r;
}

GaussRule gauss_legendre(int m) { return gauss_jacobi(m, 0.0, 0.0); }

SphereRule sphere_product_rule(int d, int q) {
  if (d < 1 || q < 1) throw DomainError("invalid sphere rule request");
  SphereRule r;
  if (d == 1) {
    int m = 2 * q;
    r.nodes.resize(2, m);
    r.weights = Vec::Constant(m, 2 * std::numbers::pi / m);
    for (int k = 0; k < m; ++k) {
      double phi = 2 * std::numbers::pi * (k + 0.5) / m;
      r.nodes(0, k) = std::cos(phi);
      r.nodes(1, k) = std::sin(phi);
    }
    return r;
  }
  SphereRule lower = sphere_product_rule(d - 1, q);
  double g = 0.5 * (d - 2);
  GaussRule gj = gauss_jacobi(q, g, g);
  const int nl = static_cast<int>(lower.weights.size());
  r.nodes.resize(d + 1, q * nl);
  r.weights.resize(q * nl);
  for (int i = 0; i < q; ++i) {
    double t = gj.nodes[i];
    double s = std::sqrt(std::max(0.0, (1 - t) * (1 + t)));
    for (int j = 0; j < nl; ++j) {
      int col = i * nl + j;
      r.nodes.col(col).head(d) = s * lower.nodes.col(j);
      r.nodes(d, col) = t;
      r.weights[col] = gj.weights[i] * lower.weights[j];
    }
  }
  return r;
}

double QuadratureRule::one_minus_cos(int i, const Point& a) const {
  int o = owner[i];
  if (o >= 0 && centers[o].coords() == a.coords()) return omc[i];
  return 0.5 * (nodes.col(i) - a.coords()).squaredNorm();
}

int minimum_budget(int n) {
  check_dim(n);
  return kMinQuadratureBudget;
}

namespace {

void check_budget(int n, int budget) {
  if (budget < minimum_budget(n))
    throw DomainError("quadrature budget " + std::to_string(budget) + " is below the minimum " +
                      std::to_string(minimum_budget(n)) + " for n = " + std::to_string(n));
}

struct RadialNode {
  double omc, sin_theta, weight;
};

// Geodesic radius theta about the centre with lambda tan(theta/2) = tan t,
// Gauss-Legendre panels in t that refine geometrically towards t = pi/2.
std::vector<RadialNode> radial_nodes(int n, double lambda, int per_panel) {
  const double half_pi = 0.5 * std::numbers::pi;
  std::vector<std::pair<double, double>> panels;  // in t
  panels.emplace_back(0.0, 0.25 * std::numbers::pi);
  double w = 0.25 * std::numbers::pi;
  const double w_min = 0.05 / std::max(lambda, 1.0);
  while (w > w_min) {
    panels.emplace_back(half_pi - w, half_pi - 0.5 * w);
    w *= 0.5;
  }
  panels.emplace_back(half_pi - w, half_pi);
  GaussRule gl = gauss_legendre(per_panel);
  std::vector<RadialNode> out;
  out.reserve(panels.size() * per_panel);
  for (auto [lo, hi] : panels) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int k = 0; k < per_panel; ++k) {
      double t = mid + half * gl.nodes[k];
      double st = std::sin(t), ct = std::cos(t);
      double den = lambda * lambda * ct * ct + st * st;
      double omc = 2 * st * st / den;
      double sin_theta = 2 * lambda * st * ct / den;
      double dtheta = 2 * lambda / den;
      double w_node = half * gl.weights[k] * dtheta * std::pow(sin_theta, n - 1);
      out.push_back({omc, sin_theta, w_node});
    }
  }
  return out;
}

QuadratureRule concentrated_rule(int n, const Point& a, double lambda, int budget) {
  Point c = a;
  double l = lambda;
  if (l < 1) {
    c = a.antipode();
    l = 1.0 / l;
  }
  auto radial = radial_nodes(n, l, 12 + 2 * budget);
  SphereRule ang = sphere_product_rule(n - 1, budget);
  Mat E = tangent_frame(c);
  Mat dirs = E * ang.nodes;  // (n+1) x Nang, tangent unit vectors
  const int nr = static_cast<int>(radial.size());
  const int na = static_cast<int>(ang.weights.size());
  QuadratureRule q;
  q.n = n;
  q.nodes.resize(n + 1, nr * na);
  q.weights.resize(nr * na);
  q.omc.resize(nr * na);
  q.owner.assign(nr * na, 0);
  q.centers = {c};
  q.scales = {l};
  for (int i = 0; i < nr; ++i) {
    double cos_theta = 1 - radial[i].omc;
    for (int j = 0; j < na; ++j) {
      int col = i * na + j;
      q.nodes.col(col) = cos_theta * c.coords() + radial[i].sin_theta * dirs.col(j);
      q.weights[col] = radial[i].weight * ang.weights[j];
      q.omc[col] = radial[i].omc;
    }
  }
  return q;
}

QuadratureRule uniform_rule(int n, int budget) {
  SphereRule s = sphere_product_rule(n, 2 * budget);
  QuadratureRule q;
  q.n = n;
  q.nodes = std::move(s.nodes);
  q.weights = std::move(s.weights);
  q.omc = Vec::Zero(q.weights.size());
  q.owner.assign(q.weights.size(), -1);
  return q;
}

}  // namespace

QuadratureRule build_quadrature(int n, const std::optional<Bubble>& concentration, int budget) {
  check_dim(n);
  check_budget(n, budget);
  if (!concentration) return uniform_rule(n, budget);
  if (concentration->a.n() != n) throw DomainError("concentration point has the wrong dimension");
  return concentrated_rule(n, concentration->a, concentration->lambda, budget);
}

QuadratureRule build_quadrature(int n, const std::vector<Bubble>& concentrations, int budget) {
  check_dim(n);
  check_budget(n, budget);
  if (concentrations.empty()) return uniform_rule(n, budget);
  if (concentrations.size() == 1) return build_quadrature(n, std::optional<Bubble>(concentrations[0]), budget);
  // Partition of unity psi_k = delta_k^s / sum_l delta_l^s with s (n-4)/2 = 4.
  const double s = 8.0 / (n - 4);
  std::vector<BubbleKernel> kernels;
  for (const auto& b : concentrations) kernels.emplace_back(b, n);
  QuadratureRule out;
  out.n = n;
  std::vector<QuadratureRule> parts;
  int total = 0;
  for (std::size_t k = 0; k < concentrations.size(); ++k) {
    parts.push_back(concentrated_rule(n, concentrations[k].a, concentrations[k].lambda, budget));
    total += parts.back().size();
  }
  out.nodes.resize(n + 1, total);
  out.weights.resize(total);
  out.omc.resize(total);
  out.owner.resize(total);
  int col = 0;
  std::vector<double> logs(kernels.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    out.centers.push_back(p.centers[0]);
    out.scales.push_back(p.scales[0]);
    for (int i = 0; i < p.size(); ++i, ++col) {
      double mx = -INFINITY;
      for (std::size_t l = 0; l < kernels.size(); ++l) {
        double omc = p.one_minus_cos(i, kernels[l].bubble().a);
        logs[l] = s * kernels[l].log_value(omc);
        mx = std::max(mx, logs[l]);
      }
      double z = 0;
      for (double v : logs) z += std::exp(v - mx);
      double psi = std::exp(logs[k] - mx) / z;
      out.nodes.col(col) = p.nodes.col(i);
      out.weights[col] = p.weights[i] * psi;
      out.omc[col] = p.omc[i];
      out.owner[col] = static_cast<int>(k);
    }
  }
  return out;
}

}  // namespace paneitz
