#include "paneitz/functional.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "paneitz/axisym.hpp"
#include "paneitz/error.hpp"

namespace paneitz {

void FunctionalTolerances::validate() const {
  if (!(eta > 0) || !(eps_neighborhood > 0) || quad_budget <= 0)
    throw ConfigurationError("functional tolerances must be positive");
}

double J_value(const Configuration& config, const CurvatureField& K, const QuadratureRule& quad) {
  const int n = config.n;
  if (K.n() != n || quad.n != n) throw DomainError("dimension mismatch in J_value");
  const std::size_t P = config.parts.size();
  const double p = (n + 4.0) / (n - 4.0), q = 2.0 * n / (n - 4.0);
  std::vector<BubbleKernel> ker;
  for (const auto& wb : config.parts) ker.emplace_back(wb.bubble, n);
  Mat I = Mat::Zero(P, P);
  double den = 0;
  std::vector<double> d(P);
  for (int i = 0; i < quad.size(); ++i) {
    double u = 0;
    for (std::size_t k = 0; k < P; ++k) {
      d[k] = ker[k].value(quad.one_minus_cos(i, config.parts[k].bubble.a));
      u += config.parts[k].alpha * d[k];
    }
    double kv = K.value(quad.node(i));
    if (!(kv > 0)) throw DomainError("K is not positive at a quadrature node");
    const double w = quad.weights[i];
    den += w * kv * std::pow(std::abs(u), q);
    for (std::size_t a = 0; a < P; ++a) {
      double dp = std::pow(d[a], p);
      for (std::size_t b = 0; b < P; ++b) I(a, b) += w * dp * d[b];
    }
  }
  double num = 0;
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t b = 0; b < P; ++b)
      num += config.parts[a].alpha * config.parts[b].alpha * 0.5 * (I(a, b) + I(b, a));
  if (!(den > 0)) throw DomainError("J denominator is not positive; quadrature failure");
  return num / std::pow(den, (n - 4.0) / n);
}

ExpansionBreakdown expansion_J(const Configuration& config, const CurvatureField& K, const BubbleConstants& consts) {
  const int n = config.n;
  if (consts.n != n || K.n() != n) throw DomainError("dimension mismatch in expansion_J");
  const double q = 2.0 * n / (n - 4.0), r = 8.0 / (n - 4.0);
  const double S = consts.S_n;
  double sa2 = 0, saK = 0;
  std::vector<double> Ka;
  for (const auto& wb : config.parts) {
    Ka.push_back(K.value(wb.bubble.a));
    sa2 += wb.alpha * wb.alpha;
    saK += std::pow(wb.alpha, q) * Ka.back();
  }
  ExpansionBreakdown e;
  e.leading = sa2 * std::pow(S, 4.0 / n) / std::pow(saK, (n - 4.0) / n);
  double lap = 0;
  for (std::size_t i = 0; i < config.parts.size(); ++i) {
    const auto& wb = config.parts[i];
    double lam = wb.bubble.lambda;
    lap += 4 * K.laplacian(wb.bubble.a) * std::pow(wb.alpha, q) / (lam * lam * saK * S);
  }
  e.laplacian_term = consts.c_2 * (n - 4.0) / n * lap;
  double inter = 0;
  for (std::size_t i = 0; i < config.parts.size(); ++i) {
    for (std::size_t j = 0; j < config.parts.size(); ++j) {
      if (i == j) continue;
      const auto& bi = config.parts[i];
      const auto& bj = config.parts[j];
      double eps = epsilon_ij(bi.bubble, bj.bubble, n);
      double bracket = 1.0 / (sa2 * S) - 2 * std::pow(bi.alpha, r) * Ka[i] / (saK * S);
      inter += bi.alpha * bj.alpha * eps * bracket;
    }
  }
  e.interaction_term = consts.c_1 * inter;
  e.total = e.leading * (1 - e.laplacian_term + e.interaction_term);
  return e;
}

GradientPairings grad_J_pairings(const Bubble& b, double alpha, const CurvatureField& K, const QuadratureRule& quad) {
  const int n = b.a.n();
  if (K.n() != n || quad.n != n) throw DomainError("dimension mismatch in grad_J_pairings");
  if (!(alpha > 0)) throw DomainError("alpha must be positive");
  const double p = (n + 4.0) / (n - 4.0), q = 2.0 * n / (n - 4.0);
  BubbleKernel k(b, n);
  const Mat& E = k.frame();
  double A0 = 0, Dk = 0, H1l = 0, H2l = 0;
  Vec H1a = Vec::Zero(n), H2a = Vec::Zero(n);
  for (int i = 0; i < quad.size(); ++i) {
    double omc = quad.one_minus_cos(i, b.a);
    double d = k.value(omc);
    double kv = K.value(quad.node(i));
    double w = quad.weights[i];
    double dp = std::pow(d, p);
    double hl = d * k.lambda_log_derivative(omc);
    double ca = k.center_factor(omc) * d;
    Vec xe = E.transpose() * quad.node(i);
    A0 += w * dp * d;
    Dk += w * kv * dp * d;
    H1l += w * dp * hl;
    H2l += w * kv * dp * hl;
    H1a += (w * dp * ca) * xe;
    H2a += (w * kv * dp * ca) * xe;
  }
  const double N = alpha * alpha * A0;
  const double D = std::pow(alpha, q) * Dk;
  const double pref = 2 * std::pow(D, -(n - 4.0) / n);
  const double ratio = N / D * std::pow(alpha, p);
  GradientPairings g;
  g.g_lambda = pref * (alpha * H1l - ratio * H2l);
  g.g_a = pref * (alpha * H1a - ratio * H2a);
  g.J = N / std::pow(D, (n - 4.0) / n);
  return g;
}

namespace {

std::mutex c3_mu;
std::map<int, C3Calibration> c3_cache;

}  // namespace

const C3Calibration& calibrate_c3(int n, int budget) {
  check_dim(n);
  {
    std::lock_guard<std::mutex> lock(c3_mu);
    auto it = c3_cache.find(n);
    if (it != c3_cache.end()) return it->second;
  }
  Vec b = Vec::Zero(n + 1);
  b[n] = 0.1;
  CurvatureField K = CurvatureField::affine(n, 1.0, b);
  Vec av = Vec::Zero(n + 1);
  av[n] = std::cos(M_PI / 3);
  av[0] = std::sin(M_PI / 3);
  Point a = Point::normalized(av);
  const double S = bubble_constants(n).S_n;
  const double alpha = 1 / std::sqrt(S);
  Vec gradK = K.gradient(a);
  Mat E = tangent_frame(a);
  Vec ghat = E.transpose() * gradK;
  const double gnorm = ghat.norm();
  ghat /= gnorm;
  C3Calibration cal;
  cal.n = n;
  cal.lambdas = {100, 200, 400, 700, 1000};
  for (double lam : cal.lambdas) {
    Bubble bb(a, lam);
    QuadratureRule quad = build_quadrature(n, std::optional<Bubble>(bb), budget);
    GradientPairings g = grad_J_pairings(bb, alpha, K, quad);
    double Jp = std::pow(g.J, (2.0 * n - 4) / (n - 4));
    cal.samples.push_back(-g.g_a.dot(ghat) * lam / (2 * Jp * gnorm));
  }
  cal.value = cal.samples.back();
  auto [mn, mx] = std::minmax_element(cal.samples.begin(), cal.samples.end());
  cal.drift = (*mx - *mn) / std::abs(cal.value);
  std::lock_guard<std::mutex> lock(c3_mu);
  return c3_cache.emplace(n, cal).first->second;
}

std::optional<C3Calibration> cached_c3(int n) {
  std::lock_guard<std::mutex> lock(c3_mu);
  auto it = c3_cache.find(n);
  if (it == c3_cache.end()) return std::nullopt;
  return it->second;
}

GradientPrediction expansion_grad(const Bubble& b, double alpha, const CurvatureField& K, const BubbleConstants& consts) {
  const int n = b.a.n();
  if (consts.n != n || K.n() != n) throw DomainError("dimension mismatch in expansion_grad");
  GradientPrediction g;
  g.J = expansion_J(Configuration::single(b, alpha), K, consts).total;
  const double Jp = std::pow(g.J, (2.0 * n - 4) / (n - 4));
  const double lam = b.lambda;
  g.g_lambda_pred = 8.0 * (n - 4) / n * consts.c_2 * std::pow(alpha, (n + 4.0) / (n - 4)) * Jp * K.laplacian(b.a) /
                    (lam * lam);
  g.c3_estimate = std::nullopt;
  double c3 = 1.0;
  if (auto cal = cached_c3(n)) {
    g.c3_estimate = cal->value;
    c3 = cal->value;
  }
  g.g_a_pred = -2 * c3 * Jp / lam * (tangent_frame(b.a).transpose() * K.gradient(b.a));
  return g;
}

double vbar_bound(const Configuration& config, const CurvatureField& K) {
  const int n = config.n;
  double s = 0;
  for (const auto& wb : config.parts) {
    double lam = wb.bubble.lambda;
    s += K.gradient(wb.bubble.a).norm() / lam + 1 / (lam * lam);
  }
  const double e1 = std::min(1.0, (n + 4.0) / (2.0 * (n - 4))), e2 = std::min((n - 4.0) / n, (n + 4.0) / (2.0 * n));
  for (std::size_t i = 0; i < config.parts.size(); ++i)
    for (std::size_t j = 0; j < config.parts.size(); ++j) {
      if (i == j) continue;
      double eps = epsilon_ij(config.parts[i].bubble, config.parts[j].bubble, n);
      if (eps <= 0) continue;
      double lg = std::log(1 / eps);
      if (lg <= 0) continue;
      s += std::pow(eps, e1) * std::pow(lg, e2);
    }
  return s;
}

double v_eta_measure(const AxisymField& u, const CurvatureField& K) {
  const int n = u.n();
  const RVec& v = u.values();
  if (v.cwiseAbs().maxCoeff() == 0) throw DomainError("v_eta_measure of the zero field");
  RVec Kv = axisym_curvature(u.grid(), K);
  const Real q = Real(2 * n) / (n - 4);
  Real neg = 0;
  for (int k = 0; k < v.size(); ++k)
    if (v[k] < 0) neg += u.grid().weights()[k] * std::pow(-v[k], q);
  if (neg == 0) return 0;
  // Membership is defined on the unit P-sphere; J is scale invariant.
  Real norm = norm_P(u);
  if (!(norm > 0)) throw DomainError("field has non-positive P-norm");
  Real um = std::pow(neg, 1 / q) / norm;
  Real J = J_axisym(u, Kv);
  Real logm = Real(2 * n - 4) / (n - 4) * std::log(J) + 2 * J + Real(8) / (n - 4) * std::log(um);
  return static_cast<double>(std::exp(logm));
}

double normal_form_psi(const Point& a_bar, double l_bar, const CurvatureField& K, const Point& y, double eta_nf,
                       const BubbleConstants& consts) {
  const int n = K.n();
  double lapy = K.laplacian(y);
  if (!(-lapy > 0)) throw PreconditionError("normal form requires -Delta K(y) > 0");
  if (!(eta_nf > 0 && eta_nf < 1)) throw PreconditionError("eta must lie in (0, 1)");
  if (!(l_bar > 0)) throw PreconditionError("lambda_bar must be positive");
  const double S = consts.S_n;
  double lead = std::pow(S, 4.0 / n) / std::pow(K.value(a_bar), (n - 4.0) / n);
  if (std::isinf(l_bar)) return lead;
  double corr = 4.0 * (n - 4) / (n * S) * consts.c_2 * (1 - eta_nf) / (l_bar * l_bar) * lapy / K.value(y);
  return lead * (1 - corr);
}

NeighborhoodMembership v_membership(const Configuration& config, const CurvatureField& K, double eps) {
  const int n = config.n;
  NeighborhoodMembership m;
  m.scales_ok = std::all_of(config.parts.begin(), config.parts.end(),
                            [&](const WeightedBubble& wb) { return wb.bubble.lambda > 1 / eps; });
  const double r = 8.0 / (n - 4);
  for (const auto& bi : config.parts)
    for (const auto& bj : config.parts) {
      double ri = std::pow(bi.alpha, r) * K.value(bi.bubble.a);
      double rj = std::pow(bj.alpha, r) * K.value(bj.bubble.a);
      m.max_weight_ratio_dev = std::max(m.max_weight_ratio_dev, std::abs(ri / rj - 1));
    }
  for (std::size_t i = 0; i < config.parts.size(); ++i)
    for (std::size_t j = i + 1; j < config.parts.size(); ++j)
      m.max_eps_ij = std::max(m.max_eps_ij, epsilon_ij(config.parts[i].bubble, config.parts[j].bubble, n));
  m.weights_ok = m.max_weight_ratio_dev < eps;
  m.interactions_ok = m.max_eps_ij < eps;
  return m;
}

}  // namespace paneitz
