#include "paneitz/bubbles.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "paneitz/error.hpp"
#include "paneitz/quadrature.hpp"

namespace paneitz {

Bubble::Bubble(Point a_, double lambda_) : a(std::move(a_)), lambda(lambda_) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("bubble scale lambda must be positive and finite");
}

WeightedBubble::WeightedBubble(double alpha_, Bubble b) : alpha(alpha_), bubble(std::move(b)) {
  if (!(alpha > 0)) throw DomainError("bubble weight alpha must be positive");
}

Configuration::Configuration(int n_, std::vector<WeightedBubble> parts_) : n(check_dim(n_)), parts(std::move(parts_)) {
  if (parts.empty()) throw DomainError("configuration needs at least one bubble");
  for (const auto& p : parts)
    if (p.bubble.a.n() != n) throw DomainError("bubble centre dimension does not match n");
}

Configuration Configuration::single(const Bubble& b, double alpha) {
  return Configuration(b.a.n(), {WeightedBubble(alpha, b)});
}

BubbleKernel::BubbleKernel(const Bubble& b, int n) : b_(b), n_(n) {
  const Constants c = constants(n);
  half_nm4_ = 0.5 * (n - 4);
  half_l2m1_ = 0.5 * (b.lambda * b.lambda - 1.0);
  log_prefactor_ = std::log(c.beta_n) + half_nm4_ * (std::log(b.lambda) - std::log(2.0));
  frame_ = tangent_frame(b.a);
}

double BubbleKernel::value(double omc) const { return std::exp(log_value(omc)); }

double BubbleKernel::log_value(double omc) const { return log_prefactor_ - half_nm4_ * std::log(denom(omc)); }

double BubbleKernel::lambda_log_derivative(double omc) const {
  double l2 = b_.lambda * b_.lambda;
  return half_nm4_ * (1.0 - l2 * omc / denom(omc));
}

double BubbleKernel::center_factor(double omc) const { return half_nm4_ * half_l2m1_ / (b_.lambda * denom(omc)); }

namespace {

double omc_of(const Point& x, const Point& a) { return 0.5 * (x.coords() - a.coords()).squaredNorm(); }

}  // namespace

double bubble_eval(const Bubble& b, const Point& x, int n) {
  check_dim(n);
  if (x.n() != n || b.a.n() != n) throw DomainError("dimension mismatch in bubble_eval");
  return BubbleKernel(b, n).value(omc_of(x, b.a));
}

BubbleDerivatives bubble_derivatives(const Bubble& b, const Point& x, int n) {
  check_dim(n);
  if (x.n() != n || b.a.n() != n) throw DomainError("dimension mismatch in bubble_derivatives");
  BubbleKernel k(b, n);
  double omc = omc_of(x, b.a);
  double v = k.value(omc);
  BubbleDerivatives d;
  d.d_lambda = v * k.lambda_log_derivative(omc);
  d.d_a = (k.center_factor(omc) * v) * (k.frame().transpose() * x.coords());
  return d;
}

double epsilon_ij(const Bubble& bi, const Bubble& bj, int n) {
  check_dim(n);
  double li = bi.lambda, lj = bj.lambda;
  double omc = 0.5 * (bi.a.coords() - bj.a.coords()).squaredNorm();
  double bracket = li / lj + lj / li + 0.5 * li * lj * omc;
  return std::pow(bracket, -0.5 * (n - 4));
}

double radial_integral(double a, double s, double lo, double hi) {
  auto f = [a, s](double r) { return r == 0 ? (a == 1 ? 1.0 : 0.0) : std::pow(r, a - 1) * std::pow(1 + r * r, -s); };
  double err = 0;
  // Split at r = 1 so both pieces are smooth over a scaled range.
  auto piece = [&](double x0, double x1) {
    if (!(x1 > x0)) return 0.0;
    double e = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x0, x1, 25, 1e-15, &e);
    err += e;
    return v;
  };
  double total = 0;
  if (lo < 1 && hi > 1) total = piece(lo, 1.0) + piece(1.0, hi);
  else total = piece(lo, hi);
  return total;
}

BubbleConstants bubble_constants_beta(int n) {
  check_dim(n);
  const Constants c = constants(n);
  const double nd = n;
  const double bpow = std::pow(c.beta_n, 2 * nd / (nd - 4));
  const double omega = sphere_measure(n - 1);
  BubbleConstants k;
  k.n = n;
  k.S_n = bpow * omega * std::beta(nd / 2, nd / 2) / 2;
  k.c_1 = bpow * omega * std::beta(nd / 2, 2.0) / 2;
  k.c_2 = bpow * omega * std::beta((nd + 2) / 2, (nd - 2) / 2) / 2 / (2 * nd);
  return k;
}

BubbleConstants bubble_constants_radial(int n) {
  check_dim(n);
  const Constants c = constants(n);
  const double nd = n;
  const double bpow = std::pow(c.beta_n, 2 * nd / (nd - 4));
  const double omega = sphere_measure(n - 1);
  const double inf = std::numeric_limits<double>::infinity();
  BubbleConstants k;
  k.n = n;
  k.S_n = bpow * omega * radial_integral(nd, nd, 0, inf);
  k.c_1 = bpow * omega * radial_integral(nd, 0.5 * (nd + 4), 0, inf);
  k.c_2 = bpow * omega * radial_integral(nd + 2, nd, 0, inf) / (2 * nd);
  return k;
}

const BubbleConstants& bubble_constants(int n) {
  static std::mutex mu;
  static std::map<int, BubbleConstants> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  BubbleConstants b = bubble_constants_beta(n);
  BubbleConstants r = bubble_constants_radial(n);
  auto agree = [](double x, double y) { return std::abs(x - y) <= 1e-10 * std::abs(y); };
  if (!agree(r.S_n, b.S_n) || !agree(r.c_1, b.c_1) || !agree(r.c_2, b.c_2))
    throw ConsistencyError("radial and Beta-function bubble constants disagree for n = " + std::to_string(n));
  return cache.emplace(n, b).first->second;
}

namespace {

double term_at(const BubbleExpression& e, const BubbleKernel& k, const QuadratureRule& q, int i, double& value_out) {
  double omc = q.one_minus_cos(i, e.bubble.a);
  double v = k.value(omc);
  value_out = v;
  switch (e.term) {
    case BubbleTerm::Value: return v;
    case BubbleTerm::LambdaDerivative: return v * k.lambda_log_derivative(omc);
    case BubbleTerm::CenterDerivative:
      return k.center_factor(omc) * v * q.node(i).dot(k.frame().col(e.frame_index));
  }
  throw NotImplementedError("unsupported bubble expression");
}

void check_expression(const BubbleExpression& e, int n) {
  if (e.bubble.a.n() != n) throw DomainError("bubble expression dimension mismatch");
  switch (e.term) {
    case BubbleTerm::Value:
    case BubbleTerm::LambdaDerivative: return;
    case BubbleTerm::CenterDerivative:
      if (e.frame_index < 0 || e.frame_index >= n)
        throw NotImplementedError("centre derivative index outside the tangent frame");
      return;
  }
  throw NotImplementedError("unsupported bubble expression kind");
}

}  // namespace

double inner_product_P(const BubbleExpression& u, const BubbleExpression& h, int n, const QuadratureRule& quad) {
  check_dim(n);
  check_expression(u, n);
  check_expression(h, n);
  if (quad.n != n) throw DomainError("quadrature dimension mismatch");
  const double p = (n + 4.0) / (n - 4.0);
  BubbleKernel ku(u.bubble, n), kh(h.bubble, n);
  return quad.integrate([&](int i) {
    double du = 0, dh = 0;
    double tu = term_at(u, ku, quad, i, du);
    double th = term_at(h, kh, quad, i, dh);
    // P(D delta) = D(delta^p) = p delta^{p-1} D delta.
    if (u.term == BubbleTerm::Value) return std::pow(du, p) * th;
    return p * std::pow(du, p - 1) * tu * th;
  });
}

}  // namespace paneitz
