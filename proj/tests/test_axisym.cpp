#include <doctest.h>

#include <cmath>
#include <memory>

#include <boost/rational.hpp>
#include <gsl/gsl_sf_gegenbauer.h>

#include "paneitz/axisym.hpp"
#include "paneitz/error.hpp"
#include "paneitz/functional.hpp"

using namespace paneitz;
using Rat = boost::rational<long long>;

namespace {

// Gegenbauer C_k^{g}(t) by the three-term recurrence, in long double.
Real gegenbauer(int k, Real g, Real t) {
  Real c0 = 1, c1 = 2 * g * t;
  if (k == 0) return c0;
  for (int j = 2; j <= k; ++j) {
    Real c2 = (2 * t * (j + g - 1) * c1 - (j + 2 * g - 2) * c0) / j;
    c0 = c1, c1 = c2;
  }
  return c1;
}

Rat lambda_k(long long n, long long k) {
  Rat mu(k * (k + n - 1));
  return (mu + Rat(n * (n - 2), 4)) * (mu + Rat((n - 4) * (n + 2), 4));
}

Real sup_rel(const RVec& a, const RVec& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

std::shared_ptr<const AxisymGrid> grid(int n = 5, int M = 400) { return std::make_shared<const AxisymGrid>(n, M); }

AxisymField southern_bump(std::shared_ptr<const AxisymGrid> g, Real height, Real width) {
  return AxisymField::sample(g, [=](Real, Real, Real opt) { return height * std::exp(-opt / width); });
}

}  // namespace

TEST_CASE("recurrence oracle agrees with GSL") {
  for (int k : {0, 1, 5, 20})
    for (double t : {-0.9, -0.2, 0.3, 0.99})
      CHECK(static_cast<double>(gegenbauer(k, 2.0L, t)) == doctest::Approx(gsl_sf_gegenpoly_n(k, 2.0, t)).epsilon(1e-12));
}

TEST_CASE("Laplacian on low zonal harmonics") {
  auto g = grid();
  const int n = 5;
  auto one = AxisymField::sample(g, [](Real, Real, Real) { return Real(1); });
  CHECK(laplacian_axisym(one).values().cwiseAbs().maxCoeff() < 1e-10);
  auto c = AxisymField::sample(g, [](Real t, Real, Real) { return t; });
  CHECK((laplacian_axisym(c).values() + n * c.values()).cwiseAbs().maxCoeff() < 1e-10);
  auto c2 = AxisymField::sample(g, [](Real t, Real, Real) { return t * t - Real(1) / (n + 1); });
  CHECK(sup_rel(laplacian_axisym(c2).values(), -2 * (n + 1) * c2.values()) < 1e-8);
}

TEST_CASE("Paneitz operator on constants") {
  auto g = grid();
  auto one = AxisymField::sample(g, [](Real, Real, Real) { return Real(1); });
  CHECK((paneitz_apply(one).values().array() - 6.5625L).abs().maxCoeff() < 1e-10);
}

TEST_CASE("spectral factorization on zonal harmonics") {
  // Roundoff in the fourth-order operator grows with M; 200 nodes resolve k <= 20.
  for (int n : {5, 6}) {
    auto g = grid(n, 200);
    const Real gam = Real(n - 1) / 2;
    for (int k = 0; k <= 20; ++k) {
      auto u = AxisymField::sample(g, [&](Real t, Real, Real) { return gegenbauer(k, gam, t); });
      Rat L = lambda_k(n, k);
      Real Lk = Real(L.numerator()) / Real(L.denominator());
      CHECK(static_cast<double>(sup_rel(paneitz_apply(u).values(), Lk * u.values())) < 1e-8);
    }
  }
  CHECK(lambda_k(5, 0) == Rat(105, 16));
  CHECK(boost::rational_cast<double>(lambda_k(5, 1)) == 59.0625);
}

TEST_CASE("the bubble solves the constant curvature equation") {
  auto g = grid();
  RVec K1 = RVec::Ones(g->size());
  for (double lam : {1.0, 10.0, 100.0}) CHECK(equation3_residual(axisym_bubble(g, lam), K1) < 1e-6);
  auto s = axisym_bubble(g, 10, Pole::South);
  CHECK(equation3_residual(s, K1) < 1e-6);
  // The volume weights integrate the critical power to S_n.
  auto b = axisym_bubble(g, 10);
  Real q = 0;
  for (int i = 0; i < g->size(); ++i) q += g->weights()[i] * std::pow(b.values()[i], Real(10));
  CHECK(static_cast<double>(q) == doctest::Approx(bubble_constants(5).S_n).epsilon(1e-8));
  CHECK(static_cast<double>(pairing_P(b, b)) == doctest::Approx(bubble_constants(5).S_n).epsilon(1e-8));
}

TEST_CASE("curvature restriction requires axial symmetry") {
  auto g = grid();
  CHECK_NOTHROW(axisym_curvature(*g, CurvatureField::expression(5, "1+0.1*x6")));
  CHECK_THROWS_AS(axisym_curvature(*g, CurvatureField::expression(5, "1+0.1*x1")), PreconditionError);
}

TEST_CASE("single bubble fit") {
  auto g = grid();
  auto f = fit_single_bubble(axisym_bubble(g, 7));
  CHECK(f.alpha == doctest::Approx(1).epsilon(1e-8));
  CHECK(f.lambda == doctest::Approx(7).epsilon(1e-8));
  CHECK(f.pole == Pole::North);
  CHECK(f.fit_residual < 1e-10);

  auto s = fit_single_bubble(axisym_bubble(g, 4, Pole::South));
  CHECK(s.pole == Pole::South);
  CHECK(s.lambda == doctest::Approx(4).epsilon(1e-8));

  auto one = AxisymField::sample(g, [](Real, Real, Real) { return Real(1); });
  auto c = fit_single_bubble(one);
  CHECK(c.fit_residual < 1e-8);
  CHECK(c.lambda == doctest::Approx(1).epsilon(1e-6));

  // 1% high-frequency noise.
  auto noisy = axisym_bubble(g, 7);
  auto noise = AxisymField::sample(g, [](Real t, Real, Real) { return gegenbauer(14, 2.0L, t) / gegenbauer(14, 2.0L, 1); });
  Real scale = 0.01L * norm_P(noisy) / norm_P(noise);
  noisy.values() += scale * noise.values();
  auto fn = fit_single_bubble(noisy);
  CHECK(fn.lambda == doctest::Approx(7).epsilon(1e-2));
  CHECK(fn.fit_residual == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("Newton solve with constant curvature") {
  auto g = grid();
  const int n = 5;
  auto init = axisym_bubble(g, 2);
  for (int k = 0; k < g->size(); ++k) init.values()[k] *= 1 + 0.01L * g->t()[k];
  auto [u1, r1] = solve_equation3(CurvatureField::constant(n, 1), init);
  CHECK(r1.converged);
  CHECK(r1.residual_sup < 1e-8);
  REQUIRE(r1.bubble_fit);
  CHECK(r1.bubble_fit->fit_residual < 1e-6);
  CHECK(r1.positivity);
  CHECK(r1.v_eta == 0.0);

  const double c = 3;
  AxisymField init_c = init;
  init_c.values() *= static_cast<Real>(std::pow(c, -(n - 4) / 8.0));
  auto [uc, rc] = solve_equation3(CurvatureField::constant(n, c), init_c);
  CHECK(rc.converged);
  RVec scaled = static_cast<Real>(std::pow(c, -(n - 4) / 8.0)) * u1.values();
  CHECK(static_cast<double>(sup_rel(uc.values(), scaled)) < 1e-6);
}

TEST_CASE("monotone curvature has no solution to converge to") {
  // K = 1 + 0.1 cos(theta) is obstructed: every iterate keeps a residual.
  auto g = grid(5, 200);
  SolveOptions o;
  o.max_iters = 15;
  auto [u, r] = solve_equation3(CurvatureField::expression(5, "1+0.1*x6"), axisym_bubble(g, 5), o);
  CHECK_FALSE(r.converged);
  CHECK(r.residual_sup > 1e-8);
}

TEST_CASE("negative part machinery") {
  auto g = grid();
  auto K = CurvatureField::constant(5, 1);
  auto pos = axisym_bubble(g, 3);
  auto z = negative_part_machinery(pos, K);
  CHECK(z.u_minus_norm == 0.0);
  CHECK(z.w_minus_norm == 0.0);
  CHECK(z.w1_ratio == 0.0);
  CHECK(v_eta_measure(pos, K) == 0.0);
  auto one = AxisymField::sample(g, [](Real t, Real, Real) { return 2 + t; });
  CHECK(v_eta_measure(one, K) == 0.0);

  // Scaling u^- by t scales w^- by t^{(n+4)/(n-4)}.
  auto bump = southern_bump(g, 1, 0.05L);
  AxisymField u1(g, pos.values() - bump.values());
  auto base = negative_part_machinery(u1, K);
  REQUIRE(base.w_minus_norm > 0);
  CHECK(base.w_minus_max <= 0);
  for (Real t : {0.5L, 2.0L, 7.0L}) {
    RVec v = pos.values();
    for (int i = 0; i < g->size(); ++i) {
      Real um = std::max<Real>(-u1.values()[i], 0);
      v[i] = std::max<Real>(u1.values()[i], 0) - t * um;
    }
    auto s = negative_part_machinery(AxisymField(g, v), K);
    double expect = base.w_minus_norm * std::pow(static_cast<double>(t), 9.0);
    CHECK(s.w_minus_norm == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("w1 ratio stays bounded along the manufactured family") {
  auto g = grid();
  auto K = CurvatureField::constant(5, 1);
  auto b = axisym_bubble(g, 10);
  Real south = b.values()[g->size() - 1];
  auto bump = southern_bump(g, 1, 0.05L);
  double lo = 1e300, hi = 0;
  for (double eps : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    // Height chosen so that u^- is non-trivial already at the smallest eps.
    AxisymField u(g, b.values() - static_cast<Real>(eps) * 2000 * south * bump.values());
    auto r = negative_part_machinery(u, K);
    REQUIRE(r.w1_ratio > 0);
    lo = std::min(lo, r.w1_ratio);
    hi = std::max(hi, r.w1_ratio);
    CHECK(v_eta_measure(u, K) > 0);
  }
  CHECK(hi / lo < 10);
}
