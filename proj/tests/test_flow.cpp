#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "paneitz/error.hpp"
#include "paneitz/flow.hpp"
#include "paneitz/functional.hpp"

using namespace paneitz;

namespace {

CurvatureField height(double c, double b, int n = 5) {
  Vec v = Vec::Zero(n + 1);
  v[n] = b;
  return CurvatureField::affine(n, c, v);
}

FlowConfig prepared(const CurvatureField& K) {
  FlowConfig fc;
  fc.crits = find_critical_points(K, 32, 1);
  return prepare_flow_config(K, fc);
}

}  // namespace

TEST_CASE("cutoff profile") {
  CHECK(cutoff_phi(0) == 0.0);
  CHECK(cutoff_phi(10) == doctest::Approx(1));
  double prev = -1;
  for (double t = 0; t < 5; t += 0.05) {
    double v = cutoff_phi(t);
    CHECK(v >= prev);
    CHECK(v >= 0);
    CHECK(v <= 1);
    prev = v;
  }
}

TEST_CASE("automatic mu and the partition band") {
  auto K = height(1, 0.1);
  auto fc = prepared(K);
  REQUIRE(fc.crits.size() == 2);
  CHECK(fc.mu > 0);
  CHECK(fc.mu <= 0.5);
  CHECK(fc.verified_margin > 0);
  CHECK(fc.band_inner < fc.band_outer);
}

TEST_CASE("invalid flow configurations") {
  auto K = height(1, 0.1);
  FlowConfig fc;
  fc.crits = find_critical_points(K, 32, 1);
  fc.m1 = -1;
  CHECK_THROWS_AS(prepare_flow_config(K, fc), ConfigurationError);
  fc.m1 = 0.1;
  fc.lambda_max = 0.5;
  CHECK_THROWS_AS(prepare_flow_config(K, fc), ConfigurationError);
  fc.lambda_max = 1e6;
  fc.mu = 2.0;  // balls of radius 2 mu overlap
  CHECK_THROWS_AS(prepare_flow_config(K, fc), ConfigurationError);
}

TEST_CASE("pseudogradient in the three cases") {
  const int n = 5;
  auto K = height(1, 0.1);
  auto fc = prepared(K);

  Vec eq = Vec::Zero(n + 1);
  eq[0] = 1;
  Point far(eq);
  auto w1 = pseudogradient_W({far, 20, 0}, K, fc);
  Vec g = K.gradient(far);
  CHECK((w1.da - g / (20 * g.norm())).norm() < 1e-14);
  CHECK(w1.dlambda == 0.0);
  CHECK(w1.weights.z1 == 1.0);

  auto ws = pseudogradient_W({Point::south(n), 20, 0}, K, fc);
  CHECK(ws.dlambda == doctest::Approx(-20));
  CHECK(ws.da.norm() == 0.0);
  auto wn = pseudogradient_W({Point::north(n), 20, 0}, K, fc);
  CHECK(wn.dlambda == doctest::Approx(20));
  CHECK(wn.weights.z3 == 1.0);
}

TEST_CASE("pseudogradient speed bounds") {
  const int n = 5;
  auto K = CurvatureField::expression(n, "1 + 0.1*x6 + 0.04*x1*x2");
  auto fc = prepared(K);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 500; ++i) {
    double lam = std::exp(U(rng) * std::log(1e5));
    auto w = pseudogradient_W({random_point(n, rng), lam, 0}, K, fc);
    CHECK(w.da.norm() * lam <= 1 + fc.m1 + 1e-12);
    CHECK(std::abs(w.dlambda) / lam <= 1 + 1e-12);
    CHECK(w.weights.z1 + w.weights.z2 + w.weights.z3 == doctest::Approx(1));
  }
}

TEST_CASE("flow from the exact critical points") {
  const int n = 5;
  auto K = height(1, 0.1);
  auto fc = prepared(K);
  auto up = integrate_flow({Point::north(n), 10, 0}, K, fc);
  CHECK(up.kind == OutcomeKind::BlowUp);
  REQUIRE(up.limit);
  CHECK(geodesic_distance(*up.limit, Point::north(n)) < 1e-12);

  auto down = integrate_flow({Point::south(n), 10, 0}, K, fc);
  CHECK(down.kind == OutcomeKind::LambdaCollapse);
  for (const auto& s : down.trajectory)
    if (s.lambda > fc.lambda_min * 1.01) CHECK(s.lambda == doctest::Approx(10 * std::exp(-s.s)).epsilon(1e-6));
}

TEST_CASE("ensemble blow-up happens only at the maximum") {
  const int n = 5;
  auto K = height(1, 0.1);
  auto fc = prepared(K);
  std::vector<FlowState> inits;
  for (int i = 0; i < 30; ++i) {
    std::mt19937_64 rng(split_seed(77, i));
    inits.push_back({random_point(n, rng), 10, 0});
  }
  auto outs = integrate_ensemble(inits, K, fc);
  for (const auto& o : outs) {
    CHECK(o.kind != OutcomeKind::Wandering);
    if (o.kind == OutcomeKind::BlowUp) {
      CHECK(fc.crits[o.limit_index].laplacian < 0);
      CHECK(geodesic_distance(o.final_state.a, Point::north(n)) < fc.mu / 2);
    }
  }
  // Same inputs, same outputs.
  auto again = integrate_ensemble(inits, K, fc, 1);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    CHECK(again[i].steps == outs[i].steps);
    CHECK(again[i].final_state.lambda == outs[i].final_state.lambda);
    CHECK((again[i].final_state.a.coords() - outs[i].final_state.a.coords()).norm() == 0.0);
  }
}

TEST_CASE("J decreases along W") {
  const int n = 5;
  auto K = height(1, 0.1);
  auto fc = prepared(K);
  std::mt19937_64 rng(split_seed(5, 0));
  auto o = integrate_flow({random_point(n, rng), 10, 0}, K, fc);
  auto rep = decrease_check(o, K, fc);
  CHECK(rep.status == Status::Pass);
  CHECK(rep.checked > 0);
  CHECK(rep.min_ratio > 0);
  std::string csv = trajectory_csv(o, n);
  CHECK(csv.rfind("s,a_1,a_2,a_3,a_4,a_5,a_6,lambda,case_weights_1,case_weights_2,case_weights_3,ratio\n", 0) == 0);

  auto K0 = CurvatureField::constant(n, 1);
  FlowConfig f0;
  f0.mu = 0.3;
  auto o0 = integrate_flow({Point::north(n), 10, 0}, K0, f0);
  CHECK(decrease_check(o0, K0, f0).status == Status::NotApplicable);
}

TEST_CASE("critical points at infinity") {
  const int n = 5;
  auto K = height(1, 0.1);
  auto crits = find_critical_points(K, 32, 1);
  auto inf = critical_points_at_infinity(K, crits);
  REQUIRE(inf.size() == 1);
  CHECK(geodesic_distance(inf[0].y, Point::north(n)) < 1e-12);
  double S = bubble_constants(n).S_n;
  CHECK(inf[0].level == doctest::Approx(std::pow(S, 0.8) * std::pow(1.1, -0.2)).epsilon(1e-12));


  // Bumps at e1 and e6 are exchanged by the reflection swapping x1 and x6.
  Vec c1 = Vec::Zero(n + 1), c6 = Vec::Zero(n + 1);
  c1[0] = 1, c6[n] = 1;
  auto sym = CurvatureField::gaussian_bumps(n, 1, {{c1, 0.3, 0.5}, {c6, 0.3, 0.5}});
  auto two = critical_points_at_infinity(sym, find_critical_points(sym, 48, 2));
  // The two maxima, plus the saddle between them which also has -Delta K > 0.
  REQUIRE(two.size() == 3);
  std::sort(two.begin(), two.end(), [](const auto& a, const auto& b) { return a.K_value > b.K_value; });
  CHECK(std::abs(two[0].level - two[1].level) < 1e-10);
  CHECK(two[2].level > two[0].level);

  auto K1 = CurvatureField::constant(n, 1);
  CHECK_THROWS_AS(critical_points_at_infinity(K1, find_critical_points(K1, 8, 1)), DegeneracyError);
}
