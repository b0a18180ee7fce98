#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <gsl/gsl_sf_gamma.h>

#include "paneitz/bubbles.hpp"
#include "paneitz/quadrature.hpp"

using namespace paneitz;

TEST_CASE("bubble values at anchor points") {
  const double beta = constants(5).beta_n;
  Point a = Point::north(5);
  CHECK(bubble_eval(Bubble(a, 2), a, 5) == doctest::Approx(beta).epsilon(1e-14));
  CHECK(bubble_eval(Bubble(a, 2), a.antipode(), 5) == doctest::Approx(beta / 2).epsilon(1e-14));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i)
    CHECK(bubble_eval(Bubble(a, 1), random_point(5, rng), 5) == doctest::Approx(beta / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("the lambda = 1 bubble is the constant solution d_n^{(n-4)/8}") {
  for (int n = 5; n <= 9; ++n) {
    double oracle = std::pow(constants(n).d_n, (n - 4) / 8.0);
    CHECK(bubble_eval(Bubble(Point::basis(n, 0), 1), Point::basis(n, 1), n) == doctest::Approx(oracle).epsilon(1e-13));
  }
}

TEST_CASE("bubble derivatives") {
  const int n = 5;
  Point a = Point::north(n);
  Bubble b(a, 7);
  auto d = bubble_derivatives(b, a, n);
  CHECK(d.d_lambda == doctest::Approx(0.5 * (n - 4) * bubble_eval(b, a, n)).epsilon(1e-13));
  CHECK(d.d_a.norm() < 1e-12);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 50; ++i) {
    Point c = random_point(n, rng);
    Point x = random_point(n, rng);
    double lam = std::exp(U(rng) * std::log(200.0));
    Bubble bb(c, lam);
    auto dd = bubble_derivatives(bb, x, n);
    const double h = 1e-5;
    double fd = (bubble_eval(Bubble(c, lam * std::exp(h)), x, n) - bubble_eval(Bubble(c, lam * std::exp(-h)), x, n)) / (2 * h);
    CHECK(dd.d_lambda == doctest::Approx(fd).epsilon(1e-6).scale(bubble_eval(bb, x, n)));

    Mat E = tangent_frame(c);
    int j = i % n;
    Vec e = E.col(j);
    double hs = 1e-6 / lam;
    double fda = (bubble_eval(Bubble(exp_map(c, hs * e), lam), x, n) - bubble_eval(Bubble(exp_map(c, -hs * e), lam), x, n)) /
                 (2 * hs) / lam;
    CHECK(dd.d_a[j] == doctest::Approx(fda).epsilon(1e-5).scale(bubble_eval(bb, x, n)));
  }
}

TEST_CASE("interaction epsilon_ij") {
  const int n = 5;
  Point a = Point::basis(n, 3);
  CHECK(epsilon_ij(Bubble(a, 4), Bubble(a, 4), n) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));
  CHECK(epsilon_ij(Bubble(a, 10), Bubble(a.antipode(), 10), n) == doctest::Approx(std::pow(102.0, -0.5)).epsilon(1e-14));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    Bubble bi(random_point(n, rng), 1 + 50 * (i % 13)), bj(random_point(n, rng), 3 + 7 * (i % 5));
    CHECK(epsilon_ij(bi, bj, n) == epsilon_ij(bj, bi, n));
  }
}

TEST_CASE("bubble constants: Beta and radial routes agree") {
  for (int n = 5; n <= 10; ++n) {
    auto b = bubble_constants_beta(n);
    auto r = bubble_constants_radial(n);
    CHECK(r.S_n == doctest::Approx(b.S_n).epsilon(1e-10));
    CHECK(r.c_1 == doctest::Approx(b.c_1).epsilon(1e-10));
    CHECK(r.c_2 == doctest::Approx(b.c_2).epsilon(1e-10));
  }
}

TEST_CASE("S_n equals |S^n| d_n^{n/4}") {
  // The lambda = 1 bubble is constant, so integral of delta^{2n/(n-4)} is elementary.
  for (int n = 5; n <= 10; ++n) {
    double vol = 2 * std::pow(std::numbers::pi, (n + 1) / 2.0) / gsl_sf_gamma((n + 1) / 2.0);
    CHECK(bubble_constants(n).S_n == doctest::Approx(vol * std::pow(constants(n).d_n, n / 4.0)).epsilon(1e-12));
  }
}

TEST_CASE("radial integrand tail is negligible") {
  const double n = 5;
  double R = 1e6;
  double a = radial_integral(n + 2, n, 0, R);
  double b = radial_integral(n + 2, n, 0, 2 * R);
  CHECK(std::abs(a - b) < 1e-10 * b);
  CHECK(radial_integral(n + 2, n, 0, std::numeric_limits<double>::infinity()) == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("concentrated quadrature integrates delta^{2n/(n-4)} to S_n") {
  const int n = 5;
  for (double lam : {10.0, 100.0, 1000.0}) {
    Bubble b(Point::basis(n, 1), lam);
    auto q = build_quadrature(n, std::optional<Bubble>(b), 3);
    BubbleKernel k(b, n);
    double s = q.integrate([&](int i) { return std::pow(k.value(q.one_minus_cos(i, b.a)), 2.0 * n / (n - 4)); });
    CHECK(s == doctest::Approx(bubble_constants(n).S_n).epsilon(1e-6));
  }
}

TEST_CASE("P inner products of bubbles") {
  const int n = 5;
  const double S = bubble_constants(n).S_n;
  Bubble b(Point::north(n), 50);
  auto q = build_quadrature(n, std::optional<Bubble>(b), 3);
  BubbleExpression u{b, BubbleTerm::Value, -1};
  BubbleExpression hl{b, BubbleTerm::LambdaDerivative, -1};
  CHECK(inner_product_P(u, u, n, q) == doctest::Approx(S).epsilon(1e-6));
  CHECK(std::abs(inner_product_P(u, hl, n, q)) < 1e-8 * S);
}

TEST_CASE("bubble interaction approaches c_1 epsilon_ij") {
  const int n = 5;
  const double c1 = bubble_constants(n).c_1;
  Point ai = Point::north(n);
  Vec v = Vec::Zero(n + 1);
  v[0] = 1, v[n] = 1;
  Point aj = Point::normalized(v);
  std::vector<double> dev;
  for (double lam : {10.0, 100.0, 1000.0}) {
    Bubble bi(ai, lam), bj(aj, lam);
    auto q = build_quadrature(n, std::vector<Bubble>{bi, bj}, 3);
    double ip = inner_product_P({bi, BubbleTerm::Value, -1}, {bj, BubbleTerm::Value, -1}, n, q);
    dev.push_back(std::abs(ip / (c1 * epsilon_ij(bi, bj, n)) - 1));
  }
  CHECK(dev[1] < dev[0]);
  CHECK(dev[2] < dev[1]);
  CHECK(dev[2] < 1e-2);
}
