#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/rational.hpp>
#include <gsl/gsl_sf_gamma.h>

#include "paneitz/error.hpp"
#include "paneitz/quadrature.hpp"
#include "paneitz/sphere.hpp"

using namespace paneitz;
using Rat = boost::rational<long long>;

TEST_CASE("dimension below five is rejected") {
  CHECK_THROWS_AS(check_dim(4), DomainError);
  CHECK_THROWS_AS(constants(3), DomainError);
  CHECK(check_dim(5) == 5);
}

TEST_CASE("points are normalized and basis vectors are unit") {
  Vec v(6);
  v << 1, 2, 3, 4, 5, 6;
  Point p = Point::normalized(v);
  CHECK(std::abs(p.coords().norm() - 1) < 1e-12);
  CHECK(Point::north(5)[5] == 1.0);
  CHECK(Point::south(5)[5] == -1.0);
}

TEST_CASE("geodesic distance anchors") {
  Point e1 = Point::basis(5, 0), e2 = Point::basis(5, 1);
  CHECK(geodesic_distance(e1, e1) == doctest::Approx(0).epsilon(1e-15));
  CHECK(geodesic_distance(e1, e1.antipode()) == doctest::Approx(std::numbers::pi).epsilon(1e-15));
  CHECK(geodesic_distance(e1, e2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
}

TEST_CASE("geodesic distance is symmetric and obeys the triangle inequality") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    Point a = random_point(6, rng), b = random_point(6, rng), c = random_point(6, rng);
    double ab = geodesic_distance(a, b), bc = geodesic_distance(b, c), ac = geodesic_distance(a, c);
    CHECK(ab == geodesic_distance(b, a));
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(ab >= 0);
    CHECK(ab <= std::numbers::pi);
  }
}

TEST_CASE("exp map moves by the length of the tangent vector") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    Point a = random_point(5, rng);
    Mat E = tangent_frame(a);
    CHECK((E.transpose() * E - Mat::Identity(5, 5)).norm() < 1e-12);
    CHECK((E.transpose() * a.coords()).norm() < 1e-12);
    Vec w(5);
    for (int k = 0; k < 5; ++k) w[k] = g(rng);
    w *= 0.3 * (i % 7 + 1) / w.norm();
    Point b = exp_map(a, E * w);
    CHECK(geodesic_distance(a, b) == doctest::Approx(w.norm()).epsilon(1e-10));
  }
}

TEST_CASE("stereographic chart") {
  Point a = Point::basis(5, 2);
  CHECK(stereographic(a.antipode(), a).norm() < 1e-14);

  Point pole = Point::north(5);
  Vec eq = Vec::Zero(6);
  eq[0] = 1;
  CHECK(stereographic(pole, Point(eq)).norm() == doctest::Approx(1).epsilon(1e-14));

  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    Point x = random_point(5, rng);
    if (geodesic_distance(x, pole) < 1e-3) continue;
    Vec y = stereographic(pole, x);
    Point back = stereographic_inverse(pole, y);
    CHECK((back.coords() - x.coords()).norm() < 1e-12);
  }
}

TEST_CASE("random rotations are orthogonal with determinant one") {
  std::mt19937_64 rng(5);
  for (int d : {3, 6, 9}) {
    Mat R = random_rotation(d, rng);
    CHECK((R.transpose() * R - Mat::Identity(d, d)).norm() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1).epsilon(1e-12));
  }
}

TEST_CASE("operator constants for n = 5") {
  auto c = constants(5);
  CHECK(c.c_n == doctest::Approx(5.5).epsilon(1e-15));
  CHECK(c.d_n == doctest::Approx(6.5625).epsilon(1e-15));
  CHECK(c.beta_n == doctest::Approx(std::pow(105.0, 1.0 / 8)).epsilon(1e-14));
  CHECK(c.beta_n == doctest::Approx(1.789156).epsilon(1e-6));
  CHECK(c.A == doctest::Approx(3.75));
  CHECK(c.B == doctest::Approx(1.75));
}

TEST_CASE("c_n^2 - 4 d_n = 4 in exact rational arithmetic") {
  for (long long n = 5; n <= 12; ++n) {
    Rat cn = Rat(n * n - 2 * n - 4, 2);
    Rat dn = Rat((n - 4) * n * (n * n - 4), 16);
    CHECK(cn * cn - 4 * dn == Rat(4));
    // Factorization through A = n(n-2)/4 and B = (n-4)(n+2)/4.
    Rat A(n * (n - 2), 4), B((n - 4) * (n + 2), 4);
    CHECK(A + B == cn);
    CHECK(A * B == dn);
    CHECK(discriminant_identity_exact(static_cast<int>(n)));
    auto c = constants(static_cast<int>(n));
    CHECK(c.c_n == doctest::Approx(boost::rational_cast<double>(cn)).epsilon(1e-15));
    CHECK(c.d_n == doctest::Approx(boost::rational_cast<double>(dn)).epsilon(1e-15));
  }
}

TEST_CASE("sphere measure matches the Gamma closed form") {
  for (int k = 1; k <= 12; ++k) {
    double oracle = 2 * std::pow(std::numbers::pi, (k + 1) / 2.0) / gsl_sf_gamma((k + 1) / 2.0);
    CHECK(sphere_measure(k) == doctest::Approx(oracle).epsilon(1e-13));
  }
  CHECK(sphere_measure(5) == doctest::Approx(std::pow(std::numbers::pi, 3)).epsilon(1e-14));
}

TEST_CASE("Gauss-Jacobi rules integrate polynomials against the Beta weight") {
  for (double al : {0.0, 0.5, 1.5}) {
    GaussRule r = gauss_jacobi(12, al, al);
    for (int k = 0; k <= 22; k += 2) {
      double s = 0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
      // int_{-1}^{1} t^k (1 - t^2)^al dt = B((k+1)/2, al+1)
      double oracle = gsl_sf_beta((k + 1) / 2.0, al + 1);
      CHECK(s == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("uniform quadrature on S^5") {
  auto q = build_quadrature(5, std::nullopt, 3);
  double vol = q.integrate([&](int) { return 1.0; });
  CHECK(vol == doctest::Approx(std::pow(std::numbers::pi, 3)).epsilon(1e-8));
  double odd = q.integrate([&](int i) { return q.node(i)[5]; });
  CHECK(std::abs(odd) < 1e-8);
  double second = q.integrate([&](int i) { return q.node(i)[2] * q.node(i)[2]; });
  CHECK(second == doctest::Approx(vol / 6).epsilon(1e-8));
}

TEST_CASE("quadrature budget below the minimum is rejected") {
  CHECK_THROWS_AS(build_quadrature(5, std::nullopt, 1), DomainError);
}

TEST_CASE("split_seed is deterministic and spreads counters") {
  CHECK(split_seed(1, 2) == split_seed(1, 2));
  CHECK(split_seed(1, 2) != split_seed(1, 3));
  CHECK(split_seed(1, 2) != split_seed(2, 2));
}
