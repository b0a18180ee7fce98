#include "paneitz/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/rational.hpp>

#include "paneitz/error.hpp"

namespace paneitz {

namespace {

constexpr double kUnitTol = 1e-12;

}  // namespace

int check_dim(int n) {
  if (n < 5) throw DomainError("dimension n must be at least 5, got " + std::to_string(n));
  return n;
}

Point::Point(Vec coords) : x_(std::move(coords)) {
  if (x_.size() < 2) throw DomainError("point needs at least two ambient coordinates");
  if (!x_.allFinite() || std::abs(x_.norm() - 1.0) > kUnitTol)
    throw DomainError("point is not a unit vector (norm " + std::to_string(x_.norm()) + ")");
}

Point Point::normalized(const Vec& v) {
  double r = v.norm();
  if (!(r > 0) || !std::isfinite(r)) throw DomainError("cannot normalise a zero or non-finite vector");
  return Point(v / r, Unchecked{});
}

Point Point::basis(int n, int k) {
  if (k < 0 || k > n) throw DomainError("basis index out of range");
  Vec e = Vec::Zero(n + 1);
  e[k] = 1.0;
  return Point(std::move(e), Unchecked{});
}

Point Point::south(int n) { return basis(n, n).antipode(); }

Point Point::antipode() const { return Point(-x_, Unchecked{}); }

double sphere_measure(int k) {
  double h = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

Constants constants(int n) {
  check_dim(n);
  Constants c;
  c.n = n;
  double nd = n;
  c.c_n = 0.5 * (nd * nd - 2 * nd - 4);
  c.d_n = nd * (nd * nd - 4) * (nd - 4) / 16.0;
  c.beta_n = std::pow((nd - 4) * (nd - 2) * nd * (nd + 2), (nd - 4) / 8.0);
  c.a_n = ((nd - 2) * (nd - 2) + 4) / (2 * (nd - 1) * (nd - 2));
  c.b_n = -4.0 / (nd - 2);
  c.vol_Sn = sphere_measure(n);
  c.A = nd * (nd - 2) / 4.0;
  c.B = (nd - 4) * (nd + 2) / 4.0;
  return c;
}

bool discriminant_identity_exact(int n) {
  using Q = boost::rational<long long>;
  long long m = n;
  Q c(m * m - 2 * m - 4, 2);
  Q d(m * (m * m - 4) * (m - 4), 16);
  return c * c - 4 * d == Q(4);
}

double geodesic_distance(const Point& a, const Point& b) {
  if (a.n() != b.n()) throw DomainError("points live on spheres of different dimension");
  double c = std::clamp(a.coords().dot(b.coords()), -1.0, 1.0);
  return std::acos(c);
}

Mat tangent_frame(const Point& a) {
  const int d = a.n() + 1;
  const Vec& x = a.coords();
  Mat frame(d, d - 1);
  int filled = 0;
  for (int k = 0; k < d && filled < d - 1; ++k) {
    Vec v = -x[k] * x;
    v[k] += 1.0;
    for (int j = 0; j < filled; ++j) v -= frame.col(j).dot(v) * frame.col(j);
    // Second pass keeps the frame orthonormal to rounding.
    for (int j = 0; j < filled; ++j) v -= frame.col(j).dot(v) * frame.col(j);
    v -= x.dot(v) * x;
    double r = v.norm();
    if (r < 1e-8) continue;
    frame.col(filled++) = v / r;
  }
  if (filled != d - 1) throw Error("tangent frame construction failed");
  return frame;
}

Vec tangent_project(const Point& x, const Vec& v) { return v - x.coords().dot(v) * x.coords(); }

Vec stereographic(const Point& pole, const Point& x) {
  const Vec& p = pole.coords();
  if (pole.n() != x.n()) throw DomainError("dimension mismatch in stereographic chart");
  double denom = 1.0 - x.coords().dot(p);
  if ((x.coords() - p).norm() < 1e-12 || denom <= 0)
    throw SingularityError("stereographic projection evaluated at its pole");
  Vec t = x.coords() - x.coords().dot(p) * p;
  return tangent_frame(pole).transpose() * t / denom;
}

Point stereographic_inverse(const Point& pole, const Vec& y) {
  if (y.size() != pole.n()) throw DomainError("chart vector has the wrong length");
  Vec ya = tangent_frame(pole) * y;
  double r2 = y.squaredNorm();
  Vec x = (2.0 * ya + (r2 - 1.0) * pole.coords()) / (1.0 + r2);
  return Point::normalized(x);
}

Point exp_map(const Point& x, const Vec& v) {
  double r = v.norm();
  if (r == 0) return x;
  return Point::normalized(std::cos(r) * x.coords() + std::sin(r) / r * v);
}

Point random_point(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec v(n + 1);
  do {
    for (int i = 0; i <= n; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-6);
  return Point::normalized(v);
}

Mat random_rotation(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) m(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  // Haar on O(dim); flip one column to land in SO(dim).
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace paneitz
