#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace paneitz {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

// Throws DomainError unless n >= 5.
int check_dim(int n);

// A unit vector in R^{n+1}.
class Point {
 public:
  Point() = default;
  explicit Point(Vec coords);

  static Point normalized(const Vec& v);
  // e_k with 0-based k in [0, n].
  static Point basis(int n, int k);
  static Point north(int n) { return basis(n, n); }
  static Point south(int n);

  int n() const { return static_cast<int>(x_.size()) - 1; }
  const Vec& coords() const { return x_; }
  double operator[](int i) const { return x_[i]; }
  Point antipode() const;

 private:
  struct Unchecked {};
  Point(Vec coords, Unchecked) : x_(std::move(coords)) {}
  Vec x_;
};

struct Constants {
  int n = 0;
  double c_n = 0, d_n = 0;
  double beta_n = 0;
  double a_n = 0, b_n = 0;
  double vol_Sn = 0;
  // Roots of the factorization P = (A - Delta)(B - Delta).
  double A = 0, B = 0;
};

Constants constants(int n);

// Measure of the unit k-sphere in R^{k+1}.
double sphere_measure(int k);

// c_n^2 - 4 d_n == 4, evaluated in exact rational arithmetic.
bool discriminant_identity_exact(int n);

double geodesic_distance(const Point& a, const Point& b);

// Orthonormal basis of the tangent space at a, as columns of an (n+1) x n
// matrix. Gram-Schmidt on projected ambient basis vectors in index order.
Mat tangent_frame(const Point& a);

// Projection with pole `pole`; the chart centre is -pole and the equator
// orthogonal to the pole maps onto |y| = 1. Coordinates are taken in
// tangent_frame(pole).
Vec stereographic(const Point& pole, const Point& x);
Point stereographic_inverse(const Point& pole, const Vec& y);

// Geodesic exponential at x of an ambient tangent vector v.
Point exp_map(const Point& x, const Vec& v);

Vec tangent_project(const Point& x, const Vec& v);

Point random_point(int n, std::mt19937_64& rng);
Mat random_rotation(int dim, std::mt19937_64& rng);

// Counter-based seed splitter (SplitMix64 finaliser).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t counter);

}  // namespace paneitz
