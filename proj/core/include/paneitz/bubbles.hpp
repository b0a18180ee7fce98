#pragma once

#include <vector>

#include "paneitz/sphere.hpp"

namespace paneitz {

class QuadratureRule;

struct Bubble {
  Point a;
  double lambda = 1;

  Bubble() = default;
  Bubble(Point a, double lambda);
};

struct WeightedBubble {
  double alpha = 1;
  Bubble bubble;

  WeightedBubble() = default;
  WeightedBubble(double alpha, Bubble b);
};

struct Configuration {
  int n = 0;
  std::vector<WeightedBubble> parts;

  Configuration() = default;
  Configuration(int n, std::vector<WeightedBubble> parts);
  static Configuration single(const Bubble& b, double alpha = 1.0);
};

// Evaluates one bubble and its parameter derivatives from 1 - cos d(x, a).
class BubbleKernel {
 public:
  BubbleKernel(const Bubble& b, int n);

  double denom(double omc) const { return 1.0 + half_l2m1_ * omc; }
  double value(double omc) const;
  double log_value(double omc) const;
  // lambda * d/dlambda of log(delta).
  double lambda_log_derivative(double omc) const;
  // (1/lambda) d/da_j delta = center_factor(omc) * delta * (x . e_j).
  double center_factor(double omc) const;

  const Bubble& bubble() const { return b_; }
  const Mat& frame() const { return frame_; }
  double exponent() const { return half_nm4_; }

 private:
  Bubble b_;
  int n_;
  double half_nm4_;
  double half_l2m1_;
  double log_prefactor_;
  Mat frame_;
};

struct BubbleDerivatives {
  double d_lambda = 0;  // lambda * d delta / d lambda
  Vec d_a;              // (1/lambda) d delta / d a_j in tangent_frame(a)
};

double bubble_eval(const Bubble& b, const Point& x, int n);
BubbleDerivatives bubble_derivatives(const Bubble& b, const Point& x, int n);
double epsilon_ij(const Bubble& bi, const Bubble& bj, int n);

struct BubbleConstants {
  int n = 0;
  double S_n = 0, c_1 = 0, c_2 = 0;
};

// Both evaluation routes, exposed for cross-checking.
BubbleConstants bubble_constants_beta(int n);
BubbleConstants bubble_constants_radial(int n);

// Agreed value of the two routes (rel 1e-10); cached per n.
const BubbleConstants& bubble_constants(int n);

// Flat-space radial integral of r^{a-1} (1 + r^2)^{-s} over [lo, hi].
double radial_integral(double a, double s, double lo, double hi);

enum class BubbleTerm { Value, LambdaDerivative, CenterDerivative };

struct BubbleExpression {
  Bubble bubble;
  BubbleTerm term = BubbleTerm::Value;
  int frame_index = -1;  // for CenterDerivative, 0-based column of tangent_frame(a)
};

// <u, h>_P computed through P(delta) = delta^{(n+4)/(n-4)}.
double inner_product_P(const BubbleExpression& u, const BubbleExpression& h, int n, const QuadratureRule& quad);

}  // namespace paneitz
