#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "paneitz/sphere.hpp"

namespace paneitz {

// A function on R^{n+1} whose restriction to S^n is the curvature K.
// Sources report ambient derivatives of that extension; CurvatureField
// converts them to intrinsic quantities.
class CurvatureSource {
 public:
  virtual ~CurvatureSource() = default;
  virtual int n() const = 0;
  virtual double value(const VecRef& x) const = 0;
  // Ambient gradient, and the ambient Hessian when hess != nullptr.
  virtual void ambient_derivatives(const VecRef& x, Vec& grad, Mat* hess) const = 0;
  virtual bool has_ambient_derivatives() const { return true; }
  virtual std::string describe() const = 0;
};

struct GaussianBump {
  Vec center;  // unit vector
  double height = 0;
  double width = 1;  // h * exp(-(1 - x.c) / width^2)
};

struct CurvatureJet {
  double value = 0;
  Vec gradient;  // tangent, ambient coordinates
  Mat hessian;   // ambient matrix acting on the tangent space
  double laplacian = 0;
};

class CurvatureField {
 public:
  CurvatureField() = default;
  explicit CurvatureField(std::shared_ptr<const CurvatureSource> src);

  static CurvatureField constant(int n, double c);
  static CurvatureField affine(int n, double c, const Vec& b);
  static CurvatureField quadratic(int n, double c, const Vec& b, const Mat& A);
  static CurvatureField gaussian_bumps(int n, double c, std::vector<GaussianBump> bumps);
  static CurvatureField expression(int n, const std::string& text);
  // Arbitrary callable; derivatives by geodesic central differences.
  static CurvatureField user(int n, std::function<double(const Point&)> f, std::string label = "user");

  int n() const;
  double value(const Point& x) const { return value(x.coords()); }
  double value(const VecRef& x) const { return src_->value(x); }
  Vec gradient(const Point& x) const;
  Mat hessian(const Point& x) const;
  Mat hessian_in_frame(const Point& x, const Mat& frame) const;
  double laplacian(const Point& x) const;
  CurvatureJet jet(const Point& x) const;

  bool uses_finite_differences() const { return !src_->has_ambient_derivatives(); }
  std::string description() const { return src_->describe(); }
  const std::shared_ptr<const CurvatureSource>& source() const { return src_; }
  explicit operator bool() const { return static_cast<bool>(src_); }

 private:
  CurvatureJet fd_jet(const Point& x, bool want_hessian) const;
  std::shared_ptr<const CurvatureSource> src_;
};

// Parsed arithmetic expression in the ambient variables x1..x_{n+1}.
class Expression {
 public:
  Expression(int n, const std::string& text);
  double eval(const VecRef& x) const;
  // Value, ambient gradient and (optionally) Hessian by forward-mode jets.
  void eval_jet(const VecRef& x, double& value, Vec& grad, Mat* hess) const;
  const std::string& text() const { return text_; }

  enum class Op : unsigned char { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Call };
  enum class Fn : unsigned char { Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Sinh, Cosh, Atan };
  struct Instr {
    Op op;
    Fn fn = Fn::Sin;
    int var = 0;
    double c = 0;
  };

 private:
  template <class T>
  T run(const std::vector<T>& vars, const T& zero) const;
  int n_;
  std::string text_;
  std::vector<Instr> code_;
};

}  // namespace paneitz
