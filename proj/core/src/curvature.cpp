#include "paneitz/curvature.hpp"

#include <cmath>
#include <sstream>

#include "paneitz/error.hpp"

namespace paneitz {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_vec(const Vec& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_num(v[i]);
  return s + "]";
}

class QuadraticSource final : public CurvatureSource {
 public:
  QuadraticSource(int n, double c, Vec b, Mat A, std::string kind)
      : n_(n), c_(c), b_(std::move(b)), A_(std::move(A)), kind_(std::move(kind)) {
    if (b_.size() != n_ + 1 || A_.rows() != n_ + 1 || A_.cols() != n_ + 1)
      throw ConfigurationError("curvature coefficients have the wrong size for n = " + std::to_string(n_));
    A_ = 0.5 * (A_ + A_.transpose()).eval();
  }
  int n() const override { return n_; }
  double value(const VecRef& x) const override { return c_ + b_.dot(x) + x.dot(A_ * x); }
  void ambient_derivatives(const VecRef& x, Vec& g, Mat* h) const override {
    g = b_ + 2.0 * A_ * x;
    if (h) *h = 2.0 * A_;
  }
  std::string describe() const override {
    if (kind_ == "constant") return "constant(" + fmt_num(c_) + ")";
    if (kind_ == "affine") return "affine(c=" + fmt_num(c_) + ",b=" + fmt_vec(b_) + ")";
    std::string s = "quadratic(c=" + fmt_num(c_) + ",b=" + fmt_vec(b_) + ",A=[";
    for (int i = 0; i <= n_; ++i) s += (i ? "," : "") + fmt_vec(A_.row(i).transpose());
    return s + "])";
  }

 private:
  int n_;
  double c_;
  Vec b_;
  Mat A_;
  std::string kind_;
};

class BumpSource final : public CurvatureSource {
 public:
  BumpSource(int n, double c, std::vector<GaussianBump> bumps) : n_(n), c_(c), bumps_(std::move(bumps)) {
    for (auto& b : bumps_) {
      if (b.center.size() != n_ + 1) throw ConfigurationError("bump centre has the wrong size");
      if (!(b.width > 0)) throw ConfigurationError("bump width must be positive");
      b.center.normalize();
    }
  }
  int n() const override { return n_; }
  double value(const VecRef& x) const override {
    double v = c_;
    for (const auto& b : bumps_) v += b.height * std::exp(-(1.0 - b.center.dot(x)) / (b.width * b.width));
    return v;
  }
  void ambient_derivatives(const VecRef& x, Vec& g, Mat* h) const override {
    g = Vec::Zero(n_ + 1);
    if (h) *h = Mat::Zero(n_ + 1, n_ + 1);
    for (const auto& b : bumps_) {
      double s = 1.0 / (b.width * b.width);
      double e = b.height * std::exp(-(1.0 - b.center.dot(x)) * s);
      g += e * s * b.center;
      if (h) *h += e * s * s * b.center * b.center.transpose();
    }
  }
  std::string describe() const override {
    std::string s = "bumps(c=" + fmt_num(c_);
    for (const auto& b : bumps_)
      s += ";{center=" + fmt_vec(b.center) + ",height=" + fmt_num(b.height) + ",width=" + fmt_num(b.width) + "}";
    return s + ")";
  }

 private:
  int n_;
  double c_;
  std::vector<GaussianBump> bumps_;
};

class ExpressionSource final : public CurvatureSource {
 public:
  ExpressionSource(int n, const std::string& text) : n_(n), expr_(n, text) {}
  int n() const override { return n_; }
  double value(const VecRef& x) const override { return expr_.eval(x); }
  void ambient_derivatives(const VecRef& x, Vec& g, Mat* h) const override {
    double v;
    expr_.eval_jet(x, v, g, h);
  }
  std::string describe() const override { return "expr(" + expr_.text() + ")"; }

 private:
  int n_;
  Expression expr_;
};

class UserSource final : public CurvatureSource {
 public:
  UserSource(int n, std::function<double(const Point&)> f, std::string label)
      : n_(n), f_(std::move(f)), label_(std::move(label)) {}
  int n() const override { return n_; }
  double value(const VecRef& x) const override { return f_(Point::normalized(x)); }
  void ambient_derivatives(const VecRef&, Vec&, Mat*) const override {
    throw NotImplementedError("user curvature has no ambient derivatives");
  }
  bool has_ambient_derivatives() const override { return false; }
  std::string describe() const override { return "user(" + label_ + ")"; }

 private:
  int n_;
  std::function<double(const Point&)> f_;
  std::string label_;
};

}  // namespace

CurvatureField::CurvatureField(std::shared_ptr<const CurvatureSource> src) : src_(std::move(src)) {
  if (!src_) throw ConfigurationError("null curvature source");
  check_dim(src_->n());
}

CurvatureField CurvatureField::constant(int n, double c) {
  check_dim(n);
  return CurvatureField(std::make_shared<QuadraticSource>(n, c, Vec::Zero(n + 1), Mat::Zero(n + 1, n + 1), "constant"));
}

CurvatureField CurvatureField::affine(int n, double c, const Vec& b) {
  check_dim(n);
  return CurvatureField(std::make_shared<QuadraticSource>(n, c, b, Mat::Zero(n + 1, n + 1), "affine"));
}

CurvatureField CurvatureField::quadratic(int n, double c, const Vec& b, const Mat& A) {
  check_dim(n);
  return CurvatureField(std::make_shared<QuadraticSource>(n, c, b, A, "quadratic"));
}

CurvatureField CurvatureField::gaussian_bumps(int n, double c, std::vector<GaussianBump> bumps) {
  check_dim(n);
  return CurvatureField(std::make_shared<BumpSource>(n, c, std::move(bumps)));
}

CurvatureField CurvatureField::expression(int n, const std::string& text) {
  check_dim(n);
  return CurvatureField(std::make_shared<ExpressionSource>(n, text));
}

CurvatureField CurvatureField::user(int n, std::function<double(const Point&)> f, std::string label) {
  check_dim(n);
  return CurvatureField(std::make_shared<UserSource>(n, std::move(f), std::move(label)));
}

int CurvatureField::n() const { return src_->n(); }

CurvatureJet CurvatureField::jet(const Point& x) const {
  if (x.n() != n()) throw DomainError("point dimension does not match curvature dimension");
  if (uses_finite_differences()) return fd_jet(x, true);
  const Vec& p = x.coords();
  Vec G;
  Mat H;
  src_->ambient_derivatives(p, G, &H);
  const int d = n() + 1;
  Mat P = Mat::Identity(d, d) - p * p.transpose();
  double radial = p.dot(G);
  CurvatureJet j;
  j.value = src_->value(p);
  j.gradient = P * G;
  j.hessian = P * H * P - radial * P;
  j.laplacian = H.trace() - p.dot(H * p) - n() * radial;
  return j;
}

Vec CurvatureField::gradient(const Point& x) const {
  if (uses_finite_differences()) return fd_jet(x, false).gradient;
  Vec G;
  src_->ambient_derivatives(x.coords(), G, nullptr);
  return G - x.coords().dot(G) * x.coords();
}

Mat CurvatureField::hessian(const Point& x) const { return jet(x).hessian; }

Mat CurvatureField::hessian_in_frame(const Point& x, const Mat& frame) const {
  return frame.transpose() * hessian(x) * frame;
}

double CurvatureField::laplacian(const Point& x) const { return jet(x).laplacian; }

CurvatureJet CurvatureField::fd_jet(const Point& x, bool want_hessian) const {
  // Central differences in geodesic normal coordinates at x.
  const int n = this->n();
  Mat E = tangent_frame(x);
  auto f = [&](const Vec& v) { return src_->value(exp_map(x, E * v).coords()); };
  CurvatureJet j;
  j.value = src_->value(x.coords());
  const double h1 = 1e-5, h2 = 1e-3;
  Vec g(n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = h1;
    g[k] = (f(e) - f(-e)) / (2 * h1);
  }
  j.gradient = E * g;
  if (want_hessian) {
    Mat Hf(n, n);
    for (int a = 0; a < n; ++a) {
      Vec ea = Vec::Zero(n);
      ea[a] = h2;
      Hf(a, a) = (f(ea) - 2 * j.value + f(-ea)) / (h2 * h2);
      for (int b = 0; b < a; ++b) {
        Vec eb = Vec::Zero(n);
        eb[b] = h2;
        double v = (f(ea + eb) - f(ea - eb) - f(eb - ea) + f(-ea - eb)) / (4 * h2 * h2);
        Hf(a, b) = Hf(b, a) = v;
      }
    }
    j.hessian = E * Hf * E.transpose();
    j.laplacian = Hf.trace();
  }
  return j;
}

}  // namespace paneitz
