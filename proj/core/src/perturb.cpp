#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "paneitz/error.hpp"
#include "paneitz/morse.hpp"

namespace paneitz {

namespace {

// Smooth step in log u: 1 for u <= u0, 0 for u >= 1.
struct LogStep {
  double u0;

  static double e(double t) { return t > 0 ? std::exp(-1 / t) : 0.0; }
  static double e1(double t) { return t > 0 ? e(t) / (t * t) : 0.0; }
  static double e2(double t) { return t > 0 ? e(t) * (1 - 2 * t) / (t * t * t * t) : 0.0; }

  // value, first and second derivative in u
  void eval(double u, double& v, double& d1, double& d2) const {
    if (u <= u0) {
      v = 1, d1 = d2 = 0;
      return;
    }
    if (u >= 1) {
      v = d1 = d2 = 0;
      return;
    }
    const double L = -std::log(u0);
    const double tau = (std::log(u) - std::log(u0)) / L;
    const double A = e(1 - tau), A1 = -e1(1 - tau), A2 = e2(1 - tau);
    const double B = e(tau), B1 = e1(tau), B2 = e2(tau);
    const double S = A + B;
    const double N = A1 * B - A * B1;
    const double N1 = A2 * B - A * B2;
    const double D = S * S, D1 = 2 * S * (A1 + B1);
    const double s0 = A / S;
    const double s1 = N / D;
    const double s2 = (N1 * D - N * D1) / (D * D);
    const double t1 = 1 / (u * L), t2 = -1 / (u * u * L);
    v = s0;
    d1 = s1 * t1;
    d2 = s2 * t1 * t1 + s1 * t2;
  }
};

struct Bump {
  Vec z;
  Mat M;  // ambient quadratic form, M z = 0
  double rho;
  LogStep step;
};

class PerturbedSource final : public CurvatureSource {
 public:
  PerturbedSource(std::shared_ptr<const CurvatureSource> base, std::vector<Bump> bumps)
      : base_(std::move(base)), bumps_(std::move(bumps)) {}
  int n() const override { return base_->n(); }
  double value(const VecRef& x) const override {
    double v = base_->value(x);
    for (const auto& b : bumps_) {
      double u = 2 * (1 - x.dot(b.z)) / (b.rho * b.rho);
      double p, p1, p2;
      b.step.eval(u, p, p1, p2);
      if (p != 0) v += p * 0.5 * x.dot(b.M * x);
    }
    return v;
  }
  void ambient_derivatives(const VecRef& x, Vec& grad, Mat* hess) const override {
    base_->ambient_derivatives(x, grad, hess);
    for (const auto& b : bumps_) {
      double u = 2 * (1 - x.dot(b.z)) / (b.rho * b.rho);
      double p, p1, p2;
      b.step.eval(u, p, p1, p2);
      if (p == 0 && p1 == 0 && p2 == 0) continue;
      Vec du = (-2 / (b.rho * b.rho)) * b.z;
      Vec Mx = b.M * x;
      double q = 0.5 * x.dot(Mx);
      Vec dchi = p1 * du;
      grad += p * Mx + q * dchi;
      if (hess) *hess += p * b.M + dchi * Mx.transpose() + Mx * dchi.transpose() + (q * p2) * (du * du.transpose());
    }
  }
  std::string describe() const override {
    std::ostringstream s;
    s << base_->describe() << " + " << bumps_.size() << " local Hessian correction(s)";
    return s.str();
  }

 private:
  std::shared_ptr<const CurvatureSource> base_;
  std::vector<Bump> bumps_;
};

double c1_distance(const CurvatureField& K, const CurvatureField& Kt, const std::vector<CriticalPointRecord>& targets,
                   double rho) {
  double worst = 0;
  const int n = K.n();
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::mt19937_64 rng(split_seed(0x51c1, j));
    std::normal_distribution<double> g;
    Mat E = tangent_frame(targets[j].y);
    for (int i = 0; i < 600; ++i) {
      Vec v(n);
      for (int c = 0; c < n; ++c) v[c] = g(rng);
      v.normalize();
      double r = rho * (i % 30 + 1) / 30.0;
      Point x = exp_map(targets[j].y, E * (r * v));
      double d = std::abs(Kt.value(x) - K.value(x)) + (Kt.gradient(x) - K.gradient(x)).norm();
      worst = std::max(worst, d);
    }
  }
  return worst;
}

}  // namespace

PerturbationReport perturb_K(const CurvatureField& K, const std::vector<CriticalPointRecord>& targets, double rho,
                             double c1_tol, int seeds, std::uint64_t seed) {
  const int n = K.n();
  if (!(rho > 0 && rho <= 1)) throw PreconditionError("perturb_K: rho must lie in (0, 1]");
  if (!(c1_tol > 0)) throw PreconditionError("perturb_K: c1_tol must be positive");
  if (K.uses_finite_differences()) throw PreconditionError("perturb_K needs a curvature with analytic derivatives");

  CriticalSearchOptions so;
  so.seeds = seeds;
  so.seed = seed;
  auto before = find_critical_points(K, so);

  PerturbationReport rep;
  if (targets.empty()) {
    rep.K_tilde = K;
    rep.crits_after = before;
    rep.same_critical_set = rep.same_indices = rep.targets_positive = true;
    return rep;
  }

  std::vector<Bump> bumps;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const Point& z = targets[j].y;
    if (K.gradient(z).norm() > 1e-8) throw PreconditionError("perturb_K: target is not a critical point");
    double lap = K.laplacian(z);
    if (-lap > 0) throw PreconditionError("perturb_K: target already has -Delta K > 0");
    for (std::size_t i = 0; i < j; ++i)
      if (geodesic_distance(z, targets[i].y) <= 2 * rho) throw PreconditionError("perturb_K: target balls overlap");
    for (const auto& c : before)
      if (geodesic_distance(c.y, z) > 1e-6 && geodesic_distance(c.y, z) < rho)
        throw PreconditionError("perturb_K: another critical point lies inside B(z, rho)");
    Mat E = tangent_frame(z);
    Eigen::SelfAdjointEigenSolver<Mat> es(K.hessian_in_frame(z, E));
    const Vec& k = es.eigenvalues();
    double pos = 0, neg = 0;
    for (int i = 0; i < k.size(); ++i) (k[i] < 0 ? neg : pos) += k[i];
    if (!(neg < 0)) throw PreconditionError("perturb_K: target has no negative Hessian eigenvalue");
    double margin = 0.5 * std::max(std::abs(lap), 0.1 * std::abs(neg));
    double s = (pos + margin) / -neg;
    Mat N = Mat::Zero(n, n);
    for (int i = 0; i < k.size(); ++i)
      if (k[i] < 0) N += (s - 1) * k[i] * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
    bumps.push_back({z.coords(), E * N * E.transpose(), rho, LogStep{1e-2}});
  }

  std::vector<Point> local;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::mt19937_64 rng(split_seed(seed ^ 0xb0b, j));
    std::normal_distribution<double> g;
    Mat E = tangent_frame(targets[j].y);
    for (int i = 0; i < 48; ++i) {
      Vec v(n);
      for (int c = 0; c < n; ++c) v[c] = g(rng);
      v.normalize();
      local.push_back(exp_map(targets[j].y, E * (rho * (i % 12 + 1) / 12.0 * v)));
    }
  }
  so.extra_starts = local;

  const double u0s[] = {1e-2, 1e-3, 1e-4, 1e-6};
  for (double u0 : u0s) {
    ++rep.attempts;
    for (auto& b : bumps) b.step.u0 = u0;
    CurvatureField Kt(std::make_shared<PerturbedSource>(K.source(), bumps));
    auto after = find_critical_points(Kt, so);
    bool same_set = after.size() == before.size();
    bool same_idx = same_set;
    if (same_set)
      for (const auto& b : before) {
        auto it = std::find_if(after.begin(), after.end(),
                               [&](const auto& a) { return geodesic_distance(a.y, b.y) < 1e-6; });
        if (it == after.end()) {
          same_set = same_idx = false;
          break;
        }
        same_idx = same_idx && it->index == b.index;
      }
    rep.target_laplacians.clear();
    bool positive = true;
    for (const auto& t : targets) {
      double l = Kt.laplacian(t.y);
      rep.target_laplacians.push_back(l);
      positive = positive && -l > 0;
    }
    rep.K_tilde = Kt;
    rep.crits_after = after;
    rep.same_critical_set = same_set;
    rep.same_indices = same_idx;
    rep.targets_positive = positive;
    rep.c1_distance = c1_distance(K, Kt, targets, rho);
    rep.minimal_feasible_tolerance = rep.c1_distance;
    if (rep.ok()) break;
  }
  if (!rep.ok()) {
    std::ostringstream s;
    s << "perturb_K: critical data changed after " << rep.attempts << " attempts (" << before.size() << " -> "
      << rep.crits_after.size() << " critical points)";
    throw ConvergenceError(s.str());
  }
  if (rep.c1_distance > c1_tol) {
    std::ostringstream s;
    s << "perturb_K: C1 distance " << rep.c1_distance << " exceeds tolerance " << c1_tol;
    throw ToleranceError(s.str(), rep.c1_distance);
  }
  return rep;
}

ReducedIndex reduced_morse_index(const CurvatureField& K_tilde, const Point& z0, double laplacian_tol) {
  const int n = K_tilde.n();
  if (K_tilde.gradient(z0).norm() > 1e-8) throw PreconditionError("reduced_morse_index: z0 is not a critical point");
  ReducedIndex r;
  Mat E = tangent_frame(z0);
  Eigen::SelfAdjointEigenSolver<Mat> es(K_tilde.hessian_in_frame(z0, E));
  r.hessian_eigenvalues = es.eigenvalues();
  int index = static_cast<int>((r.hessian_eigenvalues.array() < 0).count());
  r.z_contribution = n - index;
  r.laplacian = K_tilde.laplacian(z0);
  if (std::abs(r.laplacian) <= laplacian_tol)
    throw DegeneracyError("reduced_morse_index: Delta K vanishes at z0, the lambda direction is indeterminate");
  // d/dlambda of the lambda-pairing is -3c Delta K / lambda^4: unstable when Delta K > 0.
  r.lambda_contribution = r.laplacian > 0 ? 1 : 0;
  r.total = r.z_contribution + r.lambda_contribution;
  return r;
}

}  // namespace paneitz
