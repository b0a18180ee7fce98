#include "paneitz/axisym.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "paneitz/error.hpp"
#include "paneitz/functional.hpp"

namespace paneitz {

namespace {

const Real kPi = 3.14159265358979323846264338327950288L;

Real pow_r(Real a, Real b) { return std::pow(a, b); }

RVec clenshaw_curtis(int N) {
  RVec w = RVec::Zero(N + 1);
  RVec v = RVec::Ones(N - 1);
  auto theta = [&](int i) { return kPi * i / N; };
  if (N % 2 == 0) {
    w[0] = w[N] = 1.0L / (Real(N) * N - 1);
    for (int k = 1; k < N / 2; ++k)
      for (int i = 1; i < N; ++i) v[i - 1] -= 2 * std::cos(2 * k * theta(i)) / (4.0L * k * k - 1);
    for (int i = 1; i < N; ++i) v[i - 1] -= std::cos(N * theta(i)) / (Real(N) * N - 1);
  } else {
    w[0] = w[N] = 1.0L / (Real(N) * N);
    for (int k = 1; k <= (N - 1) / 2; ++k)
      for (int i = 1; i < N; ++i) v[i - 1] -= 2 * std::cos(2 * k * theta(i)) / (4.0L * k * k - 1);
  }
  for (int i = 1; i < N; ++i) w[i] = 2 * v[i - 1] / N;
  return w;
}

}  // namespace

AxisymGrid::AxisymGrid(int n, int M, double map_strength) : n_(check_dim(n)), M_(M), s_(map_strength) {
  if (M < 8) throw DomainError("axisymmetric grid needs at least 8 intervals");
  if (!(map_strength >= 0 && map_strength < 1)) throw DomainError("grid map strength must lie in [0, 1)");
  const int N = M + 1;
  t_.resize(N);
  omt_.resize(N);
  opt_.resize(N);
  gp_.resize(N);
  RVec A(N), c(N);
  for (int k = 0; k < N; ++k) {
    A[k] = kPi * k / M;
    c[k] = ((k == 0 || k == M) ? 2.0L : 1.0L) * ((k % 2) ? -1.0L : 1.0L);
  }
  for (int k = 0; k < N; ++k) {
    Real sa = std::sin(A[k] / 2), sb = std::sin((kPi - A[k]) / 2);
    Real one_m_xi = 2 * sa * sa, one_p_xi = 2 * sb * sb;
    Real xi = std::cos(A[k]);
    if (s_ <= 1e-12) {
      t_[k] = xi;
      omt_[k] = one_m_xi;
      opt_[k] = one_p_xi;
      gp_[k] = 1;
    } else {
      Real h = Real(s_) * kPi / 2;
      Real S = std::sin(h);
      Real a = h * xi;
      t_[k] = std::sin(a) / S;
      gp_[k] = h * std::cos(a) / S;
      // b - a = h (1 - xi), a + b = h (1 + xi).
      omt_[k] = 2 * std::cos(h * (2 - one_m_xi) / 2) * std::sin(h * one_m_xi / 2) / S;
      opt_[k] = 2 * std::cos(h * one_m_xi / 2) * std::sin(h * one_p_xi / 2) / S;
    }
  }
  t_[0] = 1;
  omt_[0] = 0;
  t_[M] = -1;
  opt_[M] = 0;
  doff_.resize(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i == j) {
        doff_(i, j) = 0;
        continue;
      }
      Real x = -2 * std::sin((A[i] + A[j]) / 2) * std::sin((A[i] - A[j]) / 2);
      doff_(i, j) = (c[i] / c[j]) / x;
    }
  }
  RVec cc = clenshaw_curtis(M);
  const Real omega = sphere_measure(n - 1);
  const Real e = Real(n - 2) / 2;
  w_.resize(N);
  for (int k = 0; k < N; ++k) w_[k] = omega * cc[k] * gp_[k] * pow_r(omt_[k] * opt_[k], e);
}

std::vector<double> AxisymGrid::theta() const {
  std::vector<double> th(size());
  for (int k = 0; k < size(); ++k) {
    // 2 asin(sqrt((1 - t)/2)) is accurate near both poles.
    th[k] = static_cast<double>(2 * std::asin(std::sqrt(omt_[k] / 2)));
  }
  return th;
}

RVec AxisymGrid::d_dt(const RVec& u) const {
  const int N = size();
  RVec out(N);
  for (int i = 0; i < N; ++i) {
    Real s = 0;
    const Real ui = u[i];
    for (int j = 0; j < N; ++j) s += doff_(i, j) * (u[j] - ui);
    out[i] = s / gp_[i];
  }
  return out;
}

RVec AxisymGrid::laplacian(const RVec& u) const {
  RVec ut = d_dt(u);
  RVec utt = d_dt(ut);
  RVec out(size());
  for (int k = 0; k < size(); ++k) out[k] = omt_[k] * opt_[k] * utt[k] - n_ * t_[k] * ut[k];
  return out;
}

RVec AxisymGrid::paneitz(const RVec& u) const {
  const Constants c = constants(n_);
  RVec Lu = laplacian(u);
  RVec LLu = laplacian(Lu);
  return LLu - Real(c.c_n) * Lu + Real(c.d_n) * u;
}

Eigen::MatrixXd AxisymGrid::laplacian_matrix() const {
  const int N = size();
  RMat D(N, N);
  for (int i = 0; i < N; ++i) {
    Real row = 0;
    for (int j = 0; j < N; ++j) {
      D(i, j) = doff_(i, j) / gp_[i];
      row += D(i, j);
    }
    D(i, i) = -row;
  }
  Eigen::MatrixXd Dd = D.cast<double>();
  Eigen::MatrixXd L = Dd * Dd;
  for (int i = 0; i < N; ++i) {
    L.row(i) *= static_cast<double>(omt_[i] * opt_[i]);
    L.row(i) -= static_cast<double>(n_ * t_[i]) * Dd.row(i);
  }
  return L;
}

AxisymField::AxisymField(std::shared_ptr<const AxisymGrid> grid, RVec values) : grid_(std::move(grid)), v_(std::move(values)) {
  if (!grid_) throw DomainError("axisymmetric field without a grid");
  if (v_.size() != grid_->size()) throw DomainError("field size does not match the grid");
  for (int k = 0; k < v_.size(); ++k)
    if (!std::isfinite(static_cast<double>(v_[k]))) throw DomainError("axisymmetric field has non-finite values");
}

AxisymField AxisymField::sample(std::shared_ptr<const AxisymGrid> grid,
                                const std::function<Real(Real, Real, Real)>& f) {
  RVec v(grid->size());
  for (int k = 0; k < grid->size(); ++k) v[k] = f(grid->t()[k], grid->one_minus_t()[k], grid->one_plus_t()[k]);
  return AxisymField(grid, std::move(v));
}

AxisymField axisym_bubble(std::shared_ptr<const AxisymGrid> grid, double lambda, Pole pole) {
  if (!(lambda > 0)) throw DomainError("bubble scale must be positive");
  const int n = grid->n();
  const Real e = Real(n - 4) / 2;
  const Real l = lambda;
  const Real pre = std::pow(Real((n - 4) * (n - 2) * n * (n + 2)), Real(n - 4) / 8) * std::pow(l / 2, e);
  const Real h = (l * l - 1) / 2;
  return AxisymField::sample(grid, [&](Real, Real omt, Real opt) {
    Real omc = pole == Pole::North ? omt : opt;
    return pre / std::pow(1 + h * omc, e);
  });
}

AxisymField laplacian_axisym(const AxisymField& u) { return AxisymField(u.grid_ptr(), u.grid().laplacian(u.values())); }

AxisymField paneitz_apply(const AxisymField& u) { return AxisymField(u.grid_ptr(), u.grid().paneitz(u.values())); }

Real integrate(const AxisymField& u) { return u.grid().weights().dot(u.values()); }

Real pairing_P(const AxisymField& u, const AxisymField& v) {
  RVec Pu = u.grid().paneitz(u.values());
  return (u.grid().weights().array() * Pu.array() * v.values().array()).sum();
}

Real norm_P(const AxisymField& u) {
  Real q = pairing_P(u, u);
  return std::sqrt(std::max<Real>(q, 0));
}

RVec axisym_curvature(const AxisymGrid& grid, const CurvatureField& K) {
  const int n = grid.n();
  if (K.n() != n) throw DomainError("curvature dimension does not match the grid");
  auto meridian = [&](Real omt, Real opt, Real t) {
    Vec x = Vec::Zero(n + 1);
    x[0] = static_cast<double>(std::sqrt(omt * opt));
    x[n] = static_cast<double>(t);
    return x;
  };
  RVec out(grid.size());
  for (int k = 0; k < grid.size(); ++k)
    out[k] = K.value(meridian(grid.one_minus_t()[k], grid.one_plus_t()[k], grid.t()[k]));
  // Sampled symmetry check under rotations fixing the axis.
  std::mt19937_64 rng(0x5eed);
  for (int trial = 0; trial < 3; ++trial) {
    Mat R = random_rotation(n, rng);
    for (int k = 1; k < grid.size() - 1; k += std::max(1, grid.size() / 9)) {
      Vec x = meridian(grid.one_minus_t()[k], grid.one_plus_t()[k], grid.t()[k]);
      Vec y = x;
      y.head(n) = R * x.head(n);
      double a = K.value(x), b = K.value(y);
      if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a)))
        throw PreconditionError("curvature is not axially symmetric about the x_{n+1} axis");
    }
  }
  return out;
}

Real J_axisym(const AxisymField& u, const RVec& K) {
  const int n = u.n();
  Real num = pairing_P(u, u);
  const Real q = Real(2 * n) / (n - 4);
  Real den = 0;
  for (int k = 0; k < u.grid().size(); ++k)
    den += u.grid().weights()[k] * K[k] * std::pow(std::abs(u.values()[k]), q);
  if (!(den > 0)) throw DomainError("J denominator vanishes");
  return num / std::pow(den, Real(n - 4) / n);
}

double equation3_residual(const AxisymField& u, const RVec& K) {
  const int n = u.n();
  const Real p = Real(n + 4) / (n - 4);
  RVec Pu = u.grid().paneitz(u.values());
  Real num = 0, den = 0;
  for (int k = 0; k < u.grid().size(); ++k) {
    Real rhs = K[k] * std::pow(std::max<Real>(u.values()[k], 0), p);
    num = std::max(num, std::abs(Pu[k] - rhs));
    den = std::max(den, std::abs(rhs));
  }
  if (den == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(num / den);
}

namespace {

class LinearizedSystem {
 public:
  LinearizedSystem(const AxisymGrid& grid, const Eigen::MatrixXd& L, const RVec& q) : grid_(grid), q_(q) {
    const int N = grid.size();
    const Constants c = constants(grid.n());
    Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
    blk.topLeftCorner(N, N) = c.B * I - L;
    blk.topRightCorner(N, N) = -I;
    blk.bottomRightCorner(N, N) = c.A * I - L;
    for (int k = 0; k < N; ++k) blk(N + k, k) = -static_cast<double>(q[k]);
    lu_.compute(blk);
  }

  // Solves P d - q d = f; residuals are recomputed with the extended-precision operator.
  RVec solve(const RVec& f, int refinement_steps) const {
    const int N = grid_.size();
    RVec d = RVec::Zero(N);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * N);
    for (int it = 0; it <= refinement_steps; ++it) {
      RVec r = f - (grid_.paneitz(d) - q_.cwiseProduct(d));
      rhs.tail(N) = r.cast<double>();
      Eigen::VectorXd s = lu_.solve(rhs);
      d += s.head(N).cast<Real>();
    }
    return d;
  }

 private:
  const AxisymGrid& grid_;
  RVec q_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

RVec solve_linearized(const AxisymGrid& grid, const RVec& q, const RVec& f, int refinement_steps) {
  if (q.size() != grid.size() || f.size() != grid.size()) throw DomainError("linear system size mismatch");
  LinearizedSystem sys(grid, grid.laplacian_matrix(), q);
  return sys.solve(f, refinement_steps);
}

BubbleFit fit_single_bubble(const AxisymField& u) {
  const auto& grid = u.grid();
  const RVec& w = grid.weights();
  RVec Pu = grid.paneitz(u.values());
  Real uu = (w.array() * Pu.array() * u.values().array()).sum();
  if (!(uu > 0)) throw DomainError("cannot fit a bubble to a field with zero P-norm");
  const Real norm_u = std::sqrt(uu);

  struct Eval {
    double residual;
    double alpha;
  };
  auto objective = [&](Pole pole, double log_lambda) -> Eval {
    AxisymField d = axisym_bubble(u.grid_ptr(), std::exp(log_lambda), pole);
    RVec Pd = grid.paneitz(d.values());
    Real ud = (w.array() * Pd.array() * u.values().array()).sum();
    Real dd = (w.array() * Pd.array() * d.values().array()).sum();
    Real alpha = std::max<Real>(ud / dd, 0);
    RVec e = u.values() - alpha * d.values();
    RVec Pe = Pu - alpha * Pd;
    Real ee = (w.array() * Pe.array() * e.array()).sum();
    return {static_cast<double>(std::sqrt(std::max<Real>(ee, 0)) / norm_u), static_cast<double>(alpha)};
  };

  const double hi = std::log(std::max(2.0, 0.25 * grid.M()));
  const int scan = 48;
  std::vector<BubbleFit> found;
  for (Pole pole : {Pole::North, Pole::South}) {
    std::vector<double> xs(scan + 1), fs(scan + 1);
    for (int i = 0; i <= scan; ++i) {
      xs[i] = hi * i / scan;
      fs[i] = objective(pole, xs[i]).residual;
    }
    for (int i = 0; i <= scan; ++i) {
      bool left = i == 0 || fs[i] <= fs[i - 1];
      bool right = i == scan || fs[i] < fs[i + 1];
      if (!left || !right) continue;
      // Golden-section refinement in log(lambda).
      double a = xs[std::max(0, i - 1)], b = xs[std::min(scan, i + 1)];
      const double g = 0.5 * (std::sqrt(5.0) - 1);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = objective(pole, c).residual, fd = objective(pole, d).residual;
      for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        if (fc < fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - g * (b - a);
          fc = objective(pole, c).residual;
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + g * (b - a);
          fd = objective(pole, d).residual;
        }
      }
      double x = fc < fd ? c : d;
      Eval ev = objective(pole, x);
      if (fs[i] < ev.residual) {
        x = xs[i];
        ev = objective(pole, x);
      }
      BubbleFit f;
      f.alpha = ev.alpha;
      f.pole = pole;
      f.lambda = std::exp(x);
      f.fit_residual = ev.residual;
      found.push_back(f);
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const BubbleFit& x, const BubbleFit& y) { return x.fit_residual < y.fit_residual; });
  BubbleFit best = found.front();
  best.candidates = found;
  return best;
}

std::pair<AxisymField, SolveReport> solve_equation3(const CurvatureField& K, const AxisymField& init,
                                                    const SolveOptions& opts) {
  const auto& grid = init.grid();
  const int n = grid.n();
  const int N = grid.size();
  RVec Kv = axisym_curvature(grid, K);
  if (Kv.minCoeff() <= 0) throw PreconditionError("K must be positive on the grid");
  if (init.values().minCoeff() <= 0) throw PreconditionError("initial guess must be positive");
  const Real p = Real(n + 4) / (n - 4);
  Eigen::MatrixXd L = grid.laplacian_matrix();

  auto residual = [&](const RVec& u) {
    RVec F = grid.paneitz(u);
    for (int k = 0; k < N; ++k) F[k] -= Kv[k] * std::pow(std::max<Real>(u[k], 0), p);
    return F;
  };
  auto merit = [](const RVec& F) { return static_cast<double>(std::sqrt(F.squaredNorm())); };

  SolveReport rep;
  RVec u = init.values();
  RVec F = residual(u);
  double m = merit(F);
  rep.residual_history.push_back(m);
  rep.stop_reason = "max_iters";
  for (int it = 0; it < opts.max_iters; ++it) {
    double rel = equation3_residual(AxisymField(init.grid_ptr(), u), Kv);
    rep.relative_history.push_back(rel);
    if (rel < opts.tolerance) {
      rep.stop_reason = "tolerance";
      break;
    }
    RVec q(N);
    for (int k = 0; k < N; ++k) q[k] = p * Kv[k] * std::pow(std::max<Real>(u[k], 0), p - 1);
    LinearizedSystem sys(grid, L, q);
    RVec d = sys.solve(-F, opts.refinement_steps);
    double step = 1;
    bool accepted = false;
    while (step >= opts.min_step) {
      RVec un = u + Real(step) * d;
      RVec Fn = residual(un);
      double mn = merit(Fn);
      if (mn < m) {
        u = std::move(un);
        F = std::move(Fn);
        m = mn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      rep.stop_reason = "stagnation";
      break;
    }
    ++rep.newton_iters;
    rep.residual_history.push_back(m);
  }
  AxisymField sol(init.grid_ptr(), u);
  rep.residual_sup = equation3_residual(sol, Kv);
  if (rep.relative_history.empty() || rep.relative_history.back() != rep.residual_sup)
    rep.relative_history.push_back(rep.residual_sup);
  rep.converged = rep.residual_sup < opts.tolerance;
  rep.positivity = u.minCoeff() > 0;
  rep.J = static_cast<double>(J_axisym(sol, Kv));
  rep.v_eta = v_eta_measure(sol, K);
  if (opts.fit_bubble) rep.bubble_fit = fit_single_bubble(sol);
  return {std::move(sol), std::move(rep)};
}

NegativePart negative_part_machinery(const AxisymField& u, const CurvatureField& K) {
  const auto& grid = u.grid();
  const int n = grid.n();
  const int N = grid.size();
  RVec Kv = axisym_curvature(grid, K);
  const Real p = Real(n + 4) / (n - 4);
  const Real q = Real(2 * n) / (n - 4);
  RVec um(N);
  for (int k = 0; k < N; ++k) um[k] = std::max<Real>(-u.values()[k], 0);
  NegativePart out{0, AxisymField(u.grid_ptr(), RVec::Zero(N))};
  if (um.maxCoeff() == 0) return out;
  RVec f(N);
  for (int k = 0; k < N; ++k) f[k] = -Kv[k] * std::pow(um[k], p);
  RVec w = solve_linearized(grid, RVec::Zero(N), f);
  out.w_minus = AxisymField(u.grid_ptr(), w);
  Real uq = 0;
  for (int k = 0; k < N; ++k) uq += grid.weights()[k] * std::pow(um[k], q);
  Real unorm = std::pow(uq, 1 / q);
  Real wnorm = norm_P(out.w_minus);
  out.u_minus_norm = static_cast<double>(unorm);
  out.w_minus_norm = static_cast<double>(wnorm);
  out.w1_ratio = static_cast<double>(wnorm / std::pow(unorm, p));
  out.w_minus_max = static_cast<double>(w.maxCoeff());
  out.chain_lhs = static_cast<double>(Real(Kv.minCoeff()) * uq);
  out.chain_mid = static_cast<double>(wnorm * wnorm);
  out.chain_rhs = static_cast<double>(std::pow(unorm, 2 * p));
  return out;
}

}  // namespace paneitz
