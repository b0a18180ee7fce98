#include "paneitz/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "paneitz/bubbles.hpp"
#include "paneitz/functional.hpp"
#include "paneitz/parallel.hpp"
#include "paneitz/quadrature.hpp"

namespace paneitz {

namespace odeint = boost::numeric::odeint;

double cutoff_phi(double t) {
  if (t <= 1) return 0;
  if (t >= 2) return 1;
  double s = t - 1;
  return s * s * (3 - 2 * s);
}

const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::BlowUp: return "BlowUp";
    case OutcomeKind::LambdaCollapse: return "LambdaCollapse";
    case OutcomeKind::Wandering: return "Wandering";
  }
  return "?";
}

void FlowConfig::validate() const {
  if (!(mu > 0)) throw ConfigurationError("flow: mu must be positive");
  if (!(m1 > 0)) throw ConfigurationError("flow: m1 must be positive");
  if (!(lambda_min > 0) || !(lambda_min < lambda_max)) throw ConfigurationError("flow: need 0 < lambda_min < lambda_max");
  if (!(band_inner > 0) || !(band_inner < band_outer) || band_outer > 2)
    throw ConfigurationError("flow: need 0 < band_inner < band_outer <= 2");
  if (!(rtol > 0) || !(atol > 0) || !(min_step > 0)) throw ConfigurationError("flow: tolerances must be positive");
  if (max_steps <= 0) throw ConfigurationError("flow: max_steps must be positive");
  if (!(margin_fraction > 0 && margin_fraction < 1)) throw ConfigurationError("flow: margin_fraction must lie in (0,1)");
}

namespace {

double min_laplacian_on_ball(const CurvatureField& K, const Point& y, double radius, std::mt19937_64& rng) {
  const int n = y.n();
  Mat E = tangent_frame(y);
  std::normal_distribution<double> g;
  double lo = std::abs(K.laplacian(y));
  for (int j = 0; j < 240; ++j) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    v.normalize();
    double r = radius * ((j % 12) + 1) / 12.0;
    Point x = exp_map(y, E * (r * v));
    lo = std::min(lo, std::abs(K.laplacian(x)));
  }
  return lo;
}

}  // namespace

double choose_mu(const CurvatureField& K, const std::vector<CriticalPointRecord>& crits, double margin_fraction,
                 double* verified_margin) {
  double mu = 0.5;
  for (std::size_t i = 0; i < crits.size(); ++i)
    for (std::size_t j = i + 1; j < crits.size(); ++j)
      mu = std::min(mu, 0.25 * geodesic_distance(crits[i].y, crits[j].y));
  if (crits.empty()) {
    if (verified_margin) *verified_margin = 0;
    return mu;
  }
  double need = HUGE_VAL;
  for (const auto& c : crits) {
    double lap = std::abs(K.laplacian(c.y));
    if (lap < 1e-8) throw ConfigurationError("flow: Delta K vanishes at a critical point; no admissible mu");
    need = std::min(need, margin_fraction * lap);
  }
  for (int attempt = 0; attempt < 80; ++attempt, mu *= 0.8) {
    bool ok = true;
    std::mt19937_64 rng(split_seed(0x6d75, static_cast<std::uint64_t>(attempt)));
    for (const auto& c : crits) {
      double want = margin_fraction * std::abs(K.laplacian(c.y));
      if (min_laplacian_on_ball(K, c.y, 2 * mu, rng) <= want) {
        ok = false;
        break;
      }
    }
    if (ok) {
      if (verified_margin) *verified_margin = need;
      return mu;
    }
  }
  throw ConfigurationError("flow: could not find mu with a |Delta K| margin on the 2 mu balls");
}

FlowConfig prepare_flow_config(const CurvatureField& K, FlowConfig cfg) {
  if (cfg.mu == 0) {
    cfg.mu = choose_mu(K, cfg.crits, cfg.margin_fraction, &cfg.verified_margin);
  } else if (!cfg.crits.empty()) {
    std::mt19937_64 rng(split_seed(0x6d75, 999));
    double m = HUGE_VAL;
    for (const auto& c : cfg.crits) {
      double want = cfg.margin_fraction * std::abs(K.laplacian(c.y));
      double got = min_laplacian_on_ball(K, c.y, 2 * cfg.mu, rng);
      if (got <= want) throw ConfigurationError("flow: |Delta K| margin fails on a 2 mu ball; decrease mu");
      m = std::min(m, want);
    }
    cfg.verified_margin = m;
  }
  cfg.validate();
  return cfg;
}

namespace {

CaseWeights case_weights(const Point& a, const CurvatureField& K, const FlowConfig& cfg, double* sign_out) {
  CaseWeights w;
  int inside = 0;
  double lo = cfg.band_inner * cfg.mu, hi = cfg.band_outer * cfg.mu;
  for (std::size_t i = 0; i < cfg.crits.size(); ++i) {
    double d = geodesic_distance(a, cfg.crits[i].y);
    if (d < 2 * cfg.mu) {
      if (++inside > 1) throw ConfigurationError("flow: state lies in two critical neighbourhoods; mu too large");
      double chi = d <= lo ? 1.0 : (d >= hi ? 0.0 : cutoff_phi(1 + (hi - d) / (hi - lo)));
      w.nearest = static_cast<int>(i);
      // -Delta K(y) > 0 grows lambda.
      bool grows = -cfg.crits[i].laplacian > 0;
      (void)K;
      w.z1 = 1 - chi;
      (grows ? w.z3 : w.z2) = chi;
      if (sign_out) *sign_out = grows ? 1.0 : -1.0;
    }
  }
  return w;
}

}  // namespace

WVector pseudogradient_W(const FlowState& state, const CurvatureField& K, const FlowConfig& cfg) {
  if (!(state.lambda > 0)) throw DomainError("flow: lambda must be positive");
  WVector out;
  double sign = 0;
  out.weights = case_weights(state.a, K, cfg, &sign);
  Vec g = K.gradient(state.a);
  double gn = g.norm();
  double chi = out.weights.z2 + out.weights.z3;
  double speed = out.weights.z1 + chi * cfg.m1 * cutoff_phi(state.lambda * gn);
  out.da = gn > 0 ? Vec((speed / (state.lambda * gn)) * g) : Vec::Zero(g.size());
  out.dlambda = chi * sign * state.lambda;
  return out;
}

namespace {

using State = std::vector<double>;

Point unpack_point(const State& x, int n) {
  Vec a(n + 1);
  for (int i = 0; i <= n; ++i) a[i] = x[i];
  return Point::normalized(a);
}

FlowSample make_sample(double s, const Point& a, double lambda, const CaseWeights& w) {
  FlowSample fs;
  fs.s = s;
  fs.a = a.coords();
  fs.lambda = lambda;
  fs.weights = {w.z1, w.z2, w.z3};
  return fs;
}

}  // namespace

FlowOutcome integrate_flow(const FlowState& init, const CurvatureField& K, const FlowConfig& cfg) {
  cfg.validate();
  const int n = init.a.n();
  if (K.n() != n) throw DomainError("flow: dimension mismatch");
  if (!(cfg.lambda_min < init.lambda && init.lambda < cfg.lambda_max))
    throw PreconditionError("flow: initial lambda must lie strictly between lambda_min and lambda_max");

  const double budget = cfg.time_budget > 0
                            ? cfg.time_budget
                            : 4 * M_PI * std::max(1.0, init.lambda) + 4 * std::log(cfg.lambda_max / cfg.lambda_min) + 50;
  const double lmax = std::log(cfg.lambda_max), lmin = std::log(cfg.lambda_min);

  auto rhs = [&](const State& x, State& dx, double) {
    FlowState st{unpack_point(x, n), std::exp(x[n + 1]), 0};
    WVector w = pseudogradient_W(st, K, cfg);
    for (int i = 0; i <= n; ++i) dx[i] = w.da[i];
    dx[n + 1] = w.dlambda / st.lambda;
  };

  State x(n + 2);
  for (int i = 0; i <= n; ++i) x[i] = init.a[i];
  x[n + 1] = std::log(init.lambda);
  double s = init.s, dt = cfg.initial_step;
  const double max_step = 0.5;

  FlowOutcome out;
  auto record = [&] {
    Point a = unpack_point(x, n);
    double lam = std::exp(x[n + 1]);
    out.trajectory.push_back(make_sample(s, a, lam, case_weights(a, K, cfg, nullptr)));
  };
  record();

  auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol, odeint::runge_kutta_dopri5<State>());
  for (;;) {
    if (x[n + 1] >= lmax || x[n + 1] <= lmin || s >= init.s + budget || out.steps >= cfg.max_steps) break;
    dt = std::min(dt, max_step);
    auto res = stepper.try_step(rhs, x, s, dt);
    if (res == odeint::fail) {
      ++out.rejected;
      if (dt < cfg.min_step) {
        std::ostringstream msg;
        msg << "flow: step size underflow at s = " << s << " (dt = " << dt << ")";
        throw IntegrationError(msg.str(), std::move(out.trajectory));
      }
      continue;
    }
    ++out.steps;
    double nrm = 0;
    for (int i = 0; i <= n; ++i) nrm += x[i] * x[i];
    nrm = std::sqrt(nrm);
    for (int i = 0; i <= n; ++i) x[i] /= nrm;
    record();
  }

  Point a = unpack_point(x, n);
  out.final_state = FlowState{a, std::exp(x[n + 1]), s};
  if (x[n + 1] >= lmax) {
    int best = -1;
    double bd = HUGE_VAL;
    for (std::size_t i = 0; i < cfg.crits.size(); ++i) {
      double d = geodesic_distance(a, cfg.crits[i].y);
      if (d < bd) bd = d, best = static_cast<int>(i);
    }
    if (best >= 0 && bd < cfg.mu / 2) {
      out.kind = OutcomeKind::BlowUp;
      out.limit = cfg.crits[best].y;
      out.limit_index = best;
      std::ostringstream d;
      d << "lambda reached " << out.final_state.lambda << " at distance " << bd << " from critical point " << best;
      out.diagnostics = d.str();
    } else {
      out.kind = OutcomeKind::Wandering;
      out.diagnostics = "lambda_max reached away from every critical point";
    }
  } else if (x[n + 1] <= lmin) {
    out.kind = OutcomeKind::LambdaCollapse;
    out.diagnostics = "lambda fell below lambda_min";
  } else {
    out.kind = OutcomeKind::Wandering;
    out.diagnostics = out.steps >= cfg.max_steps ? "step budget exhausted" : "time budget exhausted";
  }
  return out;
}

std::vector<FlowOutcome> integrate_ensemble(const std::vector<FlowState>& inits, const CurvatureField& K,
                                            const FlowConfig& cfg, unsigned threads) {
  std::vector<FlowOutcome> out(inits.size());
  parallel_for(inits.size(), [&](std::size_t i) { out[i] = integrate_flow(inits[i], K, cfg); }, threads);
  return out;
}

DecreaseReport decrease_check(FlowOutcome& traj, const CurvatureField& K, const FlowConfig& cfg,
                              const DecreaseOptions& opts) {
  DecreaseReport rep;
  if (is_constant_curvature(K)) {
    rep.status = Status::NotApplicable;
    rep.evidence = "K is constant: no isolated critical points, the pseudogradient cases are undefined";
    return rep;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < traj.trajectory.size(); ++i) {
    double l = traj.trajectory[i].lambda;
    if (l >= opts.lambda_lo && l <= opts.lambda_hi) eligible.push_back(i);
  }
  std::vector<std::size_t> pick;
  if (static_cast<int>(eligible.size()) <= opts.max_states) {
    pick = eligible;
  } else {
    for (int j = 0; j < opts.max_states; ++j) {
      std::size_t k = static_cast<std::size_t>(std::llround(double(j) * (eligible.size() - 1) / (opts.max_states - 1)));
      pick.push_back(eligible[k]);
    }
    pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
  }
  const int n = K.n();
  const double alpha = 1 / std::sqrt(bubble_constants(n).S_n);
  rep.min_ratio = HUGE_VAL;
  for (std::size_t idx : pick) {
    FlowSample& fs = traj.trajectory[idx];
    try {
      Point a = Point::normalized(fs.a);
      Bubble b(a, fs.lambda);
      QuadratureRule quad = build_quadrature(n, b, opts.budget);
      GradientPairings g = grad_J_pairings(b, alpha, K, quad);
      WVector w = pseudogradient_W(FlowState{a, fs.lambda, fs.s}, K, cfg);
      Mat E = tangent_frame(a);
      double pair = alpha * (w.dlambda / fs.lambda * g.g_lambda + fs.lambda * (E.transpose() * w.da).dot(g.g_a));
      double denom = K.gradient(a).norm() / fs.lambda + 1 / (fs.lambda * fs.lambda);
      double r = -pair / denom;
      if (!std::isfinite(r)) throw ConsistencyError("non-finite pairing");
      fs.ratio = r;
      rep.min_ratio = std::min(rep.min_ratio, r);
      ++rep.checked;
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  std::ostringstream ev;
  if (rep.checked == 0) {
    rep.status = Status::Unknown;
    rep.min_ratio = 0;
    ev << "no samples with lambda in [" << opts.lambda_lo << ", " << opts.lambda_hi << "]";
  } else {
    rep.status = rep.min_ratio > opts.threshold ? Status::Pass : Status::Fail;
    ev << rep.checked << " states checked, " << rep.skipped << " skipped, min ratio " << rep.min_ratio;
  }
  rep.evidence = ev.str();
  return rep;
}

std::vector<CriticalPointAtInfinity> critical_points_at_infinity(const CurvatureField& K,
                                                                 const std::vector<CriticalPointRecord>& crits,
                                                                 double degeneracy_tol) {
  if (crits.empty() && is_constant_curvature(K))
    throw DegeneracyError("K is constant: every point is critical with Delta K = 0");
  const int n = K.n();
  const double S = bubble_constants(n).S_n;
  std::vector<CriticalPointAtInfinity> out;
  for (const auto& c : crits) {
    if (c.degenerate) throw DegeneracyError("degenerate critical point in the list");
    double lap = K.laplacian(c.y);
    if (std::abs(lap) <= degeneracy_tol) throw DegeneracyError("Delta K vanishes at a critical point");
    if (-lap > 0) {
      double kv = K.value(c.y);
      if (!(kv > 0)) throw DomainError("K must be positive at critical points at infinity");
      out.push_back({c.y, kv, lap, std::pow(S, 4.0 / n) * std::pow(kv, -(n - 4.0) / n)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  return out;
}

std::string trajectory_csv(const FlowOutcome& out, int n) {
  std::string s = "s";
  for (int i = 1; i <= n + 1; ++i) s += ",a_" + std::to_string(i);
  s += ",lambda,case_weights_1,case_weights_2,case_weights_3,ratio\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
  };
  for (const auto& fs : out.trajectory) {
    put(fs.s);
    for (int i = 0; i <= n; ++i) s += ',', put(fs.a[i]);
    s += ',', put(fs.lambda);
    for (double w : fs.weights) s += ',', put(w);
    s += ',';
    if (fs.ratio) put(*fs.ratio);
    s += '\n';
  }
  return s;
}

}  // namespace paneitz
