// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <boost/rational.hpp>
#include <json.hpp>

#include "lab/experiment.hpp"
#include "paneitz/axisym.hpp"
#include "paneitz/bubbles.hpp"
#include "paneitz/functional.hpp"
#include "paneitz/morse.hpp"
#include "paneitz/quadrature.hpp"

using namespace paneitz;
using Json = nlohmann::json;
using Rat = boost::rational<long long>;

namespace tol {
constexpr double kConstantsRel = 1e-10;
constexpr double kBubbleResidual = 1e-6;
constexpr double kSpectralRel = 1e-8;
constexpr double kSlopeMin = 2.2;
constexpr double kLeadingRel = 1e-4;
constexpr double kGradientRatio = 0.05;
constexpr double kC3Drift = 0.02;
constexpr double kDecreaseMin = 0.0;
constexpr double kScalingRel = 1e-8;
constexpr double kW1Spread = 10.0;
constexpr double kNewtonResidual = 1e-8;
constexpr double kFitResidual = 1e-6;
constexpr double kConstantScalingRel = 1e-6;
constexpr double kPerturbC1 = 0.05;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Real gegenbauer(int k, Real g, Real t) {
  Real c0 = 1, c1 = 2 * g * t;
  if (k == 0) return c0;
  for (int j = 2; j <= k; ++j) {
    Real c2 = (2 * t * (j + g - 1) * c1 - (j + 2 * g - 2) * c0) / j;
    c0 = c1, c1 = c2;
  }
  return c1;
}

CurvatureField height(double c, double b) {
  Vec v = Vec::Zero(6);
  v[5] = b;
  return CurvatureField::affine(5, c, v);
}

Outcome ac1() {
  double worst = 0;
  bool exact = true;
  for (int n = 5; n <= 10; ++n) {
    auto b = bubble_constants_beta(n);
    auto r = bubble_constants_radial(n);
    for (auto [x, y] : {std::pair{r.S_n, b.S_n}, {r.c_1, b.c_1}, {r.c_2, b.c_2}})
      worst = std::max(worst, std::abs(x - y) / std::abs(y));
    long long m = n;
    Rat cn(m * m - 2 * m - 4, 2), dn((m - 4) * m * (m * m - 4), 16);
    exact = exact && cn * cn - 4 * dn == Rat(4) && discriminant_identity_exact(n);
  }
  return {worst < tol::kConstantsRel && exact, fmt("max rel diff %.2e, discriminant exact %s", worst, exact ? "yes" : "no")};
}

Outcome ac2() {
  auto g = std::make_shared<const AxisymGrid>(5, 400);
  RVec K1 = RVec::Ones(g->size());
  double worst = 0;
  for (double lam : {1.0, 10.0, 100.0}) worst = std::max(worst, equation3_residual(axisym_bubble(g, lam), K1));
  return {worst < tol::kBubbleResidual, fmt("grid 401 nodes, max relative sup residual %.2e", worst)};
}

Outcome ac3() {
  const int n = 5;
  auto g = std::make_shared<const AxisymGrid>(n, 200);
  double worst = 0;
  for (long long k = 0; k <= 20; ++k) {
    Rat mu(k * (k + n - 1));
    Rat L = (mu + Rat(n * (n - 2), 4)) * (mu + Rat((n - 4) * (n + 2), 4));
    Real Lk = Real(L.numerator()) / Real(L.denominator());
    auto u = AxisymField::sample(g, [&](Real t, Real, Real) { return gegenbauer(static_cast<int>(k), Real(n - 1) / 2, t); });
    RVec d = paneitz_apply(u).values() - Lk * u.values();
    worst = std::max(worst, static_cast<double>(d.cwiseAbs().maxCoeff() / (Lk * u.values().cwiseAbs().maxCoeff())));
  }
  Rat mu1(n);
  Rat L0 = Rat(n * (n - 2), 4) * Rat((n - 4) * (n + 2), 4);
  Rat L1 = (mu1 + Rat(n * (n - 2), 4)) * (mu1 + Rat((n - 4) * (n + 2), 4));
  bool exact = L0 == Rat(105, 16) && boost::rational_cast<double>(L1) == 59.0625;
  return {worst < tol::kSpectralRel && exact,
          fmt("max rel %.2e over k <= 20; Lambda_0 = %lld/%lld, Lambda_1 = %.4f", worst, L0.numerator(), L0.denominator(),
              boost::rational_cast<double>(L1))};
}

Outcome ac4() {
  const int n = 5;
  auto K = height(1, 0.1);
  const auto& C = bubble_constants(n);
  std::vector<double> x, y;
  double Jlast = 0;
  for (int i = 0; i <= 12; ++i) {
    double lam = std::pow(10.0, 1.0 + i / 6.0);
    Bubble b(Point::north(n), lam);
    auto q = build_quadrature(n, std::optional<Bubble>(b), 3);
    auto conf = Configuration::single(b);
    double Jq = J_value(conf, K, q);
    x.push_back(std::log(lam));
    y.push_back(std::log(std::abs(Jq - expansion_J(conf, K, C).total)));
    Jlast = Jq;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = x.size();
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  double slope = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  double lead = std::pow(C.S_n, 4.0 / n) * std::pow(1.1, -(n - 4.0) / n);
  double lerr = std::abs(Jlast - lead) / lead;
  return {slope >= tol::kSlopeMin && lerr < tol::kLeadingRel,
          fmt("remainder slope %.3f, leading rel err at 1e3 %.2e", slope, lerr)};
}

Outcome ac5() {
  const int n = 5;
  auto K = height(1, 0.1);
  const auto& C = bubble_constants(n);
  const double alpha = 1 / std::sqrt(C.S_n);
  Bubble b(Point::north(n), 500);
  auto q = build_quadrature(n, std::optional<Bubble>(b), 3);
  double ratio = grad_J_pairings(b, alpha, K, q).g_lambda / expansion_grad(b, alpha, K, C).g_lambda_pred;
  const auto& c3 = calibrate_c3(n);
  return {std::abs(ratio - 1) < tol::kGradientRatio && c3.drift < tol::kC3Drift,
          fmt("ratio at lambda 500 = %.6f, c3 = %.6e with drift %.2e over [%g, %g]", ratio, c3.value, c3.drift,
              c3.lambdas.front(), c3.lambdas.back())};
}

Outcome ac6() {
  lab::ExperimentConfig cfg;  // K = 1 + 0.1 x6, 100 random starts plus basin starts
  auto r = lab::run_flow(cfg);
  auto j = Json::parse(r.files.front().second);
  int bad = j["misclassified"];
  int blow = j["histogram"].value("BlowUp", 0), collapse = j["histogram"].value("LambdaCollapse", 0);
  int basin_ok = 0, basin = 0;
  for (const auto& t : j["trajectories"])
    if (t["origin"] == "basin") ++basin, basin_ok += t["outcome"] == "LambdaCollapse";
  double mr = j["decrease_check"]["min_ratio"].is_null() ? -1 : j["decrease_check"]["min_ratio"].get<double>();
  int checked = j["decrease_check"]["checked"];
  bool ok = r.exit_code == lab::kOk && bad == 0 && basin_ok == basin && basin > 0 && checked > 0 && mr > tol::kDecreaseMin;
  return {ok, fmt("BlowUp %d, LambdaCollapse %d, misclassified %d, basin %d/%d, decrease min ratio %.4f over %d states", blow,
                  collapse, bad, basin_ok, basin, mr, checked)};
}

Outcome ac7() {
  auto H = CurvatureField::expression(5, "2 + x6");
  auto cx = morse_complex(H, find_critical_points(H, 32, 1));
  bool zero = true;
  for (const auto& B : cx.boundary) zero = zero && (B.size() == 0 || B.cwiseAbs().maxCoeff() == 0);
  auto h = homology_of_X(cx, 0);
  bool sphere = h.reduced_betti == std::vector<int>{0, 0, 0, 0, 0, 1};
  bool m5 = h.m && *h.m == 5;

  auto K4 = CurvatureField::expression(5, "3 + x6 - x1^2");
  auto c4 = find_critical_points(K4, 64, 1);
  auto cx4 = morse_complex(K4, c4);
  bool ok = zero && sphere && m5 && c4.size() == 4 && cx4.boundary_squared_zero && !cx4.any_unknown &&
            cx4.euler_characteristic() == 0;
  return {ok, fmt("height: boundary zero %s, reduced H rank in degree 5 = %d, m = %d; 4-point K: %zu generators, "
                  "d^2 = 0 %s, chi = %d",
                  zero ? "yes" : "no", h.reduced_betti.size() > 5 ? h.reduced_betti[5] : -1, h.m ? *h.m : -1, c4.size(),
                  cx4.boundary_squared_zero ? "yes" : "no", cx4.euler_characteristic())};
}

Outcome ac8() {
  Vec a(6);
  a << 0, 0.1, 0.2, 0.3, 0.4, 0.9;
  auto K = CurvatureField::quadratic(5, 1, Vec::Zero(6), Mat(a.asDiagonal()));
  auto cs = find_critical_points(K, 64, 1);
  const CriticalPointRecord* z = nullptr;
  for (const auto& c : cs)
    if (geodesic_distance(c.y, Point::basis(5, 3)) < 1e-8) z = &c;
  if (!z) return {false, "target saddle not found"};
  auto rep = perturb_K(K, {*z}, 0.3, tol::kPerturbC1);
  auto ri = reduced_morse_index(rep.K_tilde, z->y);
  bool ok = std::abs(z->laplacian - 0.2) < 1e-12 && z->index == 3 && rep.same_critical_set && rep.same_indices &&
            -rep.K_tilde.laplacian(z->y) > 0 && rep.c1_distance < tol::kPerturbC1 && ri.z_contribution == 5 - z->index;
  return {ok, fmt("target Delta K = %.3f index %d; after: -Delta K~ = %.3f, same set %s, same indices %s, C1 %.4f < %.2f, "
                  "z-contribution %d",
                  z->laplacian, z->index, -rep.K_tilde.laplacian(z->y), rep.same_critical_set ? "yes" : "no",
                  rep.same_indices ? "yes" : "no", rep.c1_distance, tol::kPerturbC1, ri.z_contribution)};
}

Outcome ac9() {
  auto g = std::make_shared<const AxisymGrid>(5, 400);
  auto K = CurvatureField::constant(5, 1);
  auto bubble = axisym_bubble(g, 10);
  auto bump = AxisymField::sample(g, [](Real, Real, Real opt) { return std::exp(-opt / 0.05L); });
  Real south = bubble.values()[g->size() - 1];

  AxisymField u(g, bubble.values() - 2 * south * bump.values());
  auto base = negative_part_machinery(u, K);
  double worst = 0;
  for (Real t : {0.5L, 2.0L, 7.0L}) {
    RVec v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = std::max<Real>(u.values()[i], 0) - t * std::max<Real>(-u.values()[i], 0);
    auto s = negative_part_machinery(AxisymField(g, v), K);
    double expect = base.w_minus_norm * std::pow(static_cast<double>(t), 9.0);
    worst = std::max(worst, std::abs(s.w_minus_norm - expect) / expect);
  }

  double lo = 1e300, hi = 0;
  for (double eps : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}) {
    AxisymField ue(g, bubble.values() - static_cast<Real>(eps) * 2000 * south * bump.values());
    double r = negative_part_machinery(ue, K).w1_ratio;
    lo = std::min(lo, r), hi = std::max(hi, r);
  }

  double veta = 0;
  for (double lam : {1.0, 5.0, 50.0}) veta = std::max(veta, v_eta_measure(axisym_bubble(g, lam), K));
  veta = std::max(veta, v_eta_measure(AxisymField::sample(g, [](Real t, Real, Real) { return 2 + t; }), K));
  bool ok = worst < tol::kScalingRel && lo > 0 && hi / lo < tol::kW1Spread && veta == 0;
  return {ok, fmt("scaling rel err %.2e, w1_ratio spread %.3f over eps in [1e-3, 1e-1], v_eta on positive fields %.1f", worst,
                  hi / lo, veta)};
}

Outcome ac10() {
  const int n = 5;
  auto g = std::make_shared<const AxisymGrid>(n, 400);
  auto init = axisym_bubble(g, 2);
  for (int k = 0; k < g->size(); ++k) init.values()[k] *= 1 + 0.01L * g->t()[k];
  auto [u1, r1] = solve_equation3(CurvatureField::constant(n, 1), init);
  const double c = 3, s = std::pow(c, -(n - 4) / 8.0);
  AxisymField ic = init;
  ic.values() *= static_cast<Real>(s);
  auto [uc, rc] = solve_equation3(CurvatureField::constant(n, c), ic);
  RVec d = uc.values() - static_cast<Real>(s) * u1.values();
  double scal = static_cast<double>(d.cwiseAbs().maxCoeff() / uc.values().cwiseAbs().maxCoeff());
  double fit = r1.bubble_fit ? r1.bubble_fit->fit_residual : 1.0;
  bool ok = r1.converged && r1.residual_sup < tol::kNewtonResidual && fit < tol::kFitResidual && rc.converged &&
            scal < tol::kConstantScalingRel;
  return {ok, fmt("K = 1: residual %.2e in %d steps, bubble fit residual %.2e; K = 3 scaling rel err %.2e", r1.residual_sup,
                  r1.newton_iters, fit, scal)};
}

Outcome ac11() {
  lab::ExperimentConfig base;
  std::vector<std::pair<std::string, lab::ExperimentConfig>> runs;
  auto with = [&](std::string K, int l = -1) {
    auto c = base;
    c.K = std::move(K);
    c.l = l;
    return c;
  };
  runs.push_back({"verify", base});
  runs.push_back({"flow", base});
  runs.push_back({"morse", with("1+0.05*x6")});
  runs.push_back({"perturb", with("quadratic(1, 0, 0.1, 0.2, 0.3, 0.4, 0.9)", 5)});
  runs.push_back({"solve", with("1")});
  using Fn = lab::RunResult (*)(const lab::ExperimentConfig&);
  auto pick = [](const std::string& s) -> Fn {
    if (s == "verify") return lab::run_verify;
    if (s == "flow") return lab::run_flow;
    if (s == "morse") return lab::run_morse;
    if (s == "perturb") return lab::run_perturb;
    return lab::run_solve;
  };
  int files = 0, differ = 0;
  for (const auto& [name, cfg] : runs) {
    auto a = pick(name)(cfg);
    auto b = pick(name)(cfg);
    if (a.files.size() != b.files.size()) {
      ++differ;
      continue;
    }
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      ++files;
      if (a.files[i] != b.files[i]) ++differ;
    }
  }
  return {differ == 0 && files > 0, fmt("%d report files compared across 5 subcommands, %d differ", files, differ)};
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  std::vector<Item> items = {
      {1, "constants", ac1},           {2, "bubble residual", ac2},   {3, "spectral factorization", ac3},
      {4, "expansion order", ac4},     {5, "gradient expansion", ac5}, {6, "flow classification", ac6},
      {7, "Morse homology", ac7},      {8, "perturbation", ac8},       {9, "positivity machinery", ac9},
      {10, "solver", ac10},            {11, "determinism", ac11},
  };
  int failed = 0;
  for (const auto& it : items) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("AC%-2d %-4s %-24s %s (%.1f s)\n", it.id, o.pass ? "PASS" : "FAIL", it.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(items.size()) - failed, items.size());
  return failed == 0 ? 0 : 1;
}
