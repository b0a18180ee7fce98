#include "lab/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "lab/report.hpp"
#include "paneitz/axisym.hpp"
#include "paneitz/bubbles.hpp"
#include "paneitz/error.hpp"
#include "paneitz/flow.hpp"
#include "paneitz/functional.hpp"
#include "paneitz/morse.hpp"
#include "paneitz/parallel.hpp"
#include "paneitz/quadrature.hpp"

namespace lab {

using paneitz::ConfigurationError;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  double d = std::strtod(b, &end);
  if (end == b || *end != '\0' || !std::isfinite(d))
    throw ConfigurationError("'" + key + "' expects a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  long long x = std::strtoll(b, &end, 10);
  if (end == b || *end != '\0') throw ConfigurationError("'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* end = nullptr;
  if (!v.empty() && v[0] == '-') throw ConfigurationError("'" + key + "' must be non-negative");
  unsigned long long x = std::strtoull(b, &end, 10);
  if (end == b || *end != '\0') throw ConfigurationError("'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

void assign(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& v) {
  const std::string k = section.empty() ? key : section + "." + key;
  if (k == "n") c.n = static_cast<int>(to_int(k, v));
  else if (k == "seed") c.seed = to_u64(k, v);
  else if (k == "out") c.out = v;
  else if (k == "curvature.k") c.K = v;
  else if (k == "tolerances.eta") c.eta = to_double(k, v);
  else if (k == "tolerances.c_bar" || k == "tolerances.cbar") c.c_bar = to_double(k, v);
  else if (k == "tolerances.c_0" || k == "tolerances.c0") c.c_0 = to_double(k, v);
  else if (k == "tolerances.budget") c.budget = static_cast<int>(to_int(k, v));
  else if (k == "tolerances.lambda_min") c.lambda_min = to_double(k, v);
  else if (k == "tolerances.lambda_max") c.lambda_max = to_double(k, v);
  else if (k == "flow.mu") c.mu = to_double(k, v);
  else if (k == "flow.m1") c.m1 = to_double(k, v);
  else if (k == "flow.trajectories") c.trajectories = static_cast<int>(to_int(k, v));
  else if (k == "flow.init_lambda") c.init_lambda = to_double(k, v);
  else if (k == "flow.basin_starts") c.basin_starts = static_cast<int>(to_int(k, v));
  else if (k == "morse.l") c.l = static_cast<int>(to_int(k, v));
  else if (k == "morse.seeds") c.seeds = static_cast<int>(to_int(k, v));
  else if (k == "morse.directions") c.directions = static_cast<int>(to_int(k, v));
  else if (k == "perturb.rho") c.rho = to_double(k, v);
  else if (k == "perturb.c1_tol") c.c1_tol = to_double(k, v);
  else if (k == "solve.warm_lambda") c.warm_lambda = to_double(k, v);
  else if (k == "solve.grid") c.grid = static_cast<int>(to_int(k, v));
  else if (k == "solve.max_iters") c.max_iters = static_cast<int>(to_int(k, v));
  else if (k == "solve.tolerance") c.tolerance = to_double(k, v);
  else if (k == "solve.init_noise") c.init_noise = to_double(k, v);
  else throw ConfigurationError("unknown configuration key '" + k + "'");
}

std::vector<double> parse_args(const std::string& body) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double("curvature.K", trim(item)));
  return out;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Json point_json(const paneitz::Point& p) {
  Json a = Json::array();
  for (int i = 0; i < p.coords().size(); ++i) a.push_back(p[i]);
  return a;
}

Json crit_json(const paneitz::CriticalPointRecord& c) {
  return {{"y", point_json(c.y)},
          {"index", c.index},
          {"value", c.value},
          {"grad_norm", c.grad_norm},
          {"laplacian", c.laplacian},
          {"min_abs_eigenvalue", c.min_abs_eigenvalue},
          {"degenerate", c.degenerate},
          {"group", paneitz::to_string(c.group)}};
}

Json crits_json(const std::vector<paneitz::CriticalPointRecord>& cs) {
  Json a = Json::array();
  for (const auto& c : cs) a.push_back(crit_json(c));
  return a;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

RunResult finish(RunResult r, const std::string& name, const Json& report) {
  r.files.insert(r.files.begin(), {name, dump(report)});
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 5) throw ConfigurationError("n must be at least 5");
  if (n > 64) throw ConfigurationError("n is unreasonably large");
  if (K.empty()) throw ConfigurationError("curvature K is empty");
  if (!(eta > 0 && eta < 1)) throw ConfigurationError("eta must lie in (0, 1)");
  if (!(c_bar > 0)) throw ConfigurationError("c_bar must be positive");
  if (!(c_0 > 0)) throw ConfigurationError("c_0 must be positive");
  if (budget < paneitz::kMinQuadratureBudget) throw ConfigurationError("budget is below the minimum quadrature budget");
  if (!(lambda_min > 0 && lambda_max > lambda_min)) throw ConfigurationError("need 0 < lambda_min < lambda_max");
  if (!(mu >= 0)) throw ConfigurationError("mu must be non-negative (0 selects automatically)");
  if (!(m1 > 0)) throw ConfigurationError("m1 must be positive");
  if (trajectories < 0 || basin_starts < 0) throw ConfigurationError("trajectory counts must be non-negative");
  if (!(init_lambda >= lambda_min && init_lambda < lambda_max))
    throw ConfigurationError("init_lambda must lie in [lambda_min, lambda_max)");
  if (l < -1) throw ConfigurationError("l must be -1 (automatic) or non-negative");
  if (seeds < 1 || directions < 1) throw ConfigurationError("seeds and directions must be positive");
  if (!(rho > 0 && rho <= 1)) throw ConfigurationError("rho must lie in (0, 1]");
  if (!(c1_tol > 0)) throw ConfigurationError("c1_tol must be positive");
  if (!(warm_lambda >= 1)) throw ConfigurationError("warm_lambda must be at least 1");
  if (grid < 16) throw ConfigurationError("grid must have at least 16 intervals");
  if (max_iters < 1) throw ConfigurationError("max_iters must be positive");
  if (!(tolerance > 0)) throw ConfigurationError("tolerance must be positive");
  if (!(init_noise >= 0 && init_noise < 0.5)) throw ConfigurationError("init_noise must lie in [0, 0.5)");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigurationError("line " + std::to_string(lineno) + ": malformed section header");
      section = lower(trim(s.substr(1, s.size() - 2)));
      static const char* known[] = {"", "general", "curvature", "tolerances", "flow", "morse", "perturb", "solve"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigurationError("unknown configuration section '" + section + "'");
      if (section == "general") section.clear();
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigurationError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = lower(trim(s.substr(0, eq)));
    std::string value = trim(s.substr(eq + 1));
    // Trailing comments are allowed after whitespace.
    for (const char* mark : {" #", " ;", "\t#", "\t;"}) {
      auto c = value.find(mark);
      if (c != std::string::npos) value = trim(value.substr(0, c));
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    assign(base, section, key, value);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigurationError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_ini(const ExperimentConfig& c) {
  auto num = [](double v) { return format_number(v); };
  std::ostringstream s;
  s << "n = " << c.n << "\nseed = " << c.seed << "\nout = " << c.out << "\n";
  s << "\n[curvature]\nK = \"" << c.K << "\"\n";
  s << "\n[tolerances]\neta = " << num(c.eta) << "\nc_bar = " << num(c.c_bar) << "\nc_0 = " << num(c.c_0)
    << "\nbudget = " << c.budget << "\nlambda_min = " << num(c.lambda_min) << "\nlambda_max = " << num(c.lambda_max)
    << "\n";
  s << "\n[flow]\nmu = " << num(c.mu) << "\nm1 = " << num(c.m1) << "\ntrajectories = " << c.trajectories
    << "\ninit_lambda = " << num(c.init_lambda) << "\nbasin_starts = " << c.basin_starts << "\n";
  s << "\n[morse]\nl = " << c.l << "\nseeds = " << c.seeds << "\ndirections = " << c.directions << "\n";
  s << "\n[perturb]\nrho = " << num(c.rho) << "\nc1_tol = " << num(c.c1_tol) << "\n";
  s << "\n[solve]\nwarm_lambda = " << num(c.warm_lambda) << "\ngrid = " << c.grid << "\nmax_iters = " << c.max_iters
    << "\ntolerance = " << num(c.tolerance) << "\ninit_noise = " << num(c.init_noise) << "\n";
  return s.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_ini(cfg))));
  return buf;
}

paneitz::CurvatureField make_curvature(int n, const std::string& spec_in) {
  using paneitz::CurvatureField;
  using paneitz::Vec;
  const std::string spec = trim(spec_in);
  auto open = spec.find('(');
  if (open != std::string::npos && spec.back() == ')') {
    const std::string family = lower(trim(spec.substr(0, open)));
    const std::string body = spec.substr(open + 1, spec.size() - open - 2);
    const int d = n + 1;
    if (family == "constant" || family == "affine" || family == "quadratic" || family == "bumps") {
      auto a = parse_args(body);
      if (a.empty() || !all_finite(a)) throw ConfigurationError("curvature family needs a constant term");
      if (family == "constant") {
        if (a.size() != 1) throw ConfigurationError("constant(c) takes one argument");
        return CurvatureField::constant(n, a[0]);
      }
      if (family == "affine" || family == "quadratic") {
        if (static_cast<int>(a.size()) != d + 1)
          throw ConfigurationError(family + "(c, ...) takes " + std::to_string(d + 1) + " arguments for n = " +
                                   std::to_string(n));
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = a[i + 1];
        if (family == "affine") return CurvatureField::affine(n, a[0], v);
        paneitz::Mat A = v.asDiagonal();
        return CurvatureField::quadratic(n, a[0], Vec::Zero(d), A);
      }
      if ((a.size() - 1) % 3 != 0) throw ConfigurationError("bumps(c, h, w, k, ...) takes triples after c");
      std::vector<paneitz::GaussianBump> bumps;
      for (std::size_t i = 1; i < a.size(); i += 3) {
        double k = a[i + 2];
        int axis = static_cast<int>(std::lround(std::abs(k)));
        if (k != std::round(k) || axis < 1 || axis > d)
          throw ConfigurationError("bump axis must be a signed integer in 1.." + std::to_string(d));
        if (!(a[i + 1] > 0)) throw ConfigurationError("bump width must be positive");
        Vec c = Vec::Zero(d);
        c[axis - 1] = k > 0 ? 1 : -1;
        bumps.push_back({c, a[i], a[i + 1]});
      }
      return CurvatureField::gaussian_bumps(n, a[0], bumps);
    }
  }
  try {
    return CurvatureField::expression(n, spec);
  } catch (const paneitz::Error& e) {
    throw ConfigurationError(std::string("cannot parse curvature '") + spec + "': " + e.what());
  }
}

const std::string* RunResult::find(const std::string& name) const {
  for (const auto& f : files)
    if (f.first == name) return &f.second;
  return nullptr;
}

void write_outputs(const RunResult& r, const std::string& dir) {
  for (const auto& [name, contents] : r.files) atomic_write(dir + "/" + name, contents);
}

// ---------------------------------------------------------------------------

RunResult run_verify(const ExperimentConfig& cfg) {
  using namespace paneitz;
  cfg.validate();
  const int n = cfg.n;
  CurvatureField K = make_curvature(n, cfg.K);
  RunResult r;
  std::vector<std::string> failed;

  // Constants by both routes.
  Json cj = report_header(cfg, "verify");
  {
    auto b = bubble_constants_beta(n);
    auto q = bubble_constants_radial(n);
    double worst = std::max({rel(q.S_n, b.S_n), rel(q.c_1, b.c_1), rel(q.c_2, b.c_2)});
    bool disc = discriminant_identity_exact(n);
    auto C = constants(n);
    cj["beta"] = {{"S_n", b.S_n}, {"c_1", b.c_1}, {"c_2", b.c_2}};
    cj["radial"] = {{"S_n", q.S_n}, {"c_1", q.c_1}, {"c_2", q.c_2}};
    cj["max_rel_diff"] = worst;
    cj["discriminant_exact"] = disc;
    cj["operator"] = {{"c_n", C.c_n}, {"d_n", C.d_n}, {"beta_n", C.beta_n}};
    bool ok = worst < 1e-10 && disc;
    cj["pass"] = ok;
    if (!ok) failed.push_back("constants");
  }

  const auto& consts = bubble_constants(n);
  const Point north = Point::north(n);
  const bool flat = is_constant_curvature(K);

  // Expansion of J along a single bubble at the north pole.
  std::vector<double> lambdas;
  for (int i = 0; i <= 12; ++i) lambdas.push_back(std::pow(10.0, 1.0 + i / 6.0));
  std::vector<std::vector<double>> rows(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) {
    Bubble b(north, lambdas[i]);
    auto quad = build_quadrature(n, std::optional<Bubble>(b), cfg.budget);
    auto conf = Configuration::single(b);
    double Jq = J_value(conf, K, quad);
    double Je = expansion_J(conf, K, consts).total;
    rows[i] = {lambdas[i], Jq, Je, std::abs(Jq - Je)};
  });
  r.files.push_back({"expansion.csv", csv({"lambda", "J_quad", "J_expansion", "abs_err"}, rows)});

  Json sj = report_header(cfg, "verify");
  {
    double lead = std::pow(consts.S_n, 4.0 / n) / std::pow(K.value(north), (n - 4.0) / n);
    double lead_err = rel(rows.back()[1], lead);
    sj["leading_term"] = lead;
    sj["leading_rel_err_at_lambda_max"] = lead_err;
    sj["leading_threshold"] = 1e-4;
    sj["slope_threshold"] = 2.2;
    std::vector<double> xs, ys;
    for (const auto& row : rows) xs.push_back(row[0]), ys.push_back(std::max(row[3], 1e-300));
    double max_err = *std::max_element(ys.begin(), ys.end());
    bool ok;
    if (flat) {
      // J is exactly the leading term along the whole family.
      sj["degenerate_exact_case"] = true;
      sj["max_abs_err"] = max_err;
      sj["remainder_slope"] = nullptr;
      ok = max_err <= 1e-10 * lead && lead_err < 1e-4;
    } else {
      double slope = -loglog_slope(xs, ys);
      sj["degenerate_exact_case"] = false;
      sj["remainder_slope"] = slope;
      sj["max_abs_err"] = max_err;
      ok = slope >= 2.2 && lead_err < 1e-4;
    }
    sj["expansion_pass"] = ok;
    if (!ok) failed.push_back("expansion");
  }

  // Gradient in the lambda direction and the c3 fit.
  {
    Bubble b(north, 500.0);
    auto quad = build_quadrature(n, std::optional<Bubble>(b), cfg.budget);
    const double alpha = 1 / std::sqrt(consts.S_n);
    auto g = grad_J_pairings(b, alpha, K, quad);
    auto pred = expansion_grad(b, alpha, K, consts);
    Json gj;
    gj["lambda"] = 500.0;
    gj["g_lambda_quad"] = g.g_lambda;
    gj["g_lambda_pred"] = pred.g_lambda_pred;
    bool ok = true;
    if (std::abs(K.laplacian(north)) <= 1e-12) {
      gj["ratio"] = nullptr;
      gj["status"] = "not_applicable";
    } else {
      double ratio = g.g_lambda / pred.g_lambda_pred;
      gj["ratio"] = ratio;
      ok = std::abs(ratio - 1) < 0.05;
      gj["status"] = ok ? "pass" : "fail";
    }
    const auto& c3 = calibrate_c3(n, cfg.budget);
    gj["c3_estimate"] = c3.value;
    gj["c3_drift"] = c3.drift;
    gj["c3_drift_threshold"] = 0.02;
    ok = ok && c3.drift < 0.02;
    gj["pass"] = ok;
    sj["gradient"] = gj;
    if (!ok) failed.push_back("gradient");
  }

  // Normal form near critical points at infinity: Psi decreases in lambda_bar
  // towards the leading term.
  {
    Json nf = Json::array();
    bool ok = true;
    std::string note;
    if (flat) {
      note = "constant curvature: no critical points at infinity";
    } else {
      try {
        auto crits = find_critical_points(K, cfg.seeds, cfg.seed);
        for (const auto& c : critical_points_at_infinity(K, crits)) {
          std::vector<double> vals;
          for (double lb : {10.0, 30.0, 100.0, 300.0, 1000.0})
            vals.push_back(normal_form_psi(c.y, lb, K, c.y, cfg.eta, consts));
          double lim = normal_form_psi(c.y, std::numeric_limits<double>::infinity(), K, c.y, cfg.eta, consts);
          bool mono = true;
          for (std::size_t i = 1; i < vals.size(); ++i) mono = mono && vals[i] < vals[i - 1];
          mono = mono && vals.back() > lim;
          ok = ok && mono;
          nf.push_back({{"y", point_json(c.y)}, {"level", c.level}, {"psi", vals}, {"psi_limit", lim},
                        {"monotone", mono}});
        }
      } catch (const DegeneracyError& e) {
        note = e.what();
      }
    }
    sj["normal_form"] = {{"points", nf}, {"note", note}, {"pass", ok}};
    if (!ok) failed.push_back("normal_form");
  }

  sj["failed"] = failed;
  cj["failed"] = failed;
  r.exit_code = failed.empty() ? kOk : kCriterionFailed;
  r.summary = failed.empty() ? "verify: all criteria met" : "verify: failed " + Json(failed).dump();
  r.files.insert(r.files.begin(), {"constants.json", dump(cj)});
  r.files.push_back({"slopes.json", dump(sj)});
  return r;
}

RunResult run_flow(const ExperimentConfig& cfg) {
  using namespace paneitz;
  cfg.validate();
  const int n = cfg.n;
  CurvatureField K = make_curvature(n, cfg.K);
  Json rep = report_header(cfg, "flow");
  RunResult r;
  if (is_constant_curvature(K)) {
    rep["status"] = "not_applicable";
    rep["evidence"] = "constant curvature has no isolated critical points; the flow is not defined";
    r.exit_code = kCriterionFailed;
    r.summary = "flow: not applicable to constant curvature";
    return finish(r, "flow_summary.json", rep);
  }

  FlowConfig fc;
  fc.mu = cfg.mu;
  fc.m1 = cfg.m1;
  fc.lambda_min = cfg.lambda_min;
  fc.lambda_max = cfg.lambda_max;
  fc.crits = find_critical_points(K, cfg.seeds, cfg.seed);
  fc = prepare_flow_config(K, fc);

  std::vector<FlowState> inits;
  std::vector<std::string> origin;
  std::vector<int> basin_of;
  for (int i = 0; i < cfg.trajectories; ++i) {
    std::mt19937_64 rng(split_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    inits.push_back({random_point(n, rng), cfg.init_lambda, 0});
    origin.push_back("random");
    basin_of.push_back(-1);
  }
  for (std::size_t c = 0; c < fc.crits.size(); ++c) {
    if (!(fc.crits[c].laplacian > 0)) continue;
    Mat E = tangent_frame(fc.crits[c].y);
    for (int j = 0; j < cfg.basin_starts; ++j) {
      std::mt19937_64 rng(split_seed(cfg.seed ^ 0xba5e, c * 1000 + j));
      std::normal_distribution<double> g;
      Vec v(n);
      for (int k = 0; k < n; ++k) v[k] = g(rng);
      v.normalize();
      double radius = fc.band_inner * fc.mu / 2 * (j + 1) / (cfg.basin_starts + 1);
      inits.push_back({exp_map(fc.crits[c].y, E * (radius * v)), cfg.init_lambda, 0});
      origin.push_back("basin");
      basin_of.push_back(static_cast<int>(c));
    }
  }

  auto outs = integrate_ensemble(inits, K, fc);
  DecreaseOptions dopt;
  dopt.budget = cfg.budget;
  std::vector<DecreaseReport> dec(outs.size());
  parallel_for(outs.size(), [&](std::size_t i) { dec[i] = decrease_check(outs[i], K, fc, dopt); });

  std::map<std::string, int> hist;
  Json trajs = Json::array();
  int bad = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  int checked = 0, dec_fail = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    hist[to_string(o.kind)]++;
    std::string problem;
    if (o.kind == OutcomeKind::BlowUp) {
      const auto& c = fc.crits[o.limit_index];
      double dist = geodesic_distance(o.final_state.a, c.y);
      if (!(-c.laplacian > 0)) problem = "blow-up at a point with -Delta K <= 0";
      else if (dist >= fc.mu / 2) problem = "blow-up outside mu/2 of its critical point";
    } else if (o.kind == OutcomeKind::Wandering) {
      problem = "trajectory neither blew up nor collapsed";
    }
    if (basin_of[i] >= 0 && o.kind != OutcomeKind::LambdaCollapse) problem = "basin start did not collapse";
    if (!problem.empty()) ++bad;
    if (dec[i].checked > 0) min_ratio = std::min(min_ratio, dec[i].min_ratio);
    checked += dec[i].checked;
    if (dec[i].status == Status::Fail) ++dec_fail;

    char name[32];
    std::snprintf(name, sizeof name, "trajectories/traj_%03zu.csv", i);
    r.files.push_back({name, trajectory_csv(o, n)});
    Json t = {{"id", i},
              {"origin", origin[i]},
              {"start", point_json(inits[i].a)},
              {"outcome", to_string(o.kind)},
              {"limit_index", o.limit_index},
              {"final_a", point_json(o.final_state.a)},
              {"final_lambda", o.final_state.lambda},
              {"final_s", o.final_state.s},
              {"steps", o.steps},
              {"rejected", o.rejected},
              {"misclassified", !problem.empty()},
              {"problem", problem},
              {"decrease", {{"status", to_string(dec[i].status)}, {"min_ratio", dec[i].checked ? Json(dec[i].min_ratio) : Json()},
                            {"checked", dec[i].checked}}}};
    trajs.push_back(t);
  }

  rep["critical_points"] = crits_json(fc.crits);
  rep["mu"] = fc.mu;
  rep["verified_margin"] = fc.verified_margin;
  rep["band"] = {fc.band_inner * fc.mu, fc.band_outer * fc.mu};
  rep["histogram"] = hist;
  rep["misclassified"] = bad;
  rep["trajectories"] = trajs;
  rep["decrease_check"] = {{"checked", checked},
                           {"min_ratio", checked ? Json(min_ratio) : Json()},
                           {"failures", dec_fail},
                           {"status", checked == 0 ? "unknown" : (dec_fail ? "fail" : "pass")}};
  bool ok = bad == 0 && dec_fail == 0;
  rep["status"] = ok ? "pass" : "fail";
  r.exit_code = ok ? kOk : kCriterionFailed;
  std::ostringstream s;
  s << "flow: " << outs.size() << " trajectories, " << bad << " misclassified, decrease min ratio "
    << (checked ? format_number(min_ratio) : std::string("n/a"));
  r.summary = s.str();
  return finish(r, "flow_summary.json", rep);
}

RunResult run_morse(const ExperimentConfig& cfg) {
  using namespace paneitz;
  cfg.validate();
  CurvatureField K = make_curvature(cfg.n, cfg.K);
  AssumptionOptions ao;
  ao.seeds = cfg.seeds;
  ao.seed = cfg.seed;
  if (cfg.l >= 0) ao.l = cfg.l;
  ao.morse.directions = cfg.directions;
  auto a = check_assumptions(K, cfg.c_bar, cfg.c_0, ao);

  Json rep = report_header(cfg, "morse");
  bool any_fail = false;
  auto item = [&](const AssumptionItem& it) {
    Json nums = Json::object();
    for (const auto& [k, v] : it.numbers) nums[k] = v;
    any_fail = any_fail || it.status == Status::Fail;
    return Json{{"status", to_string(it.status)}, {"evidence", it.evidence}, {"numbers", nums}};
  };
  rep["assumptions"] = {{"A0", item(a.A0)},
                        {"A1", item(a.A1)},
                        {"A1prime", item(a.A1prime)},
                        {"A2", item(a.A2)},
                        {"A3_necessary", item(a.A3_necessary)},
                        {"pinching", item(a.pinching)}};
  rep["m"] = a.m ? Json(*a.m) : Json();
  rep["l"] = a.l;
  rep["critical_points"] = crits_json(a.crits);
  RunResult r;
  r.exit_code = any_fail ? kCriterionFailed : kOk;
  r.summary = std::string("morse: ") + (any_fail ? "an assumption failed" : "no assumption failed") +
              ", m = " + (a.m ? std::to_string(*a.m) : "undetermined");
  return finish(r, "assumptions.json", rep);
}

RunResult run_perturb(const ExperimentConfig& cfg) {
  using namespace paneitz;
  cfg.validate();
  CurvatureField K = make_curvature(cfg.n, cfg.K);
  Json rep = report_header(cfg, "perturb");
  RunResult r;
  if (is_constant_curvature(K)) {
    rep["status"] = "not_applicable";
    rep["evidence"] = "constant curvature has no isolated critical points";
    r.exit_code = kCriterionFailed;
    r.summary = "perturb: not applicable to constant curvature";
    return finish(r, "perturbation.json", rep);
  }
  auto crits = find_critical_points(K, cfg.seeds, cfg.seed);
  const int l = cfg.l >= 0 ? std::min<int>(cfg.l, static_cast<int>(crits.size())) : default_upper_count(crits);
  assign_groups(crits, l);
  std::vector<CriticalPointRecord> targets;
  for (const auto& c : crits)
    if (c.group == Group::Upper && c.laplacian >= 0) targets.push_back(c);
  rep["l"] = l;
  rep["critical_points"] = crits_json(crits);
  rep["targets"] = crits_json(targets);
  rep["rho"] = cfg.rho;
  rep["c1_tol"] = cfg.c1_tol;

  try {
    auto p = perturb_K(K, targets, cfg.rho, cfg.c1_tol, cfg.seeds, cfg.seed);
    rep["same_critical_set"] = p.same_critical_set;
    rep["same_indices"] = p.same_indices;
    rep["targets_positive"] = p.targets_positive;
    rep["c1_distance"] = p.c1_distance;
    rep["attempts"] = p.attempts;
    rep["target_laplacians_after"] = p.target_laplacians;
    rep["critical_points_after"] = crits_json(p.crits_after);
    Json red = Json::array();
    for (const auto& c : crits) {
      if (c.group != Group::Upper) continue;
      Json e = {{"y", point_json(c.y)}, {"index", c.index}};
      try {
        auto ri = reduced_morse_index(p.K_tilde, c.y);
        e["z_contribution"] = ri.z_contribution;
        e["lambda_contribution"] = ri.lambda_contribution;
        e["total"] = ri.total;
        e["laplacian"] = ri.laplacian;
      } catch (const DegeneracyError& err) {
        e["degenerate"] = err.what();
      }
      red.push_back(e);
    }
    rep["reduced_indices"] = red;
    rep["status"] = p.ok() ? "pass" : "fail";
    r.exit_code = p.ok() ? kOk : kCriterionFailed;
    std::ostringstream s;
    s << "perturb: " << targets.size() << " target(s), C1 distance " << format_number(p.c1_distance)
      << (p.ok() ? ", critical data preserved" : ", critical data changed");
    r.summary = s.str();
  } catch (const ToleranceError& e) {
    rep["status"] = "fail";
    rep["evidence"] = e.what();
    rep["minimal_feasible_tolerance"] = e.minimal_feasible;
    r.exit_code = kCriterionFailed;
    r.summary = std::string("perturb: ") + e.what();
  } catch (const ConvergenceError& e) {
    rep["status"] = "fail";
    rep["evidence"] = e.what();
    r.exit_code = kCriterionFailed;
    r.summary = std::string("perturb: ") + e.what();
  }
  return finish(r, "perturbation.json", rep);
}

RunResult run_solve(const ExperimentConfig& cfg) {
  using namespace paneitz;
  cfg.validate();
  const int n = cfg.n;
  CurvatureField K = make_curvature(n, cfg.K);
  auto grid = std::make_shared<const AxisymGrid>(n, cfg.grid);
  RVec Kv = axisym_curvature(*grid, K);

  // Warm start: the bubble scaled as for constant curvature K(north).
  double lam = std::min(cfg.warm_lambda, 0.1 * cfg.grid);
  double kn = K.value(Point::north(n));
  if (!(kn > 0)) throw ConfigurationError("solve needs K > 0 at the north pole for the warm start");
  AxisymField init = axisym_bubble(grid, lam);
  init.values() *= static_cast<Real>(std::pow(kn, -(n - 4.0) / 8));
  if (cfg.init_noise > 0) {
    std::mt19937_64 rng(split_seed(cfg.seed, 0x501e));
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < grid->size(); ++i) init.values()[i] *= static_cast<Real>(1 + cfg.init_noise * u(rng));
  }

  SolveOptions so;
  so.max_iters = cfg.max_iters;
  so.tolerance = cfg.tolerance;
  so.eta = cfg.eta;
  auto [u, rep] = solve_equation3(K, init, so);

  const double p = (n + 4.0) / (n - 4.0);
  RVec Pu = paneitz_apply(u).values();
  RVec rhs(grid->size());
  Real scale = 0;
  for (int i = 0; i < grid->size(); ++i) {
    Real up = std::max<Real>(u.values()[i], 0);
    rhs[i] = Kv[i] * std::pow(up, static_cast<Real>(p));
    scale = std::max(scale, std::abs(rhs[i]));
  }
  auto theta = grid->theta();
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < grid->size(); ++i)
    rows.push_back({theta[i], static_cast<double>(u.values()[i]),
                    static_cast<double>((Pu[i] - rhs[i]) / std::max<Real>(scale, 1e-300L))});

  Json j = report_header(cfg, "solve");
  j["grid_nodes"] = grid->size();
  j["warm_lambda"] = lam;
  j["converged"] = rep.converged;
  j["stop_reason"] = rep.stop_reason;
  j["residual_sup"] = rep.residual_sup;
  j["newton_iters"] = rep.newton_iters;
  j["positivity"] = rep.positivity;
  j["J"] = rep.J;
  j["v_eta"] = rep.v_eta;
  j["residual_history"] = rep.residual_history;
  j["relative_history"] = rep.relative_history;
  if (rep.bubble_fit) {
    const auto& f = *rep.bubble_fit;
    j["bubble_fit"] = {{"alpha", f.alpha},
                       {"lambda", f.lambda},
                       {"pole", f.pole == Pole::North ? "north" : "south"},
                       {"fit_residual", f.fit_residual}};
  } else {
    j["bubble_fit"] = nullptr;
  }

  RunResult r;
  r.exit_code = !rep.converged ? kNonConvergence : (!rep.positivity ? kCriterionFailed : kOk);
  std::ostringstream s;
  s << "solve: " << (rep.converged ? "converged" : "did not converge") << " in " << rep.newton_iters
    << " Newton steps, residual " << format_number(rep.residual_sup);
  if (rep.bubble_fit) s << ", bubble fit residual " << format_number(rep.bubble_fit->fit_residual);
  r.summary = s.str();
  r.files.push_back({"solution.csv", csv({"theta", "u", "residual"}, rows)});
  return finish(r, "solve_report.json", j);
}

}  // namespace lab
