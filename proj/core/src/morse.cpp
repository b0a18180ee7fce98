#include "paneitz/morse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "paneitz/error.hpp"
#include "paneitz/parallel.hpp"

namespace paneitz {

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Unknown: return "UNKNOWN";
    case Status::NotApplicable: return "NOT-APPLICABLE";
  }
  return "?";
}

const char* to_string(Group g) { return g == Group::Upper ? "upper" : "lower"; }

bool is_constant_curvature(const CurvatureField& K, double tol) {
  const int n = K.n();
  std::mt19937_64 rng(split_seed(0xc0457, 0));
  for (int i = 0; i < 48; ++i) {
    Point x = random_point(n, rng);
    if (K.gradient(x).norm() > tol) return false;
    if (K.hessian(x).norm() > tol) return false;
  }
  return true;
}

namespace {

std::optional<Point> tangent_newton(const CurvatureField& K, Point x, const CriticalSearchOptions& o) {
  for (int it = 0; it < o.max_newton; ++it) {
    Mat E = tangent_frame(x);
    Vec g = E.transpose() * K.gradient(x);
    if (g.norm() < o.gradient_tolerance) return x;
    Mat H = K.hessian_in_frame(x, E);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec c = es.eigenvectors().transpose() * g;
    Vec s = Vec::Zero(g.size());
    for (int i = 0; i < c.size(); ++i) {
      double l = es.eigenvalues()[i];
      if (std::abs(l) > 1e-12) s -= (c[i] / l) * es.eigenvectors().col(i);
    }
    double sn = s.norm();
    if (sn > 0.25) s *= 0.25 / sn;
    if (!(sn > 0)) break;
    x = exp_map(x, E * s);
  }
  Vec g = K.gradient(x);
  if (g.norm() < 1e-9) return x;
  return std::nullopt;
}

CriticalPointRecord make_record(const CurvatureField& K, const Point& y, double margin) {
  CriticalPointRecord r;
  r.y = y;
  Mat E = tangent_frame(y);
  Eigen::SelfAdjointEigenSolver<Mat> es(K.hessian_in_frame(y, E));
  const Vec& ev = es.eigenvalues();
  r.index = static_cast<int>((ev.array() < 0).count());
  r.min_abs_eigenvalue = ev.cwiseAbs().minCoeff();
  r.degenerate = r.min_abs_eigenvalue < margin;
  r.value = K.value(y);
  r.grad_norm = K.gradient(y).norm();
  r.laplacian = K.laplacian(y);
  return r;
}

void sort_by_value(std::vector<CriticalPointRecord>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.value != b.value) return a.value > b.value;
    const Vec& x = a.y.coords();
    const Vec& y = b.y.coords();
    for (int i = 0; i < x.size(); ++i)
      if (x[i] != y[i]) return x[i] > y[i];
    return false;
  });
}

}  // namespace

std::vector<CriticalPointRecord> find_critical_points(const CurvatureField& K, int seeds, std::uint64_t seed) {
  CriticalSearchOptions o;
  o.seeds = seeds;
  o.seed = seed;
  return find_critical_points(K, o);
}

std::vector<CriticalPointRecord> find_critical_points(const CurvatureField& K, const CriticalSearchOptions& o) {
  const int n = K.n();
  if (o.seeds < 0) throw ConfigurationError("critical search: negative seed count");
  if (is_constant_curvature(K)) {
    CriticalPointRecord r = make_record(K, Point::north(n), o.degeneracy_margin);
    r.degenerate = true;
    return {r};
  }
  std::vector<Point> starts;
  for (int k = 0; k <= n; ++k) {
    starts.push_back(Point::basis(n, k));
    starts.push_back(Point::basis(n, k).antipode());
  }
  for (int i = 0; i < o.seeds; ++i) {
    std::mt19937_64 rng(split_seed(o.seed, static_cast<std::uint64_t>(i)));
    starts.push_back(random_point(n, rng));
  }
  starts.insert(starts.end(), o.extra_starts.begin(), o.extra_starts.end());
  std::vector<std::optional<Point>> found(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { found[i] = tangent_newton(K, starts[i], o); });

  std::vector<CriticalPointRecord> out;
  for (const auto& f : found) {
    if (!f) continue;
    bool dup = false;
    for (const auto& r : out)
      if (geodesic_distance(r.y, *f) < o.dedup_distance) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(make_record(K, *f, o.degeneracy_margin));
  }
  sort_by_value(out);
  return out;
}

int default_upper_count(const std::vector<CriticalPointRecord>& crits) {
  int c = 0;
  while (c < static_cast<int>(crits.size()) && -crits[c].laplacian > 0) ++c;
  int l = c - 1;
  while (l >= 0 && l + 1 < static_cast<int>(crits.size()) &&
         crits[l].value - crits[l + 1].value <= 1e-12 * std::max(1.0, std::abs(crits[l].value)))
    --l;
  return l;
}

void assign_groups(std::vector<CriticalPointRecord>& crits, int l) {
  for (int i = 0; i < static_cast<int>(crits.size()); ++i) crits[i].group = i <= l ? Group::Upper : Group::Lower;
}

int MorseComplex::euler_characteristic() const {
  int chi = 0;
  for (const auto& g : generators) chi += (g.index % 2 == 0) ? 1 : -1;
  return chi;
}

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

struct Shot {
  int landed = -1;
  std::vector<double> dmin;
};

// Normalised gradient flow of K started on a small sphere around a critical
// point; sign = -1 descends, +1 ascends.
class Shooter {
 public:
  Shooter(const CurvatureField& K, const std::vector<CriticalPointRecord>& g, const MorseOptions& o)
      : K_(K), g_(g), o_(o), n_(K.n()) {}

  Shot shoot(int from, const Vec& dir, double sign) const {
    Shot s;
    s.dmin.assign(g_.size(), HUGE_VAL);
    Point x = exp_map(g_[from].y, o_.start_radius * dir);
    State st(x.coords().data(), x.coords().data() + n_ + 1);
    auto rhs = [&](const State& y, State& dy, double) {
      Vec v = Eigen::Map<const Vec>(y.data(), n_ + 1);
      Vec g = K_.gradient(Point::normalized(v));
      double gn = g.norm();
      for (int i = 0; i <= n_; ++i) dy[i] = gn > 0 ? sign * g[i] / gn : 0.0;
    };
    odeint::runge_kutta4<State> rk;
    double len = 0;
    for (;;) {
      Point p = Point::normalized(Eigen::Map<const Vec>(st.data(), n_ + 1));
      int nearest = -1;
      double dn = HUGE_VAL;
      for (std::size_t q = 0; q < g_.size(); ++q) {
        double d = geodesic_distance(p, g_[q].y);
        if (static_cast<int>(q) != from) s.dmin[q] = std::min(s.dmin[q], d);
        if (d < dn) dn = d, nearest = static_cast<int>(q);
      }
      if (dn < o_.landing_radius && nearest != from) {
        s.landed = nearest;
        break;
      }
      if (len > o_.max_length) break;
      if (K_.gradient(p).norm() < 1e-14) {
        if (dn < 1e-6 && nearest != from) s.landed = nearest;
        break;
      }
      double h = std::clamp(0.25 * dn, 1e-10, 0.05);
      rk.do_step(rhs, st, 0.0, h);
      double nrm = 0;
      for (double c : st) nrm += c * c;
      nrm = std::sqrt(nrm);
      for (double& c : st) c /= nrm;
      len += h;
    }
    return s;
  }

 private:
  const CurvatureField& K_;
  const std::vector<CriticalPointRecord>& g_;
  const MorseOptions& o_;
  int n_;
};

// Directions on the unit sphere of a subspace, with the shots they produced.
struct Fan {
  Mat U;  // ambient basis of the subspace
  double sign = 0;
  std::vector<Vec> dirs;
  std::size_t coarse = 0;
  std::vector<Shot> shots;
  double spacing = 0;
};

struct NMContext {
  const Shooter* sh;
  int from, to;
  double sign;
  Vec v0;
  Mat B;  // orthonormal complement of v0
  Mat U;
};

Vec chart(const NMContext& c, const gsl_vector* z) {
  Vec v = c.v0;
  for (int i = 0; i < c.B.cols(); ++i) v += gsl_vector_get(z, i) * c.B.col(i);
  return v.normalized();
}

double nm_objective(const gsl_vector* z, void* params) {
  auto* c = static_cast<NMContext*>(params);
  Shot s = c->sh->shoot(c->from, c->U * chart(*c, z), c->sign);
  return s.landed == c->to ? 0.0 : s.dmin[c->to];
}

// Nelder-Mead on the distance to `to`, in a chart of the direction sphere around v0.
std::pair<Vec, double> refine_direction(const Shooter& sh, int from, int to, const Fan& fan, const Vec& v0,
                                        double hit_tol) {
  const int k = static_cast<int>(v0.size());
  NMContext c{&sh, from, to, fan.sign, v0, Mat(), fan.U};
  Eigen::HouseholderQR<Mat> qr(v0);
  Mat Q = qr.householderQ() * Mat::Identity(k, k);
  c.B = Q.rightCols(k - 1);
  const int d = k - 1;
  gsl_multimin_function f{&nm_objective, static_cast<std::size_t>(d), &c};
  gsl_vector* x = gsl_vector_calloc(d);
  gsl_vector* ss = gsl_vector_alloc(d);
  gsl_vector_set_all(ss, fan.spacing);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
  gsl_multimin_fminimizer_set(m, &f, x, ss);
  for (int it = 0; it < 600; ++it) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (m->fval < 0.01 * hit_tol) break;
    double size = gsl_multimin_fminimizer_size(m);
    if (size < 1e-15 || (size < 1e-9 && m->fval > 1e3 * hit_tol)) break;
  }
  Vec best = chart(c, m->x);
  double fv = m->fval;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return {best, fv};
}

std::vector<int> local_minima(const std::vector<Vec>& dirs, const std::vector<double>& D, std::size_t count, int nn) {
  std::vector<int> out;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t i = 0; i < count; ++i)
      if (i != j) near.push_back({-dirs[i].dot(dirs[j]), i});
    std::size_t take = std::min<std::size_t>(nn, near.size());
    std::partial_sort(near.begin(), near.begin() + take, near.end());
    bool minimum = true;
    for (std::size_t t = 0; t < take; ++t)
      if (D[near[t].second] < D[j] || (D[near[t].second] == D[j] && near[t].second < j)) {
        minimum = false;
        break;
      }
    if (minimum) out.push_back(static_cast<int>(j));
  }
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) { return D[a] < D[b]; });
  return out;
}

void add_hit(std::vector<Vec>& hits, const Vec& v) {
  for (const auto& h : hits)
    if ((h - v).norm() < 1e-4) return;
  hits.push_back(v);
}

Fan make_fan(const Shooter& sh, int c, const Mat& U, double sign, const MorseOptions& o, std::uint64_t stream) {
  Fan f;
  f.U = U;
  f.sign = sign;
  const int k = static_cast<int>(U.cols());
  if (k == 0) return f;
  if (k == 1) {
    f.dirs = {Vec::Ones(1), -Vec::Ones(1)};
    f.coarse = 2;
  } else {
    std::size_t M = static_cast<std::size_t>(o.directions) * (k - 1);
    std::mt19937_64 rng(split_seed(o.seed, stream));
    std::normal_distribution<double> gauss;
    for (std::size_t j = 0; j < 2 * M; ++j) {
      Vec v(k);
      for (int i = 0; i < k; ++i) v[i] = gauss(rng);
      f.dirs.push_back(v.normalized());
    }
    f.coarse = M;
    f.spacing = std::pow(2 * M_PI, 0.5) * std::pow(double(f.dirs.size()), -1.0 / (k - 1));
  }
  f.shots.resize(f.dirs.size());
  parallel_for(f.dirs.size(), [&](std::size_t j) { f.shots[j] = sh.shoot(c, U * f.dirs[j], sign); }, o.threads);
  return f;
}

// Distinct orbits from the fan's centre that hit `target`; with need_count
// false it stops at the first one.
std::vector<Vec> fan_hits(const Shooter& sh, int centre, int target, const Fan& fan, std::size_t count,
                          bool need_count, const MorseOptions& o, std::map<int, std::pair<Vec, double>>& cache) {
  std::vector<Vec> hits;
  std::vector<double> D(fan.dirs.size());
  for (std::size_t j = 0; j < D.size(); ++j)
    D[j] = fan.shots[j].landed == target ? 0.0 : fan.shots[j].dmin[target];
  const int k = static_cast<int>(fan.U.cols());
  if (k == 1) {
    for (std::size_t j = 0; j < 2; ++j)
      if (D[j] < o.hit_tolerance) add_hit(hits, fan.dirs[j]);
    return hits;
  }
  auto cand = local_minima(fan.dirs, D, count, 2 * (k - 1));
  int tried = 0;
  for (int j : cand) {
    if (tried >= (need_count ? 16 : 6)) break;
    ++tried;
    if (D[j] < o.hit_tolerance) {
      add_hit(hits, fan.dirs[j]);
    } else {
      auto it = cache.find(j);
      if (it == cache.end()) it = cache.emplace(j, refine_direction(sh, centre, target, fan, fan.dirs[j], o.hit_tolerance)).first;
      if (it->second.second < o.hit_tolerance) add_hit(hits, it->second.first);
    }
    if (!need_count && !hits.empty()) break;
  }
  return hits;
}

void close_transitively(std::vector<std::vector<char>>& R) {
  const std::size_t G = R.size();
  for (std::size_t k = 0; k < G; ++k)
    for (std::size_t i = 0; i < G; ++i)
      if (R[i][k])
        for (std::size_t j = 0; j < G; ++j)
          if (R[k][j]) R[i][j] = 1;
}

}  // namespace

MorseComplex morse_complex(const CurvatureField& K, const std::vector<CriticalPointRecord>& crits,
                           const MorseOptions& o) {
  const int n = K.n();
  if (crits.empty()) throw PreconditionError("morse complex: no critical points");
  for (const auto& c : crits)
    if (c.degenerate) throw PreconditionError("morse complex requires nondegenerate critical points (A0)");
  if (o.directions < 4) throw ConfigurationError("morse complex: too few shooting directions");

  MorseComplex cx;
  cx.n = n;
  cx.generators = crits;
  const int G = static_cast<int>(crits.size());
  cx.by_index.assign(n + 1, {});
  for (int i = 0; i < G; ++i) cx.by_index[crits[i].index].push_back(i);

  Shooter sh(K, cx.generators, o);
  std::vector<Fan> down(G), up(G);
  for (int c = 0; c < G; ++c) {
    const int k = crits[c].index;
    Mat E = tangent_frame(crits[c].y);
    Eigen::SelfAdjointEigenSolver<Mat> es(K.hessian_in_frame(crits[c].y, E));
    Mat V = E * es.eigenvectors();
    down[c] = make_fan(sh, c, V.leftCols(k), -1.0, o, 2 * static_cast<std::uint64_t>(c));
    up[c] = make_fan(sh, c, V.rightCols(n - k), +1.0, o, 2 * static_cast<std::uint64_t>(c) + 1);
  }

  // Direct reachability: generic landings of either fan.
  std::vector<std::vector<char>> R(G, std::vector<char>(G, 0));
  for (int c = 0; c < G; ++c) {
    for (const auto& s : down[c].shots)
      if (s.landed >= 0) R[c][s.landed] = 1;
    for (const auto& s : up[c].shots)
      if (s.landed >= 0) R[s.landed][c] = 1;
  }

  // Index-adjacent pairs: count orbits on the side whose hitting set has the smaller codimension.
  std::vector<std::vector<std::pair<int, int>>> counts(G, std::vector<std::pair<int, int>>(G, {-1, -1}));
  std::vector<std::map<int, std::map<int, std::pair<Vec, double>>>> cache_down(G), cache_up(G);
  for (int p = 0; p < G; ++p)
    for (int q = 0; q < G; ++q) {
      const int k = crits[p].index;
      if (crits[q].index != k - 1 || !(crits[q].value < crits[p].value)) continue;
      const bool from_p = (k - 1) <= (n - k);
      const Fan& fan = from_p ? down[p] : up[q];
      int centre = from_p ? p : q, target = from_p ? q : p;
      auto& cache = from_p ? cache_down[p][q] : cache_up[q][p];
      int fine = static_cast<int>(fan_hits(sh, centre, target, fan, fan.dirs.size(), true, o, cache).size());
      int coarse = static_cast<int>(fan_hits(sh, centre, target, fan, fan.coarse, true, o, cache).size());
      counts[p][q] = {fine, coarse};
      if (fine > 0) R[p][q] = 1;
    }

  // Remaining index-decreasing pairs: reachability only, unless implied by a chain.
  auto T = R;
  close_transitively(T);
  for (int p = 0; p < G; ++p)
    for (int q = 0; q < G; ++q) {
      if (T[p][q] || crits[q].index >= crits[p].index || !(crits[q].value < crits[p].value)) continue;
      if (crits[q].index == crits[p].index - 1) continue;
      const bool from_p = crits[q].index <= n - crits[p].index;
      const Fan& fan = from_p ? down[p] : up[q];
      int centre = from_p ? p : q, target = from_p ? q : p;
      auto& cache = from_p ? cache_down[p][q] : cache_up[q][p];
      if (!fan_hits(sh, centre, target, fan, fan.dirs.size(), false, o, cache).empty()) {
        R[p][q] = 1;
        T = R;
        close_transitively(T);
      }
    }

  cx.reach.assign(G, {});
  for (int p = 0; p < G; ++p)
    for (int q = 0; q < G; ++q)
      if (R[p][q]) cx.reach[p].push_back(q);

  cx.boundary.assign(n + 1, Eigen::MatrixXi());
  for (int k = 1; k <= n; ++k) {
    const auto& rows = cx.by_index[k - 1];
    const auto& cols = cx.by_index[k];
    Eigen::MatrixXi B = Eigen::MatrixXi::Zero(rows.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (std::size_t r = 0; r < rows.size(); ++r) {
        int p = cols[c], q = rows[r];
        auto [fine, coarse] = counts[p][q];
        if (fine < 0) continue;
        Connection conn{p, q, fine, coarse, (fine % 2) != (coarse % 2)};
        cx.any_unknown = cx.any_unknown || conn.unknown;
        B(r, c) = fine % 2;
        if (fine > 0 || coarse > 0) cx.connections.push_back(conn);
      }
    cx.boundary[k] = B;
  }
  for (int k = 2; k <= n; ++k) {
    if (cx.boundary[k].size() == 0 || cx.boundary[k - 1].size() == 0) continue;
    Eigen::MatrixXi sq = cx.boundary[k - 1] * cx.boundary[k];
    for (int i = 0; i < sq.size(); ++i)
      if (sq.data()[i] % 2 != 0) cx.boundary_squared_zero = false;
  }
  return cx;
}

namespace {

int rank_mod2(Eigen::MatrixXi A) {
  int rank = 0;
  const int rows = static_cast<int>(A.rows()), cols = static_cast<int>(A.cols());
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = -1;
    for (int r = rank; r < rows; ++r)
      if (A(r, c) & 1) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    A.row(piv).swap(A.row(rank));
    for (int r = 0; r < rows; ++r)
      if (r != rank && (A(r, c) & 1)) A.row(r) = (A.row(r) + A.row(rank)).unaryExpr([](int v) { return v & 1; });
    ++rank;
  }
  return rank;
}

}  // namespace

std::vector<int> z2_homology(const MorseComplex& cx, const std::vector<int>& members) {
  const int n = cx.n;
  std::vector<char> in(cx.generators.size(), 0);
  for (int m : members) in[m] = 1;
  std::vector<std::vector<int>> pos(n + 1);  // positions within by_index[k] that are members
  for (int k = 0; k <= n; ++k)
    for (std::size_t i = 0; i < cx.by_index[k].size(); ++i)
      if (in[cx.by_index[k][i]]) pos[k].push_back(static_cast<int>(i));
  std::vector<int> rank(n + 2, 0);
  for (int k = 1; k <= n; ++k) {
    if (pos[k].empty() || pos[k - 1].empty()) continue;
    Eigen::MatrixXi B(pos[k - 1].size(), pos[k].size());
    for (std::size_t r = 0; r < pos[k - 1].size(); ++r)
      for (std::size_t c = 0; c < pos[k].size(); ++c) B(r, c) = cx.boundary[k](pos[k - 1][r], pos[k][c]);
    rank[k] = rank_mod2(B);
  }
  std::vector<int> betti(n + 1);
  for (int k = 0; k <= n; ++k) betti[k] = static_cast<int>(pos[k].size()) - rank[k] - rank[k + 1];
  return betti;
}

HomologyReport homology_of_X(const MorseComplex& cx, int l) {
  HomologyReport rep;
  const int G = static_cast<int>(cx.generators.size());
  if (l >= G) throw PreconditionError("homology_of_X: l exceeds the number of generators");
  std::vector<char> in(G, 0);
  std::vector<int> stack;
  for (int i = 0; i <= l; ++i) in[i] = 1, stack.push_back(i);
  auto push = [&](int q) {
    if (!in[q]) in[q] = 1, stack.push_back(q);
  };
  while (!stack.empty()) {
    int p = stack.back();
    stack.pop_back();
    for (int q : cx.reach[p]) push(q);
    for (const auto& c : cx.connections)
      if (c.from == p && c.count > 0) push(c.to);
  }
  for (int i = 0; i < G; ++i)
    if (in[i]) {
      rep.members.push_back(i);
      if (i > l) rep.closure_added = true;
    }
  rep.betti = z2_homology(cx, rep.members);
  rep.reduced_betti = rep.betti;
  if (!rep.members.empty()) rep.reduced_betti[0] -= 1;
  for (std::size_t k = 0; k < rep.reduced_betti.size(); ++k)
    if (rep.reduced_betti[k] != 0) {
      rep.m = static_cast<int>(k);
      break;
    }
  return rep;
}

AssumptionReport check_assumptions(const CurvatureField& K, double c_bar, double c_0, const AssumptionOptions& o) {
  AssumptionReport rep;
  const int n = K.n();
  rep.crits = find_critical_points(K, o.seeds, o.seed);
  auto& cr = rep.crits;

  {
    std::ostringstream ev;
    int degenerate = 0;
    double kmin = HUGE_VAL;
    for (const auto& c : cr) {
      degenerate += c.degenerate;
      kmin = std::min(kmin, c.value);
    }
    if (is_constant_curvature(K)) {
      rep.A0.status = Status::Fail;
      ev << "K is constant: a continuum of degenerate critical points";
    } else if (degenerate > 0) {
      rep.A0.status = Status::Fail;
      ev << degenerate << " of " << cr.size() << " critical points have a degenerate Hessian";
    } else if (!(kmin > 0)) {
      rep.A0.status = Status::Fail;
      ev << "K is not positive (minimum over critical values " << kmin << ")";
    } else {
      rep.A0.status = Status::Pass;
      ev << cr.size() << " nondegenerate critical points, min K = " << kmin;
    }
    rep.A0.evidence = ev.str();
    rep.A0.numbers = {{"critical_points", double(cr.size())}, {"degenerate", double(degenerate)}};
  }
  if (rep.A0.status != Status::Pass) {
    for (auto* it : {&rep.A1, &rep.A1prime, &rep.A2, &rep.A3_necessary})
      it->evidence = "not evaluated: A0 fails";
  }

  if (!cr.empty()) {
    double ratio = cr.front().value / c_bar;
    bool ok = c_bar > 0 && c_0 >= 0 && ratio <= 1 + c_0;
    rep.pinching.status = ok ? Status::Pass : Status::Fail;
    std::ostringstream ev;
    ev << "K(y_0)/c_bar = " << ratio << (ok ? " <= " : " > ") << "1 + c_0 = " << 1 + c_0;
    if (!(c_bar > 0)) ev << " (c_bar must be positive)";
    rep.pinching.evidence = ev.str();
    rep.pinching.numbers = {{"K_y0", cr.front().value}, {"c_bar", c_bar}, {"c_0", c_0}, {"ratio", ratio}};
  }
  if (rep.A0.status != Status::Pass) return rep;

  rep.l = o.l ? *o.l : default_upper_count(cr);
  if (rep.l >= static_cast<int>(cr.size())) rep.l = static_cast<int>(cr.size()) - 1;
  assign_groups(cr, rep.l);
  const int l = rep.l;
  const int s = static_cast<int>(cr.size()) - 1;
  const bool gap = l >= 0 && (l == s || cr[l].value > cr[l + 1].value);
  bool lower_ok = true;
  for (int i = l + 1; i <= s; ++i) lower_ok = lower_ok && -cr[i].laplacian < 0;
  {
    bool upper_ok = l >= 0;
    for (int i = 0; i <= l; ++i) upper_ok = upper_ok && -cr[i].laplacian > 0;
    std::ostringstream ev;
    ev << "l = " << l << "; upper -Delta K > 0: " << (upper_ok ? "yes" : "no")
       << "; lower -Delta K < 0: " << (lower_ok ? "yes" : "no") << "; K(y_l) > K(y_l+1): " << (gap ? "yes" : "no");
    rep.A1.status = upper_ok && lower_ok && gap ? Status::Pass : Status::Fail;
    rep.A1.evidence = ev.str();
    rep.A1.numbers = {{"l", double(l)}};
  }

  std::optional<HomologyReport> hom;
  if (l < 0) {
    rep.A2.status = Status::Fail;
    rep.A2.evidence = "empty upper group";
  } else {
    MorseComplex cx = morse_complex(K, cr, o.morse);
    hom = homology_of_X(cx, l);
    rep.m = hom->m;
    std::ostringstream ev;
    ev << "X spans " << hom->members.size() << " generators" << (hom->closure_added ? " (closure added lower points)" : "")
       << "; reduced Z/2 ranks:";
    for (int b : hom->reduced_betti) ev << ' ' << b;
    if (!cx.boundary_squared_zero) ev << "; boundary^2 != 0";
    if (cx.any_unknown) ev << "; orbit counts unstable under refinement";
    if (!cx.boundary_squared_zero || cx.any_unknown)
      rep.A2.status = Status::Unknown;
    else
      rep.A2.status = hom->m ? Status::Pass : Status::Fail;
    if (hom->m) ev << "; m = " << *hom->m;
    else ev << "; m = NONE";
    rep.A2.evidence = ev.str();
    if (hom->m) rep.A2.numbers = {{"m", double(*hom->m)}};
  }

  {
    std::ostringstream ev;
    bool ok = lower_ok;
    bool needs_m = false;
    for (int i = 1; i <= l; ++i) {
      if (-cr[i].laplacian > 0) continue;
      needs_m = true;
      if (!rep.m) {
        ok = false;
        ev << "y_" << i << " has -Delta K <= 0 but m is undefined; ";
        continue;
      }
      int lo = n - *rep.m + 3, hi = n - 2;
      bool in = cr[i].index >= lo && cr[i].index <= hi;
      ok = ok && in;
      ev << "y_" << i << " index " << cr[i].index << (in ? " in " : " outside ") << "[" << lo << ", " << hi << "]; ";
    }
    ev << "lower -Delta K < 0: " << (lower_ok ? "yes" : "no");
    if (!needs_m) ev << "; no upper point with -Delta K <= 0";
    rep.A1prime.status = ok ? Status::Pass : Status::Fail;
    rep.A1prime.evidence = ev.str();
  }

  if (l >= 0) {
    std::ostringstream ev;
    double xmin = HUGE_VAL;
    if (hom)
      for (int i : hom->members) xmin = std::min(xmin, cr[i].value);
    bool below_yl = c_bar < cr[l].value;
    bool level = xmin >= c_bar;
    bool contraction = true;
    for (const auto& p : o.contraction_samples) contraction = contraction && K.value(p) >= c_bar;
    ev << "c_bar < K(y_l): " << (below_yl ? "yes" : "no") << "; min K over X = " << xmin
       << (level ? " >= c_bar" : " < c_bar");
    if (o.contraction_samples.empty())
      ev << "; deformability UNKNOWN (no contraction supplied)";
    else
      ev << "; supplied contraction " << (contraction ? "stays in" : "leaves") << " K >= c_bar";
    rep.A3_necessary.status = below_yl && level && contraction ? Status::Pass : Status::Fail;
    rep.A3_necessary.evidence = ev.str();
    rep.A3_necessary.numbers = {{"min_K_on_X", xmin}, {"K_yl", cr[l].value}, {"c_bar", c_bar}};
  } else {
    rep.A3_necessary.status = Status::Fail;
    rep.A3_necessary.evidence = "empty upper group";
  }
  return rep;
}

}  // namespace paneitz
