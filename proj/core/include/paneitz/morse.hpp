#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paneitz/curvature.hpp"
#include "paneitz/error.hpp"

namespace paneitz {

enum class Group { Upper, Lower };
enum class Status { Pass, Fail, Unknown, NotApplicable };

const char* to_string(Status s);
const char* to_string(Group g);

struct CriticalPointRecord {
  Point y;
  int index = 0;  // number of negative eigenvalues of the tangent Hessian
  double value = 0;
  double grad_norm = 0;
  double laplacian = 0;
  double min_abs_eigenvalue = 0;
  bool degenerate = false;
  Group group = Group::Lower;
};

struct CriticalSearchOptions {
  int seeds = 64;
  std::uint64_t seed = 1;
  double dedup_distance = 1e-6;
  double gradient_tolerance = 1e-12;
  double degeneracy_margin = 1e-6;
  int max_newton = 100;
  std::vector<Point> extra_starts;
};

// Sorted by decreasing K; groups are not assigned yet (all Lower).
std::vector<CriticalPointRecord> find_critical_points(const CurvatureField& K, int seeds, std::uint64_t seed = 1);
std::vector<CriticalPointRecord> find_critical_points(const CurvatureField& K, const CriticalSearchOptions& opts);

// Samples |grad K| and |Hess K| on the sphere; true when both vanish.
bool is_constant_curvature(const CurvatureField& K, double tol = 1e-12);

// Largest l such that the l+1 highest points all have -Delta K > 0 and
// K(y_l) > K(y_{l+1}). Returns -1 when the top point already fails.
int default_upper_count(const std::vector<CriticalPointRecord>& crits);
void assign_groups(std::vector<CriticalPointRecord>& crits, int l);

struct MorseOptions {
  int directions = 48;  // samples per unstable sphere at base resolution
  std::uint64_t seed = 7;
  double start_radius = 2e-2;
  double landing_radius = 1e-9;
  double max_length = 40.0;
  double hit_tolerance = 1e-4;  // closest approach counted as a hit
  unsigned threads = 0;
};

struct Connection {
  int from = 0;
  int to = 0;
  int count = 0;            // distinct connecting orbits found at the finer resolution
  int count_coarse = 0;
  bool unknown = false;     // counts disagree mod 2 between resolutions
};

struct MorseComplex {
  int n = 0;
  std::vector<CriticalPointRecord> generators;
  // boundary[k](i, j) = mod-2 count from generator j of index k to generator i of index k-1,
  // where i and j index by_index[k-1] and by_index[k].
  std::vector<std::vector<int>> by_index;
  std::vector<Eigen::MatrixXi> boundary;
  std::vector<Connection> connections;
  // reach[p] = generators whose neighbourhood is visited by the descending flow from p.
  std::vector<std::vector<int>> reach;
  bool boundary_squared_zero = true;
  bool any_unknown = false;
  int euler_characteristic() const;
};

MorseComplex morse_complex(const CurvatureField& K, const std::vector<CriticalPointRecord>& crits,
                           const MorseOptions& opts = {});

struct HomologyReport {
  std::vector<int> betti;          // Z/2 ranks, degrees 0..n
  std::vector<int> reduced_betti;
  std::optional<int> m;            // first nontrivial reduced degree
  std::vector<int> members;        // generators of the closed subcomplex
  bool closure_added = false;      // generators outside the upper group were needed
};

// Z/2 homology of a subcomplex given by generator membership.
std::vector<int> z2_homology(const MorseComplex& cx, const std::vector<int>& members);
HomologyReport homology_of_X(const MorseComplex& cx, int l);

struct AssumptionItem {
  Status status = Status::Unknown;
  std::string evidence;
  std::vector<std::pair<std::string, double>> numbers;
};

struct AssumptionReport {
  AssumptionItem A0, A1, A1prime, A2, A3_necessary, pinching;
  std::optional<int> m;
  int l = -1;
  std::vector<CriticalPointRecord> crits;
};

struct AssumptionOptions {
  int seeds = 64;
  std::uint64_t seed = 1;
  std::optional<int> l;  // default_upper_count when absent
  MorseOptions morse;
  // User-supplied contraction of X, sampled as points; checked against c_bar.
  std::vector<Point> contraction_samples;
};

AssumptionReport check_assumptions(const CurvatureField& K, double c_bar, double c_0,
                                   const AssumptionOptions& opts = {});

struct PerturbationReport {
  CurvatureField K_tilde;
  bool same_critical_set = false;
  bool same_indices = false;
  bool targets_positive = false;  // -Delta K~(z) > 0 at every target
  double c1_distance = 0;
  double minimal_feasible_tolerance = 0;
  int attempts = 0;
  std::vector<double> target_laplacians;  // Delta K~(z_j)
  std::vector<CriticalPointRecord> crits_after;
  bool ok() const { return same_critical_set && same_indices && targets_positive; }
};

// The perturbation cannot meet c1_tol; carries the smallest tolerance it can.
class ToleranceError : public Error {
 public:
  ToleranceError(const std::string& what, double minimal) : Error(what), minimal_feasible(minimal) {}
  double minimal_feasible;
};

// Deepens the negative Hessian eigenvalues of K around each target inside
// B(z_j, rho). Throws ConvergenceError when retries cannot keep the
// critical data intact, PreconditionError on invalid targets.
PerturbationReport perturb_K(const CurvatureField& K, const std::vector<CriticalPointRecord>& targets, double rho,
                             double c1_tol, int seeds = 64, std::uint64_t seed = 1);

struct ReducedIndex {
  int total = 0;
  int z_contribution = 0;
  int lambda_contribution = 0;
  Vec hessian_eigenvalues;  // of D^2 K~(z0) in a tangent frame
  double laplacian = 0;
};

ReducedIndex reduced_morse_index(const CurvatureField& K_tilde, const Point& z0, double laplacian_tol = 1e-10);

}  // namespace paneitz
