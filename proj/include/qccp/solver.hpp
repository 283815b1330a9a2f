#pragma once

#include "qccp/gmm.hpp"
#include "qccp/quadform.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qccp {

/// A(x) = A_0 + sum x_j A_j,  a(x) = a_0 + sum x_j a_j,  s(x) = s_0 + sum x_j s_j.
/// An empty SymMatrix stands for a zero matrix.
struct LinearQuadraticFamily {
  std::vector<SymMatrix> A;
  std::vector<Vector> a;
  Vector scalars;

  LinearQuadraticFamily() = default;
  LinearQuadraticFamily(std::vector<SymMatrix> A_, std::vector<Vector> a_, Vector scalars_);

  std::size_t n() const { return a.size() - 1; }
  std::size_t m() const { return a.empty() ? 0 : static_cast<std::size_t>(a[0].size()); }
  bool has_quadratic(std::size_t j) const { return A[j].dim() != 0 && !A[j].is_zero(); }
  QuadraticForm at(const Vector& x) const;
};

/// mean_i(x) = nu_i^T xh, var_i(x) = xh^T M_i xh with xh = (1; x).
struct LinearMomentData {
  Vector weights;
  std::vector<Vector> nu;
  std::vector<Matrix> Psi;
  std::vector<Matrix> Phi;
  std::vector<Matrix> M;
  std::vector<Matrix> L;  // M_i = L_i L_i^T

  std::size_t size() const { return nu.size(); }
  std::size_t n() const { return nu.empty() ? 0 : static_cast<std::size_t>(nu[0].size()) - 1; }
  double mean(std::size_t i, const Vector& xh) const { return nu[i].dot(xh); }
  double sd(std::size_t i, const Vector& xh) const;
};

LinearMomentData build_linear_moments(const LinearQuadraticFamily& family, const GaussianMixture& mix);

Vector augment(const Vector& x);

/// sum_i pi_i Phi(-mean_i/sd_i); a zero-variance component contributes
/// the indicator of mean_i <= 0.
double chance_probability(const LinearMomentData& data, const Vector& x);

/// h_i = Phiinv(y_i) sd_i(x) + mean_i(x).
Vector eval_h(const LinearMomentData& data, const Vector& x, const Vector& y);
/// Same expression at the lower cube corner l.
Vector eval_h_relaxed(const LinearMomentData& data, const Vector& x, const Vector& l);

struct Box {
  Vector lower;
  Vector upper;
};

struct ProblemSpec {
  LinearQuadraticFamily family;
  GaussianMixture mix;
  Vector objective;  // b_0 .. b_n
  Box box;
  double alpha = 0.05;
  Vector y_lower;
  Vector y_upper;

  std::size_t n() const { return family.n(); }
  std::size_t K() const { return mix.size(); }
  /// Throws an input error describing the first inconsistency.
  void validate() const;
  double objective_value(const Vector& x) const { return objective.dot(augment(x)); }
};

/// Default y-cube [1e-4, 1 - 1e-6]^K.
void set_default_y_cube(ProblemSpec& p);

enum class SubStatus { Optimal, Infeasible, Failed };

struct SubproblemResult {
  SubStatus status = SubStatus::Failed;
  Vector x;
  double value = kInf;
  bool heuristic = false;  // solved by local multistart (reverse-convex constraints)
  int newton_steps = 0;
};

struct RelaxOptions {
  int n_multistart = 8;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  std::optional<Vector> warm_start;
};

/// Lower-bound subproblem over the cube [l, u]:
///   min b^T xh  s.t.  Phiinv(l_i) ||L_i^T xh|| + nu_i^T xh <= 0,  x in box,
/// after the corner check sum pi_i u_i >= 1 - alpha.
SubproblemResult solve_relaxed(const LinearMomentData& data, const Vector& objective, const Box& box,
                               const Vector& l, const Vector& u, double alpha, const RelaxOptions& opts = {});

/// Same cone program with y held fixed (Phiinv(y_i) in place of Phiinv(l_i)).
SubproblemResult solve_fixed_y(const LinearMomentData& data, const Vector& objective, const Box& box,
                               const Vector& y, const RelaxOptions& opts = {});

/// l_i <- max(l_i, (1 - alpha - sum_{j != i} pi_j u_j) / pi_i). Returns false
/// when the cube cannot meet sum pi_i y_i >= 1 - alpha.
bool tighten_cube(const Vector& weights, double alpha, Vector& l, const Vector& u);

struct LocalResult {
  bool feasible = false;
  Vector x;
  Vector y;
  double value = kInf;
  int starts_converged = 0;
};

struct LocalOptions {
  int n_multistart = 8;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  std::vector<Vector> extra_starts;  // x starting points tried before the random ones
};

/// Local solve of the joint (x, y) problem over the y-cube of the problem.
LocalResult solve_local(const ProblemSpec& problem, const LinearMomentData& data, const LocalOptions& opts = {});

struct BBOptions {
  double epsilon = 1e-3;
  double gap_tol = 1e-2;
  double edge_tol = 1e-2;
  std::size_t max_nodes = 200000;
  double max_seconds = 600.0;
  int workers = 1;
  bool trace = false;
  int n_multistart = 8;
  std::uint64_t seed = 0;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit };

std::string to_string(SolveStatus s);

struct TraceEntry {
  std::size_t step = 0;
  Vector l;
  Vector u;
  double bound = 0.0;
  std::string action;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  Vector x;
  double value = kInf;
  Vector y;                     // y witnessing feasibility of x
  Vector node_lower;            // defining node of the incumbent
  Vector node_upper;
  double max_gap = 0.0;         // max_i h_i(x, y) - h_i^r(x, l)
  double lower_bound = -kInf;   // smallest open bound at termination
  double local_value = kInf;    // seed incumbent from local multistart
  std::size_t nodes = 0;        // relaxed subproblems solved
  std::size_t subproblem_solves = 0;  // all cone/local solves incl. repair and polishing
  std::size_t iterations = 0;
  bool heuristic = false;       // some node used the reverse-convex local solver
  double seconds = 0.0;
  std::vector<TraceEntry> trace;
};

SolveResult branch_and_bound(const ProblemSpec& problem, const BBOptions& opts = {});

/// floor(x_max d* [y] sqrt(lambda*) / eps)^K as a double.
double worst_case_node_count(const ProblemSpec& problem, const LinearMomentData& data, double epsilon);
double worst_case_node_count(const ProblemSpec& problem, double epsilon);

struct McEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Pr{c(xi, x) <= 0} estimated from direct evaluation of c on mixture samples.
McEstimate mc_feasibility_check(const ProblemSpec& problem, const Vector& x, std::size_t n_samples,
                                std::uint64_t seed);

}  // namespace qccp
