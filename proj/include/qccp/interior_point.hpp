#pragma once

#include "qccp/numerics.hpp"

#include <functional>
#include <vector>

namespace qccp {

/// Smooth inequality g(z) <= 0. grad/hess are filled only when non-null.
using ConstraintFn = std::function<double(const Vector& z, Vector* grad, Matrix* hess)>;

/// minimize cost^T z  s.t.  g_j(z) <= 0,  lower <= z <= upper.
/// Infinite bounds are allowed and simply carry no barrier term.
struct BarrierProblem {
  Vector cost;
  Vector lower;
  Vector upper;
  std::vector<ConstraintFn> constraints;
};

struct BarrierOptions {
  double tol = 1e-7;      // barrier gap relative to max(1, |objective|)
  double mu = 12.0;       // barrier parameter growth
  double t0 = 1.0;
  int max_outer = 60;
  int max_newton = 80;    // per centering step
};

enum class BarrierStatus { Optimal, Infeasible, NotConverged };

struct BarrierResult {
  BarrierStatus status = BarrierStatus::NotConverged;
  Vector z;
  double value = 0.0;
  double max_constraint = 0.0;  // max_j g_j(z)
  int newton_steps = 0;
};

/// Log-barrier Newton method with Hessian regularization; a phase-I solve
/// finds a strictly feasible point when `start` is not one. For nonconvex
/// constraints the result is a local solution and Infeasible means phase I
/// stalled from this start.
BarrierResult barrier_minimize(const BarrierProblem& problem, const Vector& start,
                               const BarrierOptions& opts = {});

}  // namespace qccp
