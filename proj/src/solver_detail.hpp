#pragma once

#include "qccp/interior_point.hpp"
#include "qccp/solver.hpp"

#include <random>
#include <vector>

namespace qccp::detail {

/// Free coordinates of the decision box; fixed ones (lower == upper) are
/// folded into a constant part of xh = (1; x).
struct FreeMap {
  std::vector<Eigen::Index> free;  // indices into x
  Vector base;                     // xh with free entries zeroed
  Vector lower, upper;             // bounds of the free coordinates

  explicit FreeMap(const Box& box);
  Eigen::Index size() const { return static_cast<Eigen::Index>(free.size()); }
  Vector xhat(const Vector& z) const;
  Vector x(const Vector& z) const;
  Vector restrict(const Vector& x) const;
  Vector center() const { return 0.5 * (lower + upper); }
  Vector random_point(std::mt19937_64& rng) const;
};

/// Per-component pieces of the cone term in free coordinates.
struct ConeTerm {
  Matrix Lr;      // rows of L for the free coordinates (shifted by one for the constant)
  Vector Lbase;   // L^T base
  Matrix Mr;      // Lr Lr^T
  Vector nu_r;    // nu restricted to the free coordinates
  double nu_base = 0.0;
  double eta = 0.0;  // smoothing of the square root

  ConeTerm(const LinearMomentData& data, std::size_t i, const FreeMap& map);
  /// s = sqrt(||L^T xh||^2 + eta); fills the gradient and Hessian of s.
  double s(const Vector& z, Vector* grad, Matrix* hess) const;
  double mean(const Vector& z) const { return nu_r.dot(z) + nu_base; }
};

std::vector<ConeTerm> cone_terms(const LinearMomentData& data, const FreeMap& map);

}  // namespace qccp::detail
