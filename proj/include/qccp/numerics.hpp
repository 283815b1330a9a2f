#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>

namespace qccp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense symmetric matrix. Construction checks symmetry (relative 1e-12 of the
/// largest entry) and finiteness, then stores the exactly symmetrized matrix.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix zero(std::size_t dim);
  static SymMatrix diagonal(const Vector& d);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  bool is_zero() const { return m_.size() == 0 || m_.cwiseAbs().maxCoeff() == 0.0; }

 private:
  Matrix m_;
};

/// Eigenpairs of a symmetric matrix, ordered by descending |eigenvalue|.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;  // columns
};

double std_normal_pdf(double t);
double std_normal_cdf(double t);
/// Inverse of std_normal_cdf; throws a domain error unless 0 < p < 1.
double std_normal_quantile(double p);

EigenDecomposition sym_eigen(const SymMatrix& m);
/// Same spectrum, ascending algebraic order (as needed for PSD work).
EigenDecomposition sym_eigen_ascending(const SymMatrix& m);

/// Eigenvalues in [-1e-10 * lambda_max, 0] are treated as zero; anything more
/// negative is a domain error.
SymMatrix sym_sqrt(const SymMatrix& sigma);
/// Inverse square root; sigma must be positive definite.
SymMatrix sym_inv_sqrt(const SymMatrix& sigma);

/// lambda_max / lambda_min; +inf when the matrix is singular.
double condition_number(const SymMatrix& sigma);

/// Clips the spectrum of a PSD matrix to [lambda_max / q, lambda_max],
/// keeping eigenvectors.
SymMatrix clip_condition_number(const SymMatrix& sigma, double q);

/// Factor L with L L^T = m for a PSD matrix (eigen-based, tolerates singularity).
Matrix psd_factor(const SymMatrix& m);

double relative_frobenius(const Matrix& approx, const Matrix& exact);

}  // namespace qccp
