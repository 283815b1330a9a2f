#include "qccp/numerics.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qccp {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kPsdClip = 1e-10;

// Rational initializer (Acklam); relative error ~1e-9 before polishing.
double quantile_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw_input(std::string(what) + ": matrix is not square");
  }
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  check_square(m, "SymMatrix");
  if (!m.allFinite()) throw_input("SymMatrix: non-finite entry");
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  const double asym = m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12 * std::max(scale, 1e-300) && asym > 0.0) {
    throw_input("SymMatrix: input is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  return SymMatrix(Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

SymMatrix SymMatrix::zero(std::size_t dim) {
  return SymMatrix(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
}

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

double std_normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double std_normal_cdf(double t) {
  if (std::isnan(t)) return t;
  return 0.5 * std::erfc(-t / kSqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw_domain("std_normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // 1 - p is exact for p >= 0.5, so the upper half is the mirrored lower half
  if (p > 0.5) return -std_normal_quantile(1.0 - p);
  double x = quantile_initial(p);
  for (int it = 0; it < 2; ++it) {
    const double pdf = std_normal_pdf(x);
    if (pdf <= 0.0) break;
    const double u = (std_normal_cdf(x) - p) / pdf;
    x -= u / (1.0 + 0.5 * x * u);  // Halley
  }
  return x;
}

EigenDecomposition sym_eigen(const SymMatrix& m) {
  EigenDecomposition asc = sym_eigen_ascending(m);
  const Eigen::Index n = asc.values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return std::abs(asc.values[i]) > std::abs(asc.values[j]);
  });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = asc.values[order[static_cast<std::size_t>(k)]];
    out.vectors.col(k) = asc.vectors.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

EigenDecomposition sym_eigen_ascending(const SymMatrix& m) {
  if (m.dim() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success) throw_domain("sym_eigen: eigen solver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

SymMatrix sym_sqrt(const SymMatrix& sigma) {
  EigenDecomposition e = sym_eigen_ascending(sigma);
  if (e.values.size() == 0) return sigma;
  const double lmax = std::max(e.values.maxCoeff(), 0.0);
  Vector root(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    double v = e.values[i];
    if (v < 0.0) {
      if (v < -kPsdClip * lmax || lmax == 0.0) {
        throw_domain("sym_sqrt: matrix is indefinite (eigenvalue " + std::to_string(v) + ")");
      }
      v = 0.0;
    }
    root[i] = std::sqrt(v);
  }
  Matrix r = e.vectors * root.asDiagonal() * e.vectors.transpose();
  return SymMatrix(0.5 * (r + r.transpose()));
}

SymMatrix sym_inv_sqrt(const SymMatrix& sigma) {
  EigenDecomposition e = sym_eigen_ascending(sigma);
  if (e.values.size() == 0) return sigma;
  if (!(e.values.minCoeff() > 0.0)) throw_domain("sym_inv_sqrt: matrix is singular");
  Vector inv = e.values.cwiseSqrt().cwiseInverse();
  Matrix r = e.vectors * inv.asDiagonal() * e.vectors.transpose();
  return SymMatrix(0.5 * (r + r.transpose()));
}

double condition_number(const SymMatrix& sigma) {
  EigenDecomposition e = sym_eigen_ascending(sigma);
  if (e.values.size() == 0) return 1.0;
  const double lmin = e.values.minCoeff();
  const double lmax = e.values.maxCoeff();
  if (!(lmin > 0.0)) return kInf;
  return lmax / lmin;
}

SymMatrix clip_condition_number(const SymMatrix& sigma, double q) {
  if (!(q >= 1.0)) throw_input("clip_condition_number: bound must be >= 1");
  if (std::isinf(q)) return sigma;
  EigenDecomposition e = sym_eigen_ascending(sigma);
  const double lmax = e.values.maxCoeff();
  if (!(lmax > 0.0)) throw_domain("clip_condition_number: matrix has no positive eigenvalue");
  const double floor = lmax / q;
  Vector clipped = e.values.cwiseMax(floor);
  Matrix r = e.vectors * clipped.asDiagonal() * e.vectors.transpose();
  return SymMatrix(0.5 * (r + r.transpose()));
}

Matrix psd_factor(const SymMatrix& m) {
  EigenDecomposition e = sym_eigen_ascending(m);
  if (e.values.size() == 0) return Matrix();
  const double lmax = std::max(e.values.maxCoeff(), 0.0);
  Vector root(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    double v = e.values[i];
    if (v < -kPsdClip * std::max(lmax, 1e-300) && v < -1e-300) {
      throw_domain("psd_factor: matrix is indefinite (eigenvalue " + std::to_string(v) + ")");
    }
    root[i] = std::sqrt(std::max(v, 0.0));
  }
  return e.vectors * root.asDiagonal();
}

double relative_frobenius(const Matrix& approx, const Matrix& exact) {
  const double denom = exact.norm();
  const double num = (approx - exact).norm();
  return denom > 0.0 ? num / denom : num;
}

}  // namespace qccp
