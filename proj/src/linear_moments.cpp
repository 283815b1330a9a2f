#include "qccp/error.hpp"
#include "qccp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qccp {

LinearQuadraticFamily::LinearQuadraticFamily(std::vector<SymMatrix> A_, std::vector<Vector> a_, Vector scalars_)
    : A(std::move(A_)), a(std::move(a_)), scalars(std::move(scalars_)) {
  if (a.size() < 2) throw_input("family: need coefficients for j = 0..n with n >= 1");
  if (A.size() != a.size() || static_cast<std::size_t>(scalars.size()) != a.size()) {
    throw_input("family: A, a and scalar lists must all have n+1 entries");
  }
  const std::size_t m = a[0].size();
  if (m == 0) throw_input("family: zero random dimension");
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (static_cast<std::size_t>(a[j].size()) != m) {
      throw_input("family: a[" + std::to_string(j) + "] has length " + std::to_string(a[j].size()) +
                  ", expected " + std::to_string(m));
    }
    if (A[j].dim() != 0 && A[j].dim() != m) throw_input("family: A[" + std::to_string(j) + "] has wrong size");
    if (!a[j].allFinite()) throw_input("family: a[" + std::to_string(j) + "] is not finite");
  }
  if (!scalars.allFinite()) throw_input("family: scalars are not finite");
}

QuadraticForm LinearQuadraticFamily::at(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n()) throw_input("family: decision vector has wrong length");
  const auto md = static_cast<Eigen::Index>(m());
  Matrix Ax = Matrix::Zero(md, md);
  Vector ax = a[0];
  double sx = scalars[0];
  if (has_quadratic(0)) Ax += A[0].mat();
  for (std::size_t j = 1; j <= n(); ++j) {
    const double xj = x[static_cast<Eigen::Index>(j - 1)];
    if (has_quadratic(j)) Ax += xj * A[j].mat();
    ax += xj * a[j];
    sx += xj * scalars[static_cast<Eigen::Index>(j)];
  }
  return QuadraticForm(SymMatrix(Ax), ax, sx);
}

double LinearMomentData::sd(std::size_t i, const Vector& xh) const {
  return (L[i].transpose() * xh).norm();
}

LinearMomentData build_linear_moments(const LinearQuadraticFamily& family, const GaussianMixture& mix) {
  if (family.m() != mix.dim()) {
    throw_input("build_linear_moments: family has m = " + std::to_string(family.m()) + ", mixture has " +
                std::to_string(mix.dim()));
  }
  const std::size_t n1 = family.n() + 1;
  const auto N = static_cast<Eigen::Index>(n1);
  const auto md = static_cast<Eigen::Index>(family.m());
  LinearMomentData out;
  out.weights = mix.weights();
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const Vector& mu = mix[i].mean;
    const Matrix& S = mix[i].cov.mat();
    Vector nu(N);
    Matrix G(md, N);
    std::vector<Matrix> AS(n1);
    for (std::size_t j = 0; j < n1; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      nu[jj] = family.a[j].dot(mu) + family.scalars[jj];
      G.col(jj) = family.a[j];
      if (family.has_quadratic(j)) {
        const Matrix& Aj = family.A[j].mat();
        AS[j] = Aj * S;
        nu[jj] += 0.5 * AS[j].trace() + 0.5 * mu.dot(Aj * mu);
        G.col(jj) += Aj * mu;
      }
    }
    Matrix Psi = G.transpose() * S * G;
    Psi = 0.5 * (Psi + Psi.transpose());
    Matrix Phi = Matrix::Zero(N, N);
    for (std::size_t k = 0; k < n1; ++k) {
      if (AS[k].size() == 0) continue;
      for (std::size_t l = k; l < n1; ++l) {
        if (AS[l].size() == 0) continue;
        const double v = (AS[k].array() * AS[l].transpose().array()).sum();
        Phi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = v;
        Phi(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = v;
      }
    }
    Matrix M = Psi + 0.5 * Phi;
    out.L.push_back(psd_factor(SymMatrix(M)));
    out.nu.push_back(std::move(nu));
    out.Psi.push_back(std::move(Psi));
    out.Phi.push_back(std::move(Phi));
    out.M.push_back(std::move(M));
  }
  return out;
}

Vector augment(const Vector& x) {
  Vector xh(x.size() + 1);
  xh[0] = 1.0;
  xh.tail(x.size()) = x;
  return xh;
}

double chance_probability(const LinearMomentData& data, const Vector& x) {
  const Vector xh = augment(x);
  double p = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double mean = data.mean(i, xh);
    const double sd = data.sd(i, xh);
    const double w = data.weights[static_cast<Eigen::Index>(i)];
    if (sd > 0.0) {
      p += w * std_normal_cdf(-mean / sd);
    } else if (mean <= 0.0) {
      p += w;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

Vector eval_h(const LinearMomentData& data, const Vector& x, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != data.size()) throw_input("eval_h: y has wrong length");
  const Vector xh = augment(x);
  Vector h(y.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    h[k] = std_normal_quantile(y[k]) * data.sd(i, xh) + data.mean(i, xh);
  }
  return h;
}

Vector eval_h_relaxed(const LinearMomentData& data, const Vector& x, const Vector& l) { return eval_h(data, x, l); }

void ProblemSpec::validate() const {
  const std::size_t nn = n();
  if (family.m() != mix.dim()) throw_input("problem: family and mixture dimensions differ");
  if (static_cast<std::size_t>(objective.size()) != nn + 1) {
    throw_input("problem: objective must have n+1 = " + std::to_string(nn + 1) + " entries");
  }
  if (static_cast<std::size_t>(box.lower.size()) != nn || static_cast<std::size_t>(box.upper.size()) != nn) {
    throw_input("problem: box bounds must have n entries");
  }
  for (std::size_t j = 0; j < nn; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    if (!std::isfinite(box.lower[k]) || !std::isfinite(box.upper[k])) {
      throw_input("problem: box must be bounded (coordinate " + std::to_string(j) + ")");
    }
    if (box.lower[k] > box.upper[k]) throw_input("problem: box lower > upper at coordinate " + std::to_string(j));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw_input("problem: alpha must lie in (0,1)");
  if (static_cast<std::size_t>(y_lower.size()) != K() || static_cast<std::size_t>(y_upper.size()) != K()) {
    throw_input("problem: y cube must have K entries");
  }
  for (Eigen::Index i = 0; i < y_lower.size(); ++i) {
    if (!(y_lower[i] > 0.0 && y_lower[i] <= y_upper[i] && y_upper[i] < 1.0)) {
      throw_input("problem: y cube must satisfy 0 < lower <= upper < 1");
    }
  }
  if (!objective.allFinite()) throw_input("problem: objective is not finite");
}

void set_default_y_cube(ProblemSpec& p) {
  const auto K = static_cast<Eigen::Index>(p.K());
  p.y_lower = Vector::Constant(K, 1e-4);
  p.y_upper = Vector::Constant(K, 1.0 - 1e-6);
}

double worst_case_node_count(const ProblemSpec& problem, const LinearMomentData& data, double epsilon) {
  if (!(epsilon > 0.0)) throw_input("worst_case_node_count: epsilon must be > 0");
  problem.validate();
  double xmax2 = 1.0;
  for (Eigen::Index j = 0; j < problem.box.lower.size(); ++j) {
    xmax2 += std::max(problem.box.lower[j] * problem.box.lower[j], problem.box.upper[j] * problem.box.upper[j]);
  }
  const double ylo = problem.y_lower.minCoeff();
  const double yhi = problem.y_upper.maxCoeff();
  const double dstar = std::max(1.0 / std_normal_pdf(std_normal_quantile(ylo)),
                                1.0 / std_normal_pdf(std_normal_quantile(yhi)));
  const double edge = (problem.y_upper - problem.y_lower).maxCoeff();
  double lstar = 0.0;
  for (const auto& M : data.M) lstar = std::max(lstar, sym_eigen_ascending(SymMatrix(M)).values.maxCoeff());
  const double per_edge = std::floor(std::sqrt(xmax2) * dstar * edge * std::sqrt(std::max(lstar, 0.0)) / epsilon);
  return std::pow(per_edge, static_cast<double>(problem.K()));
}

double worst_case_node_count(const ProblemSpec& problem, double epsilon) {
  return worst_case_node_count(problem, build_linear_moments(problem.family, problem.mix), epsilon);
}

McEstimate mc_feasibility_check(const ProblemSpec& problem, const Vector& x, std::size_t n_samples,
                                std::uint64_t seed) {
  if (n_samples < 10000) throw_input("mc_feasibility_check: need at least 1e4 samples");
  const QuadraticForm q = problem.family.at(x);
  const Matrix z = mixture_sample(problem.mix, n_samples, seed);
  std::size_t hits = 0;
  for (Eigen::Index s = 0; s < z.rows(); ++s) {
    if (q(z.row(s).transpose()) <= 0.0) ++hits;
  }
  McEstimate est;
  est.samples = n_samples;
  est.probability = static_cast<double>(hits) / static_cast<double>(n_samples);
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(n_samples));
  return est;
}

}  // namespace qccp
