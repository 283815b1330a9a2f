#pragma once

#include "qccp/gmm.hpp"
#include "qccp/quadform.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace qccp {

using Complex = std::complex<double>;

/// Z = sum_j w_j z_j^2 with z_j ~ N(alpha_j, 1) independent.
struct ChiSqSumSpec {
  Vector weights;
  Vector means;

  ChiSqSumSpec() = default;
  ChiSqSumSpec(Vector w, Vector alpha);
  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  double mean() const;
  double variance() const;
};

/// Characteristic function of Z, or of (Z - EZ)/sd(Z) when standardized.
Complex cf_chisq_sum(const ChiSqSumSpec& spec, double t, bool standardized);

/// Exact characteristic function of (c - Ec)/sd(c) under the mixture.
/// Evaluating many t values through this class reuses the decomposition.
class QuadraticCF {
 public:
  QuadraticCF(const QuadraticForm& q, const GaussianMixture& mix);
  Complex operator()(double t) const;
  double mean() const { return mean_; }
  double sd() const { return sd_; }

 private:
  SpectralData spec_;
  Vector linear_mean_;  // c_i + sum_{j>=h} b_j d_j
  Vector linear_var_;   // sum_{j>=h} b_j^2
  double mean_ = 0.0;
  double sd_ = 0.0;
};

Complex cf_quadratic_exact(const QuadraticForm& q, const GaussianMixture& mix, double t);

/// CF of the univariate mixture standardized by its own mean and variance.
Complex cf_univariate_gmm(const UnivariateGaussianMixture& u, double t);

/// 201 uniform points on [-5, 5].
std::vector<double> default_t_grid();

/// max_t |exact CF - CF of the asymptotic mixture| on the grid.
double cf_sup_error(const QuadraticForm& q, const GaussianMixture& mix, const std::vector<double>& grid);
double cf_sup_error(const QuadraticForm& q, const GaussianMixture& mix);

/// max_t |standardized CF of Z - exp(-t^2/2)|.
double chisq_cf_sup_error(const ChiSqSumSpec& spec, const std::vector<double>& grid);

struct RateBoundReport {
  double alpha_bar = 0.5;      // 1/2 + mean(alpha^2)
  double ratio = 1.0;          // |w_1| / |w_h| after sorting
  double bound_value = 0.0;    // ratio^3 alpha_bar^{-1/2} h^{-1/2}
  double premise_value = 0.0;  // ratio alpha_bar^{-1/6} h^{-1/6}
  double f3 = 0.0;
  double f4 = 0.0;
  bool non_convergent = false;  // premise_value > 1
  std::vector<std::size_t> permutation;  // sorted position -> input index
};

/// Convergence-rate bound for the standardized chi-square sum. Weights are
/// sorted by |w| descending first; zero weights are an input error.
RateBoundReport rate_bound(const ChiSqSumSpec& spec);

struct ConditionBoundCheck {
  double lhs = 0.0;  // |l_max / l_min| of Sigma^{1/2} A Sigma^{1/2}
  double rhs = 0.0;  // |l_max / l_min| of A times cond(Sigma)
  bool holds = false;
};

/// Compares the spread of Sigma^{1/2} A Sigma^{1/2} with that of A and Sigma.
/// Both matrices must be nonsingular.
ConditionBoundCheck check_condition_bound(const SymMatrix& A, const SymMatrix& sigma);

Vector sample_chisq_sum(const ChiSqSumSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace qccp
