#pragma once

#include "qccp/gmm.hpp"
#include "qccp/numerics.hpp"

#include <vector>

namespace qccp {

/// c(z) = 1/2 z^T A z + a^T z + a0 at a fixed decision.
struct QuadraticForm {
  SymMatrix A;
  Vector a;
  double a0 = 0.0;

  QuadraticForm() = default;
  QuadraticForm(SymMatrix A_, Vector a_, double a0_);

  std::size_t dim() const { return static_cast<std::size_t>(a.size()); }
  double operator()(const Vector& z) const;
};

struct ComponentMoments {
  double mean = 0.0;
  double variance = 0.0;
};

ComponentMoments component_moments(const QuadraticForm& q, const Vector& mu, const SymMatrix& sigma);

struct MixtureMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Law-of-total-variance composition over the mixture components.
MixtureMoments mixture_moments(const QuadraticForm& q, const GaussianMixture& mix);

/// Rotated coordinates of one component: with v = D^T Sigma^{-1/2} z ~ N(d, I),
///   c = 1/2 sum_{j<h} lambda_j (v_j + b_j/lambda_j)^2 + sum_{j>=h} b_j v_j + c.
struct ComponentSpectrum {
  Vector lambda;  // eigenvalues of Sigma^{1/2} A Sigma^{1/2}, |.| descending
  Matrix D;       // matching eigenvectors
  Vector b;       // D^T Sigma^{1/2} a
  Vector d;       // D^T Sigma^{-1/2} mu
  Vector delta;   // d_j + b_j / lambda_j, first h entries only
  double c = 0.0;
  std::size_t h = 0;

  /// Mean and variance rebuilt from the rotated representation.
  double mean() const;
  double variance() const;
};

struct SpectralData {
  Vector weights;
  std::vector<ComponentSpectrum> components;
  double zero_tol = 1e-10;
};

/// |lambda| <= zero_tol * max|lambda| counts as zero. Singular covariances are
/// rejected with a domain error naming the component.
SpectralData spectral_decompose(const QuadraticForm& q, const GaussianMixture& mix, double zero_tol = 1e-10);

/// Univariate Gaussian mixture; zero variances are point masses.
class UnivariateGaussianMixture {
 public:
  UnivariateGaussianMixture() = default;
  UnivariateGaussianMixture(Vector weights, Vector means, Vector variances);

  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const Vector& weights() const { return weights_; }
  const Vector& means() const { return means_; }
  const Vector& variances() const { return variances_; }

  double mean() const;
  double variance() const;
  double cdf(double z) const;
  /// Density of the continuous part (atoms contribute nothing).
  double pdf(double z) const;
  /// Smallest z with cdf(z) >= p, to |cdf - p| <= 1e-10 away from atoms.
  double quantile(double p) const;

 private:
  Vector weights_, means_, variances_;
};

/// Component i: weight pi_i, mean and variance of c under N(mu_i, Sigma_i).
UnivariateGaussianMixture asymptotic_distribution(const QuadraticForm& q, const GaussianMixture& mix);

double asymptotic_cdf(const UnivariateGaussianMixture& u, double z);
double asymptotic_quantile(const UnivariateGaussianMixture& u, double p);

struct AsymptoticConditionComponent {
  std::size_t h = 0;
  double min_abs_lambda = 0.0;  // over the first h eigenvalues
  double max_abs_lambda = 0.0;
  double ratio = 0.0;           // |lambda_1| / |lambda_h|
  double stat3 = 0.0;           // |sum (1/k + delta^2) lambda^k|^{1/k} / (sum (1/2 + delta^2) lambda^2)^{1/2}
  double stat4 = 0.0;
  bool small_rank = false;
  bool large_ratio = false;
};

struct AsymptoticConditionReport {
  std::vector<AsymptoticConditionComponent> components;
  std::size_t rank_threshold = 10;
  double ratio_threshold = 100.0;
  bool any_flagged = false;
};

/// Finite-dimension report on the rank and spectral-spread conditions behind
/// the asymptotic law. Heuristic; no verdict is implied.
AsymptoticConditionReport check_asymptotic_conditions(const SpectralData& s, std::size_t rank_threshold = 10,
                                                      double ratio_threshold = 100.0);

}  // namespace qccp
