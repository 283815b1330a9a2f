#pragma once

#include "qccp/numerics.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qccp {

struct GaussianComponent {
  double weight = 0.0;
  Vector mean;
  SymMatrix cov;
};

/// Immutable K-component multivariate Gaussian mixture.
class GaussianMixture {
 public:
  GaussianMixture() = default;
  /// Validates weights (positive, sum to 1 within 1e-8, renormalized exactly),
  /// dimensions and covariance PSD-ness.
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const GaussianComponent& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  Vector weights() const;
  Vector mean() const;

 private:
  std::vector<GaussianComponent> components_;
  std::size_t dim_ = 0;
};

/// Caches per-component Cholesky factors for repeated density evaluation.
class MixtureDensity {
 public:
  explicit MixtureDensity(const GaussianMixture& mix);
  double operator()(const Vector& z) const;
  double log_density(const Vector& z) const;
  /// Per-component log(pi_i) + log N(z | mu_i, Sigma_i).
  void component_log_terms(const Vector& z, Vector& out) const;

 private:
  std::vector<Eigen::LLT<Matrix>> chol_;
  std::vector<Vector> means_;
  Vector log_norm_;  // log pi_i - m/2 log 2pi - 1/2 log det Sigma_i
};

double mixture_density(const GaussianMixture& mix, const Vector& z);

/// n x m matrix, one sample per row. Deterministic in seed.
Matrix mixture_sample(const GaussianMixture& mix, std::size_t n, std::uint64_t seed);

struct FitConfig {
  int components = 1;
  int max_iter = 500;
  double tol = 1e-8;                 // relative log-likelihood change
  std::optional<double> cond_bound;  // q >= 1; +inf leaves the fit unconstrained
  std::uint64_t seed = 0;
  int n_restarts = 3;
};

struct FitResult {
  GaussianMixture mixture;
  double log_likelihood = 0.0;
  int iterations = 0;
  int restart = 0;                   // index of the winning restart
  std::vector<double> ll_trace;      // winning restart, one entry per E-step
  std::vector<double> max_condition; // winning restart, max cond(Sigma_i) per M-step
  double aic = 0.0;
  double bic = 0.0;
  int reseeded = 0;                  // components re-seeded after losing their mass
};

/// Unconstrained EM; cfg.cond_bound must be empty.
FitResult fit_em(const Matrix& data, const FitConfig& cfg);
/// EM whose M-step covariances are projected onto cond(Sigma) <= q.
FitResult fit_em_condnum(const Matrix& data, const FitConfig& cfg);

double mixture_log_likelihood(const GaussianMixture& mix, const Matrix& data);

/// For each component of `fitted`, the index of the matched component of
/// `reference` (greedy nearest-mean assignment).
std::vector<std::size_t> match_components(const GaussianMixture& fitted, const GaussianMixture& reference);

}  // namespace qccp
