#include "qccp/diagnostics.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace qccp {

namespace {

constexpr Complex kI(0.0, 1.0);

// log of (1 - i g t)^{-1/2} exp(i g t delta^2/2 / (1 - i g t)); the principal
// log of 1 - i g t never crosses the cut since its real part is 1.
Complex log_term(double g, double t, double delta2) {
  const Complex w(1.0, -g * t);
  return -0.5 * std::log(w) + (kI * g * t * delta2 * 0.5) / w;
}

}  // namespace

ChiSqSumSpec::ChiSqSumSpec(Vector w, Vector alpha) : weights(std::move(w)), means(std::move(alpha)) {
  if (weights.size() == 0) throw_input("chi-square sum: needs at least one term");
  if (means.size() != weights.size()) throw_input("chi-square sum: weights and means differ in length");
  if (!weights.allFinite() || !means.allFinite()) throw_input("chi-square sum: non-finite parameters");
  if ((weights.array() == 0.0).any()) throw_input("chi-square sum: weights must be nonzero");
}

double ChiSqSumSpec::mean() const { return (weights.array() * (1.0 + means.array().square())).sum(); }

double ChiSqSumSpec::variance() const {
  return (weights.array().square() * (2.0 + 4.0 * means.array().square())).sum();
}

Complex cf_chisq_sum(const ChiSqSumSpec& spec, double t, bool standardized) {
  double scale = 1.0, shift = 0.0;
  if (standardized) {
    scale = 1.0 / std::sqrt(spec.variance());
    shift = spec.mean() * scale;
  }
  // each term w z^2 = 1/2 (2w) z^2
  Complex acc(0.0, -shift * t);
  for (Eigen::Index j = 0; j < spec.weights.size(); ++j) {
    acc += log_term(2.0 * spec.weights[j] * scale, t, spec.means[j] * spec.means[j]);
  }
  return std::exp(acc);
}

QuadraticCF::QuadraticCF(const QuadraticForm& q, const GaussianMixture& mix) : spec_(spectral_decompose(q, mix)) {
  const MixtureMoments mm = mixture_moments(q, mix);
  mean_ = mm.mean;
  sd_ = std::sqrt(mm.variance);
  if (!(sd_ > 0.0)) throw_domain("characteristic function: c has zero variance");
  const auto K = static_cast<Eigen::Index>(spec_.components.size());
  linear_mean_.resize(K);
  linear_var_.resize(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const auto& cs = spec_.components[static_cast<std::size_t>(i)];
    const auto h = static_cast<Eigen::Index>(cs.h);
    const Eigen::Index rest = cs.lambda.size() - h;
    linear_mean_[i] = cs.c + cs.b.tail(rest).dot(cs.d.tail(rest));
    linear_var_[i] = cs.b.tail(rest).squaredNorm();
  }
}

Complex QuadraticCF::operator()(double t) const {
  const double s = t / sd_;
  Complex total(0.0, 0.0);
  for (std::size_t i = 0; i < spec_.components.size(); ++i) {
    const auto& cs = spec_.components[i];
    const auto k = static_cast<Eigen::Index>(i);
    Complex acc = kI * s * (linear_mean_[k] - mean_) - 0.5 * s * s * linear_var_[k];
    for (std::size_t j = 0; j < cs.h; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      acc += log_term(cs.lambda[jj] / sd_, t, cs.delta[jj] * cs.delta[jj]);
    }
    total += spec_.weights[k] * std::exp(acc);
  }
  return total;
}

Complex cf_quadratic_exact(const QuadraticForm& q, const GaussianMixture& mix, double t) {
  return QuadraticCF(q, mix)(t);
}

Complex cf_univariate_gmm(const UnivariateGaussianMixture& u, double t) {
  const double mean = u.mean();
  const double var = u.variance();
  if (!(var > 0.0)) throw_domain("characteristic function: mixture has zero variance");
  const double sd = std::sqrt(var);
  Complex total(0.0, 0.0);
  for (Eigen::Index i = 0; i < u.weights().size(); ++i) {
    const double m = (u.means()[i] - mean) / sd;
    const double v = u.variances()[i] / var;
    total += u.weights()[i] * std::exp(Complex(-0.5 * v * t * t, m * t));
  }
  return total;
}

std::vector<double> default_t_grid() {
  std::vector<double> grid(201);
  for (int k = 0; k < 201; ++k) grid[static_cast<std::size_t>(k)] = -5.0 + 0.05 * k;
  return grid;
}

double cf_sup_error(const QuadraticForm& q, const GaussianMixture& mix, const std::vector<double>& grid) {
  const QuadraticCF exact(q, mix);
  const UnivariateGaussianMixture u = asymptotic_distribution(q, mix);
  double worst = 0.0;
  for (double t : grid) worst = std::max(worst, std::abs(exact(t) - cf_univariate_gmm(u, t)));
  return worst;
}

double cf_sup_error(const QuadraticForm& q, const GaussianMixture& mix) {
  return cf_sup_error(q, mix, default_t_grid());
}

double chisq_cf_sup_error(const ChiSqSumSpec& spec, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double t : grid) worst = std::max(worst, std::abs(cf_chisq_sum(spec, t, true) - std::exp(-0.5 * t * t)));
  return worst;
}

RateBoundReport rate_bound(const ChiSqSumSpec& spec) {
  const std::size_t h = spec.size();
  if (h == 0) throw_input("rate_bound: empty weight vector");
  if ((spec.weights.array() == 0.0).any()) throw_input("rate_bound: weights must be nonzero");
  RateBoundReport rep;
  rep.permutation.resize(h);
  std::iota(rep.permutation.begin(), rep.permutation.end(), std::size_t{0});
  std::stable_sort(rep.permutation.begin(), rep.permutation.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(spec.weights[static_cast<Eigen::Index>(x)]) > std::abs(spec.weights[static_cast<Eigen::Index>(y)]);
  });
  const double hd = static_cast<double>(h);
  const Vector a2 = spec.means.array().square();
  rep.alpha_bar = 0.5 + a2.sum() / hd;
  rep.ratio = std::abs(spec.weights[static_cast<Eigen::Index>(rep.permutation.front())]) /
              std::abs(spec.weights[static_cast<Eigen::Index>(rep.permutation.back())]);
  rep.bound_value = std::pow(rep.ratio, 3) / std::sqrt(rep.alpha_bar) / std::sqrt(hd);
  rep.premise_value = rep.ratio * std::pow(rep.alpha_bar, -1.0 / 6.0) * std::pow(hd, -1.0 / 6.0);
  const double denom = std::sqrt(((a2.array() + 0.5) * spec.weights.array().square()).sum());
  auto f = [&](int k) {
    const double num = ((a2.array() + 1.0 / k) * spec.weights.array().pow(k)).sum();
    return std::pow(std::abs(num), 1.0 / k) / denom;
  };
  rep.f3 = f(3);
  rep.f4 = f(4);
  rep.non_convergent = rep.premise_value > 1.0;
  return rep;
}

ConditionBoundCheck check_condition_bound(const SymMatrix& A, const SymMatrix& sigma) {
  if (A.dim() != sigma.dim()) throw_input("check_condition_bound: dimension mismatch");
  const EigenDecomposition ea = sym_eigen(A);
  const double amin = std::abs(ea.values[ea.values.size() - 1]);
  if (!(amin > 0.0)) throw_domain("check_condition_bound: A is singular");
  const double cs = condition_number(sigma);
  if (!std::isfinite(cs)) throw_domain("check_condition_bound: Sigma is singular");
  const Matrix S = sym_sqrt(sigma).mat();
  const EigenDecomposition es = sym_eigen(SymMatrix(S * A.mat() * S));
  ConditionBoundCheck out;
  out.lhs = std::abs(es.values[0] / es.values[es.values.size() - 1]);
  out.rhs = std::abs(ea.values[0]) / amin * cs;
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-10);
  return out;
}

Vector sample_chisq_sum(const ChiSqSumSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw_input("sample_chisq_sum: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < spec.weights.size(); ++j) {
      const double g = normal(rng) + spec.means[j];
      z += spec.weights[j] * g * g;
    }
    out[static_cast<Eigen::Index>(s)] = z;
  }
  return out;
}

}  // namespace qccp
