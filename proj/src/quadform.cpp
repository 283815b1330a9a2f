#include "qccp/quadform.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qccp {

QuadraticForm::QuadraticForm(SymMatrix A_, Vector a_, double a0_) : A(std::move(A_)), a(std::move(a_)), a0(a0_) {
  if (A.dim() != dim()) throw_input("QuadraticForm: A is " + std::to_string(A.dim()) + "x" +
                                    std::to_string(A.dim()) + " but a has length " + std::to_string(dim()));
  if (!a.allFinite() || !std::isfinite(a0)) throw_input("QuadraticForm: non-finite coefficients");
}

double QuadraticForm::operator()(const Vector& z) const { return 0.5 * z.dot(A.mat() * z) + a.dot(z) + a0; }

namespace {

void check_dims(const QuadraticForm& q, std::size_t m) {
  if (q.dim() != m) {
    throw_input("quadratic form has dimension " + std::to_string(q.dim()) + ", distribution has " +
                std::to_string(m));
  }
}

}  // namespace

ComponentMoments component_moments(const QuadraticForm& q, const Vector& mu, const SymMatrix& sigma) {
  check_dims(q, static_cast<std::size_t>(mu.size()));
  check_dims(q, sigma.dim());
  const Matrix& A = q.A.mat();
  const Matrix& S = sigma.mat();
  const Matrix AS = A * S;
  const Vector g = A * mu + q.a;
  ComponentMoments out;
  out.mean = 0.5 * AS.trace() + 0.5 * mu.dot(A * mu) + q.a.dot(mu) + q.a0;
  // tr((A S)^2) = sum_ij (AS)_ij (AS)_ji
  out.variance = 0.5 * (AS.array() * AS.transpose().array()).sum() + g.dot(S * g);
  out.variance = std::max(out.variance, 0.0);
  return out;
}

MixtureMoments mixture_moments(const QuadraticForm& q, const GaussianMixture& mix) {
  const UnivariateGaussianMixture u = asymptotic_distribution(q, mix);
  return {u.mean(), u.variance()};
}

double ComponentSpectrum::mean() const {
  double total = c + 0.5 * lambda.sum();
  for (std::size_t j = 0; j < static_cast<std::size_t>(lambda.size()); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    total += j < h ? 0.5 * lambda[k] * delta[k] * delta[k] : b[k] * d[k];
  }
  return total;
}

double ComponentSpectrum::variance() const {
  double total = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(lambda.size()); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    total += j < h ? (0.5 + delta[k] * delta[k]) * lambda[k] * lambda[k] : b[k] * b[k];
  }
  return total;
}

SpectralData spectral_decompose(const QuadraticForm& q, const GaussianMixture& mix, double zero_tol) {
  check_dims(q, mix.dim());
  if (!(zero_tol >= 0.0)) throw_input("spectral_decompose: zero_tol must be >= 0");
  SpectralData out;
  out.weights = mix.weights();
  out.zero_tol = zero_tol;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const SymMatrix& sigma = mix[i].cov;
    if (!std::isfinite(condition_number(sigma))) {
      throw_domain("spectral_decompose: covariance of component " + std::to_string(i) + " is singular");
    }
    const Matrix S = sym_sqrt(sigma).mat();
    const Matrix Sinv = sym_inv_sqrt(sigma).mat();
    const EigenDecomposition e = sym_eigen(SymMatrix(S * q.A.mat() * S));
    ComponentSpectrum cs;
    cs.lambda = e.values;
    cs.D = e.vectors;
    cs.b = e.vectors.transpose() * (S * q.a);
    cs.d = e.vectors.transpose() * (Sinv * mix[i].mean);
    const double top = cs.lambda.size() ? std::abs(cs.lambda[0]) : 0.0;
    cs.h = 0;
    while (cs.h < static_cast<std::size_t>(cs.lambda.size()) &&
           std::abs(cs.lambda[static_cast<Eigen::Index>(cs.h)]) > zero_tol * top && top > 0.0) {
      ++cs.h;
    }
    const auto h = static_cast<Eigen::Index>(cs.h);
    // zero out the numerically-null part so the identities hold exactly
    cs.lambda.tail(cs.lambda.size() - h).setZero();
    cs.delta = cs.d.head(h).array() + cs.b.head(h).array() / cs.lambda.head(h).array();
    cs.c = q.a0 - 0.5 * (cs.b.head(h).array().square() / cs.lambda.head(h).array()).sum();
    out.components.push_back(std::move(cs));
  }
  return out;
}

UnivariateGaussianMixture::UnivariateGaussianMixture(Vector weights, Vector means, Vector variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.size() == 0) throw_input("univariate mixture: needs at least one component");
  if (means_.size() != weights_.size() || variances_.size() != weights_.size()) {
    throw_input("univariate mixture: weight/mean/variance lengths differ");
  }
  if (!(weights_.array() >= 0.0).all() || !weights_.allFinite()) throw_input("univariate mixture: bad weights");
  if (!means_.allFinite() || !variances_.allFinite() || (variances_.array() < 0.0).any()) {
    throw_input("univariate mixture: bad means or variances");
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-8) throw_input("univariate mixture: weights must sum to 1");
  weights_ /= total;
}

double UnivariateGaussianMixture::mean() const { return weights_.dot(means_); }

double UnivariateGaussianMixture::variance() const {
  // within-component part plus sum_{i<j} pi_i pi_j (m_i - m_j)^2
  double v = weights_.dot(variances_);
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    for (Eigen::Index j = i + 1; j < weights_.size(); ++j) {
      const double diff = means_[i] - means_[j];
      v += weights_[i] * weights_[j] * diff * diff;
    }
  }
  return v;
}

double UnivariateGaussianMixture::cdf(double z) const {
  double p = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (variances_[i] > 0.0) {
      p += weights_[i] * std_normal_cdf((z - means_[i]) / std::sqrt(variances_[i]));
    } else if (z >= means_[i]) {
      p += weights_[i];
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

double UnivariateGaussianMixture::pdf(double z) const {
  double f = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (variances_[i] > 0.0) {
      const double s = std::sqrt(variances_[i]);
      f += weights_[i] * std_normal_pdf((z - means_[i]) / s) / s;
    }
  }
  return f;
}

double UnivariateGaussianMixture::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw_domain("quantile: p must lie in (0,1)");
  double lo = kInf, hi = -kInf;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    const double s = std::sqrt(variances_[i]);
    lo = std::min(lo, means_[i] - 10.0 * s);
    hi = std::max(hi, means_[i] + 10.0 * s);
  }
  if (cdf(lo) >= p) {
    // only possible when an atom sits at the lower end
    return lo;
  }
  double flo = cdf(lo) - p;
  double fhi = cdf(hi) - p;
  while (fhi < 0.0) {
    // tails beyond 10 sigma hold up to ~1e-23 mass; widen for extreme p
    const double w = hi - lo;
    hi += std::max(w, 1.0);
    fhi = cdf(hi) - p;
  }
  while (flo >= 0.0) {
    lo -= std::max(hi - lo, 1.0);
    flo = cdf(lo) - p;
  }
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double f = cdf(z) - p;
    if (f == 0.0) return z;
    const double dens = pdf(z);
    // in the tails a tiny residual can still mean a large step, so converge on the step too
    if (std::abs(f) <= 1e-13 && dens > 0.0 && std::abs(f) <= 1e-12 * dens * std::max(1.0, std::abs(z))) {
      return z - f / dens;
    }
    if (f < 0.0) lo = z; else hi = z;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(z))) return hi;
    double next = dens > 0.0 ? z - f / dens : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    z = next;
  }
  return hi;
}

UnivariateGaussianMixture asymptotic_distribution(const QuadraticForm& q, const GaussianMixture& mix) {
  check_dims(q, mix.dim());
  const auto K = static_cast<Eigen::Index>(mix.size());
  Vector means(K), variances(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const ComponentMoments cm = component_moments(q, mix[static_cast<std::size_t>(i)].mean,
                                                  mix[static_cast<std::size_t>(i)].cov);
    means[i] = cm.mean;
    variances[i] = cm.variance;
  }
  return UnivariateGaussianMixture(mix.weights(), means, variances);
}

double asymptotic_cdf(const UnivariateGaussianMixture& u, double z) { return u.cdf(z); }
double asymptotic_quantile(const UnivariateGaussianMixture& u, double p) { return u.quantile(p); }

AsymptoticConditionReport check_asymptotic_conditions(const SpectralData& s, std::size_t rank_threshold,
                                                      double ratio_threshold) {
  AsymptoticConditionReport rep;
  rep.rank_threshold = rank_threshold;
  rep.ratio_threshold = ratio_threshold;
  for (const auto& cs : s.components) {
    AsymptoticConditionComponent out;
    out.h = cs.h;
    const auto h = static_cast<Eigen::Index>(cs.h);
    if (h > 0) {
      const Vector absl = cs.lambda.head(h).cwiseAbs();
      out.max_abs_lambda = absl.maxCoeff();
      out.min_abs_lambda = absl.minCoeff();
      out.ratio = out.max_abs_lambda / out.min_abs_lambda;
      const Vector d2 = cs.delta.array().square();
      const double denom = std::sqrt(((0.5 + d2.array()) * cs.lambda.head(h).array().square()).sum());
      auto stat = [&](int k) {
        const double num = ((1.0 / k + d2.array()) * cs.lambda.head(h).array().pow(k)).sum();
        return std::pow(std::abs(num), 1.0 / k) / denom;
      };
      out.stat3 = stat(3);
      out.stat4 = stat(4);
    } else {
      out.ratio = kInf;
      out.stat3 = out.stat4 = kInf;
    }
    out.small_rank = out.h < rank_threshold;
    out.large_ratio = out.ratio > ratio_threshold;
    rep.any_flagged = rep.any_flagged || out.small_rank || out.large_ratio;
    rep.components.push_back(out);
  }
  return rep;
}

}  // namespace qccp
