#include "qccp/gmm.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace qccp {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

double log_sum_exp(const Vector& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

struct Degenerate {
  std::string reason;
};

struct EmState {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
};

GaussianMixture to_mixture(const EmState& s) {
  std::vector<GaussianComponent> comps;
  comps.reserve(s.means.size());
  for (std::size_t k = 0; k < s.means.size(); ++k) {
    comps.push_back({s.weights[static_cast<Eigen::Index>(k)], s.means[k], SymMatrix(s.covs[k])});
  }
  return GaussianMixture(std::move(comps));
}

Matrix regularize(const Matrix& cov, double q) {
  const Eigen::Index m = cov.rows();
  const double floor = 1e-10 * cov.trace() / static_cast<double>(m);
  Matrix c = 0.5 * (cov + cov.transpose());
  c.diagonal().array() += floor;
  if (std::isfinite(q)) c = clip_condition_number(SymMatrix(c), q).mat();
  return c;
}

// Log-likelihood and responsibilities (n x K) for the current parameters.
double e_step(const Matrix& x, const EmState& s, Matrix& resp) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  const Eigen::Index K = s.weights.size();
  resp.resize(n, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::LLT<Matrix> llt(s.covs[static_cast<std::size_t>(k)]);
    if (llt.info() != Eigen::Success) throw Degenerate{"singular covariance"};
    const Matrix& L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    Matrix centered = (x.rowwise() - s.means[static_cast<std::size_t>(k)].transpose()).transpose();
    llt.matrixL().solveInPlace(centered);
    const Vector quad = centered.colwise().squaredNorm().transpose();
    resp.col(k) = (-0.5 * quad.array()) + (std::log(s.weights[k]) - 0.5 * logdet -
                                           0.5 * static_cast<double>(m) * kLog2Pi);
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = resp.row(i).transpose();
    const double lse = log_sum_exp(row);
    ll += lse;
    resp.row(i) = (row.array() - lse).exp().transpose();
  }
  if (!std::isfinite(ll)) throw Degenerate{"non-finite log-likelihood"};
  return ll;
}

// A component holding less than one sample of responsibility mass is re-seeded by
// splitting the heaviest component along its leading eigenvector.
EmState m_step(const Matrix& x, const Matrix& resp, double q, int& reseeded) {
  const Eigen::Index K = resp.cols();
  EmState s;
  s.weights.resize(K);
  s.means.resize(static_cast<std::size_t>(K));
  s.covs.resize(static_cast<std::size_t>(K));
  Vector mass = resp.colwise().sum().transpose();
  std::vector<Eigen::Index> vanished;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!std::isfinite(mass[k])) throw Degenerate{"non-finite responsibility mass"};
    if (!(mass[k] >= 1.0)) {
      vanished.push_back(k);
      continue;
    }
    const auto uk = static_cast<std::size_t>(k);
    s.means[uk] = (x.transpose() * resp.col(k)) / mass[k];
    const Matrix centered = x.rowwise() - s.means[uk].transpose();
    const Matrix weighted = centered.array().colwise() * resp.col(k).array();
    Matrix cov = (weighted.transpose() * centered) / mass[k];
    if (!(cov.trace() > 0.0)) throw Degenerate{"zero covariance"};
    s.covs[uk] = regularize(cov, q);
  }
  if (static_cast<Eigen::Index>(vanished.size()) == K) throw Degenerate{"component lost its responsibility mass"};
  for (Eigen::Index d : vanished) {
    Eigen::Index j = -1;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (mass[k] >= 1.0 && (j < 0 || mass[k] > mass[j])) j = k;
    }
    if (mass[j] < 2.0) throw Degenerate{"component lost its responsibility mass"};
    const auto uj = static_cast<std::size_t>(j), ud = static_cast<std::size_t>(d);
    const EigenDecomposition e = sym_eigen(SymMatrix(s.covs[uj]));
    const Vector shift = 0.5 * std::sqrt(std::max(e.values[0], 0.0)) * e.vectors.col(0);
    s.means[ud] = s.means[uj] + shift;
    s.means[uj] -= shift;
    s.covs[ud] = s.covs[uj];
    mass[j] *= 0.5;
    mass[d] = mass[j];
    ++reseeded;
  }
  s.weights = mass / mass.sum();
  return s;
}

// k-means++ seeding for the means, pooled covariance, equal weights.
EmState initialize(const Matrix& x, int K, double q, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  EmState s;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  s.means.push_back(x.row(pick(rng)).transpose());
  Vector d2 = (x.rowwise() - s.means[0].transpose()).rowwise().squaredNorm();
  while (static_cast<int>(s.means.size()) < K) {
    const double total = d2.sum();
    Eigen::Index chosen = pick(rng);
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    s.means.push_back(x.row(chosen).transpose());
    d2 = d2.cwiseMin((x.rowwise() - s.means.back().transpose()).rowwise().squaredNorm());
  }
  const Vector mu = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mu.transpose();
  const Matrix pooled = centered.transpose() * centered / static_cast<double>(n);
  if (!(pooled.trace() > 0.0)) throw Degenerate{"data has zero variance"};
  const Matrix cov = regularize(pooled, q);
  s.covs.assign(static_cast<std::size_t>(K), cov);
  s.weights = Vector::Constant(K, 1.0 / K);
  return s;
}

double max_condition(const EmState& s) {
  double worst = 1.0;
  for (const auto& c : s.covs) worst = std::max(worst, condition_number(SymMatrix(c)));
  return worst;
}

// A degenerate run is retried from a freshly seeded initialization.
constexpr int kAttemptsPerRestart = 5;

FitResult fit_impl(const Matrix& data, const FitConfig& cfg, double q) {
  const Eigen::Index n = data.rows();
  const Eigen::Index m = data.cols();
  if (cfg.components < 1) throw_input("fit: component count must be >= 1");
  if (cfg.max_iter < 1) throw_input("fit: max_iter must be >= 1");
  if (!(cfg.tol > 0.0)) throw_input("fit: tol must be > 0");
  if (cfg.n_restarts < 1) throw_input("fit: n_restarts must be >= 1");
  if (!(q >= 1.0)) throw_input("fit: condition-number bound must be >= 1");
  if (m < 1 || n <= static_cast<Eigen::Index>(cfg.components) * m) {
    throw_input("fit: need more than K*m samples (have " + std::to_string(n) + ")");
  }
  if (!data.allFinite()) throw_input("fit: data contains non-finite values");

  FitResult best;
  bool have_best = false;
  std::string last_reason;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    for (int attempt = 0; attempt < kAttemptsPerRestart; ++attempt) {
      std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(r),
                        static_cast<std::uint64_t>(attempt)};
      std::mt19937_64 rng(seq);
      try {
        EmState s = initialize(data, cfg.components, q, rng);
        Matrix resp;
        FitResult res;
        double ll = e_step(data, s, resp);
        res.ll_trace.push_back(ll);
        res.max_condition.push_back(max_condition(s));
        int it = 0;
        for (; it < cfg.max_iter; ++it) {
          EmState next = m_step(data, resp, q, res.reseeded);
          const double ll_next = e_step(data, next, resp);
          s = std::move(next);
          res.ll_trace.push_back(ll_next);
          if (std::isfinite(q)) res.max_condition.push_back(max_condition(s));
          const bool done = std::abs(ll_next - ll) <= cfg.tol * std::max(1.0, std::abs(ll_next));
          ll = ll_next;
          if (done) {
            ++it;
            break;
          }
        }
        res.mixture = to_mixture(s);
        res.log_likelihood = ll;
        res.iterations = it;
        res.restart = r;
        if (!have_best || res.log_likelihood > best.log_likelihood) {
          best = std::move(res);
          have_best = true;
        }
        break;
      } catch (const Degenerate& d) {
        last_reason = d.reason;
      }
    }
  }
  if (!have_best) throw Error(ErrorKind::Fit, "fit: every restart degenerated (" + last_reason + ")");
  const double K = cfg.components;
  const double md = static_cast<double>(m);
  const double params = (K - 1.0) + K * md + K * md * (md + 1.0) / 2.0;
  best.aic = 2.0 * params - 2.0 * best.log_likelihood;
  best.bic = params * std::log(static_cast<double>(n)) - 2.0 * best.log_likelihood;
  return best;
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw_input("GaussianMixture: needs at least one component");
  dim_ = static_cast<std::size_t>(components_[0].mean.size());
  if (dim_ == 0) throw_input("GaussianMixture: zero-dimensional component");
  double total = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const std::string tag = "GaussianMixture: component " + std::to_string(i);
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw_input(tag + " has non-positive weight");
    if (static_cast<std::size_t>(c.mean.size()) != dim_ || c.cov.dim() != dim_) {
      throw_input(tag + " has mismatched dimension");
    }
    if (!c.mean.allFinite()) throw_input(tag + " has non-finite mean");
    const EigenDecomposition e = sym_eigen_ascending(c.cov);
    const double lmax = std::max(e.values.maxCoeff(), 0.0);
    if (e.values.minCoeff() < -1e-10 * lmax) throw_domain(tag + " covariance is not PSD");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw_input("GaussianMixture: weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (auto& c : components_) c.weight /= total;
}

Vector GaussianMixture::weights() const {
  Vector w(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) w[static_cast<Eigen::Index>(i)] = components_[i].weight;
  return w;
}

Vector GaussianMixture::mean() const {
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& c : components_) mu += c.weight * c.mean;
  return mu;
}

MixtureDensity::MixtureDensity(const GaussianMixture& mix) {
  const double m = static_cast<double>(mix.dim());
  log_norm_.resize(static_cast<Eigen::Index>(mix.size()));
  for (std::size_t i = 0; i < mix.size(); ++i) {
    Eigen::LLT<Matrix> llt(mix[i].cov.mat());
    if (llt.info() != Eigen::Success) {
      throw_domain("mixture density: covariance of component " + std::to_string(i) + " is singular");
    }
    const Matrix& L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    log_norm_[static_cast<Eigen::Index>(i)] = std::log(mix[i].weight) - 0.5 * m * kLog2Pi - 0.5 * logdet;
    chol_.push_back(std::move(llt));
    means_.push_back(mix[i].mean);
  }
}

void MixtureDensity::component_log_terms(const Vector& z, Vector& out) const {
  out.resize(log_norm_.size());
  for (std::size_t i = 0; i < chol_.size(); ++i) {
    Vector r = z - means_[i];
    chol_[i].matrixL().solveInPlace(r);
    out[static_cast<Eigen::Index>(i)] = log_norm_[static_cast<Eigen::Index>(i)] - 0.5 * r.squaredNorm();
  }
}

double MixtureDensity::log_density(const Vector& z) const {
  if (!means_.empty() && z.size() != means_[0].size()) throw_input("mixture density: dimension mismatch");
  Vector terms;
  component_log_terms(z, terms);
  return log_sum_exp(terms);
}

double MixtureDensity::operator()(const Vector& z) const { return std::exp(log_density(z)); }

double mixture_density(const GaussianMixture& mix, const Vector& z) { return MixtureDensity(mix)(z); }

Matrix mixture_sample(const GaussianMixture& mix, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw_input("mixture_sample: n must be >= 1");
  const auto m = static_cast<Eigen::Index>(mix.dim());
  std::vector<Matrix> roots;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : mix.components()) {
    roots.push_back(sym_sqrt(c.cov).mat());
    acc += c.weight;
    cumulative.push_back(acc);
  }
  cumulative.back() = 1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(static_cast<Eigen::Index>(n), m);
  Vector g(m);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = unif(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), roots.size() - 1);
    for (Eigen::Index j = 0; j < m; ++j) g[j] = normal(rng);
    out.row(static_cast<Eigen::Index>(s)) = (mix[k].mean + roots[k] * g).transpose();
  }
  return out;
}

FitResult fit_em(const Matrix& data, const FitConfig& cfg) {
  if (cfg.cond_bound) throw_input("fit_em: use fit_em_condnum for a condition-number bound");
  return fit_impl(data, cfg, kInf);
}

FitResult fit_em_condnum(const Matrix& data, const FitConfig& cfg) {
  if (!cfg.cond_bound) throw_input("fit_em_condnum: cond_bound is required");
  return fit_impl(data, cfg, *cfg.cond_bound);
}

double mixture_log_likelihood(const GaussianMixture& mix, const Matrix& data) {
  const MixtureDensity dens(mix);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) ll += dens.log_density(data.row(i).transpose());
  return ll;
}

std::vector<std::size_t> match_components(const GaussianMixture& fitted, const GaussianMixture& reference) {
  const std::size_t K = fitted.size();
  if (reference.size() != K) throw_input("match_components: component counts differ");
  std::vector<std::size_t> match(K, K);
  std::vector<bool> used(K, false);
  for (std::size_t round = 0; round < K; ++round) {
    double best = kInf;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < K; ++i) {
      if (match[i] != K) continue;
      for (std::size_t j = 0; j < K; ++j) {
        if (used[j]) continue;
        const double d = (fitted[i].mean - reference[j].mean).squaredNorm();
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    match[bi] = bj;
    used[bj] = true;
  }
  return match;
}

}  // namespace qccp
