#include "oracles.hpp"
#include "qccp/error.hpp"
#include "qccp/quadform.hpp"

#include <doctest.h>

using namespace qccp;

namespace {

struct Instance {
  QuadraticForm q;
  GaussianMixture mix;
  std::vector<oracle::Comp> comps;
};

Instance random_instance(int m, int K, std::mt19937_64& rng, bool quadratic = true) {
  Instance in;
  std::vector<GaussianComponent> comps;
  Vector w = oracle::random_vec(K, rng, 0.2, 1.0);
  w /= w.sum();
  for (int i = 0; i < K; ++i) {
    const Matrix S = oracle::random_spd(m, rng, 0.2);
    const Vector mu = oracle::random_vec(m, rng, -2, 2);
    comps.push_back({w[i], mu, SymMatrix(S)});
    in.comps.push_back({w[i], mu, S});
  }
  in.mix = GaussianMixture(comps);
  in.q = QuadraticForm(quadratic ? SymMatrix(oracle::random_sym(m, rng)) : SymMatrix::zero(m),
                       oracle::random_vec(m, rng), oracle::random_vec(1, rng)[0]);
  return in;
}

// Eigenvalue-uniform(0,1) covariances with a random orthogonal basis.
GaussianMixture uniform_spectrum_mixture(int m, int K, bool means, std::mt19937_64& rng) {
  std::vector<GaussianComponent> comps;
  Vector w = oracle::random_vec(K, rng, 0, 1);
  w /= w.sum();
  std::normal_distribution<double> g;
  for (int i = 0; i < K; ++i) {
    Matrix G(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) G(a, b) = g(rng);
    const Matrix D = Eigen::HouseholderQR<Matrix>(G).householderQ();
    const Vector lam = oracle::random_vec(m, rng, 0, 1);
    comps.push_back({w[i], means ? oracle::random_vec(m, rng, 0, 10) : Vector::Zero(m),
                     SymMatrix(D * lam.asDiagonal() * D.transpose())});
  }
  return GaussianMixture(comps);
}

}  // namespace

TEST_CASE("quadratic form validation and evaluation") {
  CHECK_THROWS_AS(QuadraticForm(SymMatrix::identity(2), Vector::Zero(3), 0.0), Error);
  CHECK_THROWS_AS(QuadraticForm(SymMatrix::identity(2), Vector::Zero(2), std::nan("")), Error);
  const QuadraticForm q(SymMatrix::identity(2), (Vector(2) << 1.0, 0.0).finished(), 3.0);
  CHECK(q((Vector(2) << 2.0, 1.0).finished()) == doctest::Approx(0.5 * 5 + 2 + 3));
}

TEST_CASE("component moments closed forms") {
  const auto m1 = component_moments(QuadraticForm(SymMatrix::identity(4), Vector::Zero(4), 0.0), Vector::Zero(4),
                                    SymMatrix::identity(4));
  CHECK(m1.mean == doctest::Approx(2.0));
  CHECK(m1.variance == doctest::Approx(2.0));
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  const auto m2 = component_moments(QuadraticForm(SymMatrix::zero(3), e1, 0.0), Vector::Zero(3), SymMatrix::identity(3));
  CHECK(m2.mean == doctest::Approx(0.0));
  CHECK(m2.variance == doctest::Approx(1.0));
}

TEST_CASE("component moments agree with Monte Carlo") {
  std::mt19937_64 rng(101);
  const Instance in = random_instance(3, 1, rng);
  oracle::Sampler s(in.comps, 7);
  const auto mc = oracle::mc_quadratic_moments(s, in.q.A.mat(), in.q.a, in.q.a0, 10000000);
  const auto ex = component_moments(in.q, in.mix[0].mean, in.mix[0].cov);
  CHECK(std::abs(ex.mean - mc.mean) <= 4.0 * mc.se_mean);
  CHECK(std::abs(ex.variance - mc.variance) <= 4.0 * mc.se_variance);
}

TEST_CASE("mixture moments") {
  std::mt19937_64 rng(5);
  SUBCASE("identical components collapse") {
    const Matrix S = oracle::random_spd(3, rng);
    const Vector mu = oracle::random_vec(3, rng);
    const GaussianMixture twin({{0.4, mu, SymMatrix(S)}, {0.6, mu, SymMatrix(S)}});
    const QuadraticForm q(SymMatrix(oracle::random_sym(3, rng)), oracle::random_vec(3, rng), 0.3);
    const auto mm = mixture_moments(q, twin);
    const auto cm = component_moments(q, mu, SymMatrix(S));
    CHECK(mm.mean == doctest::Approx(cm.mean).epsilon(1e-12));
    CHECK(mm.variance == doctest::Approx(cm.variance).epsilon(1e-12));
  }
  SUBCASE("constant form") {
    const Instance in = random_instance(3, 2, rng);
    const auto mm = mixture_moments(QuadraticForm(SymMatrix::zero(3), Vector::Zero(3), 5.0), in.mix);
    CHECK(mm.mean == 5.0);
    CHECK(mm.variance == 0.0);
  }
  SUBCASE("Monte Carlo oracle") {
    const Instance in = random_instance(4, 3, rng);
    oracle::Sampler s(in.comps, 19);
    const auto mc = oracle::mc_quadratic_moments(s, in.q.A.mat(), in.q.a, in.q.a0, 10000000);
    const auto mm = mixture_moments(in.q, in.mix);
    CHECK(std::abs(mm.mean - mc.mean) <= 4.0 * mc.se_mean);
    CHECK(std::abs(mm.variance - mc.variance) <= 4.0 * mc.se_variance);
  }
}

TEST_CASE("moment composition properties") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const Instance in = random_instance(1 + trial % 6, 1 + trial % 3, rng);
    const auto mm = mixture_moments(in.q, in.mix);
    const auto u = asymptotic_distribution(in.q, in.mix);
    double within = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < in.mix.size(); ++i) {
      const auto cm = component_moments(in.q, in.mix[i].mean, in.mix[i].cov);
      CHECK(u.means()[i] == doctest::Approx(cm.mean).epsilon(1e-12));
      within += in.mix[i].weight * cm.variance;
      mean += in.mix[i].weight * cm.mean;
    }
    double between = 0.0;
    for (Eigen::Index i = 0; i < u.weights().size(); ++i) between += u.weights()[i] * std::pow(u.means()[i] - mean, 2);
    CHECK(mm.mean == doctest::Approx(u.mean()).epsilon(1e-12));
    CHECK(mm.variance == doctest::Approx(u.variance()).epsilon(1e-12));
    CHECK(mm.variance == doctest::Approx(within + between).epsilon(1e-10));
    CHECK(mm.variance >= within * (1 - 1e-12));
  }
}

TEST_CASE("spectral decomposition simple cases") {
  const GaussianMixture stdn({{1.0, Vector::Zero(3), SymMatrix::identity(3)}});
  const auto s = spectral_decompose(QuadraticForm(SymMatrix::identity(3), Vector::Zero(3), 1.5), stdn);
  const auto& c = s.components[0];
  CHECK(c.h == 3);
  CHECK((c.lambda - Vector::Ones(3)).norm() < 1e-12);
  CHECK(c.b.norm() < 1e-12);
  CHECK(c.d.norm() < 1e-12);
  CHECK(c.delta.norm() < 1e-12);
  CHECK(c.c == doctest::Approx(1.5));

  const GaussianMixture two({{1.0, Vector::Zero(2), SymMatrix::identity(2)}});
  const auto r = spectral_decompose(QuadraticForm(SymMatrix::diagonal((Vector(2) << 1.0, 0.0).finished()), Vector::Ones(2), 0.0), two);
  CHECK(r.components[0].h == 1);
}

TEST_CASE("spectral identities on random instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 7;
    Instance in = random_instance(m, 1 + trial % 3, rng);
    if (trial % 5 == 0) {
      Matrix A = in.q.A.mat();
      A.row(0).setZero();
      A.col(0).setZero();
      in.q = QuadraticForm(SymMatrix(A), in.q.a, in.q.a0);
    }
    const auto s = spectral_decompose(in.q, in.mix);
    for (std::size_t i = 0; i < in.mix.size(); ++i) {
      const auto& cs = s.components[i];
      const auto cm = component_moments(in.q, in.mix[i].mean, in.mix[i].cov);
      CHECK(std::abs(cs.mean() - cm.mean) <= 1e-8 * std::max(1.0, std::abs(cm.mean)));
      CHECK(std::abs(cs.variance() - cm.variance) <= 1e-8 * std::max(1.0, cm.variance));
      const Matrix root = sym_sqrt(in.mix[i].cov).mat();
      const Matrix target = root * in.q.A.mat() * root;
      CHECK(relative_frobenius(cs.D * cs.lambda.asDiagonal() * cs.D.transpose(), target) <= 1e-8 + (target.norm() == 0));
      const double lam_max = cs.lambda.cwiseAbs().maxCoeff();
      for (Eigen::Index j = 0; j < cs.lambda.size(); ++j) {
        CHECK((std::abs(cs.lambda[j]) > 1e-10 * lam_max) == (static_cast<std::size_t>(j) < cs.h));
      }
      // Linear tail: sum_{j>=h} b_j^2 plus the quadratic part's variance equals sigma^2.
      const auto h = static_cast<Eigen::Index>(cs.h);
      double quad_var = 0.0;
      for (Eigen::Index j = 0; j < h; ++j) quad_var += cs.lambda[j] * cs.lambda[j] * (0.5 + cs.delta[j] * cs.delta[j]);
      const double tail = cs.b.tail(cs.b.size() - h).squaredNorm();
      CHECK(std::abs(quad_var + tail - cm.variance) <= 1e-8 * std::max(1.0, cm.variance));
    }
  }
}

TEST_CASE("spectral decomposition rejects singular covariance") {
  const GaussianMixture sing({{0.5, Vector::Zero(2), SymMatrix::identity(2)},
                              {0.5, Vector::Zero(2), SymMatrix::diagonal((Vector(2) << 1.0, 0.0).finished())}});
  try {
    (void)spectral_decompose(QuadraticForm(SymMatrix::identity(2), Vector::Zero(2), 0.0), sing);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("asymptotic law: linear case is exact") {
  std::mt19937_64 rng(9);
  const Instance in = random_instance(3, 2, rng, false);
  const auto u = asymptotic_distribution(in.q, in.mix);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(u.means()[i] == doctest::Approx(in.q.a.dot(in.mix[i].mean) + in.q.a0));
    CHECK(u.variances()[i] == doctest::Approx(in.q.a.dot(in.mix[i].cov.mat() * in.q.a)));
  }
  oracle::Sampler s(in.comps, 3);
  Matrix z(20000, 3);
  s.draw(z);
  std::vector<double> c;
  for (Eigen::Index k = 0; k < z.rows(); ++k) c.push_back(in.q(z.row(k).transpose()));
  CHECK(oracle::ks_to_cdf(c, [&](double t) { return u.cdf(t); }) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("asymptotic law: single component is one Gaussian") {
  std::mt19937_64 rng(10);
  const Instance in = random_instance(4, 1, rng);
  const auto u = asymptotic_distribution(in.q, in.mix);
  const auto cm = component_moments(in.q, in.mix[0].mean, in.mix[0].cov);
  CHECK(u.size() == 1);
  CHECK(u.means()[0] == doctest::Approx(cm.mean));
  CHECK(u.variances()[0] == doctest::Approx(cm.variance));
  CHECK(asymptotic_cdf(u, cm.mean) == doctest::Approx(0.5));
}

TEST_CASE("asymptotic law matches simulation at m = 100") {
  std::mt19937_64 rng(42);
  const GaussianMixture mix = uniform_spectrum_mixture(100, 3, true, rng);
  const QuadraticForm q(SymMatrix::identity(100), Vector::Zero(100), 0.0);
  const auto u = asymptotic_distribution(q, mix);
  std::vector<oracle::Comp> comps;
  for (const auto& c : mix.components()) comps.push_back({c.weight, c.mean, c.cov.mat()});
  oracle::Sampler s(comps, 17);
  Matrix z(20000, 100);
  s.draw(z);
  std::vector<double> c;
  for (Eigen::Index k = 0; k < z.rows(); ++k) c.push_back(0.5 * z.row(k).squaredNorm());
  CHECK(oracle::ks_to_cdf(c, [&](double t) { return u.cdf(t); }) <= 0.02);
}

TEST_CASE("univariate mixture cdf and quantile") {
  const UnivariateGaussianMixture n01(Vector::Ones(1), Vector::Zero(1), Vector::Ones(1));
  CHECK(asymptotic_cdf(n01, 0.0) == doctest::Approx(0.5));
  CHECK(asymptotic_quantile(n01, 0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  const UnivariateGaussianMixture sym(Vector::Constant(2, 0.5), (Vector(2) << -1.0, 1.0).finished(), Vector::Ones(2));
  CHECK(sym.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(sym.pdf(0.3) - sym.pdf(-0.3)) < 1e-15);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    Vector w = oracle::random_vec(3, rng, 0.1, 1);
    w /= w.sum();
    const UnivariateGaussianMixture u(w, oracle::random_vec(3, rng, -5, 5), oracle::random_vec(3, rng, 0.01, 4));
    for (double z : {-6.0, -1.0, 0.0, 0.7, 3.0}) {
      const double p = u.cdf(z);
      if (p > 1e-9 && p < 1 - 1e-9) CHECK(std::abs(u.quantile(p) - z) <= 1e-8);
    }
  }
  CHECK_THROWS_AS(n01.quantile(0.0), Error);
  CHECK_THROWS_AS(n01.quantile(1.0), Error);
  CHECK_THROWS_AS(UnivariateGaussianMixture(Vector::Ones(2), Vector::Zero(2), Vector::Ones(2)), Error);
  CHECK_THROWS_AS(UnivariateGaussianMixture(Vector::Ones(1), Vector::Zero(1), -Vector::Ones(1)), Error);
  const UnivariateGaussianMixture atom(Vector::Ones(1), Vector::Constant(1, 2.0), Vector::Zero(1));
  CHECK(atom.cdf(1.999) == 0.0);
  CHECK(atom.cdf(2.0) == 1.0);
}

TEST_CASE("asymptotic condition report") {
  const GaussianMixture stdn({{1.0, Vector::Zero(12), SymMatrix::identity(12)}});
  const auto r = check_asymptotic_conditions(
      spectral_decompose(QuadraticForm(SymMatrix::identity(12), Vector::Zero(12), 0.0), stdn));
  CHECK(r.components[0].ratio == doctest::Approx(1.0));
  CHECK_FALSE(r.any_flagged);

  Vector geo(11);
  for (int j = 0; j < 11; ++j) geo[j] = std::pow(2.0, -j);
  const GaussianMixture g11({{1.0, Vector::Zero(11), SymMatrix::identity(11)}});
  const auto f = check_asymptotic_conditions(spectral_decompose(QuadraticForm(SymMatrix::diagonal(geo), Vector::Zero(11), 0.0), g11));
  CHECK(f.components[0].large_ratio);
  CHECK(f.any_flagged);

  const GaussianMixture small({{1.0, Vector::Zero(3), SymMatrix::identity(3)}});
  const auto s = check_asymptotic_conditions(spectral_decompose(QuadraticForm(SymMatrix::identity(3), Vector::Zero(3), 0.0), small));
  CHECK(s.components[0].small_rank);

  std::mt19937_64 rng(3);
  double prev = kInf;
  for (int m : {20, 40, 80}) {
    const GaussianMixture mix = uniform_spectrum_mixture(m, 1, false, rng);
    Matrix A = oracle::random_spd(m, rng, 0.5);
    const auto rep = check_asymptotic_conditions(spectral_decompose(QuadraticForm(SymMatrix(A), Vector::Zero(m), 0.0), mix));
    CHECK(rep.components[0].stat3 < prev);
    prev = rep.components[0].stat3;
  }
}
