#include "oracles.hpp"
#include "qccp/diagnostics.hpp"
#include "qccp/error.hpp"
#include "qccp/stats.hpp"

#include <doctest.h>

using namespace qccp;

namespace {

ChiSqSumSpec equal_weights(Eigen::Index h, double alpha = 0.0) {
  return ChiSqSumSpec(Vector::Ones(h), Vector::Constant(h, alpha));
}

ChiSqSumSpec geometric(Eigen::Index h) {
  Vector w(h);
  for (Eigen::Index j = 0; j < h; ++j) w[j] = std::pow(2.0, -(j + 1.0));
  return ChiSqSumSpec(w, Vector::Zero(h));
}

std::vector<double> as_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

GaussianMixture figure2_mixture(int m, std::mt19937_64& rng) {
  std::vector<GaussianComponent> comps;
  std::normal_distribution<double> g;
  for (int i = 0; i < 3; ++i) {
    Matrix G(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) G(a, b) = g(rng);
    const Matrix D = Eigen::HouseholderQR<Matrix>(G).householderQ();
    comps.push_back({1.0 / 3, Vector::Zero(m), SymMatrix(D * oracle::random_vec(m, rng, 0, 1).asDiagonal() * D.transpose())});
  }
  return GaussianMixture(comps);
}

}  // namespace

TEST_CASE("chi-square sum spec validation") {
  CHECK_THROWS_AS(ChiSqSumSpec((Vector(2) << 1.0, 0.0).finished(), Vector::Zero(2)), Error);
  CHECK_THROWS_AS(ChiSqSumSpec(Vector::Ones(2), Vector::Zero(3)), Error);
  const ChiSqSumSpec s((Vector(2) << 1.0, 2.0).finished(), (Vector(2) << 0.0, 1.0).finished());
  CHECK(s.mean() == doctest::Approx(1.0 + 2.0 * 2.0));
  CHECK(s.variance() == doctest::Approx(2.0 + 4.0 * 6.0));
}

TEST_CASE("chi-square characteristic function") {
  const ChiSqSumSpec one = equal_weights(1);
  for (double t : {-3.0, -0.4, 0.2, 1.0, 7.0}) {
    const Complex expect = std::pow(Complex(1.0, -2.0 * t), -0.5);
    CHECK(std::abs(cf_chisq_sum(one, t, false) - expect) < 1e-12);
  }
  CHECK(std::abs(cf_chisq_sum(geometric(5), 0.0, true) - Complex(1, 0)) == 0.0);
  CHECK(std::abs(cf_chisq_sum(geometric(5), 0.0, false) - Complex(1, 0)) == 0.0);
}

TEST_CASE("standardized chi-square CF tends to the normal CF") {
  const double target = std::exp(-0.5);
  const auto s10 = equal_weights(10), s100 = equal_weights(100);
  const Complex c10 = cf_chisq_sum(s10, 1.0, true), c100 = cf_chisq_sum(s100, 1.0, true);
  const Vector x = sample_chisq_sum(s10, 1000000, 4);
  std::vector<double> z;
  for (Eigen::Index i = 0; i < x.size(); ++i) z.push_back((x[i] - s10.mean()) / std::sqrt(s10.variance()));
  CHECK(std::abs(c10 - oracle::empirical_cf(z, 1.0)) < 3e-3);
  // the leading error is the skewness term, of order h^{-1/2}
  const double e10 = std::abs(c10 - target), e100 = std::abs(c100 - target);
  CHECK(e10 < 0.1);
  CHECK(e10 / e100 > 2.5);
  CHECK(e10 / e100 < 3.8);
}

TEST_CASE("exact quadratic CF") {
  std::mt19937_64 rng(8);
  SUBCASE("linear case is a univariate mixture CF") {
    const GaussianMixture mix({{0.3, oracle::random_vec(3, rng), SymMatrix(oracle::random_spd(3, rng))},
                               {0.7, oracle::random_vec(3, rng), SymMatrix(oracle::random_spd(3, rng))}});
    const QuadraticForm q(SymMatrix::zero(3), oracle::random_vec(3, rng), 0.5);
    const auto u = asymptotic_distribution(q, mix);
    for (double t : default_t_grid()) CHECK(std::abs(cf_quadratic_exact(q, mix, t) - cf_univariate_gmm(u, t)) < 1e-12);
    CHECK(cf_sup_error(q, mix) < 1e-12);
  }
  SUBCASE("matches the empirical CF of simulated c") {
    std::vector<oracle::Comp> comps;
    std::vector<GaussianComponent> gc;
    for (int i = 0; i < 2; ++i) {
      const Matrix S = oracle::random_spd(6, rng, 0.2);
      const Vector mu = oracle::random_vec(6, rng);
      comps.push_back({0.5, mu, S});
      gc.push_back({0.5, mu, SymMatrix(S)});
    }
    const GaussianMixture mix(gc);
    const QuadraticForm q(SymMatrix(oracle::random_sym(6, rng)), oracle::random_vec(6, rng), 0.0);
    const QuadraticCF cf(q, mix);
    oracle::Sampler s(comps, 99);
    Matrix z(1000000, 6);
    s.draw(z);
    std::vector<double> c;
    c.reserve(z.rows());
    for (Eigen::Index k = 0; k < z.rows(); ++k) c.push_back((q(z.row(k).transpose()) - cf.mean()) / cf.sd());
    double worst = 0.0;
    for (double t = -5.0; t <= 5.0 + 1e-12; t += 0.25) worst = std::max(worst, std::abs(cf(t) - oracle::empirical_cf(c, t)));
    CHECK(worst < 3e-3);
    CHECK(std::abs(cf(0.0) - Complex(1, 0)) < 1e-15);
  }
}

TEST_CASE("univariate mixture CF") {
  const UnivariateGaussianMixture n01(Vector::Ones(1), Vector::Zero(1), Vector::Ones(1));
  CHECK(std::abs(cf_univariate_gmm(n01, 1.0) - Complex(std::exp(-0.5), 0)) < 1e-15);
  CHECK(std::abs(cf_univariate_gmm(n01, 0.0) - Complex(1, 0)) < 1e-15);
  const UnivariateGaussianMixture sym(Vector::Constant(2, 0.5), (Vector(2) << -2.0, 2.0).finished(), Vector::Ones(2));
  for (double t : {0.3, 1.1, 2.5}) CHECK(std::abs(cf_univariate_gmm(sym, t).imag()) < 1e-15);
}

TEST_CASE("CF properties: normalization, conjugate symmetry, derivatives") {
  std::mt19937_64 rng(15);
  const GaussianMixture mix({{0.6, oracle::random_vec(4, rng), SymMatrix(oracle::random_spd(4, rng))},
                             {0.4, oracle::random_vec(4, rng), SymMatrix(oracle::random_spd(4, rng))}});
  const QuadraticForm q(SymMatrix(oracle::random_sym(4, rng)), oracle::random_vec(4, rng), 0.2);
  const QuadraticCF exact(q, mix);
  const UnivariateGaussianMixture u = asymptotic_distribution(q, mix);
  const ChiSqSumSpec chi((Vector(3) << 1.0, -0.5, 0.25).finished(), (Vector(3) << 0.3, 1.0, 0.0).finished());
  const std::vector<std::function<Complex(double)>> cfs{
      [&](double t) { return exact(t); }, [&](double t) { return cf_univariate_gmm(u, t); },
      [&](double t) { return cf_chisq_sum(chi, t, true); }};
  for (const auto& f : cfs) {
    CHECK(std::abs(f(0.0) - Complex(1, 0)) < 1e-14);
    for (double t : default_t_grid()) {
      CHECK(std::abs(f(t)) <= 1 + 1e-12);
      CHECK(std::abs(f(-t) - std::conj(f(t))) < 1e-12);
    }
    const double h = 1e-5;
    const Complex d1 = (f(h) - f(-h)) / (2 * h);
    CHECK(std::abs((Complex(0, -1) * d1).real()) < 1e-6);
    const Complex d2 = (f(1e-4) - 2.0 * f(0.0) + f(-1e-4)) / 1e-8;
    CHECK(std::abs(d2.real() + 1.0) < 1e-4);
  }
}

TEST_CASE("sup error decreases with dimension and eigenvalue balance") {
  std::mt19937_64 rng(20);
  const GaussianMixture m10 = figure2_mixture(10, rng), m100 = figure2_mixture(100, rng);
  const double e10 = cf_sup_error(QuadraticForm(SymMatrix::identity(10), Vector::Zero(10), 0.0), m10);
  const double e100 = cf_sup_error(QuadraticForm(SymMatrix::identity(100), Vector::Zero(100), 0.0), m100);
  CHECK(e100 < e10);

  const int m = 12;
  const GaussianMixture stdn({{1.0, Vector::Zero(m), SymMatrix::identity(m)}});
  Vector geo(m);
  for (int j = 0; j < m; ++j) geo[j] = std::pow(2.0, -j);
  const double eq = cf_sup_error(QuadraticForm(SymMatrix::identity(m), Vector::Zero(m), 0.0), stdn);
  const double ge = cf_sup_error(QuadraticForm(SymMatrix::diagonal(geo), Vector::Zero(m), 0.0), stdn);
  CHECK(eq < ge);
}

TEST_CASE("sup error rate for the identity family") {
  std::vector<double> ms, errs;
  for (int m : {10, 40, 160}) {
    const GaussianMixture stdn({{1.0, Vector::Zero(m), SymMatrix::identity(m)}});
    ms.push_back(m);
    errs.push_back(cf_sup_error(QuadraticForm(SymMatrix::identity(m), Vector::Zero(m), 0.0), stdn));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  const double slope = oracle::log_log_slope(ms, errs);
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
}

TEST_CASE("rate bound report") {
  const auto r0 = rate_bound(equal_weights(100));
  CHECK(r0.bound_value == doctest::Approx(std::pow(0.5, -0.5) * 0.1).epsilon(1e-12));
  CHECK(r0.bound_value == doctest::Approx(0.1414).epsilon(1e-3));
  CHECK(r0.alpha_bar == doctest::Approx(0.5));
  CHECK(r0.ratio == doctest::Approx(1.0));
  const auto r3 = rate_bound(equal_weights(100, 3.0));
  CHECK(r3.bound_value / r0.bound_value == doctest::Approx(std::pow(9.5 / 0.5, -0.5)).epsilon(1e-12));
  const auto rg = rate_bound(geometric(20));
  CHECK(rg.premise_value > 100.0);
  CHECK(rg.non_convergent);
  CHECK_FALSE(r0.non_convergent);
  // Unsorted weights give the same report as sorted ones.
  const auto us = rate_bound(ChiSqSumSpec((Vector(3) << 0.25, 1.0, -0.5).finished(), Vector::Zero(3)));
  const auto so = rate_bound(ChiSqSumSpec((Vector(3) << 1.0, -0.5, 0.25).finished(), Vector::Zero(3)));
  CHECK(us.bound_value == doctest::Approx(so.bound_value));
  CHECK(us.ratio == doctest::Approx(4.0));
}

TEST_CASE("condition bound inequality") {
  const auto eq = check_condition_bound(SymMatrix::identity(3), SymMatrix::identity(3));
  CHECK(eq.lhs == doctest::Approx(1.0));
  CHECK(eq.rhs == doctest::Approx(1.0));
  CHECK(eq.holds);
  std::mt19937_64 rng(6);
  const Matrix S = oracle::random_spd(5, rng);
  const auto ai = check_condition_bound(SymMatrix::identity(5), SymMatrix(S));
  CHECK(ai.lhs == doctest::Approx(condition_number(SymMatrix(S))).epsilon(1e-8));
  CHECK(ai.lhs == doctest::Approx(ai.rhs).epsilon(1e-8));
  CHECK(ai.holds);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix A = oracle::random_sym(8, rng);
    A += (0.1 - std::min(0.0, sym_eigen_ascending(SymMatrix(A)).values.minCoeff())) * Matrix::Identity(8, 8) * (trial % 2);
    const auto c = check_condition_bound(SymMatrix(A), SymMatrix(oracle::random_spd(8, rng, 0.05)));
    violations += c.holds ? 0 : 1;
  }
  CHECK(violations == 0);
}

TEST_CASE("chi-square sampling") {
  const auto one = equal_weights(1);
  const Vector x = sample_chisq_sum(one, 1000000, 1);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (x.size() - 1));
  CHECK(std::abs(mean - 1.0) <= 4.0 * sd / 1000.0);
  const ChiSqSumSpec mixed((Vector(3) << 1.0, 0.5, -0.3).finished(), (Vector(3) << 0.0, 2.0, 1.0).finished());
  const Vector y = sample_chisq_sum(mixed, 1000000, 2);
  const double ym = y.mean();
  const double yv = (y.array() - ym).square().sum() / (y.size() - 1);
  CHECK(std::abs(yv - mixed.variance()) <= 0.05 * mixed.variance());
  const auto ten = equal_weights(10);
  const Vector w = sample_chisq_sum(ten, 20000, 3);
  // closed-form chi-square CDF for even degrees of freedom
  auto chisq10_cdf = [](double x) {
    if (x <= 0.0) return 0.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 5; ++k) sum += (term *= 0.5 * x / k);
    return 1.0 - std::exp(-0.5 * x) * sum;
  };
  CHECK(oracle::ks_to_cdf(as_std(w), chisq10_cdf) < 0.015);
  CHECK(sample_chisq_sum(ten, 10, 5) == sample_chisq_sum(ten, 10, 5));
}

TEST_CASE("density and distance utilities") {
  const Vector g = linspace(-1, 1, 5);
  CHECK(g[0] == -1.0);
  CHECK(g[4] == 1.0);
  CHECK(g[2] == doctest::Approx(0.0));
  CHECK(trapezoid(linspace(0, 1, 101), linspace(0, 1, 101)) == doctest::Approx(0.5));
  const Vector x = sample_chisq_sum(equal_weights(50), 20000, 9);
  const Vector z = (x.array() - 50.0) / 10.0;
  const Vector grid = linspace(-6, 6, 601);
  const Vector f = kde(z, grid);
  CHECK(trapezoid(grid, f) == doctest::Approx(1.0).epsilon(1e-3));
  Vector phi(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) phi[i] = std_normal_pdf(grid[i]);
  CHECK(integrated_absolute_error(grid, f, phi) < 0.1);
  const double ks = ks_distance(z, [](double t) { return std_normal_cdf(t); });
  CHECK(ks == doctest::Approx(oracle::ks_to_cdf(as_std(z), oracle::normal_cdf)).epsilon(1e-9));
  const double bw = silverman_bandwidth(z);
  CHECK(bw > 0.0);
  CHECK(bw < 0.2);
}
