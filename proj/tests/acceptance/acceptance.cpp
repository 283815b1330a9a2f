// Acceptance runner: one PASS/FAIL line per criterion, tolerances fixed here.
#include "../instances.hpp"
#include "../oracles.hpp"
#include "qccp/diagnostics.hpp"
#include "qccp/experiments.hpp"
#include "qccp/io.hpp"
#include "qccp/quadform.hpp"
#include "qccp/solver.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace qccp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmtd(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qccp_acceptance_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

struct McInstance {
  QuadraticForm q;
  GaussianMixture mix;
  std::vector<oracle::Comp> comps;
};

McInstance random_instance(int m, int K, std::mt19937_64& rng) {
  McInstance in;
  Vector w = oracle::random_vec(K, rng, 0.2, 1.0);
  w /= w.sum();
  std::vector<GaussianComponent> comps;
  for (int i = 0; i < K; ++i) {
    const Matrix S = oracle::random_spd(m, rng, 0.2);
    const Vector mu = oracle::random_vec(m, rng, -2, 2);
    comps.push_back({w[i], mu, SymMatrix(S)});
    in.comps.push_back({w[i], mu, S});
  }
  in.mix = GaussianMixture(comps);
  in.q = QuadraticForm(SymMatrix(oracle::random_sym(m, rng)), oracle::random_vec(m, rng), oracle::random_vec(1, rng)[0]);
  return in;
}

// ---------------------------------------------------------------------------

Outcome moment_exactness() {
  constexpr int kInstances = 50;
  constexpr std::size_t kSamples = 10000000;
  constexpr double kSE = 4.0, kBudget = 120.0;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < kInstances; ++k) {
    const McInstance in = random_instance(1 + k % 6, 1 + (k / 6) % 3, rng);
    oracle::Sampler s(in.comps, 1000 + k);
    const auto mc = oracle::mc_quadratic_moments(s, in.q.A.mat(), in.q.a, in.q.a0, kSamples);
    const auto mm = mixture_moments(in.q, in.mix);
    const double zm = std::abs(mm.mean - mc.mean) / mc.se_mean;
    const double zv = std::abs(mm.variance - mc.variance) / mc.se_variance;
    worst = std::max({worst, zm, zv});
    bad += (zm > kSE) + (zv > kSE);
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < kBudget, std::to_string(kInstances) + " instances, 1e7 samples each, max |z| " + fmtd(worst) +
                                       " (limit 4), " + fmtd(t, 3) + " s (limit 120)"};
}

Outcome spectral_identities() {
  constexpr double kTol = 1e-8;
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const McInstance in = random_instance(1 + k % 8, 1 + k % 3, rng);
    const auto s = spectral_decompose(in.q, in.mix);
    for (std::size_t i = 0; i < in.mix.size(); ++i) {
      const auto cm = component_moments(in.q, in.mix[i].mean, in.mix[i].cov);
      const double sd = std::sqrt(cm.variance);
      worst = std::max(worst, std::abs(s.components[i].mean() - cm.mean) / std::max(std::abs(cm.mean), sd));
      worst = std::max(worst, std::abs(s.components[i].variance() - cm.variance) / cm.variance);
    }
  }
  return {worst <= kTol, "50 instances, max relative error " + fmtd(worst, 3) + " (limit 1e-8)"};
}

GaussianMixture uniform_spectrum_mixture(int m, std::mt19937_64& rng) {
  std::vector<GaussianComponent> comps;
  Vector w = oracle::random_vec(3, rng, 0, 1);
  w /= w.sum();
  for (int i = 0; i < 3; ++i) {
    const Matrix D = random_orthogonal(m, rng);
    comps.push_back({w[i], Vector::Zero(m), SymMatrix(D * oracle::random_vec(m, rng, 0, 1).asDiagonal() * D.transpose())});
  }
  return GaussianMixture(comps);
}

Outcome asymptotic_convergence() {
  constexpr double kFinal = 0.03;
  std::mt19937_64 rng(3);
  std::vector<double> ks;
  for (int m : {10, 40, 160}) {
    const GaussianMixture mix = uniform_spectrum_mixture(m, rng);
    const auto u = asymptotic_distribution(QuadraticForm(SymMatrix::identity(m), Vector::Zero(m), 0.0), mix);
    std::vector<oracle::Comp> comps;
    for (const auto& c : mix.components()) comps.push_back({c.weight, c.mean, c.cov.mat()});
    oracle::Sampler s(comps, 500 + m);
    Matrix z(20000, m);
    s.draw(z);
    std::vector<double> c(20000);
    for (Eigen::Index i = 0; i < z.rows(); ++i) c[i] = 0.5 * z.row(i).squaredNorm();
    ks.push_back(oracle::ks_to_cdf(c, [&](double t) { return u.cdf(t); }));
  }
  const bool pass = ks[1] < ks[0] && ks[2] < ks[1] && ks[2] <= kFinal;
  return {pass, "KS at m=10,40,160: " + fmtd(ks[0]) + ", " + fmtd(ks[1]) + ", " + fmtd(ks[2]) + " (decreasing, last <= 0.03)"};
}

Outcome rate_check() {
  std::vector<double> hs, errs;
  for (int h : {10, 40, 160, 640}) {
    hs.push_back(h);
    errs.push_back(chisq_cf_sup_error(ChiSqSumSpec(Vector::Ones(h), Vector::Zero(h)), default_t_grid()));
  }
  const double slope = oracle::log_log_slope(hs, errs);
  return {std::abs(slope + 0.5) <= 0.15, "log-log slope " + fmtd(slope) + " (target -0.5 +- 0.15)"};
}

double chisq_ks(const Vector& w, const Vector& alpha, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double mean = 0, var = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    mean += w[j] * (1 + alpha[j] * alpha[j]);
    var += w[j] * w[j] * (2 + 4 * alpha[j] * alpha[j]);
  }
  std::vector<double> z(20000);
  for (auto& v : z) {
    double s = 0;
    for (Eigen::Index j = 0; j < w.size(); ++j) s += w[j] * std::pow(g(rng) + alpha[j], 2);
    v = (s - mean) / std::sqrt(var);
  }
  return oracle::ks_to_cdf(z, oracle::normal_cdf);
}

Outcome mean_effect() {
  Vector w(10);
  for (int j = 0; j < 10; ++j) w[j] = std::pow(2.0, -(j + 1.0));
  int wins = 0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Vector alpha = oracle::random_vec(10, rng, 0, 10);
    const double with = chisq_ks(w, alpha, 100 + seed), without = chisq_ks(w, Vector::Zero(10), 200 + seed);
    wins += without >= 2.0 * with;
    ratios += (seed > 1 ? "," : "") + fmtd(without / with, 3);
  }
  return {wins >= 3, "KS(alpha=0)/KS(alpha) per seed: " + ratios + "; " + std::to_string(wins) + "/5 >= 2 (need 3)"};
}

Outcome condition_bound() {
  std::mt19937_64 rng(8);
  int violations = 0, tested = 0;
  while (tested < 100) {
    const Matrix A = oracle::random_sym(8, rng);
    if (std::abs(sym_eigen(SymMatrix(A)).values.tail(1)[0]) < 1e-6) continue;
    const auto c = check_condition_bound(SymMatrix(A), SymMatrix(oracle::random_spd(8, rng, 0.05)));
    violations += !c.holds;
    ++tested;
  }
  return {violations == 0, "100 pairs, " + std::to_string(violations) + " violations"};
}

Outcome condnum_fitting() {
  constexpr double kQ = 10.0;
  int wins = 0;
  double worst_cond = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Json cfg = {{"seed", seed}, {"max_iter", 200}, {"tol", 1e-6}, {"n_restarts", 1}};
    const Json s = run_condnum_fit(cfg, scratch("condnum_" + std::to_string(seed)));
    const Json& r = s["results"];
    worst_cond = std::max({worst_cond, r[1]["max_condition"].get<double>(), r[2]["max_condition"].get<double>()});
    const double k2 = r[1]["total_iae"].get<double>(), k8 = r[2]["total_iae"].get<double>();
    wins += k8 < k2;
    detail += (seed > 1 ? "; " : "") + fmtd(k2, 3) + "->" + fmtd(k8, 3);
  }
  const bool pass = worst_cond <= kQ * (1 + 1e-8) && wins >= 3;
  return {pass, "max cond " + fmtd(worst_cond, 6) + " (limit 10); IAE(Asym,True) K=2->K=8: " + detail + "; " +
                    std::to_string(wins) + "/5 improved"};
}

struct SolvedInstance {
  ProblemSpec problem;
  SolveResult result;
  double epsilon;
};

std::vector<SolvedInstance> g_solved;

Outcome bb_grid_oracle() {
  constexpr double kBudget = 10.0;
  int bad = 0;
  double worst_ratio = 0.0, slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ProblemSpec p = tiny::instance(5000 + seed);
    BBOptions o;
    o.gap_tol = 1e-4;
    o.seed = seed;
    const auto t0 = Clock::now();
    const SolveResult r = branch_and_bound(p, o);
    const double t = seconds_since(t0);
    slowest = std::max(slowest, t);
    const auto g = tiny::grid_chance_optimum(p, 400);
    if (r.status != SolveStatus::Optimal || !g.feasible || t >= kBudget) {
      ++bad;
      continue;
    }
    const double ratio = std::abs(r.value - g.value) / g.cell_variation;
    worst_ratio = std::max(worst_ratio, ratio);
    bad += ratio > 1.0;
    g_solved.push_back({p, r, o.epsilon});
  }
  return {bad == 0, "20 instances, max |v_bb - v_grid| / cell variation " + fmtd(worst_ratio, 3) +
                        " (limit 1), slowest solve " + fmtd(slowest, 3) + " s (limit 10)"};
}

Outcome bb_dominance() {
  const int Ks[] = {2, 3};
  const int ns[] = {10, 20, 50};
  int bad = 0, count = 0;
  double worst = -kInf;
  for (int k = 0; k < 15; ++k) {
    const int K = Ks[k % 2], n = ns[(k / 2) % 3];
    const std::uint64_t seed = 100 + k;
    const BenchmarkInstance inst = gen_benchmark(K, n, seed, true);
    const LinearMomentData d = build_linear_moments(inst.problem.family, inst.problem.mix);
    LocalOptions lo;
    lo.seed = seed;
    const LocalResult local = solve_local(inst.problem, d, lo);
    BBOptions o;
    o.seed = seed;
    const SolveResult r = branch_and_bound(inst.problem, o);
    ++count;
    if (r.x.size() == 0 || !local.feasible) {
      ++bad;
      continue;
    }
    const double excess = (r.value - local.value) / std::abs(r.value);
    worst = std::max(worst, excess);
    bad += r.value > local.value + 1e-6 * std::abs(r.value);
    if (r.status == SolveStatus::Optimal) g_solved.push_back({inst.problem, r, o.epsilon});
  }
  return {bad == 0, std::to_string(count) + " instances, max (v_bb - v_local)/|v_bb| " + fmtd(worst, 3) + " (limit 1e-6)"};
}

Outcome node_bound() {
  int within = 0;
  for (const auto& s : g_solved) {
    const auto d = build_linear_moments(s.problem.family, s.problem.mix);
    within += static_cast<double>(s.result.nodes) <= worst_case_node_count(s.problem, d, s.epsilon);
  }
  const int total = static_cast<int>(g_solved.size());
  return {total > 0 && within == total, std::to_string(within) + "/" + std::to_string(total) + " solved instances within bound"};
}

Outcome eps_feasibility() {
  int ok = 0;
  double worst_gap = -kInf, worst_prob = kInf;
  for (const auto& s : g_solved) {
    const auto& r = s.result;
    const auto d = build_linear_moments(s.problem.family, s.problem.mix);
    const double gap = (eval_h(d, r.x, r.y) - eval_h_relaxed(d, r.x, r.node_lower)).maxCoeff();
    const double prob = chance_probability(d, r.x);
    worst_gap = std::max(worst_gap, gap);
    worst_prob = std::min(worst_prob, prob - (1 - s.problem.alpha));
    ok += gap <= s.epsilon && prob >= 1 - s.problem.alpha - 1e-9;
  }
  const int total = static_cast<int>(g_solved.size());
  return {total > 0 && ok == total, std::to_string(ok) + "/" + std::to_string(total) + " optimal solutions; max gap " +
                                        fmtd(worst_gap, 3) + " (limit eps=1e-3), min Pr-(1-alpha) " + fmtd(worst_prob, 3) +
                                        " (limit -1e-9)"};
}

Outcome determinism() {
  struct Run {
    std::string id;
    Json cfg;
    std::vector<std::string> files;
  };
  const std::vector<Run> runs{
      {"chisq-asymptotics", {{"seed", 11}}, {"chisq_density.csv", "chisq_summary.csv"}},
      {"gmd-asymptotics", {{"seed", 11}, {"m", {10, 40}}}, {"gmd_density.csv", "gmd_summary.csv"}},
      {"condnum-fit",
       {{"seed", 11}, {"m", 8}, {"samples", 4000}, {"mc_samples", 4000}, {"max_iter", 50}, {"n_restarts", 1}},
       {"condnum_curves.csv", "condnum_errors.csv"}},
      {"bb-benchmark",
       {{"seed", 11}, {"K", {2}}, {"n", {10}}, {"repetitions", 2}, {"nonconvex_K", {2}}, {"nonconvex_n", {6}}, {"workers", 1}},
       {"results.csv", "summary.csv"}}};
  int same = 0, total = 0;
  for (const auto& r : runs) {
    const std::string a = scratch(r.id + "_a"), b = scratch(r.id + "_b");
    (void)run_experiment(r.id, r.cfg, a);
    (void)run_experiment(r.id, r.cfg, b);
    for (const auto& f : r.files) {
      ++total;
      same += read_text(a + "/" + f) == read_text(b + "/" + f);
    }
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " CSV files byte-identical across two runs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"moment exactness vs Monte Carlo", moment_exactness},
      {"spectral reconstruction identities", spectral_identities},
      {"asymptotic law convergence in dimension", asymptotic_convergence},
      {"characteristic-function error rate", rate_check},
      {"noncentrality improves normal approximation", mean_effect},
      {"condition-number inequality", condition_bound},
      {"condition-number constrained fitting", condnum_fitting},
      {"branch and bound vs grid brute force", bb_grid_oracle},
      {"branch and bound dominates local multistart", bb_dominance},
      {"node count within worst-case bound", node_bound},
      {"epsilon-feasibility of reported optima", eps_feasibility},
      {"experiment determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
