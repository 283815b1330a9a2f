#include "qccp/experiments.hpp"

#include "qccp/diagnostics.hpp"
#include "qccp/error.hpp"
#include "qccp/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>

namespace qccp {

namespace {

template <class T>
T get_or(const Json& cfg, const std::string& key, T fallback) {
  if (!cfg.is_object() || !cfg.contains(key) || cfg[key].is_null()) return fallback;
  try {
    return cfg[key].get<T>();
  } catch (const Json::exception&) {
    throw_input("config /" + key + ": wrong type");
  }
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream, std::uint64_t{0x51ed2701}};
  return std::mt19937_64(seq);
}

Vector uniform_vector(Eigen::Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Matrix uniform_matrix(Eigen::Index r, Eigen::Index c, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = u(rng);
  return m;
}

Vector random_weights(Eigen::Index K, std::mt19937_64& rng) {
  Vector w = uniform_vector(K, 0.0, 1.0, rng);
  return w / w.sum();
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
}

Vector quadratic_values(const QuadraticForm& q, const Matrix& z) {
  Vector c(z.rows());
  for (Eigen::Index s = 0; s < z.rows(); ++s) c[s] = q(z.row(s).transpose());
  return c;
}

}  // namespace

Matrix random_orthogonal(Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix G(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) G(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q;
}

BenchmarkInstance gen_benchmark(int K, int n, std::uint64_t seed, bool convex) {
  if (K < 1) throw_input("gen_benchmark: K must be >= 1");
  if (n < 2) throw_input("gen_benchmark: n must be >= 2");
  BenchmarkInstance inst;
  inst.seed = seed;
  inst.K = K;
  inst.n = n;
  inst.convex = convex;
  const double alpha = 0.05;
  std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(K) * 1000003ULL + static_cast<std::uint64_t>(n));
  const Eigen::Index m = n;

  Vector w;
  for (;;) {
    ++inst.weight_draws;
    w = random_weights(K, rng);
    const double lo = w.minCoeff();
    if (convex ? lo >= 2.0 * alpha : lo < 2.0 * alpha) break;
    if (K == 1 && !convex) throw_input("gen_benchmark: a single component cannot be in the nonconvex regime");
    if (convex && K > 10) throw_input("gen_benchmark: convex regime needs K <= 10");
  }
  std::vector<GaussianComponent> comps;
  for (int i = 1; i <= K; ++i) {
    GaussianComponent c;
    c.weight = w[i - 1];
    c.mean = uniform_vector(m, 9.0 * i - 8.0, 9.0 * i + 1.0, rng);
    const Matrix L = uniform_matrix(m, m, i, i + 1.0, rng);
    c.cov = SymMatrix(L * L.transpose());
    comps.push_back(std::move(c));
  }
  inst.problem.mix = GaussianMixture(std::move(comps));
  std::vector<SymMatrix> A(static_cast<std::size_t>(n) + 1);
  std::vector<Vector> a;
  a.push_back(Vector::Constant(m, -1.0));
  for (int j = 0; j < n; ++j) {
    Vector e = Vector::Zero(m);
    e[j] = -1.0;
    a.push_back(e);
  }
  inst.problem.family = LinearQuadraticFamily(std::move(A), std::move(a), Vector::Zero(n + 1));
  inst.problem.objective = uniform_vector(n + 1, -5.0, 5.0, rng);
  inst.problem.box.lower = Vector::Constant(n, -100.0);
  inst.problem.box.upper = Vector::Constant(n, 100.0);
  inst.problem.box.lower[0] = inst.problem.box.upper[0] = 1.0;
  inst.problem.alpha = alpha;
  set_default_y_cube(inst.problem);
  inst.problem.validate();
  inst.note = convex ? "weights redrawn until min weight >= 2*alpha (the source tables state weights >= alpha; "
                       "2*alpha is the condition that makes every relaxation convex)"
                     : "weights redrawn until some weight < 2*alpha";
  return inst;
}

Json benchmark_metadata(const BenchmarkInstance& inst) {
  return {{"seed", inst.seed},          {"K", inst.K},       {"n", inst.n},
          {"convex", inst.convex},      {"weight_draws", inst.weight_draws},
          {"min_weight", inst.problem.mix.weights().minCoeff()}, {"note", inst.note}};
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"chisq-asymptotics", "gmd-asymptotics", "condnum-fit", "bb-benchmark"};
  return ids;
}

Json run_experiment(const std::string& id, const Json& config, const std::string& out_dir) {
  if (id == "chisq-asymptotics") return run_chisq_asymptotics(config, out_dir);
  if (id == "gmd-asymptotics") return run_gmd_asymptotics(config, out_dir);
  if (id == "condnum-fit") return run_condnum_fit(config, out_dir);
  if (id == "bb-benchmark") return run_bb_benchmark(config, out_dir);
  throw_input("unknown experiment '" + id + "'");
}

// ---- weighted chi-square sums -------------------------------------------

Json run_chisq_asymptotics(const Json& config, const std::string& out_dir) {
  Json cfg = {{"seed", get_or<std::uint64_t>(config, "seed", 1)},
              {"samples", get_or<std::size_t>(config, "samples", 20000)},
              {"h", get_or<std::size_t>(config, "h", 10)},
              {"h_extra", get_or<std::size_t>(config, "h_extra", 20)},
              {"grid_points", get_or<int>(config, "grid_points", 161)}};
  const auto seed = cfg["seed"].get<std::uint64_t>();
  const auto n = cfg["samples"].get<std::size_t>();
  const auto h = static_cast<Eigen::Index>(cfg["h"].get<std::size_t>());
  const auto h2 = static_cast<Eigen::Index>(cfg["h_extra"].get<std::size_t>());
  const int gp = cfg["grid_points"].get<int>();
  if (n < 2 || h < 1 || h2 < 1 || gp < 2) throw_input("chisq-asymptotics: sizes must be positive");
  ensure_dir(out_dir);

  struct Setting {
    std::string name;
    ChiSqSumSpec spec;
  };
  std::mt19937_64 rng = make_rng(seed, 1);
  auto geometric = [](Eigen::Index k) {
    Vector w(k);
    for (Eigen::Index j = 0; j < k; ++j) w[j] = std::pow(0.5, static_cast<double>(j + 1));
    return w;
  };
  std::vector<Setting> settings{
      {"a", ChiSqSumSpec(geometric(h), Vector::Zero(h))},
      {"b", ChiSqSumSpec(Vector::Ones(h), Vector::Zero(h))},
      {"c", ChiSqSumSpec(geometric(h), uniform_vector(h, 0.0, 10.0, rng))},
      {"b", ChiSqSumSpec(Vector::Ones(h2), Vector::Zero(h2))},
  };

  const Vector grid = linspace(-4.0, 4.0, gp);
  CsvWriter density({"setting", "h", "z", "kde", "normal_pdf"});
  CsvWriter table({"setting", "h", "ks", "cf_sup_error", "alpha_bar", "ratio", "bound_value", "premise_value", "f3",
                   "f4", "non_convergent"});
  Json rows = Json::array();
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const auto& s = settings[k];
    const Vector raw = sample_chisq_sum(s.spec, n, seed * 7919 + k);
    const Vector z = (raw.array() - s.spec.mean()) / std::sqrt(s.spec.variance());
    const Vector f = kde(z, grid);
    const std::string hs = std::to_string(s.spec.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      density.row({s.name, hs, fmt(grid[g]), fmt(f[g]), fmt(std_normal_pdf(grid[g]))});
    }
    const double ks = ks_distance(z, [](double t) { return std_normal_cdf(t); });
    const double cfe = chisq_cf_sup_error(s.spec, default_t_grid());
    const RateBoundReport rb = rate_bound(s.spec);
    table.row({s.name, hs, fmt(ks), fmt(cfe), fmt(rb.alpha_bar), fmt(rb.ratio), fmt(rb.bound_value),
               fmt(rb.premise_value), fmt(rb.f3), fmt(rb.f4), rb.non_convergent ? "1" : "0"});
    rows.push_back({{"setting", s.name}, {"h", s.spec.size()}, {"ks", ks}, {"cf_sup_error", cfe},
                    {"rate_bound", rate_bound_to_json(rb)}});
  }
  density.save(join(out_dir, "chisq_density.csv"));
  table.save(join(out_dir, "chisq_summary.csv"));
  Json summary = {{"experiment", "chisq-asymptotics"}, {"config", cfg}, {"results", rows}};
  write_text(join(out_dir, "summary.json"), summary.dump(2) + "\n");
  return summary;
}

// ---- quadratic forms under mixtures --------------------------------------

namespace {

GaussianMixture spectral_mixture(Eigen::Index m, int K, bool nonzero_mean, std::mt19937_64& rng) {
  const Vector w = random_weights(K, rng);
  std::vector<GaussianComponent> comps;
  for (int i = 0; i < K; ++i) {
    const Matrix D = random_orthogonal(m, rng);
    const Vector lam = uniform_vector(m, 0.0, 1.0, rng);
    GaussianComponent c;
    c.weight = w[i];
    c.cov = SymMatrix(D * lam.asDiagonal() * D.transpose());
    c.mean = nonzero_mean ? uniform_vector(m, 0.0, 10.0, rng) : Vector::Zero(m);
    comps.push_back(std::move(c));
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace

Json run_gmd_asymptotics(const Json& config, const std::string& out_dir) {
  Json cfg = {{"seed", get_or<std::uint64_t>(config, "seed", 1)},
              {"m", get_or<std::vector<int>>(config, "m", {10, 40, 160})},
              {"K", get_or<int>(config, "K", 3)},
              {"samples", get_or<std::size_t>(config, "samples", 20000)},
              {"grid_points", get_or<int>(config, "grid_points", 201)}};
  const auto seed = cfg["seed"].get<std::uint64_t>();
  const auto ms = cfg["m"].get<std::vector<int>>();
  const int K = cfg["K"].get<int>();
  const auto n = cfg["samples"].get<std::size_t>();
  const int gp = cfg["grid_points"].get<int>();
  if (K < 1 || n < 2 || gp < 2 || ms.empty()) throw_input("gmd-asymptotics: sizes must be positive");
  for (int m : ms) {
    if (m < 1) throw_input("gmd-asymptotics: m must be positive");
  }
  ensure_dir(out_dir);

  CsvWriter density({"mode", "m", "z", "kde", "asymptotic_pdf"});
  CsvWriter table({"mode", "m", "ks", "cf_sup_error", "mean", "variance"});
  Json rows = Json::array();
  const std::vector<std::string> modes{"zero-mean", "nonzero-mean", "linear"};
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    for (std::size_t k = 0; k < ms.size(); ++k) {
      const Eigen::Index m = ms[k];
      std::mt19937_64 rng = make_rng(seed, 100 + 10 * mi + k);
      const GaussianMixture mix = spectral_mixture(m, K, modes[mi] == "nonzero-mean", rng);
      QuadraticForm q = modes[mi] == "linear"
                            ? QuadraticForm(SymMatrix::zero(m), uniform_vector(m, -1.0, 1.0, rng), 0.0)
                            : QuadraticForm(SymMatrix::identity(m), Vector::Zero(m), 0.0);
      const Vector c = quadratic_values(q, mixture_sample(mix, n, seed * 104729 + 31 * mi + k));
      const UnivariateGaussianMixture u = asymptotic_distribution(q, mix);
      const double ks = ks_distance(c, [&](double t) { return u.cdf(t); });
      const double cfe = cf_sup_error(q, mix);
      const double sd = std::sqrt(u.variance());
      const Vector grid = linspace(u.mean() - 4.0 * sd, u.mean() + 4.0 * sd, gp);
      const Vector f = kde(c, grid);
      for (Eigen::Index g = 0; g < grid.size(); ++g) {
        density.row({modes[mi], std::to_string(m), fmt(grid[g]), fmt(f[g]), fmt(u.pdf(grid[g]))});
      }
      table.row({modes[mi], std::to_string(m), fmt(ks), fmt(cfe), fmt(u.mean()), fmt(u.variance())});
      rows.push_back({{"mode", modes[mi]}, {"m", m}, {"ks", ks}, {"cf_sup_error", cfe}});
    }
  }
  density.save(join(out_dir, "gmd_density.csv"));
  table.save(join(out_dir, "gmd_summary.csv"));
  Json summary = {{"experiment", "gmd-asymptotics"}, {"config", cfg}, {"results", rows}};
  write_text(join(out_dir, "summary.json"), summary.dump(2) + "\n");
  return summary;
}

// ---- condition-number constrained fitting --------------------------------

Json run_condnum_fit(const Json& config, const std::string& out_dir) {
  Json default_fits = Json::array({{{"components", 2}},
                                   {{"components", 2}, {"cond_bound", 10.0}},
                                   {{"components", 8}, {"cond_bound", 10.0}}});
  Json cfg = {{"seed", get_or<std::uint64_t>(config, "seed", 1)},
              {"m", get_or<int>(config, "m", 30)},
              {"true_K", get_or<int>(config, "true_K", 2)},
              {"samples", get_or<std::size_t>(config, "samples", 20000)},
              {"mc_samples", get_or<std::size_t>(config, "mc_samples", 20000)},
              {"grid_points", get_or<int>(config, "grid_points", 512)},
              {"max_iter", get_or<int>(config, "max_iter", 300)},
              {"tol", get_or<double>(config, "tol", 1e-7)},
              {"n_restarts", get_or<int>(config, "n_restarts", 2)},
              {"fits", config.is_object() && config.contains("fits") ? config["fits"] : default_fits}};
  const auto seed = cfg["seed"].get<std::uint64_t>();
  const Eigen::Index m = cfg["m"].get<int>();
  const int Kt = cfg["true_K"].get<int>();
  const auto n = cfg["samples"].get<std::size_t>();
  const auto nmc = cfg["mc_samples"].get<std::size_t>();
  const int gp = cfg["grid_points"].get<int>();
  if (m < 1 || Kt < 1 || n < 2 || nmc < 2 || gp < 2) throw_input("condnum-fit: sizes must be positive");
  ensure_dir(out_dir);

  std::mt19937_64 rng = make_rng(seed, 7);
  const Vector w = random_weights(Kt, rng);
  std::vector<GaussianComponent> comps;
  Json true_conds = Json::array();
  for (int i = 0; i < Kt; ++i) {
    GaussianComponent c;
    c.weight = w[i];
    c.mean = uniform_vector(m, 0.0, 1.0, rng);
    const Matrix L = uniform_matrix(m, m, 0.5, 1.5, rng);
    c.cov = SymMatrix(L * L.transpose());
    true_conds.push_back(condition_number(c.cov));
    comps.push_back(std::move(c));
  }
  const GaussianMixture truth(std::move(comps));
  const QuadraticForm q(SymMatrix::identity(m), uniform_vector(m, -100.0, 100.0, rng), 0.0);
  const Matrix data = mixture_sample(truth, n, seed * 15485863 + 1);
  const Vector c_true = quadratic_values(q, mixture_sample(truth, nmc, seed * 15485863 + 2));

  struct Fitted {
    Json spec;
    FitResult fit;
    Vector c;
    UnivariateGaussianMixture asym;
  };
  std::vector<Fitted> fitted;
  for (std::size_t k = 0; k < cfg["fits"].size(); ++k) {
    const Json& fs = cfg["fits"][k];
    FitConfig fc;
    fc.components = get_or<int>(fs, "components", 2);
    fc.max_iter = cfg["max_iter"].get<int>();
    fc.tol = cfg["tol"].get<double>();
    fc.n_restarts = cfg["n_restarts"].get<int>();
    fc.seed = seed * 1000 + k;
    Fitted f;
    f.spec = fs;
    if (fs.contains("cond_bound") && !fs["cond_bound"].is_null()) {
      fc.cond_bound = fs["cond_bound"].get<double>();
      f.fit = fit_em_condnum(data, fc);
    } else {
      f.fit = fit_em(data, fc);
    }
    f.c = quadratic_values(q, mixture_sample(f.fit.mixture, nmc, seed * 15485863 + 10 + k));
    f.asym = asymptotic_distribution(q, f.fit.mixture);
    fitted.push_back(std::move(f));
  }

  std::vector<double> sorted(c_true.data(), c_true.data() + c_true.size());
  std::sort(sorted.begin(), sorted.end());
  double lo = sorted[static_cast<std::size_t>(0.001 * static_cast<double>(sorted.size() - 1))];
  double hi = sorted[static_cast<std::size_t>(0.999 * static_cast<double>(sorted.size() - 1))];
  for (const auto& f : fitted) {
    lo = std::min(lo, f.asym.quantile(0.001));
    hi = std::max(hi, f.asym.quantile(0.999));
  }
  const double pad = 0.1 * (hi - lo);
  const Vector grid = linspace(lo - pad, hi + pad, gp);
  const Vector true_pdf = kde(c_true, grid);

  CsvWriter curves({"fit", "z", "true_pdf", "esti_pdf", "asym_pdf"});
  CsvWriter errors({"fit", "components", "cond_bound", "max_condition", "log_likelihood", "fitness_iae",
                    "asymptotic_iae", "total_iae"});
  Json rows = Json::array();
  for (std::size_t k = 0; k < fitted.size(); ++k) {
    const auto& f = fitted[k];
    const Vector esti = kde(f.c, grid);
    Vector asym(grid.size());
    for (Eigen::Index g = 0; g < grid.size(); ++g) asym[g] = f.asym.pdf(grid[g]);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      curves.row({std::to_string(k), fmt(grid[g]), fmt(true_pdf[g]), fmt(esti[g]), fmt(asym[g])});
    }
    double maxc = 1.0;
    for (const auto& c : f.fit.mixture.components()) maxc = std::max(maxc, condition_number(c.cov));
    const double e_fit = integrated_absolute_error(grid, true_pdf, esti);
    const double e_asym = integrated_absolute_error(grid, esti, asym);
    const double e_total = integrated_absolute_error(grid, true_pdf, asym);
    const double qb = f.spec.contains("cond_bound") ? f.spec["cond_bound"].get<double>() : kInf;
    errors.row({std::to_string(k), std::to_string(f.fit.mixture.size()), fmt(qb), fmt(maxc),
                fmt(f.fit.log_likelihood), fmt(e_fit), fmt(e_asym), fmt(e_total)});
    rows.push_back({{"fit", f.spec},
                    {"components", f.fit.mixture.size()},
                    {"max_condition", maxc},
                    {"log_likelihood", f.fit.log_likelihood},
                    {"iterations", f.fit.iterations},
                    {"fitness_iae", e_fit},
                    {"asymptotic_iae", e_asym},
                    {"total_iae", e_total}});
  }
  curves.save(join(out_dir, "condnum_curves.csv"));
  errors.save(join(out_dir, "condnum_errors.csv"));
  Json summary = {{"experiment", "condnum-fit"}, {"config", cfg}, {"true_condition_numbers", true_conds},
                  {"results", rows}};
  write_text(join(out_dir, "summary.json"), summary.dump(2) + "\n");
  return summary;
}

// ---- branch-and-bound benchmark -----------------------------------------

Json run_bb_benchmark(const Json& config, const std::string& out_dir) {
  Json cfg = {{"seed", get_or<std::uint64_t>(config, "seed", 1)},
              {"K", get_or<std::vector<int>>(config, "K", {2, 3})},
              {"n", get_or<std::vector<int>>(config, "n", {10, 20, 50})},
              {"repetitions", get_or<int>(config, "repetitions", 5)},
              {"nonconvex_K", get_or<std::vector<int>>(config, "nonconvex_K", {2, 3})},
              {"nonconvex_n", get_or<std::vector<int>>(config, "nonconvex_n", {10})},
              {"epsilon", get_or<double>(config, "epsilon", 1e-3)},
              {"gap_tol", get_or<double>(config, "gap_tol", 1e-2)},
              {"edge_tol", get_or<double>(config, "edge_tol", 1e-2)},
              {"max_nodes", get_or<std::size_t>(config, "max_nodes", 20000)},
              {"max_seconds", get_or<double>(config, "max_seconds", 300.0)},
              {"n_multistart", get_or<int>(config, "n_multistart", 8)},
              {"workers", get_or<int>(config, "workers", 1)}};
  const auto seed = cfg["seed"].get<std::uint64_t>();
  const int reps = cfg["repetitions"].get<int>();
  if (reps < 1) throw_input("bb-benchmark: repetitions must be >= 1");
  ensure_dir(out_dir);
  ensure_dir(join(out_dir, "instances"));

  BBOptions bo;
  bo.epsilon = cfg["epsilon"].get<double>();
  bo.gap_tol = cfg["gap_tol"].get<double>();
  bo.edge_tol = cfg["edge_tol"].get<double>();
  bo.max_nodes = cfg["max_nodes"].get<std::size_t>();
  bo.max_seconds = cfg["max_seconds"].get<double>();
  bo.n_multistart = cfg["n_multistart"].get<int>();
  bo.workers = cfg["workers"].get<int>();

  CsvWriter results({"regime", "K", "n", "seed", "status", "bb_value", "local_value", "dominates", "nodes",
                     "node_bound", "within_bound", "max_gap", "chance_probability", "heuristic"});
  CsvWriter timings({"regime", "K", "n", "seed", "bb_seconds", "local_seconds"});
  struct Agg {
    std::vector<double> bb, local, bb_t, local_t, nodes;
  };
  std::map<std::tuple<std::string, int, int>, Agg> agg;
  Json rows = Json::array();

  auto run_grid = [&](const std::string& regime, const std::vector<int>& Ks, const std::vector<int>& ns) {
    for (int K : Ks) {
      for (int n : ns) {
        for (int r = 0; r < reps; ++r) {
          const std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(r);
          const std::string tag = regime + "_K" + std::to_string(K) + "_n" + std::to_string(n) + "_s" + std::to_string(s);
          Json row = {{"regime", regime}, {"K", K}, {"n", n}, {"seed", s}};
          try {
            const BenchmarkInstance inst = gen_benchmark(K, n, s, regime == "convex");
            const LinearMomentData data = build_linear_moments(inst.problem.family, inst.problem.mix);
            LocalOptions lo;
            lo.n_multistart = bo.n_multistart;
            lo.seed = s;
            const auto t0 = std::chrono::steady_clock::now();
            const LocalResult local = solve_local(inst.problem, data, lo);
            const double local_t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            BBOptions o = bo;
            o.seed = s;
            const SolveResult res = branch_and_bound(inst.problem, o);
            const double bound = worst_case_node_count(inst.problem, data, bo.epsilon);
            const double cp = res.x.size() ? chance_probability(data, res.x) : 0.0;
            const bool dominates = local.feasible && res.x.size() &&
                                   res.value <= local.value + 1e-6 * std::abs(res.value);
            const bool within = static_cast<double>(res.nodes) <= bound;
            results.row({regime, std::to_string(K), std::to_string(n), std::to_string(s), to_string(res.status),
                         fmt(res.value), fmt(local.value), dominates ? "1" : "0", std::to_string(res.nodes),
                         fmt(bound), within ? "1" : "0", fmt(res.max_gap), fmt(cp), res.heuristic ? "1" : "0"});
            timings.row({regime, std::to_string(K), std::to_string(n), std::to_string(s), fmt(res.seconds),
                         fmt(local_t)});
            row.update({{"status", to_string(res.status)},
                        {"bb_value", res.value},
                        {"local_value", local.value},
                        {"dominates", dominates},
                        {"nodes", res.nodes},
                        {"node_bound", bound},
                        {"within_bound", within},
                        {"max_gap", res.max_gap},
                        {"epsilon", bo.epsilon},
                        {"chance_probability", cp},
                        {"alpha", inst.problem.alpha},
                        {"heuristic", res.heuristic}});
            Json inst_json = {{"config", cfg},
                              {"metadata", benchmark_metadata(inst)},
                              {"result", solve_result_to_json(res, false)},
                              {"local_value", local.value}};
            inst_json["result"].erase("seconds");
            write_text(join(join(out_dir, "instances"), tag + ".json"), inst_json.dump(2) + "\n");
            auto& a = agg[{regime, K, n}];
            a.bb.push_back(res.value);
            a.local.push_back(local.value);
            a.bb_t.push_back(res.seconds);
            a.local_t.push_back(local_t);
            a.nodes.push_back(static_cast<double>(res.nodes));
          } catch (const Error& e) {
            results.row({regime, std::to_string(K), std::to_string(n), std::to_string(s), "error", "nan", "nan", "0",
                         "0", "nan", "0", "nan", "nan", "0"});
            timings.row({regime, std::to_string(K), std::to_string(n), std::to_string(s), "nan", "nan"});
            row["status"] = "error";
            row["error"] = e.what();
          }
          rows.push_back(row);
        }
      }
    }
  };
  run_grid("convex", cfg["K"].get<std::vector<int>>(), cfg["n"].get<std::vector<int>>());
  run_grid("nonconvex", cfg["nonconvex_K"].get<std::vector<int>>(), cfg["nonconvex_n"].get<std::vector<int>>());

  auto stats3 = [](const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    const double mn = *std::min_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return std::array<double, 3>{mx, s / static_cast<double>(v.size()), mn};
  };
  CsvWriter table({"regime", "K", "n", "bb_max", "bb_ave", "bb_min", "local_max", "local_ave", "local_min",
                   "nodes_ave"});
  CsvWriter time_table({"regime", "K", "n", "bb_time_max", "bb_time_ave", "bb_time_min", "local_time_max",
                        "local_time_ave", "local_time_min"});
  for (const auto& [key, a] : agg) {
    const auto& [regime, K, n] = key;
    const auto b = stats3(a.bb), l = stats3(a.local), bt = stats3(a.bb_t), lt = stats3(a.local_t);
    const auto nd = stats3(a.nodes);
    table.row({regime, std::to_string(K), std::to_string(n), fmt(b[0]), fmt(b[1]), fmt(b[2]), fmt(l[0]), fmt(l[1]),
               fmt(l[2]), fmt(nd[1])});
    time_table.row({regime, std::to_string(K), std::to_string(n), fmt(bt[0]), fmt(bt[1]), fmt(bt[2]), fmt(lt[0]),
                    fmt(lt[1]), fmt(lt[2])});
  }
  results.save(join(out_dir, "results.csv"));
  table.save(join(out_dir, "summary.csv"));
  timings.save(join(out_dir, "timings.csv"));
  time_table.save(join(out_dir, "timing_summary.csv"));
  Json summary = {{"experiment", "bb-benchmark"}, {"config", cfg}, {"results", rows}};
  write_text(join(out_dir, "summary.json"), summary.dump(2) + "\n");
  return summary;
}

}  // namespace qccp
