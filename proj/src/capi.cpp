#include "qccp/qccp.h"

#include "qccp/diagnostics.hpp"
#include "qccp/error.hpp"
#include "qccp/experiments.hpp"
#include "qccp/gmm.hpp"
#include "qccp/io.hpp"
#include "qccp/quadform.hpp"
#include "qccp/solver.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct qccp_mixture {
  qccp::GaussianMixture mix;
};
struct qccp_form {
  qccp::QuadraticForm q;
};
struct qccp_problem {
  qccp::ProblemSpec spec;
};
struct qccp_result {
  qccp::SolveResult result;
};

namespace {

thread_local std::string g_last_error;

qccp_status status_of(qccp::ErrorKind k) {
  switch (k) {
    case qccp::ErrorKind::Input: return QCCP_ERR_INPUT;
    case qccp::ErrorKind::Domain: return QCCP_ERR_DOMAIN;
    case qccp::ErrorKind::Fit: return QCCP_ERR_FIT;
    case qccp::ErrorKind::Solve: return QCCP_ERR_SOLVE;
    case qccp::ErrorKind::Io: return QCCP_ERR_IO;
  }
  return QCCP_ERR_INTERNAL;
}

template <class F>
qccp_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return QCCP_OK;
  } catch (const qccp::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const qccp::Json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return QCCP_ERR_INPUT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QCCP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QCCP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return QCCP_ERR_INTERNAL;
  }
}

qccp_status null_arg(const char* name) {
  g_last_error = std::string("argument '") + name + "' is NULL";
  return QCCP_ERR_NULL;
}

#define QCCP_REQUIRE(p) \
  do {                  \
    if (!(p)) return null_arg(#p); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qccp::Json parse(const char* text, const std::string& what) {
  if (!text || !*text) return qccp::Json::object();
  try {
    return qccp::Json::parse(text);
  } catch (const qccp::Json::parse_error& e) {
    throw qccp::Error(qccp::ErrorKind::Input, what + ": " + e.what());
  }
}

template <class T>
T opt(const qccp::Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const qccp::Json::exception&) {
    qccp::throw_input(std::string("at /") + key + ": wrong type");
  }
}

void check_object(const qccp::Json& j, const std::string& what) {
  if (!j.is_object()) qccp::throw_input(what + ": expected a JSON object");
}

qccp::Vector copy_vector(const double* p, std::size_t n) {
  return Eigen::Map<const qccp::Vector>(p, static_cast<Eigen::Index>(n));
}

qccp::FitConfig fit_config(const qccp::Json& j) {
  check_object(j, "fit config");
  qccp::FitConfig c;
  c.components = opt<int>(j, "components", c.components);
  c.max_iter = opt<int>(j, "max_iter", c.max_iter);
  c.tol = opt<double>(j, "tol", c.tol);
  c.seed = opt<std::uint64_t>(j, "seed", c.seed);
  c.n_restarts = opt<int>(j, "n_restarts", c.n_restarts);
  if (j.contains("cond_bound") && !j["cond_bound"].is_null()) c.cond_bound = opt<double>(j, "cond_bound", 0.0);
  return c;
}

void run_fit(const qccp::Matrix& data, const char* config_json, qccp_mixture** out, char** report_json) {
  const qccp::FitConfig cfg = fit_config(parse(config_json, "fit config"));
  qccp::FitResult r = cfg.cond_bound ? qccp::fit_em_condnum(data, cfg) : qccp::fit_em(data, cfg);
  if (report_json) {
    qccp::Json rep = qccp::fit_result_to_json(r);
    rep["config"] = parse(config_json, "fit config");
    *report_json = dup_string(rep.dump(2));
  }
  *out = new qccp_mixture{std::move(r.mixture)};
}

}  // namespace

extern "C" {

const char* qccp_version(void) { return QCCP_VERSION_STRING; }

const char* qccp_last_error(void) { return g_last_error.c_str(); }

const char* qccp_status_string(qccp_status s) {
  switch (s) {
    case QCCP_OK: return "ok";
    case QCCP_ERR_INPUT: return "input error";
    case QCCP_ERR_DOMAIN: return "domain error";
    case QCCP_ERR_FIT: return "fit failure";
    case QCCP_ERR_SOLVE: return "solve failure";
    case QCCP_ERR_IO: return "i/o error";
    case QCCP_ERR_INTERNAL: return "internal error";
    case QCCP_ERR_NULL: return "null argument";
  }
  return "unknown status";
}

void qccp_string_free(char* s) { std::free(s); }

qccp_status qccp_mixture_from_json(const char* json, qccp_mixture** out) {
  QCCP_REQUIRE(json);
  QCCP_REQUIRE(out);
  return guard([&] { *out = new qccp_mixture{qccp::mixture_from_json(parse(json, "mixture"))}; });
}

qccp_status qccp_mixture_to_json(const qccp_mixture* mix, char** json) {
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(json);
  return guard([&] { *json = dup_string(qccp::mixture_to_json(mix->mix).dump(2)); });
}

void qccp_mixture_free(qccp_mixture* mix) { delete mix; }

qccp_status qccp_mixture_dim(const qccp_mixture* mix, size_t* dim, size_t* components) {
  QCCP_REQUIRE(mix);
  if (dim) *dim = mix->mix.dim();
  if (components) *components = mix->mix.size();
  return QCCP_OK;
}

qccp_status qccp_mixture_density(const qccp_mixture* mix, const double* z, double* value) {
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(z);
  QCCP_REQUIRE(value);
  return guard([&] { *value = qccp::mixture_density(mix->mix, copy_vector(z, mix->mix.dim())); });
}

qccp_status qccp_mixture_sample(const qccp_mixture* mix, size_t n, uint64_t seed, double* out) {
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(out);
  return guard([&] {
    const qccp::Matrix s = qccp::mixture_sample(mix->mix, n, seed);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, s.rows(), s.cols()) = s;
  });
}

qccp_status qccp_fit(const double* data, size_t n, size_t m, const char* config_json, qccp_mixture** out,
                     char** report_json) {
  QCCP_REQUIRE(data);
  QCCP_REQUIRE(out);
  return guard([&] {
    const qccp::Matrix d = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    run_fit(d, config_json, out, report_json);
  });
}

qccp_status qccp_fit_csv(const char* csv_path, const char* config_json, qccp_mixture** out, char** report_json) {
  QCCP_REQUIRE(csv_path);
  QCCP_REQUIRE(out);
  return guard([&] { run_fit(qccp::read_csv_matrix(csv_path), config_json, out, report_json); });
}

qccp_status qccp_form_from_json(const char* json, qccp_form** out) {
  QCCP_REQUIRE(json);
  QCCP_REQUIRE(out);
  return guard([&] { *out = new qccp_form{qccp::quadform_from_json(parse(json, "form"))}; });
}

void qccp_form_free(qccp_form* q) { delete q; }

qccp_status qccp_moments_json(const qccp_form* q, const qccp_mixture* mix, char** json) {
  QCCP_REQUIRE(q);
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(json);
  return guard([&] {
    const auto mm = qccp::mixture_moments(q->q, mix->mix);
    const auto u = qccp::asymptotic_distribution(q->q, mix->mix);
    *json = dup_string(qccp::moments_to_json(mm, u).dump(2));
  });
}

qccp_status qccp_asymptotic_json(const qccp_form* q, const qccp_mixture* mix, char** json) {
  QCCP_REQUIRE(q);
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(json);
  return guard([&] {
    *json = dup_string(qccp::univariate_to_json(qccp::asymptotic_distribution(q->q, mix->mix)).dump(2));
  });
}

qccp_status qccp_asymptotic_cdf(const qccp_form* q, const qccp_mixture* mix, double z, double* value) {
  QCCP_REQUIRE(q);
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(value);
  return guard([&] { *value = qccp::asymptotic_cdf(qccp::asymptotic_distribution(q->q, mix->mix), z); });
}

qccp_status qccp_asymptotic_quantile(const qccp_form* q, const qccp_mixture* mix, double p, double* value) {
  QCCP_REQUIRE(q);
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(value);
  return guard([&] { *value = qccp::asymptotic_quantile(qccp::asymptotic_distribution(q->q, mix->mix), p); });
}

qccp_status qccp_diagnose_json(const qccp_form* q, const qccp_mixture* mix, char** json) {
  QCCP_REQUIRE(q);
  QCCP_REQUIRE(mix);
  QCCP_REQUIRE(json);
  return guard([&] {
    const qccp::SpectralData s = qccp::spectral_decompose(q->q, mix->mix);
    qccp::Json out;
    out["conditions"] = qccp::condition_report_to_json(qccp::check_asymptotic_conditions(s));
    out["cf_sup_error"] = qccp::cf_sup_error(q->q, mix->mix);
    qccp::Json rates = qccp::Json::array();
    qccp::Json bounds = qccp::Json::array();
    for (std::size_t i = 0; i < s.components.size(); ++i) {
      const auto& cs = s.components[i];
      if (cs.h == 0) {
        rates.push_back(nullptr);
      } else {
        const auto h = static_cast<Eigen::Index>(cs.h);
        const qccp::ChiSqSumSpec spec(0.5 * cs.lambda.head(h), cs.delta.head(h));
        rates.push_back(qccp::rate_bound_to_json(qccp::rate_bound(spec)));
      }
      const auto& sigma = mix->mix[i].cov;
      if (!q->q.A.is_zero() && std::isfinite(qccp::condition_number(sigma)) &&
          std::isfinite(qccp::condition_number(q->q.A))) {
        const auto cb = qccp::check_condition_bound(q->q.A, sigma);
        bounds.push_back({{"lhs", cb.lhs}, {"rhs", cb.rhs}, {"holds", cb.holds}});
      } else {
        bounds.push_back(nullptr);
      }
    }
    out["rate_bounds"] = rates;
    out["condition_bounds"] = bounds;
    *json = dup_string(out.dump(2));
  });
}

qccp_status qccp_problem_from_json(const char* json, qccp_problem** out) {
  QCCP_REQUIRE(json);
  QCCP_REQUIRE(out);
  return guard([&] { *out = new qccp_problem{qccp::problem_from_json(parse(json, "problem"))}; });
}

qccp_status qccp_problem_to_json(const qccp_problem* p, char** json) {
  QCCP_REQUIRE(p);
  QCCP_REQUIRE(json);
  return guard([&] { *json = dup_string(qccp::problem_to_json(p->spec).dump(2)); });
}

qccp_status qccp_problem_generate(int K, int n, uint64_t seed, int convex, qccp_problem** out, char** metadata_json) {
  QCCP_REQUIRE(out);
  return guard([&] {
    qccp::BenchmarkInstance inst = qccp::gen_benchmark(K, n, seed, convex != 0);
    if (metadata_json) *metadata_json = dup_string(qccp::benchmark_metadata(inst).dump(2));
    *out = new qccp_problem{std::move(inst.problem)};
  });
}

void qccp_problem_free(qccp_problem* p) { delete p; }

qccp_status qccp_problem_size(const qccp_problem* p, size_t* n, size_t* components) {
  QCCP_REQUIRE(p);
  if (n) *n = static_cast<size_t>(p->spec.n());
  if (components) *components = static_cast<size_t>(p->spec.K());
  return QCCP_OK;
}

qccp_status qccp_chance_probability(const qccp_problem* p, const double* x, double* value) {
  QCCP_REQUIRE(p);
  QCCP_REQUIRE(x);
  QCCP_REQUIRE(value);
  return guard([&] {
    const auto data = qccp::build_linear_moments(p->spec.family, p->spec.mix);
    *value = qccp::chance_probability(data, copy_vector(x, static_cast<std::size_t>(p->spec.n())));
  });
}

qccp_status qccp_mc_feasibility(const qccp_problem* p, const double* x, size_t samples, uint64_t seed,
                                double* probability, double* std_error) {
  QCCP_REQUIRE(p);
  QCCP_REQUIRE(x);
  QCCP_REQUIRE(probability);
  return guard([&] {
    const auto est =
        qccp::mc_feasibility_check(p->spec, copy_vector(x, static_cast<std::size_t>(p->spec.n())), samples, seed);
    *probability = est.probability;
    if (std_error) *std_error = est.std_error;
  });
}

qccp_status qccp_solve(const qccp_problem* p, const char* options_json, qccp_result** out) {
  QCCP_REQUIRE(p);
  QCCP_REQUIRE(out);
  return guard([&] {
    const qccp::Json j = parse(options_json, "solve options");
    check_object(j, "solve options");
    qccp::BBOptions o;
    o.epsilon = opt<double>(j, "epsilon", o.epsilon);
    o.gap_tol = opt<double>(j, "gap_tol", o.gap_tol);
    o.edge_tol = opt<double>(j, "edge_tol", o.edge_tol);
    o.max_nodes = opt<std::size_t>(j, "max_nodes", o.max_nodes);
    o.max_seconds = opt<double>(j, "max_seconds", o.max_seconds);
    o.workers = opt<int>(j, "workers", o.workers);
    o.trace = opt<bool>(j, "trace", o.trace);
    o.n_multistart = opt<int>(j, "n_multistart", o.n_multistart);
    o.seed = opt<std::uint64_t>(j, "seed", o.seed);
    *out = new qccp_result{qccp::branch_and_bound(p->spec, o)};
  });
}

void qccp_result_free(qccp_result* r) { delete r; }

qccp_status qccp_result_json(const qccp_result* r, int include_trace, char** json) {
  QCCP_REQUIRE(r);
  QCCP_REQUIRE(json);
  return guard([&] { *json = dup_string(qccp::solve_result_to_json(r->result, include_trace != 0).dump(2)); });
}

qccp_status qccp_result_status(const qccp_result* r, int* status) {
  QCCP_REQUIRE(r);
  QCCP_REQUIRE(status);
  switch (r->result.status) {
    case qccp::SolveStatus::Optimal: *status = 0; break;
    case qccp::SolveStatus::Infeasible: *status = 1; break;
    case qccp::SolveStatus::IterationLimit: *status = 2; break;
  }
  return QCCP_OK;
}

qccp_status qccp_result_value(const qccp_result* r, double* value) {
  QCCP_REQUIRE(r);
  QCCP_REQUIRE(value);
  *value = r->result.value;
  return QCCP_OK;
}

qccp_status qccp_result_x(const qccp_result* r, double* x, size_t n) {
  QCCP_REQUIRE(r);
  QCCP_REQUIRE(x);
  if (static_cast<size_t>(r->result.x.size()) != n) {
    g_last_error = "result holds " + std::to_string(r->result.x.size()) + " coordinates, buffer has " +
                   std::to_string(n);
    return QCCP_ERR_INPUT;
  }
  for (size_t i = 0; i < n; ++i) x[i] = r->result.x[static_cast<Eigen::Index>(i)];
  return QCCP_OK;
}

qccp_status qccp_result_nodes(const qccp_result* r, size_t* nodes) {
  QCCP_REQUIRE(r);
  QCCP_REQUIRE(nodes);
  *nodes = r->result.nodes;
  return QCCP_OK;
}

qccp_status qccp_run_experiment(const char* id, const char* config_json, const char* out_dir, char** summary_json) {
  QCCP_REQUIRE(id);
  QCCP_REQUIRE(out_dir);
  return guard([&] {
    const qccp::Json cfg = parse(config_json, "experiment config");
    check_object(cfg, "experiment config");
    const qccp::Json s = qccp::run_experiment(id, cfg, out_dir);
    if (summary_json) *summary_json = dup_string(s.dump(2));
  });
}

}  // extern "C"
