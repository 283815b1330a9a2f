// Command-line front end. Talks to the library only through qccp.h.
#include "qccp/qccp.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using Json = nlohmann::json;

enum Exit { kOk = 0, kUsage = 1, kNumerical = 2 };

int g_verbosity = 1;  // 0 errors only, 1 info, 2 debug

void log_line(int level, const std::string& msg) {
  static const char* names[] = {"error", "info", "debug"};
  if (level <= g_verbosity) std::cerr << "[qccp " << names[level] << "] " << msg << "\n";
}

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(qccp_status s) {
  switch (s) {
    case QCCP_OK: return kOk;
    case QCCP_ERR_INPUT:
    case QCCP_ERR_IO:
    case QCCP_ERR_NULL: return kUsage;
    default: return kNumerical;
  }
}

void check(qccp_status s, const std::string& what) {
  if (s != QCCP_OK) {
    throw Failure{exit_code_for(s), what + ": " + qccp_status_string(s) + ": " + qccp_last_error()};
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { qccp_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};
using Mixture = Handle<qccp_mixture, qccp_mixture_free>;
using Form = Handle<qccp_form, qccp_form_free>;
using Problem = Handle<qccp_problem, qccp_problem_free>;
using Result = Handle<qccp_result, qccp_result_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kUsage, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Failure{kUsage, origin + ": " + e.what()};
  }
}

std::string default_output_dir() {
  const char* env = std::getenv("QCCP_OUTPUT_DIR");
  return env && *env ? std::string(env) : std::string();
}

// Empty --out: QCCP_OUTPUT_DIR/<fallback> when the variable is set, otherwise stdout.
void emit(const std::string& out, const std::string& fallback, const std::string& content) {
  std::string path = out;
  if (path.empty() && !default_output_dir().empty()) {
    path = (std::filesystem::path(default_output_dir()) / fallback).string();
  }
  if (path.empty()) {
    std::cout << content << "\n";
    return;
  }
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw Failure{kUsage, "cannot write " + path};
    o << content << "\n";
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Failure{kUsage, "cannot write " + path + ": " + ec.message()};
  log_line(1, "wrote " + path);
}

// {mixture, form} may come from one --config file or from --mixture/--form files.
struct ModelInputs {
  std::string config, mixture, form;
};

void load_model(const ModelInputs& in, Mixture& mix, Form& form) {
  Json mj, fj;
  if (!in.config.empty()) {
    const Json c = parse_json(read_file(in.config), in.config);
    if (!c.is_object() || !c.contains("mixture") || !c.contains("form")) {
      throw Failure{kUsage, in.config + ": expected an object with /mixture and /form"};
    }
    mj = c["mixture"];
    fj = c["form"];
  }
  if (!in.mixture.empty()) mj = parse_json(read_file(in.mixture), in.mixture);
  if (!in.form.empty()) fj = parse_json(read_file(in.form), in.form);
  if (mj.is_null() || fj.is_null()) throw Failure{kUsage, "need --config or both --mixture and --form"};
  check(qccp_mixture_from_json(mj.dump().c_str(), &mix.p), "mixture");
  check(qccp_form_from_json(fj.dump().c_str(), &form.p), "form");
}

void add_model_options(CLI::App* sub, ModelInputs& in) {
  sub->add_option("--config", in.config, "JSON file with {\"mixture\":..., \"form\":...}");
  sub->add_option("--mixture", in.mixture, "mixture JSON file");
  sub->add_option("--form", in.form, "quadratic form JSON file {A, a, a0}");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chance-constrained programs with quadratic randomness under Gaussian mixtures"};
  app.require_subcommand(0, 1);
  bool version = false, quiet = false, verbose = false;
  app.add_flag("--version", version, "print build info and exit");
  app.add_flag("-q,--quiet", quiet, "errors only on stderr");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  std::uint64_t seed = 1;
  std::string out;

  // fit
  auto* fit = app.add_subcommand("fit", "fit a Gaussian mixture to CSV data by EM");
  std::string data_path, report_path;
  int k = 2, max_iter = 500, restarts = 3;
  double tol = 1e-8;
  std::optional<double> cond_bound;
  fit->add_option("--data", data_path, "CSV of samples, one row per observation")->required();
  fit->add_option("--k", k, "number of components")->check(CLI::PositiveNumber);
  fit->add_option("--cond-bound", cond_bound, "upper bound on every covariance condition number");
  fit->add_option("--max-iter", max_iter, "EM iterations per restart")->check(CLI::PositiveNumber);
  fit->add_option("--tol", tol, "relative log-likelihood tolerance");
  fit->add_option("--restarts", restarts, "number of k-means++ restarts")->check(CLI::PositiveNumber);
  fit->add_option("--report", report_path, "write the fit report (log-likelihood, AIC, BIC) here");
  fit->add_option("--seed", seed, "random seed");
  fit->add_option("--out", out, "mixture JSON output");

  // moments / asymptotic / diagnose
  ModelInputs model;
  auto* moments = app.add_subcommand("moments", "exact mean and variance of c under the mixture");
  add_model_options(moments, model);
  moments->add_option("--seed", seed, "unused; accepted for uniformity");
  moments->add_option("--out", out, "JSON output");

  auto* asym = app.add_subcommand("asymptotic", "asymptotic univariate mixture law of c");
  std::vector<double> cdf_at, quantile_at;
  add_model_options(asym, model);
  asym->add_option("--cdf", cdf_at, "evaluate the asymptotic CDF at these points");
  asym->add_option("--quantile", quantile_at, "evaluate asymptotic quantiles at these probabilities");
  asym->add_option("--seed", seed, "unused; accepted for uniformity");
  asym->add_option("--out", out, "JSON output");

  auto* diag = app.add_subcommand("diagnose", "condition checks and characteristic-function error");
  add_model_options(diag, model);
  diag->add_option("--seed", seed, "unused; accepted for uniformity");
  diag->add_option("--out", out, "JSON output");

  // solve
  auto* solve = app.add_subcommand("solve", "global epsilon-optimal branch-and-bound");
  std::string problem_path;
  double epsilon = 1e-3, gap_tol = 1e-2, max_seconds = 600;
  std::size_t max_nodes = 200000;
  int workers = 1;
  bool trace = false;
  solve->add_option("--config", problem_path, "problem JSON")->required();
  solve->add_option("--epsilon", epsilon, "per-component relaxation gap tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--gap-tol", gap_tol, "relative optimality gap")->check(CLI::NonNegativeNumber);
  solve->add_option("--max-nodes", max_nodes, "node limit");
  solve->add_option("--max-seconds", max_seconds, "wall-clock limit");
  solve->add_option("--workers", workers, "parallel node evaluation")->check(CLI::PositiveNumber);
  solve->add_flag("--trace", trace, "include the node log");
  solve->add_option("--seed", seed, "random seed for multistart points");
  solve->add_option("--out", out, "SolveResult JSON output");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a study: chisq-asymptotics, gmd-asymptotics, condnum-fit, bb-benchmark");
  std::string exp_id, exp_config;
  std::optional<std::uint64_t> exp_seed;
  exp->add_option("id", exp_id, "experiment id")->required();
  exp->add_option("--config", exp_config, "JSON config file");
  exp->add_option("--seed", exp_seed, "random seed (overrides the config)");
  exp->add_option("--workers", workers, "bb-benchmark node workers")->check(CLI::PositiveNumber);
  exp->add_option("--out", out, "output directory");

  // generate
  auto* gen = app.add_subcommand("generate", "benchmark problem generator");
  int gen_k = 2, gen_n = 10;
  bool nonconvex = false;
  std::string meta_path;
  gen->add_option("--k", gen_k, "mixture components")->check(CLI::PositiveNumber);
  gen->add_option("--n", gen_n, "decision dimension")->check(CLI::PositiveNumber);
  gen->add_flag("--nonconvex", nonconvex, "draw weights with some weight below 2*alpha");
  gen->add_option("--metadata", meta_path, "write generator metadata here");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out, "problem JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  g_verbosity = quiet ? 0 : (verbose ? 2 : 1);

  if (version) {
    std::cout << "qccp " << qccp_version() << "\n";
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*fit) {
      Json cfg = {{"components", k}, {"max_iter", max_iter}, {"tol", tol}, {"seed", seed}, {"n_restarts", restarts}};
      if (cond_bound) cfg["cond_bound"] = *cond_bound;
      Mixture mix;
      CString report, mj;
      log_line(1, "fitting K=" + std::to_string(k) + " to " + data_path);
      check(qccp_fit_csv(data_path.c_str(), cfg.dump().c_str(), &mix.p, &report.p), "fit");
      check(qccp_mixture_to_json(mix.p, &mj.p), "fit");
      Json doc = parse_json(mj.str(), "mixture");
      const Json rep = parse_json(report.str(), "report");
      log_line(1, "log-likelihood " + rep.value("log_likelihood", Json()).dump() + ", aic " +
                      rep.value("aic", Json()).dump() + ", bic " + rep.value("bic", Json()).dump());
      if (!report_path.empty()) emit(report_path, "fit_report.json", rep.dump(2));
      doc["config"] = cfg;
      emit(out, "mixture.json", doc.dump(2));
    } else if (*moments || *asym || *diag) {
      Mixture mix;
      Form form;
      load_model(model, mix, form);
      CString js;
      if (*moments) {
        check(qccp_moments_json(form.p, mix.p, &js.p), "moments");
        emit(out, "moments.json", js.str());
      } else if (*asym) {
        check(qccp_asymptotic_json(form.p, mix.p, &js.p), "asymptotic");
        Json doc = parse_json(js.str(), "asymptotic");
        Json cdfs = Json::array(), quants = Json::array();
        for (double z : cdf_at) {
          double v = 0;
          check(qccp_asymptotic_cdf(form.p, mix.p, z, &v), "asymptotic cdf");
          cdfs.push_back({{"z", z}, {"cdf", v}});
        }
        for (double p : quantile_at) {
          double v = 0;
          check(qccp_asymptotic_quantile(form.p, mix.p, p, &v), "asymptotic quantile");
          quants.push_back({{"p", p}, {"quantile", v}});
        }
        if (!cdfs.empty()) doc["cdf"] = cdfs;
        if (!quants.empty()) doc["quantiles"] = quants;
        emit(out, "asymptotic.json", doc.dump(2));
      } else {
        check(qccp_diagnose_json(form.p, mix.p, &js.p), "diagnose");
        emit(out, "diagnose.json", js.str());
      }
    } else if (*solve) {
      Problem prob;
      check(qccp_problem_from_json(read_file(problem_path).c_str(), &prob.p), problem_path);
      const Json opts = {{"epsilon", epsilon}, {"gap_tol", gap_tol}, {"max_nodes", max_nodes},
                         {"max_seconds", max_seconds}, {"workers", workers}, {"trace", trace}, {"seed", seed}};
      Result res;
      log_line(1, "solving " + problem_path);
      check(qccp_solve(prob.p, opts.dump().c_str(), &res.p), "solve");
      CString js;
      check(qccp_result_json(res.p, trace ? 1 : 0, &js.p), "solve");
      Json doc = parse_json(js.str(), "result");
      doc["config"] = opts;
      log_line(1, "status " + doc.value("status", std::string("?")) + ", nodes " + doc["nodes"].dump());
      emit(out, "result.json", doc.dump(2));
    } else if (*exp) {
      Json cfg = exp_config.empty() ? Json::object() : parse_json(read_file(exp_config), exp_config);
      if (!cfg.is_object()) throw Failure{kUsage, exp_config + ": expected a JSON object"};
      if (exp_seed) cfg["seed"] = *exp_seed;
      if (exp->count("--workers")) cfg["workers"] = workers;
      std::string dir = out.empty() ? default_output_dir() : out;
      if (dir.empty()) dir = "qccp-out";
      dir = (std::filesystem::path(dir) / "").string();
      if (out.empty()) dir = (std::filesystem::path(dir) / exp_id).string();
      log_line(1, "running " + exp_id + " into " + dir);
      CString js;
      check(qccp_run_experiment(exp_id.c_str(), cfg.dump().c_str(), dir.c_str(), &js.p), exp_id);
      log_line(1, "done");
    } else if (*gen) {
      Problem prob;
      CString meta, pj;
      check(qccp_problem_generate(gen_k, gen_n, seed, nonconvex ? 0 : 1, &prob.p, &meta.p), "generate");
      check(qccp_problem_to_json(prob.p, &pj.p), "generate");
      Json doc = parse_json(pj.str(), "problem");
      doc["metadata"] = parse_json(meta.str(), "metadata");
      if (!meta_path.empty()) emit(meta_path, "metadata.json", meta.str());
      emit(out, "problem.json", doc.dump(2));
    }
  } catch (const Failure& f) {
    log_line(0, f.message);
    return f.code;
  } catch (const std::exception& e) {
    log_line(0, e.what());
    return kNumerical;
  }
  return kOk;
}
