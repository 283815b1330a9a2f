#pragma once

#include "qccp/io.hpp"
#include "qccp/solver.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qccp {

struct BenchmarkInstance {
  ProblemSpec problem;
  std::uint64_t seed = 0;
  int K = 0;
  int n = 0;
  bool convex = true;
  int weight_draws = 0;  // redraws needed to hit the weight regime
  std::string note;
};

/// Benchmark generator: m = n, component means uniform on (9i-8, 9i+1),
/// covariances L L^T with L entries uniform on (i, i+1), linear randomness
/// a_0 = -1, a_i = -e_i, objective uniform on (-5, 5), x_1 fixed to 1 and the
/// rest in [-100, 100], alpha = 0.05. `convex` redraws weights until
/// min pi >= 2 alpha; otherwise until min pi < 2 alpha.
BenchmarkInstance gen_benchmark(int K, int n, std::uint64_t seed, bool convex);
Json benchmark_metadata(const BenchmarkInstance& inst);

const std::vector<std::string>& experiment_ids();

/// Runs one experiment, writes its CSV/JSON artifacts into out_dir and
/// returns the summary (which embeds the effective config).
Json run_experiment(const std::string& id, const Json& config, const std::string& out_dir);

Json run_chisq_asymptotics(const Json& config, const std::string& out_dir);
Json run_gmd_asymptotics(const Json& config, const std::string& out_dir);
Json run_condnum_fit(const Json& config, const std::string& out_dir);
Json run_bb_benchmark(const Json& config, const std::string& out_dir);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, signs fixed).
Matrix random_orthogonal(Eigen::Index m, std::mt19937_64& rng);

}  // namespace qccp
