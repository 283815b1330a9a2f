#pragma once

#include "qccp/diagnostics.hpp"
#include "qccp/gmm.hpp"
#include "qccp/quadform.hpp"
#include "qccp/solver.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace qccp {

using Json = nlohmann::json;

// Parsers throw input errors naming the JSON path of the offending value.
Vector vector_from_json(const Json& j, const std::string& path);
Matrix matrix_from_json(const Json& j, const std::string& path);
Json to_json(const Vector& v);
Json to_json(const Matrix& m);

Json mixture_to_json(const GaussianMixture& mix);
GaussianMixture mixture_from_json(const Json& j, const std::string& path = "");

Json quadform_to_json(const QuadraticForm& q);
QuadraticForm quadform_from_json(const Json& j, const std::string& path = "");

Json problem_to_json(const ProblemSpec& p);
ProblemSpec problem_from_json(const Json& j, const std::string& path = "");

Json fit_result_to_json(const FitResult& r);
Json solve_result_to_json(const SolveResult& r, bool include_trace);
Json moments_to_json(const MixtureMoments& mm, const UnivariateGaussianMixture& u);
Json univariate_to_json(const UnivariateGaussianMixture& u);
Json condition_report_to_json(const AsymptoticConditionReport& r);
Json rate_bound_to_json(const RateBoundReport& r);

double number_at(const Json& j, const std::string& key, const std::string& path);

std::string read_text(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_text(const std::string& path, const std::string& content);
Json read_json(const std::string& path);

/// Numeric CSV, one row per sample. A first row that does not parse as
/// numbers is taken as a header.
Matrix read_csv_matrix(const std::string& path);

/// Minimal CSV builder with fixed 17-significant-digit formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }
  void save(const std::string& path) const { write_text(path, out_); }

 private:
  std::size_t cols_;
  std::string out_;
};

std::string fmt(double v);
std::string fmt(long long v);

}  // namespace qccp
