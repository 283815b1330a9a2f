#include "qccp/io.hpp"

#include "qccp/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qccp {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw_input("at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(path + "/" + key, "missing field");
  return *it;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

}  // namespace

double number_at(const Json& j, const std::string& key, const std::string& path) {
  return as_number(field(j, key, path), path + "/" + key);
}

Vector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_number(j[i], path + "/" + std::to_string(i));
  return v;
}

Matrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? (j[0].is_array() ? j[0].size() : 0) : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].size() != cols) bad(rp, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], rp + "/" + std::to_string(c));
    }
  }
  return m;
}

Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(to_json(Vector(m.row(r).transpose())));
  return j;
}

Json mixture_to_json(const GaussianMixture& mix) {
  Json comps = Json::array();
  for (const auto& c : mix.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", to_json(c.mean)}, {"cov", to_json(c.cov.mat())}});
  }
  return {{"dim", mix.dim()}, {"components", comps}};
}

GaussianMixture mixture_from_json(const Json& j, const std::string& path) {
  const Json& comps = field(j, "components", path);
  if (!comps.is_array() || comps.empty()) bad(path + "/components", "expected a non-empty array");
  std::vector<GaussianComponent> out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cp = path + "/components/" + std::to_string(i);
    GaussianComponent c;
    c.weight = number_at(comps[i], "weight", cp);
    c.mean = vector_from_json(field(comps[i], "mean", cp), cp + "/mean");
    try {
      c.cov = SymMatrix(matrix_from_json(field(comps[i], "cov", cp), cp + "/cov"));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Input) throw;
      bad(cp + "/cov", e.what());
    }
    out.push_back(std::move(c));
  }
  GaussianMixture mix(std::move(out));
  if (j.contains("dim") && as_number(j["dim"], path + "/dim") != static_cast<double>(mix.dim())) {
    bad(path + "/dim", "does not match the component dimension");
  }
  return mix;
}

Json quadform_to_json(const QuadraticForm& q) {
  return {{"A", to_json(q.A.mat())}, {"a", to_json(q.a)}, {"a0", q.a0}};
}

QuadraticForm quadform_from_json(const Json& j, const std::string& path) {
  const Vector a = vector_from_json(field(j, "a", path), path + "/a");
  Matrix A = Matrix::Zero(a.size(), a.size());
  if (j.contains("A") && !j["A"].is_null()) A = matrix_from_json(j["A"], path + "/A");
  const double a0 = j.contains("a0") ? as_number(j["a0"], path + "/a0") : 0.0;
  try {
    return QuadraticForm(SymMatrix(A), a, a0);
  } catch (const Error& e) {
    bad(path, e.what());
  }
}

Json problem_to_json(const ProblemSpec& p) {
  Json A = Json::array(), a = Json::array();
  for (std::size_t j = 0; j <= p.n(); ++j) {
    A.push_back(p.family.has_quadratic(j) ? to_json(p.family.A[j].mat()) : Json(nullptr));
    a.push_back(to_json(p.family.a[j]));
  }
  return {{"mixture", mixture_to_json(p.mix)},
          {"family", {{"A", A}, {"a", a}, {"scalars", to_json(p.family.scalars)}}},
          {"objective", to_json(p.objective)},
          {"box", {{"lower", to_json(p.box.lower)}, {"upper", to_json(p.box.upper)}}},
          {"alpha", p.alpha},
          {"y_lower", to_json(p.y_lower)},
          {"y_upper", to_json(p.y_upper)}};
}

ProblemSpec problem_from_json(const Json& j, const std::string& path) {
  ProblemSpec p;
  p.mix = mixture_from_json(field(j, "mixture", path), path + "/mixture");
  const std::string fp = path + "/family";
  const Json& fam = field(j, "family", path);
  const Json& aj = field(fam, "a", fp);
  if (!aj.is_array()) bad(fp + "/a", "expected an array of vectors");
  std::vector<Vector> a;
  for (std::size_t k = 0; k < aj.size(); ++k) a.push_back(vector_from_json(aj[k], fp + "/a/" + std::to_string(k)));
  std::vector<SymMatrix> A(a.size());
  if (fam.contains("A")) {
    const Json& Aj = fam["A"];
    if (!Aj.is_array() || Aj.size() != a.size()) bad(fp + "/A", "expected n+1 entries (matrix or null)");
    for (std::size_t k = 0; k < Aj.size(); ++k) {
      if (Aj[k].is_null()) continue;
      const std::string kp = fp + "/A/" + std::to_string(k);
      try {
        A[k] = SymMatrix(matrix_from_json(Aj[k], kp));
      } catch (const Error& e) {
        bad(kp, e.what());
      }
    }
  }
  Vector scalars = Vector::Zero(static_cast<Eigen::Index>(a.size()));
  if (fam.contains("scalars")) scalars = vector_from_json(fam["scalars"], fp + "/scalars");
  try {
    p.family = LinearQuadraticFamily(std::move(A), std::move(a), std::move(scalars));
  } catch (const Error& e) {
    bad(fp, e.what());
  }
  p.objective = vector_from_json(field(j, "objective", path), path + "/objective");
  const Json& box = field(j, "box", path);
  p.box.lower = vector_from_json(field(box, "lower", path + "/box"), path + "/box/lower");
  p.box.upper = vector_from_json(field(box, "upper", path + "/box"), path + "/box/upper");
  p.alpha = number_at(j, "alpha", path);
  set_default_y_cube(p);
  if (j.contains("y_lower")) p.y_lower = vector_from_json(j["y_lower"], path + "/y_lower");
  if (j.contains("y_upper")) p.y_upper = vector_from_json(j["y_upper"], path + "/y_upper");
  try {
    p.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return p;
}

Json fit_result_to_json(const FitResult& r) {
  Json conds = Json::array();
  for (const auto& c : r.mixture.components()) conds.push_back(condition_number(c.cov));
  return {{"mixture", mixture_to_json(r.mixture)},
          {"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},
          {"restart", r.restart},
          {"aic", r.aic},
          {"bic", r.bic},
          {"reseeded", r.reseeded},
          {"condition_numbers", conds},
          {"ll_trace", r.ll_trace}};
}

Json solve_result_to_json(const SolveResult& r, bool include_trace) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j = {{"status", to_string(r.status)},
            {"x", to_json(r.x)},
            {"value", num(r.value)},
            {"y", to_json(r.y)},
            {"node_lower", to_json(r.node_lower)},
            {"node_upper", to_json(r.node_upper)},
            {"max_gap", num(r.max_gap)},
            {"lower_bound", num(r.lower_bound)},
            {"local_value", num(r.local_value)},
            {"nodes", r.nodes},
            {"subproblem_solves", r.subproblem_solves},
            {"iterations", r.iterations},
            {"heuristic", r.heuristic},
            {"seconds", r.seconds}};
  if (include_trace) {
    Json t = Json::array();
    for (const auto& e : r.trace) {
      t.push_back({{"step", e.step}, {"l", to_json(e.l)}, {"u", to_json(e.u)}, {"bound", num(e.bound)}, {"action", e.action}});
    }
    j["trace"] = t;
  }
  return j;
}

Json univariate_to_json(const UnivariateGaussianMixture& u) {
  return {{"weights", to_json(u.weights())}, {"means", to_json(u.means())}, {"variances", to_json(u.variances())}};
}

Json moments_to_json(const MixtureMoments& mm, const UnivariateGaussianMixture& u) {
  return {{"mean", mm.mean}, {"variance", mm.variance}, {"components", univariate_to_json(u)}};
}

Json condition_report_to_json(const AsymptoticConditionReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json comps = Json::array();
  for (const auto& c : r.components) {
    comps.push_back({{"h", c.h},
                     {"min_abs_lambda", c.min_abs_lambda},
                     {"max_abs_lambda", c.max_abs_lambda},
                     {"ratio", num(c.ratio)},
                     {"stat3", num(c.stat3)},
                     {"stat4", num(c.stat4)},
                     {"small_rank", c.small_rank},
                     {"large_ratio", c.large_ratio}});
  }
  return {{"components", comps},
          {"rank_threshold", r.rank_threshold},
          {"ratio_threshold", r.ratio_threshold},
          {"any_flagged", r.any_flagged}};
}

Json rate_bound_to_json(const RateBoundReport& r) {
  return {{"alpha_bar", r.alpha_bar},   {"ratio", r.ratio}, {"bound_value", r.bound_value},
          {"premise_value", r.premise_value}, {"f3", r.f3}, {"f4", r.f4},
          {"non_convergent", r.non_convergent}, {"permutation", r.permutation}};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

Json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw_input(path + ": " + e.what());
  }
}

Matrix read_csv_matrix(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == cell.c_str() || (end && *end != '\0')) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw_input(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
    if (!rows.empty() && vals.size() != rows[0].size()) {
      throw_input(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(rows[0].size()) + " columns");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw_input(path + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long long v) { return std::to_string(v); }

CsvWriter::CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw_input("CsvWriter: row has wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
  return *this;
}

}  // namespace qccp
