#include "qccp/error.hpp"
#include "solver_detail.hpp"

#include <algorithm>
#include <cmath>

namespace qccp {

namespace detail {

FreeMap::FreeMap(const Box& box) {
  const Eigen::Index n = box.lower.size();
  base = Vector::Zero(n + 1);
  base[0] = 1.0;
  std::vector<double> lo, hi;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (box.lower[j] == box.upper[j]) {
      base[j + 1] = box.lower[j];
    } else {
      free.push_back(j);
      lo.push_back(box.lower[j]);
      hi.push_back(box.upper[j]);
    }
  }
  lower = Eigen::Map<Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  upper = Eigen::Map<Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
}

Vector FreeMap::xhat(const Vector& z) const {
  Vector xh = base;
  for (std::size_t k = 0; k < free.size(); ++k) xh[free[k] + 1] = z[static_cast<Eigen::Index>(k)];
  return xh;
}

Vector FreeMap::x(const Vector& z) const { return xhat(z).tail(base.size() - 1); }

Vector FreeMap::restrict(const Vector& x) const {
  Vector z(size());
  for (std::size_t k = 0; k < free.size(); ++k) z[static_cast<Eigen::Index>(k)] = x[free[k]];
  return z;
}

Vector FreeMap::random_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector z(size());
  for (Eigen::Index k = 0; k < size(); ++k) z[k] = lower[k] + u(rng) * (upper[k] - lower[k]);
  return z;
}

ConeTerm::ConeTerm(const LinearMomentData& data, std::size_t i, const FreeMap& map) {
  const Matrix& L = data.L[i];
  Lr.resize(map.size(), L.cols());
  nu_r.resize(map.size());
  for (std::size_t k = 0; k < map.free.size(); ++k) {
    Lr.row(static_cast<Eigen::Index>(k)) = L.row(map.free[k] + 1);
    nu_r[static_cast<Eigen::Index>(k)] = data.nu[i][map.free[k] + 1];
  }
  Lbase = L.transpose() * map.base;
  nu_base = data.nu[i].dot(map.base);
  Mr = Lr * Lr.transpose();
  eta = 1e-14 * (1.0 + data.M[i].trace());
}

double ConeTerm::s(const Vector& z, Vector* grad, Matrix* hess) const {
  const Vector w = Lbase + Lr.transpose() * z;
  const double s = std::sqrt(w.squaredNorm() + eta);
  if (grad || hess) {
    const Vector Mw = Lr * w;
    if (grad) *grad = Mw / s;
    if (hess) *hess = Mr / s - (Mw * Mw.transpose()) / (s * s * s);
  }
  return s;
}

std::vector<ConeTerm> cone_terms(const LinearMomentData& data, const FreeMap& map) {
  std::vector<ConeTerm> terms;
  for (std::size_t i = 0; i < data.size(); ++i) terms.emplace_back(data, i, map);
  return terms;
}

}  // namespace detail

namespace {

using detail::ConeTerm;
using detail::FreeMap;

void check_sizes(const LinearMomentData& data, const Vector& objective, const Box& box) {
  const auto n = static_cast<Eigen::Index>(data.n());
  if (objective.size() != n + 1) throw_input("subproblem: objective must have n+1 entries");
  if (box.lower.size() != n || box.upper.size() != n) throw_input("subproblem: box must have n entries");
}

// min b^T xh s.t. kappa_i s_i + mean_i <= 0; convex when every kappa_i >= 0.
SubproblemResult solve_cone(const LinearMomentData& data, const Vector& objective, const Box& box,
                            const Vector& kappa, const RelaxOptions& opts) {
  const FreeMap map(box);
  const auto terms = detail::cone_terms(data, map);
  SubproblemResult out;
  const bool convex = (kappa.array() >= 0.0).all();
  out.heuristic = !convex;

  if (map.size() == 0) {
    const Vector z;
    bool ok = true;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      ok = ok && kappa[static_cast<Eigen::Index>(i)] * terms[i].s(z, nullptr, nullptr) + terms[i].mean(z) <= 0.0;
    }
    out.status = ok ? SubStatus::Optimal : SubStatus::Infeasible;
    out.x = map.x(z);
    out.value = objective.dot(map.base);
    return out;
  }

  BarrierProblem bp;
  bp.cost = map.restrict(objective.tail(objective.size() - 1));
  bp.lower = map.lower;
  bp.upper = map.upper;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double k = kappa[static_cast<Eigen::Index>(i)];
    const ConeTerm* t = &terms[i];
    bp.constraints.push_back([t, k](const Vector& z, Vector* grad, Matrix* hess) {
      Vector gs;
      Matrix hs;
      const double s = t->s(z, grad ? &gs : nullptr, hess ? &hs : nullptr);
      if (grad) *grad = k * gs + t->nu_r;
      if (hess) *hess = k * hs;
      return k * s + t->mean(z);
    });
  }
  BarrierOptions bo;
  bo.tol = opts.tol;
  const double offset = objective.dot(map.base);

  std::vector<Vector> starts;
  if (opts.warm_start) starts.push_back(map.restrict(*opts.warm_start));
  starts.push_back(map.center());
  if (!convex) {
    std::mt19937_64 rng(opts.seed);
    for (int s = 0; s < opts.n_multistart; ++s) starts.push_back(map.random_point(rng));
  }

  bool any_infeasible_certificate = false;
  for (const auto& z0 : starts) {
    const BarrierResult r = barrier_minimize(bp, z0, bo);
    out.newton_steps += r.newton_steps;
    if (r.status == BarrierStatus::Infeasible) {
      any_infeasible_certificate = true;
      if (convex) break;  // phase I is global for convex constraints
      continue;
    }
    if (r.status == BarrierStatus::Optimal || r.max_constraint <= 0.0) {
      const double v = r.value + offset;
      if (v < out.value) {
        out.value = v;
        out.x = map.x(r.z);
        out.status = r.status == BarrierStatus::Optimal ? SubStatus::Optimal : SubStatus::Failed;
      }
    }
    if (convex && out.status == SubStatus::Optimal) break;
  }
  if (out.x.size() == 0) {
    out.status = any_infeasible_certificate ? SubStatus::Infeasible : SubStatus::Failed;
    out.value = kInf;
  }
  return out;
}

}  // namespace

bool tighten_cube(const Vector& weights, double alpha, Vector& l, const Vector& u) {
  const double need = 1.0 - alpha;
  const double top = weights.dot(u);
  if (top < need) return false;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double rest = top - weights[i] * u[i];
    const double li = (need - rest) / weights[i];
    if (li > l[i]) l[i] = std::min(li, u[i]);
  }
  return true;
}

SubproblemResult solve_relaxed(const LinearMomentData& data, const Vector& objective, const Box& box,
                               const Vector& l, const Vector& u, double alpha, const RelaxOptions& opts) {
  check_sizes(data, objective, box);
  if (static_cast<std::size_t>(l.size()) != data.size() || static_cast<std::size_t>(u.size()) != data.size()) {
    throw_input("solve_relaxed: cube must have K entries");
  }
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (!(l[i] > 0.0 && l[i] <= u[i] && u[i] < 1.0)) throw_input("solve_relaxed: cube must lie inside (0,1)^K");
  }
  if (data.weights.dot(u) < 1.0 - alpha) {
    SubproblemResult out;
    out.status = SubStatus::Infeasible;
    return out;
  }
  Vector kappa(l.size());
  for (Eigen::Index i = 0; i < l.size(); ++i) kappa[i] = std_normal_quantile(l[i]);
  return solve_cone(data, objective, box, kappa, opts);
}

SubproblemResult solve_fixed_y(const LinearMomentData& data, const Vector& objective, const Box& box,
                               const Vector& y, const RelaxOptions& opts) {
  check_sizes(data, objective, box);
  if (static_cast<std::size_t>(y.size()) != data.size()) throw_input("solve_fixed_y: y must have K entries");
  Vector kappa(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) kappa[i] = std_normal_quantile(y[i]);
  return solve_cone(data, objective, box, kappa, opts);
}

}  // namespace qccp
