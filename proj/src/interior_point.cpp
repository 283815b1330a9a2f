#include "qccp/interior_point.hpp"

#include "qccp/error.hpp"

#include <algorithm>
#include <cmath>

namespace qccp {

namespace {

struct Barrier {
  const BarrierProblem& p;
  double t = 1.0;

  std::size_t term_count() const {
    std::size_t n = p.constraints.size();
    for (Eigen::Index i = 0; i < p.lower.size(); ++i) {
      n += std::isfinite(p.lower[i]) ? 1 : 0;
      n += std::isfinite(p.upper[i]) ? 1 : 0;
    }
    return n;
  }

  bool in_box(const Vector& z) const {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (!(z[i] > p.lower[i] && z[i] < p.upper[i])) return false;
    }
    return true;
  }

  // +inf outside the strict interior
  double value(const Vector& z) const {
    if (!in_box(z)) return kInf;
    double f = t * p.cost.dot(z);
    for (const auto& g : p.constraints) {
      const double v = g(z, nullptr, nullptr);
      if (!(v < 0.0)) return kInf;
      f -= std::log(-v);
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (std::isfinite(p.lower[i])) f -= std::log(z[i] - p.lower[i]);
      if (std::isfinite(p.upper[i])) f -= std::log(p.upper[i] - z[i]);
    }
    return f;
  }

  double derivatives(const Vector& z, Vector& grad, Matrix& hess) const {
    const Eigen::Index n = z.size();
    grad = t * p.cost;
    hess = Matrix::Zero(n, n);
    double f = t * p.cost.dot(z);
    Vector gg(n);
    Matrix gh(n, n);
    for (const auto& g : p.constraints) {
      const double v = g(z, &gg, &gh);
      const double inv = -1.0 / v;
      f -= std::log(-v);
      grad += inv * gg;
      hess += inv * gh;
      hess.noalias() += (inv * inv) * (gg * gg.transpose());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(p.lower[i])) {
        const double d = z[i] - p.lower[i];
        f -= std::log(d);
        grad[i] -= 1.0 / d;
        hess(i, i) += 1.0 / (d * d);
      }
      if (std::isfinite(p.upper[i])) {
        const double d = p.upper[i] - z[i];
        f -= std::log(d);
        grad[i] += 1.0 / d;
        hess(i, i) += 1.0 / (d * d);
      }
    }
    return f;
  }

  // largest step keeping z + a dz strictly inside the box
  double box_step(const Vector& z, const Vector& dz) const {
    double a = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (dz[i] < 0.0 && std::isfinite(p.lower[i])) a = std::min(a, 0.99 * (p.lower[i] - z[i]) / dz[i]);
      if (dz[i] > 0.0 && std::isfinite(p.upper[i])) a = std::min(a, 0.99 * (p.upper[i] - z[i]) / dz[i]);
    }
    return a;
  }
};

Vector newton_direction(Matrix hess, const Vector& grad) {
  const Eigen::Index n = grad.size();
  const double scale = std::max(1e-300, hess.diagonal().cwiseAbs().maxCoeff());
  double tau = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Matrix h = hess;
    if (tau > 0.0) h.diagonal().array() += tau;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
      Vector d = -llt.solve(grad);
      if (d.allFinite()) return d;
    }
    tau = tau == 0.0 ? 1e-10 * scale : tau * 10.0;
  }
  return -grad / scale;
  (void)n;
}

// Centers at the current t. Returns Newton steps taken. `stop` may end early.
template <class Stop>
int center(const Barrier& b, Vector& z, int max_newton, Stop stop) {
  Vector grad;
  Matrix hess;
  int steps = 0;
  for (; steps < max_newton; ++steps) {
    const double f = b.derivatives(z, grad, hess);
    const Vector dz = newton_direction(hess, grad);
    const double slope = grad.dot(dz);
    if (-slope * 0.5 <= 1e-10) break;
    double a = b.box_step(z, dz);
    Vector trial = z + a * dz;
    double ft = b.value(trial);
    int halvings = 0;
    while (!(ft <= f + 0.25 * a * slope) && halvings < 80) {
      a *= 0.5;
      trial = z + a * dz;
      ft = b.value(trial);
      ++halvings;
    }
    if (!(ft <= f + 0.25 * a * slope)) break;
    z = trial;
    if (stop(z)) {
      ++steps;
      break;
    }
    if (a * dz.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
      ++steps;
      break;
    }
  }
  return steps;
}

double max_constraint(const BarrierProblem& p, const Vector& z) {
  double worst = -kInf;
  for (const auto& g : p.constraints) worst = std::max(worst, g(z, nullptr, nullptr));
  return worst;
}

Vector push_inside(const BarrierProblem& p, Vector z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double lo = p.lower[i], hi = p.upper[i];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double margin = 1e-3 * (hi - lo);
      z[i] = std::clamp(z[i], lo + margin, hi - margin);
    } else if (std::isfinite(lo)) {
      z[i] = std::max(z[i], lo + 1e-3 * (1.0 + std::abs(lo)));
    } else if (std::isfinite(hi)) {
      z[i] = std::min(z[i], hi - 1e-3 * (1.0 + std::abs(hi)));
    }
  }
  return z;
}

// Barrier outer loop on a strictly feasible start.
BarrierResult run_phase2(const BarrierProblem& p, Vector z, const BarrierOptions& opts, int steps) {
  Barrier b{p, opts.t0};
  const double terms = static_cast<double>(b.term_count());
  BarrierResult res;
  res.status = BarrierStatus::NotConverged;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    steps += center(b, z, opts.max_newton, [](const Vector&) { return false; });
    const double obj = p.cost.dot(z);
    if (terms / b.t <= opts.tol * std::max(1.0, std::abs(obj))) {
      res.status = BarrierStatus::Optimal;
      break;
    }
    b.t *= opts.mu;
  }
  res.z = z;
  res.value = p.cost.dot(z);
  res.max_constraint = p.constraints.empty() ? -kInf : max_constraint(p, z);
  res.newton_steps = steps;
  return res;
}

}  // namespace

BarrierResult barrier_minimize(const BarrierProblem& p, const Vector& start, const BarrierOptions& opts) {
  const Eigen::Index n = p.cost.size();
  if (p.lower.size() != n || p.upper.size() != n || start.size() != n) {
    throw_input("barrier_minimize: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(p.lower[i] < p.upper[i])) throw_input("barrier_minimize: empty box");
  }
  Vector z = push_inside(p, start);
  if (p.constraints.empty()) return run_phase2(p, z, opts, 0);

  const double g0 = max_constraint(p, z);
  if (g0 < 0.0) return run_phase2(p, z, opts, 0);

  // Phase I: minimize s subject to g_j(z) - s <= 0.
  const double scale = 1.0 + std::abs(g0);
  BarrierProblem p1;
  p1.cost = Vector::Zero(n + 1);
  p1.cost[n] = 1.0;
  p1.lower.resize(n + 1);
  p1.upper.resize(n + 1);
  p1.lower.head(n) = p.lower;
  p1.upper.head(n) = p.upper;
  p1.lower[n] = -kInf;
  p1.upper[n] = kInf;
  for (const auto& g : p.constraints) {
    p1.constraints.push_back([g, n](const Vector& w, Vector* grad, Matrix* hess) {
      const Vector zz = w.head(n);
      Vector gg;
      Matrix gh;
      const double v = g(zz, grad ? &gg : nullptr, hess ? &gh : nullptr);
      if (grad) {
        grad->resize(n + 1);
        grad->head(n) = gg;
        (*grad)[n] = -1.0;
      }
      if (hess) {
        *hess = Matrix::Zero(n + 1, n + 1);
        hess->topLeftCorner(n, n) = gh;
      }
      return v - w[n];
    });
  }
  Vector w(n + 1);
  w.head(n) = z;
  w[n] = g0 + 1.0 + 0.1 * std::abs(g0);
  Barrier b{p1, opts.t0};
  const double terms = static_cast<double>(b.term_count());
  const double target = -1e-6 * scale;
  int steps = 0;
  bool found = false;
  auto feasible_now = [&](const Vector& ww) { return max_constraint(p, ww.head(n)) < target; };
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    steps += center(b, w, opts.max_newton, feasible_now);
    if (feasible_now(w)) {
      found = true;
      break;
    }
    const double gap = terms / b.t;
    // s is an upper bound on min max g; s - gap a lower bound (convex case)
    if (w[n] - gap > 1e-9 * scale) break;
    if (gap <= 1e-9 * scale) {
      found = max_constraint(p, w.head(n)) < 0.0;
      break;
    }
    b.t *= opts.mu;
  }
  if (!found) {
    BarrierResult res;
    res.status = BarrierStatus::Infeasible;
    res.z = w.head(n);
    res.value = p.cost.dot(res.z);
    res.max_constraint = max_constraint(p, res.z);
    res.newton_steps = steps;
    return res;
  }
  return run_phase2(p, w.head(n), opts, steps);
}

}  // namespace qccp
