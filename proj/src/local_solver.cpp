#include "qccp/error.hpp"
#include "solver_detail.hpp"

#include <algorithm>
#include <cmath>

namespace qccp {

LocalResult solve_local(const ProblemSpec& problem, const LinearMomentData& data, const LocalOptions& opts) {
  problem.validate();
  const detail::FreeMap map(problem.box);
  const auto terms = detail::cone_terms(data, map);
  const Eigen::Index nz = map.size();
  const auto K = static_cast<Eigen::Index>(problem.K());

  // y coordinates with a degenerate interval are constants
  std::vector<Eigen::Index> yfree;
  Vector yconst = problem.y_lower;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (problem.y_lower[i] < problem.y_upper[i]) yfree.push_back(i);
  }
  const auto ny = static_cast<Eigen::Index>(yfree.size());
  std::vector<Eigen::Index> ypos(static_cast<std::size_t>(K), -1);
  for (Eigen::Index k = 0; k < ny; ++k) ypos[static_cast<std::size_t>(yfree[static_cast<std::size_t>(k)])] = nz + k;

  auto y_of = [&](const Vector& w) {
    Vector y = yconst;
    for (Eigen::Index k = 0; k < ny; ++k) y[yfree[static_cast<std::size_t>(k)]] = w[nz + k];
    return y;
  };

  BarrierProblem bp;
  bp.cost = Vector::Zero(nz + ny);
  bp.cost.head(nz) = map.restrict(problem.objective.tail(problem.objective.size() - 1));
  bp.lower.resize(nz + ny);
  bp.upper.resize(nz + ny);
  bp.lower.head(nz) = map.lower;
  bp.upper.head(nz) = map.upper;
  for (Eigen::Index k = 0; k < ny; ++k) {
    bp.lower[nz + k] = problem.y_lower[yfree[static_cast<std::size_t>(k)]];
    bp.upper[nz + k] = problem.y_upper[yfree[static_cast<std::size_t>(k)]];
  }
  const Eigen::Index N = nz + ny;
  for (Eigen::Index i = 0; i < K; ++i) {
    const detail::ConeTerm* t = &terms[static_cast<std::size_t>(i)];
    const Eigen::Index yp = ypos[static_cast<std::size_t>(i)];
    const double yc = yconst[i];
    bp.constraints.push_back([t, yp, yc, nz, N](const Vector& w, Vector* grad, Matrix* hess) {
      const Vector z = w.head(nz);
      const double yi = yp >= 0 ? w[yp] : yc;
      const double q = std_normal_quantile(yi);
      Vector gs;
      Matrix hs;
      const double s = t->s(z, (grad || hess) ? &gs : nullptr, hess ? &hs : nullptr);
      if (grad) {
        *grad = Vector::Zero(N);
        grad->head(nz) = q * gs + t->nu_r;
        if (yp >= 0) (*grad)[yp] = s / std_normal_pdf(q);
      }
      if (hess) {
        *hess = Matrix::Zero(N, N);
        hess->topLeftCorner(nz, nz) = q * hs;
        if (yp >= 0) {
          const double phi = std_normal_pdf(q);
          hess->block(0, yp, nz, 1) = gs / phi;
          hess->block(yp, 0, 1, nz) = gs.transpose() / phi;
          (*hess)(yp, yp) = s * q / (phi * phi);
        }
      }
      return q * s + t->mean(z);
    });
  }
  {
    const Vector pi = problem.mix.weights();
    const double need = 1.0 - problem.alpha;
    double fixed_part = 0.0;
    Vector gy = Vector::Zero(N);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Eigen::Index yp = ypos[static_cast<std::size_t>(i)];
      if (yp >= 0) gy[yp] = -pi[i];
      else fixed_part += pi[i] * yconst[i];
    }
    bp.constraints.push_back([gy, need, fixed_part, N](const Vector& w, Vector* grad, Matrix* hess) {
      if (grad) *grad = gy;
      if (hess) *hess = Matrix::Zero(N, N);
      return need - fixed_part + gy.dot(w);
    });
  }

  std::vector<Vector> xstarts;
  for (const auto& x : opts.extra_starts) xstarts.push_back(map.restrict(x));
  std::mt19937_64 rng(opts.seed);
  if (opts.n_multistart > 0) xstarts.push_back(map.center());
  for (int s = 1; s < opts.n_multistart; ++s) xstarts.push_back(map.random_point(rng));

  BarrierOptions bo;
  bo.tol = opts.tol;
  const double offset = problem.objective.dot(map.base);
  LocalResult best;
  for (const auto& z0 : xstarts) {
    Vector w0(N);
    w0.head(nz) = z0;
    const Vector xh = map.xhat(z0);
    for (Eigen::Index k = 0; k < ny; ++k) {
      const auto i = static_cast<std::size_t>(yfree[static_cast<std::size_t>(k)]);
      const double sd = data.sd(i, xh);
      const double target = sd > 0.0 ? std_normal_cdf(-data.mean(i, xh) / sd) : 0.5;
      w0[nz + k] = std::clamp(target, bp.lower[nz + k], bp.upper[nz + k]);
    }
    BarrierResult r;
    if (N == 0) continue;
    r = barrier_minimize(bp, w0, bo);
    if (r.status == BarrierStatus::Infeasible || !(r.max_constraint <= 0.0)) continue;
    ++best.starts_converged;
    const double v = r.value + offset;
    if (v < best.value) {
      best.value = v;
      best.x = map.x(r.z.head(nz));
      best.y = y_of(r.z);
      best.feasible = true;
    }
  }
  return best;
}

}  // namespace qccp
