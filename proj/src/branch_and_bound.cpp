#include "qccp/error.hpp"
#include "solver_detail.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <optional>

namespace qccp {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

struct Node {
  Vector l, u;
  double bound = -kInf;
  Vector x;  // relaxed solution of the parent chain, used as a warm start
};

using Key = std::pair<double, std::size_t>;

struct Incumbent {
  bool have = false;
  Vector x, y, l, u;
  double value = kInf;
};

class Search {
 public:
  Search(const ProblemSpec& p, const BBOptions& o)
      : p_(p), o_(o), data_(build_linear_moments(p.family, p.mix)), pi_(p.mix.weights()),
        need_(1.0 - p.alpha), start_(std::chrono::steady_clock::now()) {}

  SolveResult run();

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void log(const Vector& l, const Vector& u, double bound, const char* action) {
    if (!o_.trace) return;
    res_.trace.push_back({res_.iterations, l, u, bound, action});
  }

  // y witnessing exact feasibility of x inside [l, u] with h - h^r <= eps.
  std::optional<Vector> witness(const Vector& x, const Vector& l, const Vector& u) const {
    const Vector xh = augment(x);
    Vector y(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double mean = data_.mean(k, xh);
      const double sd = data_.sd(k, xh);
      if (sd > 0.0) {
        y[i] = std::min({u[i], std_normal_cdf(-mean / sd), std_normal_cdf(std_normal_quantile(l[i]) + o_.epsilon / sd)});
      } else {
        if (mean > 0.0) return std::nullopt;
        y[i] = u[i];
      }
      if (y[i] < l[i]) return std::nullopt;
    }
    if (pi_.dot(y) < need_) return std::nullopt;
    return y;
  }

  bool push(Node n) {
    if (inc_.have && n.bound >= inc_.value) return false;
    open_.emplace(Key{n.bound, seq_++}, std::move(n));
    return true;
  }

  void prune() {
    if (!inc_.have) return;
    open_.erase(open_.lower_bound(Key{inc_.value, 0}), open_.end());
  }

  bool offer(const Vector& x, const Vector& y, const Vector& l, const Vector& u, double value) {
    if (inc_.have && !(value < inc_.value)) return false;
    inc_ = {true, x, y, l, u, value};
    prune();
    return true;
  }

  void polish() {
    LocalOptions lo;
    lo.n_multistart = 0;
    lo.extra_starts = {inc_.x};
    lo.seed = o_.seed;
    const LocalResult r = solve_local(p_, data_, lo);
    ++res_.subproblem_solves;
    if (r.feasible && r.value < inc_.value - 1e-12 * std::max(1.0, std::abs(inc_.value))) {
      offer(r.x, r.y, r.y, r.y, r.value);
      log(r.y, r.y, r.value, "polish");
    }
  }

  RelaxOptions relax_opts(const Vector& warm) {
    RelaxOptions ro;
    ro.n_multistart = o_.n_multistart;
    ro.seed = o_.seed * 0x9E3779B97F4A7C15ULL + seq_;
    if (warm.size()) ro.warm_start = warm;
    return ro;
  }

  // Fix y on the hyperplane between l and the eps/2-feasible corner and solve
  // the resulting cone program; a cheap upper bound in convex mode.
  void repair(const Vector& x, const Vector& l, const Vector& u) {
    if (!(l.array() >= 0.5).all()) return;
    const Vector xh = augment(x);
    Vector ye(l.size());
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      const double sd = data_.sd(static_cast<std::size_t>(i), xh);
      ye[i] = sd > 0.0 ? std::min(u[i], std_normal_cdf(std_normal_quantile(l[i]) + 0.5 * o_.epsilon / sd)) : u[i];
    }
    const double lo = pi_.dot(l), hi = pi_.dot(ye);
    if (hi < need_) return;
    const double theta = hi > lo ? std::clamp((need_ - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    const Vector yfix = l + theta * (ye - l);
    const SubproblemResult r = solve_fixed_y(data_, p_.objective, p_.box, yfix, relax_opts(x));
    ++res_.subproblem_solves;
    if (r.status != SubStatus::Optimal) return;
    if (auto y = witness(r.x, l, u)) {
      if (offer(r.x, *y, l, u, r.value)) {
        log(l, u, r.value, "repair");
        polish();
      }
    }
  }

  // Handles a solved upper child. Returns nothing; updates state.
  void absorb(Node child, const SubproblemResult& r, double parent_bound) {
    ++res_.nodes;
    ++res_.subproblem_solves;
    res_.heuristic = res_.heuristic || r.heuristic;
    if (r.status == SubStatus::Infeasible) {
      log(child.l, child.u, kInf, "infeasible");
      return;
    }
    if (r.status == SubStatus::Failed) {
      child.bound = parent_bound;
      log(child.l, child.u, parent_bound, "unsolved");
      push(std::move(child));
      return;
    }
    if (inc_.have && r.value >= inc_.value) {
      log(child.l, child.u, r.value, "pruned");
      return;
    }
    if (auto y = witness(r.x, child.l, child.u)) {
      offer(r.x, *y, child.l, child.u, r.value);
      log(child.l, child.u, r.value, "incumbent");
      polish();
      return;
    }
    child.bound = std::max(r.value, parent_bound);
    child.x = r.x;
    log(child.l, child.u, child.bound, "branch");
    const Vector l = child.l, u = child.u, x = r.x;
    push(std::move(child));
    repair(x, l, u);
  }

  const ProblemSpec& p_;
  BBOptions o_;
  LinearMomentData data_;
  Vector pi_;
  double need_;
  std::chrono::steady_clock::time_point start_;
  std::map<Key, Node> open_;
  std::size_t seq_ = 0;
  Incumbent inc_;
  SolveResult res_;
};

struct Task {
  Node child;
  double parent_bound;
  SubproblemResult result;
};

SolveResult Search::run() {
  LocalOptions lo;
  lo.n_multistart = o_.n_multistart;
  lo.seed = o_.seed;
  const LocalResult local = solve_local(p_, data_, lo);
  ++res_.subproblem_solves;
  if (local.feasible) {
    res_.local_value = local.value;
    offer(local.x, local.y, local.y, local.y, local.value);
    log(local.y, local.y, local.value, "local");
  }

  Node root{p_.y_lower, p_.y_upper, -kInf, Vector()};
  bool root_ok = tighten_cube(pi_, p_.alpha, root.l, root.u);
  SubproblemResult rr;
  if (root_ok) {
    rr = solve_relaxed(data_, p_.objective, p_.box, root.l, root.u, p_.alpha, relax_opts(inc_.have ? inc_.x : Vector()));
    ++res_.nodes;
    ++res_.subproblem_solves;
    res_.heuristic = rr.heuristic;
  }
  if (!root_ok || rr.status == SubStatus::Infeasible) {
    log(root.l, root.u, kInf, "root-infeasible");
    if (!inc_.have) {
      res_.status = SolveStatus::Infeasible;
      res_.seconds = elapsed();
      return res_;
    }
    res_.heuristic = true;
  } else if (rr.status == SubStatus::Failed) {
    log(root.l, root.u, -kInf, "root-unsolved");
    push(root);
  } else {
    log(root.l, root.u, rr.value, "root");
    if (auto y = witness(rr.x, root.l, root.u)) {
      offer(rr.x, *y, root.l, root.u, rr.value);
      polish();
    } else {
      root.bound = rr.value;
      root.x = rr.x;
      const Vector x = rr.x;
      push(root);
      repair(x, root.l, root.u);
    }
  }

  res_.status = SolveStatus::Optimal;
  const int workers = std::max(1, o_.workers);
  while (!open_.empty()) {
    const double lb = open_.begin()->first.first;
    if (inc_.have && inc_.value - lb <= o_.gap_tol * std::abs(inc_.value)) break;
    if (res_.nodes >= o_.max_nodes || elapsed() > o_.max_seconds) {
      res_.status = SolveStatus::IterationLimit;
      break;
    }
    std::vector<Task> tasks;
    for (int w = 0; w < workers && !open_.empty(); ++w) {
      Node node = std::move(open_.begin()->second);
      open_.erase(open_.begin());
      ++res_.iterations;
      if ((node.u - node.l).norm() <= o_.edge_tol * node.l.norm()) {
        log(node.l, node.u, node.bound, "too-small");
        continue;
      }
      Eigen::Index k = 0;
      (node.u - node.l).maxCoeff(&k);
      const double mid = 0.5 * (node.l[k] + node.u[k]);
      Node up{node.l, node.u, node.bound, node.x};
      up.l[k] = mid;
      Node down{node.l, node.u, node.bound, node.x};
      down.u[k] = mid;
      const bool keep_down = tighten_cube(pi_, p_.alpha, down.l, down.u);
      if (pi_.dot(up.l) > need_) {
        log(node.l, node.u, node.bound, "split-lower-only");
        if (keep_down) push(std::move(down));
        continue;
      }
      if (pi_.dot(down.u) < need_) {
        log(node.l, node.u, node.bound, "split-upper-only");
      } else {
        log(node.l, node.u, node.bound, "split");
        if (keep_down) push(std::move(down));
      }
      if (!tighten_cube(pi_, p_.alpha, up.l, up.u)) {
        ++res_.nodes;
        log(up.l, up.u, kInf, "infeasible");
        continue;
      }
      tasks.push_back({std::move(up), node.bound, {}});
    }
    auto solve = [this](Task& t, RelaxOptions ro) {
      t.result = solve_relaxed(data_, p_.objective, p_.box, t.child.l, t.child.u, p_.alpha, ro);
    };
    if (workers == 1 || tasks.size() <= 1) {
      for (auto& t : tasks) solve(t, relax_opts(t.child.x));
    } else {
      std::vector<std::future<void>> futs;
      for (auto& t : tasks) futs.push_back(std::async(std::launch::async, solve, std::ref(t), relax_opts(t.child.x)));
      for (auto& f : futs) f.get();
    }
    for (auto& t : tasks) absorb(std::move(t.child), t.result, t.parent_bound);
  }

  if (!inc_.have) {
    if (res_.status == SolveStatus::Optimal) res_.status = SolveStatus::Infeasible;
  } else {
    res_.x = inc_.x;
    res_.y = inc_.y;
    res_.value = inc_.value;
    res_.node_lower = inc_.l;
    res_.node_upper = inc_.u;
    const Vector gap = eval_h(data_, inc_.x, inc_.y) - eval_h_relaxed(data_, inc_.x, inc_.l);
    res_.max_gap = gap.maxCoeff();
  }
  res_.lower_bound = open_.empty() ? res_.value : std::min(open_.begin()->first.first, res_.value);
  res_.seconds = elapsed();
  return res_;
}

}  // namespace

SolveResult branch_and_bound(const ProblemSpec& problem, const BBOptions& opts) {
  problem.validate();
  if (!(opts.epsilon > 0.0)) throw_input("branch_and_bound: epsilon must be > 0");
  if (!(opts.gap_tol >= 0.0) || !(opts.edge_tol >= 0.0)) throw_input("branch_and_bound: tolerances must be >= 0");
  if (opts.workers < 1) throw_input("branch_and_bound: workers must be >= 1");
  Search s(problem, opts);
  return s.run();
}

}  // namespace qccp
