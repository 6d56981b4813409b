#include "nestavg/qp.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <vector>

namespace nestavg::qp {

namespace {

double objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                 const Eigen::VectorXd& w) {
  return 0.5 * w.dot(H * w) + g.dot(w);
}

struct Prepared {
  Eigen::MatrixXd H;      // symmetrized, PSD-clipped
  Eigen::MatrixXd Hreg;   // + tiny ridge when singular, for the KKT solves
  double scale = 1.0;
};

Prepared prepare(const QpProblem& p) {
  const int M = static_cast<int>(p.H.rows());
  if (p.H.cols() != M || p.g.size() != M)
    throw DimensionError("QP dimensions do not agree");
  Prepared out;
  out.H = 0.5 * (p.H + p.H.transpose());
  out.scale = std::max(1.0, out.H.cwiseAbs().maxCoeff());
  if (M <= 200) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.H);
    const double lo = es.eigenvalues().minCoeff();
    if (lo < -1e-8 * out.scale)
      throw NotPsdError("H indefinite: min eigenvalue " + std::to_string(lo));
    if (lo < 1e-12 * out.scale) {
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
      out.H = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
      out.H = 0.5 * (out.H + out.H.transpose());
      // ridge makes the working-set solves unique (min-norm tilt) without
      // moving the minimizer beyond ~1e-12 relative
      out.Hreg = out.H + (1e-12 * out.scale) * Eigen::MatrixXd::Identity(M, M);
      return out;
    }
  }
  out.Hreg = out.H;
  return out;
}

double simplex_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                            const Eigen::VectorXd& w) {
  const Eigen::VectorXd d = H * w + g;
  const double dscale = std::max(1.0, d.cwiseAbs().maxCoeff());
  double lam = std::numeric_limits<double>::infinity();
  for (int i = 0; i < w.size(); ++i) lam = std::min(lam, d[i]);
  double r = std::abs(w.sum() - 1.0);
  r = std::max(r, -std::min(0.0, w.minCoeff()));
  for (int i = 0; i < w.size(); ++i)
    if (w[i] > 1e-10) r = std::max(r, (d[i] - lam) / dscale);
  return r;
}

double box_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& w) {
  const Eigen::VectorXd d = H * w + g;
  const double dscale = std::max(1.0, d.cwiseAbs().maxCoeff());
  double r = std::max(-std::min(0.0, w.minCoeff()),
                      std::max(0.0, w.maxCoeff() - 1.0));
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] <= 1e-10)
      r = std::max(r, -std::min(0.0, d[i]) / dscale);
    else if (w[i] >= 1.0 - 1e-10)
      r = std::max(r, std::max(0.0, d[i]) / dscale);
    else
      r = std::max(r, std::abs(d[i]) / dscale);
  }
  return r;
}

Solution solve_simplex_active_set(const Prepared& pre, const Eigen::VectorXd& g,
                                  int max_iter) {
  const int M = static_cast<int>(g.size());
  const Eigen::MatrixXd& H = pre.Hreg;

  // start at the best vertex, smallest index on ties
  int k0 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < M; ++m) {
    const double v = 0.5 * H(m, m) + g[m];
    if (v < best - 1e-15 * pre.scale) {
      best = v;
      k0 = m;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
  w[k0] = 1.0;
  std::vector<int> free_set{k0};

  if (max_iter <= 0) max_iter = 100 + 10 * M * M;
  int it = 0;
  for (; it < max_iter; ++it) {
    const int f = static_cast<int>(free_set.size());
    Eigen::MatrixXd kkt(f + 1, f + 1);
    Eigen::VectorXd rhs(f + 1);
    for (int a = 0; a < f; ++a) {
      for (int b = 0; b < f; ++b) kkt(a, b) = H(free_set[a], free_set[b]);
      kkt(a, f) = 1.0;
      kkt(f, a) = 1.0;
      rhs[a] = -g[free_set[a]];
    }
    kkt(f, f) = 0.0;
    rhs[f] = 1.0;
    Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);

    bool feasible = true;
    for (int a = 0; a < f; ++a)
      if (sol[a] < -1e-12) feasible = false;

    if (!feasible) {
      // partial step toward the subproblem solution; drop the blocker
      double alpha = 1.0;
      int blocker = -1;
      for (int a = 0; a < f; ++a) {
        const int i = free_set[a];
        if (sol[a] < w[i]) {
          const double denom = w[i] - sol[a];
          if (denom > 0.0) {
            const double step = sol[a] < 0.0 ? w[i] / denom : 1.0;
            if (step < alpha - 1e-15) {
              alpha = step;
              blocker = a;
            }
          }
        }
      }
      if (blocker < 0) blocker = 0;
      for (int a = 0; a < f; ++a) {
        const int i = free_set[a];
        w[i] += alpha * (sol[a] - w[i]);
      }
      w[free_set[blocker]] = 0.0;
      free_set.erase(free_set.begin() + blocker);
      if (free_set.empty()) {
        // numerical corner: restart from the best remaining vertex
        int k = 0;
        double b2 = std::numeric_limits<double>::infinity();
        for (int m = 0; m < M; ++m) {
          const double v = 0.5 * H(m, m) + g[m];
          if (w[m] == 0.0 && v < b2) {
            b2 = v;
            k = m;
          }
        }
        w.setZero();
        w[k] = 1.0;
        free_set.push_back(k);
      }
      continue;
    }

    for (int a = 0; a < f; ++a) w[free_set[a]] = std::max(0.0, sol[a]);
    for (int m = 0; m < M; ++m)
      if (std::find(free_set.begin(), free_set.end(), m) == free_set.end())
        w[m] = 0.0;

    const Eigen::VectorXd d = H * w + g;
    double lam = 0.0;
    for (int i : free_set) lam += d[i];
    lam /= static_cast<double>(f);

    int enter = -1;
    double worst = -1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff());
    for (int m = 0; m < M; ++m) {
      if (std::find(free_set.begin(), free_set.end(), m) != free_set.end()) continue;
      const double mult = d[m] - lam;
      if (mult < worst) {
        worst = mult;
        enter = m;
      }
    }
    if (enter < 0) break;
    free_set.push_back(enter);
    std::sort(free_set.begin(), free_set.end());
  }

  w = w.cwiseMax(0.0);
  w /= w.sum();

  Solution s;
  s.w.w = w;
  s.w.set = WeightSet::simplex;
  s.value = objective(pre.H, g, w);
  s.kkt_residual = simplex_kkt_residual(pre.H, g, w);
  s.iterations = it;
  return s;
}

Solution solve_box_active_set(const Prepared& pre, const Eigen::VectorXd& g,
                              int max_iter) {
  const int M = static_cast<int>(g.size());
  const Eigen::MatrixXd& H = pre.Hreg;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
  std::vector<int> state(M, 0);  // 0 at-lower, 1 free, 2 at-upper
  if (max_iter <= 0) max_iter = 100 + 10 * M * M;
  int it = 0;
  for (; it < max_iter; ++it) {
    std::vector<int> free_set;
    for (int m = 0; m < M; ++m)
      if (state[m] == 1) free_set.push_back(m);
    const int f = static_cast<int>(free_set.size());

    if (f > 0) {
      Eigen::MatrixXd Hff(f, f);
      Eigen::VectorXd rhs(f);
      for (int a = 0; a < f; ++a) {
        for (int b = 0; b < f; ++b) Hff(a, b) = H(free_set[a], free_set[b]);
        double lin = g[free_set[a]];
        for (int m = 0; m < M; ++m)
          if (state[m] == 2) lin += H(free_set[a], m);
        rhs[a] = -lin;
      }
      Eigen::VectorXd x = Hff.completeOrthogonalDecomposition().solve(rhs);

      // longest feasible step from w_F toward x
      double alpha = 1.0;
      int blocker = -1;
      int hit_bound = 0;
      for (int a = 0; a < f; ++a) {
        const int i = free_set[a];
        const double dir = x[a] - w[i];
        if (dir < 0.0 && x[a] < -1e-12) {
          const double step = (w[i] - 0.0) / -dir;
          if (step < alpha - 1e-15) {
            alpha = step;
            blocker = i;
            hit_bound = 0;
          }
        } else if (dir > 0.0 && x[a] > 1.0 + 1e-12) {
          const double step = (1.0 - w[i]) / dir;
          if (step < alpha - 1e-15) {
            alpha = step;
            blocker = i;
            hit_bound = 2;
          }
        }
      }
      for (int a = 0; a < f; ++a) {
        const int i = free_set[a];
        w[i] += alpha * (x[a] - w[i]);
      }
      if (blocker >= 0) {
        w[blocker] = hit_bound == 2 ? 1.0 : 0.0;
        state[blocker] = hit_bound;
        continue;
      }
    }

    const Eigen::VectorXd d = H * w + g;
    const double tol = 1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff());
    int enter = -1;
    double worst = -tol;
    for (int m = 0; m < M; ++m) {
      double viol = 0.0;
      if (state[m] == 0)
        viol = d[m];  // want d >= 0 at the lower bound
      else if (state[m] == 2)
        viol = -d[m];  // want d <= 0 at the upper bound
      else
        continue;
      if (viol < worst) {
        worst = viol;
        enter = m;
      }
    }
    if (enter < 0) break;
    state[enter] = 1;
  }

  w = w.cwiseMax(0.0).cwiseMin(1.0);
  Solution s;
  s.w.w = w;
  s.w.set = WeightSet::box;
  s.value = objective(pre.H, g, w);
  s.kkt_residual = box_kkt_residual(pre.H, g, w);
  s.iterations = it;
  return s;
}

// conditional gradient with exact line search, for large M
Solution solve_frank_wolfe(const Prepared& pre, const Eigen::VectorXd& g,
                           WeightSet set) {
  const int M = static_cast<int>(g.size());
  const Eigen::MatrixXd& H = pre.H;
  Eigen::VectorXd w;
  if (set == WeightSet::simplex) {
    w = Eigen::VectorXd::Zero(M);
    int k0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int m = 0; m < M; ++m) {
      const double v = 0.5 * H(m, m) + g[m];
      if (v < best) {
        best = v;
        k0 = m;
      }
    }
    w[k0] = 1.0;
  } else {
    w = Eigen::VectorXd::Zero(M);
  }
  const int max_iter = 200000;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd d = H * w + g;
    Eigen::VectorXd s(M);
    if (set == WeightSet::simplex) {
      int k = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int m = 0; m < M; ++m)
        if (d[m] < best) {
          best = d[m];
          k = m;
        }
      s.setZero();
      s[k] = 1.0;
    } else {
      for (int m = 0; m < M; ++m) s[m] = d[m] < 0.0 ? 1.0 : 0.0;
    }
    const Eigen::VectorXd dir = s - w;
    const double gap = -d.dot(dir);
    if (gap <= 1e-12 * pre.scale) break;
    const double curv = dir.dot(H * dir);
    double step = curv > 0.0 ? std::min(1.0, gap / curv) : 1.0;
    w += step * dir;
  }
  Solution sol;
  sol.w.w = w;
  sol.w.set = set;
  if (set == WeightSet::simplex) sol.w.w /= sol.w.w.sum();
  sol.value = objective(pre.H, g, sol.w.w);
  sol.kkt_residual = set == WeightSet::simplex
                         ? simplex_kkt_residual(pre.H, g, sol.w.w)
                         : box_kkt_residual(pre.H, g, sol.w.w);
  sol.iterations = it;
  return sol;
}

void enumerate_rec(int pos, int M, int left, int N, Eigen::VectorXd& w,
                   const std::function<void(const Eigen::VectorXd&)>& fn) {
  if (pos == M - 1) {
    w[pos] = static_cast<double>(left) / N;
    fn(w);
    return;
  }
  for (int c = 0; c <= left; ++c) {
    w[pos] = static_cast<double>(c) / N;
    enumerate_rec(pos + 1, M, left - c, N, w, fn);
  }
}

Solution solve_grid(const Prepared& pre, const QpProblem& p, const Options& opt) {
  const int M = static_cast<int>(p.g.size());
  const int N = p.grid_N;
  if (N < 1) throw DomainError("grid weight set needs N >= 1");
  const long count = grid_cardinality(M, N);
  Solution s;
  s.w.set = WeightSet::grid;
  s.w.grid_N = N;
  if (count <= opt.enum_budget) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_w;
    enumerate_grid(M, N, [&](const Eigen::VectorXd& w) {
      const double v = objective(pre.H, p.g, w);
      if (v < best) {
        best = v;
        best_w = w;
      }
    });
    s.w.w = best_w;
    s.value = best;
    s.iterations = static_cast<int>(std::min<long>(count, INT_MAX));
    return s;
  }
  if (!opt.allow_heuristic)
    throw TooLargeGridError("grid enumeration needs " + std::to_string(count) +
                            " points, budget " + std::to_string(opt.enum_budget));
  // largest-remainder rounding of the continuous solution
  QpProblem cont{p.H, p.g, WeightSet::simplex, 0};
  Solution rel = solve(cont, opt);
  Eigen::VectorXd scaled = rel.w.w * N;
  Eigen::VectorXi units(M);
  int total = 0;
  for (int m = 0; m < M; ++m) {
    units[m] = static_cast<int>(std::floor(scaled[m]));
    total += units[m];
  }
  std::vector<int> order(M);
  for (int m = 0; m < M; ++m) order[m] = m;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scaled[a] - std::floor(scaled[a]) > scaled[b] - std::floor(scaled[b]);
  });
  for (int r = 0; total < N && r < M; ++r) {
    units[order[r]] += 1;
    ++total;
  }
  for (int r = M - 1; total > N && r >= 0; --r) {
    if (units[order[r]] > 0) {
      units[order[r]] -= 1;
      --total;
    }
  }
  s.w.w = units.cast<double>() / N;
  s.value = objective(pre.H, p.g, s.w.w);
  s.heuristic = true;
  s.iterations = rel.iterations;
  return s;
}

}  // namespace

long grid_cardinality(int M, int N) {
  // C(M+N-1, M-1)
  long r = 1;
  for (int i = 1; i <= M - 1; ++i) {
    if (r > LONG_MAX / (N + i)) return LONG_MAX;
    r = r * (N + i) / i;
  }
  return r;
}

void enumerate_grid(int M, int N,
                    const std::function<void(const Eigen::VectorXd&)>& fn) {
  if (M < 1) throw DimensionError("enumerate_grid needs M >= 1");
  Eigen::VectorXd w(M);
  enumerate_rec(0, M, N, N, w, fn);
}

Solution solve(const QpProblem& p, const Options& opt) {
  Prepared pre = prepare(p);
  const int M = static_cast<int>(p.g.size());
  switch (p.set) {
    case WeightSet::grid:
      return solve_grid(pre, p, opt);
    case WeightSet::simplex:
      if (M > 200) return solve_frank_wolfe(pre, p.g, WeightSet::simplex);
      return solve_simplex_active_set(pre, p.g, opt.max_iter);
    case WeightSet::box:
      if (M > 200) return solve_frank_wolfe(pre, p.g, WeightSet::box);
      return solve_box_active_set(pre, p.g, opt.max_iter);
  }
  throw RunError("unreachable weight set");
}

}  // namespace nestavg::qp
