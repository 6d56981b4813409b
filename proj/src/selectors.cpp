#include "nestavg/selectors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nestavg {

double FitCache::sigma2_hat() const {
  const double dof = static_cast<double>(n) - nu[M - 1];
  if (dof <= 0.0) throw DimensionError("largest candidate leaves no residual dof");
  return rss[M - 1] / dof;
}

FitCache fit_nested(const Eigen::VectorXd& y, const NestedDesign& d, int M) {
  if (M < 1 || M > d.q())
    throw IndexError("candidate count M=" + std::to_string(M) + " outside 1..q");
  if (y.size() != d.n()) throw DimensionError("response length mismatch");

  const int n = d.n();
  FitCache fc;
  fc.n = n;
  fc.M = M;
  fc.y = y;
  fc.yty = y.squaredNorm();
  fc.nu.resize(M);
  fc.rss.resize(M);
  fc.cv.resize(M);
  fc.resid.resize(n, M);
  fc.loo_resid.resize(n, M);
  fc.leverage.resize(n, M);

  Eigen::VectorXd r = y;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  for (int m = 1; m <= M; ++m) {
    const auto Qm = d.group_cols(m);
    r -= Qm * (Qm.transpose() * r);
    h += Qm.rowwise().squaredNorm();
    fc.nu[m - 1] = d.nu(m);
    fc.rss[m - 1] = r.squaredNorm();
    fc.resid.col(m - 1) = r;
    fc.leverage.col(m - 1) = h;
    for (int i = 0; i < n; ++i) {
      const double one_minus = 1.0 - h[i];
      if (one_minus < 1e-12)
        throw LeverageError(m, "leverage " + std::to_string(h[i]) +
                                   " at observation " + std::to_string(i + 1) +
                                   ", model " + std::to_string(m));
      fc.loo_resid(i, m - 1) = r[i] / one_minus;
    }
    fc.cv[m - 1] = fc.loo_resid.col(m - 1).squaredNorm();
  }
  return fc;
}

Selection select(const FitCache& fc, Criterion crit) {
  const double n = static_cast<double>(fc.n);
  Selection sel;
  sel.scores.resize(fc.M);
  const double s2 = crit == Criterion::cp ? fc.sigma2_hat() : 0.0;
  for (int m = 0; m < fc.M; ++m) {
    const double mean_rss = std::max(fc.rss[m] / n, 1e-300);
    switch (crit) {
      case Criterion::aic:
        sel.scores[m] = n * std::log(mean_rss) + 2.0 * fc.nu[m];
        break;
      case Criterion::bic:
        sel.scores[m] = n * std::log(mean_rss) + std::log(n) * fc.nu[m];
        break;
      case Criterion::cp:
        sel.scores[m] = fc.rss[m] + 2.0 * s2 * fc.nu[m];
        break;
      case Criterion::loocv:
        sel.scores[m] = fc.cv[m];
        break;
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < fc.M; ++m) {
    if (sel.scores[m] < best) {
      best = sel.scores[m];
      sel.chosen = m + 1;
    }
  }
  return sel;
}

Selection select(const Eigen::VectorXd& y, const NestedDesign& d, int M,
                 Criterion crit) {
  if (M < 2) throw IndexError("selection needs at least 2 candidates");
  return select(fit_nested(y, d, M), crit);
}

}  // namespace nestavg
