#include "nestavg/averagers.hpp"

#include <algorithm>

#include "nestavg/qp.hpp"

namespace nestavg {

MaFit fit_mma(const FitCache& fc) {
  const int M = fc.M;
  Eigen::VectorXd s(M);  // ||P_k y||^2
  for (int k = 0; k < M; ++k) s[k] = fc.yty - fc.rss[k];
  const double s2 = fc.sigma2_hat();

  qp::QpProblem prob;
  prob.H.resize(M, M);
  for (int k = 0; k < M; ++k)
    for (int l = 0; l < M; ++l) prob.H(k, l) = 2.0 * s[std::min(k, l)];
  prob.g = -2.0 * s + 2.0 * s2 * fc.nu;
  prob.set = WeightSet::simplex;

  const auto sol = qp::solve(prob);
  MaFit fit;
  fit.w = sol.w;
  fit.criterion = sol.value + fc.yty;
  fit.sigma2_hat = s2;
  return fit;
}

MaFit fit_mma(const Eigen::VectorXd& y, const NestedDesign& d, int M) {
  return fit_mma(fit_nested(y, d, M));
}

MaFit fit_jma(const FitCache& fc, WeightSet set) {
  if (set == WeightSet::grid)
    throw DomainError("jackknife averaging is defined on simplex or box");
  const int M = fc.M;
  // mutilde_m = y - etilde_m; on the simplex ||y - Mt w||^2 = ||E w||^2
  const Eigen::MatrixXd Mt = fc.y.replicate(1, M) - fc.loo_resid;

  qp::QpProblem prob;
  prob.H = 2.0 * (Mt.transpose() * Mt);
  prob.g = -2.0 * (Mt.transpose() * fc.y);
  prob.set = set;

  const auto sol = qp::solve(prob);
  MaFit fit;
  fit.w = sol.w;
  fit.criterion = sol.value + fc.yty;
  return fit;
}

MaFit fit_jma(const Eigen::VectorXd& y, const NestedDesign& d, int M,
              WeightSet set) {
  return fit_jma(fit_nested(y, d, M), set);
}

Eigen::VectorXd averaged_fit(const NestedDesign& d, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w) {
  const int M = static_cast<int>(w.size());
  if (M < 1 || M > d.q()) throw DimensionError("weight count outside 1..q");
  const Eigen::VectorXd gamma = cum_weights(w);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d.n());
  for (int m = 1; m <= M; ++m) {
    const auto Qm = d.group_cols(m);
    out.noalias() += gamma[m - 1] * (Qm * (Qm.transpose() * y));
  }
  return out;
}

}  // namespace nestavg
