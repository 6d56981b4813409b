#include "nestavg/nested_design.hpp"

#include <algorithm>
#include <string>

namespace nestavg {

namespace {
constexpr double kRankTol = 1e-10;
}

int NestedDesign::max_group_size() const {
  int v = 0;
  for (int m = 1; m <= q(); ++m) v = std::max(v, group_size(m));
  return v;
}

void NestedDesign::check_group(int m) const {
  if (m < 1 || m > q())
    throw IndexError("group index " + std::to_string(m) + " outside 1.." +
                     std::to_string(q()));
}

void NestedDesign::check_len(const Eigen::VectorXd& v) const {
  if (v.size() != n_)
    throw DimensionError("vector length " + std::to_string(v.size()) +
                         " does not match n=" + std::to_string(n_));
}

Eigen::VectorXd NestedDesign::project_increment(int m, const Eigen::VectorXd& v) const {
  check_group(m);
  check_len(v);
  const auto Qm = Q_.middleCols(group_offset(m), group_size(m));
  return Qm * (Qm.transpose() * v);
}

Eigen::VectorXd NestedDesign::project_prefix(int m, const Eigen::VectorXd& v) const {
  if (m < 0 || m > q())
    throw IndexError("prefix index " + std::to_string(m) + " outside 0.." +
                     std::to_string(q()));
  check_len(v);
  if (m == 0) return Eigen::VectorXd::Zero(n_);
  const auto Qm = Q_.leftCols(nu_[m]);
  return Qm * (Qm.transpose() * v);
}

Eigen::VectorXd NestedDesign::quad_form_increments(const Eigen::VectorXd& mu) const {
  check_len(mu);
  Eigen::VectorXd out(q());
  for (int m = 1; m <= q(); ++m) {
    const auto Qm = Q_.middleCols(group_offset(m), group_size(m));
    out[m - 1] = (Qm.transpose() * mu).squaredNorm();
  }
  return out;
}

NestedDesign build_design(Eigen::MatrixXd X, const std::vector<int>& nu) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (nu.empty()) throw DimensionError("empty boundary list");
  int prev = 0;
  for (int b : nu) {
    if (b <= prev) throw DimensionError("boundaries must be strictly increasing from 1");
    prev = b;
  }
  if (nu.back() != p)
    throw DimensionError("last boundary " + std::to_string(nu.back()) +
                         " must equal p=" + std::to_string(p));
  if (p >= n)
    throw DimensionError("need p < n, got p=" + std::to_string(p) +
                         ", n=" + std::to_string(n));

  NestedDesign d;
  d.n_ = n;
  d.p_ = p;
  d.bounds_ = nu;
  d.nu_.resize(nu.size() + 1);
  d.nu_[0] = 0;
  std::copy(nu.begin(), nu.end(), d.nu_.begin() + 1);
  d.Q_ = Eigen::MatrixXd(n, p);

  const int q = static_cast<int>(nu.size());
  for (int m = 1; m <= q; ++m) {
    const int off = d.nu_[m - 1];
    const int g = d.nu_[m] - d.nu_[m - 1];
    Eigen::MatrixXd B = X.middleCols(off, g);
    Eigen::VectorXd orig_norm = B.colwise().norm();

    // two passes are enough to restore orthogonality to working precision
    for (int pass = 0; pass < 2 && off > 0; ++pass) {
      const auto Qprev = d.Q_.leftCols(off);
      B.noalias() -= Qprev * (Qprev.transpose() * B);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    const auto& R = qr.matrixR();
    const auto& perm = qr.colsPermutation().indices();
    for (int j = 0; j < g; ++j) {
      const double resid = std::abs(R(j, j));
      const double base = orig_norm[perm[j]];
      if (resid < kRankTol * (base > 0.0 ? base : 1.0))
        throw RankDeficientError(
            m, "group " + std::to_string(m) + " adds no new direction (column " +
                   std::to_string(off + perm[j] + 1) + ")");
    }
    Eigen::MatrixXd Qb = qr.householderQ() * Eigen::MatrixXd::Identity(n, g);
    for (int j = 0; j < g; ++j)
      if (R(j, j) < 0.0) Qb.col(j) = -Qb.col(j);
    d.Q_.middleCols(off, g) = Qb;
  }

  d.X_ = std::move(X);
  return d;
}

MeanModel make_mean_model(const NestedDesign& d, Eigen::VectorXd beta) {
  if (beta.size() != d.p())
    throw DimensionError("beta length " + std::to_string(beta.size()) +
                         " does not match p=" + std::to_string(d.p()));
  MeanModel mm;
  mm.mu = d.X() * beta;
  mm.beta = std::move(beta);
  return mm;
}

}  // namespace nestavg
