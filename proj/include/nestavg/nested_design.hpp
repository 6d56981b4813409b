#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nestavg/errors.hpp"

namespace nestavg {

// Ordered nested candidate models over grouped predictors.  Group m spans
// design columns nu[m-1]+1 .. nu[m] (1-based), and the concatenated Q blocks
// give an incremental orthonormal basis: span(Q cols 1..nu[m]) equals
// span(X cols 1..nu[m]) for every m, so (P_m - P_{m-1}) v is a cheap
// block matvec and no n x n matrix is ever formed.
//
// Immutable after build_design(); all member functions are const and safe to
// call concurrently.
class NestedDesign {
 public:
  NestedDesign() = default;  // empty shell; populate via build_design

  int n() const { return n_; }
  int p() const { return p_; }
  int q() const { return static_cast<int>(nu_.size()) - 1; }

  // nu_m for m = 1..q
  const std::vector<int>& boundaries() const { return bounds_; }

  int nu(int m) const { return nu_[static_cast<std::size_t>(m)]; }  // m in 0..q
  int group_size(int m) const { return nu_[m] - nu_[m - 1]; }
  int group_offset(int m) const { return nu_[m - 1]; }  // 0-based column
  int max_group_size() const;

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::MatrixXd& Q() const { return Q_; }

  Eigen::Ref<const Eigen::MatrixXd> group_cols(int m) const {
    check_group(m);
    return Q_.middleCols(group_offset(m), group_size(m));
  }

  // (P_m - P_{m-1}) v
  Eigen::VectorXd project_increment(int m, const Eigen::VectorXd& v) const;

  // P_m v, m in 0..q (P_0 = 0)
  Eigen::VectorXd project_prefix(int m, const Eigen::VectorXd& v) const;

  // entry m-1 holds mu' (P_m - P_{m-1}) mu = ||Q_m' mu||^2, m = 1..q
  Eigen::VectorXd quad_form_increments(const Eigen::VectorXd& mu) const;

  friend NestedDesign build_design(Eigen::MatrixXd X, const std::vector<int>& nu);

 private:
  void check_group(int m) const;
  void check_len(const Eigen::VectorXd& v) const;

  int n_ = 0;
  int p_ = 0;
  std::vector<int> nu_;      // with leading sentinel nu_[0] = 0
  std::vector<int> bounds_;  // nu_1..nu_q as given
  Eigen::MatrixXd X_;
  Eigen::MatrixXd Q_;
};

// Blockwise Householder QR with a re-orthogonalization pass against all
// earlier groups.  Throws RankDeficientError(m) when a group column's
// residual norm after projection falls below 1e-10 of its original norm,
// DimensionError on malformed boundaries or p >= n.
NestedDesign build_design(Eigen::MatrixXd X, const std::vector<int>& nu);

struct MeanModel {
  Eigen::VectorXd beta;
  Eigen::VectorXd mu;  // X beta, cached
};

MeanModel make_mean_model(const NestedDesign& d, Eigen::VectorXd beta);

}  // namespace nestavg
