#pragma once

#include <Eigen/Dense>
#include <vector>

#include "json.hpp"
#include "nestavg/errors.hpp"
#include "nestavg/nested_design.hpp"
#include "nestavg/rng.hpp"

namespace nestavg {

// Error covariance Omega as a composable model.  Structured matvecs keep the
// trace computations exact in O(n * block) per basis column; the full matrix
// is only materialized on demand for small-n tests.
class CovarianceSpec {
 public:
  enum class Kind { scalar, diagonal, ar1, sum };

  static CovarianceSpec scalar(double sigma2);
  static CovarianceSpec diagonal(Eigen::VectorXd d);
  static CovarianceSpec ar1(double rho, double var = 1.0);
  static CovarianceSpec sum(std::vector<CovarianceSpec> terms);

  Kind kind() const { return kind_; }
  double scalar_var() const { return sigma2_; }
  const Eigen::VectorXd& diag() const { return d_; }
  double rho() const { return rho_; }
  double ar1_var() const { return var_; }
  const std::vector<CovarianceSpec>& terms() const { return terms_; }

  // Omega x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // x' Omega x
  double quad(const Eigen::VectorXd& x) const;
  // draw eps with E eps = 0, Cov eps = Omega
  Eigen::VectorXd sample(int n, RngStream& rng) const;

  Eigen::MatrixXd materialize(int n) const;

  nlohmann::json to_config() const;
  static CovarianceSpec from_config(const nlohmann::json& j);

 private:
  CovarianceSpec() = default;

  Kind kind_ = Kind::scalar;
  double sigma2_ = 1.0;       // scalar
  Eigen::VectorXd d_;         // diagonal
  double rho_ = 0.0;          // ar1
  double var_ = 1.0;          // ar1 marginal variance
  std::vector<CovarianceSpec> terms_;
};

// tr((P_m - P_{m-1}) Omega); exactly sigma2 * group size for the scalar kind,
// and additive across sum terms.
double trace_increment(const CovarianceSpec& cov, const NestedDesign& d, int m);

// tr(P_m Omega), m in 0..q
double trace_hat(const CovarianceSpec& cov, const NestedDesign& d, int m);

}  // namespace nestavg
