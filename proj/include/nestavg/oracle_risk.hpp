#pragma once

#include <Eigen/Dense>
#include <string>

#include "nestavg/covariance.hpp"
#include "nestavg/nested_design.hpp"
#include "nestavg/weights.hpp"

namespace nestavg {

// Exact finite-sample risk state for one (design, covariance, mean) triple:
// per-group bias decrements b_m = mu'(P_m - P_{m-1})mu, variance increments
// v_m = tr((P_m - P_{m-1})Omega), the grouped variable importance
// theta_m = (b_m / n) / v_m, and the optimal single-model risks
//   R_n(m) = mu'(I - P_m)mu + tr(P_m Omega).
//
// gamma_raw_m = theta_m / (theta_m + 1/n) is the unconstrained per-group
// optimum; gamma_star keeps the sum-to-one convention gamma_star_1 = 1.
struct RiskProfile {
  int n = 0;
  int M = 0;  // candidate count, 2 <= M <= q
  Eigen::VectorXd bias_inc;
  Eigen::VectorXd var_inc;
  double resid_bias = 0.0;  // mu'(I - P_q)mu
  Eigen::VectorXd theta;
  Eigen::VectorXd gamma_raw;
  Eigen::VectorXd gamma_star;
  int d_n = 0;  // largest m with theta_m > 0 (0 when none)

  int q() const { return static_cast<int>(bias_inc.size()); }
  double b(int m) const { return bias_inc[m - 1]; }
  double v(int m) const { return var_inc[m - 1]; }

  // mu'(I - P_m)mu, m in 0..q
  double tail_bias(int m) const { return suffix_bias_[m]; }
  // tr(P_m Omega), m in 0..q
  double cum_var(int m) const { return prefix_var_[m]; }
  // R_n(m), m in 1..q
  double risk_at(int m) const { return tail_bias(m) + cum_var(m); }

  // nonincreasing over 1..upto with multiplicative slack 1e-12
  bool theta_nonincreasing(int upto = 0) const;

  void finalize();  // fills theta, gammas, suffix/prefix caches

 private:
  Eigen::VectorXd suffix_bias_;  // size q+1
  Eigen::VectorXd prefix_var_;   // size q+1
};

RiskProfile build_profile(const NestedDesign& d, const CovarianceSpec& cov,
                          const Eigen::VectorXd& mu, int M);

// analytic constructor for synthetic (orthonormal / diagonal) studies
RiskProfile make_profile(int n, int M, Eigen::VectorXd bias_inc,
                         Eigen::VectorXd var_inc, double resid_bias = 0.0);

// theta_m for m = 1..q
Eigen::VectorXd gvi(const NestedDesign& d, const CovarianceSpec& cov,
                    const Eigen::VectorXd& mu);

struct MsRisk {
  Eigen::VectorXd risks;  // R_n(m), m = 1..M
  int m_star = 0;         // argmin over 1..M, smallest index on ties
  int m_star_star = 0;    // argmin over 1..q
  bool min_rule_agrees = false;  // m_star == min(M, m_star_star)
};
MsRisk risk_ms(const RiskProfile& p);

// R_n(w) through the orthogonal-increment expansion; valid for any w
// (simplex, box, or grid tagged), evaluated in the completed-square form
//   f_m(gamma) = (b_m + v_m)(gamma - gamma_raw_m)^2 + gamma_raw_m v_m.
double risk_ma(const RiskProfile& p, const WeightVector& w);

struct OracleResult {
  WeightVector w;
  double risk = 0.0;
  bool fallback = false;  // theta was not monotone; solved numerically
};

// successive differences of gamma_star; exact when theta is nonincreasing,
// otherwise a simplex QP on the same objective
OracleResult oracle_simplex(const RiskProfile& p);

// per-group gamma_raw without the total-weight constraint
OracleResult oracle_box(const RiskProfile& p);

struct GridOracleResult {
  WeightVector w;
  double risk = 0.0;
  bool fallback = false;
  int i_nN = 0;  // rounding level of the last candidate, ceil(N gamma* - 1/2)
};

// per-coordinate rounding of gamma_star to the nearest i/N with exact
// midpoints rounded down; exhaustive enumeration when theta is not monotone
GridOracleResult oracle_grid(const RiskProfile& p, int N);

// m_n(z): largest m with theta_m > z/((1-z)n); 1 for z >= 1, 0 when none
int threshold_index(const RiskProfile& p, double z);

struct DeltaGap {
  double delta = 0.0;        // R_n(m*) - R_n(w*)
  double ratio = 0.0;        // delta / R_n(m*)
  double ms_term = 0.0;      // sum over m <= m* of v_m^2/(b_m+v_m)
  double tail_term = 0.0;    // sum over m > m* of b_m^2/(b_m+v_m)
  double direct = 0.0;       // subtraction along the independent path
  bool decomposition_valid = false;
  bool theorem1_bound_ok = false;  // delta <= R_n(m*)/2
};
DeltaGap delta_gap(const RiskProfile& p);

// CSV rows m,bias_inc,var_inc,theta,gamma_star,R_ms for m = 1..q
std::string profile_csv(const RiskProfile& p);

}  // namespace nestavg
