#pragma once

#include <Eigen/Dense>

#include "nestavg/nested_design.hpp"

namespace nestavg {

// Per-model fit state shared by the selection criteria and the jackknife
// averagers: residual vectors e_m = (I - P_m) y, leverages h_i^{(m)}
// (diagonal of P_m), and the leave-one-out residual sums.
struct FitCache {
  int n = 0;
  int M = 0;
  double yty = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd nu;        // nu_m, m = 1..M
  Eigen::VectorXd rss;       // ||e_m||^2, nonincreasing
  Eigen::VectorXd cv;        // sum_i (e_{m,i}/(1-h_i^{(m)}))^2
  Eigen::MatrixXd resid;     // n x M
  Eigen::MatrixXd loo_resid; // n x M, e_{m,i}/(1-h_i^{(m)})
  Eigen::MatrixXd leverage;  // n x M

  // rss_M / (n - nu_M), the Mallows plug-in from the largest candidate
  double sigma2_hat() const;
};

// throws LeverageError(m) when some h_i^{(m)} >= 1 - 1e-12
FitCache fit_nested(const Eigen::VectorXd& y, const NestedDesign& d, int M);

enum class Criterion { aic, bic, cp, loocv };

struct Selection {
  int chosen = 0;          // 1-based, smallest index on ties
  Eigen::VectorXd scores;  // per-model criterion values
};

Selection select(const FitCache& fc, Criterion crit);
Selection select(const Eigen::VectorXd& y, const NestedDesign& d, int M,
                 Criterion crit);

}  // namespace nestavg
