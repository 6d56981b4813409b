#pragma once

#include <Eigen/Dense>

#include "nestavg/nested_design.hpp"
#include "nestavg/selectors.hpp"
#include "nestavg/weights.hpp"

namespace nestavg {

struct MaFit {
  WeightVector w;
  double criterion = 0.0;
  double sigma2_hat = 0.0;  // MMA plug-in; 0 for JMA
};

// Mallows criterion C(w) = ||y - F w||^2 + 2 sigma2_hat nu'w over the simplex,
// with F the stacked candidate fits.  The nested structure gives
// (F'F)_{kl} = s_{min(k,l)} and (F'y)_k = s_k for s_k = ||P_k y||^2, so the
// QP is assembled without forming F.
MaFit fit_mma(const FitCache& fc);
MaFit fit_mma(const Eigen::VectorXd& y, const NestedDesign& d, int M);

// Jackknife criterion CV(w) = ||y - sum_m w_m mutilde_m||^2 with mutilde_m
// the leave-one-out fits; on the simplex this is ||sum_m w_m etilde_m||^2.
// The box variant (no total-weight constraint) is JMA2.
MaFit fit_jma(const FitCache& fc, WeightSet set = WeightSet::simplex);
MaFit fit_jma(const Eigen::VectorXd& y, const NestedDesign& d, int M,
              WeightSet set = WeightSet::simplex);

// P(w) y = sum_m gamma_m (P_m - P_{m-1}) y
Eigen::VectorXd averaged_fit(const NestedDesign& d, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w);

}  // namespace nestavg
