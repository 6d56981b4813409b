#pragma once

#include <Eigen/Dense>

#include "nestavg/errors.hpp"

namespace nestavg {

enum class WeightSet { simplex, box, grid };

// Candidate-model weights tagged with the feasible set they came from.
struct WeightVector {
  Eigen::VectorXd w;
  WeightSet set = WeightSet::simplex;
  int grid_N = 0;  // only for WeightSet::grid

  static WeightVector point_mass(int M, int m, WeightSet set = WeightSet::simplex,
                                 int grid_N = 0);

  // throws DimensionError when w violates its set's membership conditions
  void validate(double tol = 1e-10) const;
};

// gamma_m = sum_{j >= m} w_j
Eigen::VectorXd cum_weights(const Eigen::VectorXd& w);

// inverse map: w_m = gamma_m - gamma_{m+1}, gamma_{M+1} = 0
Eigen::VectorXd weights_from_gamma(const Eigen::VectorXd& gamma);

}  // namespace nestavg
