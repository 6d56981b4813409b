#include "nestavg/weights.hpp"

#include <cmath>
#include <string>

namespace nestavg {

WeightVector WeightVector::point_mass(int M, int m, WeightSet set, int grid_N) {
  if (m < 1 || m > M) throw IndexError("point mass index outside 1..M");
  WeightVector wv;
  wv.w = Eigen::VectorXd::Zero(M);
  wv.w[m - 1] = 1.0;
  wv.set = set;
  wv.grid_N = set == WeightSet::grid ? (grid_N > 0 ? grid_N : 1) : 0;
  return wv;
}

void WeightVector::validate(double tol) const {
  if (w.size() == 0) throw DimensionError("empty weight vector");
  if ((w.array() < -tol).any() || (w.array() > 1.0 + tol).any())
    throw DimensionError("weights outside [0,1]");
  if (set == WeightSet::simplex || set == WeightSet::grid) {
    if (std::abs(w.sum() - 1.0) > tol)
      throw DimensionError("weights do not sum to one");
  }
  if (set == WeightSet::grid) {
    if (grid_N < 1) throw DimensionError("grid weights need N >= 1");
    for (int m = 0; m < w.size(); ++m) {
      const double scaled = w[m] * grid_N;
      if (std::abs(scaled - std::round(scaled)) > tol * grid_N)
        throw DimensionError("weight " + std::to_string(w[m]) +
                             " is not a multiple of 1/" + std::to_string(grid_N));
    }
  }
}

Eigen::VectorXd cum_weights(const Eigen::VectorXd& w) {
  const int M = static_cast<int>(w.size());
  Eigen::VectorXd g(M);
  double acc = 0.0;
  for (int m = M - 1; m >= 0; --m) {
    acc += w[m];
    g[m] = acc;
  }
  return g;
}

Eigen::VectorXd weights_from_gamma(const Eigen::VectorXd& gamma) {
  const int M = static_cast<int>(gamma.size());
  Eigen::VectorXd w(M);
  for (int m = 0; m < M; ++m)
    w[m] = gamma[m] - (m + 1 < M ? gamma[m + 1] : 0.0);
  return w;
}

}  // namespace nestavg
