#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nestavg/weights.hpp"

namespace nestavg::qp {

// min over the feasible set of 0.5 w'Hw + g'w
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  WeightSet set = WeightSet::simplex;
  int grid_N = 0;
};

struct Options {
  long enum_budget = 1000000;  // grid enumeration cap
  bool allow_heuristic = true; // rounding heuristic past the cap
  int max_iter = 0;            // 0 -> automatic
};

struct Solution {
  WeightVector w;
  double value = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool heuristic = false;
};

// Active-set with equality-constrained KKT solves; conditional-gradient
// fallback for M > 200; exhaustive enumeration for the grid set.  Throws
// NotPsdError when the smallest eigenvalue is below -1e-8 * ||H|| and
// TooLargeGridError when enumeration exceeds the budget with the heuristic
// disabled.  Deterministic: identical inputs give identical outputs.
Solution solve(const QpProblem& p, const Options& opt = {});

// visit every w in W_M(N) in lexicographic order
void enumerate_grid(int M, int N,
                    const std::function<void(const Eigen::VectorXd&)>& fn);

// number of grid points |W_M(N)| = C(M+N-1, M-1), saturating at LONG_MAX
long grid_cardinality(int M, int N);

}  // namespace nestavg::qp
