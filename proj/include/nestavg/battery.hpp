#pragma once

#include <string>
#include <vector>

#include "nestavg/covariance.hpp"
#include "nestavg/nested_design.hpp"
#include "nestavg/oracle_risk.hpp"
#include "nestavg/rng.hpp"

namespace nestavg::battery {

// One full pipeline instance: random design and covariance, with mu built in
// the incremental basis so the profile realizes a chosen theta sequence.
struct Instance {
  NestedDesign design;
  CovarianceSpec cov = CovarianceSpec::scalar(1.0);
  Eigen::VectorXd mu;
  RiskProfile profile;
  Eigen::VectorXd theta_target;
};

struct GenOptions {
  int n_min = 20, n_max = 80;
  int M_min = 2, M_max = 6;
  int extra_max = 3;    // groups beyond the candidate set
  int group_max = 3;
  bool monotone = true;
  bool sparse_tail = true;  // sometimes force exact-zero trailing thetas
};

Instance random_instance(RngStream& rng, const GenOptions& opt = {});

// analytic large-n profile with decaying theta (no matrices)
RiskProfile random_large_profile(RngStream& rng, int n_min = 500, int n_max = 2000);

struct CheckReport {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  int violations = 0;
  std::string note;
};

// seeded inequality battery behind `nestavg verify`
std::vector<CheckReport> run_battery(std::uint64_t seed, int instances);

}  // namespace nestavg::battery
