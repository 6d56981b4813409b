#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nestavg/asymptotics.hpp"
#include "nestavg/covariance.hpp"
#include "nestavg/nested_design.hpp"
#include "nestavg/oracle_risk.hpp"
#include "nestavg/rng.hpp"

namespace nestavg {

enum class Example { ex1, ex2, ex3 };
enum class Method { aic, bic, cp, loocv, mma, jma, jma2, oracle_w };

std::string method_name(Method m);
Method method_from_name(const std::string& s);
std::string example_name(Example e);
Example example_from_name(const std::string& s);

int p_rule(int n);  // floor(5 n^{2/3})
int m_rule(int n);  // nearest integer to 3 n^{1/3}

struct DgpConfig {
  Example example = Example::ex1;
  int n = 500;
  double r2 = 0.5;  // population R^2 (ex1/ex3) or Rtilde^2 (ex2)
  Decay decay = Decay::algebraic;
  double alpha = 1.0;  // alpha1 or alpha2
  int replications = 1000;
  std::uint64_t seed = 1;
  double rho1 = 0.5;
  double rho2 = 0.5;
  bool fixed_design = false;
  bool include_oracle = false;   // adds the fixed-weight oracle diagnostic
  int m_override = 0;            // 0 -> INT(3 n^{1/3})
  double sigma2_override = 0.0;  // > 0 replaces the R^2-derived sigma^2
  std::vector<Method> methods;   // empty -> per-example default
  int jobs = 1;

  std::vector<Method> effective_methods() const;
  Method normalizer() const;  // mma for ex1/ex3, jma for ex2
  nlohmann::json to_json() const;
  static DgpConfig from_json(const nlohmann::json& j);
};

struct Dgp {
  NestedDesign design;  // orthonormalized through group M only
  Eigen::VectorXd mu;
  CovarianceSpec cov = CovarianceSpec::scalar(1.0);
  Eigen::VectorXd beta;  // full length p
  int M = 0;
  int p = 0;
  int q_full = 0;
  double sigma2 = 0.0;  // scalar-noise examples
};

Dgp make_dgp(const DgpConfig& cfg, RngStream& rng);

struct MethodStats {
  Method method = Method::aic;
  double mean_loss = 0.0;
  double se = 0.0;
  double normalized = 0.0;
};

struct AuditRecord {
  int replicate = 0;
  Method method = Method::aic;
  int chosen = 0;       // selectors
  Eigen::VectorXd w;    // averagers
};

struct SimResult {
  std::vector<MethodStats> rows;
  int replications = 0;
  int aborted = 0;
  Method normalizer = Method::mma;
  std::vector<std::string> abort_reasons;
};

// fresh design per replicate unless cfg.fixed_design; losses are
// ||muhat - mu||^2 averaged with pairwise summation so the result is
// identical for any worker count.  Throws RunError past 1% aborts.
SimResult run_study(const DgpConfig& cfg, std::vector<AuditRecord>* audit = nullptr);

// method,n,r2,decay_param,mean_loss,se,normalized
std::string sim_csv(const SimResult& res, const DgpConfig& cfg, bool header = true);

struct DiagConfig {
  Decay decay = Decay::algebraic;
  double alpha = 1.5;  // alpha or c
  double sigma2 = 1.0;
  bool m_fixed = false;
  int m_fixed_value = 3;
};

struct DiagRow {
  int n = 0, q = 0, M = 0, m_star = 0, m_star_star = 0;
  double risk_ms = 0.0, risk_simplex = 0.0, delta = 0.0, ratio = 0.0;
  bool m_below = false;  // M_n < m**
};

// exact oracle quantities on the diagonal (orthonormal-shortcut) profile
// nu_m = m, bias_m = n beta_m^2, var_m = sigma^2, q = floor(5 n^{2/3})
std::vector<DiagRow> oracle_diagnostics(const DiagConfig& cfg,
                                        const std::vector<int>& n_grid);

std::string diag_csv(const std::vector<DiagRow>& rows, bool header = true);

}  // namespace nestavg
