#pragma once

#include <Eigen/Dense>
#include <string>

#include "nestavg/errors.hpp"

namespace nestavg {

enum class Decay { algebraic, exponential };

// non-regularized incomplete beta B(x;a,b) = int_0^x t^{a-1}(1-t)^{b-1} dt,
// continued-fraction evaluation, ~1e-12 relative
double inc_beta(double x, double a, double b);

struct Kappa {
  bool is_inf = false;
  double value = 1.0;

  static Kappa finite(double v) {
    if (!(v > 0.0)) throw DomainError("kappa must be positive");
    return Kappa{false, v};
  }
  static Kappa infinite() { return Kappa{true, 0.0}; }
};

// i*_N = ceil(N/(1+kappa^{2a}) - 1/2); 0 when kappa is infinite
int i_star(int N, double alpha, const Kappa& kappa);

// psi*_N = (2/N) sum_{i=i*_N}^{N-1} ((2i+1)/2N)^{1-1/2a} (1-(2i+1)/2N)^{1/2a}
//          + ((2a-1)/2a)(i*_N/N)^2 kappa - (1/2a)(1-i*_N/N)^2 kappa^{1-2a}
double psi_star(int N, double alpha, const Kappa& kappa);

// N -> infinity limit, ((2a-1)/4a^2)(pi/sin(pi/2a) - B(1/(1+kappa^{2a});...))
double psi_star_limit(double alpha, const Kappa& kappa);

struct DecayModel {
  Decay kind = Decay::algebraic;
  double rate = 0.8;   // alpha (> 1/2) or c (> 0)
  double sigma2 = 1.0;
  Kappa kappa = Kappa::finite(1.0);
  int N = 1;
};

// lim R_n(w*_n) / R_n(w*_{n,N}); identically 1 for the exponential family,
// strictly below 1 for the algebraic one
double limit_ratio(const DecayModel& model);

struct MRule {
  enum class Kind { fixed, power, kappa } kind = Kind::kappa;
  int fixed_M = 3;
  double coef = 3.0;
  double exponent = 1.0 / 3.0;  // M_n = coef * n^exponent
  Kappa kappa_value = Kappa::finite(1.0);

  static MRule fixed(int M);
  static MRule power(double coef, double exponent);
  static MRule of_kappa(Kappa k);
};

struct AsymptoticRisk {
  std::string regime;
  double ms = 0.0;       // R_n(m*)/n asymptote
  double simplex = 0.0;  // R_n(w*)/n
  double grid = 0.0;     // R_n(w*_{n,N})/n
};

AsymptoticRisk asymptotic_risk(const DecayModel& model, double n, const MRule& rule);

enum class DecayClass { a1_like, a2_like, inconclusive };

// tail ratios theta_{floor(k m)} / theta_m: bounded away from 0 and 1 reads
// as slow decay, vanishing as fast decay; diagnostic only
DecayClass decay_classify(const Eigen::VectorXd& theta, double k);

// sum_{m > M} m^{-2 alpha}
double algebraic_tail(double alpha, long M);

// reported lower bound on R_n(w*_{n,N}) - R_n(w*_n) in the algebraic M2
// regime: w sigma^2 / (2^{2a+1} w^{-2a} + 2) * (n/sigma^2)^{1/2a} with
// w = min(c_lower, (2N-1)^{-1/2a}); diagnostic only, tightness not asserted
double grid_gap_lower_bound(double alpha, double c_lower, int N, double n,
                            double sigma2);

}  // namespace nestavg
