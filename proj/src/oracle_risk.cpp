#include "nestavg/oracle_risk.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "nestavg/qp.hpp"

namespace nestavg {

namespace {

constexpr double kThetaPositive = 1e-14;   // d_n detection
constexpr double kMonotoneSlack = 1e-12;   // multiplicative

double completed_square(double b, double v, double gamma_raw, double gamma) {
  const double dev = gamma - gamma_raw;
  return (b + v) * dev * dev + gamma_raw * v;
}

// simplex/box oracle objective as a QP in w-coordinates:
// R(w) - const = 0.5 w'Hw + g'w with H = 2 T' diag(b+v) T, g = -2 T' b,
// gamma = T w upper-triangular of ones.
qp::QpProblem profile_qp(const RiskProfile& p, WeightSet set, int grid_N = 0) {
  const int M = p.M;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(M, M);
  for (int m = 0; m < M; ++m)
    for (int j = m; j < M; ++j) T(m, j) = 1.0;
  Eigen::VectorXd d(M), bb(M);
  for (int m = 1; m <= M; ++m) {
    d[m - 1] = p.b(m) + p.v(m);
    bb[m - 1] = p.b(m);
  }
  qp::QpProblem prob;
  prob.H = 2.0 * T.transpose() * d.asDiagonal() * T;
  prob.g = -2.0 * T.transpose() * bb;
  prob.set = set;
  prob.grid_N = grid_N;
  return prob;
}

int round_level(double gamma, int N) {
  // i with (2i-1)/2N < gamma <= (2i+1)/2N, i.e. ceil(N gamma - 1/2);
  // exact midpoints round down
  int i = static_cast<int>(std::ceil(static_cast<double>(N) * gamma - 0.5));
  if (i < 0) i = 0;
  if (i > N) i = N;
  return i;
}

}  // namespace

bool RiskProfile::theta_nonincreasing(int upto) const {
  const int last = upto > 0 ? upto : q();
  for (int m = 1; m < last; ++m)
    if (theta[m] > theta[m - 1] * (1.0 + kMonotoneSlack) + 1e-300) return false;
  return true;
}

void RiskProfile::finalize() {
  const int qn = q();
  if (var_inc.size() != qn) throw DimensionError("bias/var length mismatch");
  if (n < 1) throw DimensionError("profile needs n >= 1");
  if (M < 2 || M > qn)
    throw DimensionError("candidate count M=" + std::to_string(M) +
                         " outside 2..q=" + std::to_string(qn));
  theta.resize(qn);
  gamma_raw.resize(qn);
  gamma_star.resize(qn);
  d_n = 0;
  for (int m = 0; m < qn; ++m) {
    if (bias_inc[m] < 0.0) {
      if (bias_inc[m] < -1e-9 * std::max(1.0, std::abs(bias_inc[m])))
        throw DomainError("negative bias increment");
      bias_inc[m] = 0.0;
    }
    if (!(var_inc[m] > 0.0))
      throw ZeroVarianceError(m + 1, "tr((P_m - P_{m-1})Omega) vanished at m=" +
                                         std::to_string(m + 1));
    theta[m] = bias_inc[m] / (static_cast<double>(n) * var_inc[m]);
    gamma_raw[m] = bias_inc[m] / (bias_inc[m] + var_inc[m]);
    gamma_star[m] = m == 0 ? 1.0 : gamma_raw[m];
    if (theta[m] > kThetaPositive) d_n = m + 1;
  }
  if (resid_bias < 0.0) resid_bias = 0.0;
  suffix_bias_.resize(qn + 1);
  suffix_bias_[qn] = resid_bias;
  for (int m = qn - 1; m >= 0; --m)
    suffix_bias_[m] = suffix_bias_[m + 1] + bias_inc[m];
  prefix_var_.resize(qn + 1);
  prefix_var_[0] = 0.0;
  for (int m = 0; m < qn; ++m) prefix_var_[m + 1] = prefix_var_[m] + var_inc[m];
}

RiskProfile build_profile(const NestedDesign& d, const CovarianceSpec& cov,
                          const Eigen::VectorXd& mu, int M) {
  RiskProfile p;
  p.n = d.n();
  p.M = M;
  p.bias_inc = d.quad_form_increments(mu);
  p.var_inc.resize(d.q());
  for (int m = 1; m <= d.q(); ++m) p.var_inc[m - 1] = trace_increment(cov, d, m);
  const Eigen::VectorXd resid = mu - d.project_prefix(d.q(), mu);
  p.resid_bias = resid.squaredNorm();
  p.finalize();
  return p;
}

RiskProfile make_profile(int n, int M, Eigen::VectorXd bias_inc,
                         Eigen::VectorXd var_inc, double resid_bias) {
  RiskProfile p;
  p.n = n;
  p.M = M;
  p.bias_inc = std::move(bias_inc);
  p.var_inc = std::move(var_inc);
  p.resid_bias = resid_bias;
  p.finalize();
  return p;
}

Eigen::VectorXd gvi(const NestedDesign& d, const CovarianceSpec& cov,
                    const Eigen::VectorXd& mu) {
  const Eigen::VectorXd bias = d.quad_form_increments(mu);
  Eigen::VectorXd theta(d.q());
  for (int m = 1; m <= d.q(); ++m) {
    const double v = trace_increment(cov, d, m);
    if (!(v > 0.0))
      throw ZeroVarianceError(m, "tr((P_m - P_{m-1})Omega) vanished at m=" +
                                     std::to_string(m));
    theta[m - 1] = bias[m - 1] / (static_cast<double>(d.n()) * v);
  }
  return theta;
}

MsRisk risk_ms(const RiskProfile& p) {
  MsRisk out;
  out.risks.resize(p.M);
  double best_m = std::numeric_limits<double>::infinity();
  double best_q = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= p.q(); ++m) {
    const double r = p.risk_at(m);
    if (m <= p.M) {
      out.risks[m - 1] = r;
      if (r < best_m) {
        best_m = r;
        out.m_star = m;
      }
    }
    if (r < best_q) {
      best_q = r;
      out.m_star_star = m;
    }
  }
  out.min_rule_agrees = out.m_star == std::min(p.M, out.m_star_star);
  return out;
}

double risk_ma(const RiskProfile& p, const WeightVector& w) {
  if (w.w.size() != p.M)
    throw DimensionError("weight length " + std::to_string(w.w.size()) +
                         " does not match M=" + std::to_string(p.M));
  const Eigen::VectorXd gamma = cum_weights(w.w);
  double r = p.tail_bias(p.M);
  for (int m = 1; m <= p.M; ++m)
    r += completed_square(p.b(m), p.v(m), p.gamma_raw[m - 1], gamma[m - 1]);
  return r;
}

namespace {

// tr(P_1 Omega) + sum_{m>=2} gamma_raw_m v_m + mu'(I - P_M)mu
double simplex_closed_risk(const RiskProfile& p) {
  double r = p.v(1);
  for (int m = 2; m <= p.M; ++m) r += p.gamma_raw[m - 1] * p.v(m);
  return r + p.tail_bias(p.M);
}

}  // namespace

OracleResult oracle_simplex(const RiskProfile& p) {
  OracleResult out;
  if (p.theta_nonincreasing(p.M)) {
    Eigen::VectorXd gamma(p.M);
    gamma[0] = 1.0;
    for (int m = 2; m <= p.M; ++m) gamma[m - 1] = p.gamma_raw[m - 1];
    out.w.w = weights_from_gamma(gamma);
    out.w.set = WeightSet::simplex;
    out.risk = simplex_closed_risk(p);
    return out;
  }
  const auto sol = qp::solve(profile_qp(p, WeightSet::simplex));
  out.w = sol.w;
  out.risk = risk_ma(p, out.w);
  out.fallback = true;
  return out;
}

OracleResult oracle_box(const RiskProfile& p) {
  OracleResult out;
  if (p.theta_nonincreasing(p.M)) {
    out.w.w = weights_from_gamma(p.gamma_raw.head(p.M));
    out.w.set = WeightSet::box;
    double r = 0.0;
    for (int m = 1; m <= p.M; ++m) r += p.gamma_raw[m - 1] * p.v(m);
    out.risk = r + p.tail_bias(p.M);
    return out;
  }
  const auto sol = qp::solve(profile_qp(p, WeightSet::box));
  out.w = sol.w;
  out.risk = risk_ma(p, out.w);
  out.fallback = true;
  return out;
}

GridOracleResult oracle_grid(const RiskProfile& p, int N) {
  if (N < 1) throw DomainError("grid oracle needs N >= 1");
  GridOracleResult out;
  out.i_nN = round_level(p.gamma_raw[p.M - 1], N);
  if (p.theta_nonincreasing(p.M)) {
    Eigen::VectorXd gamma(p.M);
    gamma[0] = 1.0;
    double excess = 0.0;
    for (int m = 2; m <= p.M; ++m) {
      const double g = static_cast<double>(round_level(p.gamma_raw[m - 1], N)) / N;
      gamma[m - 1] = g;
      const double dev = g - p.gamma_raw[m - 1];
      excess += (p.b(m) + p.v(m)) * dev * dev;
    }
    out.w.w = weights_from_gamma(gamma);
    out.w.set = WeightSet::grid;
    out.w.grid_N = N;
    out.risk = simplex_closed_risk(p) + excess;
    return out;
  }
  // enumeration keeps the lexicographically smallest minimizer
  const long count = qp::grid_cardinality(p.M, N);
  if (count > 2000000)
    throw TooLargeGridError("grid fallback needs " + std::to_string(count) +
                            " evaluations");
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_w;
  WeightVector cand;
  cand.set = WeightSet::grid;
  cand.grid_N = N;
  qp::enumerate_grid(p.M, N, [&](const Eigen::VectorXd& w) {
    cand.w = w;
    const double r = risk_ma(p, cand);
    if (r < best) {
      best = r;
      best_w = w;
    }
  });
  out.w.w = best_w;
  out.w.set = WeightSet::grid;
  out.w.grid_N = N;
  out.risk = best;
  out.fallback = true;
  return out;
}

int threshold_index(const RiskProfile& p, double z) {
  if (z >= 1.0) return 1;
  if (!(z > 0.0)) throw DomainError("threshold_index needs z > 0");
  const double thresh = z / ((1.0 - z) * static_cast<double>(p.n));
  for (int m = p.q(); m >= 1; --m)
    if (p.theta[m - 1] > thresh) return m;
  return 0;
}

DeltaGap delta_gap(const RiskProfile& p) {
  DeltaGap out;
  const MsRisk ms = risk_ms(p);
  const OracleResult simplex = oracle_simplex(p);
  const double rms = ms.risks[ms.m_star - 1];
  out.direct = rms - simplex.risk;
  if (!simplex.fallback) {
    for (int m = 2; m <= ms.m_star; ++m)
      out.ms_term += p.v(m) * p.v(m) / (p.b(m) + p.v(m));
    for (int m = ms.m_star + 1; m <= p.M; ++m)
      out.tail_term += p.b(m) * p.b(m) / (p.b(m) + p.v(m));
    out.delta = out.ms_term + out.tail_term;
    out.decomposition_valid = true;
  } else {
    out.delta = out.direct;
  }
  out.ratio = rms > 0.0 ? out.delta / rms : 0.0;
  out.theorem1_bound_ok = out.delta <= 0.5 * rms * (1.0 + 1e-12) + 1e-12;
  return out;
}

std::string profile_csv(const RiskProfile& p) {
  std::string s = "m,bias_inc,var_inc,theta,gamma_star,R_ms\n";
  char buf[192];
  for (int m = 1; m <= p.q(); ++m) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", m,
                  p.b(m), p.v(m), p.theta[m - 1], p.gamma_star[m - 1],
                  p.risk_at(m));
    s += buf;
  }
  return s;
}

}  // namespace nestavg
