#include "nestavg/battery.hpp"

#include <algorithm>
#include <cmath>

#include "nestavg/asymptotics.hpp"
#include "nestavg/qp.hpp"

namespace nestavg::battery {

namespace {

int uniform_int(RngStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)) % (hi - lo + 1);
}

double uniform_range(RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

CovarianceSpec random_cov(RngStream& rng, int n) {
  const int kind = uniform_int(rng, 0, 3);
  switch (kind) {
    case 0:
      return CovarianceSpec::scalar(std::exp(uniform_range(rng, -1.0, 1.0)));
    case 1: {
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) d[i] = std::exp(uniform_range(rng, -0.7, 0.7));
      return CovarianceSpec::diagonal(d);
    }
    case 2:
      return CovarianceSpec::ar1(uniform_range(rng, -0.7, 0.7),
                                 std::exp(uniform_range(rng, -0.5, 0.5)));
    default: {
      std::vector<CovarianceSpec> terms;
      terms.push_back(CovarianceSpec::scalar(std::exp(uniform_range(rng, -1.0, 0.5))));
      terms.push_back(CovarianceSpec::ar1(uniform_range(rng, -0.6, 0.6), 1.0));
      return CovarianceSpec::sum(std::move(terms));
    }
  }
}

}  // namespace

Instance random_instance(RngStream& rng, const GenOptions& opt) {
  const int n = uniform_int(rng, opt.n_min, opt.n_max);
  const int M = uniform_int(rng, opt.M_min, opt.M_max);
  const int q = M + uniform_int(rng, 0, opt.extra_max);

  std::vector<int> sizes(q);
  int p = 0;
  for (int m = 0; m < q; ++m) {
    sizes[m] = uniform_int(rng, 1, opt.group_max);
    p += sizes[m];
  }
  while (p >= n / 2) {  // keep designs comfortably tall
    for (int m = 0; m < q && p >= n / 2; ++m)
      if (sizes[m] > 1) {
        --sizes[m];
        --p;
      }
    if (p >= n / 2) break;
  }
  std::vector<int> nu(q);
  int acc = 0;
  for (int m = 0; m < q; ++m) {
    acc += sizes[m];
    nu[m] = acc;
  }

  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.gaussian();

  Instance inst;
  inst.cov = random_cov(rng, n);
  inst.design = build_design(std::move(X), nu);

  Eigen::VectorXd var_inc(q);
  for (int m = 1; m <= q; ++m) var_inc[m - 1] = trace_increment(inst.cov, inst.design, m);

  // nonincreasing theta with a ratio gap well above the monotonicity slack
  Eigen::VectorXd theta(q);
  const double z = std::exp(uniform_range(rng, std::log(0.5), std::log(2.0 * n)));
  theta[0] = z / n;
  for (int m = 1; m < q; ++m) theta[m] = theta[m - 1] * uniform_range(rng, 0.25, 0.9);
  if (!opt.monotone) {
    const int flip = uniform_int(rng, 1, q - 1);
    theta[flip] = theta[flip - 1] * uniform_range(rng, 1.5, 3.0);
  }
  if (opt.sparse_tail && q > M && rng.uniform() < 0.25) {
    const int d = uniform_int(rng, std::max(2, q - 2), q - 1);
    for (int m = d; m < q; ++m) theta[m] = 0.0;
  }
  inst.theta_target = theta;

  // mu assembled in the incremental basis so each group's bias is exact
  Eigen::VectorXd coef(p);
  for (int m = 0; m < q; ++m) {
    const double bias = static_cast<double>(n) * theta[m] * var_inc[m];
    Eigen::VectorXd dir(sizes[m]);
    for (int j = 0; j < sizes[m]; ++j) dir[j] = rng.gaussian();
    dir.normalize();
    coef.segment(m == 0 ? 0 : nu[m - 1], sizes[m]) = std::sqrt(bias) * dir;
  }
  inst.mu = inst.design.Q() * coef;
  inst.profile = build_profile(inst.design, inst.cov, inst.mu, M);
  return inst;
}

RiskProfile random_large_profile(RngStream& rng, int n_min, int n_max) {
  const int n = uniform_int(rng, n_min, n_max);
  const int q = uniform_int(rng, 40, 120);
  const double sigma2 = std::exp(uniform_range(rng, -1.0, 1.0));
  const double target = uniform_range(rng, 3.0, std::min(25.0, 0.6 * q));

  Eigen::VectorXd bias(q), var(q);
  const bool algebraic = rng.uniform() < 0.5;
  const double rate = algebraic ? uniform_range(rng, 0.6, 1.6)
                                : uniform_range(rng, 0.3, 1.2);
  for (int m = 1; m <= q; ++m) {
    const int size = uniform_int(rng, 1, 3);
    var[m - 1] = sigma2 * size;
    double theta;
    if (algebraic)
      theta = 1.2 / n * std::pow(static_cast<double>(m) / target, -2.0 * rate);
    else
      theta = 1.2 / n * std::exp(-2.0 * rate * (m - target));
    bias[m - 1] = static_cast<double>(n) * theta * var[m - 1];
  }
  const int M = std::clamp(static_cast<int>(std::lround(3.0 * std::cbrt(n))), 2, q);
  return make_profile(n, M, std::move(bias), std::move(var));
}

namespace {

struct Tracker {
  CheckReport rep;
  explicit Tracker(std::string name) { rep.name = std::move(name); }
  void observe(bool ok, double margin, const std::string& note = "") {
    if (!ok) {
      rep.pass = false;
      ++rep.violations;
      if (rep.note.empty()) rep.note = note;
    }
    rep.worst = std::max(rep.worst, margin);
  }
};

}  // namespace

std::vector<CheckReport> run_battery(std::uint64_t seed, int instances) {
  Tracker sandwich("weight-set sandwich box<=simplex<=grid(N)<=grid(1)");
  Tracker collapse("grid(1) equals best single model");
  Tracker bound6("grid excess bounded by R(m*)/(2N)");
  Tracker gap5("simplex-box gap identity");
  Tracker halfbound("simplex risk at least half of best model risk");
  Tracker decomp("delta decomposition equals direct subtraction");
  Tracker pointmass("averaging risk at a point mass equals model risk");
  Tracker enumeq("grid closed form equals enumeration");
  Tracker mnz("threshold index at 1/2 hits the global optimum");
  Tracker boxdiag("diagonal box QP matches the clipped closed form");

  RngStream rng(seed, 0x42);
  for (int t = 0; t < instances; ++t) {
    const Instance inst = random_instance(rng);
    const RiskProfile& p = inst.profile;
    const MsRisk ms = risk_ms(p);
    const double rms = ms.risks[ms.m_star - 1];
    const auto sx = oracle_simplex(p);
    const auto bx = oracle_box(p);
    const auto g1 = oracle_grid(p, 1);
    const double scale = std::max(1.0, rms);

    collapse.observe(std::abs(g1.risk - rms) <= 1e-12 * scale,
                     std::abs(g1.risk - rms));
    halfbound.observe(sx.risk >= 0.5 * rms - 1e-10 * scale, sx.risk / rms);
    gap5.observe(std::abs((sx.risk - bx.risk) -
                          p.v(1) * p.v(1) / (p.b(1) + p.v(1))) <= 1e-10 * scale,
                 std::abs((sx.risk - bx.risk) - p.v(1) * p.v(1) / (p.b(1) + p.v(1))));

    const DeltaGap dg = delta_gap(p);
    decomp.observe(std::abs(dg.delta - dg.direct) <= 1e-10 * scale,
                   std::abs(dg.delta - dg.direct));

    for (int k = 1; k <= p.M; ++k) {
      const double r = risk_ma(p, WeightVector::point_mass(p.M, k));
      pointmass.observe(std::abs(r - ms.risks[k - 1]) <= 1e-10 * scale,
                        std::abs(r - ms.risks[k - 1]));
    }

    double prev = g1.risk;
    for (int N = 4; N >= 2; --N) {
      const auto gN = oracle_grid(p, N);
      sandwich.observe(bx.risk <= sx.risk + 1e-10 * scale &&
                           sx.risk <= gN.risk + 1e-10 * scale,
                       bx.risk - sx.risk, "box/simplex/grid ordering");
      bound6.observe(gN.risk - sx.risk <= rms / (2.0 * N) + 1e-10 * scale,
                     (gN.risk - sx.risk) - rms / (2.0 * N));
      // enumeration cross-check on the same objective
      double best = std::numeric_limits<double>::infinity();
      WeightVector cand;
      cand.set = WeightSet::grid;
      cand.grid_N = N;
      qp::enumerate_grid(p.M, N, [&](const Eigen::VectorXd& w) {
        cand.w = w;
        best = std::min(best, risk_ma(p, cand));
      });
      enumeq.observe(std::abs(gN.risk - best) <= 1e-10 * scale,
                     std::abs(gN.risk - best));
      prev = gN.risk;
    }
    sandwich.observe(prev <= g1.risk + 1e-10 * scale, prev - g1.risk,
                     "grid risks increase toward N=1");

    mnz.observe(threshold_index(p, 0.5) == ms.m_star_star ||
                    p.theta[ms.m_star_star - 1] <= 1.0 / p.n,
                std::abs(threshold_index(p, 0.5) - ms.m_star_star));

    // diagonal box QP spot check
    const int Mq = p.M;
    Eigen::VectorXd hd(Mq), gq(Mq);
    for (int i = 0; i < Mq; ++i) {
      hd[i] = std::exp(uniform_range(rng, -1.0, 1.0));
      gq[i] = uniform_range(rng, -2.0, 2.0);
    }
    qp::QpProblem bp{Eigen::MatrixXd(hd.asDiagonal()), gq, WeightSet::box, 0};
    const auto bsol = qp::solve(bp);
    double worst = 0.0;
    for (int i = 0; i < Mq; ++i) {
      const double closed = std::clamp(-gq[i] / hd[i], 0.0, 1.0);
      worst = std::max(worst, std::abs(bsol.w.w[i] - closed));
    }
    boxdiag.observe(worst <= 1e-8, worst);
  }

  return {sandwich.rep, collapse.rep, bound6.rep, gap5.rep,  halfbound.rep,
          decomp.rep,   pointmass.rep, enumeq.rep, mnz.rep,  boxdiag.rep};
}

}  // namespace nestavg::battery
