#include <cmath>

#include "doctest.h"
#include "nestavg/asymptotics.hpp"
#include "nestavg/oracle_risk.hpp"
#include "oracles.hpp"

using namespace nestavg;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("incomplete beta basics") {
  CHECK(inc_beta(0.0, 2.0, 3.0) == 0.0);
  // B(0.5; 2, 3) = 11/192
  CHECK(inc_beta(0.5, 2.0, 3.0) == doctest::Approx(11.0 / 192.0).epsilon(1e-12));
  const double quad = testor::adaptive_simpson(
      [](double t) { return t * (1.0 - t) * (1.0 - t); }, 0.0, 0.5, 1e-13);
  CHECK(inc_beta(0.5, 2.0, 3.0) == doctest::Approx(quad).epsilon(1e-10));
  CHECK_THROWS_AS(inc_beta(-0.1, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(inc_beta(0.5, 0.0, 1.0), DomainError);
}

TEST_CASE("reflection identity at x = 1") {
  for (double alpha : {0.6, 0.8, 1.0, 2.0, 5.0}) {
    const double a = 1.0 - 1.0 / (2.0 * alpha);
    const double b = 1.0 / (2.0 * alpha);
    CHECK(std::abs(inc_beta(1.0, a, b) - kPi / std::sin(kPi / (2.0 * alpha))) <
          1e-9);
  }
}

TEST_CASE("complement identity against quadrature") {
  struct Case {
    double x, a, b;
  };
  for (const Case& c : {Case{0.3, 0.375, 0.625}, Case{0.7, 1.5, 0.8},
                        Case{0.55, 2.0, 3.0}}) {
    const double upper = testor::adaptive_simpson(
        [&](double t) {
          return std::pow(t, c.a - 1.0) * std::pow(1.0 - t, c.b - 1.0);
        },
        c.x, 1.0 - 1e-14, 1e-12);
    CHECK(std::abs(inc_beta(c.x, c.a, c.b) -
                   (inc_beta(1.0, c.a, c.b) - upper)) < 1e-9);
  }
}

TEST_CASE("psi_star closed forms and monotonicity") {
  const double alpha = 0.8;
  SUBCASE("N=1 closed form holds for kappa >= 1") {
    for (double k : {1.0, 2.0, 5.0}) {
      const double closed = 1.0 - std::pow(k, 1.0 - 2.0 * alpha) / (2.0 * alpha);
      CHECK(psi_star(1, alpha, Kappa::finite(k)) ==
            doctest::Approx(closed).epsilon(1e-14));
    }
  }
  SUBCASE("below kappa = 1 the N=1 value matches the selection collapse") {
    // grid(1) equals model selection, so psi*_1 must satisfy
    // (2a/(2a-1)) psi*_1 + k^{1-2a}/(2a-1) = k + k^{1-2a}/(2a-1) when k < 1
    for (double k : {0.3, 0.5, 0.8}) {
      const double psi1 = psi_star(1, alpha, Kappa::finite(k));
      const double lhs = 2.0 * alpha / (2.0 * alpha - 1.0) * psi1;
      CHECK(lhs == doctest::Approx(k).epsilon(1e-12));
    }
  }
  SUBCASE("strictly decreasing in N at kappa = 1 and 2") {
    for (double k : {1.0, 2.0}) {
      double prev = psi_star(1, alpha, Kappa::finite(k));
      for (int N = 2; N <= 10; ++N) {
        const double cur = psi_star(N, alpha, Kappa::finite(k));
        CHECK(cur < prev);
        prev = cur;
      }
    }
  }
  SUBCASE("limit expression reached") {
    for (double k : {0.5, 1.0, 2.0}) {
      const double lim = psi_star_limit(alpha, Kappa::finite(k));
      CHECK(std::abs(psi_star(10000, alpha, Kappa::finite(k)) - lim) < 1e-3);
    }
    const double lim_inf = psi_star_limit(alpha, Kappa::infinite());
    CHECK(std::abs(psi_star(10000, alpha, Kappa::infinite()) - lim_inf) < 1e-3);
  }
  SUBCASE("i_star spot values") {
    CHECK(i_star(1, alpha, Kappa::finite(1.0)) == 0);
    CHECK(i_star(2, alpha, Kappa::finite(1.0)) == 1);
    CHECK(i_star(1, alpha, Kappa::finite(0.5)) == 1);
    CHECK(i_star(2, alpha, Kappa::finite(0.5)) == 2);
    CHECK(i_star(1, alpha, Kappa::finite(2.0)) == 0);
    CHECK(i_star(5, alpha, Kappa::infinite()) == 0);
  }
}

TEST_CASE("limit_ratio") {
  DecayModel m;
  m.kind = Decay::exponential;
  m.rate = 1.0;
  CHECK(limit_ratio(m) == 1.0);

  m.kind = Decay::algebraic;
  m.rate = 0.8;
  SUBCASE("increasing in N and strictly below one at kappa = 1") {
    m.kappa = Kappa::finite(1.0);
    double prev = 0.0;
    for (int N = 1; N <= 10; ++N) {
      m.N = N;
      const double r = limit_ratio(m);
      CHECK(r < 1.0);
      CHECK(r > prev);
      prev = r;
    }
  }
  SUBCASE("tends to one as N grows") {
    m.kappa = Kappa::finite(1.0);
    m.N = 10000;
    CHECK(limit_ratio(m) == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("infinite kappa variant") {
    m.kappa = Kappa::infinite();
    m.N = 1;
    const double r1 = limit_ratio(m);
    CHECK(r1 > 0.0);
    CHECK(r1 < 1.0);
    m.N = 4;
    CHECK(limit_ratio(m) > r1);
  }
}

TEST_CASE("asymptotic_risk matches exact profiles in the kappa regime") {
  // diagonal shortcut at n = 1e6: exact oracle risks vs the asymptote
  const double alpha = 0.8, sigma2 = 1.0;
  const double n = 1e6;
  const int q = static_cast<int>(5.0 * std::pow(n, 2.0 / 3.0));
  const double mss = std::pow(n / sigma2, 1.0 / (2.0 * alpha));
  const int M = static_cast<int>(std::llround(mss));  // kappa = 1
  Eigen::VectorXd bias(q), var(q);
  for (int m = 1; m <= q; ++m) {
    bias[m - 1] = n * std::pow(static_cast<double>(m), -2.0 * alpha);
    var[m - 1] = sigma2;
  }
  const auto p = make_profile(static_cast<int>(n), M, bias, var);
  const auto ms = risk_ms(p);
  const auto sx = oracle_simplex(p);
  const auto g2 = oracle_grid(p, 2);

  DecayModel model;
  model.kind = Decay::algebraic;
  model.rate = alpha;
  model.sigma2 = sigma2;
  model.N = 2;
  const auto asym = asymptotic_risk(model, n, MRule::of_kappa(Kappa::finite(1.0)));
  CHECK(asym.regime == "M2-kappa");
  CHECK(ms.risks[ms.m_star - 1] / n == doctest::Approx(asym.ms).epsilon(0.05));
  CHECK(sx.risk / n == doctest::Approx(asym.simplex).epsilon(0.05));
  CHECK(g2.risk / n == doctest::Approx(asym.grid).epsilon(0.05));
}

TEST_CASE("asymptotic_risk fixed and exponential regimes") {
  DecayModel m;
  m.kind = Decay::algebraic;
  m.rate = 1.2;
  SUBCASE("fixed M keeps the tail series") {
    const auto a = asymptotic_risk(m, 1e5, MRule::fixed(4));
    double tail = 0.0;
    for (long j = 5; j <= 4000000; ++j) tail += std::pow(static_cast<double>(j), -2.4);
    CHECK(a.ms == doctest::Approx(tail).epsilon(1e-6));
    CHECK(a.simplex == a.ms);
    CHECK(a.grid == a.ms);
    CHECK(a.regime == "M1-fixed");
  }
  SUBCASE("slowly growing power rule is the diverging-M1 regime") {
    const auto a = asymptotic_risk(m, 1e6, MRule::power(3.0, 1.0 / 3.0));
    const double M = std::round(3.0 * std::pow(1e6, 1.0 / 3.0));
    CHECK(a.regime == "M1-diverging");
    CHECK(a.simplex ==
          doctest::Approx(std::pow(M, -1.4) / 1.4).epsilon(1e-12));
  }
  SUBCASE("exponential above the optimum") {
    DecayModel e;
    e.kind = Decay::exponential;
    e.rate = 0.7;
    e.sigma2 = 2.0;
    const auto a = asymptotic_risk(e, 1e5, MRule::power(3.0, 1.0 / 3.0));
    CHECK(a.regime == "exp-above");
    CHECK(a.ms == doctest::Approx(2.0 * std::log(1e5 / 2.0) / (1.4 * 1e5)));
    const auto b = asymptotic_risk(e, 1e5, MRule::fixed(3));
    CHECK(b.regime == "exp-below");
    CHECK(b.ms == doctest::Approx(std::exp(-1.4 * 3.0) / (std::exp(1.4) - 1.0)));
  }
  SUBCASE("regime errors") {
    CHECK_THROWS_AS(asymptotic_risk(m, 1.5, MRule::fixed(3)), RegimeError);
    CHECK_THROWS_AS(MRule::power(-1.0, 0.5), RegimeError);
  }
}

TEST_CASE("decay classification") {
  SUBCASE("algebraic tail ratios are flat away from zero and one") {
    Eigen::VectorXd theta(200);
    for (int m = 1; m <= 200; ++m) theta[m - 1] = std::pow(m, -1.6);
    CHECK(decay_classify(theta, 2.0) == DecayClass::a1_like);
  }
  SUBCASE("exponential ratios vanish") {
    Eigen::VectorXd theta(16);
    for (int m = 1; m <= 16; ++m) theta[m - 1] = std::exp(-2.0 * m);
    CHECK(decay_classify(theta, 2.0) == DecayClass::a2_like);
  }
  SUBCASE("constant sequences are inconclusive") {
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(50, 0.3);
    CHECK(decay_classify(theta, 2.0) == DecayClass::inconclusive);
  }
  CHECK_THROWS_AS(decay_classify(Eigen::VectorXd::Constant(5, 1.0), 2.0),
                  TooShortError);
  CHECK_THROWS_AS(decay_classify(Eigen::VectorXd::Constant(50, 1.0), 1.0),
                  DomainError);
}

TEST_CASE("algebraic tail agrees with a longer brute sum") {
  for (double alpha : {0.8, 1.2, 2.0}) {
    double brute = 0.0;
    for (long m = 10000000; m > 10; --m)
      brute += std::pow(static_cast<double>(m), -2.0 * alpha);
    brute += std::pow(1e7 + 0.5, 1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0);
    CHECK(algebraic_tail(alpha, 10) == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("grid gap lower-bound constant is reported sanely") {
  const double v = grid_gap_lower_bound(0.8, 1.0, 2, 1e4, 1.0);
  CHECK(v > 0.0);
  // w = (2N-1)^{-1/1.6} < 1, bound grows like n^{1/1.6}
  CHECK(grid_gap_lower_bound(0.8, 1.0, 2, 4e4, 1.0) > v);
  CHECK_THROWS_AS(grid_gap_lower_bound(0.4, 1.0, 2, 1e4, 1.0), DomainError);
}
