#include "doctest.h"
#include "nestavg/rng.hpp"
#include "nestavg/selectors.hpp"
#include "oracles.hpp"

using namespace nestavg;

namespace {

struct Setup {
  NestedDesign design;
  Eigen::MatrixXd X;
};

Setup random_setup(int n, int p, const std::vector<int>& nu, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.gaussian();
  Setup s{build_design(X, nu), X};
  return s;
}

}  // namespace

TEST_CASE("noiseless response in the smallest model is picked by everything") {
  auto s = random_setup(40, 6, {2, 4, 6}, 41);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(6);
  beta[0] = 1.0;
  beta[1] = -2.0;
  const Eigen::VectorXd y = s.X * beta;  // exactly in span of group 1
  for (Criterion c : {Criterion::aic, Criterion::bic, Criterion::cp, Criterion::loocv})
    CHECK(select(y, s.design, 3, c).chosen == 1);
}

TEST_CASE("bic never picks a larger model than aic") {
  for (std::uint64_t seed = 50; seed < 80; ++seed) {
    auto s = random_setup(60, 8, {2, 4, 6, 8}, seed);
    RngStream rng(seed + 1000);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) y[i] = s.X(i, 0) + 0.3 * s.X(i, 2) + rng.gaussian();
    const auto fc = fit_nested(y, s.design, 4);
    CHECK(select(fc, Criterion::bic).chosen <= select(fc, Criterion::aic).chosen);
  }
}

TEST_CASE("leave-one-out shortcut equals the refit oracle") {
  const int n = 30;
  auto s = random_setup(n, 5, {1, 3, 5}, 42);
  RngStream rng(43);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 0.7 * s.X(i, 0) + rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);

  for (int m = 1; m <= 3; ++m) {
    const int cols = fc.nu[m - 1];
    double press = 0.0;
    for (int i = 0; i < n; ++i) {
      // refit without row i
      Eigen::MatrixXd Xi(n - 1, cols);
      Eigen::VectorXd yi(n - 1);
      int r = 0;
      for (int k = 0; k < n; ++k) {
        if (k == i) continue;
        Xi.row(r) = s.X.row(k).head(cols);
        yi[r] = y[k];
        ++r;
      }
      const Eigen::VectorXd bhat =
          Xi.completeOrthogonalDecomposition().solve(yi);
      const double pred = s.X.row(i).head(cols).dot(bhat);
      const double resid = y[i] - pred;
      CHECK(fc.loo_resid(i, m - 1) == doctest::Approx(resid).epsilon(1e-9));
      press += resid * resid;
    }
    CHECK(fc.cv[m - 1] == doctest::Approx(press).epsilon(1e-9));
  }
}

TEST_CASE("incremental rss equals dense least squares") {
  auto s = random_setup(50, 6, {2, 5, 6}, 44);
  RngStream rng(45);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  for (int m = 1; m <= 3; ++m) {
    const auto Xm = s.X.leftCols(fc.nu[m - 1]);
    const Eigen::VectorXd bhat = Xm.completeOrthogonalDecomposition().solve(y);
    const double rss = (y - Xm * bhat).squaredNorm();
    CHECK(fc.rss[m - 1] == doctest::Approx(rss).epsilon(1e-9));
    if (m > 1) CHECK(fc.rss[m - 1] <= fc.rss[m - 2] + 1e-12);
  }
}

TEST_CASE("unit leverage raises") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(5, 2);
  X(0, 0) = 1.0;  // observation 1 fully determines predictor 1
  X.col(1) << 0.0, 1.0, 1.0, 1.0, 1.0;
  const auto d = build_design(X, {1, 2});
  Eigen::VectorXd y(5);
  y << 1.0, 2.0, 0.5, 0.25, -1.0;
  try {
    fit_nested(y, d, 2);
    FAIL("expected LeverageError");
  } catch (const LeverageError& e) {
    CHECK(e.model() == 1);
  }
}

TEST_CASE("cp uses the largest candidate's variance plug-in") {
  auto s = random_setup(40, 6, {2, 4, 6}, 46);
  RngStream rng(47);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = s.X(i, 0) + rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  const double s2 = fc.rss[2] / (40.0 - 6.0);
  CHECK(fc.sigma2_hat() == doctest::Approx(s2).epsilon(1e-14));
  const auto sel = select(fc, Criterion::cp);
  for (int m = 0; m < 3; ++m)
    CHECK(sel.scores[m] ==
          doctest::Approx(fc.rss[m] + 2.0 * s2 * fc.nu[m]).epsilon(1e-12));
}

TEST_CASE("leverages live in the unit interval and accumulate") {
  auto s = random_setup(45, 6, {2, 4, 6}, 48);
  RngStream rng(49);
  Eigen::VectorXd y(45);
  for (int i = 0; i < 45; ++i) y[i] = rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  for (int m = 0; m < 3; ++m) {
    CHECK(fc.leverage.col(m).minCoeff() >= 0.0);
    CHECK(fc.leverage.col(m).maxCoeff() < 1.0);
    if (m > 0)
      CHECK(((fc.leverage.col(m) - fc.leverage.col(m - 1)).array() >= -1e-12).all());
    // diagonal of the dense hat matrix
    const Eigen::MatrixXd P = testor::dense_hat(s.X.leftCols(fc.nu[m]));
    CHECK((fc.leverage.col(m) - P.diagonal()).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(select(y, s.design, 1, Criterion::aic), IndexError);
}
