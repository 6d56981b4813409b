#include "doctest.h"
#include "nestavg/averagers.hpp"
#include "nestavg/rng.hpp"
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
  return {build_design(X, nu), X};
}

// explicit criterion evaluations, independent of the structured assembly
double mma_criterion(const Setup& s, const FitCache& fc, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w) {
  const int M = fc.M;
  Eigen::MatrixXd F(y.size(), M);
  for (int m = 1; m <= M; ++m) {
    const auto Xm = s.X.leftCols(fc.nu[m - 1]);
    F.col(m - 1) = Xm * Xm.completeOrthogonalDecomposition().solve(y);
  }
  return (y - F * w).squaredNorm() + 2.0 * fc.sigma2_hat() * fc.nu.dot(w);
}

double jma_criterion(const FitCache& fc, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w) {
  Eigen::VectorXd fit = Eigen::VectorXd::Zero(y.size());
  for (int m = 0; m < fc.M; ++m) fit += w[m] * (y - fc.loo_resid.col(m));
  return (y - fit).squaredNorm();
}

}  // namespace

TEST_CASE("noiseless signal puts all mass on the true model") {
  auto s = random_setup(40, 4, {2, 4}, 61);
  Eigen::VectorXd beta(4);
  beta << 0.5, -1.0, 2.0, 0.7;  // needs both groups
  const Eigen::VectorXd y = s.X * beta;
  const auto mma = fit_mma(y, s.design, 2);
  CHECK(mma.w.w[1] == doctest::Approx(1.0).epsilon(1e-8));
  const auto jma = fit_jma(y, s.design, 2, WeightSet::simplex);
  CHECK(jma.w.w[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("mma criterion at a point mass is that model's Cp") {
  auto s = random_setup(50, 6, {2, 4, 6}, 62);
  RngStream rng(63);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = s.X(i, 0) - 0.4 * s.X(i, 3) + rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  const auto fit = fit_mma(fc);
  for (int m = 0; m < 3; ++m) {
    Eigen::VectorXd em = Eigen::VectorXd::Zero(3);
    em[m] = 1.0;
    const double cp = fc.rss[m] + 2.0 * fc.sigma2_hat() * fc.nu[m];
    CHECK(mma_criterion(s, fc, y, em) == doctest::Approx(cp).epsilon(1e-9));
    CHECK(fit.criterion <= cp + 1e-9);  // never worse than Cp selection
  }
  // structured assembly agrees with the explicit criterion at the minimizer
  CHECK(fit.criterion ==
        doctest::Approx(mma_criterion(s, fc, y, fit.w.w)).epsilon(1e-8));
}

TEST_CASE("mma minimizer against a fine simplex grid") {
  auto s = random_setup(45, 6, {2, 4, 6}, 64);
  RngStream rng(65);
  Eigen::VectorXd y(45);
  for (int i = 0; i < 45; ++i)
    y[i] = 0.8 * s.X(i, 0) + 0.4 * s.X(i, 2) + rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  const auto fit = fit_mma(fc);
  double best = std::numeric_limits<double>::infinity();
  const int steps = 1000;
  Eigen::VectorXd w(3);
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps - i; ++j) {
      w << i / 1000.0, j / 1000.0, 1.0 - (i + j) / 1000.0;
      best = std::min(best, mma_criterion(s, fc, y, w));
    }
  CHECK(fit.criterion <= best + 1e-5);
}

TEST_CASE("jma minimizer against a fine simplex grid") {
  auto s = random_setup(45, 6, {2, 4, 6}, 66);
  RngStream rng(67);
  Eigen::VectorXd y(45);
  for (int i = 0; i < 45; ++i)
    y[i] = 0.8 * s.X(i, 0) + 0.4 * s.X(i, 2) + (1.0 + 0.3 * s.X(i, 1)) * rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  const auto fit = fit_jma(fc, WeightSet::simplex);
  double best = std::numeric_limits<double>::infinity();
  const int steps = 1000;
  Eigen::VectorXd w(3);
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps - i; ++j) {
      w << i / 1000.0, j / 1000.0, 1.0 - (i + j) / 1000.0;
      best = std::min(best, jma_criterion(fc, y, w));
    }
  CHECK(fit.criterion <= best + 1e-5);

  // on the simplex the criterion equals the weighted-residual form
  const Eigen::VectorXd ew = fc.loo_resid * fit.w.w;
  CHECK(fit.criterion == doctest::Approx(ew.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("jma2 relaxes the simplex and never does worse in criterion") {
  for (std::uint64_t seed = 70; seed < 90; ++seed) {
    auto s = random_setup(50, 6, {1, 2, 4, 6}, seed);
    RngStream rng(seed + 500);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i)
      y[i] = 0.5 * s.X(i, 0) + 0.3 * s.X(i, 1) + rng.gaussian();
    const auto fc = fit_nested(y, s.design, 4);
    const auto simplex = fit_jma(fc, WeightSet::simplex);
    const auto box = fit_jma(fc, WeightSet::box);
    CHECK(box.criterion <= simplex.criterion + 1e-9);
    CHECK((box.w.w.array() >= -1e-12).all());
    CHECK((box.w.w.array() <= 1.0 + 1e-12).all());
  }
  CHECK_THROWS_AS(
      fit_jma(random_setup(30, 4, {2, 4}, 7).design.Q().col(0),
              random_setup(30, 4, {2, 4}, 7).design, 2, WeightSet::grid),
      DomainError);
}

TEST_CASE("criterion convexity along random chords") {
  auto s = random_setup(40, 5, {1, 3, 5}, 91);
  RngStream rng(92);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = s.X(i, 0) + rng.gaussian();
  const auto fc = fit_nested(y, s.design, 3);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd a(3), b(3);
    double sa = 0.0, sb = 0.0;
    for (int m = 0; m < 3; ++m) {
      a[m] = -std::log(rng.uniform());
      b[m] = -std::log(rng.uniform());
      sa += a[m];
      sb += b[m];
    }
    a /= sa;
    b /= sb;
    const Eigen::VectorXd mid = 0.5 * (a + b);
    CHECK(mma_criterion(s, fc, y, mid) <=
          0.5 * (mma_criterion(s, fc, y, a) + mma_criterion(s, fc, y, b)) + 1e-9);
    CHECK(jma_criterion(fc, y, mid) <=
          0.5 * (jma_criterion(fc, y, a) + jma_criterion(fc, y, b)) + 1e-9);
  }
}

TEST_CASE("averaged_fit equals the dense stacked projection") {
  auto s = random_setup(35, 5, {2, 3, 5}, 93);
  RngStream rng(94);
  Eigen::VectorXd y(35);
  for (int i = 0; i < 35; ++i) y[i] = rng.gaussian();
  Eigen::VectorXd w(3);
  w << 0.2, 0.3, 0.5;
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(35);
  for (int m = 1; m <= 3; ++m)
    dense += w[m - 1] * testor::dense_hat(s.X.leftCols(s.design.nu(m))) * y;
  CHECK((averaged_fit(s.design, y, w) - dense).norm() < 1e-9);
}
