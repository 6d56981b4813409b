#include <cstring>

#include "doctest.h"
#include "nestavg/qp.hpp"
#include "nestavg/rng.hpp"
#include "oracles.hpp"

using namespace nestavg;

namespace {

Eigen::MatrixXd random_psd(int M, RngStream& rng, int rank = 0) {
  if (rank <= 0) rank = M;
  Eigen::MatrixXd A(rank, M);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < M; ++j) A(i, j) = rng.gaussian();
  return A.transpose() * A;
}

}  // namespace

TEST_CASE("nearest vertex and uniform solutions") {
  const int M = 5;
  for (int k = 0; k < M; ++k) {
    qp::QpProblem p;
    p.H = Eigen::MatrixXd::Identity(M, M);
    p.g = Eigen::VectorXd::Zero(M);
    p.g[k] = -1.0;
    p.set = WeightSet::simplex;
    const auto s = qp::solve(p);
    Eigen::VectorXd ek = Eigen::VectorXd::Zero(M);
    ek[k] = 1.0;
    CHECK((s.w.w - ek).cwiseAbs().maxCoeff() < 1e-10);
  }
  qp::QpProblem p;
  p.H = Eigen::MatrixXd::Identity(M, M);
  p.g = Eigen::VectorXd::Zero(M);
  p.set = WeightSet::simplex;
  const auto s = qp::solve(p);
  CHECK((s.w.w.array() - 1.0 / M).abs().maxCoeff() < 1e-10);
}

TEST_CASE("simplex solutions match a fine grid search") {
  RngStream rng(21);
  for (int t = 0; t < 10; ++t) {
    qp::QpProblem p;
    p.H = random_psd(3, rng);
    p.g = Eigen::VectorXd(3);
    for (int i = 0; i < 3; ++i) p.g[i] = 2.0 * rng.gaussian();
    p.set = WeightSet::simplex;
    const auto s = qp::solve(p);
    const double best = testor::simplex_grid_best(p.H, p.g, 1000);
    CHECK(s.value <= best + 1e-5);
    CHECK(s.kkt_residual < 1e-8);
    CHECK(std::abs(s.w.w.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("M=4 simplex against the literal 1e-3 grid") {
  RngStream rng(22);
  qp::QpProblem p;
  p.H = random_psd(4, rng);
  p.g = Eigen::VectorXd(4);
  for (int i = 0; i < 4; ++i) p.g[i] = rng.gaussian();
  p.set = WeightSet::simplex;
  const auto s = qp::solve(p);

  // full 1e-3 grid; along the last free coordinate the objective is the
  // quadratic f0 + t b + t^2 a / 2, so every grid point is evaluated exactly
  const int steps = 1000;
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Vector4d dir(0.0, 0.0, 1.0, -1.0);
  const double a = dir.dot(p.H * dir);
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps - i; ++j) {
      const double wi = i / 1000.0, wj = j / 1000.0;
      const Eigen::Vector4d base(wi, wj, 0.0, 1.0 - wi - wj);
      const double f0 = 0.5 * base.dot(p.H * base) + p.g.dot(base);
      const double b = (p.H * base + p.g).dot(dir);
      for (int k = 0; k <= steps - i - j; ++k) {
        const double t = k / 1000.0;
        best = std::min(best, f0 + t * b + 0.5 * t * t * a);
      }
    }
  CHECK(s.value <= best + 1e-5);
}

TEST_CASE("box diagonal closed form") {
  RngStream rng(23);
  const int M = 6;
  Eigen::VectorXd hd(M), g(M);
  for (int i = 0; i < M; ++i) {
    hd[i] = 0.2 + 2.0 * rng.uniform();
    g[i] = 3.0 * rng.gaussian();
  }
  qp::QpProblem p;
  p.H = hd.asDiagonal();
  p.g = g;
  p.set = WeightSet::box;
  const auto s = qp::solve(p);
  for (int i = 0; i < M; ++i) {
    const double closed = std::clamp(-g[i] / hd[i], 0.0, 1.0);
    CHECK(s.w.w[i] == doctest::Approx(closed).epsilon(1e-12));
  }
  CHECK(s.kkt_residual < 1e-10);
}

TEST_CASE("box against a long projected coordinate descent") {
  RngStream rng(24);
  for (int t = 0; t < 8; ++t) {
    const int M = 5;
    qp::QpProblem p;
    p.H = random_psd(M, rng) + 0.5 * Eigen::MatrixXd::Identity(M, M);
    p.g = Eigen::VectorXd(M);
    for (int i = 0; i < M; ++i) p.g[i] = 2.0 * rng.gaussian();
    p.set = WeightSet::box;
    const auto s = qp::solve(p);

    Eigen::VectorXd w = Eigen::VectorXd::Constant(M, 0.5);
    for (int sweep = 0; sweep < 4000; ++sweep)
      for (int i = 0; i < M; ++i) {
        const double grad = p.H.row(i).dot(w) + p.g[i];
        w[i] = std::clamp(w[i] - grad / p.H(i, i), 0.0, 1.0);
      }
    const double ref = 0.5 * w.dot(p.H * w) + p.g.dot(w);
    CHECK(s.value <= ref + 1e-8);
    CHECK(s.kkt_residual < 1e-8);
  }
}

TEST_CASE("grid enumeration and fallbacks") {
  RngStream rng(25);
  qp::QpProblem p;
  p.H = random_psd(4, rng);
  p.g = Eigen::VectorXd(4);
  for (int i = 0; i < 4; ++i) p.g[i] = rng.gaussian();
  p.set = WeightSet::grid;
  p.grid_N = 3;
  const auto s = qp::solve(p);
  CHECK_NOTHROW(s.w.validate());

  double best = std::numeric_limits<double>::infinity();
  testor::enum_grid_weights(4, 3, [&](const Eigen::VectorXd& w) {
    best = std::min(best, 0.5 * w.dot(p.H * w) + p.g.dot(w));
  });
  CHECK(s.value == doctest::Approx(best).epsilon(1e-12));
  CHECK_FALSE(s.heuristic);

  SUBCASE("budget overflow raises or falls back per options") {
    qp::QpProblem big;
    const int M = 40;
    RngStream r2(26);
    big.H = Eigen::MatrixXd::Identity(M, M);
    big.g = Eigen::VectorXd(M);
    for (int i = 0; i < M; ++i) big.g[i] = r2.gaussian();
    big.set = WeightSet::grid;
    big.grid_N = 12;
    qp::Options strict;
    strict.allow_heuristic = false;
    CHECK_THROWS_AS(qp::solve(big, strict), TooLargeGridError);
    const auto h = qp::solve(big);  // heuristic allowed by default
    CHECK(h.heuristic);
    CHECK_NOTHROW(h.w.validate());
  }
}

TEST_CASE("cardinality") {
  CHECK(qp::grid_cardinality(3, 2) == 6);    // C(4,2)
  CHECK(qp::grid_cardinality(6, 4) == 126);  // C(9,5)
  CHECK(qp::grid_cardinality(1, 7) == 1);
}

TEST_CASE("indefinite H is rejected, singular H regularized") {
  qp::QpProblem p;
  p.H = -Eigen::MatrixXd::Identity(3, 3);
  p.g = Eigen::VectorXd::Zero(3);
  p.set = WeightSet::simplex;
  CHECK_THROWS_AS(qp::solve(p), NotPsdError);

  RngStream rng(27);
  qp::QpProblem s;
  s.H = random_psd(5, rng, 2);  // rank 2
  s.g = Eigen::VectorXd(5);
  for (int i = 0; i < 5; ++i) s.g[i] = rng.gaussian();
  s.set = WeightSet::simplex;
  const auto sol = qp::solve(s);
  CHECK(sol.kkt_residual < 1e-8);
  CHECK(std::abs(sol.w.w.sum() - 1.0) < 1e-12);

  qp::QpProblem z;  // fully degenerate objective
  z.H = Eigen::MatrixXd::Zero(4, 4);
  z.g = Eigen::VectorXd::Zero(4);
  z.set = WeightSet::simplex;
  const auto zs = qp::solve(z);
  CHECK(std::abs(zs.w.w.sum() - 1.0) < 1e-12);
  CHECK(zs.value == doctest::Approx(0.0));
}

TEST_CASE("determinism") {
  RngStream rng(28);
  qp::QpProblem p;
  p.H = random_psd(6, rng);
  p.g = Eigen::VectorXd(6);
  for (int i = 0; i < 6; ++i) p.g[i] = rng.gaussian();
  for (WeightSet set : {WeightSet::simplex, WeightSet::box}) {
    p.set = set;
    const auto a = qp::solve(p);
    const auto b = qp::solve(p);
    CHECK(std::memcmp(a.w.w.data(), b.w.w.data(), sizeof(double) * 6) == 0);
  }
}

TEST_CASE("weight vector validation") {
  WeightVector w = WeightVector::point_mass(4, 2);
  CHECK_NOTHROW(w.validate());
  w.w[0] = 0.5;
  CHECK_THROWS_AS(w.validate(), DimensionError);  // sum != 1
  WeightVector g;
  g.set = WeightSet::grid;
  g.grid_N = 2;
  g.w = Eigen::VectorXd(3);
  g.w << 0.5, 0.25, 0.25;
  CHECK_THROWS_AS(g.validate(), DimensionError);  // 0.25 not multiple of 1/2
  g.w << 0.5, 0.5, 0.0;
  CHECK_NOTHROW(g.validate());
}
