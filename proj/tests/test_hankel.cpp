#include "doctest.h"
#include "oracles.hpp"
#include "subid/bounds.hpp"
#include "subid/error.hpp"
#include "subid/hankel.hpp"

using namespace subid;

namespace {

Trajectory ramp_trajectory() {
  Trajectory t;
  for (int k = 1; k <= 6; ++k) {
    t.y.push_back(Vector::Constant(1, k));
    t.u.push_back(Vector::Constant(1, 10.0 * k));
  }
  return t;
}

Trajectory random_trajectory(std::size_t n, Eigen::Index nu, Eigen::Index ny, unsigned seed) {
  std::srand(seed);
  Trajectory t;
  for (std::size_t k = 0; k < n; ++k) {
    t.u.push_back(Vector::Random(nu));
    t.y.push_back(Vector::Random(ny));
  }
  return t;
}

}  // namespace

TEST_CASE("past Hankel matrix of a ramp") {
  const auto b = build_bundle(ramp_trajectory(), HorizonConfig{2, 2, 3});
  Matrix expect(4, 3);
  expect << 1, 2, 3, 2, 3, 4, 10, 20, 30, 20, 30, 40;
  CHECK(b.Zp == expect);
  Matrix yf(2, 3);
  yf << 3, 4, 5, 4, 5, 6;
  CHECK(b.Yf == yf);
  CHECK(b.ZpPlus == expect.rightCols(2));
  CHECK(b.Uf1 == b.Uf.topLeftCorner(1, 2));
  CHECK(b.ZpAligned() == expect.leftCols(2));
  CHECK(full_horizon(6, 2, 2).N == 3);
}

TEST_CASE("bundle matches a brute-force builder on random MIMO data") {
  const auto t = random_trajectory(40, 2, 3, 17);
  const auto cfg = full_horizon(40, 4, 3);
  const auto b = build_bundle(t, cfg);
  const int N = static_cast<int>(cfg.N);
  CHECK(b.Zp == oracle::hankel_past(t.y, t.u, 4, N));
  CHECK(b.Yf == oracle::hankel_future(t.y, 4, 3, N));
  CHECK(b.Uf == oracle::hankel_future(t.u, 4, 3, N));
  CHECK(b.Phi(2).rows() == b.Zp.rows() + 4);
  CHECK(b.Phi(0) == b.Zp);
  CHECK(b.Yfi(2) == b.Yf.middleRows(3, 3));
}

TEST_CASE("degenerate widths") {
  const auto t = ramp_trajectory();
  const auto one = build_bundle(t, HorizonConfig{3, 3, 1});
  CHECK(one.Zp.cols() == 1);
  CHECK(one.ZpPlus.cols() == 0);
  const auto f1 = build_bundle(t, HorizonConfig{2, 1, 4});
  CHECK(f1.Uf.leftCols(3) == f1.Uf1);
  CHECK(f1.Yf.leftCols(3) == f1.Yf1);
}

TEST_CASE("short records are reported with the needed count") {
  try {
    build_bundle(ramp_trajectory(), HorizonConfig{3, 3, 2});
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
  CHECK_THROWS_AS(full_horizon(3, 2, 2), Error);
}

TEST_CASE("projector onto the complement of the input rows") {
  // square invertible Uf
  Matrix sq(2, 2);
  sq << 1, 2, 3, 5;
  CHECK(projector_complement(sq).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix ones = Matrix::Ones(1, 9);
  const Matrix P = projector_complement(ones);
  CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((P * ones.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  std::srand(3);
  const Matrix U = Matrix::Random(3, 400);
  CHECK(oracle::norm2(projector_complement(U) * U.transpose()) <= 1e-10 * oracle::norm2(U));

  CHECK_THROWS_AS(projector_complement(Matrix::Zero(1, 5)), Error);
}

TEST_CASE("empirical covariance") {
  Trajectory zero;
  for (int k = 0; k < 30; ++k) {
    zero.u.push_back(Vector::Zero(1));
    zero.y.push_back(Vector::Zero(1));
  }
  const auto bz = build_bundle(zero, full_horizon(30, 3, 3));
  CHECK(empirical_covariance(bz, 2).cwiseAbs().maxCoeff() == 0.0);

  const auto model = benchmark_model();
  const auto traj = simulate(model, 600, InputSpec{WhiteGaussianInput{1.0}, 2}, 3);
  const auto b = build_bundle(traj, full_horizon(600, 4, 4));
  Eigen::SelfAdjointEigenSolver<Matrix> es(empirical_covariance(b, 4));
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  CHECK_THROWS_AS(empirical_covariance(b, 5), Error);
}

TEST_CASE("empirical covariance diagonal against the population covariance") {
  const auto model = benchmark_model();
  const std::size_t nbar = 40000;
  const Eigen::Index p = 2, i = 2;
  const auto traj = simulate(model, nbar, InputSpec{WhiteGaussianInput{1.0}, 21}, 22);
  const auto b = build_bundle(traj, full_horizon(nbar, p, 2));
  const Matrix phi = b.Phi(i);
  const Matrix pop = population_covariance(model, 1.0, p, i, 1u << 20);

  // Standard errors from 20 batch means of the squared regressors.
  const int batches = 20;
  const Eigen::Index w = phi.cols() / batches;
  for (Eigen::Index r = 0; r < phi.rows(); ++r) {
    Vector means(batches);
    for (int k = 0; k < batches; ++k) means(k) = phi.row(r).segment(k * w, w).squaredNorm() / w;
    const double mean = means.mean();
    const double sd = std::sqrt((means.array() - mean).square().sum() / (batches - 1));
    const double se = sd / std::sqrt(static_cast<double>(batches));
    CHECK(std::abs(mean - pop(r, r)) <= 5.0 * se);
  }
}

TEST_CASE("projected Grams agree with the explicit projector") {
  const auto model = benchmark_model();
  const auto traj = simulate(model, 300, InputSpec{WhiteGaussianInput{1.0}, 5}, 6);
  const auto b = build_bundle(traj, full_horizon(300, 3, 3));
  const Matrix P = projector_complement(b.Uf);
  const auto g = projected_grams(b);
  CHECK(oracle::rel_diff(g.ZZ, b.Zp * P * b.Zp.transpose()) < 1e-10);
  CHECK(oracle::rel_diff(g.YY, b.Yf * P * b.Yf.transpose()) < 1e-10);
  CHECK(oracle::rel_diff(g.ZY, b.Zp * P * b.Yf.transpose()) < 1e-10);
}
