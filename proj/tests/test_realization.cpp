#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "subid/error.hpp"
#include "subid/realization.hpp"

using namespace subid;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

WeightingPair identity_pair(Eigen::Index rows, Eigen::Index cols) {
  return custom_weighting(Matrix::Identity(rows, rows), Matrix::Identity(cols, cols));
}

Matrix random_invertible(Eigen::Index n) {
  return Matrix::Random(n, n) + 3.0 * Matrix::Identity(n, n);
}

struct NoiseFree {
  RegressorBundle bundle;
  HankelEstimate est;
};

NoiseFree noise_free_run() {
  const StateSpaceModel m(m1(0.7), m1(1.0), m1(1.0), m1(0.0), m1(0.0));
  const auto traj = simulate(m, 207, InputSpec{WhiteGaussianInput{1.0}, 41}, 42);
  auto b = build_bundle(traj, full_horizon(207, 4, 4));
  auto est = fit_parsim(b, RankPolicy::MinimumNorm);
  return {std::move(b), std::move(est)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("exact Hankel input is reproduced") {
  const Matrix H = true_hankel(benchmark_model(), 5, 5);
  const auto r = weighted_svd_truncate(H, identity_pair(5, 10), 1, HorizonConfig{5, 5, 100}, 1, 1);
  CHECK(oracle::rel_diff(r.GammaF * r.Lp, H) < 1e-10);
  // balanced: Gamma^T Gamma = L L^T = sigma_1
  CHECK((r.GammaF.transpose() * r.GammaF)(0, 0) == doctest::Approx(r.singular_values(0)));
  CHECK((r.Lp * r.Lp.transpose())(0, 0) == doctest::Approx(r.singular_values(0)));
}

TEST_CASE("weighted truncation matches an independent truncated SVD") {
  std::srand(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix Hhat = Matrix::Random(6, 8);
    const Matrix W1 = random_invertible(6), W2 = random_invertible(8);
    const auto pair = custom_weighting(W1, W2);
    const auto r = weighted_svd_truncate(Hhat, pair, 2, HorizonConfig{4, 6, 50}, 1, 1);
    const Matrix ref = oracle::truncated_svd(W1 * Hhat * W2, 2);
    CHECK(oracle::rel_diff(W1 * r.GammaF * r.Lp * W2, ref) < 1e-10);

    const auto ri = weighted_svd_truncate(Hhat, identity_pair(6, 8), 3, HorizonConfig{4, 6, 50}, 1, 1);
    CHECK(oracle::rel_diff(ri.GammaF * ri.Lp, oracle::truncated_svd(Hhat, 3)) < 1e-10);
  }
}

TEST_CASE("order checks") {
  Matrix tie = Matrix::Zero(3, 3);
  tie.diagonal() << 1.0, 1.0, 0.5;
  const auto pair = identity_pair(3, 3);
  try {
    weighted_svd_truncate(tie, pair, 1, HorizonConfig{3, 3, 10}, 1, 1);
    FAIL("expected an ambiguous order");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OrderAmbiguous);
  }
  CHECK_NOTHROW(weighted_svd_truncate(tie, pair, 2, HorizonConfig{3, 3, 10}, 1, 1));
  CHECK_THROWS_AS(weighted_svd_truncate(tie, pair, 4, HorizonConfig{3, 3, 10}, 1, 1), Error);
  CHECK_THROWS_AS(weighted_svd_truncate(tie, pair, 0, HorizonConfig{3, 3, 10}, 1, 1), Error);
}

TEST_CASE("noise-free pipeline recovers the benchmark") {
  const auto run = noise_free_run();
  const auto pair = build_weighting(WeightingKind::OKID, run.bundle);
  const auto real = weighted_svd_truncate(run.est, pair, 1);
  const auto expect = oracle::series_divide({0.0, 1.0}, {1.0, -0.7}, 4);
  const SystemEstimate cva = realize_cva(real, run.bundle);
  const SystemEstimate moe = realize_moesp(real);
  for (const auto* sys : {&cva, &moe}) {
    const auto ev = sys->eigenvalues();
    REQUIRE(ev.size() == 1);
    CHECK(std::abs(ev[0] - std::complex<double>(0.7, 0.0)) <= 1e-6);
    const auto mk = sys->markov(3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(mk[k](0, 0) - expect[k + 1]) <= 1e-6);
  }
  const auto mc = cva.markov(6), mm = moe.markov(6);
  for (int k = 0; k < 6; ++k) CHECK(std::abs(mc[k](0, 0) - mm[k](0, 0)) <= 1e-6);

  // state regression has no residual on exact data
  const Matrix X = real.Lp * run.bundle.ZpAligned();
  CHECK((cva.C * X - run.bundle.Yf1).norm() <= 1e-8 * run.bundle.Yf1.norm());
}

TEST_CASE("shift invariance on exact balanced factors") {
  const auto m = benchmark_model();
  const Matrix H = true_hankel(m, 6, 6);
  const auto r = weighted_svd_truncate(H, identity_pair(6, 12), 1, HorizonConfig{6, 6, 100}, 1, 1);
  const auto sys = realize_moesp(r);
  CHECK(std::abs(sys.eigenvalues()[0].real() - 0.7) < 1e-8);
  CHECK(std::abs((sys.C * sys.B)(0, 0) - 1.0) < 1e-8);

  const StateSpaceModel fir(m1(0.0), m1(1.0), m1(1.0), m1(0.5), m1(1.0));
  const Matrix Hf = true_hankel(fir, 3, 3);
  const auto rf = weighted_svd_truncate(Hf, identity_pair(3, 6), 1, HorizonConfig{3, 3, 100}, 1, 1);
  CHECK(std::abs(realize_moesp(rf).A(0, 0)) < 1e-14);

  const auto r1 = weighted_svd_truncate(H.topRows(1), identity_pair(1, 12), 1,
                                        HorizonConfig{6, 1, 100}, 1, 1);
  CHECK_THROWS_AS(realize_moesp(r1), Error);
}

TEST_CASE("Procrustes alignment") {
  std::srand(5);
  const Matrix G = Matrix::Random(8, 3);
  const Matrix I3 = Matrix::Identity(3, 3);
  CHECK((align_similarity(G, G) - I3).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::HouseholderQR<Matrix> qr(Matrix::Random(3, 3));
  const Matrix Q = qr.householderQ();
  const Matrix T = align_similarity(G * Q, G);
  CHECK((T - Q).cwiseAbs().maxCoeff() < 1e-8);

  for (int k = 0; k < 20; ++k) {
    const Matrix Gh = G * Q + 0.05 * Matrix::Random(8, 3);
    const Matrix Tk = align_similarity(Gh, G);
    CHECK((Gh - G * Tk).norm() <= (Gh - G).norm() + 1e-12);
    CHECK((Gh - G * Tk).norm() <= (Gh - G * Q).norm() + 1e-12);
  }
}

TEST_CASE("pole error of the CVA pipeline shrinks with N") {
  std::vector<double> small, large;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto traj =
        simulate(benchmark_model(), 2500, InputSpec{WhiteGaussianInput{1.0}, s}, s * 7919);
    for (std::size_t n : {std::size_t{500}, std::size_t{2500}}) {
      Trajectory t = traj;
      t.u.resize(n);
      t.y.resize(n);
      const auto b = build_bundle(t, full_horizon(n, 7, 7));
      const auto est = fit_parsim(b);
      const auto real = weighted_svd_truncate(est, build_weighting(WeightingKind::CVA, b), 1);
      const double err = std::abs(realize_cva(real, b).eigenvalues()[0] - 0.7) / 0.7;
      (n == 500 ? small : large).push_back(err);
    }
  }
  CHECK(median(large) < median(small));
}

TEST_CASE("order suggestion") {
  Vector s(4);
  s << 10, 9, 0.1, 0.05;
  CHECK(suggest_order(s) == 2);
  CHECK(parse_realization("moesp") == RealizationKind::MoespType);
  CHECK_FALSE(parse_realization("foo").has_value());
}
