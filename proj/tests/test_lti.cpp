#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "subid/error.hpp"
#include "subid/lti.hpp"

using namespace subid;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

StateSpaceModel scalar_model(double a, double b, double c, double k, double s) {
  return StateSpaceModel(m1(a), m1(b), m1(c), m1(k), m1(s));
}

}  // namespace

TEST_CASE("simulate: sample output variance near the stationary value") {
  const auto model = benchmark_model();
  const auto traj = simulate(model, 2500, InputSpec{WhiteGaussianInput{1.0}, 7}, 8);
  REQUIRE(traj.length() == 2500);
  REQUIRE(traj.u.size() == 2500);
  // Var(x) from x+ = 0.7 x + u + 2.4 e, then Var(y) = Var(x) + 4.
  const oracle::Matrix P = oracle::lyapunov(m1(0.7), m1(1.0 + 2.4 * 2.4));
  const double var_y = P(0, 0) + 4.0;
  double mean = 0.0, sq = 0.0;
  for (const auto& y : traj.y) mean += y(0);
  mean /= 2500.0;
  for (const auto& y : traj.y) sq += (y(0) - mean) * (y(0) - mean);
  const double sample = sq / 2499.0;
  CHECK(std::abs(sample - var_y) <= 0.2 * var_y);
}

TEST_CASE("simulate: first output is pure noise") {
  const auto model = benchmark_model();
  const auto traj = simulate(model, 1, InputSpec{}, 3);
  REQUIRE(traj.e.has_value());
  CHECK(traj.y[0](0) == doctest::Approx(2.0 * (*traj.e)[0](0)).epsilon(1e-15));
}

TEST_CASE("simulate: noise-free output is the input convolved with the impulse response") {
  const auto model = scalar_model(0.7, 1.0, 1.0, 0.0, 0.0);
  const auto traj = simulate(model, 40, InputSpec{WhiteGaussianInput{1.0}, 11}, 12);
  const auto h = oracle::series_divide({0.0, 1.0}, {1.0, -0.7}, 40);
  for (std::size_t k = 0; k < 40; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= k; ++j) acc += h[j] * traj.u[k - j](0);
    CHECK(traj.y[k](0) == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("simulate: same seeds give identical trajectories") {
  const auto model = benchmark_model();
  const auto a = simulate(model, 50, InputSpec{ColoredAR2Input{}, 5}, 9);
  const auto b = simulate(model, 50, InputSpec{ColoredAR2Input{}, 5}, 9);
  for (std::size_t k = 0; k < 50; ++k) {
    CHECK(a.u[k](0) == b.u[k](0));
    CHECK(a.y[k](0) == b.y[k](0));
  }
}

TEST_CASE("colored input with an unstable AR filter is rejected") {
  InputSpec spec{ColoredAR2Input{1.0, 0.5, 0.9}, 1};
  CHECK_THROWS_AS(generate_input(spec, 1, 10), Error);
}

TEST_CASE("model construction enforces stability") {
  CHECK_THROWS_AS(scalar_model(1.0, 1.0, 1.0, 0.0, 1.0), Error);
  // A stable but A - K C unstable
  CHECK_THROWS_AS(scalar_model(0.5, 1.0, 1.0, 2.0, 1.0), Error);
  try {
    scalar_model(1.2, 1.0, 1.0, 0.0, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unstable);
  }
}

TEST_CASE("dare: no process noise gives a zero gain") {
  StandardNoiseModel sm{m1(0.6), m1(1.0), m1(1.0), m1(0.0), m1(1.0), Matrix()};
  const auto r = dare_to_innovations(sm);
  CHECK(std::abs(r.P(0, 0)) < 1e-12);
  CHECK(std::abs(r.model.K()(0, 0)) < 1e-12);
  CHECK(r.model.SigmaE()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dare: scalar case matches the quadratic root") {
  StandardNoiseModel sm{m1(0.5), m1(1.0), m1(1.0), m1(1.0), m1(1.0), Matrix()};
  const auto r = dare_to_innovations(sm);
  // P = 0.25 P + 1 - 0.25 P^2 / (P + 1)  <=>  P^2 - 0.25 P - 1 = 0
  const double root = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const double P = r.P(0, 0);
  CHECK(std::abs(P * P - 0.25 * P - 1.0) < 1e-10);
  CHECK(P == doctest::Approx(root).epsilon(1e-10));
  CHECK(r.model.K()(0, 0) == doctest::Approx(0.5 * P / (P + 1.0)).epsilon(1e-10));
}

TEST_CASE("dare: benchmark in standard form recovers the ARMAX noise channel") {
  // w = K S e, v = S e with K = 1.2, S = 2
  StandardNoiseModel sm{m1(0.7), m1(1.0), m1(1.0), m1(5.76), m1(4.0), m1(4.8)};
  const auto r = dare_to_innovations(sm);
  const auto h = oracle::series_divide({1.0, 0.5}, {1.0, -0.7}, 3);
  const auto& m = r.model;
  const double s = m.SigmaEHalf()(0, 0);
  CHECK(s * s == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(1.0 == doctest::Approx(h[0]));
  CHECK(m.C()(0, 0) * m.K()(0, 0) == doctest::Approx(h[1]).epsilon(1e-9));
  CHECK(m.C()(0, 0) * m.A()(0, 0) * m.K()(0, 0) == doctest::Approx(h[2]).epsilon(1e-9));
}

TEST_CASE("armax_to_ss maps the benchmark coefficients") {
  const auto m = armax_to_ss(-0.7, 1.0, 0.5, 4.0);
  CHECK(m.A()(0, 0) == doctest::Approx(0.7));
  CHECK(m.B()(0, 0) == doctest::Approx(1.0));
  CHECK(m.C()(0, 0) == doctest::Approx(1.0));
  CHECK(m.K()(0, 0) == doctest::Approx(1.2));
  CHECK(m.SigmaEHalf()(0, 0) == doctest::Approx(2.0));

  const auto fir = armax_to_ss(0.0, 1.0, 0.0, 1.0);
  CHECK(fir.A()(0, 0) == 0.0);
  CHECK(fir.K()(0, 0) == 0.0);

  const auto noinput = armax_to_ss(-0.7, 0.0, 0.5, 4.0);
  CHECK(noinput.B()(0, 0) == 0.0);
  for (const auto& g : markov_parameters(noinput, 5)) CHECK(g(0, 0) == 0.0);
}

TEST_CASE("markov parameters of the benchmark") {
  const auto mk = markov_parameters(benchmark_model(), 3);
  const auto h = oracle::series_divide({0.0, 1.0}, {1.0, -0.7}, 4);
  REQUIRE(mk.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(mk[k](0, 0) == doctest::Approx(h[k + 1]).epsilon(1e-14));
}

TEST_CASE("true_hankel values") {
  const auto m = benchmark_model();
  // A_K = -0.5: L_2 = [A_K K, K, A_K B, B]
  Matrix expect(2, 4);
  expect << -0.6, 1.2, -0.5, 1.0, -0.42, 0.84, -0.35, 0.7;
  CHECK((true_hankel(m, 2, 2) - expect).cwiseAbs().maxCoeff() < 1e-14);
  Matrix e11(1, 2);
  e11 << 1.2, 1.0;
  CHECK((true_hankel(m, 1, 1) - e11).cwiseAbs().maxCoeff() < 1e-14);
  const auto zero = scalar_model(0.7, 0.0, 1.0, 0.0, 1.0);
  CHECK(true_hankel(zero, 3, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toeplitz blocks") {
  const auto m = benchmark_model();
  const Matrix G = input_toeplitz(m, 3);
  Matrix eg(3, 3);
  eg << 0, 0, 0, 1, 0, 0, 0.7, 1, 0;
  CHECK((G - eg).cwiseAbs().maxCoeff() < 1e-14);
  const Matrix H = noise_toeplitz(m, 3);
  Matrix eh(3, 3);
  eh << 2, 0, 0, 2.4, 2, 0, 1.68, 2.4, 2;
  CHECK((H - eh).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("state covariance") {
  const auto m = benchmark_model();
  CHECK(state_covariance(m, 1.0, 1).cwiseAbs().maxCoeff() == 0.0);
  // x_2 = B u_1 + K S e_1
  CHECK(state_covariance(m, 1.0, 2)(0, 0) == doctest::Approx(1.0 + 5.76));
  const oracle::Matrix P = oracle::lyapunov(m1(0.7), m1(1.0 + 5.76));
  CHECK(std::abs(state_covariance(m, 1.0, 100000)(0, 0) - P(0, 0)) < 1e-10);
  CHECK(std::abs(stationary_state_covariance(m, 1.0)(0, 0) - P(0, 0)) < 1e-10);
  const auto quiet = scalar_model(0.7, 0.0, 1.0, 0.0, 1.0);
  CHECK(state_covariance(quiet, 1.0, 50).cwiseAbs().maxCoeff() == 0.0);

  // sigma_u scales the input part only
  const double with2 = state_covariance(m, 2.0, 60)(0, 0);
  const auto only_noise = scalar_model(0.7, 0.0, 1.0, 1.2, 2.0);
  const auto only_input = scalar_model(0.7, 1.0, 1.0, 0.0, 0.0);
  CHECK(with2 == doctest::Approx(state_covariance(only_noise, 1.0, 60)(0, 0) +
                                 4.0 * state_covariance(only_input, 1.0, 60)(0, 0)));
}

TEST_CASE("multivariable model checks") {
  Matrix A(2, 2), B(2, 1), C(1, 2), K(2, 1), S(1, 1);
  A << 0.5, 0.1, 0.0, 0.3;
  B << 1, 1;
  C << 1, 0;
  K << 0.2, 0.1;
  S << 1;
  const StateSpaceModel m(A, B, C, K, S);
  CHECK(m.is_minimal());
  const Matrix O = extended_observability(m, 3);
  CHECK((O.row(2) - C * A * A).norm() < 1e-14);
  const Matrix L = reversed_controllability(m, 2);
  const Matrix AK = A - K * C;
  CHECK((L.col(0) - AK * K).norm() < 1e-14);
  CHECK((L.col(3) - B).norm() < 1e-14);

  Matrix Cbad(1, 2);
  Cbad << 0, 1;  // state 1 unobservable through the upper-triangular A
  const StateSpaceModel unobs(A, B, Cbad, Matrix::Zero(2, 1), S);
  CHECK_FALSE(unobs.is_observable());
}

TEST_CASE("trajectory CSV round trip and parse errors") {
  const auto traj = simulate(benchmark_model(), 20, InputSpec{WhiteGaussianInput{1.0}, 1}, 2);
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  const auto back = read_trajectory_csv(ss);
  REQUIRE(back.length() == 20);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(back.u[k](0) == traj.u[k](0));
    CHECK(back.y[k](0) == traj.y[k](0));
  }

  std::istringstream bad("k,u_1,y_1\n1,0.5,1.0\n2,abc,1.0\n");
  try {
    read_trajectory_csv(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream short_row("k,u_1,y_1\n1,0.5\n");
  CHECK_THROWS_AS(read_trajectory_csv(short_row), Error);
  std::istringstream bad_header("t,u,y\n1,0.5,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad_header), Error);
}

TEST_CASE("model JSON round trip") {
  const auto m = benchmark_model();
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.A()(0, 0) == m.A()(0, 0));
  CHECK(back.K()(0, 0) == m.K()(0, 0));
  CHECK(back.SigmaEHalf()(0, 0) == m.SigmaEHalf()(0, 0));
  CHECK_THROWS_AS(model_from_json("{\"A\": [[0.5]]}"), Error);
  CHECK_THROWS_AS(model_from_json("not json"), Error);
}
