#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "subid/linalg.hpp"

namespace subid {

/// Innovations-form LTI system
///
///   x_{k+1} = A x_k + B u_k + K S e_k
///   y_k     = C x_k + S e_k,          e_k ~ N(0, I),  S = Sigma_e^{1/2}
///
/// Construction enforces rho(A) < 1, rho(A - K C) < 1 and a symmetric PSD
/// noise square root. Minimality is reported by is_minimal() but not enforced,
/// so degenerate channels (B = 0, K = 0) can still be represented.
class StateSpaceModel {
 public:
  StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix k, Matrix sigma_e_half);

  const Matrix& A() const noexcept { return a_; }
  const Matrix& B() const noexcept { return b_; }
  const Matrix& C() const noexcept { return c_; }
  const Matrix& K() const noexcept { return k_; }
  const Matrix& SigmaEHalf() const noexcept { return s_; }

  Eigen::Index nx() const noexcept { return a_.rows(); }
  Eigen::Index nu() const noexcept { return b_.cols(); }
  Eigen::Index ny() const noexcept { return c_.rows(); }

  /// A - K C
  Matrix AK() const { return a_ - k_ * c_; }
  /// S S^T
  Matrix SigmaE() const { return s_ * s_.transpose(); }

  bool is_controllable(double rel_tol = 1e-8) const;
  bool is_observable(double rel_tol = 1e-8) const;
  bool is_minimal(double rel_tol = 1e-8) const {
    return is_controllable(rel_tol) && is_observable(rel_tol);
  }

 private:
  Matrix a_, b_, c_, k_, s_;
};

/// Process/measurement noise parameterization. `S` is the cross covariance
/// E[w_k v_k^T]; it is zero for independent noises and may be left empty.
struct StandardNoiseModel {
  Matrix A, B, C;
  Matrix SigmaW;
  Matrix SigmaV;
  Matrix S;
};

struct WhiteGaussianInput {
  double sigma_u = 1.0;
};

/// u_k = a1 u_{k-1} + a2 u_{k-2} + gain r_k,  r_k ~ N(0, 1)
struct ColoredAR2Input {
  double gain = 0.318;
  double a1 = 0.5;
  double a2 = -0.9;
};

struct InputSpec {
  std::variant<WhiteGaussianInput, ColoredAR2Input> kind = WhiteGaussianInput{};
  std::uint64_t seed = 0;
};

inline constexpr int kColoredWarmup = 200;

struct Trajectory {
  std::vector<Vector> u;
  std::vector<Vector> y;
  std::optional<std::vector<Vector>> e;
  std::optional<std::vector<Vector>> x;
  std::uint64_t seed = 0;

  std::size_t length() const noexcept { return y.size(); }
  Eigen::Index nu() const { return u.empty() ? 0 : u.front().size(); }
  Eigen::Index ny() const { return y.empty() ? 0 : y.front().size(); }
};

Trajectory simulate(const StateSpaceModel& model, std::size_t nbar,
                    const InputSpec& input, std::uint64_t noise_seed);

/// Generates the input samples only (used by simulate and by tests).
std::vector<Vector> generate_input(const InputSpec& input, Eigen::Index nu,
                                   std::size_t nbar);

struct RiccatiResult {
  StateSpaceModel model;
  Matrix P;
  double residual;
  int iterations;
};

/// Kalman predictor gain by fixed-point iteration of the filter Riccati
/// equation, started from P = SigmaW.
RiccatiResult dare_to_innovations(const StandardNoiseModel& std_model,
                                  double tol = 1e-12, int max_iter = 100000);

/// y_k + a y_{k-1} = b u_{k-1} + e_k + c e_{k-1},  e_k ~ N(0, noise_variance)
StateSpaceModel armax_to_ss(double a, double b, double c, double noise_variance);

/// Benchmark ARMAX system (a = -0.7, b = 1, c = 0.5, variance 4).
StateSpaceModel benchmark_model();

/// [CB, CAB, ..., CA^{count-1}B]
std::vector<Matrix> markov_parameters(const StateSpaceModel& model, std::size_t count);

/// [C; CA; ...; CA^{f-1}]
Matrix extended_observability(const StateSpaceModel& model, Eigen::Index f);

/// [A_K^{p-1}K ... K  A_K^{p-1}B ... B]
Matrix reversed_controllability(const StateSpaceModel& model, Eigen::Index p);

/// Gamma_f L_p
Matrix true_hankel(const StateSpaceModel& model, Eigen::Index f, Eigen::Index p);

/// Lower block-triangular Toeplitz of CA^{j}B with zero diagonal (p n_y x p n_u).
Matrix input_toeplitz(const StateSpaceModel& model, Eigen::Index p);

/// Noise Toeplitz: diagonal S, sub-diagonals CA^{j}KS (p n_y x p n_y).
Matrix noise_toeplitz(const StateSpaceModel& model, Eigen::Index p);

/// E[x_N x_N^T] from x_1 = 0 with white input of standard deviation sigma_u.
Matrix state_covariance(const StateSpaceModel& model, double sigma_u, std::uint64_t N);

/// Limit of state_covariance as N grows.
Matrix stationary_state_covariance(const StateSpaceModel& model, double sigma_u);

/// Trajectory CSV: header `k,u_1..u_nu,y_1..y_ny`, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

/// JSON with keys A, B, C, K, SigmaEHalf (row-major nested arrays).
std::string model_to_json(const StateSpaceModel& model);
StateSpaceModel model_from_json(const std::string& text);

}  // namespace subid
