#pragma once

#include <vector>

#include "subid/hankel.hpp"
#include "subid/linalg.hpp"

namespace subid {

enum class RegressionMethod { ParsimBank, OneStep };

/// Strict: a numerically rank-deficient regressor is an error.
/// MinimumNorm: the minimum-norm least-squares solution is returned instead;
/// meant for noise-free data where the outputs are exactly determined by the
/// past and the regressor rank equals p nu + i nu + nx.
enum class RankPolicy { Strict, MinimumNorm };

struct HankelEstimate {
  Matrix Hfp;                  // f ny x p(ny+nu)
  std::vector<Matrix> thetas;  // ParsimBank: f entries, ny x d_{p,i}; OneStep: one entry
  RegressionMethod method = RegressionMethod::ParsimBank;
  HorizonConfig cfg;
  Eigen::Index nu = 0;
  Eigen::Index ny = 0;

  /// Theta_i for i = 1..f (ParsimBank only).
  const Matrix& theta(Eigen::Index i) const;
  /// Trailing i nu columns of Theta_i, the estimated input Toeplitz block row.
  Matrix G(Eigen::Index i) const;
};

/// Relative singular-value threshold used for rank decisions.
inline constexpr double kRankTol = 1e-10;

/// Row block i solves Y_fi = Theta_i [Zp; U_i] in the least-squares sense.
/// Uses one QR factorisation of [Zp; Uf]^T whose nested leading blocks give
/// every regression of the bank.
HankelEstimate fit_parsim(const RegressorBundle& bundle, RankPolicy policy = RankPolicy::Strict);

/// Theta = Yf [Zp; Uf]^dagger; the leading p(ny+nu) columns form Hfp.
HankelEstimate fit_one_step(const RegressorBundle& bundle,
                            RankPolicy policy = RankPolicy::Strict);

/// Yf Pi Zp^T (Zp Pi Zp^T)^{-1} with Pi formed explicitly (N x N), for
/// cross-checking fit_one_step on moderate N.
Matrix hankel_by_projection(const RegressorBundle& bundle);

struct PeCheck {
  bool satisfied = false;
  double lambda_min = 0.0;
};

/// Smallest eigenvalue of Phi_{p,i} Phi_{p,i}^T / N against a floor.
PeCheck check_pe(const RegressorBundle& bundle, Eigen::Index i, double sigma_bar_sq);

}  // namespace subid
