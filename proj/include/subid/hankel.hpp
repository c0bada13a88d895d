#pragma once

#include "subid/linalg.hpp"
#include "subid/lti.hpp"

namespace subid {

struct HorizonConfig {
  Eigen::Index p = 1;
  Eigen::Index f = 1;
  Eigen::Index N = 1;
};

/// Uses the whole record: N = nbar - p - f + 1.
HorizonConfig full_horizon(std::size_t nbar, Eigen::Index p, Eigen::Index f);

/// Block-Hankel data matrices. Past data is anchored at sample 1, so column c
/// of Zp holds samples c..c+p-1 (oldest first) and column c of Yf starts at
/// sample c+p. ZpPlus/Uf1/Yf1 keep N-1 columns so that column c pairs with
/// column c of Zp.
struct RegressorBundle {
  HorizonConfig cfg;
  Eigen::Index nu = 0;
  Eigen::Index ny = 0;

  Matrix Zp;      // [Y_p; U_p], p(ny+nu) x N
  Matrix Uf;      // f nu x N
  Matrix Yf;      // f ny x N
  Matrix ZpPlus;  // Zp shifted one column, p(ny+nu) x (N-1)
  Matrix Uf1;     // nu x (N-1)
  Matrix Yf1;     // ny x (N-1)

  /// First i block rows of Uf (0 <= i <= f).
  Matrix Ui(Eigen::Index i) const { return Uf.topRows(i * nu); }
  /// Block row i of Yf (1 <= i <= f).
  Matrix Yfi(Eigen::Index i) const { return Yf.middleRows((i - 1) * ny, ny); }
  /// [Zp; Ui] (i = 0 gives Zp).
  Matrix Phi(Eigen::Index i) const;
  /// Zp restricted to the N-1 columns paired with ZpPlus.
  Matrix ZpAligned() const { return Zp.leftCols(cfg.N - 1); }
};

RegressorBundle build_bundle(const Trajectory& traj, const HorizonConfig& cfg);

/// I - Uf^T (Uf Uf^T)^{-1} Uf, N x N.
Matrix projector_complement(const Matrix& Uf);

/// Phi_{p,i} Phi_{p,i}^T / N.
Matrix empirical_covariance(const RegressorBundle& bundle, Eigen::Index i);

/// Gram matrices of Zp and Yf after projecting out the row space of Uf,
/// i.e. Zp Pi Zp^T, Yf Pi Yf^T and Zp Pi Yf^T (not divided by N). Computed
/// from one QR factorisation so Pi is never formed.
struct ProjectedGrams {
  Matrix ZZ;
  Matrix YY;
  Matrix ZY;
};

ProjectedGrams projected_grams(const RegressorBundle& bundle);

}  // namespace subid
