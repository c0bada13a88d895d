#pragma once

#include <complex>
#include <vector>

#include "subid/hankel.hpp"
#include "subid/regression.hpp"
#include "subid/weighting.hpp"

namespace subid {

struct BalancedRealization {
  Matrix GammaF;          // f ny x nx
  Matrix Lp;              // nx x p(ny+nu)
  Vector singular_values;  // all singular values of W1 Hfp W2, descending
  Eigen::Index nx = 0;
  Eigen::Index nu = 0;
  Eigen::Index ny = 0;
  HorizonConfig cfg;
};

enum class RealizationKind { CvaType, MoespType };

const char* realization_name(RealizationKind kind) noexcept;
std::optional<RealizationKind> parse_realization(const std::string& name);

struct SystemEstimate {
  Matrix A;
  Matrix B;
  Matrix C;
  RealizationKind realization = RealizationKind::CvaType;
  WeightingKind weighting = WeightingKind::OKID;

  std::vector<std::complex<double>> eigenvalues() const;
  /// [C B, C A B, ...]
  std::vector<Matrix> markov(std::size_t count) const;
};

/// Gamma = W1^{-1} U1 S1^{1/2}, L = S1^{1/2} V1^T W2^{-1} from the SVD of
/// W1 Hfp W2. A tie between singular values nx and nx+1 (within 1e-12 of the
/// largest) is reported as an ambiguous order.
BalancedRealization weighted_svd_truncate(const HankelEstimate& est, const WeightingPair& pair,
                                          Eigen::Index nx);

/// Same factorisation from a raw matrix (the estimate's cfg/nu/ny are taken
/// from the arguments).
BalancedRealization weighted_svd_truncate(const Matrix& H, const WeightingPair& pair,
                                          Eigen::Index nx, const HorizonConfig& cfg,
                                          Eigen::Index nu, Eigen::Index ny);

/// State regression: X = L Zp, C = Yf1 X^dagger, [A B] = X+ [X; Uf1]^dagger
/// over the N-1 aligned columns.
SystemEstimate realize_cva(const BalancedRealization& real, const RegressorBundle& bundle,
                           WeightingKind weighting = WeightingKind::OKID);

/// Shift invariance: C = first block row of Gamma, A = (Gamma^-)^dagger Gamma^+,
/// B = last nu columns of L.
SystemEstimate realize_moesp(const BalancedRealization& real,
                             WeightingKind weighting = WeightingKind::OKID);

/// Orthogonal T minimising ||G_hat - G_ref T||_F.
Matrix align_similarity(const Matrix& G_hat, const Matrix& G_ref);

/// Order with the largest ratio between consecutive singular values
/// (diagnostic only, never applied automatically).
Eigen::Index suggest_order(const Vector& singular_values);

}  // namespace subid
