#pragma once

#include <optional>
#include <string>

#include "subid/hankel.hpp"
#include "subid/linalg.hpp"

namespace subid {

enum class WeightingKind { OKID, N4SID, MOESP, IVM, CVA, Custom };

const char* weighting_name(WeightingKind kind) noexcept;
/// Accepts okid, n4sid, moesp, ivm, cva (case-sensitive).
std::optional<WeightingKind> parse_weighting(const std::string& name);

struct WeightingDiagnostics {
  double w1_norm = 0.0;
  double w2_norm = 0.0;
  double w1_inv_norm = 0.0;
  double w2_inv_norm = 0.0;
  /// Smallest eigenvalue among the matrices whose roots were taken (1 when
  /// the pair is data independent).
  double min_eig_before_sqrt = 1.0;
};

struct WeightingPair {
  Matrix W1;
  Matrix W2;
  Matrix W1inv;
  Matrix W2inv;
  WeightingKind kind = WeightingKind::OKID;
  WeightingDiagnostics diagnostics;
};

/// Weighting pairs, with Pi the projector onto the orthogonal complement of
/// the row space of Uf and all Grams divided by N:
///   OKID   I                     I
///   N4SID  I                     (Z Z^T)^{1/2}
///   MOESP  I                     (Z Pi Z^T)^{1/2}
///   IVM    (Y Pi Y^T)^{-1/2}     (Z Pi Z^T)(Z Z^T)^{-1/2}
///   CVA    (Y Pi Y^T)^{-1/2}     (Z Pi Z^T)^{1/2}
/// Inner matrices must be positive definite; nothing is regularised.
WeightingPair build_weighting(WeightingKind kind, const RegressorBundle& bundle);

/// Wraps user matrices; both must be square and numerically invertible.
WeightingPair custom_weighting(const Matrix& W1, const Matrix& W2);

/// Symmetric principal square root. Eigenvalues below
/// -1e-12 trace(M)/dim are an error; smaller negative round-off is set to 0.
Matrix sqrt_psd(const Matrix& M);

/// Inverse of the principal square root; every eigenvalue must exceed
/// 1e-12 trace(M)/dim.
Matrix inv_sqrt_psd(const Matrix& M);

}  // namespace subid
