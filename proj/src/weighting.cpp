#include "subid/weighting.hpp"

#include <cmath>

#include "subid/error.hpp"

namespace subid {

const char* weighting_name(WeightingKind kind) noexcept {
  switch (kind) {
    case WeightingKind::OKID: return "okid";
    case WeightingKind::N4SID: return "n4sid";
    case WeightingKind::MOESP: return "moesp";
    case WeightingKind::IVM: return "ivm";
    case WeightingKind::CVA: return "cva";
    case WeightingKind::Custom: return "custom";
  }
  return "unknown";
}

std::optional<WeightingKind> parse_weighting(const std::string& name) {
  for (auto k : {WeightingKind::OKID, WeightingKind::N4SID, WeightingKind::MOESP,
                 WeightingKind::IVM, WeightingKind::CVA})
    if (name == weighting_name(k)) return k;
  return std::nullopt;
}

namespace {

struct Eig {
  Vector values;
  Matrix vectors;
  double floor;
};

Eig symmetric_eig(const Matrix& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": matrix must be square");
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  const double floor = 1e-12 * M.trace() / static_cast<double>(M.rows());
  return {es.eigenvalues(), es.eigenvectors(), std::max(floor, 0.0)};
}

Matrix from_eig(const Eig& e, const Vector& fvals) {
  return e.vectors * fvals.asDiagonal() * e.vectors.transpose();
}

}  // namespace

Matrix sqrt_psd(const Matrix& M) {
  const Eig e = symmetric_eig(M, "sqrt_psd");
  Vector r(e.values.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double l = e.values(j);
    if (l < -e.floor)
      throw Error(ErrorCode::NotPositiveDefinite,
                  "sqrt_psd: eigenvalue " + format_double(l, 6) + " is negative");
    r(j) = l > 0.0 ? std::sqrt(l) : 0.0;
  }
  return from_eig(e, r);
}

Matrix inv_sqrt_psd(const Matrix& M) {
  const Eig e = symmetric_eig(M, "inv_sqrt_psd");
  Vector r(e.values.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double l = e.values(j);
    if (!(l > e.floor))
      throw Error(ErrorCode::NotPositiveDefinite, "inv_sqrt_psd: eigenvalue " +
                                                      format_double(l, 6) +
                                                      " is not above the floor " +
                                                      format_double(e.floor, 6));
    r(j) = 1.0 / std::sqrt(l);
  }
  return from_eig(e, r);
}

namespace {

// Root and inverse root of a Gram that has to be positive definite.
struct Roots {
  Matrix root;
  Matrix inv_root;
  double min_eig;
};

Roots pd_roots(const Matrix& M, const char* what) {
  const Eig e = symmetric_eig(M, what);
  const double lmin = e.values.minCoeff();
  if (!(lmin > e.floor) || !(M.trace() > 0.0))
    throw Error(ErrorCode::NotPositiveDefinite,
                std::string(what) + " is not positive definite (smallest eigenvalue " +
                    format_double(lmin, 6) + "); excitation or N is insufficient");
  const Vector s = e.values.cwiseSqrt();
  return {from_eig(e, s), from_eig(e, s.cwiseInverse()), lmin};
}

void check_invertible(const Matrix& W, const char* what) {
  if (W.rows() != W.cols() || W.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be square");
  Eigen::JacobiSVD<Matrix> svd(W);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-12 * s(0)))
    throw Error(ErrorCode::RankDeficient,
                std::string(what) + " is not invertible (condition number " +
                    format_double(s(0) / s(s.size() - 1), 6) + ")");
}

void fill_diagnostics(WeightingPair& w) {
  w.diagnostics.w1_norm = spectral_norm(w.W1);
  w.diagnostics.w2_norm = spectral_norm(w.W2);
  w.diagnostics.w1_inv_norm = spectral_norm(w.W1inv);
  w.diagnostics.w2_inv_norm = spectral_norm(w.W2inv);
}

}  // namespace

WeightingPair custom_weighting(const Matrix& W1, const Matrix& W2) {
  check_invertible(W1, "W1");
  check_invertible(W2, "W2");
  WeightingPair w;
  w.kind = WeightingKind::Custom;
  w.W1 = W1;
  w.W2 = W2;
  w.W1inv = W1.partialPivLu().inverse();
  w.W2inv = W2.partialPivLu().inverse();
  fill_diagnostics(w);
  return w;
}

WeightingPair build_weighting(WeightingKind kind, const RegressorBundle& bundle) {
  if (kind == WeightingKind::Custom)
    throw Error(ErrorCode::InvalidArgument, "custom weightings are built with custom_weighting");
  const auto fy = bundle.Yf.rows(), pz = bundle.Zp.rows();
  const double n = static_cast<double>(bundle.cfg.N);
  WeightingPair w;
  w.kind = kind;
  w.W1 = w.W1inv = Matrix::Identity(fy, fy);
  w.W2 = w.W2inv = Matrix::Identity(pz, pz);
  double min_eig = 1.0;

  if (kind == WeightingKind::N4SID || kind == WeightingKind::IVM) {
    const Matrix zz = bundle.Zp * bundle.Zp.transpose() / n;
    const Roots r = pd_roots(0.5 * (zz + zz.transpose()), "Zp Zp^T / N");
    min_eig = std::min(min_eig, r.min_eig);
    if (kind == WeightingKind::N4SID) {
      w.W2 = r.root;
      w.W2inv = r.inv_root;
    } else {
      const ProjectedGrams g = projected_grams(bundle);
      const Matrix zpz = g.ZZ / n;
      const Roots rp = pd_roots(0.5 * (zpz + zpz.transpose()), "Zp Pi Zp^T / N");
      min_eig = std::min(min_eig, rp.min_eig);
      w.W2 = zpz * r.inv_root;
      // (zpz S^{-1})^{-1} = S zpz^{-1}
      w.W2inv = zpz.ldlt().solve(r.root).transpose();
      const Roots ry = pd_roots(g.YY / n, "Yf Pi Yf^T / N");
      min_eig = std::min(min_eig, ry.min_eig);
      w.W1 = ry.inv_root;
      w.W1inv = ry.root;
    }
  } else if (kind == WeightingKind::MOESP || kind == WeightingKind::CVA) {
    const ProjectedGrams g = projected_grams(bundle);
    const Roots rp = pd_roots(g.ZZ / n, "Zp Pi Zp^T / N");
    min_eig = std::min(min_eig, rp.min_eig);
    w.W2 = rp.root;
    w.W2inv = rp.inv_root;
    if (kind == WeightingKind::CVA) {
      const Roots ry = pd_roots(g.YY / n, "Yf Pi Yf^T / N");
      min_eig = std::min(min_eig, ry.min_eig);
      w.W1 = ry.inv_root;
      w.W1inv = ry.root;
    }
  }
  w.diagnostics.min_eig_before_sqrt = min_eig;
  fill_diagnostics(w);
  return w;
}

}  // namespace subid
