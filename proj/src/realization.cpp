#include "subid/realization.hpp"

#include <cmath>
#include <limits>

#include "subid/error.hpp"

namespace subid {

const char* realization_name(RealizationKind kind) noexcept {
  return kind == RealizationKind::CvaType ? "cva" : "moesp";
}

std::optional<RealizationKind> parse_realization(const std::string& name) {
  if (name == "cva") return RealizationKind::CvaType;
  if (name == "moesp") return RealizationKind::MoespType;
  return std::nullopt;
}

std::vector<std::complex<double>> SystemEstimate::eigenvalues() const {
  Eigen::EigenSolver<Matrix> es(A, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                        es.eigenvalues().data() + es.eigenvalues().size());
  return out;
}

std::vector<Matrix> SystemEstimate::markov(std::size_t count) const {
  std::vector<Matrix> out;
  Matrix ab = B;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(C * ab);
    ab = A * ab;
  }
  return out;
}

BalancedRealization weighted_svd_truncate(const Matrix& H, const WeightingPair& pair,
                                          Eigen::Index nx, const HorizonConfig& cfg,
                                          Eigen::Index nu, Eigen::Index ny) {
  if (pair.W1.rows() != H.rows() || pair.W2.cols() != H.cols())
    throw Error(ErrorCode::InvalidArgument, "weighting dimensions do not match the Hankel estimate");
  const auto kmax = std::min(H.rows(), H.cols());
  if (nx < 1 || nx > kmax)
    throw Error(ErrorCode::InvalidArgument, "order nx = " + std::to_string(nx) +
                                                " must lie in [1, " + std::to_string(kmax) + "]");
  const Matrix M = pair.W1 * H * pair.W2;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (!(s(nx - 1) > 0.0))
    throw Error(ErrorCode::RankDeficient, "weighted Hankel estimate has rank below nx = " +
                                              std::to_string(nx));
  if (nx < s.size() && std::abs(s(nx - 1) - s(nx)) <= 1e-12 * s(0))
    throw Error(ErrorCode::OrderAmbiguous,
                "singular values " + std::to_string(nx) + " and " + std::to_string(nx + 1) +
                    " tie at " + format_double(s(nx - 1), 6) + "; order cut is ambiguous");

  const Vector root = s.head(nx).cwiseSqrt();
  BalancedRealization r;
  r.GammaF = pair.W1inv * svd.matrixU().leftCols(nx) * root.asDiagonal();
  r.Lp = root.asDiagonal() * svd.matrixV().leftCols(nx).transpose() * pair.W2inv;
  r.singular_values = s;
  r.nx = nx;
  r.nu = nu;
  r.ny = ny;
  r.cfg = cfg;
  return r;
}

BalancedRealization weighted_svd_truncate(const HankelEstimate& est, const WeightingPair& pair,
                                          Eigen::Index nx) {
  return weighted_svd_truncate(est.Hfp, pair, nx, est.cfg, est.nu, est.ny);
}

namespace {

Matrix checked_right_solve(const Matrix& rhs, const Matrix& lhs, const char* what) {
  Eigen::JacobiSVD<Matrix> svd(lhs);
  const auto& s = svd.singularValues();
  if (lhs.cols() < lhs.rows() || !(s(s.size() - 1) > kRankTol * s(0)))
    throw Error(ErrorCode::RankDeficient,
                std::string(what) + " is rank deficient (smallest singular value " +
                    format_double(lhs.cols() < lhs.rows() ? 0.0 : s(s.size() - 1), 6) + ")");
  Eigen::ColPivHouseholderQR<Matrix> qr(lhs.transpose());
  return qr.solve(rhs.transpose()).transpose();
}

}  // namespace

SystemEstimate realize_cva(const BalancedRealization& real, const RegressorBundle& bundle,
                           WeightingKind weighting) {
  if (real.Lp.cols() != bundle.Zp.rows())
    throw Error(ErrorCode::InvalidArgument, "realization and bundle use different horizons");
  if (bundle.cfg.N < 2)
    throw Error(ErrorCode::InsufficientData, "state regression needs N >= 2");
  const Matrix X = real.Lp * bundle.ZpAligned();
  const Matrix Xplus = real.Lp * bundle.ZpPlus;
  SystemEstimate est;
  est.realization = RealizationKind::CvaType;
  est.weighting = weighting;
  est.C = checked_right_solve(bundle.Yf1, X, "state estimate");
  Matrix psi(real.nx + bundle.nu, X.cols());
  psi << X, bundle.Uf1;
  const Matrix ab = checked_right_solve(Xplus, psi, "[state; input] regressor");
  est.A = ab.leftCols(real.nx);
  est.B = ab.rightCols(bundle.nu);
  return est;
}

SystemEstimate realize_moesp(const BalancedRealization& real, WeightingKind weighting) {
  const auto f = real.cfg.f, ny = real.ny;
  if (f < 2)
    throw Error(ErrorCode::InvalidArgument, "shift-invariance realization needs f >= 2");
  const Matrix gminus = real.GammaF.topRows((f - 1) * ny);
  const Matrix gplus = real.GammaF.bottomRows((f - 1) * ny);
  Eigen::JacobiSVD<Matrix> svd(gminus);
  const auto& s = svd.singularValues();
  if (gminus.rows() < real.nx || !(s(s.size() - 1) > kRankTol * s(0)))
    throw Error(ErrorCode::RankDeficient, "upper block of Gamma_f is rank deficient");
  SystemEstimate est;
  est.realization = RealizationKind::MoespType;
  est.weighting = weighting;
  est.C = real.GammaF.topRows(ny);
  est.A = gminus.colPivHouseholderQr().solve(gplus);
  est.B = real.Lp.rightCols(real.nu);
  return est;
}

Matrix align_similarity(const Matrix& G_hat, const Matrix& G_ref) {
  if (G_hat.rows() != G_ref.rows() || G_hat.cols() != G_ref.cols())
    throw Error(ErrorCode::InvalidArgument, "alignment needs factors of equal shape");
  const Matrix cross = G_ref.transpose() * G_hat;
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-14 * std::max(s(0), 1e-300)))
    throw Error(ErrorCode::RankDeficient, "cross Gramian of the factors is singular");
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::Index suggest_order(const Vector& s) {
  Eigen::Index best = 1;
  double best_ratio = 0.0;
  for (Eigen::Index k = 0; k + 1 < s.size(); ++k) {
    if (!(s(k) > 0.0)) break;
    const double ratio = s(k + 1) > 0.0 ? s(k) / s(k + 1) : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k + 1;
    }
    if (std::isinf(ratio)) break;
  }
  return best;
}

}  // namespace subid
