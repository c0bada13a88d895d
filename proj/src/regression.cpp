#include "subid/regression.hpp"

#include "subid/error.hpp"

namespace subid {

const Matrix& HankelEstimate::theta(Eigen::Index i) const {
  if (method != RegressionMethod::ParsimBank)
    throw Error(ErrorCode::InvalidArgument, "per-block estimates exist only for the PARSIM bank");
  if (i < 1 || i > cfg.f) throw Error(ErrorCode::InvalidArgument, "block index must lie in [1, f]");
  return thetas[static_cast<std::size_t>(i - 1)];
}

Matrix HankelEstimate::G(Eigen::Index i) const {
  const Matrix& t = theta(i);
  return t.rightCols(i * nu);
}

namespace {

// QR of Phi^T. Leading d x d blocks of R factor the regressions that use the
// first d rows of Phi.
struct Factored {
  Matrix R;    // d x d upper triangular (zero padded when N < d)
  Matrix QtY;  // d x rows(Y), leading part of Q^T Y^T
};

Factored factor(const Matrix& phi, const Matrix& Y) {
  const auto d = phi.rows();
  const auto N = phi.cols();
  Eigen::HouseholderQR<Matrix> qr(phi.transpose());
  Factored out;
  out.R = Matrix::Zero(d, d);
  const auto k = std::min(N, d);
  out.R.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix qty = Y.transpose();
  qty.applyOnTheLeft(qr.householderQ().transpose());
  out.QtY = Matrix::Zero(d, Y.rows());
  out.QtY.topRows(k) = qty.topRows(k);
  return out;
}

void require_rank(const Matrix& Rii, Eigen::Index N, Eigen::Index i, const char* label) {
  const auto d = Rii.rows();
  double smin = 0.0, smax = 0.0;
  if (N >= d) {
    Eigen::JacobiSVD<Matrix> svd(Rii);
    smax = svd.singularValues()(0);
    smin = svd.singularValues()(d - 1);
  }
  if (N < d || !(smin > kRankTol * smax))
    throw Error(ErrorCode::RankDeficient,
                std::string(label) + " regressor for i = " + std::to_string(i) +
                    " is rank deficient (d = " + std::to_string(d) + ", N = " +
                    std::to_string(N) + ", smallest singular value " + format_double(smin, 6) +
                    ")");
}

Matrix solve_block(const Factored& fac, Eigen::Index d, Eigen::Index row0, Eigen::Index nrows) {
  const Matrix rii = fac.R.topLeftCorner(d, d);
  const Matrix rhs = fac.QtY.block(0, row0, d, nrows);
  return rii.triangularView<Eigen::Upper>().solve(rhs).transpose();
}

}  // namespace

HankelEstimate fit_parsim(const RegressorBundle& bundle, RankPolicy policy) {
  const auto [p, f, N] = bundle.cfg;
  const auto nu = bundle.nu, ny = bundle.ny;
  const auto dz = p * (ny + nu);
  HankelEstimate est;
  est.method = RegressionMethod::ParsimBank;
  est.cfg = bundle.cfg;
  est.nu = nu;
  est.ny = ny;
  est.Hfp.resize(f * ny, dz);
  est.thetas.resize(static_cast<std::size_t>(f));

  if (policy == RankPolicy::Strict) {
    const Factored fac = factor(bundle.Phi(f), bundle.Yf);
    for (Eigen::Index i = 1; i <= f; ++i) {
      const auto d = dz + i * nu;
      require_rank(fac.R.topLeftCorner(d, d), N, i, "PARSIM");
      est.thetas[i - 1] = solve_block(fac, d, (i - 1) * ny, ny);
    }
  } else {
    for (Eigen::Index i = 1; i <= f; ++i)
      est.thetas[i - 1] = right_pinv_solve(bundle.Yfi(i), bundle.Phi(i), kRankTol);
  }
  for (Eigen::Index i = 1; i <= f; ++i)
    est.Hfp.middleRows((i - 1) * ny, ny) = est.thetas[i - 1].leftCols(dz);
  return est;
}

HankelEstimate fit_one_step(const RegressorBundle& bundle, RankPolicy policy) {
  const auto [p, f, N] = bundle.cfg;
  const auto dz = p * (bundle.ny + bundle.nu);
  const Matrix phi = bundle.Phi(f);
  HankelEstimate est;
  est.method = RegressionMethod::OneStep;
  est.cfg = bundle.cfg;
  est.nu = bundle.nu;
  est.ny = bundle.ny;
  Matrix theta;
  if (policy == RankPolicy::Strict) {
    const Factored fac = factor(phi, bundle.Yf);
    require_rank(fac.R, N, f, "one-step");
    theta = solve_block(fac, phi.rows(), 0, bundle.Yf.rows());
  } else {
    theta = right_pinv_solve(bundle.Yf, phi, kRankTol);
  }
  est.Hfp = theta.leftCols(dz);
  est.thetas.push_back(std::move(theta));
  return est;
}

Matrix hankel_by_projection(const RegressorBundle& bundle) {
  const Matrix pi = projector_complement(bundle.Uf);
  const Matrix zpi = bundle.Zp * pi;
  const Matrix gram = zpi * bundle.Zp.transpose();
  Eigen::LDLT<Matrix> ldlt(0.5 * (gram + gram.transpose()));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw Error(ErrorCode::RankDeficient, "Zp Pi Zp^T is singular");
  const Matrix rhs = bundle.Yf * zpi.transpose();
  return ldlt.solve(rhs.transpose()).transpose();
}

PeCheck check_pe(const RegressorBundle& bundle, Eigen::Index i, double sigma_bar_sq) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(empirical_covariance(bundle, i), Eigen::EigenvaluesOnly);
  PeCheck out;
  out.lambda_min = es.eigenvalues().minCoeff();
  out.satisfied = out.lambda_min >= sigma_bar_sq;
  return out;
}

}  // namespace subid
