#include "subid/hankel.hpp"

#include "subid/error.hpp"

namespace subid {

HorizonConfig full_horizon(std::size_t nbar, Eigen::Index p, Eigen::Index f) {
  const auto len = static_cast<Eigen::Index>(nbar);
  if (p < 1 || f < 1) throw Error(ErrorCode::InvalidArgument, "horizons p and f must be >= 1");
  if (len < p + f)
    throw Error(ErrorCode::InsufficientData,
                "need at least p + f = " + std::to_string(p + f) + " samples, have " +
                    std::to_string(len));
  return HorizonConfig{p, f, len - p - f + 1};
}

Matrix RegressorBundle::Phi(Eigen::Index i) const {
  Matrix phi(Zp.rows() + i * nu, Zp.cols());
  phi << Zp, Uf.topRows(i * nu);
  return phi;
}

RegressorBundle build_bundle(const Trajectory& traj, const HorizonConfig& cfg) {
  const auto [p, f, N] = cfg;
  if (p < 1 || f < 1 || N < 1)
    throw Error(ErrorCode::InvalidArgument, "p, f and N must all be >= 1");
  if (traj.u.size() != traj.y.size())
    throw Error(ErrorCode::InvalidArgument, "input and output records differ in length");
  const auto need = p + f + N - 1;
  const auto have = static_cast<Eigen::Index>(traj.length());
  if (need > have)
    throw Error(ErrorCode::InsufficientData, "horizon needs " + std::to_string(need) +
                                                 " samples (p + f + N - 1), trajectory has " +
                                                 std::to_string(have));
  RegressorBundle b;
  b.cfg = cfg;
  b.nu = traj.nu();
  b.ny = traj.ny();
  const auto nu = b.nu, ny = b.ny;
  if (nu < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "empty input or output channel");

  b.Zp.resize(p * (ny + nu), N);
  b.Uf.resize(f * nu, N);
  b.Yf.resize(f * ny, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    for (Eigen::Index r = 0; r < p; ++r) {
      b.Zp.block(r * ny, c, ny, 1) = traj.y[c + r];
      b.Zp.block(p * ny + r * nu, c, nu, 1) = traj.u[c + r];
    }
    for (Eigen::Index r = 0; r < f; ++r) {
      b.Yf.block(r * ny, c, ny, 1) = traj.y[c + p + r];
      b.Uf.block(r * nu, c, nu, 1) = traj.u[c + p + r];
    }
  }
  b.ZpPlus = b.Zp.rightCols(N - 1);
  b.Uf1 = b.Uf.topLeftCorner(nu, N - 1);
  b.Yf1 = b.Yf.topLeftCorner(ny, N - 1);
  return b;
}

Matrix projector_complement(const Matrix& Uf) {
  const auto N = Uf.cols();
  const Matrix gram = Uf * Uf.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 1e-12 * lmax) || lmax <= 0.0)
    throw Error(ErrorCode::RankDeficient,
                "Uf Uf^T is singular (smallest eigenvalue " + format_double(lmin, 6) +
                    "): Uf rows do not span a " + std::to_string(Uf.rows()) +
                    "-dimensional row space");
  return Matrix::Identity(N, N) - Uf.transpose() * gram.ldlt().solve(Uf);
}

Matrix empirical_covariance(const RegressorBundle& bundle, Eigen::Index i) {
  if (i < 0 || i > bundle.cfg.f)
    throw Error(ErrorCode::InvalidArgument, "block index i must lie in [0, f]");
  const Matrix phi = bundle.Phi(i);
  Matrix s = phi * phi.transpose() / static_cast<double>(bundle.cfg.N);
  return 0.5 * (s + s.transpose());
}

ProjectedGrams projected_grams(const RegressorBundle& bundle) {
  const auto N = bundle.cfg.N;
  const auto a = bundle.Uf.rows(), z = bundle.Zp.rows(), g = bundle.Yf.rows();
  const auto cols = a + z + g;
  Matrix m(N, cols);
  m << bundle.Uf.transpose(), bundle.Zp.transpose(), bundle.Yf.transpose();
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix r = Matrix::Zero(cols, cols);
  const auto k = std::min<Eigen::Index>(N, cols);
  r.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  const Matrix ruu = r.topLeftCorner(a, a);
  Eigen::JacobiSVD<Matrix> svd(ruu);
  const auto& s = svd.singularValues();
  if (N < a || !(s(a - 1) > 1e-10 * s(0)))
    throw Error(ErrorCode::RankDeficient,
                "Uf Uf^T is singular (smallest singular value of Uf " +
                    format_double(N < a ? 0.0 : s(a - 1), 6) + ")");

  const Matrix rzz = r.block(a, a, z, z);
  const Matrix rzy = r.block(a, a + z, z, g);
  const Matrix ryy = r.block(a + z, a + z, g, g);
  ProjectedGrams out;
  out.ZZ = rzz.transpose() * rzz;
  out.ZY = rzz.transpose() * rzy;
  out.YY = rzy.transpose() * rzy + ryy.transpose() * ryy;
  return out;
}

}  // namespace subid
