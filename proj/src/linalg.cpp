#include "subid/linalg.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <system_error>

#include "subid/error.hpp"

namespace subid {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Unstable: return "unstable";
    case ErrorCode::NotMinimal: return "not_minimal";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::NotPositiveDefinite: return "not_positive_definite";
    case ErrorCode::NoConvergence: return "no_convergence";
    case ErrorCode::OrderAmbiguous: return "order_ambiguous";
    case ErrorCode::SearchCapExceeded: return "search_cap_exceeded";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s(s.size() - 1);
}

double spectral_radius(const Matrix& square) {
  if (square.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(square, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::Index numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double cut = rel_tol * s(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

Matrix right_pinv_solve(const Matrix& rhs, const Matrix& lhs, double rel_tol) {
  // X lhs = rhs  <=>  lhs^T X^T = rhs^T
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lhs.transpose());
  cod.setThreshold(rel_tol);
  return cod.solve(rhs.transpose()).transpose();
}

std::string format_double(double v, int significant_digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general,
                           significant_digits);
  if (res.ec != std::errc()) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace subid
