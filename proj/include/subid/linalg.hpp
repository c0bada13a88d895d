#pragma once

#include <Eigen/Dense>
#include <string>

namespace subid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest singular value. Zero for empty matrices.
double spectral_norm(const Matrix& m);

/// Smallest singular value over min(rows, cols) values. Zero for empty matrices.
double min_singular_value(const Matrix& m);

double spectral_radius(const Matrix& square);

/// Rank with threshold `rel_tol * sigma_max`.
Eigen::Index numerical_rank(const Matrix& m, double rel_tol);

/// Minimum-norm least-squares solution X of X * lhs = rhs (lhs has full or
/// deficient row rank); singular values below rel_tol * sigma_max are dropped.
Matrix right_pinv_solve(const Matrix& rhs, const Matrix& lhs, double rel_tol);

/// Locale-independent shortest-round-trip-free formatting with a fixed number
/// of significant digits.
std::string format_double(double v, int significant_digits);

}  // namespace subid
