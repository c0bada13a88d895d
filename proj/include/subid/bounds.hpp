#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subid/hankel.hpp"
#include "subid/lti.hpp"
#include "subid/realization.hpp"
#include "subid/regression.hpp"
#include "subid/weighting.hpp"

namespace subid {

/// Multipliers for the unspecified universal constants; all default to 1.
struct UniversalConstants {
  double c = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
};

struct BoundInputs {
  StateSpaceModel model;
  double sigma_u = 1.0;
  Eigen::Index p = 1;
  Eigen::Index f = 1;
  Eigen::Index i = 1;
  std::uint64_t N = 1;
  double delta = 0.05;
  /// When positive, the past horizon is taken as ceil(beta log N) instead of p.
  double beta = 0.0;
  UniversalConstants constants;

  Eigen::Index effective_p() const;
  void validate() const;
};

/// p (nu + ny) + i nu
Eigen::Index problem_dimension(Eigen::Index p, Eigen::Index i, Eigen::Index nu, Eigen::Index ny);

/// Maps (u_p, u_i, e_p) to (y_p, u_p, u_i): [[G_p, 0, H_p], [I, 0, 0], [0, I, 0]].
Matrix t_matrix(const StateSpaceModel& model, Eigen::Index p, Eigen::Index i);

/// diag(sigma_u I_{(p+i) nu}, I_{p ny})
Matrix lambda_ue(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i);

/// (||T|| ||Lambda|| / 2)^2
double sigma_bar_sq(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i);

/// Noise block row [C A^{i-2} K S, ..., C K S, S] (ny x i ny); i = 0 gives S.
Matrix noise_block_row(const StateSpaceModel& model, Eigen::Index i);

struct Thresholds {
  double u_bar = 0.0;
  double e_bar = 0.0;
  double w_bar = 0.0;
  double r_bar = 0.0;
};

Thresholds thresholds(Eigen::Index nu, Eigen::Index ny, Eigen::Index p, Eigen::Index i,
                      std::uint64_t N, double delta);

/// 4 log det(I + (2 nx / delta) Sigma_{x,N}) + 8 log(5^d 2 / delta)
double c_xe(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
            std::uint64_t N, double delta);

/// 2 ||T|| ||Lambda|| sqrt(C_XE / N)
double gamma_n(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
               std::uint64_t N, double delta);

/// N >= 4 r_bar(N)^2
bool nw_condition(const StateSpaceModel& model, Eigen::Index p, Eigen::Index i, std::uint64_t N,
                  double delta);
/// gamma_N <= min(1, sigma_bar^2)
bool nphi_condition(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
                    std::uint64_t N, double delta);

struct BurnIn {
  std::uint64_t N_W = 0;
  std::uint64_t N_Phi = 0;
  std::uint64_t N_pe = 0;
};

inline constexpr std::uint64_t kBurnInCap = std::uint64_t{1} << 40;

/// Smallest N meeting each defining inequality, by doubling then bisection.
BurnIn burn_in(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
               double delta);

/// E[phi_{p,i}(N) phi_{p,i}(N)^T] with x_1 = 0 and white input/innovations:
/// O Sigma_{x,N} O^T + T Lambda Lambda^T T^T.
Matrix population_covariance(const StateSpaceModel& model, double sigma_u, Eigen::Index p,
                             Eigen::Index i, std::uint64_t N);

/// (h^2 / s) (d log(d / delta) + logdet), the cross-term budget formula.
double cross_term_budget_sq(double h_norm, double sigma_bar_sq_value, Eigen::Index d,
                            double delta, double logdet);

struct BlockBudget {
  Eigen::Index i = 0;
  Eigen::Index d = 0;
  double sigma_bar_sq = 0.0;
  double h_norm = 0.0;
  double logdet = 0.0;  // log det(Sigma_{p,i,N} / sigma_bar^2)
  double eps_E = 0.0;
  double eps_B = 0.0;
  double eps_total = 0.0;  // delta / f inflated
};

/// Budgets for block i (0 <= i <= f) at horizon (p, f), sample count N.
BlockBudget block_budget(const StateSpaceModel& model, double sigma_u, Eigen::Index p,
                         Eigen::Index f, Eigen::Index i, std::uint64_t N, double delta);

struct ErrorBudgets {
  std::vector<BlockBudget> blocks;  // i = 1..f
  double hankel_bound = 0.0;        // sqrt(c f / N) max eps_i
};

ErrorBudgets error_budgets(const BoundInputs& in);

struct SvdRobustness {
  double error_norm = 0.0;  // ||W1 (Hhat - H) W2||
  double sigma_nx_weighted = 0.0;
  double sigma_nx_H = 0.0;
  double kappa = 0.0;
  bool condition_met = false;
  double margin = 0.0;  // sigma_nx_weighted / 4 - error_norm
  double W_Gamma = 0.0;
  double W_L = 0.0;
  double bound_Gamma = 0.0;
  double bound_L = 0.0;
};

SvdRobustness svd_robustness(const Matrix& Hhat, const WeightingPair& pair, const Matrix& truth,
                             Eigen::Index nx);

struct RealizationBounds {
  Matrix T;  // Procrustes alignment of Gamma_hat onto the true balanced Gamma
  double gamma_error = 0.0;
  double l_error = 0.0;

  // Shift-invariance (MOESP-type) side
  double sigma_o = 0.0;
  double moesp_C_error = 0.0, moesp_C_bound = 0.0;
  double moesp_B_error = 0.0, moesp_B_bound = 0.0;
  double moesp_A_error = 0.0, moesp_A_bound = 0.0;

  // State-regression (CVA-type) side
  double cond0_norm = 0.0;
  double cond1_norm = 0.0;
  double c4 = 0.0, c5 = 0.0, c6 = 0.0, c7 = 0.0, c8 = 0.0, c9 = 0.0;
  double eps0_E = 0.0, eps0_B = 0.0, eps1_E = 0.0, eps1_B = 0.0;
  double cva_C_error = 0.0, cva_C_bound = 0.0;
  double cva_AB_error = 0.0, cva_AB_bound = 0.0;
};

/// Oracle-mode realization bounds. The reference factors come from the
/// weighted SVD of the true Hankel matrix under the same pair.
RealizationBounds realization_bounds(const BalancedRealization& real, const RegressorBundle& bundle,
                                     const WeightingPair& pair, const StateSpaceModel& model,
                                     double sigma_u, double delta, const UniversalConstants& constants = {});

struct BoundReport {
  double sigma_u = 1.0;
  Eigen::Index p = 0;  // horizon actually used (after beta, if any)
  Eigen::Index f = 0;
  Eigen::Index i = 0;
  std::uint64_t N = 0;
  double delta = 0.0;
  Eigen::Index d_pi = 0;
  double sigma_bar_sq = 0.0;
  Thresholds thresholds;
  BurnIn burn;
  double C_iXE = 0.0;
  double gamma_iN = 0.0;
  double eps_E = 0.0;
  double eps_B = 0.0;
  double eps_total = 0.0;
  double hankel_bound = 0.0;
  double truncation_lhs = 0.0;  // ||C A_K^p|| ||Sigma_{x,N}||
  bool truncation_met = false;  // truncation_lhs <= N^{-3}
  double delta_u = 0.0;
  std::optional<SvdRobustness> svd;
  std::optional<RealizationBounds> realization;

  /// Key/value pairs in report order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  void write_text(std::ostream& os) const;
  void write_csv(std::ostream& os) const;
};

/// Model-only part of the report (no data).
BoundReport evaluate_bounds(const BoundInputs& in);

}  // namespace subid
