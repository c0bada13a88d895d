#include "subid/bounds.hpp"

#include <cmath>
#include <ostream>

#include "subid/error.hpp"

namespace subid {

namespace {

double logdet_pd(const Matrix& M, const char* what) {
  Eigen::LLT<Matrix> llt(0.5 * (M + M.transpose()));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
}

}  // namespace

Eigen::Index BoundInputs::effective_p() const {
  if (beta > 0.0)
    return std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::ceil(beta * std::log(static_cast<double>(N)))));
  return p;
}

void BoundInputs::validate() const {
  check_delta(delta);
  if (!(sigma_u > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_u must be positive");
  if (effective_p() < 1 || f < 1) throw Error(ErrorCode::InvalidArgument, "p and f must be >= 1");
  if (i < 0 || i > f) throw Error(ErrorCode::InvalidArgument, "i must lie in [0, f]");
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
}

Eigen::Index problem_dimension(Eigen::Index p, Eigen::Index i, Eigen::Index nu, Eigen::Index ny) {
  return p * (nu + ny) + i * nu;
}

Matrix t_matrix(const StateSpaceModel& model, Eigen::Index p, Eigen::Index i) {
  const auto nu = model.nu(), ny = model.ny();
  const auto rows = p * ny + p * nu + i * nu;  // y_p, u_p, u_i
  const auto cols = p * nu + i * nu + p * ny;  // u_p, u_i, e_p
  Matrix t = Matrix::Zero(rows, cols);
  t.topLeftCorner(p * ny, p * nu) = input_toeplitz(model, p);
  t.topRightCorner(p * ny, p * ny) = noise_toeplitz(model, p);
  t.block(p * ny, 0, (p + i) * nu, (p + i) * nu).setIdentity();
  return t;
}

Matrix lambda_ue(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i) {
  const auto nu = model.nu(), ny = model.ny();
  Vector d(p * nu + i * nu + p * ny);
  d.head((p + i) * nu).setConstant(sigma_u);
  d.tail(p * ny).setOnes();
  return d.asDiagonal();
}

double sigma_bar_sq(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i) {
  const double s = spectral_norm(t_matrix(model, p, i)) * std::max(sigma_u, 1.0) / 2.0;
  return s * s;
}

Matrix noise_block_row(const StateSpaceModel& model, Eigen::Index i) {
  const auto ny = model.ny();
  const Matrix& S = model.SigmaEHalf();
  if (i <= 1) return S;
  Matrix h(ny, i * ny);
  h.rightCols(ny) = S;
  Matrix aks = model.K() * S;
  // column block i-1-j holds C A^j K S
  for (Eigen::Index j = 0; j + 1 < i; ++j) {
    h.middleCols((i - 2 - j) * ny, ny) = model.C() * aks;
    aks = model.A() * aks;
  }
  return h;
}

Thresholds thresholds(Eigen::Index nu, Eigen::Index ny, Eigen::Index p, Eigen::Index i,
                      std::uint64_t N, double delta) {
  check_delta(delta);
  const double n = static_cast<double>(N);
  const double du = static_cast<double>(nu), dy = static_cast<double>(ny);
  const double d = static_cast<double>(problem_dimension(p, i, nu, ny));
  Thresholds t;
  t.u_bar = du * std::sqrt(2.0 * du * std::log(32.0 * du * n / delta));
  t.e_bar = dy * std::sqrt(2.0 * dy * std::log(32.0 * dy * n / delta));
  t.w_bar = t.e_bar * std::sqrt(static_cast<double>(p)) +
            t.u_bar * std::sqrt(static_cast<double>(p + i));
  t.r_bar = 2.0 * t.w_bar * t.w_bar * std::sqrt(2.0 * std::log(d / delta));
  return t;
}

double c_xe(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
            std::uint64_t N, double delta) {
  check_delta(delta);
  const auto nx = model.nx();
  const double d = static_cast<double>(problem_dimension(p, i, model.nu(), model.ny()));
  const Matrix sx = state_covariance(model, sigma_u, N);
  const Matrix inner =
      Matrix::Identity(nx, nx) + (2.0 * static_cast<double>(nx) / delta) * sx;
  return 4.0 * logdet_pd(inner, "I + (2 nx / delta) Sigma_x") +
         8.0 * (d * std::log(5.0) + std::log(2.0 / delta));
}

double gamma_n(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
               std::uint64_t N, double delta) {
  const double tl = spectral_norm(t_matrix(model, p, i)) * std::max(sigma_u, 1.0);
  return 2.0 * tl * std::sqrt(c_xe(model, sigma_u, p, i, N, delta) / static_cast<double>(N));
}

bool nw_condition(const StateSpaceModel& model, Eigen::Index p, Eigen::Index i, std::uint64_t N,
                  double delta) {
  const Thresholds t = thresholds(model.nu(), model.ny(), p, i, N, delta);
  return static_cast<double>(N) >= 4.0 * t.r_bar * t.r_bar;
}

bool nphi_condition(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
                    std::uint64_t N, double delta) {
  const double floor = std::min(1.0, sigma_bar_sq(model, sigma_u, p, i));
  return gamma_n(model, sigma_u, p, i, N, delta) <= floor;
}

namespace {

template <class Pred>
std::uint64_t smallest_n(Pred pred, const char* what) {
  if (pred(1)) return 1;
  std::uint64_t lo = 1, hi = 2;
  while (!pred(hi)) {
    lo = hi;
    if (hi >= kBurnInCap)
      throw Error(ErrorCode::SearchCapExceeded,
                  std::string(what) + " exceeds the search cap 2^40; delta is too small or the "
                                      "problem dimension too large");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

BurnIn burn_in(const StateSpaceModel& model, double sigma_u, Eigen::Index p, Eigen::Index i,
               double delta) {
  check_delta(delta);
  BurnIn b;
  b.N_W = smallest_n([&](std::uint64_t n) { return nw_condition(model, p, i, n, delta); }, "N_W");
  b.N_Phi = smallest_n(
      [&](std::uint64_t n) { return nphi_condition(model, sigma_u, p, i, n, delta); }, "N_Phi");
  b.N_pe = std::max(b.N_W, b.N_Phi);
  return b;
}

Matrix population_covariance(const StateSpaceModel& model, double sigma_u, Eigen::Index p,
                             Eigen::Index i, std::uint64_t N) {
  const auto d = problem_dimension(p, i, model.nu(), model.ny());
  Matrix O = Matrix::Zero(d, model.nx());
  O.topRows(p * model.ny()) = extended_observability(model, p);
  const Matrix tl = t_matrix(model, p, i) * lambda_ue(model, sigma_u, p, i);
  Matrix s = O * state_covariance(model, sigma_u, N) * O.transpose() + tl * tl.transpose();
  return 0.5 * (s + s.transpose());
}

double cross_term_budget_sq(double h_norm, double sigma_bar_sq_value, Eigen::Index d,
                            double delta, double logdet) {
  const double dd = static_cast<double>(d);
  return h_norm * h_norm / sigma_bar_sq_value * (dd * std::log(dd / delta) + logdet);
}

BlockBudget block_budget(const StateSpaceModel& model, double sigma_u, Eigen::Index p,
                         Eigen::Index f, Eigen::Index i, std::uint64_t N, double delta) {
  check_delta(delta);
  BlockBudget b;
  b.i = i;
  b.d = problem_dimension(p, i, model.nu(), model.ny());
  b.sigma_bar_sq = sigma_bar_sq(model, sigma_u, p, i);
  b.h_norm = spectral_norm(noise_block_row(model, i));
  const Matrix sigma = population_covariance(model, sigma_u, p, i, N);
  b.logdet = logdet_pd(sigma / b.sigma_bar_sq, "Sigma_{p,i,N} / sigma_bar^2");
  // The bracket can turn negative only for tiny d log(d/delta); the budget is
  // then reported as zero rather than NaN.
  b.eps_E = std::sqrt(std::max(0.0, cross_term_budget_sq(b.h_norm, b.sigma_bar_sq, b.d, delta,
                                                         b.logdet)));
  b.eps_B = std::sqrt(static_cast<double>(model.nx()) / b.sigma_bar_sq * std::log(1.0 / delta));
  b.eps_total = std::sqrt(std::max(
      0.0, cross_term_budget_sq(b.h_norm, b.sigma_bar_sq, b.d,
                                delta / static_cast<double>(std::max<Eigen::Index>(f, 1)),
                                b.logdet)));
  return b;
}

ErrorBudgets error_budgets(const BoundInputs& in) {
  in.validate();
  const auto p = in.effective_p();
  ErrorBudgets out;
  double worst = 0.0;
  for (Eigen::Index i = 1; i <= in.f; ++i) {
    out.blocks.push_back(block_budget(in.model, in.sigma_u, p, in.f, i, in.N, in.delta));
    worst = std::max(worst, out.blocks.back().eps_total);
  }
  out.hankel_bound =
      std::sqrt(in.constants.c * static_cast<double>(in.f) / static_cast<double>(in.N)) * worst;
  return out;
}

SvdRobustness svd_robustness(const Matrix& Hhat, const WeightingPair& pair, const Matrix& truth,
                             Eigen::Index nx) {
  if (Hhat.rows() != truth.rows() || Hhat.cols() != truth.cols())
    throw Error(ErrorCode::InvalidArgument, "estimate and truth differ in shape");
  const auto kmax = std::min(truth.rows(), truth.cols());
  if (nx < 1 || nx > kmax) throw Error(ErrorCode::InvalidArgument, "order out of range");
  SvdRobustness r;
  const Matrix delta_h = Hhat - truth;
  r.error_norm = spectral_norm(pair.W1 * delta_h * pair.W2);
  Eigen::JacobiSVD<Matrix> sw(pair.W1 * truth * pair.W2);
  r.sigma_nx_weighted = sw.singularValues()(nx - 1);
  Eigen::JacobiSVD<Matrix> sh(truth);
  r.sigma_nx_H = sh.singularValues()(nx - 1);
  r.kappa = r.error_norm / r.sigma_nx_weighted;
  r.condition_met = r.error_norm <= r.sigma_nx_weighted / 4.0;
  r.margin = r.sigma_nx_weighted / 4.0 - r.error_norm;
  const auto& g = pair.diagnostics;
  r.W_Gamma = g.w1_norm * g.w2_norm * std::pow(g.w1_inv_norm, 1.5) * std::sqrt(g.w2_inv_norm);
  r.W_L = g.w1_norm * g.w2_norm * std::pow(g.w2_inv_norm, 1.5) * std::sqrt(g.w1_inv_norm);
  const double lead =
      std::sqrt(40.0 * static_cast<double>(nx) / r.sigma_nx_H) * spectral_norm(delta_h);
  r.bound_Gamma = lead * r.W_Gamma;
  r.bound_L = lead * r.W_L;
  return r;
}

RealizationBounds realization_bounds(const BalancedRealization& real, const RegressorBundle& bundle,
                                     const WeightingPair& pair, const StateSpaceModel& model,
                                     double sigma_u, double delta, const UniversalConstants& constants) {
  const auto [p, f, N] = real.cfg;
  const auto nx = real.nx, nu = real.nu, ny = real.ny;
  if (model.nx() != nx || model.nu() != nu || model.ny() != ny)
    throw Error(ErrorCode::InvalidArgument, "reference model dimensions differ from the estimate");
  const Matrix H = true_hankel(model, f, p);
  const BalancedRealization bar = weighted_svd_truncate(H, pair, nx, real.cfg, nu, ny);

  RealizationBounds rb;
  rb.T = align_similarity(real.GammaF, bar.GammaF);
  const Matrix& T = rb.T;
  rb.gamma_error = spectral_norm(real.GammaF - bar.GammaF * T);
  rb.l_error = spectral_norm(real.Lp - T.transpose() * bar.Lp);

  const Matrix Cbar = bar.GammaF.topRows(ny);
  const Matrix Bbar = bar.Lp.rightCols(nu);
  const Matrix gbar_minus = bar.GammaF.topRows((f - 1) * ny);
  const Matrix Abar = gbar_minus.colPivHouseholderQr().solve(bar.GammaF.bottomRows((f - 1) * ny));
  const Matrix Abar_t = T.transpose() * Abar * T;

  // Shift-invariance side
  const SystemEstimate mo = realize_moesp(real, pair.kind);
  const double s_hat = min_singular_value(real.GammaF.topRows((f - 1) * ny));
  const double s_bar = min_singular_value(gbar_minus);
  rb.sigma_o = std::min(s_hat, s_bar);
  if (!(rb.sigma_o > 0.0)) throw Error(ErrorCode::RankDeficient, "sigma_o is zero");
  rb.moesp_C_error = spectral_norm(mo.C - Cbar * T);
  rb.moesp_C_bound = rb.gamma_error;
  rb.moesp_B_error = spectral_norm(mo.B - T.transpose() * Bbar);
  rb.moesp_B_bound = rb.l_error;
  rb.moesp_A_error = spectral_norm(mo.A - Abar_t);
  rb.moesp_A_bound =
      (std::sqrt(spectral_norm(H)) + rb.sigma_o) / (rb.sigma_o * rb.sigma_o) * rb.gamma_error;

  // State-regression side, on the N-1 aligned columns used by realize_cva
  const SystemEstimate cv = realize_cva(real, bundle, pair.kind);
  const Matrix Z = bundle.ZpAligned();
  const Matrix g0 = Z * Z.transpose();
  const Matrix lg0 = real.Lp * g0;
  const Matrix cond0 =
      (lg0 * real.Lp.transpose()).ldlt().solve(lg0).transpose();  // g0 L^T (L g0 L^T)^{-1}
  Matrix phi1(Z.rows() + nu, Z.cols());
  phi1 << Z, bundle.Uf1;
  Matrix L1 = Matrix::Zero(nx + nu, phi1.rows());
  L1.topLeftCorner(nx, Z.rows()) = real.Lp;
  L1.bottomRightCorner(nu, nu).setIdentity();
  const Matrix g1 = phi1 * phi1.transpose();
  const Matrix lg1 = L1 * g1;
  const Matrix cond1 = (lg1 * L1.transpose()).ldlt().solve(lg1).transpose();
  rb.cond0_norm = spectral_norm(cond0);
  rb.cond1_norm = spectral_norm(cond1);

  const std::uint64_t n_used = static_cast<std::uint64_t>(N - 1);
  const BlockBudget b0 = block_budget(model, sigma_u, p, f, 0, n_used, delta);
  const BlockBudget b1 = block_budget(model, sigma_u, p, f, 1, n_used, delta);
  rb.eps0_E = b0.eps_E;
  rb.eps0_B = b0.eps_B;
  rb.eps1_E = b1.eps_E;
  rb.eps1_B = b1.eps_B;

  const Matrix& S = model.SigmaEHalf();
  rb.c4 = spectral_norm(Cbar * T) * rb.cond0_norm;
  rb.c5 = constants.c2 * spectral_norm(model.C()) * rb.cond0_norm;
  rb.c6 = constants.c1 * rb.cond0_norm;
  rb.c7 = (spectral_norm(Abar_t) + 1.0) * rb.cond1_norm;
  rb.c8 = spectral_norm(model.A() + Matrix::Identity(nx, nx)) * rb.cond1_norm;
  rb.c9 = spectral_norm(model.K() * S) * rb.cond1_norm;

  const double n = static_cast<double>(n_used);
  rb.cva_C_error = spectral_norm(cv.C - Cbar * T);
  rb.cva_C_bound = rb.c4 * rb.l_error + rb.c5 * rb.eps0_B / n + rb.c6 * rb.eps0_E / std::sqrt(n);
  rb.cva_AB_error =
      std::max(spectral_norm(cv.A - Abar_t), spectral_norm(cv.B - T.transpose() * Bbar));
  rb.cva_AB_bound = rb.c7 * rb.l_error + rb.c8 * rb.eps1_B / n + rb.c9 * rb.eps1_E / std::sqrt(n);
  return rb;
}

BoundReport evaluate_bounds(const BoundInputs& in) {
  in.validate();
  BoundReport r;
  const auto p = in.effective_p();
  const auto& m = in.model;
  r.sigma_u = in.sigma_u;
  r.p = p;
  r.f = in.f;
  r.i = in.i;
  r.N = in.N;
  r.delta = in.delta;
  r.d_pi = problem_dimension(p, in.i, m.nu(), m.ny());
  r.sigma_bar_sq = sigma_bar_sq(m, in.sigma_u, p, in.i);
  r.thresholds = thresholds(m.nu(), m.ny(), p, in.i, in.N, in.delta);
  r.burn = burn_in(m, in.sigma_u, p, in.i, in.delta);
  r.C_iXE = c_xe(m, in.sigma_u, p, in.i, in.N, in.delta);
  r.gamma_iN = gamma_n(m, in.sigma_u, p, in.i, in.N, in.delta);
  const BlockBudget b = block_budget(m, in.sigma_u, p, in.f, in.i, in.N, in.delta);
  r.eps_E = b.eps_E;
  r.eps_B = b.eps_B;
  r.eps_total = b.eps_total;
  BoundInputs shifted = in;
  shifted.p = p;
  shifted.beta = 0.0;
  r.hankel_bound = error_budgets(shifted).hankel_bound;

  Matrix akp = Matrix::Identity(m.nx(), m.nx());
  const Matrix ak = m.AK();
  for (Eigen::Index j = 0; j < p; ++j) akp = akp * ak;
  r.truncation_lhs =
      spectral_norm(m.C() * akp) * spectral_norm(state_covariance(m, in.sigma_u, in.N));
  r.truncation_met = r.truncation_lhs <= std::pow(static_cast<double>(in.N), -3.0);

  const double a = 2.0 * static_cast<double>(in.f * m.nu());
  const double bb = 2.0 * (static_cast<double>(in.N) + static_cast<double>(in.f) - 1.0) *
                    static_cast<double>(m.nu());
  const double la = std::log(a), lb = std::log(bb);
  r.delta_u = std::exp(-la * la * lb * lb);
  return r;
}

std::vector<std::pair<std::string, std::string>> BoundReport::entries() const {
  auto num = [](double v) { return format_double(v, 10); };
  auto cnt = [](std::uint64_t v) { return std::to_string(v); };
  std::vector<std::pair<std::string, std::string>> e = {
      {"p", cnt(static_cast<std::uint64_t>(p))},
      {"f", cnt(static_cast<std::uint64_t>(f))},
      {"i", cnt(static_cast<std::uint64_t>(i))},
      {"N", cnt(N)},
      {"delta", num(delta)},
      {"sigma_u", num(sigma_u)},
      {"d_pi", cnt(static_cast<std::uint64_t>(d_pi))},
      {"sigma_bar_sq", num(sigma_bar_sq)},
      {"u_bar", num(thresholds.u_bar)},
      {"e_bar", num(thresholds.e_bar)},
      {"w_bar", num(thresholds.w_bar)},
      {"r_bar", num(thresholds.r_bar)},
      {"N_W", cnt(burn.N_W)},
      {"N_Phi", cnt(burn.N_Phi)},
      {"N_pe", cnt(burn.N_pe)},
      {"C_iXE", num(C_iXE)},
      {"gamma_iN", num(gamma_iN)},
      {"eps_E", num(eps_E)},
      {"eps_B", num(eps_B)},
      {"eps_total", num(eps_total)},
      {"hankel_bound", num(hankel_bound)},
      {"truncation_lhs", num(truncation_lhs)},
      {"truncation_met", truncation_met ? "true" : "false"},
      {"delta_u", num(delta_u)},
  };
  if (svd) {
    e.emplace_back("svd_condition_met", svd->condition_met ? "true" : "false");
    e.emplace_back("svd_margin", num(svd->margin));
    e.emplace_back("kappa", num(svd->kappa));
    e.emplace_back("W_Gamma", num(svd->W_Gamma));
    e.emplace_back("W_L", num(svd->W_L));
    e.emplace_back("bound_Gamma", num(svd->bound_Gamma));
    e.emplace_back("bound_L", num(svd->bound_L));
  }
  if (realization) {
    const auto& rb = *realization;
    e.emplace_back("gamma_error", num(rb.gamma_error));
    e.emplace_back("l_error", num(rb.l_error));
    e.emplace_back("sigma_o", num(rb.sigma_o));
    e.emplace_back("moesp_A_error", num(rb.moesp_A_error));
    e.emplace_back("moesp_A_bound", num(rb.moesp_A_bound));
    e.emplace_back("moesp_B_error", num(rb.moesp_B_error));
    e.emplace_back("moesp_B_bound", num(rb.moesp_B_bound));
    e.emplace_back("moesp_C_error", num(rb.moesp_C_error));
    e.emplace_back("moesp_C_bound", num(rb.moesp_C_bound));
    e.emplace_back("cond0_norm", num(rb.cond0_norm));
    e.emplace_back("cond1_norm", num(rb.cond1_norm));
    e.emplace_back("c4", num(rb.c4));
    e.emplace_back("c5", num(rb.c5));
    e.emplace_back("c6", num(rb.c6));
    e.emplace_back("c7", num(rb.c7));
    e.emplace_back("c8", num(rb.c8));
    e.emplace_back("c9", num(rb.c9));
    e.emplace_back("eps0_E", num(rb.eps0_E));
    e.emplace_back("eps0_B", num(rb.eps0_B));
    e.emplace_back("eps1_E", num(rb.eps1_E));
    e.emplace_back("eps1_B", num(rb.eps1_B));
    e.emplace_back("cva_C_error", num(rb.cva_C_error));
    e.emplace_back("cva_C_bound", num(rb.cva_C_bound));
    e.emplace_back("cva_AB_error", num(rb.cva_AB_error));
    e.emplace_back("cva_AB_bound", num(rb.cva_AB_bound));
  }
  return e;
}

void BoundReport::write_text(std::ostream& os) const {
  const auto e = entries();
  std::size_t width = 0;
  for (const auto& [k, v] : e) width = std::max(width, k.size());
  for (const auto& [k, v] : e) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
}

void BoundReport::write_csv(std::ostream& os) const {
  os << "key,value\n";
  for (const auto& [k, v] : entries()) os << k << ',' << v << '\n';
}

}  // namespace subid
