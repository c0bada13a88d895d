#include "subid/lti.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "subid/error.hpp"
#include "subid/weighting.hpp"

namespace subid {

namespace {

void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

StateSpaceModel::StateSpaceModel(Matrix a, Matrix b, Matrix c, Matrix k, Matrix sigma_e_half)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), k_(std::move(k)),
      s_(std::move(sigma_e_half)) {
  const auto nx = a_.rows();
  require(nx > 0 && a_.cols() == nx, ErrorCode::InvalidArgument,
          "A must be square and non-empty, got " + dims(a_));
  require(b_.rows() == nx && b_.cols() > 0, ErrorCode::InvalidArgument,
          "B must be nx x nu, got " + dims(b_));
  require(c_.cols() == nx && c_.rows() > 0, ErrorCode::InvalidArgument,
          "C must be ny x nx, got " + dims(c_));
  const auto ny = c_.rows();
  require(k_.rows() == nx && k_.cols() == ny, ErrorCode::InvalidArgument,
          "K must be nx x ny, got " + dims(k_));
  require(s_.rows() == ny && s_.cols() == ny, ErrorCode::InvalidArgument,
          "SigmaEHalf must be ny x ny, got " + dims(s_));
  require(a_.allFinite() && b_.allFinite() && c_.allFinite() && k_.allFinite() &&
              s_.allFinite(),
          ErrorCode::InvalidArgument, "model matrices must be finite");

  const double sym = (s_ - s_.transpose()).norm();
  require(sym <= 1e-10 * std::max(1.0, s_.norm()), ErrorCode::InvalidArgument,
          "SigmaEHalf must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s_);
  require(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, s_.norm()),
          ErrorCode::InvalidArgument, "SigmaEHalf must be positive semidefinite");

  const double rho_a = spectral_radius(a_);
  require(rho_a < 1.0, ErrorCode::Unstable,
          "spectral radius rho(A) = " + format_double(rho_a, 6) + " violates rho(A) < 1");
  const double rho_ak = spectral_radius(a_ - k_ * c_);
  require(rho_ak < 1.0, ErrorCode::Unstable,
          "spectral radius rho(A - K C) = " + format_double(rho_ak, 6) +
              " violates rho(A_K) < 1");
}

bool StateSpaceModel::is_controllable(double rel_tol) const {
  const auto n = nx();
  Matrix bk(n, nu() + ny());
  bk << b_, k_;
  Matrix ctrb(n, n * bk.cols());
  Matrix blk = bk;
  for (Eigen::Index j = 0; j < n; ++j) {
    ctrb.middleCols(j * bk.cols(), bk.cols()) = blk;
    blk = a_ * blk;
  }
  return numerical_rank(ctrb, rel_tol) == n;
}

bool StateSpaceModel::is_observable(double rel_tol) const {
  return numerical_rank(extended_observability(*this, nx()), rel_tol) == nx();
}

std::vector<Vector> generate_input(const InputSpec& input, Eigen::Index nu, std::size_t nbar) {
  std::mt19937_64 rng(input.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> u(nbar, Vector::Zero(nu));

  if (const auto* white = std::get_if<WhiteGaussianInput>(&input.kind)) {
    require(white->sigma_u > 0.0, ErrorCode::InvalidArgument, "sigma_u must be positive");
    for (auto& uk : u)
      for (Eigen::Index j = 0; j < nu; ++j) uk(j) = white->sigma_u * normal(rng);
    return u;
  }

  const auto& ar = std::get<ColoredAR2Input>(input.kind);
  // z^2 - a1 z - a2 must have both roots inside the unit disk
  const std::complex<double> disc = std::sqrt(std::complex<double>(ar.a1 * ar.a1 + 4.0 * ar.a2));
  const double r1 = std::abs((ar.a1 + disc) / 2.0);
  const double r2 = std::abs((ar.a1 - disc) / 2.0);
  require(r1 < 1.0 && r2 < 1.0, ErrorCode::Unstable,
          "AR(2) input filter is unstable (root modulus " + format_double(std::max(r1, r2), 6) +
              ")");

  Vector prev1 = Vector::Zero(nu), prev2 = Vector::Zero(nu);
  const std::size_t total = nbar + kColoredWarmup;
  for (std::size_t k = 0; k < total; ++k) {
    Vector cur(nu);
    for (Eigen::Index j = 0; j < nu; ++j)
      cur(j) = ar.a1 * prev1(j) + ar.a2 * prev2(j) + ar.gain * normal(rng);
    prev2 = prev1;
    prev1 = cur;
    if (k >= static_cast<std::size_t>(kColoredWarmup)) u[k - kColoredWarmup] = cur;
  }
  return u;
}

Trajectory simulate(const StateSpaceModel& model, std::size_t nbar, const InputSpec& input,
                    std::uint64_t noise_seed) {
  require(nbar >= 1, ErrorCode::InvalidArgument, "nbar must be at least 1");
  Trajectory traj;
  traj.seed = input.seed;
  traj.u = generate_input(input, model.nu(), nbar);
  traj.y.assign(nbar, Vector::Zero(model.ny()));
  std::vector<Vector> e(nbar, Vector::Zero(model.ny()));
  std::vector<Vector> x(nbar, Vector::Zero(model.nx()));

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Matrix& S = model.SigmaEHalf();
  const Matrix KS = model.K() * S;

  Vector state = Vector::Zero(model.nx());
  for (std::size_t k = 0; k < nbar; ++k) {
    for (Eigen::Index j = 0; j < model.ny(); ++j) e[k](j) = normal(rng);
    x[k] = state;
    traj.y[k] = model.C() * state + S * e[k];
    state = model.A() * state + model.B() * traj.u[k] + KS * e[k];
  }
  traj.e = std::move(e);
  traj.x = std::move(x);
  return traj;
}

RiccatiResult dare_to_innovations(const StandardNoiseModel& m, double tol, int max_iter) {
  const auto nx = m.A.rows();
  require(m.A.cols() == nx && m.C.cols() == nx && m.SigmaW.rows() == nx &&
              m.SigmaW.cols() == nx,
          ErrorCode::InvalidArgument, "standard model dimensions are inconsistent");
  const auto ny = m.C.rows();
  require(m.SigmaV.rows() == ny && m.SigmaV.cols() == ny, ErrorCode::InvalidArgument,
          "SigmaV must be ny x ny");
  Eigen::SelfAdjointEigenSolver<Matrix> ev(m.SigmaV);
  require(ev.eigenvalues().minCoeff() > 0.0, ErrorCode::NotPositiveDefinite,
          "SigmaV must be positive definite (min eigenvalue " +
              format_double(ev.eigenvalues().minCoeff(), 6) + ")");
  const Matrix S = m.S.size() == 0 ? Matrix::Zero(nx, ny) : m.S;
  require(S.rows() == nx && S.cols() == ny, ErrorCode::InvalidArgument,
          "cross covariance S must be nx x ny");

  auto rhs = [&](const Matrix& P, Matrix* gain) {
    const Matrix innov = m.C * P * m.C.transpose() + m.SigmaV;
    const Matrix g = (m.A * P * m.C.transpose() + S) * innov.inverse();
    if (gain) *gain = g;
    Matrix next = m.A * P * m.A.transpose() + m.SigmaW - g * innov * g.transpose();
    return Matrix(0.5 * (next + next.transpose()));
  };

  Matrix P = m.SigmaW;
  double residual = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Matrix next = rhs(P, nullptr);
    residual = (next - P).norm();
    P = next;
    if (residual <= tol * std::max(1.0, P.norm())) break;
  }
  if (it == max_iter)
    throw Error(ErrorCode::NoConvergence,
                "Riccati iteration did not converge in " + std::to_string(max_iter) +
                    " iterations (last residual " + format_double(residual, 6) + ")");

  Matrix K;
  const Matrix check = rhs(P, &K);
  residual = (check - P).norm();
  const Matrix sigma_e = m.C * P * m.C.transpose() + m.SigmaV;
  Matrix s_half = sqrt_psd(0.5 * (sigma_e + sigma_e.transpose()));
  Matrix B = m.B.size() == 0 ? Matrix::Zero(nx, 1) : m.B;
  return RiccatiResult{StateSpaceModel(m.A, B, m.C, K, s_half), P, residual, it + 1};
}

StateSpaceModel armax_to_ss(double a, double b, double c, double noise_variance) {
  require(noise_variance >= 0.0, ErrorCode::InvalidArgument, "noise variance must be >= 0");
  require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c), ErrorCode::InvalidArgument,
          "ARMAX coefficients must be finite");
  Matrix A(1, 1), B(1, 1), C(1, 1), K(1, 1), S(1, 1);
  A << -a;
  B << b;
  C << 1.0;
  K << c - a;
  S << std::sqrt(noise_variance);
  StateSpaceModel model(A, B, C, K, S);
  require(model.is_minimal(), ErrorCode::NotMinimal,
          "ARMAX model yields a non-minimal state-space realization");
  return model;
}

StateSpaceModel benchmark_model() { return armax_to_ss(-0.7, 1.0, 0.5, 4.0); }

std::vector<Matrix> markov_parameters(const StateSpaceModel& model, std::size_t count) {
  std::vector<Matrix> out;
  out.reserve(count);
  Matrix ab = model.B();
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(model.C() * ab);
    ab = model.A() * ab;
  }
  return out;
}

Matrix extended_observability(const StateSpaceModel& model, Eigen::Index f) {
  const auto ny = model.ny();
  Matrix g(f * ny, model.nx());
  Matrix ca = model.C();
  for (Eigen::Index i = 0; i < f; ++i) {
    g.middleRows(i * ny, ny) = ca;
    ca = ca * model.A();
  }
  return g;
}

Matrix reversed_controllability(const StateSpaceModel& model, Eigen::Index p) {
  const auto ny = model.ny(), nu = model.nu();
  const Matrix ak = model.AK();
  Matrix l(model.nx(), p * (ny + nu));
  Matrix kb = model.K(), bb = model.B();
  // column block j (0-based from the right) holds A_K^j K, resp. A_K^j B
  for (Eigen::Index j = 0; j < p; ++j) {
    l.middleCols((p - 1 - j) * ny, ny) = kb;
    l.middleCols(p * ny + (p - 1 - j) * nu, nu) = bb;
    kb = ak * kb;
    bb = ak * bb;
  }
  return l;
}

Matrix true_hankel(const StateSpaceModel& model, Eigen::Index f, Eigen::Index p) {
  require(f >= 1 && p >= 1, ErrorCode::InvalidArgument, "horizons must be >= 1");
  return extended_observability(model, f) * reversed_controllability(model, p);
}

Matrix input_toeplitz(const StateSpaceModel& model, Eigen::Index p) {
  const auto ny = model.ny(), nu = model.nu();
  Matrix g = Matrix::Zero(p * ny, p * nu);
  const auto mk = markov_parameters(model, static_cast<std::size_t>(std::max<Eigen::Index>(p - 1, 0)));
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < r; ++c) g.block(r * ny, c * nu, ny, nu) = mk[r - c - 1];
  return g;
}

Matrix noise_toeplitz(const StateSpaceModel& model, Eigen::Index p) {
  const auto ny = model.ny();
  const Matrix& S = model.SigmaEHalf();
  Matrix h = Matrix::Zero(p * ny, p * ny);
  std::vector<Matrix> mk;
  Matrix aks = model.K() * S;
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    mk.push_back(model.C() * aks);
    aks = model.A() * aks;
  }
  for (Eigen::Index r = 0; r < p; ++r) {
    h.block(r * ny, r * ny, ny, ny) = S;
    for (Eigen::Index c = 0; c < r; ++c) h.block(r * ny, c * ny, ny, ny) = mk[r - c - 1];
  }
  return h;
}

namespace {

Matrix state_drive(const StateSpaceModel& model, double sigma_u) {
  const Matrix ks = model.K() * model.SigmaEHalf();
  return sigma_u * sigma_u * model.B() * model.B().transpose() + ks * ks.transpose();
}

}  // namespace

Matrix state_covariance(const StateSpaceModel& model, double sigma_u, std::uint64_t N) {
  require(N >= 1, ErrorCode::InvalidArgument, "N must be >= 1");
  // Sigma_{x,N} = sum_{j=0}^{N-2} A^j Q A^{jT}, assembled from power-of-two partial sums.
  const auto n = model.nx();
  Matrix result = Matrix::Zero(n, n);
  Matrix result_pow = Matrix::Identity(n, n);
  Matrix block = state_drive(model, sigma_u);
  Matrix block_pow = model.A();
  std::uint64_t terms = N - 1;
  while (terms > 0) {
    if (terms & 1u) {
      result += result_pow * block * result_pow.transpose();
      result_pow = result_pow * block_pow;
    }
    terms >>= 1u;
    if (terms == 0) break;
    block += block_pow * block * block_pow.transpose();
    block_pow = block_pow * block_pow;
  }
  return 0.5 * (result + result.transpose());
}

Matrix stationary_state_covariance(const StateSpaceModel& model, double sigma_u) {
  Matrix block = state_drive(model, sigma_u);
  Matrix pw = model.A();
  for (int it = 0; it < 200; ++it) {
    const Matrix inc = pw * block * pw.transpose();
    block += inc;
    pw = pw * pw;
    if (inc.norm() <= 1e-17 * std::max(1.0, block.norm())) break;
  }
  return 0.5 * (block + block.transpose());
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto nu = traj.nu(), ny = traj.ny();
  os << "k";
  for (Eigen::Index j = 1; j <= nu; ++j) os << ",u_" << j;
  for (Eigen::Index j = 1; j <= ny; ++j) os << ",y_" << j;
  os << '\n';
  for (std::size_t k = 0; k < traj.length(); ++k) {
    os << (k + 1);
    for (Eigen::Index j = 0; j < nu; ++j) os << ',' << format_double(traj.u[k](j), 17);
    for (Eigen::Index j = 0; j < ny; ++j) os << ',' << format_double(traj.y[k](j), 17);
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && *(e - 1) == ' ') --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || b == e)
    throw Error(ErrorCode::Parse,
                "line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Parse, "line 1: missing header");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "k")
    throw Error(ErrorCode::Parse, "line 1: header must start with 'k'");
  Eigen::Index nu = 0, ny = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string expect_u = "u_" + std::to_string(nu + 1);
    const std::string expect_y = "y_" + std::to_string(ny + 1);
    if (ny == 0 && header[c] == expect_u) {
      ++nu;
    } else if (header[c] == expect_y) {
      ++ny;
    } else {
      throw Error(ErrorCode::Parse, "line 1: unexpected column '" + header[c] + "'");
    }
  }
  if (nu == 0 || ny == 0)
    throw Error(ErrorCode::Parse, "line 1: need at least one u_ and one y_ column");

  Trajectory traj;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    const double k = parse_number(cells[0], lineno);
    if (k != static_cast<double>(traj.length() + 1))
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected k = " +
                                        std::to_string(traj.length() + 1));
    Vector u(nu), y(ny);
    for (Eigen::Index j = 0; j < nu; ++j) u(j) = parse_number(cells[1 + j], lineno);
    for (Eigen::Index j = 0; j < ny; ++j) y(j) = parse_number(cells[1 + nu + j], lineno);
    traj.u.push_back(std::move(u));
    traj.y.push_back(std::move(y));
  }
  if (traj.length() == 0) throw Error(ErrorCode::Parse, "trajectory has no samples");
  return traj;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix json_matrix(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array() || j[name].empty())
    throw Error(ErrorCode::Parse, std::string("model JSON: missing matrix '") + name + "'");
  const auto& rows = j[name];
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(rows[0].size());
  Matrix m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != nc)
      throw Error(ErrorCode::Parse, std::string("model JSON: ragged matrix '") + name + "'");
    for (Eigen::Index c = 0; c < nc; ++c) {
      if (!rows[r][c].is_number())
        throw Error(ErrorCode::Parse, std::string("model JSON: non-numeric entry in '") + name + "'");
      m(r, c) = rows[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string model_to_json(const StateSpaceModel& model) {
  nlohmann::json j;
  j["A"] = matrix_json(model.A());
  j["B"] = matrix_json(model.B());
  j["C"] = matrix_json(model.C());
  j["K"] = matrix_json(model.K());
  j["SigmaEHalf"] = matrix_json(model.SigmaEHalf());
  return j.dump(2) + "\n";
}

StateSpaceModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Parse, std::string("model JSON: ") + ex.what());
  }
  return StateSpaceModel(json_matrix(j, "A"), json_matrix(j, "B"), json_matrix(j, "C"),
                         json_matrix(j, "K"), json_matrix(j, "SigmaEHalf"));
}

}  // namespace subid
