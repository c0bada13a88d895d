#include "subid/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "subid/bounds.hpp"
#include "subid/error.hpp"
#include "subid/hankel.hpp"
#include "subid/regression.hpp"

namespace subid {

const char* experiment_name(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::SweetSpot: return "sweetspot";
    case ExperimentKind::KappaCondition: return "kappa";
    case ExperimentKind::PoleError: return "poles";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
  for (auto k : {ExperimentKind::SweetSpot, ExperimentKind::KappaCondition,
                 ExperimentKind::PoleError})
    if (name == experiment_name(k)) return k;
  return std::nullopt;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.nbar_grid = {500, 1500, 2500};
  cfg.f = 7;
  switch (kind) {
    case ExperimentKind::SweetSpot:
      for (Eigen::Index p = 2; p <= 30; p += 4) cfg.p_grid.push_back(p);
      cfg.weightings = {WeightingKind::OKID};
      cfg.realizations = {RealizationKind::MoespType, RealizationKind::CvaType};
      break;
    case ExperimentKind::KappaCondition:
      cfg.p_grid = {7};
      cfg.weightings = {WeightingKind::OKID, WeightingKind::MOESP, WeightingKind::CVA};
      cfg.realizations = {RealizationKind::CvaType};
      break;
    case ExperimentKind::PoleError:
      cfg.p_grid = {7};
      cfg.weightings = {WeightingKind::OKID, WeightingKind::MOESP, WeightingKind::CVA};
      cfg.realizations = {RealizationKind::MoespType, RealizationKind::CvaType};
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (nbar_grid.empty()) bad("nbar grid is empty");
  if (p_grid.empty()) bad("p grid is empty");
  if (weightings.empty()) bad("weighting set is empty");
  if (realizations.empty()) bad("realization set is empty");
  if (trials < 1) bad("trials must be >= 1");
  if (f < 1) bad("f must be >= 1");
  if (threads < 0) bad("threads must be >= 0");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0))
    bad("max_failure_rate must lie in [0, 1]");
  for (auto p : p_grid)
    if (p < 1) bad("past horizons must be >= 1");
  for (auto n : nbar_grid)
    if (n < 1) bad("nbar values must be >= 1");
  for (auto w : weightings)
    if (w == WeightingKind::Custom) bad("custom weightings cannot be swept");
  armax_to_ss(model.a, model.b, model.c, model.noise_variance);
  generate_input(InputSpec{input, 0}, 1, 1);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::InvalidArgument, key + ": '" + s + "' is not a number");
  return v;
}

long long to_int(const std::string& s, const std::string& key) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::InvalidArgument, key + ": '" + s + "' is not an integer");
  return v;
}

std::vector<long long> int_list(const std::string& value, const std::string& key) {
  std::vector<long long> out;
  for (const auto& item : split(value, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(to_int(parts[0], key));
    } else if (parts.size() == 3) {
      const long long a = to_int(parts[0], key), step = to_int(parts[1], key),
                      b = to_int(parts[2], key);
      if (step <= 0 || b < a) throw Error(ErrorCode::InvalidArgument, key + ": bad range " + item);
      for (long long v = a; v <= b; v += step) out.push_back(v);
    } else {
      throw Error(ErrorCode::InvalidArgument, key + ": bad list item '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, key + ": empty list");
  return out;
}

bool to_bool(const std::string& s, const std::string& key) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw Error(ErrorCode::InvalidArgument, key + ": expected true or false");
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key_in, const std::string& raw) {
  const std::string key = trim(key_in);
  const std::string value = trim(raw);
  auto bad = [&](const std::string& m) { throw Error(ErrorCode::InvalidArgument, key + ": " + m); };

  if (key == "experiment") {
    const auto k = parse_experiment(value);
    if (!k) bad("expected sweetspot, kappa or poles");
    const ExperimentConfig fresh = default_config(*k);
    cfg.experiment = fresh.experiment;
    cfg.nbar_grid = fresh.nbar_grid;
    cfg.p_grid = fresh.p_grid;
    cfg.weightings = fresh.weightings;
    cfg.realizations = fresh.realizations;
  } else if (key == "a") {
    cfg.model.a = to_double(value, key);
  } else if (key == "b") {
    cfg.model.b = to_double(value, key);
  } else if (key == "c") {
    cfg.model.c = to_double(value, key);
  } else if (key == "noise_variance") {
    cfg.model.noise_variance = to_double(value, key);
  } else if (key == "input") {
    if (value == "white")
      cfg.input = WhiteGaussianInput{};
    else if (value == "colored")
      cfg.input = ColoredAR2Input{};
    else
      bad("expected white or colored");
  } else if (key == "sigma_u") {
    auto* w = std::get_if<WhiteGaussianInput>(&cfg.input);
    if (!w) bad("applies to white input only");
    w->sigma_u = to_double(value, key);
  } else if (key == "gain" || key == "a1" || key == "a2") {
    auto* c = std::get_if<ColoredAR2Input>(&cfg.input);
    if (!c) bad("applies to colored input only");
    const double v = to_double(value, key);
    (key == "gain" ? c->gain : key == "a1" ? c->a1 : c->a2) = v;
  } else if (key == "nbar") {
    cfg.nbar_grid.clear();
    for (auto v : int_list(value, key)) {
      if (v < 1) bad("values must be >= 1");
      cfg.nbar_grid.push_back(static_cast<std::size_t>(v));
    }
  } else if (key == "p") {
    cfg.p_grid.clear();
    for (auto v : int_list(value, key)) {
      if (v < 1) bad("values must be >= 1");
      cfg.p_grid.push_back(static_cast<Eigen::Index>(v));
    }
  } else if (key == "f") {
    cfg.f = static_cast<Eigen::Index>(to_int(value, key));
  } else if (key == "weightings") {
    cfg.weightings.clear();
    for (const auto& w : split(value, ',')) {
      const auto k = parse_weighting(w);
      if (!k) bad("unknown weighting '" + w + "'");
      cfg.weightings.push_back(*k);
    }
  } else if (key == "realizations") {
    cfg.realizations.clear();
    for (const auto& r : split(value, ',')) {
      const auto k = parse_realization(r);
      if (!k) bad("unknown realization '" + r + "'");
      cfg.realizations.push_back(*k);
    }
  } else if (key == "trials") {
    cfg.trials = static_cast<int>(to_int(value, key));
  } else if (key == "seed") {
    std::uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size() || value.empty())
      bad("expected an unsigned 64-bit integer");
    cfg.base_seed = v;
  } else if (key == "output") {
    cfg.output = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(to_int(value, key));
  } else if (key == "timing") {
    cfg.timing = to_bool(value, key);
  } else if (key == "max_failure_rate") {
    cfg.max_failure_rate = to_double(value, key);
  } else {
    bad("unknown key");
  }
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg = default_config(ExperimentKind::PoleError);
  std::string line;
  std::size_t lineno = 0;
  bool seen_other = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key == "experiment" && seen_other)
      throw Error(ErrorCode::Parse,
                  "line " + std::to_string(lineno) + ": 'experiment' must precede other keys");
    if (key != "experiment") seen_other = true;
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

double pole_error(const std::vector<std::complex<double>>& est,
                  const std::vector<std::complex<double>>& truth) {
  if (est.size() != truth.size() || truth.empty())
    throw Error(ErrorCode::InvalidArgument, "pole sets differ in size");
  std::vector<std::size_t> perm(est.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  double ref = 0.0;
  for (const auto& t : truth) ref += std::norm(t);
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < perm.size(); ++j) cost += std::norm(est[perm[j]] - truth[j]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best) / std::sqrt(ref);
}

namespace {

Trajectory prefix(const Trajectory& t, std::size_t n) {
  Trajectory out;
  out.u.assign(t.u.begin(), t.u.begin() + static_cast<std::ptrdiff_t>(n));
  out.y.assign(t.y.begin(), t.y.begin() + static_cast<std::ptrdiff_t>(n));
  out.seed = t.seed;
  return out;
}

const char* code_of(const std::exception& e) {
  if (const auto* se = dynamic_cast<const Error*>(&e)) return error_code_name(se->code());
  return "internal";
}

// All rows of one trial, ordered (nbar, p, weighting, realization).
std::vector<TrialRecord> one_trial(const ExperimentConfig& cfg, const StateSpaceModel& model,
                                   int trial) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  const std::size_t nmax = *std::max_element(cfg.nbar_grid.begin(), cfg.nbar_grid.end());
  const Trajectory full = simulate(model, nmax, InputSpec{cfg.input, seed}, seed ^ kNoiseSeedMix);
  Eigen::EigenSolver<Matrix> es(model.A(), false);
  const std::vector<std::complex<double>> poles(es.eigenvalues().data(),
                                                es.eigenvalues().data() + es.eigenvalues().size());
  const auto nx = model.nx();
  const auto nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<TrialRecord> rows;
  for (const std::size_t nbar : cfg.nbar_grid) {
    const Trajectory traj = prefix(full, nbar);
    for (const Eigen::Index p : cfg.p_grid) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t first = rows.size();
      TrialRecord base;
      base.experiment = cfg.experiment;
      base.trial = trial;
      base.seed = seed;
      base.nbar = nbar;
      base.p = p;
      base.f = cfg.f;
      base.pole_error = nan;
      base.kappa = nan;

      std::optional<RegressorBundle> bundle;
      std::optional<HankelEstimate> est;
      std::string fit_error;
      try {
        bundle = build_bundle(traj, full_horizon(nbar, p, cfg.f));
        est = fit_parsim(*bundle);
      } catch (const std::exception& e) {
        fit_error = code_of(e);
      }
      const Matrix H = true_hankel(model, cfg.f, p);

      for (const WeightingKind w : cfg.weightings) {
        std::optional<BalancedRealization> real;
        TrialRecord wrow = base;
        wrow.weighting = w;
        std::string werr = fit_error;
        if (werr.empty()) {
          try {
            const WeightingPair pair = build_weighting(w, *bundle);
            const SvdRobustness rob = svd_robustness(est->Hfp, pair, H, nx);
            wrow.kappa = rob.kappa;
            wrow.condition_met = rob.condition_met;
            real = weighted_svd_truncate(*est, pair, nx);
          } catch (const std::exception& e) {
            werr = code_of(e);
          }
        }
        for (const RealizationKind r : cfg.realizations) {
          TrialRecord row = wrow;
          row.realization = r;
          std::string err = werr;
          if (err.empty()) {
            try {
              const SystemEstimate sys =
                  r == RealizationKind::CvaType ? realize_cva(*real, *bundle, w) : realize_moesp(*real, w);
              row.pole_error = pole_error(sys.eigenvalues(), poles);
              if (!std::isfinite(row.pole_error))
                throw Error(ErrorCode::InvalidArgument, "non-finite pole estimate");
            } catch (const std::exception& e) {
              err = code_of(e);
            }
          }
          if (!err.empty()) {
            row.failed = true;
            row.error = err;
            row.pole_error = nan;
          }
          rows.push_back(std::move(row));
        }
      }
      if (cfg.timing) {
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double share = dt / static_cast<double>(rows.size() - first);
        for (std::size_t k = first; k < rows.size(); ++k) rows[k].wall_time = share;
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg) {
  cfg.validate();
  const StateSpaceModel model =
      armax_to_ss(cfg.model.a, cfg.model.b, cfg.model.c, cfg.model.noise_variance);
  const int trials = cfg.trials;
  std::vector<std::vector<TrialRecord>> per_trial(static_cast<std::size_t>(trials));

  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        per_trial[static_cast<std::size_t>(t)] = one_trial(cfg, model, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t per_point = cfg.weightings.size() * cfg.realizations.size();
  const std::size_t points = cfg.nbar_grid.size() * cfg.p_grid.size();
  std::vector<TrialRecord> out;
  out.reserve(points * per_point * static_cast<std::size_t>(trials));
  for (std::size_t g = 0; g < points; ++g)
    for (const auto& rows : per_trial)
      for (std::size_t v = 0; v < per_point; ++v) out.push_back(rows[g * per_point + v]);
  return out;
}

namespace {

const char* const kTrialHeader =
    "experiment,trial,seed,nbar,p,f,weighting,realization,pole_error,kappa,condition_met,failed,"
    "error,wall_time";

const char* const kSummaryHeader =
    "experiment,nbar,p,f,weighting,realization,trials,failures,pole_error_median,pole_error_q25,"
    "pole_error_q75,kappa_median,kappa_q25,kappa_q75,condition_met_fraction";

}  // namespace

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << kTrialHeader << '\n';
  for (const auto& r : records) {
    os << experiment_name(r.experiment) << ',' << r.trial << ',' << r.seed << ',' << r.nbar << ','
       << r.p << ',' << r.f << ',' << weighting_name(r.weighting) << ','
       << realization_name(r.realization) << ',' << format_double(r.pole_error, 17) << ','
       << format_double(r.kappa, 17) << ',' << (r.condition_met ? 1 : 0) << ','
       << (r.failed ? 1 : 0) << ',' << r.error << ',' << format_double(r.wall_time, 6) << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.output.empty()) throw Error(ErrorCode::InvalidArgument, "no output path configured");
  const auto records = run_trials(cfg);
  std::ofstream os(cfg.output, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open '" + cfg.output + "' for writing");
  write_trials_csv(os, records);
  os.flush();
  if (!os) throw Error(ErrorCode::Io, "write to '" + cfg.output + "' failed");
  ExperimentResult res;
  res.rows = records.size();
  for (const auto& r : records) res.failures += r.failed ? 1 : 0;
  res.failure_rate = res.rows ? static_cast<double>(res.failures) / static_cast<double>(res.rows) : 0.0;
  res.failure_threshold_exceeded = res.failure_rate > cfg.max_failure_rate;
  return res;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
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

double cell_double(const std::string& s, std::size_t row, const char* col) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::Parse, "row " + std::to_string(row) + ": bad " + col + " '" + s + "'");
  return v;
}

long long cell_int(const std::string& s, std::size_t row, const char* col) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::Parse, "row " + std::to_string(row) + ": bad " + col + " '" + s + "'");
  return v;
}

}  // namespace

std::vector<SummaryRow> summarize(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Parse, "row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrialHeader)
    throw Error(ErrorCode::Parse, "row 1: header does not match the trial schema");

  struct Acc {
    SummaryRow row;
    std::vector<double> poles, kappas;
    std::size_t met = 0;
  };
  std::vector<Acc> groups;
  std::map<std::string, std::size_t> index;
  std::size_t rowno = 1;
  while (std::getline(is, line)) {
    ++rowno;
    if (line.empty() || line == "\r") continue;
    const auto c = split_row(line);
    if (c.size() != 14)
      throw Error(ErrorCode::Parse, "row " + std::to_string(rowno) + ": expected 14 fields, got " +
                                        std::to_string(c.size()));
    if (!parse_experiment(c[0]))
      throw Error(ErrorCode::Parse, "row " + std::to_string(rowno) + ": unknown experiment");
    if (!parse_weighting(c[6]) && c[6] != "custom")
      throw Error(ErrorCode::Parse, "row " + std::to_string(rowno) + ": unknown weighting");
    if (!parse_realization(c[7]))
      throw Error(ErrorCode::Parse, "row " + std::to_string(rowno) + ": unknown realization");
    const auto nbar = cell_int(c[3], rowno, "nbar");
    const auto p = cell_int(c[4], rowno, "p");
    const auto f = cell_int(c[5], rowno, "f");
    const double pe = cell_double(c[8], rowno, "pole_error");
    const double kappa = cell_double(c[9], rowno, "kappa");
    const auto met = cell_int(c[10], rowno, "condition_met");
    const auto failed = cell_int(c[11], rowno, "failed");
    if (nbar < 1 || p < 1 || f < 1 || (met != 0 && met != 1) || (failed != 0 && failed != 1))
      throw Error(ErrorCode::Parse, "row " + std::to_string(rowno) + ": value out of range");

    const std::string key = c[0] + '|' + c[3] + '|' + c[4] + '|' + c[5] + '|' + c[6] + '|' + c[7];
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Acc acc;
      acc.row.experiment = c[0];
      acc.row.nbar = static_cast<std::size_t>(nbar);
      acc.row.p = static_cast<Eigen::Index>(p);
      acc.row.f = static_cast<Eigen::Index>(f);
      acc.row.weighting = c[6];
      acc.row.realization = c[7];
      groups.push_back(std::move(acc));
    }
    Acc& acc = groups[it->second];
    ++acc.row.trials;
    if (failed) {
      ++acc.row.failures;
      continue;
    }
    acc.poles.push_back(pe);
    if (std::isfinite(kappa)) acc.kappas.push_back(kappa);
    acc.met += met ? 1 : 0;
  }

  std::vector<SummaryRow> out;
  for (auto& g : groups) {
    SummaryRow r = g.row;
    r.pole_error_median = quantile(g.poles, 0.5);
    r.pole_error_q25 = quantile(g.poles, 0.25);
    r.pole_error_q75 = quantile(g.poles, 0.75);
    r.kappa_median = quantile(g.kappas, 0.5);
    r.kappa_q25 = quantile(g.kappas, 0.25);
    r.kappa_q75 = quantile(g.kappas, 0.75);
    const std::size_t ok = r.trials - r.failures;
    r.condition_met_fraction =
        ok ? static_cast<double>(g.met) / static_cast<double>(ok)
           : std::numeric_limits<double>::quiet_NaN();
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.nbar << ',' << r.p << ',' << r.f << ',' << r.weighting << ','
       << r.realization << ',' << r.trials << ',' << r.failures << ','
       << format_double(r.pole_error_median, 12) << ',' << format_double(r.pole_error_q25, 12)
       << ',' << format_double(r.pole_error_q75, 12) << ',' << format_double(r.kappa_median, 12)
       << ',' << format_double(r.kappa_q25, 12) << ',' << format_double(r.kappa_q75, 12) << ','
       << format_double(r.condition_met_fraction, 12) << '\n';
  }
}

}  // namespace subid
