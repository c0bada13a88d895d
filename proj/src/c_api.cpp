#include "subid/subid.h"

#include <charconv>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "subid/bench.hpp"
#include "subid/bounds.hpp"
#include "subid/error.hpp"
#include "subid/hankel.hpp"
#include "subid/lti.hpp"
#include "subid/realization.hpp"
#include "subid/regression.hpp"
#include "subid/weighting.hpp"

struct subid_model {
  subid::StateSpaceModel model;
};

struct subid_trajectory {
  subid::Trajectory traj;
};

struct subid_identification {
  subid::RegressorBundle bundle;
  subid::HankelEstimate est;
  subid::WeightingPair pair;
  subid::BalancedRealization real;
  subid::SystemEstimate sys;
};

struct subid_bound_report {
  subid::BoundReport report;
};

struct subid_experiment {
  subid::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

subid_status to_status(subid::ErrorCode code) {
  return static_cast<subid_status>(static_cast<int>(code));
}

template <class F>
subid_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SUBID_OK;
  } catch (const subid::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SUBID_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SUBID_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SUBID_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) throw subid::Error(subid::ErrorCode::InvalidArgument, std::string(name) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

subid::Matrix from_rows(const double* data, size_t rows, size_t cols, const char* name) {
  need(data, name);
  subid::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
  return m;
}

void to_rows(const subid::Matrix& m, double* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
}

void write_markov(const std::vector<subid::Matrix>& mk, double* out) {
  for (const auto& blk : mk) {
    to_rows(blk, out);
    out += blk.size();
  }
}

std::string read_file(const char* path) {
  need(path, "path");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw subid::Error(subid::ErrorCode::Io, std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

subid::WeightingKind weighting_of(subid_weighting w) {
  switch (w) {
    case SUBID_WEIGHTING_OKID: return subid::WeightingKind::OKID;
    case SUBID_WEIGHTING_N4SID: return subid::WeightingKind::N4SID;
    case SUBID_WEIGHTING_MOESP: return subid::WeightingKind::MOESP;
    case SUBID_WEIGHTING_IVM: return subid::WeightingKind::IVM;
    case SUBID_WEIGHTING_CVA: return subid::WeightingKind::CVA;
  }
  throw subid::Error(subid::ErrorCode::InvalidArgument, "unknown weighting");
}

}  // namespace

extern "C" {

const char* subid_version(void) { return "0.1.0"; }

const char* subid_last_error(void) { return g_last_error.c_str(); }

const char* subid_status_name(subid_status status) {
  if (status == SUBID_OK) return "ok";
  if (status == SUBID_ERR_OUT_OF_MEMORY) return "out_of_memory";
  if (status == SUBID_ERR_INTERNAL) return "internal";
  if (status >= SUBID_ERR_INVALID_ARGUMENT && status <= SUBID_ERR_IO)
    return subid::error_code_name(static_cast<subid::ErrorCode>(static_cast<int>(status)));
  return "unknown";
}

void subid_string_free(char* s) { delete[] s; }

subid_status subid_model_create(size_t nx, size_t nu, size_t ny, const double* A, const double* B,
                                const double* C, const double* K, const double* S,
                                subid_model** out) {
  return guard([&] {
    need(out, "out");
    if (nx == 0 || nu == 0 || ny == 0)
      throw subid::Error(subid::ErrorCode::InvalidArgument, "dimensions must be positive");
    *out = new subid_model{subid::StateSpaceModel(
        from_rows(A, nx, nx, "A"), from_rows(B, nx, nu, "B"), from_rows(C, ny, nx, "C"),
        from_rows(K, nx, ny, "K"), from_rows(S, ny, ny, "SigmaEHalf"))};
  });
}

subid_status subid_model_from_armax(double a, double b, double c, double var, subid_model** out) {
  return guard([&] {
    need(out, "out");
    *out = new subid_model{subid::armax_to_ss(a, b, c, var)};
  });
}

subid_status subid_model_from_json(const char* text, subid_model** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new subid_model{subid::model_from_json(text)};
  });
}

subid_status subid_model_load_json(const char* path, subid_model** out) {
  return guard([&] {
    need(out, "out");
    *out = new subid_model{subid::model_from_json(read_file(path))};
  });
}

subid_status subid_model_to_json(const subid_model* m, char** out) {
  return guard([&] {
    need(m, "model");
    need(out, "out");
    *out = dup_string(subid::model_to_json(m->model));
  });
}

subid_status subid_model_dims(const subid_model* m, size_t* nx, size_t* nu, size_t* ny) {
  return guard([&] {
    need(m, "model");
    if (nx) *nx = static_cast<size_t>(m->model.nx());
    if (nu) *nu = static_cast<size_t>(m->model.nu());
    if (ny) *ny = static_cast<size_t>(m->model.ny());
  });
}

subid_status subid_model_markov(const subid_model* m, size_t count, double* out) {
  return guard([&] {
    need(m, "model");
    if (count > 0) need(out, "out");
    write_markov(subid::markov_parameters(m->model, count), out);
  });
}

void subid_model_free(subid_model* m) { delete m; }

subid_status subid_simulate(const subid_model* m, size_t nbar, subid_input_kind input,
                            double sigma_u, uint64_t seed, subid_trajectory** out) {
  return guard([&] {
    need(m, "model");
    need(out, "out");
    subid::InputSpec spec;
    spec.seed = seed;
    if (input == SUBID_INPUT_WHITE)
      spec.kind = subid::WhiteGaussianInput{sigma_u};
    else if (input == SUBID_INPUT_COLORED)
      spec.kind = subid::ColoredAR2Input{};
    else
      throw subid::Error(subid::ErrorCode::InvalidArgument, "unknown input kind");
    *out = new subid_trajectory{subid::simulate(m->model, nbar, spec, seed ^ subid::kNoiseSeedMix)};
  });
}

subid_status subid_trajectory_load_csv(const char* path, subid_trajectory** out) {
  return guard([&] {
    need(out, "out");
    std::istringstream is(read_file(path));
    *out = new subid_trajectory{subid::read_trajectory_csv(is)};
  });
}

subid_status subid_trajectory_save_csv(const subid_trajectory* t, const char* path) {
  return guard([&] {
    need(t, "trajectory");
    need(path, "path");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw subid::Error(subid::ErrorCode::Io, std::string("cannot open '") + path + "'");
    subid::write_trajectory_csv(os, t->traj);
    os.flush();
    if (!os) throw subid::Error(subid::ErrorCode::Io, std::string("write to '") + path + "' failed");
  });
}

subid_status subid_trajectory_dims(const subid_trajectory* t, size_t* length, size_t* nu,
                                   size_t* ny) {
  return guard([&] {
    need(t, "trajectory");
    if (length) *length = t->traj.length();
    if (nu) *nu = static_cast<size_t>(t->traj.nu());
    if (ny) *ny = static_cast<size_t>(t->traj.ny());
  });
}

void subid_trajectory_free(subid_trajectory* t) { delete t; }

subid_identify_options subid_identify_options_default(void) {
  return subid_identify_options{7, 7, 1, SUBID_WEIGHTING_CVA, SUBID_REALIZATION_CVA,
                                SUBID_RANK_STRICT};
}

subid_status subid_identify(const subid_trajectory* t, const subid_identify_options* opt,
                            subid_identification** out) {
  return guard([&] {
    need(t, "trajectory");
    need(opt, "options");
    need(out, "out");
    if (opt->p < 1 || opt->f < 1 || opt->order < 1)
      throw subid::Error(subid::ErrorCode::InvalidArgument, "p, f and order must be >= 1");
    const auto p = static_cast<Eigen::Index>(opt->p), f = static_cast<Eigen::Index>(opt->f);
    const auto policy =
        opt->rank_policy == SUBID_RANK_MINIMUM_NORM ? subid::RankPolicy::MinimumNorm
                                                    : subid::RankPolicy::Strict;
    auto bundle = subid::build_bundle(t->traj, subid::full_horizon(t->traj.length(), p, f));
    auto est = subid::fit_parsim(bundle, policy);
    const auto wk = weighting_of(opt->weighting);
    auto pair = subid::build_weighting(wk, bundle);
    auto real = subid::weighted_svd_truncate(est, pair, static_cast<Eigen::Index>(opt->order));
    subid::SystemEstimate sys;
    if (opt->realization == SUBID_REALIZATION_CVA)
      sys = subid::realize_cva(real, bundle, wk);
    else if (opt->realization == SUBID_REALIZATION_MOESP)
      sys = subid::realize_moesp(real, wk);
    else
      throw subid::Error(subid::ErrorCode::InvalidArgument, "unknown realization");
    *out = new subid_identification{std::move(bundle), std::move(est), std::move(pair),
                                    std::move(real), std::move(sys)};
  });
}

subid_status subid_identification_dims(const subid_identification* id, size_t* nx, size_t* nu,
                                       size_t* ny) {
  return guard([&] {
    need(id, "identification");
    if (nx) *nx = static_cast<size_t>(id->sys.A.rows());
    if (nu) *nu = static_cast<size_t>(id->sys.B.cols());
    if (ny) *ny = static_cast<size_t>(id->sys.C.rows());
  });
}

subid_status subid_identification_matrices(const subid_identification* id, double* A, double* B,
                                           double* C) {
  return guard([&] {
    need(id, "identification");
    if (A) to_rows(id->sys.A, A);
    if (B) to_rows(id->sys.B, B);
    if (C) to_rows(id->sys.C, C);
  });
}

subid_status subid_identification_eigenvalues(const subid_identification* id, double* re,
                                              double* im) {
  return guard([&] {
    need(id, "identification");
    need(re, "re");
    need(im, "im");
    const auto ev = id->sys.eigenvalues();
    for (size_t k = 0; k < ev.size(); ++k) {
      re[k] = ev[k].real();
      im[k] = ev[k].imag();
    }
  });
}

subid_status subid_identification_markov(const subid_identification* id, size_t count,
                                         double* out) {
  return guard([&] {
    need(id, "identification");
    if (count > 0) need(out, "out");
    write_markov(id->sys.markov(count), out);
  });
}

subid_status subid_identification_singular_values(const subid_identification* id, double* out,
                                                  size_t capacity, size_t* count) {
  return guard([&] {
    need(id, "identification");
    const auto& s = id->real.singular_values;
    if (count) *count = static_cast<size_t>(s.size());
    const auto n = std::min(capacity, static_cast<size_t>(s.size()));
    if (n > 0) need(out, "out");
    for (size_t k = 0; k < n; ++k) out[k] = s(static_cast<Eigen::Index>(k));
  });
}

subid_status subid_identification_bounds(const subid_identification* id, const subid_model* truth,
                                         double sigma_u, double delta, subid_bound_report** out) {
  return guard([&] {
    need(id, "identification");
    need(truth, "truth");
    need(out, "out");
    const auto& cfg = id->est.cfg;
    subid::BoundInputs in{truth->model};
    in.sigma_u = sigma_u;
    in.p = cfg.p;
    in.f = cfg.f;
    in.i = cfg.f;
    in.N = static_cast<std::uint64_t>(cfg.N);
    in.delta = delta;
    auto report = subid::evaluate_bounds(in);
    const subid::Matrix H = subid::true_hankel(truth->model, cfg.f, cfg.p);
    report.svd = subid::svd_robustness(id->est.Hfp, id->pair, H, id->real.nx);
    report.realization =
        subid::realization_bounds(id->real, id->bundle, id->pair, truth->model, sigma_u, delta);
    *out = new subid_bound_report{std::move(report)};
  });
}

void subid_identification_free(subid_identification* id) { delete id; }

subid_bound_options subid_bound_options_default(void) {
  return subid_bound_options{1.0, 7, 7, 7, 2494, 0.05, 0.0, 1.0, 1.0, 1.0, 1.0};
}

subid_status subid_bounds_evaluate(const subid_model* m, const subid_bound_options* opt,
                                   subid_bound_report** out) {
  return guard([&] {
    need(m, "model");
    need(opt, "options");
    need(out, "out");
    subid::BoundInputs in{m->model};
    in.sigma_u = opt->sigma_u;
    in.p = static_cast<Eigen::Index>(opt->p);
    in.f = static_cast<Eigen::Index>(opt->f);
    in.i = static_cast<Eigen::Index>(opt->i);
    in.N = opt->N;
    in.delta = opt->delta;
    in.beta = opt->beta;
    in.constants = {opt->c, opt->c1, opt->c2, opt->c3};
    *out = new subid_bound_report{subid::evaluate_bounds(in)};
  });
}

subid_status subid_bound_report_text(const subid_bound_report* r, char** out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    std::ostringstream os;
    r->report.write_text(os);
    *out = dup_string(os.str());
  });
}

subid_status subid_bound_report_csv(const subid_bound_report* r, char** out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    std::ostringstream os;
    r->report.write_csv(os);
    *out = dup_string(os.str());
  });
}

subid_status subid_bound_report_get(const subid_bound_report* r, const char* key, double* value) {
  return guard([&] {
    need(r, "report");
    need(key, "key");
    need(value, "value");
    for (const auto& [k, v] : r->report.entries()) {
      if (k != key) continue;
      if (v == "true" || v == "false") {
        *value = v == "true" ? 1.0 : 0.0;
        return;
      }
      double d = 0.0;
      auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec != std::errc())
        throw subid::Error(subid::ErrorCode::Parse, "report value for '" + k + "' is not numeric");
      *value = d;
      return;
    }
    throw subid::Error(subid::ErrorCode::InvalidArgument,
                       std::string("report has no key '") + key + "'");
  });
}

void subid_bound_report_free(subid_bound_report* r) { delete r; }

subid_status subid_experiment_create(const char* kind, subid_experiment** out) {
  return guard([&] {
    need(kind, "kind");
    need(out, "out");
    const auto k = subid::parse_experiment(kind);
    if (!k)
      throw subid::Error(subid::ErrorCode::InvalidArgument,
                         std::string("unknown experiment '") + kind + "'");
    *out = new subid_experiment{subid::default_config(*k)};
  });
}

subid_status subid_experiment_load(const char* path, subid_experiment** out) {
  return guard([&] {
    need(out, "out");
    std::istringstream is(read_file(path));
    *out = new subid_experiment{subid::parse_config(is)};
  });
}

subid_status subid_experiment_set(subid_experiment* e, const char* key, const char* value) {
  return guard([&] {
    need(e, "experiment");
    need(key, "key");
    need(value, "value");
    subid::set_config_value(e->cfg, key, value);
  });
}

subid_status subid_experiment_run(const subid_experiment* e, subid_experiment_result* result) {
  return guard([&] {
    need(e, "experiment");
    const auto res = subid::run_experiment(e->cfg);
    if (result) {
      result->rows = res.rows;
      result->failures = res.failures;
      result->failure_rate = res.failure_rate;
      result->threshold_exceeded = res.failure_threshold_exceeded ? 1 : 0;
    }
  });
}

void subid_experiment_free(subid_experiment* e) { delete e; }

subid_status subid_summarize(const char* in_path, const char* out_path) {
  return guard([&] {
    need(out_path, "summary path");
    std::istringstream is(read_file(in_path));
    const auto rows = subid::summarize(is);
    std::ofstream os(out_path, std::ios::binary);
    if (!os)
      throw subid::Error(subid::ErrorCode::Io, std::string("cannot open '") + out_path + "'");
    subid::write_summary_csv(os, rows);
    os.flush();
    if (!os) throw subid::Error(subid::ErrorCode::Io, "summary write failed");
  });
}

}  // extern "C"
