// subid command line front end. Talks to the library only through subid.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subid/subid.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFlagged = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitOther = 1;

struct Failure {
  subid_status status;
};

void check(subid_status s) {
  if (s != SUBID_OK) throw Failure{s};
}

int exit_for(subid_status s) {
  switch (s) {
    case SUBID_ERR_PARSE:
    case SUBID_ERR_INSUFFICIENT_DATA:
      return kExitData;
    case SUBID_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitOther;
  }
}

template <class T, void (*F)(T*)>
struct Deleter {
  void operator()(T* p) const { F(p); }
};
using ModelPtr = std::unique_ptr<subid_model, Deleter<subid_model, subid_model_free>>;
using TrajPtr = std::unique_ptr<subid_trajectory, Deleter<subid_trajectory, subid_trajectory_free>>;
using IdPtr =
    std::unique_ptr<subid_identification, Deleter<subid_identification, subid_identification_free>>;
using ReportPtr =
    std::unique_ptr<subid_bound_report, Deleter<subid_bound_report, subid_bound_report_free>>;
using ExpPtr = std::unique_ptr<subid_experiment, Deleter<subid_experiment, subid_experiment_free>>;

std::string take_string(char* s) {
  std::string out(s ? s : "");
  subid_string_free(s);
  return out;
}

// Locale-independent, 10 significant digits.
std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  os << v;
  return os.str();
}

std::string output_path(const std::string& flag, const std::string& fallback_name) {
  if (!flag.empty()) return flag;
  const char* dir = std::getenv("SUBID_OUTPUT_DIR");
  std::filesystem::path base = dir && *dir ? dir : ".";
  return (base / fallback_name).string();
}

struct ModelFlags {
  std::string model_file;
  std::vector<double> armax;  // a, b, c, variance
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  auto* mf = cmd->add_option("--model", m.model_file, "Model JSON (A, B, C, K, SigmaEHalf)")
                 ->check(CLI::ExistingFile);
  auto* af = cmd->add_option("--armax", m.armax, "ARMAX a,b,c,variance")
                 ->delimiter(',')
                 ->expected(4);
  mf->excludes(af);
}

ModelPtr load_model(const ModelFlags& m) {
  subid_model* raw = nullptr;
  if (!m.model_file.empty())
    check(subid_model_load_json(m.model_file.c_str(), &raw));
  else if (!m.armax.empty())
    check(subid_model_from_armax(m.armax[0], m.armax[1], m.armax[2], m.armax[3], &raw));
  else
    check(subid_model_from_armax(-0.7, 1.0, 0.5, 4.0, &raw));
  return ModelPtr(raw);
}

void print_matrix(std::ostream& os, const std::string& name, const double* v, size_t rows,
                  size_t cols) {
  os << name << " = [";
  for (size_t r = 0; r < rows; ++r) {
    if (r) os << "; ";
    for (size_t c = 0; c < cols; ++c) os << (c ? " " : "") << num(v[r * cols + c]);
  }
  os << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace identification with finite-sample diagnostics"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", subid_version());

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a trajectory to CSV");
  ModelFlags sim_model;
  std::size_t sim_nbar = 0;
  std::string sim_input = "white";
  double sim_sigma_u = 1.0;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  add_model_flags(sim, sim_model);
  sim->add_option("--nbar", sim_nbar, "Number of samples")->required()->check(CLI::PositiveNumber);
  sim->add_option("--input", sim_input, "Input kind")
      ->check(CLI::IsMember({"white", "colored"}));
  sim->add_option("--sigma-u", sim_sigma_u, "White input standard deviation")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output CSV");

  // identify
  auto* ident = app.add_subcommand("identify", "Identify a model from a trajectory CSV");
  std::string id_data, id_weighting = "cva", id_realization = "cva", id_rank = "strict";
  std::size_t id_p = 0, id_f = 0, id_order = 0;
  std::string id_bounds;
  double id_sigma_u = 1.0, id_delta = 0.05;
  ident->add_option("--data", id_data, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  ident->add_option("--p", id_p, "Past horizon")->required()->check(CLI::PositiveNumber);
  ident->add_option("--f", id_f, "Future horizon")->required()->check(CLI::PositiveNumber);
  ident->add_option("--order", id_order, "Model order")->required()->check(CLI::PositiveNumber);
  ident->add_option("--weighting", id_weighting)
      ->check(CLI::IsMember({"okid", "n4sid", "moesp", "ivm", "cva"}));
  ident->add_option("--realization", id_realization)->check(CLI::IsMember({"cva", "moesp"}));
  ident->add_option("--rank-policy", id_rank)->check(CLI::IsMember({"strict", "minimum-norm"}));
  auto* id_bounds_opt = ident->add_option("--bounds", id_bounds, "True model JSON for oracle report")
                            ->check(CLI::ExistingFile);
  ident->add_option("--sigma-u", id_sigma_u, "Input standard deviation for the oracle report")
      ->check(CLI::PositiveNumber)
      ->needs(id_bounds_opt);
  ident->add_option("--delta", id_delta, "Failure probability for the oracle report")
      ->check(CLI::Range(0.0, 1.0))
      ->needs(id_bounds_opt);

  // bounds
  auto* bnd = app.add_subcommand("bounds", "Evaluate finite-sample quantities for a model");
  ModelFlags b_model;
  subid_bound_options bopt = subid_bound_options_default();
  std::string b_csv;
  add_model_flags(bnd, b_model);
  bnd->add_option("--sigma-u", bopt.sigma_u)->check(CLI::PositiveNumber);
  bnd->add_option("--p", bopt.p)->check(CLI::PositiveNumber);
  bnd->add_option("--f", bopt.f)->check(CLI::PositiveNumber);
  bnd->add_option("--i", bopt.i, "Regression index (defaults to f)");
  bnd->add_option("--N", bopt.N, "Number of regression columns")->check(CLI::PositiveNumber);
  bnd->add_option("--delta", bopt.delta)->check(CLI::Range(0.0, 1.0));
  bnd->add_option("--beta", bopt.beta, "Use p = ceil(beta log N)")->check(CLI::NonNegativeNumber);
  bnd->add_option("--c", bopt.c)->check(CLI::PositiveNumber);
  bnd->add_option("--c1", bopt.c1)->check(CLI::PositiveNumber);
  bnd->add_option("--c2", bopt.c2)->check(CLI::PositiveNumber);
  bnd->add_option("--c3", bopt.c3)->check(CLI::PositiveNumber);
  bnd->add_option("--csv", b_csv, "Also write the report as CSV");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a Monte-Carlo experiment");
  std::string bench_config, bench_experiment, bench_input, bench_out;
  std::optional<int> bench_trials;
  std::optional<std::uint64_t> bench_seed;
  std::optional<double> bench_sigma_u;
  std::vector<std::string> bench_sets;
  auto* cfg_opt = bench->add_option("--config", bench_config, "key = value config file")
                      ->check(CLI::ExistingFile);
  auto* exp_opt = bench->add_option("--experiment", bench_experiment)
                      ->check(CLI::IsMember({"sweetspot", "kappa", "poles"}));
  cfg_opt->excludes(exp_opt);
  bench->add_option("--trials", bench_trials)->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed);
  bench->add_option("--input", bench_input)->check(CLI::IsMember({"white", "colored"}));
  bench->add_option("--sigma-u", bench_sigma_u)->check(CLI::PositiveNumber);
  bench->add_option("--set", bench_sets, "Extra key=value settings");
  bench->add_option("--out", bench_out, "Trial CSV");

  // summarize
  auto* summ = app.add_subcommand("summarize", "Aggregate a trial CSV");
  std::string s_in, s_out;
  summ->add_option("--in", s_in, "Trial CSV")->required()->check(CLI::ExistingFile);
  summ->add_option("--out", s_out, "Summary CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return e.get_exit_code() == 0 ? rc : kExitUsage;
  }

  try {
    if (*sim) {
      auto model = load_model(sim_model);
      subid_trajectory* traj = nullptr;
      check(subid_simulate(model.get(), sim_nbar,
                           sim_input == "white" ? SUBID_INPUT_WHITE : SUBID_INPUT_COLORED,
                           sim_sigma_u, sim_seed, &traj));
      TrajPtr t(traj);
      const auto path = output_path(sim_out, "trajectory.csv");
      check(subid_trajectory_save_csv(t.get(), path.c_str()));
      std::cout << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*ident) {
      subid_trajectory* traj = nullptr;
      check(subid_trajectory_load_csv(id_data.c_str(), &traj));
      TrajPtr t(traj);
      subid_identify_options opt = subid_identify_options_default();
      opt.p = id_p;
      opt.f = id_f;
      opt.order = id_order;
      const std::vector<std::string> wnames{"okid", "n4sid", "moesp", "ivm", "cva"};
      for (size_t k = 0; k < wnames.size(); ++k)
        if (wnames[k] == id_weighting) opt.weighting = static_cast<subid_weighting>(k);
      opt.realization = id_realization == "cva" ? SUBID_REALIZATION_CVA : SUBID_REALIZATION_MOESP;
      opt.rank_policy = id_rank == "strict" ? SUBID_RANK_STRICT : SUBID_RANK_MINIMUM_NORM;
      subid_identification* raw = nullptr;
      check(subid_identify(t.get(), &opt, &raw));
      IdPtr id(raw);

      size_t nx = 0, nu = 0, ny = 0;
      check(subid_identification_dims(id.get(), &nx, &nu, &ny));
      std::vector<double> A(nx * nx), B(nx * nu), C(ny * nx), re(nx), im(nx);
      check(subid_identification_matrices(id.get(), A.data(), B.data(), C.data()));
      check(subid_identification_eigenvalues(id.get(), re.data(), im.data()));
      constexpr size_t kMarkov = 5;
      std::vector<double> mk(kMarkov * ny * nu);
      check(subid_identification_markov(id.get(), kMarkov, mk.data()));
      size_t nsv = 0;
      check(subid_identification_singular_values(id.get(), nullptr, 0, &nsv));
      std::vector<double> sv(nsv);
      check(subid_identification_singular_values(id.get(), sv.data(), nsv, &nsv));

      std::ostream& os = std::cout;
      os << "order = " << nx << "\n";
      os << "weighting = " << id_weighting << "\n";
      os << "realization = " << id_realization << "\n";
      print_matrix(os, "C", C.data(), ny, nx);
      os << "eigenvalues =";
      for (size_t k = 0; k < nx; ++k) {
        os << " " << num(re[k]);
        if (im[k] != 0.0) os << (im[k] > 0 ? "+" : "") << num(im[k]) << "i";
      }
      os << "\n";
      for (size_t k = 0; k < kMarkov; ++k)
        print_matrix(os, "markov_" + std::to_string(k + 1), mk.data() + k * ny * nu, ny, nu);
      os << "singular_values =";
      for (double s : sv) os << " " << num(s);
      os << "\n";

      if (!id_bounds.empty()) {
        subid_model* truth = nullptr;
        check(subid_model_load_json(id_bounds.c_str(), &truth));
        ModelPtr tm(truth);
        subid_bound_report* rep = nullptr;
        check(subid_identification_bounds(id.get(), tm.get(), id_sigma_u, id_delta, &rep));
        ReportPtr r(rep);
        char* text = nullptr;
        check(subid_bound_report_text(r.get(), &text));
        os << "\n" << take_string(text);
      }
      return kExitOk;
    }

    if (*bnd) {
      auto model = load_model(b_model);
      if (bnd->count("--i") == 0) bopt.i = bopt.f;
      subid_bound_report* rep = nullptr;
      check(subid_bounds_evaluate(model.get(), &bopt, &rep));
      ReportPtr r(rep);
      char* text = nullptr;
      check(subid_bound_report_text(r.get(), &text));
      std::cout << take_string(text);
      if (!b_csv.empty()) {
        char* csv = nullptr;
        check(subid_bound_report_csv(r.get(), &csv));
        const std::string body = take_string(csv);
        std::FILE* fp = std::fopen(b_csv.c_str(), "wb");
        if (!fp) {
          std::cerr << "error: cannot open '" << b_csv << "'\n";
          return kExitOther;
        }
        const bool ok = std::fwrite(body.data(), 1, body.size(), fp) == body.size();
        if (std::fclose(fp) != 0 || !ok) {
          std::cerr << "error: write to '" << b_csv << "' failed\n";
          return kExitOther;
        }
      }
      return kExitOk;
    }

    if (*bench) {
      subid_experiment* raw = nullptr;
      if (!bench_config.empty())
        check(subid_experiment_load(bench_config.c_str(), &raw));
      else
        check(subid_experiment_create(bench_experiment.empty() ? "poles" : bench_experiment.c_str(),
                                      &raw));
      ExpPtr e(raw);
      if (bench_trials) check(subid_experiment_set(e.get(), "trials", std::to_string(*bench_trials).c_str()));
      if (bench_seed) check(subid_experiment_set(e.get(), "seed", std::to_string(*bench_seed).c_str()));
      if (!bench_input.empty()) check(subid_experiment_set(e.get(), "input", bench_input.c_str()));
      if (bench_sigma_u) check(subid_experiment_set(e.get(), "sigma_u", num(*bench_sigma_u).c_str()));
      for (const auto& kv : bench_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
          return kExitUsage;
        }
        check(subid_experiment_set(e.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
      }
      // A config file may name its own output; --out overrides it.
      if (!bench_out.empty() || bench_config.empty())
        check(subid_experiment_set(e.get(), "output", output_path(bench_out, "trials.csv").c_str()));
      subid_experiment_result res{};
      check(subid_experiment_run(e.get(), &res));
      std::cout << "rows = " << res.rows << "\nfailures = " << res.failures
                << "\nfailure_rate = " << num(res.failure_rate) << "\n";
      if (res.threshold_exceeded) {
        std::cerr << "error: flagged failure rate " << num(res.failure_rate)
                  << " exceeds threshold\n";
        return kExitFlagged;
      }
      return kExitOk;
    }

    if (*summ) {
      const auto path = output_path(s_out, "summary.csv");
      check(subid_summarize(s_in.c_str(), path.c_str()));
      std::cout << "wrote " << path << "\n";
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << subid_status_name(f.status) << "): " << subid_last_error() << "\n";
    return exit_for(f.status);
  }
  return kExitUsage;
}
