#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "subid/lti.hpp"
#include "subid/realization.hpp"
#include "subid/weighting.hpp"

namespace subid {

enum class ExperimentKind { SweetSpot, KappaCondition, PoleError };

const char* experiment_name(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_experiment(const std::string& name);

/// y_k + a y_{k-1} = b u_{k-1} + e_k + c e_{k-1}, e_k ~ N(0, noise_variance)
struct ArmaxSpec {
  double a = -0.7;
  double b = 1.0;
  double c = 0.5;
  double noise_variance = 4.0;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::PoleError;
  ArmaxSpec model;
  std::variant<WhiteGaussianInput, ColoredAR2Input> input = WhiteGaussianInput{};
  std::vector<std::size_t> nbar_grid;
  std::vector<Eigen::Index> p_grid;
  Eigen::Index f = 7;
  std::vector<WeightingKind> weightings;
  std::vector<RealizationKind> realizations;
  int trials = 100;
  std::uint64_t base_seed = 1;
  std::string output;
  int threads = 0;  // 0: hardware concurrency
  bool timing = false;
  double max_failure_rate = 0.25;

  void validate() const;
};

/// Grids and variant sets matching the three reference experiments.
ExperimentConfig default_config(ExperimentKind kind);

/// Applies one key=value setting. Lists are comma separated; numeric lists
/// also accept start:step:stop ranges (inclusive).
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; `#` starts a comment. The `experiment` key, if
/// present, resets defaults and must come first.
ExperimentConfig parse_config(std::istream& is);

struct TrialRecord {
  ExperimentKind experiment = ExperimentKind::PoleError;
  int trial = 0;
  std::uint64_t seed = 0;
  std::size_t nbar = 0;
  Eigen::Index p = 0;
  Eigen::Index f = 0;
  WeightingKind weighting = WeightingKind::OKID;
  RealizationKind realization = RealizationKind::CvaType;
  double pole_error = 0.0;
  double kappa = 0.0;
  bool condition_met = false;
  bool failed = false;
  std::string error;  // error code name when failed
  double wall_time = 0.0;
};

inline constexpr std::uint64_t kNoiseSeedMix = 0x9E3779B97F4A7C15ull;

/// Normalised pole error ||lambda_hat - lambda|| / ||lambda|| after matching
/// eigenvalues by the cheapest permutation.
double pole_error(const std::vector<std::complex<double>>& estimated,
                  const std::vector<std::complex<double>>& truth);

/// Rows come out in (nbar, p, trial, weighting, realization) order
/// regardless of the thread count.
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg);

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records);

struct ExperimentResult {
  std::size_t rows = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  bool failure_threshold_exceeded = false;
};

/// Runs the sweep and writes the trial CSV to cfg.output.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string experiment;
  std::size_t nbar = 0;
  Eigen::Index p = 0;
  Eigen::Index f = 0;
  std::string weighting;
  std::string realization;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double pole_error_median = 0.0, pole_error_q25 = 0.0, pole_error_q75 = 0.0;
  double kappa_median = 0.0, kappa_q25 = 0.0, kappa_q75 = 0.0;
  double condition_met_fraction = 0.0;
};

/// Linear-interpolation quantile of unsorted data (q in [0, 1]).
double quantile(std::vector<double> values, double q);

/// Groups a trial CSV by (experiment, nbar, p, f, weighting, realization) in
/// order of first appearance. Failed rows only count toward `failures`.
std::vector<SummaryRow> summarize(std::istream& trials_csv);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

}  // namespace subid
