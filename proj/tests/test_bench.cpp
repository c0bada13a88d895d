#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "subid/bench.hpp"
#include "subid/error.hpp"

using namespace subid;

namespace {

ExperimentConfig small_config(ExperimentKind kind) {
  ExperimentConfig cfg = default_config(kind);
  cfg.nbar_grid = {300, 600};
  cfg.trials = 4;
  cfg.base_seed = 11;
  return cfg;
}

std::string csv_of(const std::vector<TrialRecord>& rows) {
  std::ostringstream os;
  write_trials_csv(os, rows);
  return os.str();
}

}  // namespace

TEST_CASE("quantiles") {
  CHECK(quantile({5.0}, 0.5) == 5.0);
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("pole error matches poles before comparing") {
  using C = std::complex<double>;
  CHECK(pole_error({C(0.5), C(0.7)}, {C(0.7), C(0.5)}) == doctest::Approx(0.0));
  CHECK(pole_error({C(0.77)}, {C(0.7)}) == doctest::Approx(0.1));
  CHECK(pole_error({C(0.1, 0.2), C(0.1, -0.2)}, {C(0.1, -0.2), C(0.1, 0.2)}) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(pole_error({C(0.1)}, {C(0.1), C(0.2)}), Error);
}

TEST_CASE("default experiment grids") {
  const auto s = default_config(ExperimentKind::SweetSpot);
  CHECK(s.p_grid.front() == 2);
  CHECK(s.p_grid.back() == 30);
  CHECK(s.p_grid.size() == 8);
  CHECK(s.nbar_grid == std::vector<std::size_t>{500, 1500, 2500});
  CHECK(s.weightings == std::vector<WeightingKind>{WeightingKind::OKID});
  const auto k = default_config(ExperimentKind::KappaCondition);
  CHECK(k.weightings.size() == 3);
  CHECK(parse_experiment("kappa") == ExperimentKind::KappaCondition);
  CHECK_FALSE(parse_experiment("other").has_value());
}

TEST_CASE("config files") {
  std::istringstream ok(
      "experiment = sweetspot  # reset defaults\n"
      "\n"
      "nbar = 500, 1000:500:2000\n"
      "p = 2:4:10\n"
      "weightings = okid, cva\n"
      "input = colored\n"
      "a1 = 0.4\n"
      "trials = 5\n"
      "seed = 18446744073709551615\n"
      "timing = true\n");
  const auto cfg = parse_config(ok);
  CHECK(cfg.experiment == ExperimentKind::SweetSpot);
  CHECK(cfg.nbar_grid == std::vector<std::size_t>{500, 1000, 1500, 2000});
  CHECK(cfg.p_grid == std::vector<Eigen::Index>{2, 6, 10});
  CHECK(cfg.weightings.size() == 2);
  CHECK(std::get<ColoredAR2Input>(cfg.input).a1 == 0.4);
  CHECK(cfg.trials == 5);
  CHECK(cfg.base_seed == 18446744073709551615ull);
  CHECK(cfg.timing);

  auto fails_on = [](const std::string& text, const std::string& where) {
    std::istringstream is(text);
    try {
      parse_config(is);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find(where) != std::string::npos);
      return;
    }
    FAIL("expected a parse error");
  };
  fails_on("trials = 3\nexperiment = kappa\n", "line 2");
  fails_on("p = 2\nnonsense\n", "line 2");
  fails_on("p = 5:1:2\n", "line 1");
  fails_on("weightings = okid, foo\n", "line 1");
  fails_on("sigma_u = 2\ninput = colored\na1 = x\n", "line 3");
  fails_on("color = red\n", "unknown key");

  ExperimentConfig c = default_config(ExperimentKind::PoleError);
  CHECK_THROWS_AS(set_config_value(c, "gain", "2"), Error);
  CHECK_THROWS_AS(set_config_value(c, "trials", "many"), Error);
  CHECK_THROWS_AS(set_config_value(c, "timing", "maybe"), Error);
}

TEST_CASE("runs are deterministic and independent of the thread count") {
  auto cfg = small_config(ExperimentKind::PoleError);
  cfg.threads = 1;
  const auto one = csv_of(run_trials(cfg));
  cfg.threads = 3;
  const auto three = csv_of(run_trials(cfg));
  const auto again = csv_of(run_trials(cfg));
  CHECK(one == three);
  CHECK(three == again);
  cfg.base_seed = 12;
  CHECK(csv_of(run_trials(cfg)) != one);
}

TEST_CASE("row order and seeds") {
  auto cfg = small_config(ExperimentKind::PoleError);
  const auto rows = run_trials(cfg);
  const std::size_t per_point = 3 * 2;
  REQUIRE(rows.size() == 2 * 4 * per_point);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    CHECK(r.nbar == cfg.nbar_grid[k / (4 * per_point)]);
    CHECK(r.trial == static_cast<int>((k / per_point) % 4));
    CHECK(r.seed == cfg.base_seed + static_cast<std::uint64_t>(r.trial));
    CHECK_FALSE(r.failed);
    CHECK(r.wall_time == 0.0);
    CHECK(std::isfinite(r.pole_error));
    CHECK(r.kappa >= 0.0);
  }
  // both realizations of one (trial, weighting) share kappa
  CHECK(rows[0].kappa == rows[1].kappa);
  CHECK(rows[0].realization != rows[1].realization);
}

TEST_CASE("failures are flagged, not fatal") {
  auto cfg = small_config(ExperimentKind::SweetSpot);
  cfg.nbar_grid = {36};
  cfg.p_grid = {2, 30};
  cfg.trials = 2;
  const auto rows = run_trials(cfg);
  REQUIRE(rows.size() == 2 * 2 * 2);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.p == 30) {
      CHECK(r.failed);
      CHECK(r.error == "insufficient_data");
      CHECK(std::isnan(r.pole_error));
      ++failed;
    }
  }
  CHECK(failed == 4);

  const auto dir = std::filesystem::temp_directory_path() / "subid_bench_test";
  std::filesystem::create_directories(dir);
  cfg.output = (dir / "trials.csv").string();
  const auto res = run_experiment(cfg);
  CHECK(res.rows == 8);
  CHECK(res.failures == 4);
  CHECK(res.failure_rate == doctest::Approx(0.5));
  CHECK(res.failure_threshold_exceeded);
  cfg.max_failure_rate = 0.5;
  CHECK_FALSE(run_experiment(cfg).failure_threshold_exceeded);
}

TEST_CASE("timing column") {
  auto cfg = small_config(ExperimentKind::KappaCondition);
  cfg.trials = 1;
  cfg.timing = true;
  for (const auto& r : run_trials(cfg)) CHECK(r.wall_time >= 0.0);
}

TEST_CASE("summaries") {
  auto cfg = small_config(ExperimentKind::PoleError);
  const auto rows = run_trials(cfg);
  std::stringstream ss;
  write_trials_csv(ss, rows);
  const auto summary = summarize(ss);
  REQUIRE(summary.size() == 2 * 6);
  const auto& first = summary.front();
  CHECK(first.trials == 4);
  CHECK(first.failures == 0);
  std::vector<double> pe;
  for (const auto& r : rows)
    if (r.nbar == first.nbar && r.weighting == WeightingKind::OKID &&
        r.realization == RealizationKind::MoespType)
      pe.push_back(r.pole_error);
  CHECK(first.pole_error_median == doctest::Approx(quantile(pe, 0.5)).epsilon(1e-12));
  CHECK(first.pole_error_q25 <= first.pole_error_median);
  CHECK(first.pole_error_median <= first.pole_error_q75);

  std::ostringstream out;
  write_summary_csv(out, summary);
  CHECK(out.str().rfind("experiment,nbar,p,f,weighting,realization,trials,failures,", 0) == 0);

  const std::string head =
      "experiment,trial,seed,nbar,p,f,weighting,realization,pole_error,kappa,condition_met,failed,"
      "error,wall_time\n";
  std::istringstream one(head + "poles,0,1,500,7,7,cva,cva,0.1,0.2,1,0,,0\n");
  const auto s1 = summarize(one);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].pole_error_median == 0.1);
  CHECK(s1[0].condition_met_fraction == 1.0);

  std::istringstream flagged(head + "poles,0,1,500,7,7,cva,cva,nan,nan,0,1,rank_deficient,0\n" +
                             "poles,1,2,500,7,7,cva,cva,0.3,0.1,0,0,,0\n");
  const auto s2 = summarize(flagged);
  CHECK(s2[0].trials == 2);
  CHECK(s2[0].failures == 1);
  CHECK(s2[0].pole_error_median == 0.3);

  std::istringstream bad(head + "poles,0,1,500,7,7,cva,cva,0.1,0.2,1,0,,0\npoles,0,1,500,7\n");
  try {
    summarize(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  std::istringstream wrong_header("a,b\n");
  CHECK_THROWS_AS(summarize(wrong_header), Error);
}
