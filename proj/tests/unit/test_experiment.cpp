#include "isac/experiment.hpp"
#include "isac/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace isac {
namespace {

namespace fs = std::filesystem;

std::string config_error(const std::string& text) {
  try {
    parse_config_string(text, std::nullopt, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

ExperimentSpec tiny_sweep(ExperimentKind kind) {
  ExperimentSpec s = default_spec(kind);
  s.system.n_tx = 8;
  s.system.n_rf = 4;
  s.system.n_paths = 3;
  s.realizations = 3;
  s.solver.max_outer_iters = 5;
  s.solver.max_mo_iters = 40;
  s.grid = kind == ExperimentKind::SweepNonlinearity ? std::vector<double>{0.0, 0.1, 0.25}
                                                     : std::vector<double>{-20.0, 10.0};
  return s;
}

std::string csv_of(const ExperimentSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case ExperimentKind::SweepNonlinearity:
      write_csv(os, spec, run_sweep_nonlinearity(spec));
      break;
    case ExperimentKind::SweepSnr:
      write_csv(os, spec, run_sweep_snr(spec));
      break;
    case ExperimentKind::Convergence:
      write_csv(os, spec, run_convergence(spec));
      break;
    case ExperimentKind::BeamPattern:
      write_csv(os, spec, run_beam_pattern(spec));
      break;
  }
  return os.str();
}

TEST(ParseConfig, MinimalConfigGetsPaperDefaults) {
  const ExperimentSpec s = parse_config_string("experiment: sweep_nonlinearity\n");
  EXPECT_EQ(s.kind, ExperimentKind::SweepNonlinearity);
  EXPECT_EQ(s.system.n_tx, 64);
  EXPECT_EQ(s.system.n_rf, 16);
  EXPECT_EQ(s.system.n_users, 2);
  EXPECT_EQ(s.system.n_paths, 5);
  EXPECT_NEAR(mw_to_dbm(s.system.p_tot_mw), 13.0, 1e-12);
  EXPECT_NEAR(s.system.noise_sense, noise_from_snr(s.system.p_tot_mw, 20.0), 1e-15);
  EXPECT_EQ(s.system.beta1, Complex(1.14, -0.08));
  EXPECT_EQ(s.system.beta3, Complex(-0.08, 0.1));
  EXPECT_EQ(s.system.weight_comm, 0.5);
  EXPECT_EQ(s.realizations, 1000);
  EXPECT_EQ(s.grid.size(), 13u);
  EXPECT_NEAR(s.grid.back(), 0.30, 1e-12);
  EXPECT_EQ(s.schemes.size(), 5u);
}

TEST(ParseConfig, PerKindDefaults) {
  const ExperimentSpec snr = parse_config_string("experiment: sweep_snr\n");
  EXPECT_EQ(snr.grid.front(), -20.0);
  EXPECT_EQ(snr.grid.back(), 25.0);
  EXPECT_EQ(snr.grid.size(), 10u);
  const ExperimentSpec conv = parse_config_string("experiment: convergence\n");
  EXPECT_EQ(conv.system.n_tx, 16);
  EXPECT_EQ(conv.system.n_paths, 3);
  EXPECT_EQ(conv.grid, (std::vector<double>{0.0, 10.0, 20.0}));
  const ExperimentSpec beam = parse_config_string("experiment: beam_pattern\n");
  EXPECT_EQ(beam.system.n_users, 1);
  EXPECT_NEAR(mw_to_dbm(beam.system.p_tot_mw), 20.0, 1e-12);
  EXPECT_EQ(beam.snr_db, 25.0);
  EXPECT_EQ(beam.grid.size(), 721u);
  EXPECT_EQ(beam.beam.user_angle_deg, 106.0);
}

TEST(ParseConfig, FullConfigIsApplied) {
  const ExperimentSpec s = parse_config_string(R"(experiment: sweep-snr
seed: 99
realizations: 7
workers: 2
output_dir: results
grid: [0, 5]
schemes: [mrt, zf]
system:
  n_tx: 16
  n_rf: 4
  n_users: 3
  p_tot_dbm: 20
  snr_db: 5
  beta1: 1.0
  beta3: [0.0, -0.05]
  target_angle_deg: 45
solver:
  max_outer_iters: 10
  mo_grad_tol: 1.0e-4
decomposition:
  max_iters: 7
)");
  EXPECT_EQ(s.kind, ExperimentKind::SweepSnr);
  EXPECT_EQ(s.seed, 99u);
  EXPECT_EQ(s.system.rng_seed, 99u);
  EXPECT_EQ(s.realizations, 7);
  EXPECT_EQ(s.workers, 2);
  EXPECT_EQ(s.output_dir, fs::path("results"));
  EXPECT_EQ(s.schemes, (std::vector<Scheme>{Scheme::Mrt, Scheme::Zf}));
  EXPECT_EQ(s.system.noise_user.size(), 3u);
  EXPECT_NEAR(s.system.p_tot_mw, 100.0, 1e-12);
  EXPECT_NEAR(s.system.noise_user[2], 100.0 / std::pow(10.0, 0.5), 1e-12);
  EXPECT_EQ(s.system.beta3, Complex(0.0, -0.05));
  EXPECT_EQ(s.solver.max_outer_iters, 10);
  ASSERT_TRUE(s.solver.mo_grad_tol.has_value());
  EXPECT_EQ(*s.solver.mo_grad_tol, 1e-4);
  EXPECT_EQ(s.decomposition.max_iters, 7);
}

TEST(ParseConfig, RejectsWeightsNotSummingToOne) {
  const auto msg = config_error(
      "experiment: sweep_snr\nsystem:\n  weight_comm: 0.7\n  weight_sense: 0.4\n");
  EXPECT_NE(msg.find("weight"), std::string::npos) << msg;
}

TEST(ParseConfig, RejectsIndivisibleArray) {
  const auto msg = config_error("experiment: sweep_snr\nsystem:\n  n_tx: 10\n  n_rf: 4\n");
  EXPECT_NE(msg.find("divisible"), std::string::npos) << msg;
}

TEST(ParseConfig, UnknownKeysCarryLineNumbers) {
  const auto top = config_error("experiment: sweep_snr\nbogus: 1\n");
  EXPECT_NE(top.find("cfg.yaml:2:"), std::string::npos) << top;
  EXPECT_NE(top.find("bogus"), std::string::npos) << top;
  const auto nested = config_error("experiment: sweep_snr\nsystem:\n  n_tx: 16\n  n_antennas: 4\n");
  EXPECT_NE(nested.find("cfg.yaml:4:"), std::string::npos) << nested;
  EXPECT_NE(nested.find("system"), std::string::npos) << nested;
}

TEST(ParseConfig, MalformedInputCarriesLineNumbers) {
  const auto msg = config_error("experiment: sweep_snr\nsystem:\n  n_tx: [1, 2\n");
  EXPECT_NE(msg.find("cfg.yaml:"), std::string::npos) << msg;
  const auto bad_value = config_error("experiment: sweep_snr\nrealizations: many\n");
  EXPECT_NE(bad_value.find("cfg.yaml:2:"), std::string::npos) << bad_value;
}

TEST(ParseConfig, SpecInvariants) {
  EXPECT_FALSE(config_error("experiment: sweep_snr\ngrid: [5, 0]\n").empty());
  EXPECT_FALSE(config_error("experiment: sweep_snr\ngrid: []\n").empty());
  EXPECT_FALSE(config_error("experiment: sweep_snr\nschemes: []\n").empty());
  EXPECT_FALSE(config_error("experiment: sweep_snr\nschemes: [wmmse]\n").empty());
  EXPECT_FALSE(config_error("experiment: sweep_snr\nrealizations: 0\n").empty());
  EXPECT_FALSE(config_error("experiment: warp_drive\n").empty());
  EXPECT_FALSE(config_error("seed: 3\n").empty());
  EXPECT_FALSE(config_error("experiment: beam_pattern\nschemes: [zf]\n").empty());
}

TEST(ParseConfig, ExpectedKindFillsOrMustMatch) {
  const auto s = parse_config_string("seed: 4\n", ExperimentKind::Convergence);
  EXPECT_EQ(s.kind, ExperimentKind::Convergence);
  EXPECT_THROW(parse_config_string("experiment: sweep_snr\n", ExperimentKind::Convergence),
               ConfigError);
  EXPECT_EQ(parse_config_string("", ExperimentKind::BeamPattern).kind,
            ExperimentKind::BeamPattern);
}

TEST(ParseConfig, MissingFileNamesPath) {
  try {
    parse_config("/nonexistent/dir/exp.yaml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/exp.yaml"), std::string::npos);
  }
}

TEST(Names, RoundTrip) {
  for (auto k : {ExperimentKind::SweepNonlinearity, ExperimentKind::SweepSnr,
                 ExperimentKind::Convergence, ExperimentKind::BeamPattern})
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_EQ(parse_experiment_kind("sweep-nonlin"), ExperimentKind::SweepNonlinearity);
  for (auto s : {Scheme::ProposedKnown, Scheme::ProposedUnknown, Scheme::Mrt, Scheme::Zf,
                 Scheme::Rbf})
    EXPECT_EQ(parse_scheme(to_string(s)), s);
}

TEST(RealizationRng, DependsOnlyOnSeedAndIndex) {
  auto a = realization_rng(5, 3);
  auto b = realization_rng(5, 3);
  auto c = realization_rng(5, 4);
  auto d = realization_rng(6, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(ParallelMap, OrderedResultsAndErrorPropagation) {
  const std::function<int(int)> sq = [](int i) { return i * i; };
  for (int w : {1, 3, 16}) {
    const auto out = parallel_map<int>(10, w, sq);
    ASSERT_EQ(out.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  }
  const std::function<int(int)> boom = [](int i) -> int {
    if (i == 4) throw Error("task 4 failed");
    return i;
  };
  EXPECT_THROW(parallel_map<int>(8, 3, boom), Error);
  EXPECT_TRUE(parallel_map<int>(0, 2, sq).empty());
}

TEST(SweepNonlinearity, RowCountAndPairedZeroPoint) {
  const ExperimentSpec s = tiny_sweep(ExperimentKind::SweepNonlinearity);
  const SweepTable t = run_sweep_nonlinearity(s);
  EXPECT_EQ(t.rows.size(), s.grid.size() * s.schemes.size());
  // At rho = 0 both proposed variants solve the same problem.
  EXPECT_NEAR(t.at(0.0, Scheme::ProposedKnown).mean_objective,
              t.at(0.0, Scheme::ProposedUnknown).mean_objective, 1e-9);
  // The unknown-PA transmitter is power-corrected only under its linear belief.
  EXPECT_NEAR(t.at(0.0, Scheme::ProposedUnknown).mean_radiated_power_mw, s.system.p_tot_mw, 1e-6);
  EXPECT_NEAR(t.at(0.25, Scheme::Mrt).mean_radiated_power_mw, s.system.p_tot_mw, 1e-6);
  EXPECT_GT(std::abs(t.at(0.25, Scheme::ProposedUnknown).mean_radiated_power_mw -
                     s.system.p_tot_mw),
            1e-3);
  EXPECT_THROW(t.at(0.5, Scheme::Mrt), std::out_of_range);
}

TEST(SweepSnr, NoiseDominatedAtLowSnr) {
  const ExperimentSpec s = tiny_sweep(ExperimentKind::SweepSnr);
  const SweepTable t = run_sweep_snr(s);
  EXPECT_EQ(t.rows.size(), s.grid.size() * s.schemes.size());
  double lo_max = 0.0;
  for (Scheme sc : s.schemes) {
    lo_max = std::max(lo_max, t.at(-20.0, sc).mean_objective);
    EXPECT_LT(t.at(-20.0, sc).mean_objective, t.at(10.0, sc).mean_objective);
  }
  EXPECT_LT(lo_max, 0.5);
}

TEST(Determinism, BitwiseIdenticalAcrossRerunsAndWorkerCounts) {
  ExperimentSpec s = tiny_sweep(ExperimentKind::SweepNonlinearity);
  s.realizations = 4;
  s.workers = 1;
  const std::string one = csv_of(s);
  EXPECT_EQ(one, csv_of(s));
  s.workers = 3;
  EXPECT_EQ(one, csv_of(s));
  s.seed = 2;
  EXPECT_NE(one, csv_of(s));
}

TEST(CsvFormat, ConfigCommentAndHeader) {
  const ExperimentSpec s = tiny_sweep(ExperimentKind::SweepSnr);
  std::istringstream in(csv_of(s));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config:", 0), 0u);
  EXPECT_NE(line.find("seed=1;"), std::string::npos);
  EXPECT_NE(line.find("system.n_tx=8;"), std::string::npos);
  EXPECT_EQ(line.find("workers"), std::string::npos);
  std::getline(in, line);
  EXPECT_EQ(line,
            "snr_db,scheme,mean_sum_rate,stderr_sum_rate,mean_comm_rate,mean_sense_mi,"
            "mean_radiated_power_mw");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 10);
}

TEST(Convergence, TracesAveragedAndNonDecreasing) {
  ExperimentSpec s = default_spec(ExperimentKind::Convergence);
  s.system.n_tx = 8;
  s.system.n_rf = 4;
  s.realizations = 3;
  const ConvergenceTable t = run_convergence(s);
  for (double snr : s.grid) {
    const auto tr = t.trace(snr);
    ASSERT_FALSE(tr.empty());
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i], tr[i - 1]);
  }
  std::ostringstream os;
  write_csv(os, s, t);
  EXPECT_NE(os.str().find("\niteration,snr_db,mean_objective\n"), std::string::npos);
}

TEST(BeamPattern, MrtPeaksAtUserAndFloorsAreClamped) {
  ExperimentSpec s = default_spec(ExperimentKind::BeamPattern);
  const BeamPatternTable t = run_beam_pattern(s);
  ASSERT_EQ(t.rows.size(), 721u);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].mrt_linear_db > t.rows[peak].mrt_linear_db) peak = i;
    EXPECT_GE(t.rows[i].proposed_nonlinear_db, -200.0);
  }
  EXPECT_NEAR(t.rows[peak].angle_deg, 106.0, 0.25);
  EXPECT_EQ(to_db_clamped(0.0), -200.0);
  EXPECT_EQ(to_db_clamped(1e-40), -200.0);
  EXPECT_NEAR(to_db_clamped(100.0), 20.0, 1e-12);
}

TEST(RunExperiment, WritesCsvAndManifest) {
  ExperimentSpec s = tiny_sweep(ExperimentKind::SweepSnr);
  s.realizations = 1;
  s.output_dir = fs::temp_directory_path() / "isac_run_experiment_test";
  fs::remove_all(s.output_dir);
  const RunOutputs out = run_experiment(s);
  EXPECT_EQ(out.csv.filename(), "sweep_snr.csv");
  ASSERT_TRUE(fs::exists(out.csv));
  ASSERT_TRUE(fs::exists(out.manifest));
  std::ifstream m(out.manifest);
  std::stringstream buf;
  buf << m.rdbuf();
  EXPECT_NE(buf.str().find("experiment = sweep_snr"), std::string::npos);
  EXPECT_NE(buf.str().find("csv_rows = 10"), std::string::npos);
  fs::remove_all(s.output_dir);
}

TEST(RunExperiment, UnwritableDirectoryNamesPath) {
  ExperimentSpec s = tiny_sweep(ExperimentKind::SweepSnr);
  s.realizations = 1;
  const fs::path blocker = fs::temp_directory_path() / "isac_blocker_file";
  std::ofstream(blocker) << "x";
  s.output_dir = blocker / "sub";
  try {
    run_experiment(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(blocker.string()), std::string::npos) << e.what();
  }
  fs::remove(blocker);
}

}  // namespace
}  // namespace isac
