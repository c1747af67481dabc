#pragma once

#include "isac/hybrid.hpp"
#include "isac/solver.hpp"
#include "isac/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isac {

enum class ExperimentKind { SweepNonlinearity, SweepSnr, Convergence, BeamPattern };
enum class Scheme { ProposedKnown, ProposedUnknown, Mrt, Zf, Rbf };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(Scheme scheme);
// Accepts both the config spelling (sweep_nonlinearity) and the CLI spelling (sweep-nonlin).
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);
std::optional<Scheme> parse_scheme(std::string_view name);

struct BeamPatternOptions {
  double user_angle_deg = 106.0;
  double user_gain = 1.0;
};

/// Everything needed to run one experiment. Grid semantics depend on kind:
/// rho = |beta3'| / |beta1| for the nonlinearity sweep, SNR in dB for the SNR
/// sweep and the convergence study, and angles in degrees for the beam pattern.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SweepNonlinearity;
  SystemConfig system;
  double snr_db = 20.0;
  SolverOptions solver;
  DecomposeOptions decomposition;
  BeamPatternOptions beam;
  std::vector<double> grid;
  int realizations = 1000;
  std::vector<Scheme> schemes;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

/// Paper defaults for an experiment kind (array sizes, power, SNR, grid).
ExperimentSpec default_spec(ExperimentKind kind);

/// Reads a YAML experiment file. Keys absent from the file keep the defaults
/// of its experiment kind. `expected` fills in a missing `experiment` key and
/// must agree with it when present. Throws ConfigError with file:line context.
ExperimentSpec parse_config(const std::filesystem::path& path,
                            std::optional<ExperimentKind> expected = std::nullopt);
ExperimentSpec parse_config_string(const std::string& text,
                                   std::optional<ExperimentKind> expected = std::nullopt,
                                   const std::string& source_name = "<string>");

/// Resolved parameters as ordered key/value pairs. Worker count and output
/// directory are left out so results do not depend on them.
std::vector<std::pair<std::string, std::string>> describe(const ExperimentSpec& spec);

// Independent stream for realization `index`, derived from (seed, index) only.
std::mt19937_64 realization_rng(std::uint64_t seed, std::uint64_t index);

/// Runs task(i) for i in [0, count) on at most `workers` threads and returns
/// the results in index order. The first exception thrown by any task is
/// rethrown after all threads join.
template <typename T>
std::vector<T> parallel_map(int count, int workers, const std::function<T(int)>& task);

/// Hybrid design of one scheme for one channel realization, power-corrected
/// after decomposition under the PA model the scheme's transmitter assumes.
struct SchemeDesign {
  HybridPrecoder hybrid;
  CMatrix full_digital;
};

// Full-digital precoder of a scheme. `rbf_draw` is the unnormalized Gaussian
// matrix the RBF scheme power-matches; other schemes ignore it.
CMatrix full_digital_design(Scheme scheme, const ChannelRealization& channels,
                            const SystemConfig& config, const SolverOptions& solver,
                            const CMatrix& rbf_draw);

SchemeDesign hybrid_design(Scheme scheme, const CMatrix& full_digital,
                           const SystemConfig& config, const DecomposeOptions& options);

struct SweepRow {
  double grid_value = 0.0;
  Scheme scheme = Scheme::ProposedKnown;
  double mean_objective = 0.0;  // weighted ISAC rate, bits/s/Hz
  double stderr_objective = 0.0;
  double mean_comm_rate = 0.0;
  double mean_sense_mi = 0.0;
  double mean_radiated_power_mw = 0.0;  // under the true PA
};

struct SweepTable {
  std::string grid_name;  // "rho" or "snr_db"
  std::vector<SweepRow> rows;

  // Throws std::out_of_range when the pair is absent.
  const SweepRow& at(double grid_value, Scheme scheme) const;
};

struct ConvergenceRow {
  int iteration = 0;
  double snr_db = 0.0;
  double mean_objective = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  std::vector<double> trace(double snr_db) const;
};

struct BeamPatternRow {
  double angle_deg = 0.0;
  double proposed_linear_db = 0.0;
  double proposed_nonlinear_db = 0.0;
  double mrt_linear_db = 0.0;
  double mrt_nonlinear_db = 0.0;
  // Full-digital proposed precoder before decomposition, for reference.
  double proposed_fd_linear_db = 0.0;
  double proposed_fd_nonlinear_db = 0.0;
};

struct BeamPatternTable {
  std::vector<BeamPatternRow> rows;
  double hybrid_residual = 0.0;  // ||F - F_A F_D||_F^2 / ||F||_F^2 for the proposed design
};

SweepTable run_sweep_nonlinearity(const ExperimentSpec& spec);
SweepTable run_sweep_snr(const ExperimentSpec& spec);
ConvergenceTable run_convergence(const ExperimentSpec& spec);
BeamPatternTable run_beam_pattern(const ExperimentSpec& spec);

// 10 log10(x), floored at -200 dB.
double to_db_clamped(double x);

void write_csv(std::ostream& os, const ExperimentSpec& spec, const SweepTable& table);
void write_csv(std::ostream& os, const ExperimentSpec& spec, const ConvergenceTable& table);
void write_csv(std::ostream& os, const ExperimentSpec& spec, const BeamPatternTable& table);

struct RunOutputs {
  std::filesystem::path csv;
  std::filesystem::path manifest;
};

/// Runs the experiment named by spec.kind, writes <kind>.csv and run-manifest
/// into spec.output_dir (created if needed). I/O errors carry the path.
RunOutputs run_experiment(const ExperimentSpec& spec);

}  // namespace isac

#include "isac/detail/parallel.hpp"
