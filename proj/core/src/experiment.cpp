#include "isac/experiment.hpp"

#include "isac/baselines.hpp"
#include "isac/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace isac {

namespace {

struct SchemeMetrics {
  double objective = 0.0;
  double comm_rate = 0.0;
  double sense_mi = 0.0;
  double power_mw = 0.0;
};

// Metrics for every (grid point, scheme) pair of one realization, grid-major.
using RealizationRecord = std::vector<SchemeMetrics>;

SchemeMetrics measure(const ChannelRealization& ch, const CMatrix& F, const SystemConfig& c) {
  const MetricsReport m = evaluate_metrics(ch, F, c);
  return {m.weighted_objective, m.sum_rate(), m.sense_mi, m.radiated_power};
}

SystemConfig base_config(const ExperimentSpec& spec) {
  SystemConfig c = spec.system;
  c.set_snr_db(spec.snr_db);
  c.rng_seed = spec.seed;
  return c;
}

SweepTable reduce_sweep(const ExperimentSpec& spec, const std::vector<RealizationRecord>& records,
                        std::string grid_name) {
  SweepTable table;
  table.grid_name = std::move(grid_name);
  const std::size_t n_schemes = spec.schemes.size();
  const double n = static_cast<double>(records.size());
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    for (std::size_t s = 0; s < n_schemes; ++s) {
      const std::size_t slot = g * n_schemes + s;
      SweepRow row;
      row.grid_value = spec.grid[g];
      row.scheme = spec.schemes[s];
      // Summation in realization order keeps the result independent of the worker count.
      for (const auto& rec : records) {
        row.mean_objective += rec[slot].objective;
        row.mean_comm_rate += rec[slot].comm_rate;
        row.mean_sense_mi += rec[slot].sense_mi;
        row.mean_radiated_power_mw += rec[slot].power_mw;
      }
      row.mean_objective /= n;
      row.mean_comm_rate /= n;
      row.mean_sense_mi /= n;
      row.mean_radiated_power_mw /= n;
      if (records.size() > 1) {
        double ss = 0.0;
        for (const auto& rec : records) {
          const double d = rec[slot].objective - row.mean_objective;
          ss += d * d;
        }
        row.stderr_objective = std::sqrt(ss / (n - 1.0) / n);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace

std::mt19937_64 realization_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

CMatrix full_digital_design(Scheme scheme, const ChannelRealization& channels,
                            const SystemConfig& config, const SolverOptions& solver,
                            const CMatrix& rbf_draw) {
  switch (scheme) {
    case Scheme::ProposedKnown:
      return proposed_known_pa(channels, config, solver).state.full_digital;
    case Scheme::ProposedUnknown:
      return proposed_unknown_pa(channels, config, solver).state.full_digital;
    case Scheme::Mrt:
      return mrt_precoder(channels, config);
    case Scheme::Zf:
      return zf_precoder(channels, config);
    case Scheme::Rbf:
      return power_match(rbf_draw, config.beta1, config.beta3, config.p_tot_mw);
  }
  throw Error("full_digital_design: unknown scheme");
}

SchemeDesign hybrid_design(Scheme scheme, const CMatrix& full_digital, const SystemConfig& config,
                           const DecomposeOptions& options) {
  SchemeDesign out;
  out.full_digital = full_digital;
  out.hybrid = decompose(full_digital, config.n_rf, options);
  // The unknown-PA transmitter can only correct power under the linear model it believes in.
  const Complex beta3 = scheme == Scheme::ProposedUnknown ? Complex(0.0, 0.0) : config.beta3;
  match_hybrid_power(out.hybrid, config.beta1, beta3, config.p_tot_mw);
  return out;
}

const SweepRow& SweepTable::at(double grid_value, Scheme scheme) const {
  for (const auto& r : rows)
    if (r.scheme == scheme && std::abs(r.grid_value - grid_value) <= 1e-12) return r;
  throw std::out_of_range("SweepTable::at: no row for the requested grid value and scheme");
}

std::vector<double> ConvergenceTable::trace(double snr_db) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.snr_db == snr_db) out.push_back(r.mean_objective);
  return out;
}

SweepTable run_sweep_nonlinearity(const ExperimentSpec& spec) {
  spec.validate();
  const SystemConfig base = base_config(spec);
  const double b1 = std::abs(base.beta1);
  const Complex b3_dir = base.beta3 / std::abs(base.beta3);

  auto task = [&](int r) -> RealizationRecord {
    auto rng = realization_rng(spec.seed, static_cast<std::uint64_t>(r));
    const ChannelRealization ch = draw_channels(base, rng);
    const CMatrix rbf_draw = complex_normal_matrix(base.n_tx, base.n_users, rng);
    // The unknown-PA design never sees beta3, so one solve serves the whole grid.
    std::optional<CMatrix> unknown_fd;
    RealizationRecord rec;
    rec.reserve(spec.grid.size() * spec.schemes.size());
    for (double rho : spec.grid) {
      SystemConfig c = base;
      c.beta3 = rho * b1 * b3_dir;
      for (Scheme s : spec.schemes) {
        CMatrix fd;
        if (s == Scheme::ProposedUnknown) {
          if (!unknown_fd) unknown_fd = full_digital_design(s, ch, c, spec.solver, rbf_draw);
          fd = *unknown_fd;
        } else {
          fd = full_digital_design(s, ch, c, spec.solver, rbf_draw);
        }
        const SchemeDesign d = hybrid_design(s, fd, c, spec.decomposition);
        rec.push_back(measure(ch, d.hybrid.combined(), c));
      }
    }
    return rec;
  };
  const auto records =
      parallel_map<RealizationRecord>(spec.realizations, spec.workers, task);
  return reduce_sweep(spec, records, "rho");
}

SweepTable run_sweep_snr(const ExperimentSpec& spec) {
  spec.validate();
  const SystemConfig base = base_config(spec);

  auto task = [&](int r) -> RealizationRecord {
    auto rng = realization_rng(spec.seed, static_cast<std::uint64_t>(r));
    const ChannelRealization ch = draw_channels(base, rng);
    const CMatrix rbf_draw = complex_normal_matrix(base.n_tx, base.n_users, rng);
    RealizationRecord rec;
    rec.reserve(spec.grid.size() * spec.schemes.size());
    for (double snr : spec.grid) {
      SystemConfig c = base;
      c.set_snr_db(snr);
      for (Scheme s : spec.schemes) {
        const CMatrix fd = full_digital_design(s, ch, c, spec.solver, rbf_draw);
        const SchemeDesign d = hybrid_design(s, fd, c, spec.decomposition);
        rec.push_back(measure(ch, d.hybrid.combined(), c));
      }
    }
    return rec;
  };
  const auto records =
      parallel_map<RealizationRecord>(spec.realizations, spec.workers, task);
  return reduce_sweep(spec, records, "snr_db");
}

ConvergenceTable run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  const SystemConfig base = base_config(spec);
  const Scheme scheme = spec.schemes.front();

  using Traces = std::vector<std::vector<double>>;  // one per SNR grid point
  auto task = [&](int r) -> Traces {
    auto rng = realization_rng(spec.seed, static_cast<std::uint64_t>(r));
    const ChannelRealization ch = draw_channels(base, rng);
    Traces out;
    for (double snr : spec.grid) {
      SystemConfig c = base;
      c.set_snr_db(snr);
      const PenalizedResult res = scheme == Scheme::ProposedKnown
                               ? proposed_known_pa(ch, c, spec.solver)
                               : proposed_unknown_pa(ch, c, spec.solver);
      out.push_back(res.mo_trace);
    }
    return out;
  };
  const auto records = parallel_map<Traces>(spec.realizations, spec.workers, task);

  ConvergenceTable table;
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    std::size_t len = 0;
    for (const auto& rec : records) len = std::max(len, rec[g].size());
    std::vector<double> mean(len, 0.0);
    for (const auto& rec : records) {
      const auto& t = rec[g];
      for (std::size_t i = 0; i < len; ++i) mean[i] += t.empty() ? 0.0 : t[std::min(i, t.size() - 1)];
    }
    for (std::size_t i = 0; i < len; ++i) {
      table.rows.push_back({static_cast<int>(i), spec.grid[g],
                            mean[i] / static_cast<double>(records.size())});
    }
  }
  return table;
}

double to_db_clamped(double x) {
  if (!(x > 0.0)) return -200.0;
  return std::max(10.0 * std::log10(x), -200.0);
}

BeamPatternTable run_beam_pattern(const ExperimentSpec& spec) {
  spec.validate();
  const SystemConfig c = base_config(spec);
  RMatrix angles(1, 1);
  angles(0, 0) = deg_to_rad(spec.beam.user_angle_deg);
  CMatrix gains(1, 1);
  gains(0, 0) = Complex(spec.beam.user_gain, 0.0);
  const ChannelRealization ch = make_channels(c, angles, gains);

  const CMatrix unused;
  const CMatrix known_fd = full_digital_design(Scheme::ProposedKnown, ch, c, spec.solver, unused);
  const SchemeDesign known = hybrid_design(Scheme::ProposedKnown, known_fd, c, spec.decomposition);
  const CMatrix mrt_fd = full_digital_design(Scheme::Mrt, ch, c, spec.solver, unused);
  const SchemeDesign mrt = hybrid_design(Scheme::Mrt, mrt_fd, c, spec.decomposition);

  struct Pattern {
    CMatrix BF;
    CMatrix Ce;
  };
  auto pattern_of = [&](const CMatrix& F) {
    const DistortionModel dm = distortion_model(F, c.beta1, c.beta3);
    return Pattern{dm.bussgang_gain * F, dm.distortion_cov};
  };
  const Pattern pk = pattern_of(known.hybrid.combined());
  const Pattern pm = pattern_of(mrt.hybrid.combined());
  const Pattern pf = pattern_of(known_fd);
  auto lin = [](const Pattern& p, const CVector& a) { return (a.adjoint() * p.BF).squaredNorm(); };
  auto nl = [](const Pattern& p, const CVector& a) {
    return (a.adjoint() * p.Ce * a)(0, 0).real();
  };

  BeamPatternTable table;
  table.hybrid_residual = known.hybrid.residual_trace.back() / known_fd.squaredNorm();
  for (double deg : spec.grid) {
    const CVector a = steering_vector(deg_to_rad(deg), c.n_tx);
    BeamPatternRow row;
    row.angle_deg = deg;
    row.proposed_linear_db = to_db_clamped(lin(pk, a));
    row.proposed_nonlinear_db = to_db_clamped(nl(pk, a));
    row.mrt_linear_db = to_db_clamped(lin(pm, a));
    row.mrt_nonlinear_db = to_db_clamped(nl(pm, a));
    row.proposed_fd_linear_db = to_db_clamped(lin(pf, a));
    row.proposed_fd_nonlinear_db = to_db_clamped(nl(pf, a));
    table.rows.push_back(row);
  }
  return table;
}

RunOutputs run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) {
    throw Error("cannot create output directory '" + spec.output_dir.string() +
                "': " + ec.message());
  }
  RunOutputs out;
  out.csv = spec.output_dir / (std::string(to_string(spec.kind)) + ".csv");
  out.manifest = spec.output_dir / "run-manifest";

  const auto start = std::chrono::steady_clock::now();
  std::ostringstream csv;
  std::size_t rows = 0;
  switch (spec.kind) {
    case ExperimentKind::SweepNonlinearity: {
      const auto t = run_sweep_nonlinearity(spec);
      write_csv(csv, spec, t);
      rows = t.rows.size();
      break;
    }
    case ExperimentKind::SweepSnr: {
      const auto t = run_sweep_snr(spec);
      write_csv(csv, spec, t);
      rows = t.rows.size();
      break;
    }
    case ExperimentKind::Convergence: {
      const auto t = run_convergence(spec);
      write_csv(csv, spec, t);
      rows = t.rows.size();
      break;
    }
    case ExperimentKind::BeamPattern: {
      const auto t = run_beam_pattern(spec);
      write_csv(csv, spec, t);
      rows = t.rows.size();
      break;
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto write_file = [](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path.string() + "' for writing");
    f << text;
    f.close();
    if (!f) throw Error("failed writing '" + path.string() + "'");
  };
  write_file(out.csv, csv.str());

  std::ostringstream manifest;
  for (const auto& [k, v] : describe(spec)) manifest << k << " = " << v << "\n";
  manifest << "workers = " << spec.workers << "\n";
  manifest << "output_dir = " << spec.output_dir.string() << "\n";
  manifest << "csv = " << out.csv.filename().string() << "\n";
  manifest << "csv_rows = " << rows << "\n";
  manifest << "elapsed_seconds = " << elapsed << "\n";
  write_file(out.manifest, manifest.str());
  return out;
}

}  // namespace isac
