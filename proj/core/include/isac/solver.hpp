#pragma once

#include "isac/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isac {

/// Tuning knobs for the alternating solver. Unset optionals resolve to
/// dimension-dependent defaults: mo_grad_tol = 1e-6 sqrt(N_t K) and an initial
/// Armijo step of 1 / ||grad||_F.
struct SolverOptions {
  int max_outer_iters = 50;
  double outer_tol = 1e-5;
  int max_mo_iters = 200;
  std::optional<double> mo_grad_tol;
  std::optional<double> armijo_init_step;
  double armijo_contraction = 0.5;
  double armijo_slope = 1e-4;
  int armijo_max_backtracks = 30;
  double penalty_growth = 5.0;
  double moment_residual_tol = 1e-3;
  int max_growth_rounds = 4;
  int max_budget_rescues = 20;

  void validate() const;
  double grad_tol(int n_tx, int n_users) const;
};

/// Per-user and sensing power terms of the penalized objective at one F.
struct ObjectiveTerms {
  std::vector<double> signal;        // S_k
  std::vector<double> interference;  // I_k
  std::vector<double> distortion;    // D_k
  double sense_signal = 0.0;         // S_s
  double sense_distortion = 0.0;     // D_s
  double isac = 0.0;                 // weighted rate + sensing MI, bits
  double penalty_u = 0.0;            // ||U - |C|^2||_F^2
  double penalty_v = 0.0;            // ||V - U (.) C||_F^2
  double penalized = 0.0;            // isac + lambda1 * penalty_u + lambda2 * penalty_v
};

ObjectiveTerms objective_terms(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                               const ChannelRealization& channels, const SystemConfig& config);

inline double penalized_objective(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                                  const ChannelRealization& channels,
                                  const SystemConfig& config) {
  return objective_terms(F, U, V, channels, config).penalized;
}

/// Wirtinger gradient d/dF* of the penalized objective. Penalty weights are
/// read from config.penalty1 / config.penalty2.
CMatrix euclidean_gradient(const CMatrix& F, const CMatrix& U, const CMatrix& V,
                           const ChannelRealization& channels, const SystemConfig& config);

// Projection onto the tangent space {G : Re<G, F>_F = 0} of the sphere through F.
CMatrix riemannian_gradient(const CMatrix& egrad, const CMatrix& F);

// sqrt(c1) (F + step) / ||F + step||_F.
CMatrix retract(const CMatrix& F, const CMatrix& step, double c1);

/// Squared Frobenius norm the moment-form power constraint leaves for F.
double frobenius_budget(const CMatrix& U, const CMatrix& V, const SystemConfig& config);

enum class MoStop { GradientNorm, ObjectiveStalled, MaxIterations, LineSearchFailed };

struct MoResult {
  CMatrix point;
  std::vector<double> objective_trace;
  double grad_norm = 0.0;
  int iterations = 0;
  MoStop stop = MoStop::MaxIterations;
};

/// Riemannian conjugate gradient (Fletcher-Reeves, Armijo backtracking) for
/// the F-subproblem with U and V held fixed. The iterate stays on the sphere
/// ||F||_F^2 = frobenius_budget(U, V).
MoResult optimize_precoder(const CMatrix& F_init, const CMatrix& U, const CMatrix& V,
                    const ChannelRealization& channels, const SystemConfig& config,
                    const SolverOptions& options);

struct AuxUpdate {
  CMatrix value;
  double dual = 0.0;        // mu for the U update, unused for V
  bool degenerate = false;  // PA coefficients leave the trace target undefined
};

/// KKT closed form for U with F, V fixed, enforcing Tr(U) = c2.
AuxUpdate update_u(const CMatrix& F, const CMatrix& V, const SystemConfig& config);
/// Projection of U (.) C onto the hyperplane Tr(V) = c3.
AuxUpdate update_v(const CMatrix& F, const CMatrix& U, const SystemConfig& config);

struct TraceRecord {
  int round = 0;
  int iteration = 0;
  double penalized_objective_value = 0.0;
  double isac_objective = 0.0;
  double grad_norm = 0.0;
  double power_residual = 0.0;
  double moment_residual_u = 0.0;
  double moment_residual_v = 0.0;
};

struct PenalizedResult {
  PrecoderState state;  // full_digital, aux_u, aux_v populated
  std::vector<TraceRecord> trace;
  // Precoder-subproblem objective values, one per accepted MO step, concatenated across AO
  // iterations at the initial penalty weights.
  std::vector<double> mo_trace;
  // False if any precoder-subproblem run, in any round, produced a decreasing step.
  bool mo_monotone = true;
  double final_penalty1 = 0.0;
  double final_penalty2 = 0.0;
  double power_residual = 0.0;  // |P(F) - P_tot| / P_tot
  double manifold_residual = 0.0;
  int budget_rescues = 0;
  int growth_rounds = 0;
  bool converged = false;
};

/// Power-matched matched-filter start, h_k / ||h_k|| scaled to P_tot under the
/// true PA model.
CMatrix initial_precoder(const ChannelRealization& channels, const SystemConfig& config);

/// Alternating optimization over (F, U, V) with penalty continuation.
PenalizedResult solve_penalized(const ChannelRealization& channels, const SystemConfig& config,
                  const SolverOptions& options, std::optional<CMatrix> F_init = std::nullopt);

}  // namespace isac
