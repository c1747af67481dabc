#pragma once

#include "isac/solver.hpp"
#include "isac/types.hpp"

#include <random>

namespace isac {

// All baselines are scaled so the true (nonlinear) PA output power equals P_tot.

CMatrix mrt_precoder(const ChannelRealization& channels, const SystemConfig& config);

// Throws RankDeficientChannel when H^H H is numerically singular.
CMatrix zf_precoder(const ChannelRealization& channels, const SystemConfig& config);

CMatrix rbf_precoder(const SystemConfig& config, std::mt19937_64& rng);

/// Distortion-aware design: solve_penalized under the true PA model.
PenalizedResult proposed_known_pa(const ChannelRealization& channels, const SystemConfig& config,
                           const SolverOptions& options);

/// Design that assumes an ideal amplifier (beta3 = 0, |beta1|^2 ||F||^2 = P_tot).
/// The returned precoder is meant to be evaluated under the true PA and is not
/// re-normalized for it.
PenalizedResult proposed_unknown_pa(const ChannelRealization& channels, const SystemConfig& config,
                             const SolverOptions& options);

// The PA model a design assumes: config with beta3 zeroed.
SystemConfig linear_pa_view(const SystemConfig& config);

}  // namespace isac
