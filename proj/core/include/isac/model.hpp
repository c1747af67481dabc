#pragma once

#include "isac/types.hpp"

#include <random>

namespace isac {

/// ULA field response toward `angle` (radians) with half-wavelength spacing,
/// normalized to unit Euclidean norm.
CVector steering_vector(double angle, int n_tx);

/// Draws one multipath realization: AoDs uniform on (0, pi), path gains
/// CN(0, 1), h_k = sqrt(N_t / L) * sum_l rho_kl a(theta_kl).
ChannelRealization draw_channels(const SystemConfig& config, std::mt19937_64& rng);

// Deterministic construction from explicit K x L path angles and gains.
ChannelRealization make_channels(const SystemConfig& config, const RMatrix& path_angles,
                                 const CMatrix& path_gains);

// Unit-variance circularly-symmetric complex Gaussian sample.
Complex complex_normal(std::mt19937_64& rng);
CMatrix complex_normal_matrix(int rows, int cols, std::mt19937_64& rng);

/// Diagonal Bussgang gain of the cubic PA model for input covariance F F^H:
/// B = beta1 I + 2 beta3 diag(F F^H).
DiagMatrix bussgang_gain(const CMatrix& F, Complex beta1, Complex beta3);

/// Covariance of the PA distortion term, 2|beta3|^2 C (.) |C|^2 with C = F F^H.
CMatrix distortion_covariance(const CMatrix& F, Complex beta3);

DistortionModel distortion_model(const CMatrix& F, Complex beta1, Complex beta3);

// |C|^2 entrywise, the exact value of the first auxiliary moment.
CMatrix exact_moment_u(const CMatrix& tx_cov);
// |C|^2 (.) C, the exact value of the second auxiliary moment.
CMatrix exact_moment_v(const CMatrix& tx_cov);

struct RadiatedPower {
  double total = 0.0;    // E||phi(F s)||^2, mW
  double linear = 0.0;   // |beta1|^2 Tr(C)
  double trace_u = 0.0;  // sum_i [C]_ii^2
  double trace_v = 0.0;  // sum_i [C]_ii^3
};

/// Exact mean output power of the cubic PA array for Gaussian symbols.
RadiatedPower radiated_power(const CMatrix& F, Complex beta1, Complex beta3);

// Left side of the moment-form power constraint for given (F, U, V).
double moment_power(const CMatrix& F, const CMatrix& U, const CMatrix& V, Complex beta1,
                    Complex beta3);

/// Returns c > 0 such that radiated_power(c F) == p_tot within `rel_tol`.
/// The cubic power law is strictly increasing in c for every (beta1, beta3),
/// so bisection on a bracketing interval is exact.
double power_matching_scale(const CMatrix& F, Complex beta1, Complex beta3, double p_tot,
                            double rel_tol = 1e-12);
CMatrix power_match(const CMatrix& F, Complex beta1, Complex beta3, double p_tot);

double user_sindr(const CVector& h, const CMatrix& F, int k, const DistortionModel& dm,
                  double noise);
double sensing_sndr(const CVector& a_s, Complex alpha_s, const CMatrix& F,
                    const DistortionModel& dm, double noise);

MetricsReport evaluate_metrics(const ChannelRealization& channels, const CMatrix& F,
                               const SystemConfig& config);
// Uses F_A F_D when the state carries a hybrid pair, else the full-digital F.
MetricsReport evaluate_metrics(const ChannelRealization& channels, const PrecoderState& state,
                               const SystemConfig& config);

}  // namespace isac
