#pragma once

#include "isac/types.hpp"

#include <vector>

namespace isac {

struct DecomposeOptions {
  int max_iters = 100;
  double rel_tol = 1e-8;
};

struct HybridPrecoder {
  CMatrix analog;   // N_t x N_RF, block-diagonal, unit-modulus support
  CMatrix digital;  // N_RF x K
  // ||F - F_A F_D||_F^2 after the initial digital fit and after each sweep.
  std::vector<double> residual_trace;

  CMatrix combined() const { return analog * digital; }
};

/// Partially-connected factorization F ~ F_A F_D by alternating exact
/// coordinate minimization: per-antenna phase alignment for F_A and the
/// least-squares fit F_D = (N_RF / N_t) F_A^H F.
HybridPrecoder decompose(const CMatrix& F, int n_rf, const DecomposeOptions& options = {});

/// True iff F_A has exactly the block support pattern of an N_t x N_RF
/// partially-connected network and every supported entry has unit modulus
/// (within 1e-10).
bool analog_feasibility_check(const CMatrix& analog, int n_tx, int n_rf);

/// Rescales the digital stage so the PA output power of F_A F_D equals p_tot
/// under the (beta1, beta3) model.
void match_hybrid_power(HybridPrecoder& hybrid, Complex beta1, Complex beta3, double p_tot);

}  // namespace isac
