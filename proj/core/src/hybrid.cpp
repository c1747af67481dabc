#include "isac/hybrid.hpp"

#include "isac/model.hpp"

#include <cmath>
#include <sstream>

namespace isac {

namespace {

void check_shape(int n_tx, int n_rf, int n_users) {
  if (n_rf <= 0 || n_tx <= 0 || n_tx % n_rf != 0) {
    std::ostringstream os;
    os << "decompose: N_t (" << n_tx << ") must be a positive multiple of N_RF (" << n_rf << ")";
    throw ConfigError(os.str());
  }
  if (n_users > n_rf) {
    std::ostringstream os;
    os << "decompose: K (" << n_users << ") exceeds N_RF (" << n_rf << ")";
    throw ConfigError(os.str());
  }
}

double residual(const CMatrix& F, const CMatrix& A, const CMatrix& D) {
  return (F - A * D).squaredNorm();
}

}  // namespace

HybridPrecoder decompose(const CMatrix& F, int n_rf, const DecomposeOptions& options) {
  const int n_tx = static_cast<int>(F.rows());
  const int K = static_cast<int>(F.cols());
  check_shape(n_tx, n_rf, K);
  const int M = n_tx / n_rf;
  const double scale = static_cast<double>(n_rf) / n_tx;

  // Warm start: phases of each subarray's dominant column.
  CMatrix A = CMatrix::Zero(n_tx, n_rf);
  for (int i = 0; i < n_rf; ++i) {
    const auto block = F.middleRows(i * M, M);
    Eigen::Index dominant = 0;
    block.colwise().squaredNorm().maxCoeff(&dominant);
    for (int j = 0; j < M; ++j) {
      const Complex v = block(j, dominant);
      A(i * M + j, i) = std::abs(v) > 0.0 ? v / std::abs(v) : Complex(1.0, 0.0);
    }
  }

  HybridPrecoder out;
  CMatrix D = scale * A.adjoint() * F;
  double prev = residual(F, A, D);
  out.residual_trace.push_back(prev);

  for (int it = 0; it < options.max_iters; ++it) {
    const CMatrix target = F * D.adjoint();  // N_t x N_RF
    for (int i = 0; i < n_rf; ++i) {
      for (int j = 0; j < M; ++j) {
        const int m = i * M + j;
        const Complex v = target(m, i);
        // An undefined angle keeps the previous phase.
        if (std::abs(v) > 0.0) A(m, i) = v / std::abs(v);
      }
    }
    D = scale * A.adjoint() * F;
    const double cur = residual(F, A, D);
    out.residual_trace.push_back(cur);
    const double change = std::abs(prev - cur) / std::max(prev, 1e-300);
    prev = cur;
    if (cur <= 1e-300 || change < options.rel_tol) break;
  }
  out.analog = std::move(A);
  out.digital = std::move(D);
  return out;
}

bool analog_feasibility_check(const CMatrix& analog, int n_tx, int n_rf) {
  if (n_rf <= 0 || n_tx % n_rf != 0) return false;
  if (analog.rows() != n_tx || analog.cols() != n_rf) return false;
  const int M = n_tx / n_rf;
  for (int c = 0; c < n_rf; ++c) {
    for (int r = 0; r < n_tx; ++r) {
      const double mag = std::abs(analog(r, c));
      if (r / M == c) {
        if (std::abs(mag - 1.0) > 1e-10) return false;
      } else if (mag != 0.0) {
        return false;
      }
    }
  }
  return true;
}

void match_hybrid_power(HybridPrecoder& hybrid, Complex beta1, Complex beta3, double p_tot) {
  const CMatrix F = hybrid.combined();
  hybrid.digital *= power_matching_scale(F, beta1, beta3, p_tot);
}

}  // namespace isac
