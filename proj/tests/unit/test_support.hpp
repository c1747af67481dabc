#pragma once

#include "isac/model.hpp"
#include "isac/types.hpp"

#include <random>

namespace isac::testing {

inline SystemConfig small_config(int n_tx, int n_users, int n_paths = 3) {
  SystemConfig c;
  c.n_tx = n_tx;
  c.n_rf = n_tx >= 4 ? n_tx / 2 : n_tx;
  if (c.n_rf < n_users) c.n_rf = n_tx;
  c.n_users = n_users;
  c.n_paths = n_paths;
  c.set_snr_db(20.0);
  return c;
}

inline CMatrix random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return scale * complex_normal_matrix(rows, cols, rng);
}

inline CMatrix random_hermitian(int n, std::uint64_t seed) {
  const CMatrix A = random_matrix(n, n, seed);
  return 0.5 * (A + A.adjoint());
}

// Monte-Carlo moments of the cubic PA driven by x = F s, s ~ CN(0, I), drawn
// in batches of Gaussian symbols.
struct PaSamples {
  CVector bussgang_diag;  // E[phi(x_i) x_i^*] / E[|x_i|^2]
  CMatrix distortion_cov;  // sample covariance of phi(x) - B x
  double power = 0.0;      // E||phi(x)||^2
};

inline PaSamples sample_pa(const CMatrix& F, Complex b1, Complex b3, int n_samples,
                           std::uint64_t seed, int batch = 20000) {
  std::mt19937_64 rng(seed);
  const int N = static_cast<int>(F.rows());
  const int K = static_cast<int>(F.cols());
  CVector cross = CVector::Zero(N);
  RVector in_pow = RVector::Zero(N);
  double out_pow = 0.0;
  // First pass: Bussgang gain and power. Second pass (same stream) for the
  // distortion covariance, which needs the gain.
  auto draw_batch = [&](std::mt19937_64& g, int n) {
    const CMatrix S = complex_normal_matrix(K, n, g);
    const CMatrix X = F * S;
    const CMatrix Phi = b1 * X + b3 * X.cwiseProduct(X.cwiseAbs2().cast<Complex>());
    return std::make_pair(X, Phi);
  };
  for (int done = 0; done < n_samples; done += batch) {
    const int n = std::min(batch, n_samples - done);
    auto [X, Phi] = draw_batch(rng, n);
    cross += Phi.cwiseProduct(X.conjugate()).rowwise().sum();
    in_pow += X.cwiseAbs2().rowwise().sum();
    out_pow += Phi.squaredNorm();
  }
  PaSamples s;
  s.bussgang_diag = cross.cwiseQuotient(in_pow.cast<Complex>());
  s.power = out_pow / n_samples;

  std::mt19937_64 rng2(seed);
  CMatrix cov = CMatrix::Zero(N, N);
  for (int done = 0; done < n_samples; done += batch) {
    const int n = std::min(batch, n_samples - done);
    auto [X, Phi] = draw_batch(rng2, n);
    const CMatrix E = Phi - s.bussgang_diag.asDiagonal() * X;
    cov += E * E.adjoint();
  }
  s.distortion_cov = cov / static_cast<double>(n_samples);
  return s;
}

}  // namespace isac::testing
