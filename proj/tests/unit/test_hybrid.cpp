#include "isac/hybrid.hpp"
#include "isac/model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace isac {
namespace {

using testing::random_matrix;

CMatrix random_analog(int n_tx, int n_rf, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  const int M = n_tx / n_rf;
  CMatrix A = CMatrix::Zero(n_tx, n_rf);
  for (int i = 0; i < n_rf; ++i)
    for (int j = 0; j < M; ++j) A(i * M + j, i) = std::polar(1.0, phase(rng));
  return A;
}

TEST(Decompose, SingleAntennaSubarraysAreExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CMatrix F = random_matrix(8, 3, seed);
    const HybridPrecoder h = decompose(F, 8);
    EXPECT_LT(h.residual_trace.back(), 1e-12 * F.squaredNorm());
    EXPECT_TRUE(analog_feasibility_check(h.analog, 8, 8));
  }
}

TEST(Decompose, RecoversPlantedFactors) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CMatrix A = random_analog(16, 4, seed);
    const CMatrix D = random_matrix(4, 2, 500 + seed);
    const CMatrix F = A * D;
    const HybridPrecoder h = decompose(F, 4);
    EXPECT_LT(h.residual_trace.back(), 1e-8 * F.squaredNorm()) << "seed " << seed;
    EXPECT_LT((h.combined() - F).norm(), 1e-4 * F.norm());
  }
}

TEST(Decompose, ResidualTraceNonIncreasingAndFeasible) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CMatrix F = random_matrix(16, 2, 1000 + seed);
    const HybridPrecoder h = decompose(F, 4);
    for (std::size_t i = 1; i < h.residual_trace.size(); ++i) {
      EXPECT_LE(h.residual_trace[i], h.residual_trace[i - 1] * (1.0 + 1e-12))
          << "seed " << seed << " step " << i;
    }
    EXPECT_TRUE(analog_feasibility_check(h.analog, 16, 4));
    const CMatrix gram = h.analog.adjoint() * h.analog;
    EXPECT_LT((gram - 4.0 * CMatrix::Identity(4, 4)).norm(), 1e-12);
    EXPECT_NEAR(h.residual_trace.back(), (F - h.combined()).squaredNorm(), 1e-9);
  }
}

TEST(Decompose, ShapeViolationsAreConfigErrors) {
  const CMatrix F = random_matrix(10, 2, 1);
  EXPECT_THROW(decompose(F, 4), ConfigError);
  EXPECT_THROW(decompose(random_matrix(8, 3, 2), 2), ConfigError);
  EXPECT_THROW(decompose(F, 0), ConfigError);
}

TEST(Decompose, ZeroPrecoderKeepsValidPhases) {
  const HybridPrecoder h = decompose(CMatrix::Zero(8, 2), 4);
  EXPECT_TRUE(analog_feasibility_check(h.analog, 8, 4));
  EXPECT_EQ(h.digital.norm(), 0.0);
}

TEST(AnalogFeasibility, Patterns) {
  EXPECT_TRUE(analog_feasibility_check(CMatrix::Identity(4, 4), 4, 4));
  CMatrix A = random_analog(8, 2, 3);
  EXPECT_TRUE(analog_feasibility_check(A, 8, 2));
  CMatrix off = A;
  off(0, 1) = 1e-3;
  EXPECT_FALSE(analog_feasibility_check(off, 8, 2));
  CMatrix mag = A;
  mag(5, 1) *= 1.0 + 1e-6;
  EXPECT_FALSE(analog_feasibility_check(mag, 8, 2));
  CMatrix near = A;
  near(5, 1) *= 1.0 + 1e-12;
  EXPECT_TRUE(analog_feasibility_check(near, 8, 2));
  EXPECT_FALSE(analog_feasibility_check(A, 8, 4));
  EXPECT_FALSE(analog_feasibility_check(A, 9, 2));
}

TEST(MatchHybridPower, TrueAndLinearModels) {
  const Complex b1{1.14, -0.08}, b3{-0.08, 0.1};
  HybridPrecoder h = decompose(random_matrix(16, 2, 4), 4);
  match_hybrid_power(h, b1, b3, 19.95);
  EXPECT_NEAR(radiated_power(h.combined(), b1, b3).total / 19.95, 1.0, 1e-9);
  EXPECT_TRUE(analog_feasibility_check(h.analog, 16, 4));
  match_hybrid_power(h, b1, 0.0, 19.95);
  EXPECT_NEAR(std::norm(b1) * h.combined().squaredNorm() / 19.95, 1.0, 1e-9);
}

}  // namespace
}  // namespace isac
