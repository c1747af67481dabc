#include "isac/baselines.hpp"
#include "isac/hybrid.hpp"
#include "isac/model.hpp"
#include "isac/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

struct Instance {
  isac::SystemConfig config;
  isac::ChannelRealization channels;
  isac::CMatrix F;
};

Instance make_instance(int n_tx, int n_users) {
  Instance in;
  in.config.n_tx = n_tx;
  in.config.n_rf = n_tx / 4;
  in.config.n_users = n_users;
  in.config.n_paths = 5;
  in.config.set_snr_db(20.0);
  std::mt19937_64 rng(7);
  in.channels = isac::draw_channels(in.config, rng);
  in.F = isac::initial_precoder(in.channels, in.config);
  return in;
}

void BM_EuclideanGradient(benchmark::State& state) {
  const auto in = make_instance(static_cast<int>(state.range(0)), 2);
  const isac::CMatrix C = in.F * in.F.adjoint();
  const isac::CMatrix U = isac::exact_moment_u(C);
  const isac::CMatrix V = isac::exact_moment_v(C);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isac::euclidean_gradient(in.F, U, V, in.channels, in.config));
  }
}
BENCHMARK(BM_EuclideanGradient)->Arg(16)->Arg(64);

void BM_SolvePenalized(benchmark::State& state) {
  const auto in = make_instance(static_cast<int>(state.range(0)), 2);
  const isac::SolverOptions options;
  for (auto _ : state) {
    benchmark::DoNotOptimize(isac::solve_penalized(in.channels, in.config, options));
  }
}
BENCHMARK(BM_SolvePenalized)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
  const auto in = make_instance(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(isac::decompose(in.F, in.config.n_rf));
  }
}
BENCHMARK(BM_Decompose)->Arg(16)->Arg(64);

void BM_PowerMatch(benchmark::State& state) {
  const auto in = make_instance(64, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        isac::power_matching_scale(in.F, in.config.beta1, in.config.beta3, in.config.p_tot_mw));
  }
}
BENCHMARK(BM_PowerMatch);

}  // namespace

BENCHMARK_MAIN();
