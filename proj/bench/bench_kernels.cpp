#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "roadsel/nn/batched.hpp"
#include "roadsel/nn/reference.hpp"

namespace {

using namespace roadsel::nn;

struct Fixture {
  ParamSet params;
  std::vector<InputSequence> seqs;
  std::vector<const InputSequence*> ptrs;
  std::vector<double> targets;

  Fixture(int hidden, int batch, int steps) : params(init_params(hidden, 2, 1)) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int b = 0; b < batch; ++b) {
      InputSequence s;
      for (int t = 0; t < 2 * steps; ++t) s.values.push_back(u(rng));
      seqs.push_back(std::move(s));
      targets.push_back(b % 2);
    }
    for (const auto& s : seqs) ptrs.push_back(&s);
  }
};

void BM_ReferenceGradient(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 196);
  for (auto _ : state) benchmark::DoNotOptimize(reference::batch_gradient(f.params, f.seqs, f.targets, 1e-7));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_BatchedGradient(benchmark::State& state, Precision precision) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 196);
  for (auto _ : state) {
    benchmark::DoNotOptimize(batched::loss_and_gradient(f.params, f.ptrs, f.targets, 1e-7, precision));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_BatchedForward(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 196);
  for (auto _ : state) benchmark::DoNotOptimize(batched::forward(f.params, f.ptrs));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_ReferenceGradient)->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BatchedGradient, f64, Precision::kFloat64)->Args({32, 32})->Args({220, 64})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BatchedGradient, f32, Precision::kFloat32)->Args({32, 32})->Args({220, 64})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchedForward)->Args({32, 256})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
