// Throughput benchmarks for the decode and training hot paths.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/channel.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/polar_code.hpp"
#include "polarhyper/rng.hpp"
#include "polarhyper/sc_decoders.hpp"

namespace {

using namespace polar;

PolarCode bench_code() { return construct_bhattacharyya(5, 16); }

std::vector<double> bench_llr(const PolarCode& code, std::uint64_t seed) {
  NoiseSpec spec = make_noise_spec(3.0, (double)code.K / code.N);
  GaussianStream rng(seed);
  std::vector<double> s((size_t)code.N, 1.0);
  add_noise(s, spec, rng);
  return channel_llr(s, spec);
}

void BM_BpDecode(benchmark::State& state) {
  PolarCode code = bench_code();
  std::vector<double> llr = bench_llr(code, 7);
  const Kernel k = state.range(0) ? Kernel::MinSum : Kernel::Exact;
  for (auto _ : state) {
    BpResult r = bp_decode(code, llr, 5, k);
    benchmark::DoNotOptimize(r.u_hat.data());
  }
}
BENCHMARK(BM_BpDecode)->Arg(0)->Arg(1);

void BM_ScDecode(benchmark::State& state) {
  PolarCode code = bench_code();
  std::vector<double> llr = bench_llr(code, 7);
  for (auto _ : state) {
    ScResult r = sc_decode(code, llr);
    benchmark::DoNotOptimize(r.u_hat.data());
  }
}
BENCHMARK(BM_ScDecode);

void BM_SclDecode(benchmark::State& state) {
  PolarCode code = bench_code();
  std::vector<double> llr = bench_llr(code, 7);
  for (auto _ : state) {
    SclResult r = scl_decode(code, llr, (int)state.range(0));
    benchmark::DoNotOptimize(r.u_hat.data());
  }
}
BENCHMARK(BM_SclDecode)->Arg(1)->Arg(8);

void BM_HyperDecode(benchmark::State& state) {
  PolarCode code = bench_code();
  std::vector<double> llr = bench_llr(code, 7);
  HyperWeights w = make_hyper_weights(code, 5, 11);
  for (auto _ : state) {
    SoftResult r = hyper_decode(code, llr, w, Kernel::MinSum);
    benchmark::DoNotOptimize(r.o.data());
  }
}
BENCHMARK(BM_HyperDecode);

void BM_HyperTrainStep(benchmark::State& state) {
  PolarCode code = bench_code();
  std::vector<double> llr = bench_llr(code, 7);
  HyperWeights w = make_hyper_weights(code, 5, 11);
  NeuralTrace trace;
  HyperScratch scratch;
  HyperGrads grads;
  std::vector<std::uint8_t> u0((size_t)code.N, 0);
  for (auto _ : state) {
    SoftResult r =
        hyper_record(code, llr, w, Kernel::MinSum, true, trace, scratch);
    std::vector<double> dLdo = bce_loss_grad(r.o, u0);
    hyper_backward(code, w, Kernel::MinSum, true, trace, dLdo, grads, scratch);
    benchmark::DoNotOptimize(grads.c);
  }
}
BENCHMARK(BM_HyperTrainStep);

}  // namespace

BENCHMARK_MAIN();
