#include <benchmark/benchmark.h>

#include "mkv/registry.hpp"
#include "mkv/solver.hpp"

namespace {

mkv::EnsembleState spread(std::size_t n) {
  mkv::EnsembleState s(n, 1);
  for (std::size_t i = 0; i < n; ++i) s[i][0] = -1.0 + 2.0 * static_cast<double>(i) / n;
  return s;
}

std::vector<double> noise(std::size_t n, double delta) {
  mkv::RandomStream stream(7, mkv::StreamPurpose::initial, 0, 0);
  std::vector<double> w(n);
  for (auto& v : w) v = std::sqrt(delta) * stream.normal();
  return w;
}

void run_step(benchmark::State& state, mkv::Scheme scheme, mkv::Summation summation,
              std::size_t batch) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double delta = 0x1p-7;
  const auto model = mkv::make_model("linear-diffusion-interaction");
  const auto spec = mkv::default_truncation({});
  mkv::Stepper stepper(model, spec, scheme, delta, true, summation);
  auto in = spread(n);
  mkv::EnsembleState out;
  const auto w = noise(n, delta);
  mkv::RandomStream stream(7, mkv::StreamPurpose::partition, 0, 0);
  for (auto _ : state) {
    std::optional<mkv::BatchPartition> part;
    if (mkv::is_rbm(scheme)) part.emplace(mkv::sample_partition(n, batch, stream));
    stepper.advance(in, w, part ? &*part : nullptr, out);
    benchmark::DoNotOptimize(out.positions().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_FullPairwise(benchmark::State& state) {
  run_step(state, mkv::Scheme::TruncatedEM_Full, mkv::Summation::Pairwise, 0);
}
void BM_FullSeparable(benchmark::State& state) {
  run_step(state, mkv::Scheme::TruncatedEM_Full, mkv::Summation::Auto, 0);
}
void BM_RbmPairwise(benchmark::State& state) {
  run_step(state, mkv::Scheme::TruncatedEM_RBM, mkv::Summation::Pairwise, 128);
}

void BM_BrownianChunk(benchmark::State& state) {
  const mkv::NoiseSpec spec{1, 1024, 1, 0x1p-12, 1.0};
  double out[4];
  std::size_t chunk = 0;
  for (auto _ : state) {
    mkv::brownian_chunk(spec, 0, 0, chunk++ % 1024, out);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

void BM_SamplePartition(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  mkv::RandomStream stream(3, mkv::StreamPurpose::partition, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(mkv::sample_partition(n, 128, stream));
}

}  // namespace

BENCHMARK(BM_FullPairwise)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FullSeparable)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RbmPairwise)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BrownianChunk);
BENCHMARK(BM_SamplePartition)->RangeMultiplier(4)->Range(1 << 10, 1 << 14);
BENCHMARK_MAIN();
