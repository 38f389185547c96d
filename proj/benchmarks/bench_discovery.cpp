#include <benchmark/benchmark.h>

#include <random>

#include "rapl/discovery.hpp"
#include "rapl/metrics.hpp"

namespace {

rapl::ActionSequence random_sequence(std::size_t n, int alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  rapl::ActionSequence x(n);
  for (auto& a : x) a = pick(rng);
  return x;
}

void BM_Levenshtein(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_sequence(n, 4, 3);
  const auto b = random_sequence(n, 4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(rapl::levenshtein(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Levenshtein)->RangeMultiplier(2)->Range(8, 1024)->Complexity(benchmark::oNSquared);

void BM_Discover(benchmark::State& state) {
  const auto x = random_sequence(static_cast<std::size_t>(state.range(0)), 4, 5);
  const rapl::DiscoveryParams params;
  for (auto _ : state) benchmark::DoNotOptimize(rapl::discover(x, params));
}
BENCHMARK(BM_Discover)->RangeMultiplier(4)->Range(64, 4096);

void BM_Alignment(benchmark::State& state) {
  const auto demo = random_sequence(static_cast<std::size_t>(state.range(0)), 4, 6);
  const auto agent = random_sequence(static_cast<std::size_t>(state.range(0)) / 2, 4, 7);
  for (auto _ : state) benchmark::DoNotOptimize(rapl::alignment_score(demo, agent));
}
BENCHMARK(BM_Alignment)->Arg(64)->Arg(512);

void BM_EnumerationAblation(benchmark::State& state) {
  const auto x = random_sequence(128, 4, 8);
  rapl::AblationRequest request;
  request.kind = rapl::AblationKind::kProposalByEnumeration;
  request.shape = {static_cast<std::size_t>(state.range(0))};
  request.alphabet_size = 4;
  for (auto _ : state) {
    std::mt19937_64 rng(9);
    benchmark::DoNotOptimize(rapl::ablation_generate(request, x, rng));
  }
}
BENCHMARK(BM_EnumerationAblation)->DenseRange(2, 6, 2);

}  // namespace
