#include <benchmark/benchmark.h>

#include <random>

#include "rapl/grammar.hpp"

namespace {

rapl::ActionSequence random_sequence(std::size_t n, int alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  rapl::ActionSequence x(n);
  for (auto& a : x) a = pick(rng);
  return x;
}

void BM_InduceRandom(benchmark::State& state) {
  const auto x = random_sequence(static_cast<std::size_t>(state.range(0)), 4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rapl::induce(x, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InduceRandom)->RangeMultiplier(4)->Range(64, 16384);

void BM_InduceRepetitive(benchmark::State& state) {
  rapl::ActionSequence x;
  while (x.size() < static_cast<std::size_t>(state.range(0))) x.insert(x.end(), {1, 1, 2});
  for (auto _ : state) benchmark::DoNotOptimize(rapl::induce(x, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InduceRepetitive)->RangeMultiplier(4)->Range(64, 16384);

void BM_CheckGrammar(benchmark::State& state) {
  const auto g = rapl::induce(random_sequence(static_cast<std::size_t>(state.range(0)), 4, 2), 4);
  for (auto _ : state) benchmark::DoNotOptimize(rapl::check_grammar(g));
}
BENCHMARK(BM_CheckGrammar)->Arg(512)->Arg(4096);

}  // namespace
