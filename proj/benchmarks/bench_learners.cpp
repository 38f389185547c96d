#include <benchmark/benchmark.h>

#include "rapl/imitate.hpp"
#include "rapl/reinforce.hpp"
#include "rapl/world.hpp"

namespace {

rapl::RoutineLibrary corridor_library(rapl::Environment& env) {
  const auto demo = rapl::record_demo(env, rapl::scripted_expert(env), 0);
  const auto actions = demo.actions();
  return rapl::discover(actions, {});
}

void BM_StepExtended(benchmark::State& state) {
  rapl::CorridorWorld env(24);
  const auto library = corridor_library(env);
  const rapl::ExtendedActionSpace space(env.action_count(), library.routines);
  const auto action = space.at(space.size() - 1);
  for (auto _ : state) {
    env.reset(0);
    while (!env.finished()) benchmark::DoNotOptimize(rapl::step_extended(env, action, space, 0.99));
  }
}
BENCHMARK(BM_StepExtended);

void BM_TrainA2c(benchmark::State& state) {
  rapl::CorridorWorld env(24);
  const auto library = state.range(0) != 0 ? corridor_library(env) : rapl::RoutineLibrary{};
  rapl::A2cConfig config;
  config.step_budget = 10'000;
  for (auto _ : state) benchmark::DoNotOptimize(rapl::train_a2c(env, library, config));
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_TrainA2c)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainSqil(benchmark::State& state) {
  rapl::CorridorWorld env(24);
  const auto demo = rapl::record_demo(env, rapl::scripted_expert(env), 0);
  const auto library = state.range(0) != 0 ? corridor_library(env) : rapl::RoutineLibrary{};
  rapl::SqilConfig config;
  config.episodes = 20;
  for (auto _ : state) benchmark::DoNotOptimize(rapl::train_sqil(env, demo, library, config));
}
BENCHMARK(BM_TrainSqil)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
