#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "json.hpp"
#include "rapl/imitate.hpp"
#include "rapl/numeric.hpp"
#include "support/references.hpp"

namespace rapl {
namespace {

using namespace reference;

Demonstration synthetic_demo(const ActionSequence& actions) {
  Demonstration demo;
  demo.env_id = "synthetic";
  demo.n_actions = 4;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    demo.transitions.push_back({static_cast<std::int64_t>(t), 100 + t, actions[t], 0.0, 101 + t,
                                t + 1 == actions.size()});
  }
  return demo;
}

Demonstration corridor_demo() {
  CorridorWorld env(24);
  return record_demo(env, scripted_expert(env), 0);
}

TEST(SqTarget, ClosedForms) {
  EXPECT_NEAR(soft_return(1.0, 3, 0.99), 2.9701, 1e-12);
  EXPECT_NEAR(discount_power(0.99, 3), 0.970299, 1e-12);

  SoftQ single(1, 0.99);
  EXPECT_DOUBLE_EQ(sq_target(single, 1, 7, false, 1.0, 0.99), 1.0);

  SoftQ five(5, 0.99);
  EXPECT_NEAR(sq_target(five, 3, 7, false, 1.0, 0.99), 2.9701 + 0.970299 * std::log(5.0), 1e-12);
  EXPECT_NEAR(sq_target(five, 3, 7, true, 1.0, 0.99), 2.9701, 1e-12);
}

TEST(SqTarget, UsesSoftValueOfNextState) {
  SoftQ q(3, 0.9);
  q.at(4, 0) = 1.0;
  q.at(4, 1) = -2.0;
  q.at(4, 2) = 0.5;
  const double lse = std::log(std::exp(1.0) + std::exp(-2.0) + std::exp(0.5));
  EXPECT_NEAR(q.soft_value(4), lse, 1e-15);
  EXPECT_NEAR(sq_target(q, 2, 4, false, 0.0, 0.9), 0.81 * lse, 1e-14);
}

TEST(SoftBellmanError, Examples) {
  SoftQ q(1, 0.99);
  const std::vector<SqilEntry> one{{0, 0, 1, 1, false, 0.0}};
  EXPECT_DOUBLE_EQ(soft_bellman_error(q, one, 1.0), 1.0);

  SoftQ fitted(1, 0.5);
  fitted.at(0, 0) = 1.0;  // terminal target is exactly r
  const std::vector<SqilEntry> done{{0, 0, 1, 1, true, 0.0}};
  EXPECT_EQ(soft_bellman_error(fitted, done, 1.0), 0.0);

  SoftQ two(2, 0.9);
  two.at(0, 0) = 0.3;
  two.at(0, 1) = -0.7;
  two.at(1, 0) = 0.25;
  const std::vector<SqilEntry> pair{{0, 0, 1, 1, false, 0.0}, {0, 1, 2, 3, false, 0.0}};
  const double t0 = 1.0 + 0.9 * std::log(std::exp(0.25) + std::exp(0.0));
  const double t1 = (1.0 + 0.9 + 0.81) + 0.729 * std::log(2.0);
  const double expected = ((0.3 - t0) * (0.3 - t0) + (-0.7 - t1) * (-0.7 - t1)) / 2.0;
  EXPECT_NEAR(soft_bellman_error(two, pair, 1.0), expected, 1e-14);

  try {
    soft_bellman_error(q, {}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(SqilLoss, JointNormalisationAndSampleWeight) {
  SoftQ q(2, 0.9);
  q.at(0, 1) = 0.4;
  SqilDatasets d;
  d.prim = {{0, 0, 1, 1, false, 0.0}, {1, 1, 2, 1, true, 0.0}};
  d.routine = {{0, 1, 2, 2, true, 0.0}};
  const auto demo = d.demo_union();
  EXPECT_EQ(demo.size(), 3u);
  const double demo_term = soft_bellman_error(q, demo, 1.0);
  EXPECT_DOUBLE_EQ(sqil_loss(q, d, 1.0), demo_term);  // empty sample adds nothing

  d.sample = {{0, 1, 1, 1, false, 0.0}};
  const double sample_term = soft_bellman_error(q, d.sample, 0.0);
  EXPECT_DOUBLE_EQ(sqil_loss(q, d, 1.0), demo_term + sample_term);
  EXPECT_DOUBLE_EQ(sqil_loss(q, d, 0.0), demo_term);
  EXPECT_DOUBLE_EQ(sqil_loss(q, d, 2.5), demo_term + 2.5 * sample_term);
  EXPECT_GE(sqil_loss(q, d, 1.0), 0.0);
  SqilConfig defaults;
  EXPECT_EQ(defaults.lambda_sample, 1.0);
  EXPECT_EQ(defaults.temperature, 1.0);
}

TEST(SgdStep, MovesTowardTargetByTwiceResidual) {
  SoftQ q(1, 0.9);
  q.at(0, 0) = 0.2;
  const std::vector<SqilEntry> batch{{0, 0, 1, 1, true, 0.0}};
  const double residual = 0.2 - 1.0;
  sgd_step(q, batch, {}, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(q.value(0, 0), 0.2 - 0.1 * 2.0 * residual);
}

TEST(BuildRoutineDemo, OccurrencesAndStates) {
  const auto demo = synthetic_demo({0, 1, 0, 1});
  RoutineLibrary lib;
  lib.routines = {{{0, 1}}};
  const auto entries = build_routine_demo(demo, lib, 0.99);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].s, demo.state_at(0));
  EXPECT_EQ(entries[0].s_next, demo.state_at(2));
  EXPECT_EQ(entries[1].s, demo.state_at(2));
  EXPECT_EQ(entries[1].s_next, demo.state_at(4));
  EXPECT_EQ(entries[0].action, 4u);
  EXPECT_EQ(entries[0].length, 2u);
  EXPECT_TRUE(build_routine_demo(demo, RoutineLibrary{}, 0.99).empty());
}

TEST(BuildRoutineDemo, RoutineAtDemoEndReachesFinalState) {
  const auto demo = corridor_demo();
  RoutineLibrary lib;
  lib.routines = {{{2, 1, 1}}};  // only once, as the last three actions
  const auto entries = build_routine_demo(demo, lib, 0.99);
  ASSERT_EQ(entries.size(), 7u);
  const auto& last = entries.back();
  EXPECT_EQ(last.s, demo.state_at(20));
  EXPECT_EQ(last.s_next, demo.transitions.back().s_next);
  EXPECT_EQ(last.s_next, 23u);
  EXPECT_TRUE(last.terminal);
}

TEST(BuildRoutineDemo, ExpansionsMatchDemoSlices) {
  const auto demo = corridor_demo();
  const auto actions = demo.actions();
  const auto lib = discover(actions, {});
  const ExtendedActionSpace space(demo.n_actions, lib.routines);
  for (const auto& e : build_routine_demo(demo, lib, 0.99)) {
    const auto seq = space.primitives(space.at(e.action));
    std::size_t t = 0;
    while (demo.state_at(t) != e.s) ++t;
    ASSERT_LE(t + seq.size(), actions.size());
    EXPECT_TRUE(std::equal(seq.begin(), seq.end(), actions.begin() + static_cast<std::ptrdiff_t>(t)));
    EXPECT_EQ(demo.state_at(t + seq.size()), e.s_next);
  }
}

TEST(TrainSqil, RejectsDemoFromAnotherWorld) {
  CorridorWorld env(24);
  MiniQbertWorld other(3, 40);
  const auto demo = record_demo(other, scripted_expert(other), 0);
  try {
    train_sqil(env, demo, RoutineLibrary{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEnvMismatch);
  }
}

TEST(TrainSqil, SampledEntriesCarryExecutedRewards) {
  CorridorWorld env(6);
  const auto demo = record_demo(env, scripted_expert(env), 0);
  const auto lib = discover(demo.actions(), {});
  SqilConfig config;
  config.episodes = 5;
  config.seed = 3;
  const auto result = train_sqil(env, demo, lib, config);
  ASSERT_EQ(result.curve.size(), 5u);
  for (const auto& e : result.datasets.sample) {
    EXPECT_GE(e.length, 1u);
    EXPECT_LE(e.env_reward, 1.0);
    if (e.env_reward > 0.0) {
      EXPECT_TRUE(e.terminal);
      EXPECT_DOUBLE_EQ(e.env_reward, discount_power(config.gamma, e.length - 1));
    }
  }
}

TEST(TrainSqil, DeterministicUnderSeed) {
  CorridorWorld env(24);
  const auto demo = corridor_demo();
  const auto lib = discover(demo.actions(), {});
  SqilConfig config;
  config.episodes = 10;
  config.seed = 8;
  const auto a = train_sqil(env, demo, lib, config);
  const auto b = train_sqil(env, demo, lib, config);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.curve, b.curve);
}

TEST(TrainSqil, EmptyLibraryMatchesPlainSqilBitForBit) {
  for (const std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    CorridorWorld env(24);
    const auto demo = corridor_demo();
    SqilConfig config;
    config.episodes = 15;
    config.seed = seed;
    const auto rapl = train_sqil(env, demo, RoutineLibrary{}, config);
    CorridorWorld env2(24);
    const auto plain = plain_sqil_reference(env2, demo, config);
    ASSERT_EQ(rapl.curve, plain.curve) << "seed " << seed;
    ASSERT_EQ(rapl.q.table().size(), plain.q.size());
    for (const auto& [s, row] : plain.q) {
      ASSERT_EQ(rapl.q.row(s), row) << "seed " << seed << " state " << s;
    }
  }
}

TEST(GreedyPolicyJson, MapsStatesToGreedyActions) {
  SoftQ q(5, 0.9);
  q.at(3, 4) = 2.0;
  q.at(1, 2) = 0.5;
  const ExtendedActionSpace space(4, {{{1, 1}}});
  const auto doc = nlohmann::json::parse(greedy_policy_json(q, space));
  EXPECT_EQ(doc["n_actions"], 4);
  EXPECT_EQ(doc["routines"][0], nlohmann::json::array({1, 1}));
  EXPECT_EQ(doc["greedy"]["3"], 4);
  EXPECT_EQ(doc["greedy"]["1"], 2);
}

}  // namespace
}  // namespace rapl
