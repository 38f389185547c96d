#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <queue>
#include <random>

#include "rapl/world.hpp"

namespace rapl {
namespace {

// Shortest action path to any terminal state, by replaying prefixes on a
// fresh copy of the world.
std::size_t shortest_path_oracle(const Environment& proto) {
  std::map<StateId, ActionSequence> paths;
  auto env = proto.clone();
  std::queue<StateId> frontier;
  const auto s0 = env->reset(0);
  paths[s0] = {};
  frontier.push(s0);
  while (!frontier.empty()) {
    const auto s = frontier.front();
    frontier.pop();
    for (ActionId a = 0; a < static_cast<ActionId>(proto.action_count()); ++a) {
      auto probe = proto.clone();
      probe->reset(0);
      for (const auto b : paths[s]) probe->step(b);
      const auto tr = probe->step(a);
      if (probe->reached_terminal()) return paths[s].size() + 1;
      if (tr.done || paths.count(tr.s_next)) continue;
      paths[tr.s_next] = paths[s];
      paths[tr.s_next].push_back(a);
      frontier.push(tr.s_next);
    }
  }
  return 0;
}

TEST(Corridor, ResetStartsAtLeftmostCell) {
  CorridorWorld env(24);
  EXPECT_EQ(env.reset(0), 0u);
  EXPECT_EQ(env.reset(12345), 0u);
  EXPECT_EQ(env.spec().env_id, "corridor:24:96");
  EXPECT_EQ(env.spec().step_cap, 96u);
}

TEST(Corridor, GatesBlockRightAndAllowUp) {
  CorridorWorld env(24);
  env.reset(0);
  env.step(CorridorWorld::kRight);
  const auto at_gate = env.step(CorridorWorld::kRight);
  EXPECT_EQ(at_gate.s_next, 2u);
  EXPECT_TRUE(env.is_gate(2));
  const auto blocked = env.step(CorridorWorld::kRight);
  EXPECT_EQ(blocked.s_next, 2u);
  EXPECT_EQ(blocked.r, 0.0);
  const auto climbed = env.step(CorridorWorld::kUp);
  EXPECT_EQ(climbed.s_next, 3u);
  const auto no_op_up = env.step(CorridorWorld::kUp);
  EXPECT_EQ(no_op_up.s_next, 3u);
}

TEST(Corridor, WallClampsWithZeroReward) {
  CorridorWorld env(24);
  env.reset(0);
  const auto tr = env.step(CorridorWorld::kLeft);
  EXPECT_EQ(tr.s_next, 0u);
  EXPECT_EQ(tr.r, 0.0);
  EXPECT_FALSE(tr.done);
}

TEST(Corridor, GoalPaysOneAndEnds) {
  CorridorWorld env(3);
  env.reset(0);
  EXPECT_EQ(env.step(CorridorWorld::kRight).r, 0.0);
  const auto tr = env.step(CorridorWorld::kRight);
  EXPECT_EQ(tr.r, 1.0);
  EXPECT_TRUE(tr.done);
  EXPECT_TRUE(env.reached_terminal());
}

TEST(Corridor, StepCapEndsEpisodeWithoutTerminal) {
  CorridorWorld env(24, 5);
  env.reset(0);
  Transition tr;
  for (int i = 0; i < 5; ++i) tr = env.step(CorridorWorld::kNoop);
  EXPECT_TRUE(tr.done);
  EXPECT_TRUE(env.finished());
  EXPECT_FALSE(env.reached_terminal());
}

TEST(Environment, StepErrors) {
  CorridorWorld env(4);
  EXPECT_THROW(env.step(0), Error);  // never reset
  env.reset(0);
  try {
    env.step(4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidAction);
  }
  EXPECT_THROW(env.step(-1), Error);
  env.step(CorridorWorld::kRight);
  env.step(CorridorWorld::kRight);
  env.step(CorridorWorld::kUp);
  ASSERT_TRUE(env.finished());
  try {
    env.step(CorridorWorld::kRight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEpisodeFinished);
  }
}

TEST(Environment, TimeIndexIncreasesByOne) {
  CorridorWorld env(24);
  env.reset(0);
  for (std::int64_t t = 0; t < 10; ++t) EXPECT_EQ(env.step(CorridorWorld::kRight).t, t);
}

TEST(MiniQbert, ColouringRewardsAndTermination) {
  MiniQbertWorld env(2, 200);
  const auto s0 = env.reset(3);
  EXPECT_EQ(s0, env.reset(3));
  EXPECT_EQ(env.decode(s0).position, 0u);
  EXPECT_EQ(env.decode(s0).coloured, 0u);
  EXPECT_EQ(env.step(MiniQbertWorld::kRight).r, 1.0);
  EXPECT_EQ(env.step(MiniQbertWorld::kLeft).r, 1.0);  // start square is still uncoloured
  EXPECT_EQ(env.step(MiniQbertWorld::kRight).r, 0.0);  // already coloured
  const auto bump = env.step(MiniQbertWorld::kRight);  // edge
  EXPECT_EQ(bump.r, 0.0);
  EXPECT_EQ(bump.s_next, bump.s);
  EXPECT_EQ(env.step(MiniQbertWorld::kDown).r, 1.0);
  const auto last = env.step(MiniQbertWorld::kLeft);
  EXPECT_EQ(last.r, 1.0);
  EXPECT_TRUE(last.done);
  EXPECT_TRUE(env.reached_terminal());
}

TEST(MiniQbert, ExpertCollectsEverySquare) {
  for (std::size_t side : {2u, 3u, 4u, 5u}) {
    MiniQbertWorld env(side, 200);
    const auto demo = record_demo(env, scripted_expert(env), 1);
    EXPECT_DOUBLE_EQ(demo.total_return(), static_cast<double>(side * side));
    EXPECT_TRUE(demo.transitions.back().done);
  }
}

TEST(MiniQbert, FeaturesAreOneHotPlusBitmap) {
  MiniQbertWorld env(3, 50);
  const auto s = env.encode({4, 0b000010001});
  const auto phi = env.features(s);
  ASSERT_EQ(phi.size(), env.spec().feature_dim);
  EXPECT_EQ(phi[4], 1.0);
  EXPECT_EQ(phi[9 + 0], 1.0);
  EXPECT_EQ(phi[9 + 4], 1.0);
  double total = 0.0;
  for (const double v : phi) total += v;
  EXPECT_EQ(total, 3.0);
}

TEST(MakeEnvironment, ParsesIds) {
  EXPECT_EQ(make_environment("corridor")->spec().env_id, "corridor:24:96");
  EXPECT_EQ(make_environment("corridor:9")->spec().env_id, "corridor:9:36");
  EXPECT_EQ(make_environment("corridor:9:10")->spec().env_id, "corridor:9:10");
  EXPECT_EQ(make_environment("qbert")->spec().env_id, "qbert:4:200");
  EXPECT_EQ(make_environment("qbert:3:40")->spec().env_id, "qbert:3:40");
  EXPECT_THROW(make_environment("maze"), Error);
  EXPECT_THROW(make_environment("corridor:x"), Error);
}

// Extended actions --------------------------------------------------------------------

TEST(StepExtended, PrimitiveMatchesStep) {
  CorridorWorld a(24), b(24);
  a.reset(0);
  b.reset(0);
  const auto out = step_extended(a, ExtendedAction::primitive(CorridorWorld::kRight),
                                 RoutineLibrary{}, 0.9);
  const auto tr = b.step(CorridorWorld::kRight);
  EXPECT_EQ(out.executed, 1u);
  EXPECT_EQ(out.discount, 0.9);
  ASSERT_EQ(out.inner.size(), 1u);
  EXPECT_EQ(out.inner[0], tr);
  EXPECT_EQ(out.s_end, tr.s_next);
}

TEST(StepExtended, RoutineWithoutRewardDiscountsByLength) {
  CorridorWorld env(24);
  env.reset(0);
  RoutineLibrary lib;
  lib.routines = {{{1, 1, 2}}};
  const auto out = step_extended(env, ExtendedAction::routine(0), lib, 0.99);
  EXPECT_EQ(out.executed, 3u);
  EXPECT_EQ(out.discounted_reward, 0.0);
  EXPECT_DOUBLE_EQ(out.discount, 0.99 * 0.99 * 0.99);
  EXPECT_EQ(out.discount, discount_power(0.99, 3));
  EXPECT_EQ(out.s_end, 3u);
  EXPECT_FALSE(out.terminated);
}

TEST(StepExtended, TruncatesAtTermination) {
  // Two steps reach the goal of a 3-cell corridor: rewards [0, 1].
  CorridorWorld env(3);
  env.reset(0);
  RoutineLibrary lib;
  lib.routines = {{{1, 1, 1}}};
  const auto out = step_extended(env, ExtendedAction::routine(0), lib, 0.9);
  EXPECT_EQ(out.executed, 2u);
  EXPECT_DOUBLE_EQ(out.discounted_reward, 0.9);
  EXPECT_DOUBLE_EQ(out.discount, 0.81);
  EXPECT_TRUE(out.terminated);
  EXPECT_EQ(out.inner.size(), 2u);
}

TEST(StepExtended, InvalidRoutineIndexThrows) {
  CorridorWorld env(24);
  env.reset(0);
  EXPECT_THROW(step_extended(env, ExtendedAction::routine(0), RoutineLibrary{}, 0.9), Error);
}

TEST(StepExtended, SemiMdpCompositionAndTelescoping) {
  std::mt19937_64 rng(4);
  RoutineLibrary lib;
  lib.routines = {{{1, 1, 2}}, {{0, 3}}, {{1, 2, 1, 1, 2, 1}}};
  const ExtendedActionSpace space(4, lib.routines);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  const double gamma = 0.97;
  for (int episode = 0; episode < 50; ++episode) {
    CorridorWorld extended(24), primitive(24);
    extended.reset(episode);
    primitive.reset(episode);
    double product = 1.0;
    std::size_t steps = 0;
    while (!extended.finished()) {
      const auto ea = space.at(pick(rng));
      const auto out = step_extended(extended, ea, space, gamma);
      double recomputed = 0.0;
      for (std::size_t i = 0; i < out.inner.size(); ++i) {
        const auto tr = primitive.step(out.inner[i].a);
        ASSERT_EQ(tr, out.inner[i]);
        recomputed += std::pow(gamma, static_cast<double>(i)) * tr.r;
      }
      EXPECT_NEAR(out.discounted_reward, recomputed, 1e-15);
      EXPECT_LE(out.executed, space.length(ea));
      if (!out.terminated) EXPECT_EQ(out.executed, space.length(ea));
      EXPECT_EQ(out.discount, discount_power(gamma, out.executed));
      product *= out.discount;
      steps += out.executed;
    }
    EXPECT_NEAR(product, std::pow(gamma, static_cast<double>(steps)), 1e-12);
    EXPECT_TRUE(primitive.finished());
  }
}

TEST(ExtendedActionSpace, FlatIndexing) {
  const ExtendedActionSpace space(4, {{{1, 1}}, {{2, 0, 1}}});
  EXPECT_EQ(space.size(), 6u);
  EXPECT_TRUE(space.at(3).is_primitive());
  EXPECT_EQ(space.at(4), ExtendedAction::routine(0));
  EXPECT_EQ(space.flat(ExtendedAction::routine(1)), 5u);
  EXPECT_EQ(space.length(ExtendedAction::primitive(2)), 1u);
  EXPECT_EQ(space.length(space.at(5)), 3u);
  EXPECT_EQ(space.primitives(space.at(5)), (ActionSequence{2, 0, 1}));
  EXPECT_THROW(space.at(6), Error);
}

// Demonstrations ----------------------------------------------------------------------

TEST(Demo, CorridorExpertTakesShortestPath) {
  CorridorWorld env(24);
  const auto demo = record_demo(env, scripted_expert(env), 0);
  EXPECT_EQ(demo.transitions.size(), shortest_path_oracle(env));
  EXPECT_EQ(demo.transitions.size(), 23u);
  EXPECT_DOUBLE_EQ(demo.total_return(), 1.0);
  EXPECT_TRUE(demo.transitions.back().done);
  ActionSequence expected;
  for (int i = 0; i < 7; ++i) expected.insert(expected.end(), {1, 1, 2});
  expected.insert(expected.end(), {1, 1});
  EXPECT_EQ(demo.actions(), expected);
  EXPECT_EQ(demo.state_at(0), 0u);
  EXPECT_EQ(demo.state_at(23), 23u);
}

TEST(Demo, QbertExpertIsNoLongerThanNecessaryOnSmallBoard) {
  MiniQbertWorld env(2, 200);
  const auto demo = record_demo(env, scripted_expert(env), 0);
  EXPECT_EQ(demo.transitions.size(), shortest_path_oracle(env));
}

TEST(Demo, DegradedExpertIsReproducible) {
  CorridorWorld env(24);
  const auto a = record_demo(env, epsilon_degraded(scripted_expert(env), 0.25, 4, 9), 9);
  const auto b = record_demo(env, epsilon_degraded(scripted_expert(env), 0.25, 4, 9), 9);
  EXPECT_EQ(a, b);
  const auto expert = record_demo(env, scripted_expert(env), 9);
  EXPECT_NE(a.actions(), expert.actions());
}

TEST(Demo, ReplayReproducesTransitions) {
  CorridorWorld env(24);
  const auto demo = record_demo(env, epsilon_degraded(scripted_expert(env), 0.3, 4, 2), 2);
  CorridorWorld replay(24);
  replay.reset(demo.seed);
  for (const auto& tr : demo.transitions) EXPECT_EQ(replay.step(tr.a), tr);
}

TEST(DemoIo, JsonlRoundTripIsBitExact) {
  MiniQbertWorld env(3, 60);
  auto demo = record_demo(env, epsilon_degraded(scripted_expert(env), 0.2, 4, 5), 5);
  demo.transitions[0].r = 0.1 + 0.2;  // a value with no short decimal form
  const auto text = to_jsonl(demo);
  const auto back = demo_from_jsonl(text);
  EXPECT_EQ(back, demo);
  EXPECT_EQ(to_jsonl(back), text);
  const auto first_line = text.substr(0, text.find('\n'));
  EXPECT_EQ(first_line, "{\"env\":\"qbert:3:60\",\"seed\":5,\"n_actions\":4}");
}

TEST(DemoIo, FileRoundTripAndErrors) {
  CorridorWorld env(24);
  const auto demo = record_demo(env, scripted_expert(env), 0);
  const auto path = testing::TempDir() + "/demo.jsonl";
  save_demo(demo, path);
  EXPECT_EQ(load_demo(path), demo);
  EXPECT_THROW(load_demo(testing::TempDir() + "/nope/demo.jsonl"), Error);
  try {
    demo_from_jsonl("{\"env\":\"corridor:24:96\",\"seed\":0,\"n_actions\":4}\n{\"t\":0,");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

}  // namespace
}  // namespace rapl
