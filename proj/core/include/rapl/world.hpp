#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rapl/discovery.hpp"
#include "rapl/types.hpp"

namespace rapl {

struct MdpSpec {
  std::string env_id;
  StateId state_count = 0;      // ids are in [0, state_count)
  std::size_t feature_dim = 0;  // length of features()
  std::size_t action_count = 0;
  double gamma = 0.99;
  std::size_t step_cap = 0;
};

/// One primitive step. `done` is set on the terminal step and on the step
/// that exhausts the episode's step cap.
struct Transition {
  std::int64_t t = 0;
  StateId s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateId s_next = 0;
  bool done = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Discrete, deterministic episodic world. Instances are single-threaded;
/// clone() gives an independent copy for parallel use.
class Environment {
 public:
  virtual ~Environment() = default;

  const MdpSpec& spec() const { return spec_; }
  std::size_t action_count() const { return spec_.action_count; }

  StateId reset(std::uint64_t seed);
  /// Throws Error(kInvalidAction) for a >= action_count and
  /// Error(kEpisodeFinished) once the episode is over.
  Transition step(ActionId a);

  bool finished() const { return finished_; }
  /// True when the episode ended in a terminal state rather than at the cap.
  bool reached_terminal() const { return terminal_; }
  StateId state() const { return state_; }
  std::int64_t elapsed() const { return t_; }

  virtual std::vector<double> features(StateId s) const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  explicit Environment(MdpSpec spec) : spec_(std::move(spec)) {}

  struct Outcome {
    StateId next;
    double reward;
    bool terminal;
  };
  virtual StateId initial_state(std::uint64_t seed) const = 0;
  virtual Outcome advance(StateId s, ActionId a) const = 0;

 private:
  MdpSpec spec_;
  StateId state_ = 0;
  std::int64_t t_ = 0;
  bool finished_ = true;
  bool terminal_ = false;
};

/// 1 x L strip. Every third cell is a gate that RIGHT cannot cross and UP
/// climbs over, so the shortest path is the motif RIGHT, RIGHT, UP repeated.
/// Reward +1 on reaching the rightmost cell, 0 elsewhere.
class CorridorWorld final : public Environment {
 public:
  enum Action : ActionId { kLeft = 0, kRight = 1, kUp = 2, kNoop = 3 };

  explicit CorridorWorld(std::size_t length = 24, std::size_t step_cap = 0,
                         double gamma = 0.99);

  std::size_t length() const { return length_; }
  bool is_gate(std::size_t cell) const;
  std::size_t goal() const { return length_ - 1; }

  std::vector<double> features(StateId s) const override;
  std::unique_ptr<Environment> clone() const override;

 protected:
  StateId initial_state(std::uint64_t seed) const override;
  Outcome advance(StateId s, ActionId a) const override;

 private:
  std::size_t length_;
};

/// n x n board; each square changes colour the first time the agent steps
/// onto it (+1). The start square begins uncoloured, so the best return is
/// n * n. The episode ends when every square is coloured.
class MiniQbertWorld final : public Environment {
 public:
  enum Action : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

  explicit MiniQbertWorld(std::size_t side = 4, std::size_t step_cap = 200,
                          double gamma = 0.99);

  std::size_t side() const { return side_; }
  std::size_t squares() const { return side_ * side_; }

  struct Board {
    std::size_t position;    // row * side + col
    std::uint64_t coloured;  // bit per square
  };
  Board decode(StateId s) const;
  StateId encode(const Board& board) const;

  std::vector<double> features(StateId s) const override;
  std::unique_ptr<Environment> clone() const override;

 protected:
  StateId initial_state(std::uint64_t seed) const override;
  Outcome advance(StateId s, ActionId a) const override;

 private:
  std::size_t side_;
};

/// "corridor", "corridor:<L>", "corridor:<L>:<cap>", "qbert", "qbert:<n>",
/// "qbert:<n>:<cap>".
std::unique_ptr<Environment> make_environment(std::string_view id, double gamma = 0.99);

/// Element of the routine-augmented action space: a primitive action or an
/// index into a routine library.
struct ExtendedAction {
  enum class Kind { kPrimitive, kRoutine };
  Kind kind = Kind::kPrimitive;
  std::size_t index = 0;

  static ExtendedAction primitive(ActionId a) {
    return {Kind::kPrimitive, static_cast<std::size_t>(a)};
  }
  static ExtendedAction routine(std::size_t i) { return {Kind::kRoutine, i}; }
  bool is_primitive() const { return kind == Kind::kPrimitive; }

  friend bool operator==(const ExtendedAction&, const ExtendedAction&) = default;
};

/// Flat indexing of A ∪ L: primitives first, then library routines.
class ExtendedActionSpace {
 public:
  ExtendedActionSpace(std::size_t primitive_count, std::vector<Routine> routines);

  std::size_t size() const { return primitive_count_ + routines_.size(); }
  std::size_t primitive_count() const { return primitive_count_; }
  std::size_t routine_count() const { return routines_.size(); }
  const std::vector<Routine>& routines() const { return routines_; }

  ExtendedAction at(std::size_t flat) const;
  std::size_t flat(const ExtendedAction& ea) const;
  /// Nominal length: 1 for primitives.
  std::size_t length(const ExtendedAction& ea) const;
  ActionSequence primitives(const ExtendedAction& ea) const;

 private:
  std::size_t primitive_count_;
  std::vector<Routine> routines_;
};

struct RoutineOutcome {
  StateId s_start = 0;
  StateId s_end = 0;
  double discounted_reward = 0.0;  // sum_i gamma^i r_i over executed steps
  double discount = 1.0;           // gamma^executed
  std::size_t executed = 0;
  bool terminated = false;
  std::vector<Transition> inner;
};

/// Runs the primitives of `ea` in order, stopping early when the episode
/// ends. The discount uses the executed length.
RoutineOutcome step_extended(Environment& env, const ExtendedAction& ea,
                             const RoutineLibrary& library, double gamma);
RoutineOutcome step_extended(Environment& env, const ExtendedAction& ea,
                             const ExtendedActionSpace& space, double gamma);

/// gamma^n by repeated multiplication, the same way step_extended
/// accumulates discounts.
double discount_power(double gamma, std::size_t n);

struct Demonstration {
  std::string env_id;
  std::uint64_t seed = 0;
  std::size_t n_actions = 0;
  std::vector<Transition> transitions;

  double total_return() const;
  ActionSequence actions() const;
  /// State before step t, and the final state for t == size().
  StateId state_at(std::size_t t) const;

  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

using Policy = std::function<ActionId(StateId)>;

/// Rolls out one full episode of `policy` from reset(seed).
Demonstration record_demo(Environment& env, const Policy& policy, std::uint64_t seed);

/// Shortest-path expert for the corridor and nearest-uncoloured-square
/// expert for mini-Qbert.
Policy scripted_expert(const Environment& env);

/// With probability epsilon replaces the expert's action with a uniform
/// random one; the generator is owned by the returned policy.
Policy epsilon_degraded(Policy expert, double epsilon, std::size_t action_count,
                        std::uint64_t seed);

/// JSON Lines: header {"env","seed","n_actions"} then one transition per
/// line {"t","s","a","r","sn","done"}.
std::string to_jsonl(const Demonstration& demo);
Demonstration demo_from_jsonl(std::string_view text);
void save_demo(const Demonstration& demo, const std::string& path);
Demonstration load_demo(const std::string& path);

}  // namespace rapl
