#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rapl/discovery.hpp"
#include "rapl/metrics.hpp"
#include "rapl/world.hpp"

namespace rapl {

enum class A2cMode {
  kRapl,   // discounted routine rewards, gamma^{|rho|} bootstraps, primitive windows
  kMacro,  // routines as black-box actions: summed rewards, gamma per decision
};

enum class Representation { kTabular, kLinear };

std::string_view to_string(A2cMode mode);
A2cMode parse_a2c_mode(std::string_view text);
std::string_view to_string(Representation rep);
Representation parse_representation(std::string_view text);

struct A2cConfig {
  std::size_t horizon = 5;  // N, extended steps per segment and primitive window length
  double lambda_value = 0.5;
  double lambda_prim = 1.0;
  double lambda_entropy = 0.01;
  double learning_rate = 7e-4;
  double gamma = 0.99;
  std::size_t step_budget = 50'000;  // primitive environment steps
  std::uint64_t seed = 0;
  A2cMode mode = A2cMode::kRapl;
  Representation representation = Representation::kTabular;
};

using FeatureFn = std::function<std::vector<double>(StateId)>;

/// Gradient expressed per state: dL/dlogits(s) and dL/dV(s). The parameter
/// layout (tabular or linear) maps it onto its own weights.
struct A2cGradient {
  std::map<StateId, std::vector<double>> logits;
  std::map<StateId, double> values;
};

/// Softmax policy and state-value function over the extended action space,
/// either one parameter per (state, action) or linear in state features.
class ActorCritic {
 public:
  static ActorCritic tabular(std::size_t action_space_size);
  static ActorCritic linear(std::size_t action_space_size, std::size_t feature_dim,
                            FeatureFn features);

  Representation representation() const { return rep_; }
  std::size_t action_space_size() const { return actions_; }

  std::vector<double> logits(StateId s) const;
  std::vector<double> policy(StateId s) const;
  double value(StateId s) const;

  void apply(const A2cGradient& grad, double learning_rate);

  /// Tabular parameters, created on first touch.
  double& logit_param(StateId s, std::size_t action);
  double& value_param(StateId s);
  const std::unordered_map<StateId, std::vector<double>>& logit_table() const {
    return logit_table_;
  }
  const std::unordered_map<StateId, double>& value_table() const { return value_table_; }

  /// Linear parameters: policy weights are row-major feature_dim x |actions|.
  std::vector<double>& policy_weights() { return policy_weights_; }
  std::vector<double>& value_weights() { return value_weights_; }
  const std::vector<double>& policy_weights() const { return policy_weights_; }
  const std::vector<double>& value_weights() const { return value_weights_; }
  std::size_t feature_dim() const { return feature_dim_; }

  /// Equality of parameters (the feature function is not compared).
  bool same_parameters(const ActorCritic& other) const;

 private:
  ActorCritic(Representation rep, std::size_t actions) : rep_(rep), actions_(actions) {}

  Representation rep_;
  std::size_t actions_;
  std::unordered_map<StateId, std::vector<double>> logit_table_;
  std::unordered_map<StateId, double> value_table_;
  std::size_t feature_dim_ = 0;
  FeatureFn features_;
  std::vector<double> policy_weights_;
  std::vector<double> value_weights_;
};

/// One decision of the routine policy and everything it produced.
struct ExtendedStep {
  StateId s = 0;
  std::size_t action = 0;  // flat index into the extended action space
  double reward = 0.0;     // sum_tau gamma^tau r_tau over executed primitives
  double reward_sum = 0.0; // undiscounted sum, used by the MacroAction baseline
  double discount = 1.0;   // gamma^executed
  std::size_t length = 0;  // executed primitive steps
  StateId s_next = 0;
  bool terminal = false;
  std::vector<Transition> inner;
};

ExtendedStep make_extended_step(std::size_t action, const RoutineOutcome& outcome);

/// Up to N consecutive extended steps, cut at episode end.
struct RolloutSegment {
  std::int64_t t0 = 0;
  std::vector<ExtendedStep> steps;

  /// t_0, t_1, ..., t_N with t_i = t_0 + sum_{tau < i} |rho_tau|.
  std::vector<std::int64_t> boundaries() const;
  std::vector<Transition> flattened() const;
  bool terminal() const { return !steps.empty() && steps.back().terminal; }
};

using ValueFn = std::function<double(StateId)>;

/// sum_{i >= from} gamma^{t_i - t_from} R_i + gamma^{t_N - t_from} V(s_{t_N}),
/// using each step's gamma^{|rho|}; no bootstrap after a terminal step.
double routine_return(const RolloutSegment& seg, const ValueFn& value, std::size_t from = 0);

/// MacroAction semantics: undiscounted routine rewards, one factor of gamma
/// per decision.
double macro_return(const RolloutSegment& seg, const ValueFn& value, double gamma,
                    std::size_t from = 0);

/// sum_i gamma^i r_{t_j+i} + gamma^{len} V(s_{t_j+len}); no bootstrap when
/// the window ends the episode.
double primitive_return(std::span<const Transition> window, const ValueFn& value, double gamma);

/// The returns above minus V at the first state.
double routine_advantage(const RolloutSegment& seg, const ValueFn& value, std::size_t from = 0);
double macro_advantage(const RolloutSegment& seg, const ValueFn& value, double gamma,
                       std::size_t from = 0);
double primitive_advantage(std::span<const Transition> window, const ValueFn& value,
                           double gamma);

struct WindowSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Uniform start over windows of `horizon` primitives inside the segment;
/// the whole segment when it is shorter (only at episode end). nullopt for
/// an empty segment.
std::optional<WindowSpan> sample_window(const RolloutSegment& seg, std::size_t horizon,
                                        std::mt19937_64& rng);

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;
  double entropy = 0.0;
  double value_routine = 0.0;
  double value_prim = 0.0;
};

/// Segment loss
///   1/n sum_i [ -A_i log pi(a_i|s_i) + l_ent sum pi log pi + l_val A_i^2 ]
///   + l_val l_prim A_prim^2
/// where A_i is the routine-level advantage from step i. `params` carries the
/// parameters being differentiated; `targets` supplies the quantities held
/// constant: the advantage in the policy term and every bootstrap value.
/// Calling with params == targets gives the actual loss. In MACRO mode the
/// window is ignored and macro_advantage replaces routine_advantage.
LossBreakdown a2c_loss(const ActorCritic& params, const ActorCritic& targets,
                       const RolloutSegment& seg, std::span<const Transition> window,
                       const A2cConfig& config, A2cGradient* grad = nullptr);

struct A2cResult {
  ActorCritic model;
  ExtendedActionSpace space;
  std::vector<CurveRow> curve;
  std::size_t segments = 0;
};

/// Called after each segment is collected, before the update.
using SegmentObserver = std::function<void(const RolloutSegment&, const ActorCritic&)>;

/// On-policy loop: collect N extended steps, sample one primitive window
/// (RAPL mode with a non-empty library), apply the analytic gradient with
/// SGD. `demo_actions`, when given, feeds the alignment column.
A2cResult train_a2c(Environment& env, const RoutineLibrary& library, const A2cConfig& config,
                    std::span<const ActionId> demo_actions = {},
                    const SegmentObserver& observer = nullptr);

/// {"n_actions", "routines", "logits": {"<state>": [..]}} for tabular models;
/// linear models dump their weight matrices instead.
std::string policy_json(const ActorCritic& model, const ExtendedActionSpace& space);

}  // namespace rapl
