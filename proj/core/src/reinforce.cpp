#include "rapl/reinforce.hpp"

#include <cmath>
#include <memory>

#include "json.hpp"
#include "rapl/numeric.hpp"

namespace rapl {

std::string_view to_string(A2cMode mode) {
  return mode == A2cMode::kRapl ? "rapl" : "macro";
}

A2cMode parse_a2c_mode(std::string_view text) {
  if (text == "rapl") return A2cMode::kRapl;
  if (text == "macro") return A2cMode::kMacro;
  throw Error(ErrorCode::kInvalidArgument, "unknown A2C mode: " + std::string(text));
}

std::string_view to_string(Representation rep) {
  return rep == Representation::kTabular ? "tabular" : "linear";
}

Representation parse_representation(std::string_view text) {
  if (text == "tabular") return Representation::kTabular;
  if (text == "linear") return Representation::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "unknown representation: " + std::string(text));
}

// ActorCritic -------------------------------------------------------------------

ActorCritic ActorCritic::tabular(std::size_t action_space_size) {
  if (action_space_size == 0) throw Error(ErrorCode::kInvalidArgument, "empty action space");
  return ActorCritic(Representation::kTabular, action_space_size);
}

ActorCritic ActorCritic::linear(std::size_t action_space_size, std::size_t feature_dim,
                                FeatureFn features) {
  if (action_space_size == 0 || feature_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "linear actor-critic needs actions and features");
  }
  ActorCritic ac(Representation::kLinear, action_space_size);
  ac.feature_dim_ = feature_dim;
  ac.features_ = std::move(features);
  ac.policy_weights_.assign(feature_dim * action_space_size, 0.0);
  ac.value_weights_.assign(feature_dim, 0.0);
  return ac;
}

std::vector<double> ActorCritic::logits(StateId s) const {
  if (rep_ == Representation::kTabular) {
    const auto it = logit_table_.find(s);
    return it == logit_table_.end() ? std::vector<double>(actions_, 0.0) : it->second;
  }
  const auto phi = features_(s);
  std::vector<double> z(actions_, 0.0);
  for (std::size_t f = 0; f < feature_dim_; ++f) {
    if (phi[f] == 0.0) continue;
    for (std::size_t k = 0; k < actions_; ++k) z[k] += phi[f] * policy_weights_[f * actions_ + k];
  }
  return z;
}

std::vector<double> ActorCritic::policy(StateId s) const {
  const auto z = logits(s);
  return softmax(z);
}

double ActorCritic::value(StateId s) const {
  if (rep_ == Representation::kTabular) {
    const auto it = value_table_.find(s);
    return it == value_table_.end() ? 0.0 : it->second;
  }
  const auto phi = features_(s);
  double v = 0.0;
  for (std::size_t f = 0; f < feature_dim_; ++f) v += phi[f] * value_weights_[f];
  return v;
}

double& ActorCritic::logit_param(StateId s, std::size_t action) {
  auto [it, inserted] = logit_table_.try_emplace(s, actions_, 0.0);
  return it->second.at(action);
}

double& ActorCritic::value_param(StateId s) { return value_table_[s]; }

void ActorCritic::apply(const A2cGradient& grad, double learning_rate) {
  if (rep_ == Representation::kTabular) {
    for (const auto& [s, g] : grad.logits) {
      for (std::size_t k = 0; k < actions_; ++k) logit_param(s, k) -= learning_rate * g[k];
    }
    for (const auto& [s, g] : grad.values) value_param(s) -= learning_rate * g;
    return;
  }
  for (const auto& [s, g] : grad.logits) {
    const auto phi = features_(s);
    for (std::size_t f = 0; f < feature_dim_; ++f) {
      if (phi[f] == 0.0) continue;
      for (std::size_t k = 0; k < actions_; ++k) {
        policy_weights_[f * actions_ + k] -= learning_rate * phi[f] * g[k];
      }
    }
  }
  for (const auto& [s, g] : grad.values) {
    const auto phi = features_(s);
    for (std::size_t f = 0; f < feature_dim_; ++f) value_weights_[f] -= learning_rate * phi[f] * g;
  }
}

bool ActorCritic::same_parameters(const ActorCritic& other) const {
  return rep_ == other.rep_ && actions_ == other.actions_ &&
         logit_table_ == other.logit_table_ && value_table_ == other.value_table_ &&
         policy_weights_ == other.policy_weights_ && value_weights_ == other.value_weights_;
}

// Segments and advantages ---------------------------------------------------------

ExtendedStep make_extended_step(std::size_t action, const RoutineOutcome& outcome) {
  ExtendedStep step;
  step.s = outcome.s_start;
  step.action = action;
  step.reward = outcome.discounted_reward;
  for (const auto& tr : outcome.inner) step.reward_sum += tr.r;
  step.discount = outcome.discount;
  step.length = outcome.executed;
  step.s_next = outcome.s_end;
  step.terminal = outcome.terminated;
  step.inner = outcome.inner;
  return step;
}

std::vector<std::int64_t> RolloutSegment::boundaries() const {
  std::vector<std::int64_t> t{t0};
  for (const auto& step : steps) t.push_back(t.back() + static_cast<std::int64_t>(step.length));
  return t;
}

std::vector<Transition> RolloutSegment::flattened() const {
  std::vector<Transition> all;
  for (const auto& step : steps) all.insert(all.end(), step.inner.begin(), step.inner.end());
  return all;
}

double routine_return(const RolloutSegment& seg, const ValueFn& value, std::size_t from) {
  if (from >= seg.steps.size()) {
    throw Error(ErrorCode::kInvalidArgument, "return start outside the segment");
  }
  double ret = 0.0;
  double discount = 1.0;
  for (std::size_t i = from; i < seg.steps.size(); ++i) {
    ret += discount * seg.steps[i].reward;
    discount *= seg.steps[i].discount;  // gamma^{|rho|} per step
  }
  const double bootstrap = seg.terminal() ? 0.0 : discount * value(seg.steps.back().s_next);
  return ret + bootstrap;
}

double macro_return(const RolloutSegment& seg, const ValueFn& value, double gamma,
                    std::size_t from) {
  if (from >= seg.steps.size()) {
    throw Error(ErrorCode::kInvalidArgument, "return start outside the segment");
  }
  double ret = 0.0;
  double discount = 1.0;
  for (std::size_t i = from; i < seg.steps.size(); ++i) {
    ret += discount * seg.steps[i].reward_sum;
    discount *= gamma;
  }
  const double bootstrap = seg.terminal() ? 0.0 : discount * value(seg.steps.back().s_next);
  return ret + bootstrap;
}

double primitive_return(std::span<const Transition> window, const ValueFn& value, double gamma) {
  if (window.empty()) throw Error(ErrorCode::kEmptyDataset, "empty primitive window");
  double ret = 0.0;
  double discount = 1.0;
  for (const auto& tr : window) {
    ret += discount * tr.r;
    discount *= gamma;
  }
  const double bootstrap = window.back().done ? 0.0 : discount * value(window.back().s_next);
  return ret + bootstrap;
}

double routine_advantage(const RolloutSegment& seg, const ValueFn& value, std::size_t from) {
  return routine_return(seg, value, from) - value(seg.steps[from].s);
}

double macro_advantage(const RolloutSegment& seg, const ValueFn& value, double gamma,
                       std::size_t from) {
  return macro_return(seg, value, gamma, from) - value(seg.steps[from].s);
}

double primitive_advantage(std::span<const Transition> window, const ValueFn& value,
                           double gamma) {
  return primitive_return(window, value, gamma) - value(window.front().s);
}

std::optional<WindowSpan> sample_window(const RolloutSegment& seg, std::size_t horizon,
                                        std::mt19937_64& rng) {
  std::size_t total = 0;
  for (const auto& step : seg.steps) total += step.inner.size();
  if (total == 0 || horizon == 0) return std::nullopt;
  if (total <= horizon) return WindowSpan{0, total};
  std::uniform_int_distribution<std::size_t> start(0, total - horizon);
  return WindowSpan{start(rng), horizon};
}

// Loss ------------------------------------------------------------------------------

LossBreakdown a2c_loss(const ActorCritic& params, const ActorCritic& targets,
                       const RolloutSegment& seg, std::span<const Transition> window,
                       const A2cConfig& config, A2cGradient* grad) {
  LossBreakdown loss;
  const std::size_t n = seg.steps.size();
  if (n == 0) return loss;
  const ValueFn target_value = [&targets](StateId s) { return targets.value(s); };
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool macro = config.mode == A2cMode::kMacro;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& step = seg.steps[i];
    const double ret = macro ? macro_return(seg, target_value, config.gamma, i)
                             : routine_return(seg, target_value, i);
    // The policy term sees a constant advantage; the value term differentiates
    // V(s_i) only, with the bootstrap taken from targets.
    const double fixed_advantage = ret - targets.value(step.s);
    const double advantage = ret - params.value(step.s);

    const auto z = params.logits(step.s);
    const double lse = log_sum_exp(z);
    std::vector<double> pi(z.size());
    std::vector<double> log_pi(z.size());
    double neg_entropy = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      log_pi[k] = z[k] - lse;
      pi[k] = std::exp(log_pi[k]);
      neg_entropy += pi[k] * log_pi[k];
    }

    loss.policy += inv_n * (-fixed_advantage * log_pi[step.action]);
    loss.entropy += inv_n * neg_entropy;
    loss.value_routine += inv_n * advantage * advantage;

    if (grad != nullptr) {
      auto& g = grad->logits[step.s];
      if (g.empty()) g.assign(z.size(), 0.0);
      for (std::size_t k = 0; k < z.size(); ++k) {
        const double indicator = k == step.action ? 1.0 : 0.0;
        g[k] += inv_n * (-fixed_advantage * (indicator - pi[k]) +
                         config.lambda_entropy * pi[k] * (log_pi[k] - neg_entropy));
      }
      grad->values[step.s] += inv_n * config.lambda_value * 2.0 * advantage * -1.0;
    }
  }

  if (!macro && !window.empty()) {
    const auto& head = window.front();
    const double advantage =
        primitive_return(window, target_value, config.gamma) - params.value(head.s);
    loss.value_prim = advantage * advantage;
    if (grad != nullptr) {
      grad->values[head.s] +=
          config.lambda_value * config.lambda_prim * 2.0 * advantage * -1.0;
    }
  }

  loss.total = loss.policy + config.lambda_entropy * loss.entropy +
               config.lambda_value * (loss.value_routine + config.lambda_prim * loss.value_prim);
  return loss;
}

// Training ----------------------------------------------------------------------------

A2cResult train_a2c(Environment& env, const RoutineLibrary& library, const A2cConfig& config,
                    std::span<const ActionId> demo_actions, const SegmentObserver& observer) {
  if (config.horizon == 0) throw Error(ErrorCode::kInvalidArgument, "horizon N must be >= 1");
  if (config.lambda_value < 0 || config.lambda_prim < 0 || config.lambda_entropy < 0) {
    throw Error(ErrorCode::kInvalidArgument, "balancing factors must be non-negative");
  }

  std::mt19937_64 rng(config.seed);
  ExtendedActionSpace space(env.action_count(), library.routines);
  std::shared_ptr<const Environment> feature_source = env.clone();
  ActorCritic model =
      config.representation == Representation::kTabular
          ? ActorCritic::tabular(space.size())
          : ActorCritic::linear(space.size(), env.spec().feature_dim,
                                [feature_source](StateId s) { return feature_source->features(s); });
  const bool use_window = config.mode == A2cMode::kRapl && !library.empty();

  std::vector<CurveRow> curve;
  std::size_t total = 0;
  std::size_t episode = 0;
  std::size_t segments = 0;
  double ret = 0.0;
  ActionSequence taken;
  StateId s = env.reset(config.seed);

  RolloutSegment seg;
  while (total < config.step_budget) {
    seg.t0 = env.elapsed();
    seg.steps.clear();
    while (seg.steps.size() < config.horizon && !env.finished() && total < config.step_budget) {
      const auto probs = model.policy(s);
      const auto choice = sample_categorical(probs, rng);
      const auto outcome = step_extended(env, space.at(choice), space, config.gamma);
      for (const auto& tr : outcome.inner) {
        ret += tr.r;
        taken.push_back(tr.a);
      }
      total += outcome.executed;
      s = outcome.s_end;
      seg.steps.push_back(make_extended_step(choice, outcome));
    }
    if (observer) observer(seg, model);

    std::vector<Transition> window;
    if (use_window) {
      if (const auto span = sample_window(seg, config.horizon, rng)) {
        const auto flat = seg.flattened();
        window.assign(flat.begin() + static_cast<std::ptrdiff_t>(span->start),
                      flat.begin() + static_cast<std::ptrdiff_t>(span->start + span->length));
      }
    }
    A2cGradient grad;
    a2c_loss(model, model, seg, window, config, &grad);
    model.apply(grad, config.learning_rate);
    ++segments;

    if (env.finished()) {
      const double alignment =
          demo_actions.empty() ? 0.0 : alignment_score(demo_actions, taken);
      curve.push_back({episode++, total, ret, alignment});
      ret = 0.0;
      taken.clear();
      s = env.reset(config.seed);
    }
  }
  return A2cResult{std::move(model), std::move(space), std::move(curve), segments};
}

std::string policy_json(const ActorCritic& model, const ExtendedActionSpace& space) {
  nlohmann::ordered_json doc;
  doc["n_actions"] = space.primitive_count();
  doc["routines"] = nlohmann::ordered_json::array();
  for (const auto& r : space.routines()) doc["routines"].push_back(r.actions);
  doc["representation"] = std::string(to_string(model.representation()));
  if (model.representation() == Representation::kTabular) {
    std::map<StateId, std::vector<double>> sorted(model.logit_table().begin(),
                                                  model.logit_table().end());
    auto& logits = doc["logits"] = nlohmann::ordered_json::object();
    for (const auto& [s, z] : sorted) logits[std::to_string(s)] = z;
  } else {
    doc["feature_dim"] = model.feature_dim();
    doc["policy_weights"] = model.policy_weights();
    doc["value_weights"] = model.value_weights();
  }
  return doc.dump(2) + "\n";
}

}  // namespace rapl
