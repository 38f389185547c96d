#include "rapl/imitate.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "json.hpp"
#include "rapl/numeric.hpp"

namespace rapl {

SoftQ::SoftQ(std::size_t action_space_size, double gamma)
    : size_(action_space_size), gamma_(gamma) {
  if (size_ == 0) throw Error(ErrorCode::kInvalidArgument, "empty action space");
}

double SoftQ::value(StateId s, std::size_t action) const {
  const auto it = table_.find(s);
  return it == table_.end() ? 0.0 : it->second.at(action);
}

std::vector<double> SoftQ::row(StateId s) const {
  const auto it = table_.find(s);
  return it == table_.end() ? std::vector<double>(size_, 0.0) : it->second;
}

double& SoftQ::at(StateId s, std::size_t action) {
  auto [it, inserted] = table_.try_emplace(s, size_, 0.0);
  return it->second.at(action);
}

double SoftQ::soft_value(StateId s) const {
  const auto q = row(s);
  return log_sum_exp(q);
}

std::vector<double> SoftQ::policy(StateId s, double temperature) const {
  const auto q = row(s);
  return softmax(q, temperature);
}

std::size_t SoftQ::greedy(StateId s) const {
  const auto q = row(s);
  return argmax(q);
}

std::vector<SqilEntry> SqilDatasets::demo_union() const {
  std::vector<SqilEntry> all = prim;
  all.insert(all.end(), routine.begin(), routine.end());
  return all;
}

std::vector<SqilEntry> build_primitive_demo(const Demonstration& demo) {
  std::vector<SqilEntry> out;
  out.reserve(demo.transitions.size());
  for (const auto& tr : demo.transitions) {
    out.push_back({tr.s, static_cast<std::size_t>(tr.a), tr.s_next, 1, tr.done, tr.r});
  }
  return out;
}

std::vector<SqilEntry> build_routine_demo(const Demonstration& demo,
                                          const RoutineLibrary& library, double gamma) {
  std::vector<SqilEntry> out;
  const auto actions = demo.actions();
  for (std::size_t i = 0; i < library.routines.size(); ++i) {
    const auto& routine = library.routines[i];
    for (const auto t : occurrences(routine.actions, actions)) {
      const auto end = t + routine.length();
      double observed = 0.0;
      double weight = 1.0;
      for (std::size_t k = t; k < end; ++k) {
        observed += weight * demo.transitions[k].r;
        weight *= gamma;
      }
      out.push_back({demo.state_at(t), demo.n_actions + i, demo.state_at(end),
                     routine.length(), demo.transitions[end - 1].done, observed});
    }
  }
  return out;
}

double soft_return(double r, std::size_t length, double gamma) {
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t tau = 0; tau < length; ++tau) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

double sq_target(const SoftQ& q, std::size_t length, StateId s_next, bool terminal, double r,
                 double gamma) {
  const double reward = soft_return(r, length, gamma);
  if (terminal) return reward;
  return reward + discount_power(gamma, length) * q.soft_value(s_next);
}

double sq_target(const SoftQ& q, const SqilEntry& entry, double r) {
  return sq_target(q, entry.length, entry.s_next, entry.terminal, r, q.gamma());
}

double soft_bellman_error(const SoftQ& q, std::span<const SqilEntry> dataset, double r) {
  if (dataset.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "soft Bellman error over an empty dataset");
  }
  double total = 0.0;
  for (const auto& e : dataset) {
    const double residual = q.value(e.s, e.action) - sq_target(q, e, r);
    total += residual * residual;
  }
  return total / static_cast<double>(dataset.size());
}

double sqil_loss(const SoftQ& q, const SqilDatasets& datasets, double lambda_sample) {
  const auto demo = datasets.demo_union();
  double loss = soft_bellman_error(q, demo, kDemoReward);
  if (!datasets.sample.empty()) {
    loss += lambda_sample * soft_bellman_error(q, datasets.sample, kSampleReward);
  }
  return loss;
}

void sgd_step(SoftQ& q, std::span<const SqilEntry> demo_batch,
              std::span<const SqilEntry> sample_batch, double lambda_sample,
              double learning_rate) {
  // Accumulate first so every target sees the pre-step table.
  std::map<std::pair<StateId, std::size_t>, double> grad;
  const auto accumulate = [&](std::span<const SqilEntry> batch, double r, double weight) {
    if (batch.empty()) return;
    const double scale = 2.0 * weight / static_cast<double>(batch.size());
    for (const auto& e : batch) {
      grad[{e.s, e.action}] += scale * (q.value(e.s, e.action) - sq_target(q, e, r));
    }
  };
  accumulate(demo_batch, kDemoReward, 1.0);
  accumulate(sample_batch, kSampleReward, lambda_sample);
  for (const auto& [key, g] : grad) q.at(key.first, key.second) -= learning_rate * g;
}

SqilResult train_sqil(Environment& env, const Demonstration& demo, const RoutineLibrary& library,
                      const SqilConfig& config) {
  if (demo.env_id != env.spec().env_id || demo.n_actions != env.action_count()) {
    throw Error(ErrorCode::kEnvMismatch, "demonstration recorded on " + demo.env_id +
                                             ", training on " + env.spec().env_id);
  }
  if (demo.transitions.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "demonstration has no transitions");
  }
  if (config.lambda_sample < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_sample must be non-negative");
  }

  std::mt19937_64 rng(config.seed);
  ExtendedActionSpace space(env.action_count(), library.routines);
  SoftQ q(space.size(), config.gamma);

  SqilDatasets datasets;
  datasets.prim = build_primitive_demo(demo);
  datasets.routine = build_routine_demo(demo, library, config.gamma);
  const auto demo_pool = datasets.demo_union();
  const auto demo_actions = demo.actions();

  const std::size_t half = std::max<std::size_t>(1, config.batch_size / 2);
  std::vector<SqilEntry> demo_batch(half);
  std::vector<SqilEntry> sample_batch;
  std::vector<CurveRow> curve;
  std::size_t total_steps = 0;

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    StateId s = env.reset(demo.seed);
    double ret = 0.0;
    ActionSequence taken;
    while (!env.finished()) {
      const auto probs = q.policy(s, config.temperature);
      const auto choice = sample_categorical(probs, rng);
      const auto outcome = step_extended(env, space.at(choice), space, config.gamma);
      datasets.sample.push_back({s, choice, outcome.s_end, outcome.executed,
                                 outcome.terminated, outcome.discounted_reward});
      for (const auto& tr : outcome.inner) {
        ret += tr.r;
        taken.push_back(tr.a);
      }
      total_steps += outcome.executed;
      s = outcome.s_end;

      for (std::size_t u = 0; u < config.updates_per_step; ++u) {
        std::uniform_int_distribution<std::size_t> pick_demo(0, demo_pool.size() - 1);
        for (auto& e : demo_batch) e = demo_pool[pick_demo(rng)];
        std::uniform_int_distribution<std::size_t> pick_sample(0, datasets.sample.size() - 1);
        sample_batch.resize(half);
        for (auto& e : sample_batch) e = datasets.sample[pick_sample(rng)];
        sgd_step(q, demo_batch, sample_batch, config.lambda_sample, config.learning_rate);
      }
    }
    curve.push_back({episode, total_steps, ret, alignment_score(demo_actions, taken)});
  }
  return SqilResult{std::move(q), std::move(space), std::move(datasets), std::move(curve)};
}

std::string greedy_policy_json(const SoftQ& q, const ExtendedActionSpace& space) {
  nlohmann::ordered_json doc;
  doc["n_actions"] = space.primitive_count();
  doc["routines"] = nlohmann::ordered_json::array();
  for (const auto& r : space.routines()) doc["routines"].push_back(r.actions);
  std::map<StateId, std::size_t> greedy;
  for (const auto& [s, row] : q.table()) greedy[s] = argmax(row);
  auto& out = doc["greedy"] = nlohmann::ordered_json::object();
  for (const auto& [s, a] : greedy) out[std::to_string(s)] = a;
  return doc.dump(2) + "\n";
}

}  // namespace rapl
