#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "rapl/discovery.hpp"
#include "rapl/imitate.hpp"
#include "rapl/numeric.hpp"
#include "rapl/reinforce.hpp"

// Straightforward reimplementations used as oracles by the unit and
// acceptance tests.
namespace rapl::reference {

inline std::size_t edit_distance_oracle(const ActionSequence& a, const ActionSequence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) {
    if (i == 0) return j;
    if (j == 0) return i;
    const auto key = std::make_pair(i, j);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t sub = d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
    const std::size_t best = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, sub});
    memo[key] = best;
    return best;
  };
  return d(a.size(), b.size());
}

inline std::size_t frequency_oracle(const ActionSequence& p, const ActionSequence& x) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (p.size() <= x.size() && i + p.size() <= x.size()) {
    if (std::equal(p.begin(), p.end(), x.begin() + static_cast<std::ptrdiff_t>(i))) {
      ++count;
      i += p.size();
    } else {
      ++i;
    }
  }
  return count;
}

// Literal replay: rank, then for every pair closer than alpha drop the
// lower-ranked one, then keep the top K.
inline std::vector<ActionSequence> select_oracle(std::vector<ActionSequence> candidates,
                                          const ActionSequence& x, const DiscoveryParams& p) {
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  struct Item {
    ActionSequence seq;
    double score;
    bool alive = true;
  };
  std::vector<Item> items;
  for (auto& c : candidates) {
    items.push_back({c, static_cast<double>(frequency_oracle(c, x)) +
                            p.lambda_length * static_cast<double>(c.size())});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.seq.size() != b.seq.size()) return a.seq.size() > b.seq.size();
    return a.seq < b.seq;
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].alive) continue;
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (items[j].alive && edit_distance_oracle(items[i].seq, items[j].seq) < p.alpha) {
        items[j].alive = false;
      }
    }
  }
  std::vector<ActionSequence> out;
  for (const auto& it : items) {
    if (it.alive && out.size() < p.k) out.push_back(it.seq);
  }
  return out;
}

// Primitive-level N'-step return over the flattened inner transitions.
inline double flattened_advantage(const RolloutSegment& seg, std::size_t from, const ValueFn& v,
                           double gamma) {
  std::vector<Transition> flat;
  for (std::size_t i = from; i < seg.steps.size(); ++i) {
    flat.insert(flat.end(), seg.steps[i].inner.begin(), seg.steps[i].inner.end());
  }
  double ret = 0.0;
  for (std::size_t k = 0; k < flat.size(); ++k) ret += std::pow(gamma, static_cast<double>(k)) * flat[k].r;
  if (!seg.terminal()) ret += std::pow(gamma, static_cast<double>(flat.size())) * v(flat.back().s_next);
  return ret - v(seg.steps[from].s);
}

// Plain SQIL written directly over primitive actions.
struct PlainSqil {
  std::map<StateId, std::vector<double>> q;
  std::vector<CurveRow> curve;
};

inline PlainSqil plain_sqil_reference(Environment& env, const Demonstration& demo, const SqilConfig& c) {
  const std::size_t n = env.action_count();
  std::mt19937_64 rng(c.seed);
  PlainSqil out;
  const auto row = [&](StateId s) {
    const auto it = out.q.find(s);
    return it == out.q.end() ? std::vector<double>(n, 0.0) : it->second;
  };
  struct Item {
    StateId s;
    std::size_t a;
    StateId sn;
    bool done;
  };
  std::vector<Item> demo_items;
  for (const auto& tr : demo.transitions) {
    demo_items.push_back({tr.s, static_cast<std::size_t>(tr.a), tr.s_next, tr.done});
  }
  std::vector<Item> samples;
  const std::size_t half = std::max<std::size_t>(1, c.batch_size / 2);
  const auto actions = demo.actions();
  std::size_t steps = 0;
  for (std::size_t episode = 0; episode < c.episodes; ++episode) {
    StateId s = env.reset(demo.seed);
    double ret = 0.0;
    ActionSequence taken;
    while (!env.finished()) {
      const auto q_s = row(s);
      const auto probs = softmax(q_s, c.temperature);
      const auto a = sample_categorical(probs, rng);
      const auto tr = env.step(static_cast<ActionId>(a));
      samples.push_back({s, a, tr.s_next, tr.done});
      ret += tr.r;
      taken.push_back(tr.a);
      ++steps;
      s = tr.s_next;
      for (std::size_t u = 0; u < c.updates_per_step; ++u) {
        std::vector<Item> db(half), sb(half);
        std::uniform_int_distribution<std::size_t> pd(0, demo_items.size() - 1);
        for (auto& e : db) e = demo_items[pd(rng)];
        std::uniform_int_distribution<std::size_t> ps(0, samples.size() - 1);
        for (auto& e : sb) e = samples[ps(rng)];
        std::map<std::pair<StateId, std::size_t>, double> grad;
        const auto add = [&](const std::vector<Item>& batch, double r, double w) {
          const double scale = 2.0 * w / static_cast<double>(batch.size());
          for (const auto& e : batch) {
            const auto next = row(e.sn);
            const double target = e.done ? r : r + c.gamma * log_sum_exp(next);
            grad[{e.s, e.a}] += scale * (row(e.s)[e.a] - target);
          }
        };
        add(db, 1.0, 1.0);
        add(sb, 0.0, c.lambda_sample);
        for (const auto& [key, g] : grad) {
          auto& r = out.q.try_emplace(key.first, n, 0.0).first->second;
          r[key.second] -= c.learning_rate * g;
        }
      }
    }
    out.curve.push_back({episode, steps, ret, alignment_score(actions, taken)});
  }
  return out;
}

// Plain A2C written directly over primitive actions.
struct PlainA2c {
  std::map<StateId, std::vector<double>> logits;
  std::map<StateId, double> values;
  std::vector<CurveRow> curve;
};

inline PlainA2c plain_a2c_reference(Environment& env, const A2cConfig& c) {
  const std::size_t n_actions = env.action_count();
  PlainA2c m;
  const auto z_of = [&](StateId s) {
    const auto it = m.logits.find(s);
    return it == m.logits.end() ? std::vector<double>(n_actions, 0.0) : it->second;
  };
  const auto v_of = [&](StateId s) {
    const auto it = m.values.find(s);
    return it == m.values.end() ? 0.0 : it->second;
  };
  std::mt19937_64 rng(c.seed);
  std::size_t total = 0, episode = 0;
  double ret = 0.0;
  StateId s = env.reset(c.seed);
  while (total < c.step_budget) {
    std::vector<Transition> seg;
    while (seg.size() < c.horizon && !env.finished() && total < c.step_budget) {
      const auto z = z_of(s);
      const auto probs = softmax(z);
      const auto a = sample_categorical(probs, rng);
      const auto tr = env.step(static_cast<ActionId>(a));
      seg.push_back(tr);
      ret += tr.r;
      ++total;
      s = tr.s_next;
    }
    const std::size_t n = seg.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::map<StateId, std::vector<double>> g_logits;
    std::map<StateId, double> g_values;
    for (std::size_t i = 0; i < n; ++i) {
      double g = 0.0, d = 1.0;
      for (std::size_t k = i; k < n; ++k) {
        g += d * seg[k].r;
        d *= c.gamma;
      }
      const double target = g + (seg.back().done ? 0.0 : d * v_of(seg.back().s_next));
      const double adv = target - v_of(seg[i].s);
      const auto z = z_of(seg[i].s);
      const double lse = log_sum_exp(z);
      std::vector<double> pi(n_actions), log_pi(n_actions);
      double neg_entropy = 0.0;
      for (std::size_t k = 0; k < n_actions; ++k) {
        log_pi[k] = z[k] - lse;
        pi[k] = std::exp(log_pi[k]);
        neg_entropy += pi[k] * log_pi[k];
      }
      auto& gl = g_logits[seg[i].s];
      if (gl.empty()) gl.assign(n_actions, 0.0);
      for (std::size_t k = 0; k < n_actions; ++k) {
        const double indicator = static_cast<ActionId>(k) == seg[i].a ? 1.0 : 0.0;
        gl[k] += inv_n * (-adv * (indicator - pi[k]) +
                          c.lambda_entropy * pi[k] * (log_pi[k] - neg_entropy));
      }
      g_values[seg[i].s] += inv_n * c.lambda_value * 2.0 * adv * -1.0;
    }
    for (const auto& [st, g] : g_logits) {
      auto& z = m.logits.try_emplace(st, n_actions, 0.0).first->second;
      for (std::size_t k = 0; k < n_actions; ++k) z[k] -= c.learning_rate * g[k];
    }
    for (const auto& [st, g] : g_values) m.values[st] -= c.learning_rate * g;
    if (env.finished()) {
      m.curve.push_back({episode++, total, ret, 0.0});
      ret = 0.0;
      s = env.reset(c.seed);
    }
  }
  return m;
}

// Random segment, window and tabular parameters for gradient checks.
struct Instance {
  ActorCritic model = ActorCritic::tabular(1);
  RolloutSegment seg;
  std::vector<Transition> window;
  A2cConfig config;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t actions, std::size_t states) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<StateId> state(0, states - 1);
  std::uniform_int_distribution<std::size_t> action(0, actions - 1);
  std::uniform_int_distribution<std::size_t> steps(1, 5);
  std::uniform_int_distribution<std::size_t> length(1, 3);
  std::bernoulli_distribution coin(0.3);
  Instance inst;
  inst.config.gamma = 0.9;
  inst.config.lambda_entropy = 0.05;
  inst.config.mode = coin(rng) ? A2cMode::kMacro : A2cMode::kRapl;
  inst.model = ActorCritic::tabular(actions);
  for (StateId s = 0; s < states; ++s) {
    for (std::size_t k = 0; k < actions; ++k) inst.model.logit_param(s, k) = noise(rng);
    inst.model.value_param(s) = noise(rng);
  }
  const std::size_t n = steps(rng);
  const bool terminal = coin(rng);
  for (std::size_t i = 0; i < n; ++i) {
    ExtendedStep step;
    step.s = state(rng);
    step.action = action(rng);
    step.length = length(rng);
    double weight = 1.0;
    StateId at = step.s;
    for (std::size_t j = 0; j < step.length; ++j) {
      const StateId next = state(rng);
      const double r = coin(rng) ? noise(rng) : 0.0;
      step.inner.push_back({0, at, 0, r, next, false});
      step.reward += weight * r;
      step.reward_sum += r;
      weight *= inst.config.gamma;
      at = next;
    }
    step.discount = weight;
    step.s_next = at;
    inst.seg.steps.push_back(step);
  }
  if (terminal) {
    inst.seg.steps.back().terminal = true;
    inst.seg.steps.back().inner.back().done = true;
  }
  const auto flat = inst.seg.flattened();
  std::uniform_int_distribution<std::size_t> start(0, flat.size() - 1);
  const auto s0 = start(rng);
  const auto len = std::min<std::size_t>(inst.config.horizon, flat.size() - s0);
  inst.window.assign(flat.begin() + static_cast<std::ptrdiff_t>(s0),
                     flat.begin() + static_cast<std::ptrdiff_t>(s0 + len));
  return inst;
}

inline bool gradient_close(double analytic, double numeric, double* worst) {
  const double err = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale > 1e-6) *worst = std::max(*worst, err / scale);
  return err < 1e-8 || err <= 1e-4 * scale;
}

}  // namespace rapl::reference
