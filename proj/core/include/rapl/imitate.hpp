#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rapl/discovery.hpp"
#include "rapl/metrics.hpp"
#include "rapl/world.hpp"

namespace rapl {

/// Tabular soft-Q over the routine-augmented action space; untouched
/// entries read as 0.
class SoftQ {
 public:
  SoftQ(std::size_t action_space_size, double gamma);

  std::size_t action_space_size() const { return size_; }
  double gamma() const { return gamma_; }

  double value(StateId s, std::size_t action) const;
  /// Q(s, .) for every extended action.
  std::vector<double> row(StateId s) const;
  double& at(StateId s, std::size_t action);

  /// log sum_a exp Q(s, a).
  double soft_value(StateId s) const;
  std::vector<double> policy(StateId s, double temperature = 1.0) const;
  std::size_t greedy(StateId s) const;

  const std::unordered_map<StateId, std::vector<double>>& table() const { return table_; }

  friend bool operator==(const SoftQ&, const SoftQ&) = default;

 private:
  std::size_t size_;
  double gamma_;
  std::unordered_map<StateId, std::vector<double>> table_;
};

/// (s, extended action, s') with the length used for discounting: nominal
/// for demonstration entries, executed for sampled ones.
struct SqilEntry {
  StateId s = 0;
  std::size_t action = 0;  // flat index into the extended action space
  StateId s_next = 0;
  std::size_t length = 1;
  bool terminal = false;
  double env_reward = 0.0;  // sum_i gamma^i r_i observed in the environment

  friend bool operator==(const SqilEntry&, const SqilEntry&) = default;
};

struct SqilDatasets {
  std::vector<SqilEntry> prim;     // demonstration, primitive level (r = 1)
  std::vector<SqilEntry> routine;  // demonstration, routine level (r = 1)
  std::vector<SqilEntry> sample;   // explored transitions (r = 0)

  std::vector<SqilEntry> demo_union() const;
};

inline constexpr double kDemoReward = 1.0;
inline constexpr double kSampleReward = 0.0;

std::vector<SqilEntry> build_primitive_demo(const Demonstration& demo);

/// (s_t, rho, s_{t+|rho|}) for every non-overlapping occurrence of every
/// routine, found with the same greedy scan as frequency(). Routine i maps
/// to flat index demo.n_actions + i.
std::vector<SqilEntry> build_routine_demo(const Demonstration& demo,
                                          const RoutineLibrary& library, double gamma);

/// sum_{tau < length} gamma^tau * r.
double soft_return(double r, std::size_t length, double gamma);

/// soft_return(r, length) + gamma^length * log sum exp Q(s_next, .), with no
/// bootstrap for a terminal s_next.
double sq_target(const SoftQ& q, std::size_t length, StateId s_next, bool terminal, double r,
                 double gamma);
double sq_target(const SoftQ& q, const SqilEntry& entry, double r);

/// Mean squared soft Bellman residual; throws Error(kEmptyDataset).
double soft_bellman_error(const SoftQ& q, std::span<const SqilEntry> dataset, double r);

/// delta^2(prim ∪ routine, 1) + lambda_sample * delta^2(sample, 0), one
/// normalisation over the demonstration union; empty sample adds 0.
double sqil_loss(const SoftQ& q, const SqilDatasets& datasets, double lambda_sample);

/// One SGD step on delta^2(demo_batch, 1) + lambda * delta^2(sample_batch, 0)
/// with targets held fixed at their pre-step values.
void sgd_step(SoftQ& q, std::span<const SqilEntry> demo_batch,
              std::span<const SqilEntry> sample_batch, double lambda_sample,
              double learning_rate);

struct SqilConfig {
  double lambda_sample = 1.0;
  double gamma = 0.99;
  double learning_rate = 0.1;
  double temperature = 1.0;
  std::size_t episodes = 200;      // environment rollouts
  std::size_t batch_size = 32;     // half demonstration, half sampled
  std::size_t updates_per_step = 1;
  std::uint64_t seed = 0;
};

struct SqilResult {
  SoftQ q;
  ExtendedActionSpace space;
  SqilDatasets datasets;
  std::vector<CurveRow> curve;
};

/// Alternates soft-policy rollouts (extended actions via step_extended) with
/// balanced mini-batch SGD on the SQIL loss. Throws Error(kEnvMismatch) when
/// the demonstration came from a different world.
SqilResult train_sqil(Environment& env, const Demonstration& demo, const RoutineLibrary& library,
                      const SqilConfig& config);

/// {"n_actions", "routines", "greedy": {"<state>": flat_index}} over the
/// states present in the table.
std::string greedy_policy_json(const SoftQ& q, const ExtendedActionSpace& space);

}  // namespace rapl
