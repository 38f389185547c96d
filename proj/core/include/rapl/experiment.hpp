#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rapl/discovery.hpp"
#include "rapl/imitate.hpp"
#include "rapl/metrics.hpp"
#include "rapl/reinforce.hpp"
#include "rapl/world.hpp"

namespace rapl {

/// Where the routine library comes from.
enum class DiscoveryKind {
  kFull,   // Sequitur proposal + selection
  kNone,   // empty library: plain SQIL / plain A2C
  kRR,     // random routines
  kPbE,    // proposal by enumeration
  kRF,     // random fetch from the demo
  kRP,     // repeated most frequent primitive
  kID,     // full discovery on a degraded-expert demo
};
std::string_view to_string(DiscoveryKind kind);
DiscoveryKind parse_discovery_kind(std::string_view text);

enum class LearnerKind { kSqil, kA2c };
std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);

struct ExperimentConfig {
  std::string name = "experiment";
  std::string env = "corridor:24";
  double gamma = 0.99;
  std::vector<std::uint64_t> seeds{0};

  std::string demo_path;      // recorded from the scripted expert when empty
  double demo_epsilon = 0.0;  // expert degradation for every discovery kind

  DiscoveryKind discovery = DiscoveryKind::kFull;
  DiscoveryParams params;
  double id_epsilon = 0.25;
  std::uint64_t enumeration_cap = 1'000'000;

  LearnerKind learner = LearnerKind::kA2c;
  SqilConfig sqil;
  A2cConfig a2c;

  std::size_t eval_episodes = 100;
  std::size_t final_window = 100;  // training episodes averaged for final_return

  std::string out;          // output root; nothing is written when empty
  std::size_t threads = 0;  // seed workers; 0 picks the hardware count
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::string& path);
/// Full config including `out` and `threads`.
std::string to_json(const ExperimentConfig& config);
/// Config without `out` and `threads`, the part that determines results.
std::string canonical_json(const ExperimentConfig& config);
/// 64-bit FNV-1a of canonical_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
/// Throws Error(kInvalidArgument) for an empty seed list or a bad env id and
/// Error(kIo) for a missing demo file.
void validate(const ExperimentConfig& config);

/// Returns an extended action index for a state.
using GreedyFn = std::function<std::size_t(StateId)>;

struct Evaluation {
  double mean_return = 0.0;
  double success_rate = 0.0;  // fraction of episodes ending in a terminal state
  double alignment = 0.0;     // first greedy episode against the demo
  std::size_t episodes = 0;
  ActionSequence first_episode;
};

/// `episodes` greedy rollouts from reset(demo_seed).
Evaluation evaluate(Environment& env, const ExtendedActionSpace& space, const GreedyFn& greedy,
                    std::span<const ActionId> demo_actions, std::uint64_t demo_seed,
                    std::size_t episodes, double gamma);

/// Reloads a policy dump (SQIL greedy map or A2C logits) as a greedy
/// function; unseen states pick action 0.
std::pair<ExtendedActionSpace, GreedyFn> greedy_from_policy_json(std::string_view text);

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<Routine> routines;
  std::vector<CurveRow> curve;
  double final_return = 0.0;
  Evaluation eval;

  friend bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.config_hash == b.config_hash && a.seed == b.seed && a.ok == b.ok &&
           a.error == b.error && a.routines == b.routines && a.curve == b.curve &&
           a.final_return == b.final_return && a.eval.mean_return == b.eval.mean_return &&
           a.eval.success_rate == b.eval.success_rate && a.eval.alignment == b.eval.alignment;
  }
};

/// Byte-stable JSON; wall-clock time is kept out of the record.
std::string to_json(const RunRecord& record);

/// Everything one seed produced.
struct SeedRun {
  RunRecord record;
  Demonstration demo;
  RoutineLibrary library;
  std::string policy_json;
  double wall_seconds = 0.0;
};

Demonstration make_demo(const ExperimentConfig& config, Environment& env, std::uint64_t seed);
RoutineLibrary make_library(const ExperimentConfig& config, const Demonstration& demo,
                            std::uint64_t seed);

/// demo -> library -> learner -> evaluation for one seed. Stage failures are
/// caught and reported in record.ok / record.error.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// One independent worker per seed, results in seed-list order. With a
/// non-empty `out`, writes <out>/<hash>/seed_<s>/{demo.jsonl, library.json,
/// curve.csv, policy.json, record.json, timing.json} and
/// <out>/<hash>/manifest.json.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

struct Aggregate {
  MeanStderr final_return;
  MeanStderr eval_return;
  MeanStderr success_rate;
  MeanStderr alignment;
  double median_final_return = 0.0;
  std::size_t failed = 0;
};

/// Over successful records only.
Aggregate aggregate(std::span<const RunRecord> records);

struct SweepAxis {
  std::string pointer;              // JSON pointer into to_json(config), e.g. /discovery/k
  std::vector<std::string> values;  // JSON texts
};

struct SweepPoint {
  std::string pointer;  // empty for the base point
  std::string value;
  ExperimentConfig config;
  std::vector<RunRecord> records;
  Aggregate summary;
};

/// Applies `value` (JSON text) at `pointer`; throws Error(kInvalidArgument)
/// when the pointer does not exist.
ExperimentConfig with_override(const ExperimentConfig& base, const std::string& pointer,
                               const std::string& value);

/// One factor at a time: every axis value varies alone with the rest at
/// base. An empty grid runs the base config only.
std::vector<SweepPoint> sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& grid);

/// CSV `parameter,value,n,failed,final_mean,final_se,eval_mean,eval_se,success_mean,alignment_mean,alignment_se`.
std::string sweep_csv(std::span<const SweepPoint> points);

}  // namespace rapl
