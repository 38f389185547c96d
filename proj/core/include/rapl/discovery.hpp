#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rapl/types.hpp"

namespace rapl {

/// A fixed sequence of primitive actions executed as one extended action.
struct Routine {
  ActionSequence actions;

  std::size_t length() const { return actions.size(); }
  friend auto operator<=>(const Routine&, const Routine&) = default;
};

struct DiscoveryParams {
  std::size_t k = 3;             // library size cap
  std::size_t alpha = 2;         // minimum pairwise Levenshtein distance
  double lambda_length = 0.1;    // weight of routine length in the score

  friend bool operator==(const DiscoveryParams&, const DiscoveryParams&) = default;
};

struct ScoredCandidate {
  Routine routine;
  std::size_t frequency = 0;
  double score = 0.0;
};

struct RoutineLibrary {
  std::vector<Routine> routines;
  DiscoveryParams params;
  std::uint64_t seed = 0;
  std::string source_demo;

  std::size_t size() const { return routines.size(); }
  bool empty() const { return routines.empty(); }
  friend bool operator==(const RoutineLibrary&, const RoutineLibrary&) = default;
};

/// Expansions of every non-start Sequitur rule over the trajectory, in rule
/// creation order, de-duplicated. Empty for trajectories shorter than two.
std::vector<Routine> propose_candidates(std::span<const ActionId> trajectory);

/// Non-overlapping occurrences of `pattern`, greedy left-to-right.
std::size_t frequency(std::span<const ActionId> pattern,
                      std::span<const ActionId> trajectory);

/// Start offsets of the occurrences counted by frequency().
std::vector<std::size_t> occurrences(std::span<const ActionId> pattern,
                                     std::span<const ActionId> trajectory);

/// Unit-cost edit distance.
std::size_t levenshtein(std::span<const ActionId> a, std::span<const ActionId> b);

/// frequency + lambda_length * length for each candidate.
std::vector<ScoredCandidate> score_candidates(const std::vector<Routine>& candidates,
                                              std::span<const ActionId> trajectory,
                                              double lambda_length);

/// Strict ranking used everywhere routines are ordered: higher score, then
/// longer routine, then lexicographically smaller actions.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b);

/// Scores, prunes near-duplicates (distance < alpha) in rank order and keeps
/// the K best survivors.
RoutineLibrary select(const std::vector<Routine>& candidates,
                      std::span<const ActionId> trajectory, const DiscoveryParams& params);

/// select(propose_candidates(trajectory), trajectory, params).
RoutineLibrary discover(std::span<const ActionId> trajectory, const DiscoveryParams& params);

enum class AblationKind { kRandomRoutines, kProposalByEnumeration, kRandomFetch, kRepeat };

std::string_view to_string(AblationKind kind);
/// Accepts "RR", "PbE", "RF", "RP" (case-insensitive).
AblationKind parse_ablation_kind(std::string_view text);

struct AblationRequest {
  AblationKind kind = AblationKind::kRandomRoutines;
  std::vector<std::size_t> shape;   // lengths of the routines to generate
  std::size_t alphabet_size = 0;
  DiscoveryParams params;           // scoring for PbE
  std::uint64_t enumeration_cap = 1'000'000;
};

/// Ablated libraries with the same number and lengths of routines as the
/// full model. RR draws uniform sequences, PbE enumerates every sequence of
/// each length and keeps the best scoring, RF copies random demo slices and
/// RP repeats the most frequent primitive.
RoutineLibrary ablation_generate(const AblationRequest& request,
                                 std::span<const ActionId> trajectory, std::mt19937_64& rng);

std::vector<std::size_t> shape_of(const RoutineLibrary& library);

/// JSON with `routines`, `params` {`k`,`alpha`,`lambda_length`}, `seed`,
/// `source_demo`.
std::string to_json(const RoutineLibrary& library);
RoutineLibrary library_from_json(std::string_view text);

void save_library(const RoutineLibrary& library, const std::string& path);
RoutineLibrary load_library(const std::string& path);

}  // namespace rapl
