#include "rapl/discovery.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <set>

#include "rapl/grammar.hpp"

namespace rapl {

std::vector<Routine> propose_candidates(std::span<const ActionId> trajectory) {
  if (trajectory.size() < 2) return {};
  const Grammar grammar = induce(trajectory);
  std::vector<Routine> candidates;
  std::set<ActionSequence> seen;
  for (const auto& [id, rule] : grammar.rules()) {
    auto actions = expand(grammar, Symbol::nonterminal(id));
    if (seen.insert(actions).second) candidates.push_back(Routine{std::move(actions)});
  }
  return candidates;
}

std::vector<std::size_t> occurrences(std::span<const ActionId> pattern,
                                     std::span<const ActionId> trajectory) {
  std::vector<std::size_t> starts;
  if (pattern.empty() || pattern.size() > trajectory.size()) return starts;
  std::size_t i = 0;
  while (i + pattern.size() <= trajectory.size()) {
    if (std::equal(pattern.begin(), pattern.end(), trajectory.begin() + i)) {
      starts.push_back(i);
      i += pattern.size();
    } else {
      ++i;
    }
  }
  return starts;
}

std::size_t frequency(std::span<const ActionId> pattern,
                      std::span<const ActionId> trajectory) {
  return occurrences(pattern, trajectory).size();
}

std::size_t levenshtein(std::span<const ActionId> a, std::span<const ActionId> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Single row over the shorter sequence.
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::vector<ScoredCandidate> score_candidates(const std::vector<Routine>& candidates,
                                              std::span<const ActionId> trajectory,
                                              double lambda_length) {
  std::vector<ScoredCandidate> scored;
  scored.reserve(candidates.size());
  for (const auto& routine : candidates) {
    const auto f = frequency(routine.actions, trajectory);
    scored.push_back({routine, f,
                      static_cast<double>(f) +
                          lambda_length * static_cast<double>(routine.length())});
  }
  return scored;
}

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.routine.length() != b.routine.length()) {
    return a.routine.length() > b.routine.length();
  }
  return a.routine.actions < b.routine.actions;
}

RoutineLibrary select(const std::vector<Routine>& candidates,
                      std::span<const ActionId> trajectory, const DiscoveryParams& params) {
  if (params.k == 0) throw Error(ErrorCode::kInvalidArgument, "K must be at least 1");
  std::vector<Routine> unique;
  std::set<ActionSequence> seen;
  for (const auto& c : candidates) {
    if (seen.insert(c.actions).second) unique.push_back(c);
  }
  auto scored = score_candidates(unique, trajectory, params.lambda_length);
  std::sort(scored.begin(), scored.end(), ranks_before);

  RoutineLibrary library;
  library.params = params;
  for (const auto& candidate : scored) {
    const bool distinct = std::all_of(
        library.routines.begin(), library.routines.end(), [&](const Routine& kept) {
          return levenshtein(kept.actions, candidate.routine.actions) >= params.alpha;
        });
    if (distinct) library.routines.push_back(candidate.routine);
  }
  if (library.routines.size() > params.k) library.routines.resize(params.k);
  return library;
}

RoutineLibrary discover(std::span<const ActionId> trajectory, const DiscoveryParams& params) {
  return select(propose_candidates(trajectory), trajectory, params);
}

std::string_view to_string(AblationKind kind) {
  switch (kind) {
    case AblationKind::kRandomRoutines: return "RR";
    case AblationKind::kProposalByEnumeration: return "PbE";
    case AblationKind::kRandomFetch: return "RF";
    case AblationKind::kRepeat: return "RP";
  }
  return "?";
}

AblationKind parse_ablation_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rr") return AblationKind::kRandomRoutines;
  if (lower == "pbe") return AblationKind::kProposalByEnumeration;
  if (lower == "rf") return AblationKind::kRandomFetch;
  if (lower == "rp") return AblationKind::kRepeat;
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation kind: " + std::string(text));
}

std::vector<std::size_t> shape_of(const RoutineLibrary& library) {
  std::vector<std::size_t> shape;
  for (const auto& r : library.routines) shape.push_back(r.length());
  return shape;
}

namespace {

ActionId most_frequent_action(std::span<const ActionId> trajectory) {
  if (trajectory.empty()) {
    throw Error(ErrorCode::kEmptySequence, "repeat ablation needs a non-empty trajectory");
  }
  std::map<ActionId, std::size_t> counts;
  for (const auto a : trajectory) ++counts[a];
  // Ties resolve to the smallest id: max_element keeps the first maximum.
  return std::max_element(counts.begin(), counts.end(),
                          [](const auto& x, const auto& y) { return x.second < y.second; })
      ->first;
}

// alphabet^length, saturating at cap + 1.
std::uint64_t bounded_power(std::size_t alphabet, std::size_t length, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (alphabet != 0 && total > (cap + 1) / alphabet) return cap + 1;
    total *= alphabet;
  }
  return total;
}

std::vector<Routine> enumerate_sequences(std::size_t alphabet, std::size_t length) {
  std::vector<Routine> all;
  ActionSequence current(length, 0);
  while (true) {
    all.push_back(Routine{current});
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (static_cast<std::size_t>(++current[pos]) < alphabet) break;
      current[pos] = 0;
      if (pos == 0) return all;
    }
    if (length == 0) return all;
  }
}

RoutineLibrary proposal_by_enumeration(const AblationRequest& request,
                                       std::span<const ActionId> trajectory) {
  std::set<std::size_t> lengths(request.shape.begin(), request.shape.end());
  std::uint64_t total = 0;
  for (const auto len : lengths) {
    total += bounded_power(request.alphabet_size, len, request.enumeration_cap);
    if (total > request.enumeration_cap) {
      throw Error(ErrorCode::kEnumerationCap,
                  "enumerating routines of length " + std::to_string(len) +
                      " exceeds the cap of " + std::to_string(request.enumeration_cap));
    }
  }

  RoutineLibrary library;
  library.params = request.params;
  std::map<std::size_t, std::vector<ScoredCandidate>> ranked;
  for (const auto len : lengths) {
    auto scored = score_candidates(enumerate_sequences(request.alphabet_size, len),
                                   trajectory, request.params.lambda_length);
    std::sort(scored.begin(), scored.end(), ranks_before);
    ranked.emplace(len, std::move(scored));
  }
  for (const auto len : request.shape) {
    const auto& pool = ranked.at(len);
    const auto taken = [&](const Routine& r) {
      return std::find(library.routines.begin(), library.routines.end(), r) !=
             library.routines.end();
    };
    const auto far_enough = [&](const Routine& r) {
      return std::all_of(library.routines.begin(), library.routines.end(),
                         [&](const Routine& kept) {
                           return levenshtein(kept.actions, r.actions) >= request.params.alpha;
                         });
    };
    auto pick = std::find_if(pool.begin(), pool.end(), [&](const ScoredCandidate& c) {
      return !taken(c.routine) && far_enough(c.routine);
    });
    if (pick == pool.end()) {
      pick = std::find_if(pool.begin(), pool.end(),
                          [&](const ScoredCandidate& c) { return !taken(c.routine); });
    }
    if (pick != pool.end()) library.routines.push_back(pick->routine);
  }
  return library;
}

}  // namespace

RoutineLibrary ablation_generate(const AblationRequest& request,
                                 std::span<const ActionId> trajectory, std::mt19937_64& rng) {
  if (request.alphabet_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "ablation needs a non-empty action alphabet");
  }
  RoutineLibrary library;
  library.params = request.params;
  switch (request.kind) {
    case AblationKind::kRandomRoutines: {
      std::uniform_int_distribution<ActionId> pick(
          0, static_cast<ActionId>(request.alphabet_size) - 1);
      for (const auto len : request.shape) {
        Routine r;
        for (std::size_t i = 0; i < len; ++i) r.actions.push_back(pick(rng));
        library.routines.push_back(std::move(r));
      }
      break;
    }
    case AblationKind::kProposalByEnumeration:
      return proposal_by_enumeration(request, trajectory);
    case AblationKind::kRandomFetch: {
      for (const auto len : request.shape) {
        if (len == 0 || len > trajectory.size()) {
          throw Error(ErrorCode::kInvalidArgument,
                      "cannot fetch a slice of length " + std::to_string(len) +
                          " from a trajectory of length " + std::to_string(trajectory.size()));
        }
        std::uniform_int_distribution<std::size_t> start(0, trajectory.size() - len);
        const auto at = start(rng);
        library.routines.push_back(
            Routine{ActionSequence(trajectory.begin() + at, trajectory.begin() + at + len)});
      }
      break;
    }
    case AblationKind::kRepeat: {
      const auto a = most_frequent_action(trajectory);
      for (const auto len : request.shape) {
        library.routines.push_back(Routine{ActionSequence(len, a)});
      }
      break;
    }
  }
  return library;
}

}  // namespace rapl
