#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rapl/types.hpp"

namespace rapl {

struct RuleId {
  std::uint32_t value = 0;

  friend auto operator<=>(const RuleId&, const RuleId&) = default;
};

/// The start rule always has id 0; auxiliary rules count up from 1 in order
/// of creation and ids are never reused.
inline constexpr RuleId kStartRule{0};

class Symbol {
 public:
  static Symbol terminal(ActionId action) {
    return Symbol(true, static_cast<std::uint32_t>(action));
  }
  static Symbol nonterminal(RuleId rule) { return Symbol(false, rule.value); }

  bool is_terminal() const { return terminal_; }
  ActionId action() const { return static_cast<ActionId>(payload_); }
  RuleId rule() const { return RuleId{payload_}; }

  friend auto operator<=>(const Symbol&, const Symbol&) = default;

 private:
  Symbol(bool terminal, std::uint32_t payload)
      : terminal_(terminal), payload_(payload) {}

  bool terminal_;
  std::uint32_t payload_;
};

struct Rule {
  RuleId id;
  std::vector<Symbol> rhs;
  std::size_t reference_count = 0;
};

struct DigramLocation {
  RuleId rule;
  std::size_t position = 0;

  friend bool operator==(const DigramLocation&, const DigramLocation&) = default;
};

using Digram = std::pair<Symbol, Symbol>;

/// Context-free grammar produced by Sequitur. Immutable once built; safe to
/// share read-only across threads.
class Grammar {
 public:
  Grammar(Rule start, std::vector<Rule> rules, std::size_t alphabet_size,
          ActionSequence source);

  const Rule& start() const { return start_; }
  /// Auxiliary (non-start) rules keyed by id.
  const std::map<RuleId, Rule>& rules() const { return rules_; }
  /// Looks up any rule including the start rule; nullptr if absent.
  const Rule* find(RuleId id) const;

  std::size_t alphabet_size() const { return alphabet_size_; }
  /// The sequence the grammar was induced from.
  const ActionSequence& source() const { return source_; }

  /// First location of every digram across all right-hand sides.
  std::map<Digram, DigramLocation> digram_index() const;

  /// Sum of right-hand-side lengths over all rules, start included.
  std::size_t size() const;

  friend bool operator==(const Grammar& a, const Grammar& b);

 private:
  Rule start_;
  std::map<RuleId, Rule> rules_;
  std::size_t alphabet_size_;
  ActionSequence source_;
};

bool operator==(const Rule& a, const Rule& b);

/// Online Sequitur over `sequence`, one symbol appended at a time. Throws
/// Error(kEmptySequence) for empty input and Error(kAlphabetViolation) when a
/// symbol falls outside [0, alphabet_size).
Grammar induce(std::span<const ActionId> sequence, std::size_t alphabet_size);

/// Same as above with the alphabet taken as max(sequence) + 1.
Grammar induce(std::span<const ActionId> sequence);

/// Fully expands a symbol to primitive actions. Throws Error(kDanglingRule)
/// on a reference to a rule the grammar does not hold (or a cyclic one).
ActionSequence expand(const Grammar& grammar, Symbol symbol);

struct GrammarDiagnostic {
  enum class Kind {
    kDigramRepeated,
    kRuleUnderused,
    kRuleTooShort,
    kReferenceCountMismatch,
    kDanglingRule,
    kRoundTripMismatch,
  };
  Kind kind;
  std::string message;
};

/// Independent checker for the Sequitur invariants: digram uniqueness, rule
/// utility and round-trip against grammar.source(). Empty means valid.
std::vector<GrammarDiagnostic> check_grammar(const Grammar& grammar);

/// One rule per line, `R<k> -> sym sym ...`, start rule first.
std::string dump(const Grammar& grammar);

}  // namespace rapl
