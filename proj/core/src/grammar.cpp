#include "rapl/grammar.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace rapl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptySequence: return "empty_sequence";
    case ErrorCode::kAlphabetViolation: return "alphabet_violation";
    case ErrorCode::kDanglingRule: return "dangling_rule";
    case ErrorCode::kInvalidAction: return "invalid_action";
    case ErrorCode::kEpisodeFinished: return "episode_finished";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kEnumerationCap: return "enumeration_cap";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kEnvMismatch: return "env_mismatch";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

namespace {

// Sequitur over an index-linked arena. Each rule is a circular doubly linked
// list closed by a guard node; the digram table maps a packed symbol pair to
// the node holding its left symbol.
class SequiturBuilder {
 public:
  SequiturBuilder() { start_ = new_rule(); }

  void append(ActionId action) {
    const auto sym = make_node(Kind::kTerminal, static_cast<std::uint32_t>(action));
    insert_after(last(start_), sym);
    const auto tail = last(start_);
    if (prev(tail) != guard_of(start_)) check(prev(tail));
  }

  Grammar finish(std::size_t alphabet_size, ActionSequence source) const {
    Rule start = export_rule(start_);
    std::vector<Rule> rules;
    for (std::size_t slot = 0; slot < rules_.size(); ++slot) {
      if (static_cast<std::int32_t>(slot) == start_ || !rules_[slot].alive) continue;
      rules.push_back(export_rule(static_cast<std::int32_t>(slot)));
    }
    return Grammar(std::move(start), std::move(rules), alphabet_size,
                   std::move(source));
  }

 private:
  enum class Kind : std::uint8_t { kTerminal, kNonTerminal, kGuard };

  struct Node {
    Kind kind;
    std::uint32_t value;  // action id, or rule slot for nonterminals/guards
    std::int32_t prev = -1;
    std::int32_t next = -1;
  };

  struct RuleSlot {
    std::int32_t guard = -1;
    std::int32_t count = 0;
    RuleId id;
    bool alive = true;
  };

  std::int32_t make_node(Kind kind, std::uint32_t value) {
    nodes_.push_back(Node{kind, value});
    if (kind == Kind::kNonTerminal) ++rules_[value].count;
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t new_rule() {
    const auto slot = static_cast<std::int32_t>(rules_.size());
    rules_.push_back(RuleSlot{-1, 0, RuleId{next_rule_id_++}, true});
    const auto g = make_node(Kind::kGuard, static_cast<std::uint32_t>(slot));
    nodes_[g].prev = g;
    nodes_[g].next = g;
    rules_[slot].guard = g;
    return slot;
  }

  std::int32_t prev(std::int32_t n) const { return nodes_[n].prev; }
  std::int32_t next(std::int32_t n) const { return nodes_[n].next; }
  bool is_guard(std::int32_t n) const { return nodes_[n].kind == Kind::kGuard; }
  bool is_nonterminal(std::int32_t n) const {
    return nodes_[n].kind == Kind::kNonTerminal;
  }
  std::int32_t guard_of(std::int32_t slot) const { return rules_[slot].guard; }
  std::int32_t first(std::int32_t slot) const { return next(guard_of(slot)); }
  std::int32_t last(std::int32_t slot) const { return prev(guard_of(slot)); }

  bool same_value(std::int32_t a, std::int32_t b) const {
    return nodes_[a].kind == nodes_[b].kind && nodes_[a].value == nodes_[b].value;
  }

  std::uint64_t encode(std::int32_t n) const {
    const std::uint64_t v = nodes_[n].value;
    return nodes_[n].kind == Kind::kTerminal ? 2 * v : 2 * v + 1;
  }

  std::uint64_t key(std::int32_t n) const {
    return (encode(n) << 32) | encode(next(n));
  }

  void delete_digram(std::int32_t n) {
    if (is_guard(n) || is_guard(next(n))) return;
    const auto it = table_.find(key(n));
    if (it != table_.end() && it->second == n) table_.erase(it);
  }

  void join(std::int32_t left, std::int32_t right) {
    if (next(left) != -1) {
      delete_digram(left);
      // Overlapping triples (e.g. "aaa") only index one pair; when that pair
      // goes away the surviving one must be re-registered.
      const auto rp = prev(right);
      const auto rn = next(right);
      if (rp != -1 && rn != -1 && same_value(right, rp) && same_value(right, rn)) {
        table_[key(right)] = right;
      }
      const auto lp = prev(left);
      const auto ln = next(left);
      if (lp != -1 && ln != -1 && same_value(left, ln) && same_value(left, lp)) {
        table_[key(lp)] = lp;
      }
    }
    nodes_[left].next = right;
    nodes_[right].prev = left;
  }

  void insert_after(std::int32_t at, std::int32_t fresh) {
    join(fresh, next(at));
    join(at, fresh);
  }

  void remove_symbol(std::int32_t n) {
    join(prev(n), next(n));
    if (!is_guard(n)) {
      delete_digram(n);
      if (is_nonterminal(n)) --rules_[nodes_[n].value].count;
    }
  }

  // Returns true if the digram starting at n was already present.
  bool check(std::int32_t n) {
    if (is_guard(n) || is_guard(next(n))) return false;
    const auto [it, inserted] = table_.try_emplace(key(n), n);
    if (inserted) return false;
    const auto found = it->second;
    if (found == n) return false;
    if (next(found) != n) match(n, found);
    return true;
  }

  void substitute(std::int32_t n, std::int32_t slot) {
    const auto q = prev(n);
    remove_symbol(next(q));
    remove_symbol(next(q));
    insert_after(q, make_node(Kind::kNonTerminal, static_cast<std::uint32_t>(slot)));
    if (!check(q)) check(next(q));
  }

  std::int32_t copy_of(std::int32_t n) {
    return make_node(nodes_[n].kind, nodes_[n].value);
  }

  void match(std::int32_t fresh, std::int32_t existing) {
    std::int32_t slot = 0;
    if (is_guard(prev(existing)) && is_guard(next(next(existing)))) {
      // The existing occurrence is a whole rule: reuse it.
      slot = static_cast<std::int32_t>(nodes_[prev(existing)].value);
      substitute(fresh, slot);
    } else {
      slot = new_rule();
      insert_after(last(slot), copy_of(fresh));
      insert_after(last(slot), copy_of(next(fresh)));
      substitute(existing, slot);
      substitute(fresh, slot);
      table_[key(first(slot))] = first(slot);
    }

    // Rule utility: a rule referenced once is inlined. Both ends of the
    // touched rule can lose their second reference in the substitution.
    const auto head = first(slot);
    if (is_nonterminal(head) && rules_[nodes_[head].value].count == 1) {
      expand(head);
    }
    if (rules_[slot].alive) {
      const auto tail = last(slot);
      if (is_nonterminal(tail) && rules_[nodes_[tail].value].count == 1) {
        expand(tail);
      }
    }
  }

  // n is the only remaining reference to its rule; splice the rule body in
  // place of n and retire the rule.
  void expand(std::int32_t n) {
    const auto left = prev(n);
    const auto right = next(n);
    const auto slot = static_cast<std::int32_t>(nodes_[n].value);
    const auto f = first(slot);
    const auto l = last(slot);

    rules_[slot].alive = false;
    nodes_[l].next = f;
    nodes_[f].prev = l;

    if (!is_guard(right)) {
      const auto it = table_.find(key(n));
      if (it != table_.end() && it->second == n) table_.erase(it);
    }
    // Detach n without touching the (now retired) rule's count.
    join(left, right);
    join(left, f);
    join(l, right);

    if (!is_guard(right)) table_[key(l)] = l;
    if (!is_guard(left)) table_[key(left)] = left;
  }

  Rule export_rule(std::int32_t slot) const {
    Rule rule;
    rule.id = rules_[slot].id;
    rule.reference_count = static_cast<std::size_t>(rules_[slot].count);
    for (auto n = first(slot); n != guard_of(slot); n = next(n)) {
      if (nodes_[n].kind == Kind::kTerminal) {
        rule.rhs.push_back(Symbol::terminal(static_cast<ActionId>(nodes_[n].value)));
      } else {
        rule.rhs.push_back(Symbol::nonterminal(rules_[nodes_[n].value].id));
      }
    }
    return rule;
  }

  std::vector<Node> nodes_;
  std::vector<RuleSlot> rules_;
  std::unordered_map<std::uint64_t, std::int32_t> table_;
  std::uint32_t next_rule_id_ = 0;
  std::int32_t start_ = 0;
};

}  // namespace

Grammar::Grammar(Rule start, std::vector<Rule> rules, std::size_t alphabet_size,
                 ActionSequence source)
    : start_(std::move(start)),
      alphabet_size_(alphabet_size),
      source_(std::move(source)) {
  for (auto& rule : rules) {
    const auto id = rule.id;
    rules_.emplace(id, std::move(rule));
  }
}

const Rule* Grammar::find(RuleId id) const {
  if (id == start_.id) return &start_;
  const auto it = rules_.find(id);
  return it == rules_.end() ? nullptr : &it->second;
}

std::map<Digram, DigramLocation> Grammar::digram_index() const {
  std::map<Digram, DigramLocation> index;
  const auto add = [&index](const Rule& rule) {
    for (std::size_t i = 0; i + 1 < rule.rhs.size(); ++i) {
      index.try_emplace(Digram{rule.rhs[i], rule.rhs[i + 1]},
                        DigramLocation{rule.id, i});
    }
  };
  add(start_);
  for (const auto& [id, rule] : rules_) add(rule);
  return index;
}

std::size_t Grammar::size() const {
  std::size_t total = start_.rhs.size();
  for (const auto& [id, rule] : rules_) total += rule.rhs.size();
  return total;
}

bool operator==(const Rule& a, const Rule& b) {
  return a.id == b.id && a.rhs == b.rhs && a.reference_count == b.reference_count;
}

bool operator==(const Grammar& a, const Grammar& b) {
  return a.start_ == b.start_ && a.rules_ == b.rules_ &&
         a.alphabet_size_ == b.alphabet_size_ && a.source_ == b.source_;
}

Grammar induce(std::span<const ActionId> sequence, std::size_t alphabet_size) {
  if (sequence.empty()) {
    throw Error(ErrorCode::kEmptySequence, "cannot induce a grammar from an empty sequence");
  }
  for (const auto a : sequence) {
    if (a < 0 || static_cast<std::size_t>(a) >= alphabet_size) {
      throw Error(ErrorCode::kAlphabetViolation,
                  "action " + std::to_string(a) + " outside alphabet of size " +
                      std::to_string(alphabet_size));
    }
  }
  SequiturBuilder builder;
  for (const auto a : sequence) builder.append(a);
  return builder.finish(alphabet_size, ActionSequence(sequence.begin(), sequence.end()));
}

Grammar induce(std::span<const ActionId> sequence) {
  if (sequence.empty()) {
    throw Error(ErrorCode::kEmptySequence, "cannot induce a grammar from an empty sequence");
  }
  const auto top = *std::max_element(sequence.begin(), sequence.end());
  return induce(sequence, top < 0 ? 0 : static_cast<std::size_t>(top) + 1);
}

ActionSequence expand(const Grammar& grammar, Symbol symbol) {
  ActionSequence out;
  // Explicit stack of (rule, position); depth is bounded by the rule count,
  // which catches cycles in hand-built grammars.
  std::vector<std::pair<const Rule*, std::size_t>> stack;
  const auto push = [&](RuleId id) {
    const Rule* rule = grammar.find(id);
    if (rule == nullptr) {
      throw Error(ErrorCode::kDanglingRule, "reference to missing rule R" +
                                                std::to_string(id.value));
    }
    if (stack.size() > grammar.rules().size() + 1) {
      throw Error(ErrorCode::kDanglingRule, "cyclic rule reference at R" +
                                                std::to_string(id.value));
    }
    stack.emplace_back(rule, 0);
  };

  if (symbol.is_terminal()) return {symbol.action()};
  push(symbol.rule());
  while (!stack.empty()) {
    auto& [rule, pos] = stack.back();
    if (pos == rule->rhs.size()) {
      stack.pop_back();
      continue;
    }
    const Symbol s = rule->rhs[pos++];
    if (s.is_terminal()) {
      out.push_back(s.action());
    } else {
      push(s.rule());
    }
  }
  return out;
}

namespace {

std::string symbol_text(Symbol s) {
  return s.is_terminal() ? std::to_string(s.action())
                         : "R" + std::to_string(s.rule().value);
}

}  // namespace

std::vector<GrammarDiagnostic> check_grammar(const Grammar& grammar) {
  using Kind = GrammarDiagnostic::Kind;
  std::vector<GrammarDiagnostic> report;

  std::vector<const Rule*> all{&grammar.start()};
  for (const auto& [id, rule] : grammar.rules()) all.push_back(&rule);

  // Digram uniqueness; two occurrences of the same pair conflict unless they
  // overlap inside one rule (a run like "a a a").
  struct Occurrence {
    RuleId rule;
    std::size_t pos;
  };
  std::map<Digram, std::vector<Occurrence>> occurrences;
  for (const Rule* rule : all) {
    for (std::size_t i = 0; i + 1 < rule->rhs.size(); ++i) {
      occurrences[{rule->rhs[i], rule->rhs[i + 1]}].push_back({rule->id, i});
    }
  }
  for (const auto& [digram, occ] : occurrences) {
    bool repeated = false;
    for (std::size_t i = 0; i < occ.size() && !repeated; ++i) {
      for (std::size_t j = i + 1; j < occ.size() && !repeated; ++j) {
        const bool overlapping =
            occ[i].rule == occ[j].rule &&
            (occ[i].pos + 1 == occ[j].pos || occ[j].pos + 1 == occ[i].pos);
        repeated = !overlapping;
      }
    }
    if (repeated) {
      report.push_back({Kind::kDigramRepeated, "digram (" + symbol_text(digram.first) +
                                                   ", " + symbol_text(digram.second) +
                                                   ") occurs more than once"});
    }
  }

  // Rule utility, from actual references rather than the stored counts.
  std::map<RuleId, std::size_t> references;
  bool dangling = false;
  for (const Rule* rule : all) {
    for (const Symbol s : rule->rhs) {
      if (s.is_terminal()) continue;
      if (grammar.find(s.rule()) == nullptr || s.rule() == kStartRule) {
        report.push_back({Kind::kDanglingRule, "R" + std::to_string(rule->id.value) +
                                                   " references missing " +
                                                   symbol_text(s)});
        dangling = true;
        continue;
      }
      ++references[s.rule()];
    }
  }
  for (const auto& [id, rule] : grammar.rules()) {
    const auto used = references[id];
    const auto name = "R" + std::to_string(id.value);
    if (used < 2) {
      report.push_back({Kind::kRuleUnderused,
                        name + " is referenced " + std::to_string(used) + " time(s)"});
    }
    if (rule.rhs.size() < 2) {
      report.push_back({Kind::kRuleTooShort, name + " has fewer than two symbols"});
    }
    if (rule.reference_count != used) {
      report.push_back({Kind::kReferenceCountMismatch,
                        name + " stores count " + std::to_string(rule.reference_count) +
                            " but is referenced " + std::to_string(used) + " time(s)"});
    }
  }

  if (!dangling) {
    try {
      if (expand(grammar, Symbol::nonterminal(kStartRule)) != grammar.source()) {
        report.push_back({Kind::kRoundTripMismatch,
                          "expansion of the start rule differs from the source"});
      }
    } catch (const Error& e) {
      report.push_back({Kind::kDanglingRule, e.what()});
    }
  }
  return report;
}

std::string dump(const Grammar& grammar) {
  std::ostringstream out;
  const auto line = [&out](const Rule& rule) {
    out << 'R' << rule.id.value << " ->";
    for (const Symbol s : rule.rhs) out << ' ' << symbol_text(s);
    out << '\n';
  };
  line(grammar.start());
  for (const auto& [id, rule] : grammar.rules()) line(rule);
  return out.str();
}

}  // namespace rapl
