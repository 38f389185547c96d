#include "rapl/world.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

namespace rapl {

StateId Environment::reset(std::uint64_t seed) {
  state_ = initial_state(seed);
  t_ = 0;
  finished_ = false;
  terminal_ = false;
  return state_;
}

Transition Environment::step(ActionId a) {
  if (a < 0 || static_cast<std::size_t>(a) >= spec_.action_count) {
    throw Error(ErrorCode::kInvalidAction,
                "action " + std::to_string(a) + " outside [0, " +
                    std::to_string(spec_.action_count) + ")");
  }
  if (finished_) throw Error(ErrorCode::kEpisodeFinished, "step on a finished episode");
  const auto outcome = advance(state_, a);
  Transition tr{t_, state_, a, outcome.reward, outcome.next, outcome.terminal};
  ++t_;
  if (static_cast<std::size_t>(t_) >= spec_.step_cap) tr.done = true;
  state_ = outcome.next;
  finished_ = tr.done;
  terminal_ = outcome.terminal;
  return tr;
}

// Corridor ------------------------------------------------------------------

CorridorWorld::CorridorWorld(std::size_t length, std::size_t step_cap, double gamma)
    : Environment(MdpSpec{"corridor:" + std::to_string(length) + ":" +
                              std::to_string(step_cap == 0 ? 4 * length : step_cap),
                          length, length, 4, gamma,
                          step_cap == 0 ? 4 * length : step_cap}),
      length_(length) {
  if (length < 2) throw Error(ErrorCode::kInvalidArgument, "corridor needs at least 2 cells");
}

bool CorridorWorld::is_gate(std::size_t cell) const {
  return cell % 3 == 2 && cell + 1 < length_;
}

std::vector<double> CorridorWorld::features(StateId s) const {
  std::vector<double> phi(length_, 0.0);
  phi.at(s) = 1.0;
  return phi;
}

std::unique_ptr<Environment> CorridorWorld::clone() const {
  return std::make_unique<CorridorWorld>(*this);
}

StateId CorridorWorld::initial_state(std::uint64_t) const { return 0; }

Environment::Outcome CorridorWorld::advance(StateId s, ActionId a) const {
  std::size_t x = s;
  switch (a) {
    case kLeft:
      if (x > 0) --x;
      break;
    case kRight:
      if (!is_gate(x)) ++x;
      break;
    case kUp:
      if (is_gate(x)) ++x;
      break;
    default:
      break;
  }
  const bool at_goal = x == goal();
  return {x, at_goal ? 1.0 : 0.0, at_goal};
}

// Mini-Qbert -----------------------------------------------------------------

MiniQbertWorld::MiniQbertWorld(std::size_t side, std::size_t step_cap, double gamma)
    : Environment(MdpSpec{"qbert:" + std::to_string(side) + ":" + std::to_string(step_cap),
                          (side * side) << (side * side), 2 * side * side, 4, gamma,
                          step_cap}),
      side_(side) {
  if (side < 2 || side > 7) {
    throw Error(ErrorCode::kInvalidArgument, "mini-Qbert side must be in [2, 7]");
  }
  if (step_cap == 0) throw Error(ErrorCode::kInvalidArgument, "step cap must be positive");
}

MiniQbertWorld::Board MiniQbertWorld::decode(StateId s) const {
  const auto bits = squares();
  return {static_cast<std::size_t>(s >> bits), s & ((std::uint64_t{1} << bits) - 1)};
}

StateId MiniQbertWorld::encode(const Board& board) const {
  return (static_cast<StateId>(board.position) << squares()) | board.coloured;
}

std::vector<double> MiniQbertWorld::features(StateId s) const {
  const auto board = decode(s);
  std::vector<double> phi(2 * squares(), 0.0);
  phi[board.position] = 1.0;
  for (std::size_t i = 0; i < squares(); ++i) {
    if ((board.coloured >> i) & 1U) phi[squares() + i] = 1.0;
  }
  return phi;
}

std::unique_ptr<Environment> MiniQbertWorld::clone() const {
  return std::make_unique<MiniQbertWorld>(*this);
}

StateId MiniQbertWorld::initial_state(std::uint64_t) const { return encode({0, 0}); }

Environment::Outcome MiniQbertWorld::advance(StateId s, ActionId a) const {
  auto board = decode(s);
  std::size_t row = board.position / side_;
  std::size_t col = board.position % side_;
  switch (a) {
    case kUp:
      if (row > 0) --row;
      break;
    case kDown:
      if (row + 1 < side_) ++row;
      break;
    case kLeft:
      if (col > 0) --col;
      break;
    case kRight:
      if (col + 1 < side_) ++col;
      break;
    default:
      break;
  }
  const std::size_t next = row * side_ + col;
  double reward = 0.0;
  // Bumping into the edge leaves the agent in place and earns nothing.
  if (next != board.position && !((board.coloured >> next) & 1U)) {
    board.coloured |= std::uint64_t{1} << next;
    reward = 1.0;
  }
  board.position = next;
  const bool all = board.coloured == (std::uint64_t{1} << squares()) - 1;
  return {encode(board), reward, all};
}

namespace {

std::vector<std::size_t> parse_id_numbers(std::string_view rest, std::string_view id) {
  std::vector<std::size_t> numbers;
  while (!rest.empty()) {
    const auto colon = rest.find(':');
    const auto part = rest.substr(0, colon);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad environment id: " + std::string(id));
    }
    numbers.push_back(value);
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return numbers;
}

}  // namespace

std::unique_ptr<Environment> make_environment(std::string_view id, double gamma) {
  const auto colon = id.find(':');
  const auto name = id.substr(0, colon);
  const auto numbers =
      colon == std::string_view::npos ? std::vector<std::size_t>{}
                                      : parse_id_numbers(id.substr(colon + 1), id);
  if (numbers.size() > 2) {
    throw Error(ErrorCode::kInvalidArgument, "bad environment id: " + std::string(id));
  }
  if (name == "corridor") {
    return std::make_unique<CorridorWorld>(numbers.size() > 0 ? numbers[0] : 24,
                                           numbers.size() > 1 ? numbers[1] : 0, gamma);
  }
  if (name == "qbert") {
    return std::make_unique<MiniQbertWorld>(numbers.size() > 0 ? numbers[0] : 4,
                                            numbers.size() > 1 ? numbers[1] : 200, gamma);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown environment: " + std::string(id));
}

// Extended actions -------------------------------------------------------------

ExtendedActionSpace::ExtendedActionSpace(std::size_t primitive_count,
                                         std::vector<Routine> routines)
    : primitive_count_(primitive_count), routines_(std::move(routines)) {
  for (const auto& r : routines_) {
    if (r.actions.empty()) throw Error(ErrorCode::kInvalidArgument, "empty routine");
    for (const auto a : r.actions) {
      if (a < 0 || static_cast<std::size_t>(a) >= primitive_count_) {
        throw Error(ErrorCode::kAlphabetViolation,
                    "routine uses action " + std::to_string(a) + " outside the action space");
      }
    }
  }
}

ExtendedAction ExtendedActionSpace::at(std::size_t flat) const {
  if (flat < primitive_count_) return ExtendedAction::primitive(static_cast<ActionId>(flat));
  if (flat < size()) return ExtendedAction::routine(flat - primitive_count_);
  throw Error(ErrorCode::kInvalidAction, "extended action index out of range");
}

std::size_t ExtendedActionSpace::flat(const ExtendedAction& ea) const {
  if (ea.is_primitive()) {
    if (ea.index >= primitive_count_) {
      throw Error(ErrorCode::kInvalidAction, "primitive action out of range");
    }
    return ea.index;
  }
  if (ea.index >= routines_.size()) {
    throw Error(ErrorCode::kInvalidAction, "routine index out of range");
  }
  return primitive_count_ + ea.index;
}

std::size_t ExtendedActionSpace::length(const ExtendedAction& ea) const {
  return ea.is_primitive() ? 1 : routines_.at(ea.index).length();
}

ActionSequence ExtendedActionSpace::primitives(const ExtendedAction& ea) const {
  flat(ea);  // validates
  if (ea.is_primitive()) return {static_cast<ActionId>(ea.index)};
  return routines_[ea.index].actions;
}

double discount_power(double gamma, std::size_t n) {
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) d *= gamma;
  return d;
}

RoutineOutcome step_extended(Environment& env, const ExtendedAction& ea,
                             const ExtendedActionSpace& space, double gamma) {
  RoutineOutcome out;
  out.s_start = env.state();
  out.s_end = env.state();
  double weight = 1.0;
  for (const auto a : space.primitives(ea)) {
    const auto tr = env.step(a);
    out.discounted_reward += weight * tr.r;
    weight *= gamma;
    out.s_end = tr.s_next;
    out.inner.push_back(tr);
    if (tr.done) {
      out.terminated = true;
      break;
    }
  }
  out.executed = out.inner.size();
  out.discount = weight;
  return out;
}

RoutineOutcome step_extended(Environment& env, const ExtendedAction& ea,
                             const RoutineLibrary& library, double gamma) {
  return step_extended(env, ea, ExtendedActionSpace(env.action_count(), library.routines),
                       gamma);
}

// Demonstrations -----------------------------------------------------------------

double Demonstration::total_return() const {
  double total = 0.0;
  for (const auto& tr : transitions) total += tr.r;
  return total;
}

ActionSequence Demonstration::actions() const {
  ActionSequence out;
  out.reserve(transitions.size());
  for (const auto& tr : transitions) out.push_back(tr.a);
  return out;
}

StateId Demonstration::state_at(std::size_t t) const {
  if (t < transitions.size()) return transitions[t].s;
  if (t == transitions.size() && !transitions.empty()) return transitions.back().s_next;
  throw Error(ErrorCode::kInvalidArgument, "demonstration index out of range");
}

Demonstration record_demo(Environment& env, const Policy& policy, std::uint64_t seed) {
  Demonstration demo;
  demo.env_id = env.spec().env_id;
  demo.seed = seed;
  demo.n_actions = env.action_count();
  auto s = env.reset(seed);
  while (!env.finished()) {
    const auto tr = env.step(policy(s));
    demo.transitions.push_back(tr);
    s = tr.s_next;
  }
  return demo;
}

namespace {

Policy corridor_expert(const CorridorWorld& world) {
  return [world](StateId s) -> ActionId {
    return world.is_gate(s) ? CorridorWorld::kUp : CorridorWorld::kRight;
  };
}

Policy qbert_expert(const MiniQbertWorld& world) {
  return [world](StateId s) -> ActionId {
    const auto board = world.decode(s);
    const auto side = world.side();
    const auto n = world.squares();
    // BFS for the nearest uncoloured square; remember each square's first move.
    std::vector<int> first_move(n, -1);
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> frontier{board.position};
    seen[board.position] = true;
    while (!frontier.empty()) {
      const auto at = frontier.front();
      frontier.pop_front();
      if (at != board.position && !((board.coloured >> at) & 1U)) return first_move[at];
      const std::size_t row = at / side;
      const std::size_t col = at % side;
      for (ActionId a = 0; a < 4; ++a) {
        std::size_t r = row;
        std::size_t c = col;
        if (a == MiniQbertWorld::kUp && r > 0) --r;
        else if (a == MiniQbertWorld::kDown && r + 1 < side) ++r;
        else if (a == MiniQbertWorld::kLeft && c > 0) --c;
        else if (a == MiniQbertWorld::kRight && c + 1 < side) ++c;
        const auto to = r * side + c;
        if (seen[to]) continue;
        seen[to] = true;
        first_move[to] = at == board.position ? a : first_move[at];
        frontier.push_back(to);
      }
    }
    return MiniQbertWorld::kRight;
  };
}

}  // namespace

Policy scripted_expert(const Environment& env) {
  if (const auto* corridor = dynamic_cast<const CorridorWorld*>(&env)) {
    return corridor_expert(*corridor);
  }
  if (const auto* qbert = dynamic_cast<const MiniQbertWorld*>(&env)) {
    return qbert_expert(*qbert);
  }
  throw Error(ErrorCode::kInvalidArgument, "no scripted expert for " + env.spec().env_id);
}

Policy epsilon_degraded(Policy expert, double epsilon, std::size_t action_count,
                        std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [expert = std::move(expert), epsilon, action_count, rng](StateId s) -> ActionId {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(*rng) < epsilon) {
      std::uniform_int_distribution<ActionId> pick(0, static_cast<ActionId>(action_count) - 1);
      return pick(*rng);
    }
    return expert(s);
  };
}

}  // namespace rapl
