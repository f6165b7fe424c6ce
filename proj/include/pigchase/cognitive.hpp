#pragma once

// Production-system model of a Pig Chase participant.
//
// Declarative memory holds static "possible-moves" chunks (one per passable
// cell) and "rotation-step" chunks whose base-level activation is the
// rotation gate. Procedural memory is a small set of productions matched
// against the goal/visual/imaginal/retrieval buffers; conflicts are resolved
// by noisy utility and utilities are learned from game rewards:
//
//   U(n) = U(n-1) + alpha * (R(n) - U(n-1))
//
// One decide() call runs match-select-fire cycles until a production emits an
// arrow key. Internal productions (perception, strategy checks, retrievals)
// cost no action.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigchase/astar.hpp"
#include "pigchase/game.hpp"
#include "pigchase/rng.hpp"

namespace pigchase::cog {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RewardDiscount : std::uint8_t {
  // Effective reward = base reward - actions elapsed since the production fired.
  ActionsElapsed,
  // Every production fired in the window receives the base reward unchanged.
  Uniform,
};

struct ModelParams {
  double alpha = 0.2;
  double utility_noise_s = 0.25;
  double retrieval_threshold = -1.0;
  double rotation_bla = -0.15;
  double activation_noise_s = 0.25;
  double initial_utility = 0.0;
  int exit_patience = 2;
  int pursue_min_remaining = 20;
  int reward_catch = kRewardCatch;
  int reward_exit = kRewardExit;
  int action_cost = 1;
  RewardDiscount discount = RewardDiscount::ActionsElapsed;

  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ModelError("alpha must be in (0, 1]");
    if (!finite(utility_noise_s) || utility_noise_s < 0.0) throw ModelError("utility_noise_s must be >= 0");
    if (!finite(activation_noise_s) || activation_noise_s < 0.0)
      throw ModelError("activation_noise_s must be >= 0");
    if (!finite(retrieval_threshold) || !finite(rotation_bla) || !finite(initial_utility))
      throw ModelError("model parameters must be finite");
    if (exit_patience < 1) throw ModelError("exit_patience must be >= 1");
    if (pursue_min_remaining < 0) throw ModelError("pursue_min_remaining must be >= 0");
    if (action_cost < 0) throw ModelError("action_cost must be >= 0");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// ---------------------------------------------------------------------------
// Parameter file: one "key = value" per line, '#' starts a comment.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ModelError("parameter '" + key + "': not a number: " + v);
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  int x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ModelError("parameter '" + key + "': not an integer: " + v);
  return x;
}

}  // namespace detail

// Sets one named field. Used by the parameter file reader and by sweeps.
inline void set_param(ModelParams& p, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "alpha") p.alpha = parse_double(key, value);
  else if (key == "utility_noise_s") p.utility_noise_s = parse_double(key, value);
  else if (key == "retrieval_threshold") p.retrieval_threshold = parse_double(key, value);
  else if (key == "rotation_bla") p.rotation_bla = parse_double(key, value);
  else if (key == "activation_noise_s") p.activation_noise_s = parse_double(key, value);
  else if (key == "initial_utility") p.initial_utility = parse_double(key, value);
  else if (key == "exit_patience") p.exit_patience = parse_int(key, value);
  else if (key == "pursue_min_remaining") p.pursue_min_remaining = parse_int(key, value);
  else if (key == "reward_catch") p.reward_catch = parse_int(key, value);
  else if (key == "reward_exit") p.reward_exit = parse_int(key, value);
  else if (key == "action_cost") p.action_cost = parse_int(key, value);
  else if (key == "discount") {
    if (value == "actions_elapsed") p.discount = RewardDiscount::ActionsElapsed;
    else if (value == "uniform") p.discount = RewardDiscount::Uniform;
    else throw ModelError("parameter 'discount': expected actions_elapsed or uniform");
  } else {
    throw ModelError("unknown model parameter '" + key + "'");
  }
}

inline ModelParams parse_params(std::string_view text, ModelParams base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ModelError("line " + std::to_string(lineno) + ": expected key = value");
    set_param(base, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  base.validate();
  return base;
}

inline std::string to_text(const ModelParams& p) {
  // Shortest form that parses back to the same double.
  auto num = [](double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
  };
  std::ostringstream out;
  out << "alpha = " << num(p.alpha) << '\n'
      << "utility_noise_s = " << num(p.utility_noise_s) << '\n'
      << "retrieval_threshold = " << num(p.retrieval_threshold) << '\n'
      << "rotation_bla = " << num(p.rotation_bla) << '\n'
      << "activation_noise_s = " << num(p.activation_noise_s) << '\n'
      << "initial_utility = " << num(p.initial_utility) << '\n'
      << "exit_patience = " << p.exit_patience << '\n'
      << "pursue_min_remaining = " << p.pursue_min_remaining << '\n'
      << "reward_catch = " << num(p.reward_catch) << '\n'
      << "reward_exit = " << num(p.reward_exit) << '\n'
      << "action_cost = " << num(p.action_cost) << '\n'
      << "discount = " << (p.discount == RewardDiscount::Uniform ? "uniform" : "actions_elapsed")
      << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Declarative memory

using SlotMap = std::map<std::string, std::string>;

struct Chunk {
  std::string name;
  SlotMap slots;
  double base_level_activation = 0.0;

  bool matches(const SlotMap& pattern) const {
    for (const auto& [slot, value] : pattern) {
      auto it = slots.find(slot);
      if (it == slots.end() || it->second != value) return false;
    }
    return true;
  }

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

class DeclarativeMemory {
 public:
  void add(Chunk chunk) {
    if (!std::isfinite(chunk.base_level_activation))
      throw ModelError("chunk '" + chunk.name + "' has non-finite activation");
    if (index_.contains(chunk.name)) throw ModelError("duplicate chunk name '" + chunk.name + "'");
    index_.emplace(chunk.name, chunks_.size());
    chunks_.push_back(std::move(chunk));
  }

  const Chunk* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &chunks_[it->second];
  }

  std::span<const Chunk> chunks() const { return chunks_; }

 private:
  std::vector<Chunk> chunks_;
  std::map<std::string, std::size_t> index_;
};

// Highest-activation matching chunk, or nullopt (retrieval failure) when no
// chunk matches or the winner falls below threshold. Each matching chunk
// gets its own logistic activation noise draw when noise_s > 0; ties keep
// the lexicographically first name.
inline std::optional<Chunk> retrieve_chunk(const DeclarativeMemory& memory, const SlotMap& pattern,
                                           double threshold, Rng& rng, double noise_s = 0.0) {
  const Chunk* best = nullptr;
  double best_activation = 0.0;
  for (const Chunk& c : memory.chunks()) {
    if (!c.matches(pattern)) continue;
    const double a = c.base_level_activation + rng.logistic(noise_s);
    if (!best || a > best_activation || (a == best_activation && c.name < best->name)) {
      best = &c;
      best_activation = a;
    }
  }
  if (!best || best_activation < threshold) return std::nullopt;
  return *best;
}

inline std::string directions_string(const std::vector<Orientation>& dirs) {
  std::string s;
  for (Orientation o : dirs) s += to_string(o);
  return s;
}

inline std::vector<Orientation> parse_directions(std::string_view s) {
  std::vector<Orientation> out;
  for (char c : s) {
    if (auto o = parse_orientation(std::string_view(&c, 1))) out.push_back(*o);
  }
  return out;
}

inline std::string cell_key(Cell c) { return std::to_string(c.row) + "," + std::to_string(c.col); }

// Static knowledge of the board: possible moves from every passable cell
// (exits are never stepped onto while pursuing), plus the four anticlockwise
// rotation steps at the rotation base-level activation.
inline DeclarativeMemory build_memory(const BoardLayout& layout, const ModelParams& params) {
  DeclarativeMemory mem;
  for (int r = 0; r < layout.height(); ++r) {
    for (int c = 0; c < layout.width(); ++c) {
      const Cell cell{r, c};
      if (!layout.walkable(cell)) continue;
      std::vector<Orientation> moves;
      for (Orientation o : kAllOrientations)
        if (layout.passable(step(cell, o))) moves.push_back(o);
      mem.add({"moves-" + cell_key(cell),
               {{"kind", "possible-moves"},
                {"row", std::to_string(r)},
                {"col", std::to_string(c)},
                {"moves", directions_string(moves)}},
               0.0});
    }
  }
  for (Orientation o : kAllOrientations) {
    mem.add({std::string("rotate-from-") + std::string(to_string(o)),
             {{"kind", "rotation-step"},
              {"from", std::string(to_string(o))},
              {"to", std::string(to_string(anticlockwise(o)))}},
             params.rotation_bla});
  }
  return mem;
}

// ---------------------------------------------------------------------------
// Buffers

enum class Goal : std::uint8_t { FindPig, CheckExit, CatchPig, Navigate, Rotate, Exit };

inline std::string_view to_string(Goal g) {
  switch (g) {
    case Goal::FindPig: return "FindPig";
    case Goal::CheckExit: return "CheckExit";
    case Goal::CatchPig: return "CatchPig";
    case Goal::Navigate: return "Navigate";
    case Goal::Rotate: return "Rotate";
    case Goal::Exit: return "Exit";
  }
  return "?";
}

enum class ExitDecision : std::uint8_t { Proceed, CheckAgain, Exit };

inline std::string_view to_string(ExitDecision d) {
  switch (d) {
    case ExitDecision::Proceed: return "Proceed";
    case ExitDecision::CheckAgain: return "CheckAgain";
    case ExitDecision::Exit: return "Exit";
  }
  return "?";
}

enum class BlockKind : std::uint8_t { NotBlocked, BlockedByPig, BlockedByAI, BlockedByWall };

struct BlockVerdict {
  BlockKind kind = BlockKind::NotBlocked;
  // For AI/wall blocks: the randomly chosen different direction to take.
  std::optional<Orientation> alternate;

  friend bool operator==(const BlockVerdict&, const BlockVerdict&) = default;
};

struct VisualBuffer {
  const BoardLayout* board = nullptr;
  Pose player;
  Pose ai;
  Cell pig;
  int actions_used = 0;

  bool occupied(Cell c) const { return c == player.cell || c == ai.cell || c == pig; }
  int actions_remaining() const { return kActionLimit - actions_used; }
};

struct ImaginalBuffer {
  std::optional<int> last_ai_pig_distance;
  int non_improving_checks = 0;
  std::optional<ExitDecision> decision;
  std::optional<BlockVerdict> block;
  bool rotation_failed = false;
};

struct RetrievalBuffer {
  std::optional<Chunk> chunk;
  bool failed = false;
  bool requested = false;

  void clear() { *this = {}; }
};

struct ModelBuffers {
  Goal goal = Goal::FindPig;
  VisualBuffer visual;
  ImaginalBuffer imaginal;
  RetrievalBuffer retrieval;
};

inline VisualBuffer perceive(const GameState& s) {
  return {&s.layout, s.player, s.ai, s.pig, s.actions_used};
}

// ---------------------------------------------------------------------------
// Utility learning and conflict resolution

struct Production;
struct ModelContext;

struct Production {
  std::string name;
  std::function<bool(const ModelBuffers&)> condition;
  // Returns a key when the production presses one; internal productions
  // only update buffers and return nullopt.
  std::function<std::optional<ArrowKey>(ModelContext&)> action;
  double utility = 0.0;
  int fire_count = 0;
};

inline double update_utility(Production& p, double effective_reward, double alpha) {
  if (!std::isfinite(effective_reward) || !std::isfinite(alpha) || !std::isfinite(p.utility))
    throw ModelError("update_utility: non-finite input");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ModelError("update_utility: alpha must be in (0, 1]");
  p.utility = p.utility + alpha * (effective_reward - p.utility);
  ++p.fire_count;
  return p.utility;
}

// argmax of utility + logistic(noise_s) per production; exact ties go to the
// lexicographically first name.
inline Production& resolve_conflict(std::span<Production* const> matching, double noise_s, Rng& rng) {
  if (matching.empty()) throw ModelError("model halt: no production matches");
  Production* best = nullptr;
  double best_value = 0.0;
  for (Production* p : matching) {
    const double v = p->utility + rng.logistic(noise_s);
    if (!best || v > best_value || (v == best_value && p->name < best->name)) {
      best = p;
      best_value = v;
    }
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Strategy checks

// Tracks the Manhattan distance between the AI and the pig across checks.
// Closing in, holding steady, or already flanking the pig (distance 1)
// proceeds. A growing distance starts the count; the model checks again and
// exits after exit_patience consecutive checks without recovery.
inline ExitDecision exit_strategy_check(ModelBuffers& buffers, const ModelParams& params) {
  auto& im = buffers.imaginal;
  const int d = manhattan(buffers.visual.ai.cell, buffers.visual.pig);
  const auto previous = im.last_ai_pig_distance;
  im.last_ai_pig_distance = d;
  // A steady distance only counts against the AI once it has started to
  // drift away; on its own it is the AI turning in place.
  const bool steady = previous && d == *previous && im.non_improving_checks == 0;
  if (!previous || d < *previous || d <= 1 || steady) {
    im.non_improving_checks = 0;
    return ExitDecision::Proceed;
  }
  ++im.non_improving_checks;
  return im.non_improving_checks >= params.exit_patience ? ExitDecision::Exit : ExitDecision::CheckAgain;
}

inline bool locally_free(const VisualBuffer& v, Cell c) {
  return v.board->walkable(c) && !v.occupied(c);
}

inline BlockVerdict check_blocked(const ModelBuffers& buffers, Rng& rng) {
  const VisualBuffer& v = buffers.visual;
  const Cell ahead = step(v.player.cell, v.player.facing);
  BlockKind kind = BlockKind::NotBlocked;
  if (ahead == v.pig) return {BlockKind::BlockedByPig, std::nullopt};
  if (ahead == v.ai.cell) kind = BlockKind::BlockedByAI;
  else if (!v.board->walkable(ahead)) kind = BlockKind::BlockedByWall;
  else return {};

  std::vector<Orientation> options;
  for (Orientation o : kAllOrientations) {
    if (o != v.player.facing && locally_free(v, step(v.player.cell, o))) options.push_back(o);
  }
  // Boxed in: wait by rotating in place.
  if (options.empty()) return {kind, anticlockwise(v.player.facing)};
  return {kind, options[rng.uniform_index(options.size())]};
}

struct RotationStats {
  long attempts = 0;
  long fired = 0;
};

// Anticlockwise in-place rotation while flanking the pig, gated by retrieval
// of the matching rotation-step chunk. nullopt means retrieval failed and
// the caller falls through to navigation.
inline std::optional<ArrowKey> rotation_strategy(ModelBuffers& buffers, const DeclarativeMemory& memory,
                                                 const ModelParams& params, Rng& rng,
                                                 RotationStats* stats = nullptr) {
  const Orientation facing = buffers.visual.player.facing;
  auto chunk = retrieve_chunk(memory,
                              {{"kind", "rotation-step"}, {"from", std::string(to_string(facing))}},
                              params.retrieval_threshold, rng, params.activation_noise_s);
  if (stats) ++stats->attempts;
  buffers.retrieval.requested = true;
  if (!chunk) {
    buffers.retrieval.failed = true;
    buffers.retrieval.chunk.reset();
    return std::nullopt;
  }
  const auto to = parse_orientation(chunk->slots.at("to"));
  buffers.retrieval.chunk = std::move(chunk);
  buffers.retrieval.failed = false;
  if (stats) ++stats->fired;
  return key_for(*to);
}

// ---------------------------------------------------------------------------
// Navigation

inline constexpr std::string_view kNavClosest = "navigate-closest-to-pig";
inline constexpr std::string_view kNavFewest = "navigate-fewest-rotations";

// The flank cell that best sets up a pin: the free cell next to the pig
// farthest from the AI, then nearest the player, then N,E,S,W order.
inline std::optional<Cell> best_flank(const VisualBuffer& v) {
  std::optional<Cell> best;
  for (Orientation o : kAllOrientations) {
    const Cell c = step(v.pig, o);
    if (!v.board->passable(c) || c == v.ai.cell) continue;
    if (!best) {
      best = c;
      continue;
    }
    const int da = manhattan(c, v.ai.cell), db = manhattan(*best, v.ai.cell);
    if (da > db || (da == db && manhattan(c, v.player.cell) < manhattan(*best, v.player.cell)))
      best = c;
  }
  return best;
}

// Preference of the closest-to-pig production: move toward the best flank.
inline std::optional<Orientation> prefer_closest(const VisualBuffer& v,
                                                 const std::vector<Orientation>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const Cell target = best_flank(v).value_or(v.pig);
  std::optional<Orientation> best;
  int best_d = 0;
  for (Orientation o : candidates) {
    const int d = manhattan(step(v.player.cell, o), target);
    const bool better = !best || d < best_d ||
                        (d == best_d && o == v.player.facing && *best != v.player.facing);
    if (better) {
      best = o;
      best_d = d;
    }
  }
  return best;
}

// Preference of the fewest-rotations production: keep the current heading if
// it closes on the pig, else the first closing direction, else the
// least-distance move.
inline std::optional<Orientation> prefer_fewest_rotations(const VisualBuffer& v,
                                                          const std::vector<Orientation>& candidates) {
  if (candidates.empty()) return std::nullopt;
  const int now = manhattan(v.player.cell, v.pig);
  std::vector<Orientation> closing;
  for (Orientation o : candidates)
    if (manhattan(step(v.player.cell, o), v.pig) < now) closing.push_back(o);
  if (!closing.empty()) {
    if (std::find(closing.begin(), closing.end(), v.player.facing) != closing.end()) return v.player.facing;
    return closing.front();
  }
  std::optional<Orientation> best;
  int best_d = 0;
  for (Orientation o : candidates) {
    const int d = manhattan(step(v.player.cell, o), v.pig);
    if (!best || d < best_d || (d == best_d && o == v.player.facing)) {
      best = o;
      best_d = d;
    }
  }
  return best;
}

// Greedy Manhattan-reducing fallback used when the possible-moves chunk
// cannot be retrieved.
inline std::optional<Orientation> greedy_direction(const VisualBuffer& v) {
  std::optional<Orientation> best;
  int best_d = 0;
  for (Orientation o : kAllOrientations) {
    const Cell c = step(v.player.cell, o);
    if (!v.board->passable(c) || v.occupied(c)) continue;
    const int d = manhattan(c, v.pig);
    if (!best || d < best_d) {
      best = o;
      best_d = d;
    }
  }
  return best;
}

struct NavigationChoice {
  ArrowKey key = ArrowKey::Up;
  // Production whose preference was used (or the fallback's name).
  std::string production;
};

inline std::vector<Orientation> candidate_moves(const VisualBuffer& v, const Chunk& moves_chunk) {
  std::vector<Orientation> out;
  for (Orientation o : parse_directions(moves_chunk.slots.at("moves")))
    if (!v.occupied(step(v.player.cell, o))) out.push_back(o);
  return out;
}

// Retrieves the possible-moves chunk for the player's cell and lets the two
// navigation productions compete on learned utility.
inline NavigationChoice navigation_step(ModelBuffers& buffers, const DeclarativeMemory& memory,
                                        std::span<Production* const> nav_productions,
                                        const ModelParams& params, Rng& rng) {
  const VisualBuffer& v = buffers.visual;
  const Orientation wait = anticlockwise(v.player.facing);
  auto chunk = retrieve_chunk(memory,
                              {{"kind", "possible-moves"},
                               {"row", std::to_string(v.player.cell.row)},
                               {"col", std::to_string(v.player.cell.col)}},
                              params.retrieval_threshold, rng, params.activation_noise_s);
  buffers.retrieval.requested = true;
  if (!chunk) {
    buffers.retrieval.failed = true;
    return {key_for(greedy_direction(v).value_or(wait)), "navigate-greedy-fallback"};
  }
  const auto candidates = candidate_moves(v, *chunk);
  buffers.retrieval.chunk = std::move(chunk);
  Production& chosen = resolve_conflict(nav_productions, params.utility_noise_s, rng);
  std::optional<Orientation> dir = chosen.name == kNavClosest ? prefer_closest(v, candidates)
                                                              : prefer_fewest_rotations(v, candidates);
  return {key_for(dir.value_or(wait)), chosen.name};
}

// ---------------------------------------------------------------------------
// Rewards

struct Firing {
  std::string production;
  int actions_elapsed = 0;
};

struct RewardEvent {
  double base_reward = 0.0;
  std::vector<Firing> fired_since_last;
};

inline double effective_reward(const RewardEvent& e, const Firing& f, RewardDiscount discount) {
  if (f.actions_elapsed < 0) throw ModelError("negative actions elapsed");
  return discount == RewardDiscount::Uniform ? e.base_reward : e.base_reward - f.actions_elapsed;
}

// Applies one utility update per recorded firing.
inline void propagate_reward(const RewardEvent& event, std::span<Production> productions,
                             const ModelParams& params) {
  for (const Firing& f : event.fired_since_last) {
    auto it = std::find_if(productions.begin(), productions.end(),
                           [&](const Production& p) { return p.name == f.production; });
    if (it == productions.end()) throw ModelError("reward for unknown production " + f.production);
    update_utility(*it, effective_reward(event, f, params.discount), params.alpha);
  }
}

// ---------------------------------------------------------------------------
// Model

struct TraceEvent {
  int trial = 0;
  int actions_used = 0;
  int cycle = 0;
  std::string production;
  double utility = 0.0;
  std::string goal;
  std::string retrieval;  // chunk name, "failure", or empty
  std::string key;        // pressed key, or empty for internal productions
};

inline nlohmann::ordered_json to_json(const TraceEvent& e) {
  nlohmann::ordered_json j;
  j["trial"] = e.trial;
  j["actions_used"] = e.actions_used;
  j["cycle"] = e.cycle;
  j["production"] = e.production;
  j["utility"] = e.utility;
  j["goal"] = e.goal;
  j["retrieval"] = e.retrieval;
  j["key"] = e.key;
  return j;
}

struct ModelStats {
  RotationStats rotation;
  long exits_chosen = 0;
  long keys_pressed = 0;
};

struct ModelContext {
  ModelBuffers& buffers;
  const DeclarativeMemory& memory;
  const ModelParams& params;
  Rng& rng;
  ModelStats& stats;
  std::vector<Production>& productions;
  std::string last_choice;
};

class CognitiveModel {
 public:
  static constexpr int kMaxCyclesPerKey = 32;

  CognitiveModel(const CognitiveModel&) = delete;
  CognitiveModel& operator=(const CognitiveModel&) = delete;

  CognitiveModel(ModelParams params, const BoardLayout& layout, std::uint64_t seed)
      : params_(params), memory_(build_memory(layout, params)), rng_(seed) {
    params_.validate();
    build_productions();
  }

  const ModelParams& params() const { return params_; }
  const DeclarativeMemory& memory() const { return memory_; }
  const std::vector<Production>& productions() const { return productions_; }
  const ModelBuffers& buffers() const { return buffers_; }
  const ModelStats& stats() const { return stats_; }

  const Production& production(std::string_view name) const {
    for (const auto& p : productions_)
      if (p.name == name) return p;
    throw ModelError("no production named " + std::string(name));
  }
  Production& production(std::string_view name) {
    return const_cast<Production&>(std::as_const(*this).production(name));
  }

  void set_trace(std::function<void(const TraceEvent&)> sink) { trace_ = std::move(sink); }

  void begin_trial(const GameState& state) {
    buffers_ = {};
    buffers_.goal = Goal::FindPig;
    buffers_.visual = perceive(state);
    trial_firings_.clear();
    trial_ = state.trial_index;
  }

  // Runs match-select-fire cycles until a key is pressed.
  ArrowKey decide(const GameState& state) {
    buffers_.visual = perceive(state);
    if (buffers_.goal != Goal::Exit && buffers_.goal != Goal::FindPig) buffers_.goal = Goal::CheckExit;
    buffers_.imaginal.decision.reset();
    buffers_.imaginal.block.reset();
    buffers_.imaginal.rotation_failed = false;
    buffers_.retrieval.clear();

    ModelContext ctx{buffers_, memory_, params_, rng_, stats_, productions_, {}};
    std::vector<std::string> turn_firings;
    for (int cycle = 0; cycle < kMaxCyclesPerKey; ++cycle) {
      std::vector<Production*> matching;
      for (auto& p : productions_)
        if (p.condition(buffers_)) matching.push_back(&p);
      Production& p = resolve_conflict(matching, params_.utility_noise_s, rng_);
      const Goal goal_before = buffers_.goal;
      ctx.last_choice.clear();
      const std::optional<ArrowKey> key = p.action(ctx);
      const std::string fired = ctx.last_choice.empty() ? p.name : ctx.last_choice;
      turn_firings.push_back(fired);
      emit_trace(cycle, fired, goal_before, key);
      if (key) {
        ++stats_.keys_pressed;
        // Every production fired this turn is charged for the keypress and
        // marked with the action count after it.
        RewardEvent cost{-static_cast<double>(params_.action_cost), {}};
        for (const auto& name : turn_firings) {
          cost.fired_since_last.push_back({name, 0});
          trial_firings_.push_back({name, state.actions_used + 1});
        }
        propagate_reward(cost, productions_, params_);
        return *key;
      }
    }
    throw ModelError("model halt: no key after " + std::to_string(kMaxCyclesPerKey) + " cycles");
  }

  // Terminal reward to every production fired this trial, discounted by
  // the actions taken since each firing.
  void end_trial(TrialStatus outcome, int actions_used) {
    double base = 0.0;
    if (outcome == TrialStatus::Caught) base = params_.reward_catch;
    else if (outcome == TrialStatus::Exited) base = params_.reward_exit;
    RewardEvent event{base, {}};
    for (const auto& f : trial_firings_)
      event.fired_since_last.push_back({f.production, std::max(0, actions_used - f.actions_after)});
    propagate_reward(event, productions_, params_);
    trial_firings_.clear();
  }

 private:
  void emit_trace(int cycle, const std::string& name, Goal goal, std::optional<ArrowKey> key) {
    if (!trace_) return;
    TraceEvent e;
    e.trial = trial_;
    e.actions_used = buffers_.visual.actions_used;
    e.cycle = cycle;
    e.production = name;
    e.utility = production(name).utility;
    e.goal = std::string(to_string(goal));
    if (buffers_.retrieval.requested)
      e.retrieval = buffers_.retrieval.failed ? "failure"
                                              : (buffers_.retrieval.chunk ? buffers_.retrieval.chunk->name : "");
    if (key) e.key = std::string(to_string(*key));
    trace_(e);
  }

  void add(std::string name, std::function<bool(const ModelBuffers&)> cond,
           std::function<std::optional<ArrowKey>(ModelContext&)> act) {
    productions_.push_back({std::move(name), std::move(cond), std::move(act), params_.initial_utility, 0});
  }

  static bool flanking_pig(const ModelBuffers& b) { return adjacent(b.visual.player.cell, b.visual.pig); }

  void build_productions() {
    using Opt = std::optional<ArrowKey>;

    add("find-pig", [](const ModelBuffers& b) { return b.goal == Goal::FindPig; },
        [](ModelContext& c) -> Opt {
          c.buffers.goal = Goal::CheckExit;
          return std::nullopt;
        });

    add("assess-ai-proximity",
        [](const ModelBuffers& b) {
          return b.goal == Goal::CheckExit && !b.imaginal.decision && !flanking_pig(b);
        },
        [](ModelContext& c) -> Opt {
          c.buffers.imaginal.decision = exit_strategy_check(c.buffers, c.params);
          return std::nullopt;
        });

    // Next to the pig the model is already committed and waits for the AI;
    // the distance is re-baselined once it leaves.
    add("stay-with-pig",
        [](const ModelBuffers& b) {
          return b.goal == Goal::CheckExit && !b.imaginal.decision && flanking_pig(b);
        },
        [](ModelContext& c) -> Opt {
          c.buffers.imaginal.last_ai_pig_distance.reset();
          c.buffers.imaginal.non_improving_checks = 0;
          c.buffers.imaginal.decision = ExitDecision::Proceed;
          return std::nullopt;
        });

    add("decide-exit",
        [](const ModelBuffers& b) {
          return b.goal == Goal::CheckExit && b.imaginal.decision == ExitDecision::Exit;
        },
        [](ModelContext& c) -> Opt {
          c.buffers.goal = Goal::Exit;
          ++c.stats.exits_chosen;
          return std::nullopt;
        });

    // Navigation is allowed while enough actions remain, or once this turn's
    // check has ruled the exit out.
    add("decide-proceed",
        [min = params_.pursue_min_remaining](const ModelBuffers& b) {
          if (b.goal != Goal::CheckExit || !b.imaginal.decision) return false;
          if (*b.imaginal.decision == ExitDecision::Proceed) return true;
          return *b.imaginal.decision == ExitDecision::CheckAgain &&
                 b.visual.actions_remaining() > min;
        },
        [](ModelContext& c) -> Opt {
          c.buffers.goal = Goal::Navigate;
          return std::nullopt;
        });

    add("wait-check-again",
        [min = params_.pursue_min_remaining](const ModelBuffers& b) {
          return b.goal == Goal::CheckExit && b.imaginal.decision == ExitDecision::CheckAgain &&
                 b.visual.actions_remaining() <= min;
        },
        [](ModelContext& c) -> Opt { return key_for(anticlockwise(c.buffers.visual.player.facing)); });

    add("check-blocked",
        [](const ModelBuffers& b) { return b.goal == Goal::Navigate && !b.imaginal.block; },
        [](ModelContext& c) -> Opt {
          c.buffers.imaginal.block = check_blocked(c.buffers, c.rng);
          return std::nullopt;
        });

    add("pig-found",
        [](const ModelBuffers& b) {
          return b.goal == Goal::Navigate && b.imaginal.block && !b.imaginal.rotation_failed &&
                 (b.imaginal.block->kind == BlockKind::BlockedByPig || flanking_pig(b));
        },
        [](ModelContext& c) -> Opt {
          c.buffers.goal = Goal::CatchPig;
          return std::nullopt;
        });

    add("turn-away-from-block",
        [](const ModelBuffers& b) {
          return b.goal == Goal::Navigate && b.imaginal.block && !flanking_pig(b) &&
                 (b.imaginal.block->kind == BlockKind::BlockedByAI ||
                  b.imaginal.block->kind == BlockKind::BlockedByWall);
        },
        [](ModelContext& c) -> Opt { return key_for(*c.buffers.imaginal.block->alternate); });

    add("rotate-wait-for-ai", [](const ModelBuffers& b) { return b.goal == Goal::CatchPig; },
        [](ModelContext& c) -> Opt {
          c.buffers.goal = Goal::Rotate;
          auto key = rotation_strategy(c.buffers, c.memory, c.params, c.rng, &c.stats.rotation);
          if (!key) {
            c.buffers.goal = Goal::Navigate;
            c.buffers.imaginal.rotation_failed = true;
          }
          return key;
        });

    // The navigation pair never matches on its own: plan-navigation retrieves
    // the possible-moves chunk and the pair competes inside navigation_step.
    // Credit goes to whichever navigation production won.
    add("plan-navigation",
        [](const ModelBuffers& b) {
          if (b.goal != Goal::Navigate || !b.imaginal.block) return false;
          if (b.imaginal.rotation_failed) return true;
          return b.imaginal.block->kind == BlockKind::NotBlocked && !flanking_pig(b);
        },
        [](ModelContext& c) -> Opt {
          std::array<Production*, 2> pair{};
          for (auto& p : c.productions) {
            if (p.name == kNavClosest) pair[0] = &p;
            if (p.name == kNavFewest) pair[1] = &p;
          }
          NavigationChoice choice = navigation_step(c.buffers, c.memory, pair, c.params, c.rng);
          c.last_choice = choice.production;
          return choice.key;
        });
    auto never = [](const ModelBuffers&) { return false; };
    auto inert = [](ModelContext&) -> Opt { return std::nullopt; };
    add(std::string(kNavClosest), never, inert);
    add(std::string(kNavFewest), never, inert);
    add("navigate-greedy-fallback", never, inert);

    add("move-to-exit", [](const ModelBuffers& b) { return b.goal == Goal::Exit; },
        [](ModelContext& c) -> Opt {
          const VisualBuffer& v = c.buffers.visual;
          const auto exits = v.board->exits();
          const std::array<Cell, 2> occupied{v.ai.cell, v.pig};
          const auto path = a_star(*v.board, v.player.cell, exits, occupied);
          if (!path || path->empty()) return key_for(anticlockwise(v.player.facing));
          return key_for(*direction_between(v.player.cell, path->front()));
        });
  }

  ModelParams params_;
  DeclarativeMemory memory_;
  Rng rng_;
  std::vector<Production> productions_;
  ModelBuffers buffers_;
  ModelStats stats_;
  struct FiringMark {
    std::string production;
    int actions_after = 0;
  };
  std::vector<FiringMark> trial_firings_;
  int trial_ = 0;
  std::function<void(const TraceEvent&)> trace_;
};

}  // namespace pigchase::cog
