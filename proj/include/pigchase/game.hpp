#pragma once

// Pig Chase engine: board layout, pose/movement rules, pig motion,
// termination and scoring. All transitions are pure functions of a
// GameState value; randomness comes only from the state's own stream.

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pigchase/grid.hpp"
#include "pigchase/rng.hpp"

namespace pigchase {

inline constexpr int kBoardSize = 9;
inline constexpr int kPlayableSize = 5;
inline constexpr int kActionLimit = 25;
inline constexpr int kTrialsPerSession = 15;
inline constexpr int kPracticeTrials = 3;
inline constexpr int kAttentionTrial = 8;

inline constexpr int kRewardCatch = 25;
inline constexpr int kRewardExit = 5;

enum class TileKind : std::uint8_t { Passable, Blocked, Exit };

enum class TrialStatus : std::uint8_t { Running, Caught, Exited, Exhausted, TimedOut };

enum class MoveEffect : std::uint8_t { Moved, Rotated, Bumped };

enum class ScoringMode : std::uint8_t { DeductAlways, DeductOnScore };

enum class PigMotionMode : std::uint8_t { Static, Random };

struct PigMotion {
  PigMotionMode mode = PigMotionMode::Random;
  double p_stay = 0.5;
};

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GameError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Running: return "Running";
    case TrialStatus::Caught: return "Caught";
    case TrialStatus::Exited: return "Exited";
    case TrialStatus::Exhausted: return "Exhausted";
    case TrialStatus::TimedOut: return "TimedOut";
  }
  return "?";
}

inline std::optional<TrialStatus> parse_status(std::string_view s) {
  for (auto st : {TrialStatus::Running, TrialStatus::Caught, TrialStatus::Exited,
                  TrialStatus::Exhausted, TrialStatus::TimedOut}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

inline std::string_view to_string(MoveEffect e) {
  switch (e) {
    case MoveEffect::Moved: return "Moved";
    case MoveEffect::Rotated: return "Rotated";
    case MoveEffect::Bumped: return "Bumped";
  }
  return "?";
}

inline std::string_view to_string(ScoringMode m) {
  return m == ScoringMode::DeductAlways ? "DeductAlways" : "DeductOnScore";
}

inline std::optional<ScoringMode> parse_scoring_mode(std::string_view s) {
  if (s == "DeductAlways" || s == "deduct-always") return ScoringMode::DeductAlways;
  if (s == "DeductOnScore" || s == "deduct-on-score") return ScoringMode::DeductOnScore;
  return std::nullopt;
}

constexpr bool is_terminal(TrialStatus s) { return s != TrialStatus::Running; }

// Plain rectangular tile grid without game invariants. Planners operate on
// this so they can be exercised on arbitrary (even disconnected) maps.
class TileMap {
 public:
  TileMap() : TileMap(kBoardSize, kBoardSize) {}
  TileMap(int rows, int cols, TileKind fill = TileKind::Blocked)
      : rows_(rows), cols_(cols), tiles_(static_cast<std::size_t>(rows * cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool in_bounds(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < rows_ && c.col < cols_; }

  TileKind kind(Cell c) const {
    return in_bounds(c) ? tiles_[index(c)] : TileKind::Blocked;
  }
  void set(Cell c, TileKind k) { tiles_.at(index(c)) = k; }

  // Agents may stand on Passable and Exit tiles.
  bool walkable(Cell c) const { return kind(c) != TileKind::Blocked; }

  friend bool operator==(const TileMap&, const TileMap&) = default;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row * cols_ + c.col); }

  int rows_;
  int cols_;
  std::vector<TileKind> tiles_;
};

// Cells reachable from start under 4-adjacency over walkable tiles.
inline std::vector<Cell> flood_fill(const TileMap& map, Cell start) {
  std::vector<Cell> seen;
  if (!map.walkable(start)) return seen;
  std::vector<char> mark(static_cast<std::size_t>(map.rows() * map.cols()), 0);
  auto idx = [&](Cell c) { return static_cast<std::size_t>(c.row * map.cols() + c.col); };
  std::vector<Cell> stack{start};
  mark[idx(start)] = 1;
  while (!stack.empty()) {
    Cell c = stack.back();
    stack.pop_back();
    seen.push_back(c);
    for (Orientation o : kAllOrientations) {
      Cell n = step(c, o);
      if (map.walkable(n) && !mark[idx(n)]) {
        mark[idx(n)] = 1;
        stack.push_back(n);
      }
    }
  }
  return seen;
}

class BoardLayout {
 public:
  // Validates every board invariant; throws LayoutError on violation.
  BoardLayout(TileMap tiles, Pose player_start, Pose ai_start, Cell pig_start)
      : tiles_(std::move(tiles)),
        player_start_(player_start),
        ai_start_(ai_start),
        pig_start_(pig_start) {
    validate();
  }

  const TileMap& tiles() const { return tiles_; }
  int width() const { return tiles_.cols(); }
  int height() const { return tiles_.rows(); }
  TileKind kind(Cell c) const { return tiles_.kind(c); }
  bool in_bounds(Cell c) const { return tiles_.in_bounds(c); }
  bool walkable(Cell c) const { return tiles_.walkable(c); }
  bool passable(Cell c) const { return tiles_.kind(c) == TileKind::Passable; }
  bool is_exit(Cell c) const { return tiles_.kind(c) == TileKind::Exit; }

  const Pose& player_start() const { return player_start_; }
  const Pose& ai_start() const { return ai_start_; }
  Cell pig_start() const { return pig_start_; }

  // Row-major order.
  std::vector<Cell> exits() const {
    std::vector<Cell> out;
    for (int r = 0; r < height(); ++r)
      for (int c = 0; c < width(); ++c)
        if (is_exit({r, c})) out.push_back({r, c});
    return out;
  }

  // Exit with the largest column; ties go to the smallest row.
  std::optional<Cell> rightmost_exit() const {
    std::optional<Cell> best;
    for (Cell e : exits()) {
      if (!best || e.col > best->col) best = e;
    }
    return best;
  }

  int playable_count() const {
    int n = 0;
    for (int r = 0; r < height(); ++r)
      for (int c = 0; c < width(); ++c) n += walkable({r, c}) ? 1 : 0;
    return n;
  }

  friend bool operator==(const BoardLayout&, const BoardLayout&) = default;

 private:
  void validate() const {
    if (tiles_.rows() != kBoardSize || tiles_.cols() != kBoardSize)
      throw LayoutError("layout must be 9x9");
    int min_r = kBoardSize, max_r = -1, min_c = kBoardSize, max_c = -1;
    std::vector<Cell> playable;
    for (int r = 0; r < kBoardSize; ++r) {
      for (int c = 0; c < kBoardSize; ++c) {
        if (!tiles_.walkable({r, c})) continue;
        playable.push_back({r, c});
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
      }
    }
    if (playable.empty()) throw LayoutError("layout has no playable tiles");
    if (max_r - min_r + 1 > kPlayableSize || max_c - min_c + 1 > kPlayableSize)
      throw LayoutError("playable region exceeds 5x5");
    if (min_r == 0 || min_c == 0 || max_r == kBoardSize - 1 || max_c == kBoardSize - 1)
      throw LayoutError("playable region must be ringed by blocked tiles");
    if (flood_fill(tiles_, playable.front()).size() != playable.size())
      throw LayoutError("playable region is disconnected");

    auto check_start = [&](Cell c, const char* what) {
      if (!tiles_.in_bounds(c) || tiles_.kind(c) != TileKind::Passable)
        throw LayoutError(std::string(what) + " start must be on a passable tile");
    };
    check_start(player_start_.cell, "player");
    check_start(ai_start_.cell, "ai");
    check_start(pig_start_, "pig");
    if (player_start_.cell == ai_start_.cell || player_start_.cell == pig_start_ ||
        ai_start_.cell == pig_start_)
      throw LayoutError("start cells must be distinct");
  }

  TileMap tiles_;
  Pose player_start_;
  Pose ai_start_;
  Cell pig_start_;
};

// Layout document: nine rows of nine symbols
//   '#' blocked, '.' passable, 'X' exit, 'P' player, 'A' ai, 'G' pig
// followed by an optional facing line such as "facing P=N A=S".
// Start markers sit on passable tiles. Missing facing defaults to P=N, A=S.
inline BoardLayout load_layout(std::string_view text) {
  std::vector<std::string> rows;
  std::optional<std::string> facing_line;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with("facing")) {
      if (facing_line) throw LayoutError("duplicate facing line");
      facing_line = line;
      continue;
    }
    if (facing_line) throw LayoutError("grid rows after facing line");
    rows.push_back(line);
  }
  if (rows.size() != kBoardSize)
    throw LayoutError("expected 9 grid rows, got " + std::to_string(rows.size()));

  TileMap tiles(kBoardSize, kBoardSize);
  std::optional<Cell> player, ai, pig;
  for (int r = 0; r < kBoardSize; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    if (row.size() != kBoardSize)
      throw LayoutError("row " + std::to_string(r) + " must have 9 symbols");
    for (int c = 0; c < kBoardSize; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      const Cell cell{r, c};
      auto mark = [&](std::optional<Cell>& slot, const char* what) {
        if (slot) throw LayoutError(std::string("duplicate ") + what + " marker");
        slot = cell;
        tiles.set(cell, TileKind::Passable);
      };
      switch (ch) {
        case '#': tiles.set(cell, TileKind::Blocked); break;
        case '.': tiles.set(cell, TileKind::Passable); break;
        case 'X': tiles.set(cell, TileKind::Exit); break;
        case 'P': mark(player, "player"); break;
        case 'A': mark(ai, "ai"); break;
        case 'G': mark(pig, "pig"); break;
        default:
          throw LayoutError(std::string("unknown layout symbol '") + ch + "'");
      }
    }
  }
  if (!player) throw LayoutError("missing player start marker 'P'");
  if (!ai) throw LayoutError("missing ai start marker 'A'");
  if (!pig) throw LayoutError("missing pig start marker 'G'");

  Orientation player_facing = Orientation::N;
  Orientation ai_facing = Orientation::S;
  if (facing_line) {
    std::istringstream fs(facing_line->substr(6));
    std::string tok;
    while (fs >> tok) {
      if (tok.size() != 3 || tok[1] != '=') throw LayoutError("bad facing token '" + tok + "'");
      auto o = parse_orientation(tok.substr(2));
      if (!o) throw LayoutError("bad orientation in '" + tok + "'");
      if (tok[0] == 'P') player_facing = *o;
      else if (tok[0] == 'A') ai_facing = *o;
      else throw LayoutError("bad facing target in '" + tok + "'");
    }
  }
  return BoardLayout(std::move(tiles), {*player, player_facing}, {*ai, ai_facing}, *pig);
}

inline std::string to_text(const BoardLayout& layout) {
  std::string out;
  for (int r = 0; r < layout.height(); ++r) {
    for (int c = 0; c < layout.width(); ++c) {
      const Cell cell{r, c};
      char ch = '.';
      if (cell == layout.player_start().cell) ch = 'P';
      else if (cell == layout.ai_start().cell) ch = 'A';
      else if (cell == layout.pig_start()) ch = 'G';
      else if (layout.kind(cell) == TileKind::Blocked) ch = '#';
      else if (layout.kind(cell) == TileKind::Exit) ch = 'X';
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  out += "facing P=";
  out += to_string(layout.player_start().facing);
  out += " A=";
  out += to_string(layout.ai_start().facing);
  out += '\n';
  return out;
}

inline constexpr std::string_view kDefaultLayoutText =
    "#########\n"
    "#########\n"
    "##....A##\n"
    "##.....##\n"
    "##X.G.X##\n"
    "##.....##\n"
    "##P....##\n"
    "#########\n"
    "#########\n"
    "facing P=N A=S\n";

inline const BoardLayout& default_layout() {
  static const BoardLayout layout = load_layout(kDefaultLayoutText);
  return layout;
}

struct GameRules {
  PigMotion pig;
  ScoringMode scoring = ScoringMode::DeductAlways;
};

struct GameState {
  BoardLayout layout = default_layout();
  GameRules rules;
  Pose player;
  Pose ai;
  Cell pig;
  int actions_used = 0;
  int trial_index = 1;
  TrialStatus status = TrialStatus::Running;
  Rng rng;

  bool occupied(Cell c) const { return c == player.cell || c == ai.cell || c == pig; }

  // Passable (not Exit), in bounds, and not held by any entity.
  bool free_for_pig(Cell c) const { return layout.passable(c) && !occupied(c); }

  int actions_remaining() const { return kActionLimit - actions_used; }
};

inline GameState start_trial(const BoardLayout& layout, GameRules rules, int trial_index, Rng rng) {
  GameState s{.layout = layout,
              .rules = rules,
              .player = layout.player_start(),
              .ai = layout.ai_start(),
              .pig = layout.pig_start(),
              .actions_used = 0,
              .trial_index = trial_index,
              .status = TrialStatus::Running,
              .rng = std::move(rng)};
  return s;
}

struct KeyResult {
  GameState state;
  MoveEffect effect;
};

// Shared rotate-vs-advance pose model. Returns the pose after one key and the
// effect; `blocked` reports whether a target cell is unavailable.
template <typename BlockedFn>
std::pair<Pose, MoveEffect> pose_after_key(Pose pose, Orientation dir, BlockedFn&& blocked) {
  if (dir != pose.facing) return {{pose.cell, dir}, MoveEffect::Rotated};
  const Cell target = step(pose.cell, dir);
  if (blocked(target)) return {pose, MoveEffect::Bumped};
  return {{target, dir}, MoveEffect::Moved};
}

// One player keypress. Every accepted key consumes exactly one action.
inline KeyResult apply_player_key(GameState state, ArrowKey key) {
  if (state.status != TrialStatus::Running) throw GameError("trial already terminated");
  if (state.actions_used >= kActionLimit) throw GameError("action budget exhausted");
  auto [pose, effect] = pose_after_key(state.player, key_direction(key), [&](Cell t) {
    return !state.layout.walkable(t) || t == state.ai.cell || t == state.pig;
  });
  state.player = pose;
  ++state.actions_used;
  return {std::move(state), effect};
}

inline std::vector<Cell> free_pig_neighbours(const GameState& state) {
  std::vector<Cell> out;
  for (Orientation o : kAllOrientations) {
    const Cell n = step(state.pig, o);
    if (state.free_for_pig(n)) out.push_back(n);
  }
  return out;
}

inline GameState pig_step(GameState state) {
  if (state.status != TrialStatus::Running) throw GameError("trial already terminated");
  if (state.rules.pig.mode == PigMotionMode::Static) return state;
  if (state.rng.bernoulli(state.rules.pig.p_stay)) return state;
  const auto options = free_pig_neighbours(state);
  if (options.empty()) return state;
  state.pig = options[state.rng.uniform_index(options.size())];
  return state;
}

// Precedence: Caught > Exited > Exhausted.
inline TrialStatus check_termination(const GameState& state) {
  if (is_terminal(state.status)) return state.status;
  if (free_pig_neighbours(state).empty()) return TrialStatus::Caught;
  if (state.layout.is_exit(state.player.cell)) return TrialStatus::Exited;
  if (state.actions_used >= kActionLimit) return TrialStatus::Exhausted;
  return TrialStatus::Running;
}

constexpr int base_reward(TrialStatus outcome) {
  switch (outcome) {
    case TrialStatus::Caught: return kRewardCatch;
    case TrialStatus::Exited: return kRewardExit;
    default: return 0;
  }
}

inline int trial_score(TrialStatus outcome, int actions_used, ScoringMode mode) {
  if (!is_terminal(outcome)) throw GameError("trial_score needs a terminal outcome");
  if (actions_used < 0) throw GameError("negative action count");
  const int base = base_reward(outcome);
  if (mode == ScoringMode::DeductOnScore && base == 0) return 0;
  return base - actions_used;
}

struct KeyLogEntry {
  ArrowKey key = ArrowKey::Up;
  double latency_ms = 0.0;
  std::int64_t server_ts_ms = 0;

  friend bool operator==(const KeyLogEntry&, const KeyLogEntry&) = default;
};

struct TrialRecord {
  int trial_index = 1;
  TrialStatus outcome = TrialStatus::Running;
  int actions_used = 0;
  int trial_score = 0;
  std::vector<KeyLogEntry> key_log;
  bool practice = false;
  std::optional<bool> attention_pass;
  // Player cell when the trial ended.
  Cell final_player_cell;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

constexpr bool is_practice_trial(int trial_index) { return trial_index <= kPracticeTrials; }

// Trial-8 attention check: the player left through the rightmost exit.
inline bool attention_passed(const BoardLayout& layout, TrialStatus outcome, Cell player_cell) {
  const auto exit = layout.rightmost_exit();
  return outcome == TrialStatus::Exited && exit && *exit == player_cell;
}

inline TrialRecord make_trial_record(const GameState& final_state, std::vector<KeyLogEntry> key_log) {
  if (!is_terminal(final_state.status)) throw GameError("trial still running");
  TrialRecord rec;
  rec.trial_index = final_state.trial_index;
  rec.outcome = final_state.status;
  rec.actions_used = final_state.actions_used;
  rec.trial_score = trial_score(final_state.status, final_state.actions_used, final_state.rules.scoring);
  rec.key_log = std::move(key_log);
  rec.practice = is_practice_trial(final_state.trial_index);
  rec.final_player_cell = final_state.player.cell;
  if (final_state.trial_index == kAttentionTrial)
    rec.attention_pass = attention_passed(final_state.layout, final_state.status, final_state.player.cell);
  return rec;
}

}  // namespace pigchase
