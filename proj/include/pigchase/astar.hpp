#pragma once

// A* pursuit agent: the scripted collaborator that chases the pig one
// sub-move per player action.

#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "pigchase/game.hpp"

namespace pigchase {

template <typename G>
concept WalkableGrid = requires(const G& g, Cell c) {
  { g.walkable(c) } -> std::convertible_to<bool>;
};

struct SearchNode {
  Cell cell;
  int g = 0;
  int h = 0;
  std::optional<Cell> parent;
};

// Manhattan distance to the nearest goal; admissible and consistent on a
// 4-connected unit-cost grid.
inline int nearest_goal_distance(Cell c, std::span<const Cell> goals) {
  int best = std::numeric_limits<int>::max();
  for (Cell g : goals) best = std::min(best, manhattan(c, g));
  return best;
}

// Shortest 4-adjacent path from start to the nearest reachable goal. The
// returned steps exclude start, so an empty vector means start is a goal and
// nullopt means no goal is reachable. Ties: successors expand N,E,S,W and
// equal-f nodes leave the open list first-in first-out.
template <WalkableGrid G>
std::optional<std::vector<Cell>> a_star(const G& grid, Cell start, std::span<const Cell> goals,
                                        std::span<const Cell> occupied) {
  const std::set<Cell> blocked(occupied.begin(), occupied.end());
  std::vector<Cell> targets;
  for (Cell g : goals) {
    if (g == start || (grid.walkable(g) && !blocked.contains(g))) targets.push_back(g);
  }
  if (targets.empty()) return std::nullopt;
  const std::set<Cell> target_set(targets.begin(), targets.end());

  // (f, insertion order, cell)
  using Entry = std::tuple<int, std::uint64_t, Cell>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::map<Cell, SearchNode> nodes;
  std::set<Cell> closed;
  std::uint64_t counter = 0;

  nodes[start] = SearchNode{start, 0, nearest_goal_distance(start, targets), std::nullopt};
  open.emplace(nodes[start].h, counter++, start);

  while (!open.empty()) {
    const auto [f, order, cell] = open.top();
    open.pop();
    if (closed.contains(cell)) continue;
    closed.insert(cell);
    const SearchNode& node = nodes.at(cell);
    if (target_set.contains(cell)) {
      std::vector<Cell> path;
      for (Cell c = cell; c != start; c = *nodes.at(c).parent) path.push_back(c);
      return std::vector<Cell>(path.rbegin(), path.rend());
    }
    for (Orientation o : kAllOrientations) {
      const Cell next = step(cell, o);
      if (!grid.walkable(next) || blocked.contains(next) || closed.contains(next)) continue;
      const int g = node.g + 1;
      auto it = nodes.find(next);
      if (it != nodes.end() && it->second.g <= g) continue;
      SearchNode child{next, g, nearest_goal_distance(next, targets), cell};
      nodes[next] = child;
      open.emplace(g + child.h, counter++, next);
    }
  }
  return std::nullopt;
}

enum class AiMotionModel : std::uint8_t {
  // Same pose model as the player: rotate first, advance on a later turn.
  RotateThenAdvance,
  // Step straight into the next path cell, turning in the same move.
  DirectStep,
};

enum class AgentMoveKind : std::uint8_t { Hold, Rotate, Advance };

struct AgentMove {
  AgentMoveKind kind = AgentMoveKind::Hold;
  Orientation direction = Orientation::N;

  friend bool operator==(const AgentMove&, const AgentMove&) = default;
};

inline std::string_view to_string(AgentMoveKind k) {
  switch (k) {
    case AgentMoveKind::Hold: return "Hold";
    case AgentMoveKind::Rotate: return "Rotate";
    case AgentMoveKind::Advance: return "Advance";
  }
  return "?";
}

// Passable cells next to the pig. Exit tiles are excluded: the pig can
// never enter them, so standing there does not help pin it.
inline std::vector<Cell> pig_flank_cells(const GameState& state) {
  std::vector<Cell> out;
  for (Orientation o : kAllOrientations) {
    const Cell c = step(state.pig, o);
    if (state.layout.passable(c)) out.push_back(c);
  }
  return out;
}

// Stateless: the plan is recomputed from scratch every call.
inline AgentMove ai_reply(const GameState& state,
                          AiMotionModel model = AiMotionModel::RotateThenAdvance) {
  if (state.status != TrialStatus::Running) return {};
  if (adjacent(state.ai.cell, state.pig)) return {};
  const auto goals = pig_flank_cells(state);
  const std::array<Cell, 2> occupied{state.player.cell, state.pig};
  const auto path = a_star(state.layout, state.ai.cell, goals, occupied);
  if (!path || path->empty()) return {};
  const Orientation dir = *direction_between(state.ai.cell, path->front());
  if (model == AiMotionModel::RotateThenAdvance && dir != state.ai.facing)
    return {AgentMoveKind::Rotate, dir};
  return {AgentMoveKind::Advance, dir};
}

inline GameState apply_agent_move(GameState state, AgentMove move) {
  switch (move.kind) {
    case AgentMoveKind::Hold: break;
    case AgentMoveKind::Rotate: state.ai.facing = move.direction; break;
    case AgentMoveKind::Advance: {
      const Cell target = step(state.ai.cell, move.direction);
      if (!state.layout.walkable(target) || state.occupied(target))
        throw GameError("ai advance into an unavailable cell");
      state.ai = {target, move.direction};
      break;
    }
  }
  return state;
}

}  // namespace pigchase
