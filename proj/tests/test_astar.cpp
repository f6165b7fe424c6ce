#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pigchase/astar.hpp"

using namespace pigchase;

namespace {

GameState fresh() {
  GameRules rules;
  rules.pig.mode = PigMotionMode::Static;
  return start_trial(default_layout(), rules, 1, Rng(1));
}

}  // namespace

TEST(AStar, StraightCorridor) {
  TileMap m(9, 9, TileKind::Blocked);
  for (int c = 2; c <= 6; ++c) m.set({2, c}, TileKind::Passable);
  const std::vector<Cell> goal{{2, 5}};
  const auto path = a_star(m, {2, 2}, goal, std::vector<Cell>{});
  ASSERT_TRUE(path);
  EXPECT_EQ(path->size(), 3u);
  EXPECT_EQ(path->back(), (Cell{2, 5}));
}

TEST(AStar, DetourAroundWallMatchesBfs) {
  TileMap m(9, 9, TileKind::Passable);
  for (int r = 0; r < 8; ++r) m.set({r, 4}, TileKind::Blocked);
  const std::vector<Cell> goal{{0, 6}};
  const auto path = a_star(m, {0, 2}, goal, std::vector<Cell>{});
  ASSERT_TRUE(path);
  EXPECT_EQ(static_cast<int>(path->size()), *oracle::bfs_distance(m, {0, 2}, goal, {}));
  EXPECT_EQ(path->size(), 20u);
}

TEST(AStar, WalledOffGoalHasNoPlan) {
  TileMap m(9, 9, TileKind::Passable);
  for (Cell c : {Cell{3, 4}, Cell{5, 4}, Cell{4, 3}, Cell{4, 5}}) m.set(c, TileKind::Blocked);
  const std::vector<Cell> goal{{4, 4}};
  EXPECT_FALSE(a_star(m, {0, 0}, goal, std::vector<Cell>{}).has_value());
}

TEST(AStar, StartOnGoalIsEmptyPath) {
  TileMap m(9, 9, TileKind::Passable);
  const std::vector<Cell> goal{{1, 1}};
  const auto path = a_star(m, {1, 1}, goal, std::vector<Cell>{});
  ASSERT_TRUE(path);
  EXPECT_TRUE(path->empty());
}

TEST(AStar, TieBreakPrefersNorthThenEast) {
  TileMap m(9, 9, TileKind::Passable);
  const std::vector<Cell> goal{{2, 6}};
  const auto path = a_star(m, {4, 4}, goal, std::vector<Cell>{});
  ASSERT_TRUE(path);
  EXPECT_EQ(path->front(), (Cell{3, 4}));
}

TEST(AStar, PathIsAValidWalk) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto sc = oracle::random_case(seed);
    const auto path = a_star(sc.map, sc.start, sc.goals, sc.occupied);
    if (!path) continue;
    Cell at = sc.start;
    for (Cell c : *path) {
      EXPECT_TRUE(adjacent(at, c));
      EXPECT_TRUE(sc.map.walkable(c));
      EXPECT_EQ(std::count(sc.occupied.begin(), sc.occupied.end(), c), 0);
      at = c;
    }
    if (!path->empty()) EXPECT_NE(std::find(sc.goals.begin(), sc.goals.end(), at), sc.goals.end());
  }
}

TEST(AStar, AgreesWithBfsOnRandomMaps) {
  int unreachable = 0;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const auto sc = oracle::random_case(seed, 0.35);
    const auto path = a_star(sc.map, sc.start, sc.goals, sc.occupied);
    const auto want = oracle::bfs_distance(sc.map, sc.start, sc.goals, sc.occupied);
    ASSERT_EQ(path.has_value(), want.has_value()) << "seed " << seed;
    if (path) EXPECT_EQ(static_cast<int>(path->size()), *want) << "seed " << seed;
    else ++unreachable;
  }
  // The generator must exercise both branches.
  EXPECT_GT(unreachable, 0);
  EXPECT_LT(unreachable, 500);
}

TEST(AiReply, HoldsWhenAlreadyNextToPig) {
  GameState s = fresh();
  s.ai = {{3, 4}, Orientation::E};
  EXPECT_EQ(ai_reply(s).kind, AgentMoveKind::Hold);
}

TEST(AiReply, RotatesBeforeAdvancing) {
  GameState s = fresh();
  s.ai = {{2, 3}, Orientation::W};
  s.pig = {2, 5};
  const AgentMove first = ai_reply(s);
  EXPECT_EQ(first, (AgentMove{AgentMoveKind::Rotate, Orientation::E}));
  s = apply_agent_move(s, first);
  EXPECT_EQ(s.ai, (Pose{{2, 3}, Orientation::E}));
  const AgentMove second = ai_reply(s);
  EXPECT_EQ(second, (AgentMove{AgentMoveKind::Advance, Orientation::E}));
  s = apply_agent_move(s, second);
  EXPECT_EQ(s.ai.cell, (Cell{2, 4}));
}

TEST(AiReply, DirectStepTurnsAndMovesAtOnce) {
  GameState s = fresh();
  s.ai = {{2, 3}, Orientation::W};
  s.pig = {2, 5};
  EXPECT_EQ(ai_reply(s, AiMotionModel::DirectStep), (AgentMove{AgentMoveKind::Advance, Orientation::E}));
}

TEST(AiReply, UnreachablePigMeansHold) {
  // The AI's corner opens only southwards, and the player stands there.
  const auto layout = load_layout(
      "#########\n#########\n##A#...##\n##.....##\n##X.G.X##\n##.....##\n##P....##\n#########\n#########\n");
  GameRules rules;
  rules.pig.mode = PigMotionMode::Static;
  GameState s = start_trial(layout, rules, 1, Rng(1));
  s.player = {{3, 2}, Orientation::N};
  EXPECT_EQ(ai_reply(s).kind, AgentMoveKind::Hold);
  s.player = {{6, 2}, Orientation::N};
  EXPECT_NE(ai_reply(s).kind, AgentMoveKind::Hold);
}

TEST(AiReply, StatelessReplanning) {
  GameState s = fresh();
  const AgentMove a = ai_reply(s);
  const AgentMove b = ai_reply(s);
  EXPECT_EQ(a, b);
}

TEST(AiReply, NoMoveOnTerminatedTrial) {
  GameState s = fresh();
  s.status = TrialStatus::Exited;
  EXPECT_EQ(ai_reply(s).kind, AgentMoveKind::Hold);
}

TEST(AiReply, FlankCellsExcludeExits) {
  GameState s = fresh();
  s.pig = {4, 3};
  const auto flanks = pig_flank_cells(s);
  EXPECT_EQ(std::count(flanks.begin(), flanks.end(), Cell{4, 2}), 0);
  EXPECT_EQ(flanks.size(), 3u);
}
