#include <gtest/gtest.h>

#include <set>

#include "pigchase/game.hpp"
#include "pigchase/turn.hpp"

using namespace pigchase;

namespace {

constexpr std::string_view kCorridor =
    "#########\n"
    "#########\n"
    "##.....##\n"
    "##.###.##\n"
    "##P.G.A##\n"
    "##.###.##\n"
    "##X...X##\n"
    "#########\n"
    "#########\n"
    "facing P=E A=W\n";

GameRules static_pig() {
  GameRules r;
  r.pig.mode = PigMotionMode::Static;
  return r;
}

GameState fresh(GameRules rules = static_pig(), std::uint64_t seed = 1) {
  return start_trial(default_layout(), rules, 1, Rng(seed));
}

}  // namespace

TEST(Layout, DefaultHasTwentyFivePlayableTilesAndTwoExits) {
  const auto& l = default_layout();
  EXPECT_EQ(l.width(), 9);
  EXPECT_EQ(l.height(), 9);
  EXPECT_EQ(l.playable_count(), 25);
  const auto exits = l.exits();
  ASSERT_EQ(exits.size(), 2u);
  EXPECT_EQ(exits[0], (Cell{4, 2}));
  EXPECT_EQ(exits[1], (Cell{4, 6}));
  EXPECT_EQ(l.rightmost_exit(), (Cell{4, 6}));
  EXPECT_EQ(l.player_start(), (Pose{{6, 2}, Orientation::N}));
  EXPECT_EQ(l.ai_start(), (Pose{{2, 6}, Orientation::S}));
  EXPECT_EQ(l.pig_start(), (Cell{4, 4}));
}

TEST(Layout, TextRoundTrip) {
  const auto& l = default_layout();
  const BoardLayout again = load_layout(to_text(l));
  EXPECT_EQ(again.tiles(), l.tiles());
  EXPECT_EQ(again.player_start(), l.player_start());
  EXPECT_EQ(again.ai_start(), l.ai_start());
  EXPECT_EQ(again.pig_start(), l.pig_start());
}

TEST(Layout, EightRowsIsADimensionError) {
  std::string text(kDefaultLayoutText);
  text.erase(0, text.find('\n') + 1);
  EXPECT_THROW(load_layout(text), LayoutError);
}

TEST(Layout, RejectsBadDocuments) {
  // Pig marker replaced by a wall and re-added on a blocked ring tile.
  std::string pig_on_wall(kDefaultLayoutText);
  pig_on_wall[pig_on_wall.find('G')] = '.';
  pig_on_wall[1] = 'G';
  EXPECT_THROW(load_layout(pig_on_wall), LayoutError);

  std::string no_ai(kDefaultLayoutText);
  no_ai[no_ai.find('A')] = '.';
  EXPECT_THROW(load_layout(no_ai), LayoutError);

  std::string disconnected =
      "#########\n#########\n##P.#.A##\n##..#..##\n##X.#GX##\n##..#..##\n##..#..##\n#########\n#########\n";
  EXPECT_THROW(load_layout(disconnected), LayoutError);

  std::string short_row(kDefaultLayoutText);
  short_row.erase(short_row.find("##.....##"), 1);
  EXPECT_THROW(load_layout(short_row), LayoutError);

  std::string bad_symbol(kDefaultLayoutText);
  bad_symbol[bad_symbol.find("##.....##") + 3] = '?';
  EXPECT_THROW(load_layout(bad_symbol), LayoutError);
}

TEST(Layout, FacingLineIsApplied) {
  const auto l = load_layout(kCorridor);
  EXPECT_EQ(l.player_start().facing, Orientation::E);
  EXPECT_EQ(l.ai_start().facing, Orientation::W);
}

TEST(PlayerKey, ForwardKeyMoves) {
  auto [s, effect] = apply_player_key(fresh(), ArrowKey::Up);
  EXPECT_EQ(effect, MoveEffect::Moved);
  EXPECT_EQ(s.player, (Pose{{5, 2}, Orientation::N}));
  EXPECT_EQ(s.actions_used, 1);
}

TEST(PlayerKey, OtherKeyRotatesInPlace) {
  auto [s, effect] = apply_player_key(fresh(), ArrowKey::Left);
  EXPECT_EQ(effect, MoveEffect::Rotated);
  EXPECT_EQ(s.player, (Pose{{6, 2}, Orientation::W}));
  EXPECT_EQ(s.actions_used, 1);
}

TEST(PlayerKey, BlockedForwardKeyBumpsAndStillCosts) {
  GameState s = fresh();
  s.player = {{6, 6}, Orientation::E};
  auto [after, effect] = apply_player_key(s, ArrowKey::Right);
  EXPECT_EQ(effect, MoveEffect::Bumped);
  EXPECT_EQ(after.player, s.player);
  EXPECT_EQ(after.actions_used, 1);
}

TEST(PlayerKey, OccupiedCellBumps) {
  GameState s = fresh();
  s.player = {{4, 3}, Orientation::E};  // pig at (4,4)
  EXPECT_EQ(apply_player_key(s, ArrowKey::Right).effect, MoveEffect::Bumped);
  s.player = {{3, 6}, Orientation::N};  // ai at (2,6)
  EXPECT_EQ(apply_player_key(s, ArrowKey::Up).effect, MoveEffect::Bumped);
}

TEST(PlayerKey, RejectedAfterTermination) {
  GameState s = fresh();
  s.status = TrialStatus::Exited;
  EXPECT_THROW(apply_player_key(s, ArrowKey::Up), GameError);
  GameState full = fresh();
  full.actions_used = kActionLimit;
  EXPECT_THROW(apply_player_key(full, ArrowKey::Up), GameError);
}

TEST(Pig, PinnedPigStays) {
  GameRules rules;
  rules.pig.p_stay = 0.0;
  GameState s = fresh(rules);
  s.pig = {2, 2};
  s.player = {{3, 2}, Orientation::N};
  s.ai = {{2, 3}, Orientation::W};
  EXPECT_TRUE(free_pig_neighbours(s).empty());
  for (int i = 0; i < 20; ++i) s = pig_step(std::move(s));
  EXPECT_EQ(s.pig, (Cell{2, 2}));
}

TEST(Pig, StaticModeNeverMoves) {
  GameState s = fresh(static_pig());
  for (int i = 0; i < 50; ++i) s = pig_step(std::move(s));
  EXPECT_EQ(s.pig, default_layout().pig_start());
}

TEST(Pig, NeverEntersExitOrOccupiedCells) {
  GameRules rules;
  rules.pig.p_stay = 0.0;
  GameState s = fresh(rules, 99);
  for (int i = 0; i < 2000; ++i) {
    s = pig_step(std::move(s));
    EXPECT_TRUE(s.layout.passable(s.pig));
    EXPECT_NE(s.pig, s.player.cell);
    EXPECT_NE(s.pig, s.ai.cell);
  }
}

TEST(Pig, SeededTrajectoryRepeats) {
  GameRules rules;
  rules.pig.p_stay = 0.5;
  auto trajectory = [&] {
    GameState s = fresh(rules, 2024);
    std::vector<Cell> cells;
    for (int i = 0; i < 200; ++i) {
      s = pig_step(std::move(s));
      cells.push_back(s.pig);
    }
    return cells;
  };
  const auto a = trajectory();
  EXPECT_EQ(a, trajectory());
  EXPECT_GT(std::set<Cell>(a.begin(), a.end()).size(), 3u);
}

TEST(Pig, StayProbabilityIsHonoured) {
  GameRules rules;
  rules.pig.p_stay = 0.5;
  GameState s = fresh(rules, 5);
  int stays = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Cell before = s.pig;
    s = pig_step(std::move(s));
    if (s.pig == before) ++stays;
  }
  // Default board: the pig always has a free neighbour, so stays come only
  // from the stay draw.
  EXPECT_NEAR(static_cast<double>(stays) / n, 0.5, 0.02);
}

TEST(Termination, CorridorPinIsACatch) {
  const auto layout = load_layout(kCorridor);
  GameState s = start_trial(layout, static_pig(), 4, Rng(1));
  const auto turn = play_turn(s, ArrowKey::Right);
  EXPECT_EQ(turn.player_effect, MoveEffect::Moved);
  EXPECT_EQ(turn.ai_move.kind, AgentMoveKind::Advance);
  EXPECT_EQ(turn.state.player.cell, (Cell{4, 3}));
  EXPECT_EQ(turn.state.ai.cell, (Cell{4, 5}));
  EXPECT_EQ(turn.state.status, TrialStatus::Caught);
  EXPECT_EQ(trial_score(turn.state.status, turn.state.actions_used, ScoringMode::DeductAlways), 24);
}

TEST(Termination, StepOntoLeftExit) {
  GameState s = fresh();
  s = play_turn(s, ArrowKey::Up).state;
  EXPECT_EQ(s.status, TrialStatus::Running);
  s = play_turn(s, ArrowKey::Up).state;
  EXPECT_EQ(s.player.cell, (Cell{4, 2}));
  EXPECT_EQ(s.status, TrialStatus::Exited);
}

TEST(Termination, BudgetExhausted) {
  GameState s = fresh();
  s.actions_used = kActionLimit;
  EXPECT_EQ(check_termination(s), TrialStatus::Exhausted);
}

TEST(Termination, CatchBeatsExitBeatsExhaustion) {
  GameState s = fresh();
  s.pig = {4, 3};
  s.player = {{4, 2}, Orientation::W};  // on the left exit
  s.ai = {{3, 3}, Orientation::S};
  s.actions_used = kActionLimit;
  // (5,3) is still free, so no catch yet.
  EXPECT_EQ(check_termination(s), TrialStatus::Exited);
  s.pig = {2, 2};
  s.ai = {{2, 3}, Orientation::W};
  s.player = {{3, 2}, Orientation::N};
  EXPECT_EQ(check_termination(s), TrialStatus::Caught);
}

TEST(Termination, RunningOtherwise) { EXPECT_EQ(check_termination(fresh()), TrialStatus::Running); }

TEST(Scoring, Examples) {
  EXPECT_EQ(trial_score(TrialStatus::Caught, 7, ScoringMode::DeductAlways), 18);
  EXPECT_EQ(trial_score(TrialStatus::Exited, 0, ScoringMode::DeductAlways), 5);
  EXPECT_EQ(trial_score(TrialStatus::Exhausted, 25, ScoringMode::DeductOnScore), 0);
  EXPECT_EQ(trial_score(TrialStatus::Exhausted, 25, ScoringMode::DeductAlways), -25);
  EXPECT_EQ(trial_score(TrialStatus::TimedOut, 4, ScoringMode::DeductOnScore), 0);
  EXPECT_THROW(trial_score(TrialStatus::Running, 3, ScoringMode::DeductAlways), GameError);
}

TEST(Scoring, CatchAlwaysTwentyAboveExit) {
  for (int a = 0; a <= kActionLimit; ++a)
    EXPECT_EQ(trial_score(TrialStatus::Caught, a, ScoringMode::DeductAlways) -
                  trial_score(TrialStatus::Exited, a, ScoringMode::DeductAlways),
              20);
}

TEST(Scoring, ModeNames) {
  EXPECT_EQ(parse_scoring_mode("deduct-always"), ScoringMode::DeductAlways);
  EXPECT_EQ(parse_scoring_mode("deduct-on-score"), ScoringMode::DeductOnScore);
  EXPECT_FALSE(parse_scoring_mode("other").has_value());
}

TEST(TrialRecord, PracticeAndAttentionFlags) {
  GameState s = fresh();
  s.trial_index = 8;
  s.player = {{4, 6}, Orientation::E};
  s.status = TrialStatus::Exited;
  s.actions_used = 6;
  auto rec = make_trial_record(s, {});
  EXPECT_FALSE(rec.practice);
  EXPECT_EQ(rec.attention_pass, true);
  EXPECT_EQ(rec.trial_score, -1);

  s.player = {{4, 2}, Orientation::W};
  EXPECT_EQ(make_trial_record(s, {}).attention_pass, false);

  s.trial_index = 3;
  rec = make_trial_record(s, {});
  EXPECT_TRUE(rec.practice);
  EXPECT_FALSE(rec.attention_pass.has_value());

  s.status = TrialStatus::Running;
  EXPECT_THROW(make_trial_record(s, {}), GameError);
}

TEST(Turn, InvariantsHoldOverRandomPlay) {
  GameRules rules;
  rules.pig.p_stay = 0.3;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    GameState s = fresh(rules, seed);
    Rng keys(seed + 1000);
    int used = 0;
    while (s.status == TrialStatus::Running) {
      s = play_turn(std::move(s), kAllKeys[keys.uniform_index(4)]).state;
      EXPECT_EQ(s.actions_used, ++used);
      EXPECT_NE(s.player.cell, s.ai.cell);
      EXPECT_NE(s.player.cell, s.pig);
      EXPECT_NE(s.ai.cell, s.pig);
    }
    EXPECT_LE(s.actions_used, kActionLimit);
  }
}

TEST(Turn, TranscriptHasOneEventPerActor) {
  const auto t = play_turn(fresh(), ArrowKey::Up);
  const auto events = transcript_for_turn(t, ArrowKey::Up, "s1", 10, 1234);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0].actor, "player");
  EXPECT_EQ(events[1].actor, "ai");
  EXPECT_EQ(events[2].actor, "pig");
  EXPECT_EQ(events[2].seq, 12);
  const auto j = to_json(events[0]);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"session", "trial", "seq", "actor", "input", "effect", "pose_after",
                                            "actions_used", "ts"}));
  EXPECT_EQ(j["effect"], "Moved");
}
