#pragma once

// Full turn orchestration (player -> AI -> pig -> termination) and the
// JSONL transcript event format.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigchase/astar.hpp"
#include "pigchase/game.hpp"

namespace pigchase {

struct TurnOutcome {
  GameState state;
  MoveEffect player_effect = MoveEffect::Moved;
  AgentMove ai_move;
  bool pig_moved = false;
};

// Strict order: player key, AI reply, pig step, termination check. The AI and
// pig only move in response to an accepted player action.
inline TurnOutcome play_turn(GameState state, ArrowKey key,
                             AiMotionModel ai_model = AiMotionModel::RotateThenAdvance) {
  auto [after_player, effect] = apply_player_key(std::move(state), key);
  const AgentMove ai_move = ai_reply(after_player, ai_model);
  GameState after_ai = apply_agent_move(std::move(after_player), ai_move);
  const Cell pig_before = after_ai.pig;
  GameState after_pig = pig_step(std::move(after_ai));
  const bool pig_moved = after_pig.pig != pig_before;
  after_pig.status = check_termination(after_pig);
  return {std::move(after_pig), effect, ai_move, pig_moved};
}

inline nlohmann::ordered_json pose_json(const Pose& p) {
  nlohmann::ordered_json j;
  j["row"] = p.cell.row;
  j["col"] = p.cell.col;
  j["facing"] = std::string(to_string(p.facing));
  return j;
}

inline nlohmann::ordered_json cell_json(Cell c) {
  nlohmann::ordered_json j;
  j["row"] = c.row;
  j["col"] = c.col;
  return j;
}

struct TranscriptEvent {
  std::string session;
  int trial = 0;
  std::int64_t seq = 0;
  std::string actor;   // player | ai | pig
  std::string input;   // key name, agent move kind, or "step"
  std::string effect;  // Moved/Rotated/Bumped, Hold/Rotate/Advance, Moved/Stayed
  nlohmann::ordered_json pose_after;
  int actions_used = 0;
  std::int64_t ts = 0;
};

inline nlohmann::ordered_json to_json(const TranscriptEvent& e) {
  nlohmann::ordered_json j;
  j["session"] = e.session;
  j["trial"] = e.trial;
  j["seq"] = e.seq;
  j["actor"] = e.actor;
  j["input"] = e.input;
  j["effect"] = e.effect;
  j["pose_after"] = e.pose_after;
  j["actions_used"] = e.actions_used;
  j["ts"] = e.ts;
  return j;
}

// Three events per turn; seq numbers continue from first_seq.
inline std::vector<TranscriptEvent> transcript_for_turn(const TurnOutcome& t, ArrowKey key,
                                                        const std::string& session,
                                                        std::int64_t first_seq, std::int64_t ts) {
  const GameState& s = t.state;
  std::vector<TranscriptEvent> out;
  out.push_back({session, s.trial_index, first_seq, "player", std::string(to_string(key)),
                 std::string(to_string(t.player_effect)), pose_json(s.player), s.actions_used, ts});
  std::string ai_input(to_string(t.ai_move.kind));
  if (t.ai_move.kind != AgentMoveKind::Hold) {
    ai_input += ":";
    ai_input += to_string(t.ai_move.direction);
  }
  out.push_back({session, s.trial_index, first_seq + 1, "ai", ai_input,
                 std::string(to_string(t.ai_move.kind)), pose_json(s.ai), s.actions_used, ts});
  out.push_back({session, s.trial_index, first_seq + 2, "pig", "step",
                 t.pig_moved ? "Moved" : "Stayed", cell_json(s.pig), s.actions_used, ts});
  return out;
}

}  // namespace pigchase
