#pragma once

// Live human sessions: treatment assignment, server-side turn processing,
// the turn-channel message log, survey capture, persistence and export.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigchase/game.hpp"
#include "pigchase/records.hpp"
#include "pigchase/turn.hpp"

namespace pigchase::service {

enum class ErrorCode : std::uint8_t { BadRequest, NotFound, Conflict, Storage };

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

using Clock = std::function<std::int64_t()>;

inline std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

enum class AssignmentMode : std::uint8_t {
  Random,
  // Round-robin over the seven conditions, separately per demographic.
  Balanced,
  // Caller names the treatment (imports, replays, tests).
  Fixed,
};

inline std::optional<AssignmentMode> parse_assignment(std::string_view s) {
  if (s == "random") return AssignmentMode::Random;
  if (s == "balanced") return AssignmentMode::Balanced;
  if (s == "fixed") return AssignmentMode::Fixed;
  return std::nullopt;
}

inline constexpr std::string_view kDataDirEnv = "PIGCHASE_DATA_DIR";

struct ServiceConfig {
  BoardLayout layout = default_layout();
  GameRules rules;
  AiMotionModel ai_model = AiMotionModel::RotateThenAdvance;
  AssignmentMode assignment = AssignmentMode::Random;
  std::uint64_t seed = 1;
  std::int64_t trial_timeout_ms = 120'000;
  std::optional<std::filesystem::path> data_dir;
  Clock clock = system_clock_ms;
  std::map<Treatment, TreatmentCondition> conditions = [] {
    std::map<Treatment, TreatmentCondition> m;
    for (Treatment t : kAllTreatments) m.emplace(t, default_condition(t));
    return m;
  }();
};

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Data directory from the environment, if set and non-empty.
inline std::optional<std::filesystem::path> data_dir_from_env() {
  const char* v = std::getenv(std::string(kDataDirEnv).c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

// --- Turn channel -------------------------------------------------------------

struct ChannelMessage {
  std::string type;  // key | state | trial_end
  int trial = 0;
  std::int64_t seq = 0;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();

  friend bool operator==(const ChannelMessage&, const ChannelMessage&) = default;
};

inline nlohmann::ordered_json to_json(const ChannelMessage& m) {
  nlohmann::ordered_json j;
  j["type"] = m.type;
  j["trial"] = m.trial;
  j["seq"] = m.seq;
  j["payload"] = m.payload;
  return j;
}

inline ChannelMessage message_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ServiceError(ErrorCode::BadRequest, "message must be an object");
  for (const char* k : {"type", "trial", "seq", "payload"})
    if (!j.contains(k)) throw ServiceError(ErrorCode::BadRequest, std::string("message missing field: ") + k);
  ChannelMessage m;
  try {
    m.type = j.at("type").get<std::string>();
    m.trial = j.at("trial").get<int>();
    m.seq = j.at("seq").get<std::int64_t>();
    m.payload = nlohmann::ordered_json::parse(j.at("payload").dump());
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(ErrorCode::BadRequest, std::string("malformed message: ") + e.what());
  }
  if (m.type != "key" && m.type != "state" && m.type != "trial_end")
    throw ServiceError(ErrorCode::BadRequest, "unknown message type: " + m.type);
  return m;
}

inline nlohmann::ordered_json board_rows(const BoardLayout& layout) {
  auto rows = nlohmann::ordered_json::array();
  for (int r = 0; r < kBoardSize; ++r) {
    std::string line;
    for (int c = 0; c < kBoardSize; ++c) {
      switch (layout.tiles().kind({r, c})) {
        case TileKind::Passable: line += '.'; break;
        case TileKind::Blocked: line += '#'; break;
        case TileKind::Exit: line += 'X'; break;
      }
    }
    rows.push_back(line);
  }
  return rows;
}

// --- Results -------------------------------------------------------------------

struct CreateRequest {
  std::string participant_id;
  std::optional<Demographic> demographic;
  // Only honoured in Fixed mode, where it is required.
  std::optional<Treatment> treatment;
};

struct CreateResult {
  std::string session_id;
  Treatment treatment = Treatment::Control;
  TreatmentCondition condition;
  bool duplicate_participant = false;
  ChannelMessage initial_state;
};

struct TurnResult {
  // key echo, state, and on a terminal turn trial_end plus the next trial's
  // opening state.
  std::vector<ChannelMessage> messages;
  std::optional<TrialRecord> finished_trial;
  bool session_trials_complete = false;
};

struct ExportFilter {
  bool include_abandoned = false;
  bool include_in_progress = false;
};

struct ExportResult {
  std::string participants_csv;
  std::string sessions_jsonl;
  int sessions = 0;
};

inline nlohmann::ordered_json condition_json(const TreatmentCondition& c) {
  nlohmann::ordered_json j;
  j["treatment"] = std::string(to_string(c.code));
  j["instruction_text"] = c.instruction_text;
  j["picture_asset"] = c.picture_asset ? nlohmann::ordered_json(*c.picture_asset) : nlohmann::ordered_json(nullptr);
  return j;
}

// --- Service ---------------------------------------------------------------------

class SessionService {
 public:
  explicit SessionService(ServiceConfig config) : config_(std::move(config)), rng_(mix_seed(config_.seed)) {
    if (!config_.clock) config_.clock = system_clock_ms;
    if (config_.trial_timeout_ms <= 0) throw std::invalid_argument("trial timeout must be positive");
    for (Treatment t : kAllTreatments)
      if (!config_.conditions.contains(t)) config_.conditions.emplace(t, default_condition(t));
    if (config_.data_dir) load_snapshots();
  }

  const ServiceConfig& config() const { return config_; }

  CreateResult create_session(const CreateRequest& req) {
    if (req.participant_id.empty()) throw ServiceError(ErrorCode::BadRequest, "participant_id must be non-empty");
    std::unique_lock store(store_mutex_);
    bool seen = false;
    for (const auto& [id, live] : sessions_) {
      std::lock_guard lk(live->mutex);
      if (live->record.participant_id != req.participant_id) continue;
      seen = true;
      if (live->record.status == SessionStatus::InProgress)
        throw ServiceError(ErrorCode::Conflict, "participant already has an active session: " + id);
    }

    Treatment treatment = Treatment::Control;
    switch (config_.assignment) {
      case AssignmentMode::Random: treatment = kAllTreatments[rng_.uniform_index(kAllTreatments.size())]; break;
      case AssignmentMode::Balanced: {
        const std::string key = req.demographic ? std::string(to_string(*req.demographic)) : "unspecified";
        int& next = balanced_next_[key];
        treatment = kAllTreatments[static_cast<std::size_t>(next) % kAllTreatments.size()];
        ++next;
        break;
      }
      case AssignmentMode::Fixed:
        if (!req.treatment) throw ServiceError(ErrorCode::BadRequest, "fixed assignment requires a treatment");
        treatment = *req.treatment;
        break;
    }

    auto live = std::make_shared<LiveSession>();
    const std::uint64_t ordinal = ++created_count_;
    char id[32];
    std::snprintf(id, sizeof id, "s%016llx",
                  static_cast<unsigned long long>(mix_seed(config_.seed ^ (ordinal * 0x9e3779b97f4a7c15ULL))));
    live->record.session_id = id;
    live->record.participant_id = req.participant_id;
    live->record.demographic = req.demographic;
    live->record.treatment = treatment;
    live->record.created_at = config_.clock();
    live->record.status = SessionStatus::InProgress;
    live->record.duplicate_participant = seen;
    live->pig_rng = Rng(mix_seed(config_.seed + ordinal));

    std::lock_guard lk(live->mutex);
    append_event(*live, {{"event", "created"},
                         {"participant_id", req.participant_id},
                         {"treatment", std::string(to_string(treatment))},
                         {"ts", live->record.created_at}});
    start_next_trial(*live);
    write_snapshot(*live);
    sessions_.emplace(live->record.session_id, live);
    return {live->record.session_id, treatment, config_.conditions.at(treatment), seen, live->messages.back()};
  }

  TreatmentCondition instructions(const std::string& session_id) const {
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    return config_.conditions.at(live->record.treatment);
  }

  // Latest visible state, after applying any pending timeout.
  ChannelMessage current_state(const std::string& session_id) {
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    apply_timeout(*live);
    for (auto it = live->messages.rbegin(); it != live->messages.rend(); ++it)
      if (it->type == "state") return *it;
    throw ServiceError(ErrorCode::NotFound, "no state for session");
  }

  std::vector<ChannelMessage> messages_after(const std::string& session_id, std::int64_t after_seq) {
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    apply_timeout(*live);
    std::vector<ChannelMessage> out;
    for (const auto& m : live->messages)
      if (m.seq > after_seq) out.push_back(m);
    return out;
  }

  TurnResult play_turn(const std::string& session_id, int trial_index, ArrowKey key, double client_latency_ms) {
    if (!(client_latency_ms >= 0.0)) throw ServiceError(ErrorCode::BadRequest, "latency must be non-negative");
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    if (live->record.status != SessionStatus::InProgress)
      throw ServiceError(ErrorCode::Conflict, "session is " + std::string(to_string(live->record.status)));
    const std::size_t first_new = live->messages.size();
    TurnResult result;
    if (auto timed_out = apply_timeout(*live)) {
      result.finished_trial = timed_out;
      result.messages.assign(live->messages.begin() + static_cast<std::ptrdiff_t>(first_new), live->messages.end());
      result.session_trials_complete = !live->game;
      if (trial_index == timed_out->trial_index) return result;
    }
    if (!live->game) throw ServiceError(ErrorCode::Conflict, "all trials finished");
    if (trial_index != live->game->trial_index)
      throw ServiceError(ErrorCode::BadRequest, "out-of-order trial index " + std::to_string(trial_index) +
                                                    " (current trial is " + std::to_string(live->game->trial_index) + ")");

    const std::int64_t now = config_.clock();
    live->key_log.push_back({key, client_latency_ms, now});
    nlohmann::ordered_json kp;
    kp["key"] = std::string(to_string(key));
    kp["latency_ms"] = client_latency_ms;
    kp["server_ts_ms"] = now;
    push_message(*live, "key", trial_index, std::move(kp));

    TurnOutcome outcome = pigchase::play_turn(std::move(*live->game), key, config_.ai_model);
    for (auto& e : transcript_for_turn(outcome, key, live->record.session_id, live->transcript_seq, now)) {
      append_event(*live, nlohmann::json::parse(to_json(e).dump()));
      ++live->transcript_seq;
    }
    live->game = std::move(outcome.state);
    push_message(*live, "state", trial_index, state_payload(*live));
    if (is_terminal(live->game->status)) result.finished_trial = finish_trial(*live);

    for (std::size_t i = first_new; i < live->messages.size(); ++i) result.messages.push_back(live->messages[i]);
    result.session_trials_complete = !live->game;
    return result;
  }

  // Channel entry point: a client "key" message in, server messages out.
  TurnResult handle_message(const std::string& session_id, const ChannelMessage& msg) {
    if (msg.type != "key") throw ServiceError(ErrorCode::BadRequest, "clients may only send key messages");
    if (!msg.payload.contains("key") || !msg.payload["key"].is_string())
      throw ServiceError(ErrorCode::BadRequest, "key message needs payload.key");
    const auto key = parse_key(msg.payload["key"].get<std::string>());
    if (!key) throw ServiceError(ErrorCode::BadRequest, "not an arrow key: " + msg.payload["key"].get<std::string>());
    double latency = 0.0;
    if (msg.payload.contains("latency_ms")) {
      if (!msg.payload["latency_ms"].is_number()) throw ServiceError(ErrorCode::BadRequest, "latency_ms must be a number");
      latency = msg.payload["latency_ms"].get<double>();
    }
    return play_turn(session_id, msg.trial, *key, latency);
  }

  void submit_survey(const std::string& session_id, const SurveyResponse& survey) {
    if (survey.intelligence_estimate < 0 || survey.intelligence_estimate > 100)
      throw ServiceError(ErrorCode::BadRequest, "intelligence_estimate must be within 0..100");
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    auto& rec = live->record;
    if (rec.status == SessionStatus::Abandoned) throw ServiceError(ErrorCode::Conflict, "session was abandoned");
    apply_timeout(*live);
    if (static_cast<int>(rec.trials.size()) < kTrialsPerSession)
      throw ServiceError(ErrorCode::Conflict, "survey before all " + std::to_string(kTrialsPerSession) +
                                                  " trials finished (" + std::to_string(rec.trials.size()) + " done)");
    const std::int64_t now = config_.clock();
    if (rec.survey) rec.audit.push_back({now, "survey resubmitted; previous response overwritten"});
    rec.survey = survey;
    rec.status = SessionStatus::Complete;
    append_event(*live, {{"event", "survey"}, {"survey", nlohmann::json::parse(to_json(survey).dump())}, {"ts", now}});
    write_snapshot(*live);
  }

  void abandon_session(const std::string& session_id) {
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    if (live->record.status == SessionStatus::Complete)
      throw ServiceError(ErrorCode::Conflict, "session already complete");
    live->record.status = SessionStatus::Abandoned;
    live->game.reset();
    const std::int64_t now = config_.clock();
    live->record.audit.push_back({now, "abandoned"});
    append_event(*live, {{"event", "abandoned"}, {"ts", now}});
    write_snapshot(*live);
  }

  SessionRecord record(const std::string& session_id) const {
    auto live = find(session_id);
    std::lock_guard lk(live->mutex);
    return live->record;
  }

  std::vector<std::string> session_ids() const {
    std::shared_lock store(store_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, live] : sessions_) out.push_back(id);
    return out;
  }

  // Ordered by creation time, then id. The store lock is held throughout so
  // the export is a consistent snapshot.
  ExportResult export_sessions(const ExportFilter& filter = {}) const {
    std::unique_lock store(store_mutex_);
    std::vector<std::pair<SessionRecord, std::vector<ChannelMessage>>> picked;
    for (const auto& [id, live] : sessions_) {
      std::lock_guard lk(live->mutex);
      const auto st = live->record.status;
      if (st == SessionStatus::Abandoned && !filter.include_abandoned) continue;
      if (st == SessionStatus::InProgress && !filter.include_in_progress) continue;
      picked.emplace_back(live->record, live->messages);
    }
    std::sort(picked.begin(), picked.end(), [](const auto& x, const auto& y) {
      return std::tie(x.first.created_at, x.first.session_id) < std::tie(y.first.created_at, y.first.session_id);
    });
    ExportResult out;
    std::vector<ParticipantRow> rows;
    for (const auto& [rec, messages] : picked) {
      // Sessions without a demographic stay in the transcript export but
      // cannot form an analysis row.
      nlohmann::ordered_json line;
      if (rec.demographic) {
        const ParticipantRow row = to_participant_row(rec);
        rows.push_back(row);
        line["row"] = to_json(row);
      } else {
        line["row"] = nullptr;
      }
      line["session"] = to_json(rec);
      auto transcript = nlohmann::ordered_json::array();
      for (const auto& m : messages) transcript.push_back(to_json(m));
      line["transcript"] = std::move(transcript);
      out.sessions_jsonl += line.dump() + "\n";
    }
    out.participants_csv = participants_to_csv(rows);
    out.sessions = static_cast<int>(picked.size());
    return out;
  }

 private:
  struct LiveSession {
    mutable std::mutex mutex;
    SessionRecord record;
    std::optional<GameState> game;
    std::vector<KeyLogEntry> key_log;
    std::int64_t trial_started_at = 0;
    std::vector<ChannelMessage> messages;
    std::int64_t next_seq = 0;
    std::int64_t transcript_seq = 0;
    Rng pig_rng;
  };

  std::shared_ptr<LiveSession> find(const std::string& id) const {
    std::shared_lock store(store_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(ErrorCode::NotFound, "unknown session: " + id);
    return it->second;
  }

  nlohmann::ordered_json state_payload(const LiveSession& live) const {
    const GameState& g = *live.game;
    nlohmann::ordered_json p;
    p["status"] = std::string(to_string(g.status));
    p["practice"] = is_practice_trial(g.trial_index);
    p["actions_used"] = g.actions_used;
    p["actions_remaining"] = g.actions_remaining();
    p["score_so_far"] = live.record.total_score();
    p["player"] = pose_json(g.player);
    p["ai"] = pose_json(g.ai);
    p["pig"] = cell_json(g.pig);
    // Tiles never change within a trial; only the opening state carries them.
    if (g.actions_used == 0) p["board"] = board_rows(g.layout);
    return p;
  }

  void push_message(LiveSession& live, std::string type, int trial, nlohmann::ordered_json payload) {
    ChannelMessage m{std::move(type), trial, live.next_seq++, std::move(payload)};
    append_event(live, {{"event", "message"}, {"message", nlohmann::json::parse(to_json(m).dump())}});
    live.messages.push_back(std::move(m));
  }

  void start_next_trial(LiveSession& live) {
    const int index = static_cast<int>(live.record.trials.size()) + 1;
    if (index > kTrialsPerSession) {
      live.game.reset();
      return;
    }
    live.game = start_trial(config_.layout, config_.rules, index, std::move(live.pig_rng));
    live.key_log.clear();
    live.trial_started_at = config_.clock();
    push_message(live, "state", index, state_payload(live));
  }

  TrialRecord finish_trial(LiveSession& live) {
    TrialRecord rec = make_trial_record(*live.game, std::move(live.key_log));
    live.key_log.clear();
    live.record.trials.push_back(rec);
    nlohmann::ordered_json p;
    p["outcome"] = std::string(to_string(rec.outcome));
    p["actions_used"] = rec.actions_used;
    p["trial_score"] = rec.trial_score;
    p["practice"] = rec.practice;
    p["attention_pass"] = rec.attention_pass ? nlohmann::ordered_json(*rec.attention_pass) : nlohmann::ordered_json(nullptr);
    p["total_score"] = live.record.total_score();
    p["trials_remaining"] = kTrialsPerSession - static_cast<int>(live.record.trials.size());
    push_message(live, "trial_end", rec.trial_index, std::move(p));
    live.pig_rng = std::move(live.game->rng);
    live.game.reset();
    start_next_trial(live);
    write_snapshot(live);
    return rec;
  }

  // Ends the running trial as TimedOut once the per-trial wall-clock budget
  // is spent.
  std::optional<TrialRecord> apply_timeout(LiveSession& live) {
    if (!live.game || live.record.status != SessionStatus::InProgress) return std::nullopt;
    if (config_.clock() - live.trial_started_at <= config_.trial_timeout_ms) return std::nullopt;
    live.game->status = TrialStatus::TimedOut;
    return finish_trial(live);
  }

  // --- persistence ---

  std::filesystem::path session_path(const LiveSession& live, std::string_view suffix) const {
    return *config_.data_dir / (live.record.session_id + std::string(suffix));
  }

  void append_event(LiveSession& live, const nlohmann::json& event) {
    if (!config_.data_dir) return;
    std::filesystem::create_directories(*config_.data_dir);
    std::ofstream out(session_path(live, ".jsonl"), std::ios::app);
    if (!out) throw ServiceError(ErrorCode::Storage, "cannot append event log for " + live.record.session_id);
    out << event.dump() << '\n';
  }

  void write_snapshot(LiveSession& live) {
    if (!config_.data_dir) return;
    std::filesystem::create_directories(*config_.data_dir);
    const auto path = session_path(live, ".snapshot.json");
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw ServiceError(ErrorCode::Storage, "cannot write snapshot for " + live.record.session_id);
      nlohmann::ordered_json j;
      j["record"] = to_json(live.record);
      j["next_seq"] = live.next_seq;
      j["transcript_seq"] = live.transcript_seq;
      out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  // Restores sessions from snapshots. A trial that was mid-play restarts
  // from its opening position with a fresh pig stream.
  void load_snapshots() {
    const auto& dir = *config_.data_dir;
    if (!std::filesystem::exists(dir)) return;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 14 && name.ends_with(".snapshot.json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ServiceError(ErrorCode::Storage, "corrupt snapshot " + f.string() + ": " + e.what());
      }
      auto live = std::make_shared<LiveSession>();
      live->record = session_from_json(j.at("record"));
      live->next_seq = j.value("next_seq", std::int64_t{0});
      live->transcript_seq = j.value("transcript_seq", std::int64_t{0});
      live->pig_rng = Rng(mix_seed(fnv1a(live->record.session_id) + live->record.trials.size()));
      ++created_count_;
      if (live->record.status == SessionStatus::InProgress) {
        std::lock_guard lk(live->mutex);
        start_next_trial(*live);
      }
      sessions_.emplace(live->record.session_id, live);
    }
  }

  ServiceConfig config_;
  mutable std::shared_mutex store_mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::map<std::string, int> balanced_next_;
  std::uint64_t created_count_ = 0;
  Rng rng_;
};

}  // namespace pigchase::service
