#pragma once

// Experiment records shared by the simulator, the session service and the
// analysis pipeline: treatment conditions, demographics, survey responses,
// session records and the flat per-participant row used for analysis.

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigchase/game.hpp"

namespace pigchase {

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Treatment : std::uint8_t { B1, B2, BNP, W1, W2, WNP, Control };
enum class Demographic : std::uint8_t { Black, White, NonWhite };
enum class TreatmentGroup : std::uint8_t { Black, White, Control };

inline constexpr std::array<Treatment, 7> kAllTreatments = {
    Treatment::B1, Treatment::B2, Treatment::BNP, Treatment::W1,
    Treatment::W2, Treatment::WNP, Treatment::Control};
inline constexpr std::array<Demographic, 3> kAllDemographics = {
    Demographic::Black, Demographic::White, Demographic::NonWhite};
inline constexpr std::array<TreatmentGroup, 3> kAllGroups = {
    TreatmentGroup::Black, TreatmentGroup::White, TreatmentGroup::Control};

inline std::string_view to_string(Treatment t) {
  switch (t) {
    case Treatment::B1: return "B1";
    case Treatment::B2: return "B2";
    case Treatment::BNP: return "BNP";
    case Treatment::W1: return "W1";
    case Treatment::W2: return "W2";
    case Treatment::WNP: return "WNP";
    case Treatment::Control: return "Control";
  }
  return "?";
}

inline std::string_view to_string(Demographic d) {
  switch (d) {
    case Demographic::Black: return "Black";
    case Demographic::White: return "White";
    case Demographic::NonWhite: return "NonWhite";
  }
  return "?";
}

inline std::string_view to_string(TreatmentGroup g) {
  switch (g) {
    case TreatmentGroup::Black: return "Black";
    case TreatmentGroup::White: return "White";
    case TreatmentGroup::Control: return "Control";
  }
  return "?";
}

inline std::optional<Treatment> parse_treatment(std::string_view s) {
  for (Treatment t : kAllTreatments)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

inline std::optional<Demographic> parse_demographic(std::string_view s) {
  if (s == "Non-White") return Demographic::NonWhite;
  for (Demographic d : kAllDemographics)
    if (to_string(d) == s) return d;
  return std::nullopt;
}

inline std::optional<TreatmentGroup> parse_group(std::string_view s) {
  for (TreatmentGroup g : kAllGroups)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

constexpr TreatmentGroup group_of(Treatment t) {
  switch (t) {
    case Treatment::B1:
    case Treatment::B2:
    case Treatment::BNP: return TreatmentGroup::Black;
    case Treatment::W1:
    case Treatment::W2:
    case Treatment::WNP: return TreatmentGroup::White;
    case Treatment::Control: return TreatmentGroup::Control;
  }
  return TreatmentGroup::Control;
}

struct TreatmentCondition {
  Treatment code = Treatment::Control;
  std::string instruction_text;
  std::optional<std::string> picture_asset;
};

inline bool has_picture(Treatment t) {
  return t == Treatment::B1 || t == Treatment::B2 || t == Treatment::W1 || t == Treatment::W2;
}

// Shipped instruction texts and placeholder picture ids; deployments may
// replace both.
inline TreatmentCondition default_condition(Treatment t) {
  const std::string common =
      " You will play 15 rounds of a game with an AI teammate; the first three rounds are "
      "practice. Use the arrow keys to move. On the eighth round, leave through the rightmost "
      "exit.";
  auto racial = [&](std::string_view who) {
    return "The AI teammate learned by observing the behavior of people who identify as " +
           std::string(who) + "." + common;
  };
  switch (t) {
    case Treatment::B1: return {t, racial("Black or African American"), "placeholder-b1"};
    case Treatment::B2: return {t, racial("Black or African American"), "placeholder-b2"};
    case Treatment::BNP: return {t, racial("Black or African American"), std::nullopt};
    case Treatment::W1: return {t, racial("White or Caucasian"), "placeholder-w1"};
    case Treatment::W2: return {t, racial("White or Caucasian"), "placeholder-w2"};
    case Treatment::WNP: return {t, racial("White or Caucasian"), std::nullopt};
    case Treatment::Control:
      return {t, "The AI teammate learned by observing how people behave while playing." + common,
              std::nullopt};
  }
  return {};
}

// Ordered coding taxonomy for survey responses: positive, neutral, negative.
enum class ResponseLabel : std::uint8_t {
  AiCooperated,
  AiUserDependent,
  AiNoPattern,
  Vague,
  UserOwnMovement,
  AiNotIntelligent,
  AiWorkedAgainst,
};

inline constexpr std::array<ResponseLabel, 7> kAllLabels = {
    ResponseLabel::AiCooperated,    ResponseLabel::AiUserDependent, ResponseLabel::AiNoPattern,
    ResponseLabel::Vague,           ResponseLabel::UserOwnMovement, ResponseLabel::AiNotIntelligent,
    ResponseLabel::AiWorkedAgainst};

inline std::string_view to_string(ResponseLabel l) {
  switch (l) {
    case ResponseLabel::AiCooperated: return "ai_cooperated";
    case ResponseLabel::AiUserDependent: return "ai_user_dependent";
    case ResponseLabel::AiNoPattern: return "ai_no_pattern";
    case ResponseLabel::Vague: return "vague";
    case ResponseLabel::UserOwnMovement: return "user_own_movement";
    case ResponseLabel::AiNotIntelligent: return "ai_not_intelligent";
    case ResponseLabel::AiWorkedAgainst: return "ai_worked_against";
  }
  return "?";
}

inline std::string_view display_name(ResponseLabel l) {
  switch (l) {
    case ResponseLabel::AiCooperated: return "AI Cooperated with Human";
    case ResponseLabel::AiUserDependent: return "AI Movement was User Dependent";
    case ResponseLabel::AiNoPattern: return "AI had no pattern";
    case ResponseLabel::Vague: return "Vague";
    case ResponseLabel::UserOwnMovement: return "User Focused on own Movement";
    case ResponseLabel::AiNotIntelligent: return "AI not intelligent";
    case ResponseLabel::AiWorkedAgainst: return "AI Worked against Human";
  }
  return "?";
}

inline std::optional<ResponseLabel> parse_label(std::string_view s) {
  for (ResponseLabel l : kAllLabels)
    if (to_string(l) == s || display_name(l) == s) return l;
  return std::nullopt;
}

inline constexpr int kSurveyQuestions = 5;

struct SurveyResponse {
  std::array<std::string, kSurveyQuestions> answers;
  int intelligence_estimate = 50;

  friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

enum class SessionStatus : std::uint8_t { InProgress, Complete, Abandoned };

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::InProgress: return "InProgress";
    case SessionStatus::Complete: return "Complete";
    case SessionStatus::Abandoned: return "Abandoned";
  }
  return "?";
}

inline std::optional<SessionStatus> parse_session_status(std::string_view s) {
  for (auto st : {SessionStatus::InProgress, SessionStatus::Complete, SessionStatus::Abandoned})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

struct AuditEntry {
  std::int64_t ts = 0;
  std::string event;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct OutcomeCounts {
  int caught = 0;
  int exited = 0;
  int exhausted = 0;
  int timed_out = 0;

  int total() const { return caught + exited + exhausted + timed_out; }
  void add(TrialStatus s) {
    switch (s) {
      case TrialStatus::Caught: ++caught; break;
      case TrialStatus::Exited: ++exited; break;
      case TrialStatus::Exhausted: ++exhausted; break;
      case TrialStatus::TimedOut: ++timed_out; break;
      case TrialStatus::Running: break;
    }
  }
  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

struct SessionRecord {
  std::string session_id;
  std::string participant_id;
  std::optional<Demographic> demographic;
  Treatment treatment = Treatment::Control;
  std::int64_t created_at = 0;
  std::vector<TrialRecord> trials;
  std::optional<SurveyResponse> survey;
  SessionStatus status = SessionStatus::InProgress;
  bool duplicate_participant = false;
  std::vector<AuditEntry> audit;

  // Practice trials are excluded from totals and outcome counts.
  int total_score() const {
    int sum = 0;
    for (const auto& t : trials)
      if (!t.practice) sum += t.trial_score;
    return sum;
  }

  OutcomeCounts outcome_counts() const {
    OutcomeCounts c;
    for (const auto& t : trials)
      if (!t.practice) c.add(t.outcome);
    return c;
  }

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

// --- JSON -------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["trial_index"] = t.trial_index;
  j["outcome"] = std::string(to_string(t.outcome));
  j["actions_used"] = t.actions_used;
  j["trial_score"] = t.trial_score;
  j["practice"] = t.practice;
  j["attention_pass"] = t.attention_pass ? nlohmann::ordered_json(*t.attention_pass) : nlohmann::ordered_json(nullptr);
  j["final_player_cell"] = {t.final_player_cell.row, t.final_player_cell.col};
  auto keys = nlohmann::ordered_json::array();
  for (const auto& k : t.key_log) {
    nlohmann::ordered_json e;
    e["key"] = std::string(to_string(k.key));
    e["latency_ms"] = k.latency_ms;
    e["server_ts"] = k.server_ts_ms;
    keys.push_back(std::move(e));
  }
  j["key_log"] = std::move(keys);
  return j;
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord t;
  t.trial_index = j.at("trial_index").get<int>();
  auto outcome = parse_status(j.at("outcome").get<std::string>());
  if (!outcome) throw RecordError("bad trial outcome");
  t.outcome = *outcome;
  t.actions_used = j.at("actions_used").get<int>();
  t.trial_score = j.at("trial_score").get<int>();
  t.practice = j.at("practice").get<bool>();
  if (j.contains("attention_pass") && !j.at("attention_pass").is_null())
    t.attention_pass = j.at("attention_pass").get<bool>();
  if (j.contains("final_player_cell")) {
    const auto& c = j.at("final_player_cell");
    t.final_player_cell = {c.at(0).get<int>(), c.at(1).get<int>()};
  }
  for (const auto& e : j.at("key_log")) {
    auto key = parse_key(e.at("key").get<std::string>());
    if (!key) throw RecordError("bad key in key_log");
    t.key_log.push_back({*key, e.at("latency_ms").get<double>(), e.at("server_ts").get<std::int64_t>()});
  }
  return t;
}

inline nlohmann::ordered_json to_json(const SurveyResponse& s) {
  nlohmann::ordered_json j;
  j["answers"] = s.answers;
  j["intelligence_estimate"] = s.intelligence_estimate;
  return j;
}

inline SurveyResponse survey_from_json(const nlohmann::json& j) {
  SurveyResponse s;
  const auto& answers = j.at("answers");
  if (!answers.is_array() || answers.size() != kSurveyQuestions)
    throw RecordError("survey needs exactly five answers");
  for (std::size_t i = 0; i < kSurveyQuestions; ++i) s.answers[i] = answers.at(i).get<std::string>();
  const auto& est = j.at("intelligence_estimate");
  if (!est.is_number_integer()) throw RecordError("intelligence_estimate must be an integer");
  s.intelligence_estimate = est.get<int>();
  return s;
}

inline nlohmann::ordered_json to_json(const SessionRecord& r) {
  nlohmann::ordered_json j;
  j["session_id"] = r.session_id;
  j["participant_id"] = r.participant_id;
  j["demographic"] = r.demographic ? nlohmann::ordered_json(std::string(to_string(*r.demographic))) : nlohmann::ordered_json(nullptr);
  j["treatment"] = std::string(to_string(r.treatment));
  j["treatment_group"] = std::string(to_string(group_of(r.treatment)));
  j["created_at"] = r.created_at;
  j["status"] = std::string(to_string(r.status));
  j["duplicate_participant"] = r.duplicate_participant;
  j["total_score"] = r.total_score();
  auto trials = nlohmann::ordered_json::array();
  for (const auto& t : r.trials) trials.push_back(to_json(t));
  j["trials"] = std::move(trials);
  j["survey"] = r.survey ? to_json(*r.survey) : nlohmann::ordered_json(nullptr);
  auto audit = nlohmann::ordered_json::array();
  for (const auto& a : r.audit) audit.push_back({{"ts", a.ts}, {"event", a.event}});
  j["audit"] = std::move(audit);
  return j;
}

inline SessionRecord session_from_json(const nlohmann::json& j) {
  SessionRecord r;
  r.session_id = j.at("session_id").get<std::string>();
  r.participant_id = j.at("participant_id").get<std::string>();
  if (!j.at("demographic").is_null()) {
    r.demographic = parse_demographic(j.at("demographic").get<std::string>());
    if (!r.demographic) throw RecordError("bad demographic");
  }
  auto t = parse_treatment(j.at("treatment").get<std::string>());
  if (!t) throw RecordError("bad treatment");
  r.treatment = *t;
  r.created_at = j.at("created_at").get<std::int64_t>();
  auto st = parse_session_status(j.at("status").get<std::string>());
  if (!st) throw RecordError("bad session status");
  r.status = *st;
  r.duplicate_participant = j.value("duplicate_participant", false);
  for (const auto& tj : j.at("trials")) r.trials.push_back(trial_from_json(tj));
  if (j.contains("survey") && !j.at("survey").is_null()) r.survey = survey_from_json(j.at("survey"));
  if (j.contains("audit"))
    for (const auto& a : j.at("audit")) r.audit.push_back({a.at("ts").get<std::int64_t>(), a.at("event").get<std::string>()});
  return r;
}

// --- Participant rows -------------------------------------------------------

struct ParticipantRow {
  std::string id;
  Demographic demographic = Demographic::Black;
  Treatment treatment = Treatment::Control;
  double total_score = 0.0;
  std::optional<double> intelligence_estimate;
  OutcomeCounts outcomes;
  std::optional<ResponseLabel> coder1_label;
  std::optional<ResponseLabel> coder2_label;

  TreatmentGroup treatment_group() const { return group_of(treatment); }

  friend bool operator==(const ParticipantRow&, const ParticipantRow&) = default;
};

inline constexpr std::string_view kParticipantCsvHeader =
    "id,demographic,treatment,treatment_group,total_score,intelligence_estimate,"
    "caught,exited,exhausted,timed_out,coder1_label,coder2_label";

inline std::string format_number(double x) {
  std::ostringstream out;
  out.precision(15);
  out << x;
  return out.str();
}

inline std::string to_csv_line(const ParticipantRow& r) {
  std::string line = r.id;
  line += ',';
  line += to_string(r.demographic);
  line += ',';
  line += to_string(r.treatment);
  line += ',';
  line += to_string(r.treatment_group());
  line += ',' + format_number(r.total_score);
  line += ',' + (r.intelligence_estimate ? format_number(*r.intelligence_estimate) : std::string());
  line += ',' + std::to_string(r.outcomes.caught);
  line += ',' + std::to_string(r.outcomes.exited);
  line += ',' + std::to_string(r.outcomes.exhausted);
  line += ',' + std::to_string(r.outcomes.timed_out);
  line += ',' + (r.coder1_label ? std::string(to_string(*r.coder1_label)) : std::string());
  line += ',' + (r.coder2_label ? std::string(to_string(*r.coder2_label)) : std::string());
  return line;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

inline std::string participants_to_csv(const std::vector<ParticipantRow>& rows) {
  std::string out(kParticipantCsvHeader);
  out += '\n';
  for (const auto& r : rows) out += to_csv_line(r) + '\n';
  return out;
}

inline ParticipantRow participant_from_fields(const std::vector<std::string>& f, int lineno) {
  auto fail = [&](const std::string& what) {
    throw RecordError("participant row " + std::to_string(lineno) + ": " + what);
  };
  if (f.size() != 12) fail("expected 12 fields");
  ParticipantRow r;
  r.id = f[0];
  if (r.id.empty()) fail("empty id");
  auto d = parse_demographic(f[1]);
  if (!d) fail("bad demographic '" + f[1] + "'");
  r.demographic = *d;
  auto t = parse_treatment(f[2]);
  if (!t) fail("bad treatment '" + f[2] + "'");
  r.treatment = *t;
  if (!f[3].empty() && f[3] != to_string(group_of(*t))) fail("treatment_group inconsistent with treatment");
  auto number = [&](const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      fail(std::string("bad ") + what);
    }
    return 0.0;
  };
  r.total_score = number(f[4], "total_score");
  if (!f[5].empty()) {
    r.intelligence_estimate = number(f[5], "intelligence_estimate");
    if (*r.intelligence_estimate < 0.0 || *r.intelligence_estimate > 100.0)
      fail("intelligence_estimate outside [0, 100]");
  }
  r.outcomes.caught = static_cast<int>(number(f[6], "caught"));
  r.outcomes.exited = static_cast<int>(number(f[7], "exited"));
  r.outcomes.exhausted = static_cast<int>(number(f[8], "exhausted"));
  r.outcomes.timed_out = static_cast<int>(number(f[9], "timed_out"));
  if (!f[10].empty()) {
    r.coder1_label = parse_label(f[10]);
    if (!r.coder1_label) fail("bad coder1_label");
  }
  if (!f[11].empty()) {
    r.coder2_label = parse_label(f[11]);
    if (!r.coder2_label) fail("bad coder2_label");
  }
  return r;
}

inline std::vector<ParticipantRow> participants_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ParticipantRow> rows;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != kParticipantCsvHeader) throw RecordError("unexpected participant CSV header");
      header = false;
      continue;
    }
    rows.push_back(participant_from_fields(split_csv_line(line), lineno));
  }
  return rows;
}

// Flat analysis row for a completed session. Sessions without a recorded
// demographic cannot be analysed and are rejected.
inline ParticipantRow to_participant_row(const SessionRecord& s) {
  if (!s.demographic) throw RecordError("session " + s.session_id + " has no demographic");
  ParticipantRow r;
  r.id = s.participant_id;
  r.demographic = *s.demographic;
  r.treatment = s.treatment;
  r.total_score = s.total_score();
  if (s.survey) r.intelligence_estimate = s.survey->intelligence_estimate;
  r.outcomes = s.outcome_counts();
  return r;
}

inline ParticipantRow participant_from_json(const nlohmann::json& j, int lineno) {
  auto str = [&](const char* k) -> std::string {
    if (!j.contains(k) || j.at(k).is_null()) return {};
    if (j.at(k).is_string()) return j.at(k).get<std::string>();
    return format_number(j.at(k).get<double>());
  };
  const std::string id = j.contains("id") ? str("id") : str("participant_id");
  return participant_from_fields({id, str("demographic"), str("treatment"), str("treatment_group"),
                                  str("total_score"), str("intelligence_estimate"), str("caught"),
                                  str("exited"), str("exhausted"), str("timed_out"),
                                  str("coder1_label"), str("coder2_label")},
                                 lineno);
}

// JSONL input: each line is either a flat participant object or a session
// export line carrying a "row" object.
inline std::vector<ParticipantRow> participants_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ParticipantRow> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.contains("row")) {
      if (!j.at("row").is_null()) rows.push_back(participant_from_json(j.at("row"), lineno));
      continue;
    }
    rows.push_back(participant_from_json(j, lineno));
  }
  return rows;
}

inline nlohmann::ordered_json to_json(const ParticipantRow& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["demographic"] = std::string(to_string(r.demographic));
  j["treatment"] = std::string(to_string(r.treatment));
  j["treatment_group"] = std::string(to_string(r.treatment_group()));
  j["total_score"] = r.total_score;
  j["intelligence_estimate"] =
      r.intelligence_estimate ? nlohmann::ordered_json(*r.intelligence_estimate) : nlohmann::ordered_json(nullptr);
  j["caught"] = r.outcomes.caught;
  j["exited"] = r.outcomes.exited;
  j["exhausted"] = r.outcomes.exhausted;
  j["timed_out"] = r.outcomes.timed_out;
  j["coder1_label"] = r.coder1_label ? nlohmann::ordered_json(std::string(to_string(*r.coder1_label))) : nlohmann::ordered_json(nullptr);
  j["coder2_label"] = r.coder2_label ? nlohmann::ordered_json(std::string(to_string(*r.coder2_label))) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace pigchase
