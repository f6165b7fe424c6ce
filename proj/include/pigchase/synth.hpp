#pragma once

// Synthetic cohort generator. Model participants play through a live
// SessionService using only the turn-channel messages, fill in the survey,
// and the service export is returned with synthetic coder labels attached.
// Used for the bundled example dataset and the pipeline tests; none of it is
// human data.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pigchase/cognitive.hpp"
#include "pigchase/session.hpp"

namespace pigchase::synth {

inline Pose pose_from_json(const nlohmann::ordered_json& j) {
  const auto facing = parse_orientation(j.at("facing").get<std::string>());
  if (!facing) throw std::runtime_error("bad facing in state message");
  return {{j.at("row").get<int>(), j.at("col").get<int>()}, *facing};
}

// Rebuilds the visible game state from a "state" message, as a client would.
inline GameState state_from_message(const BoardLayout& layout, const service::ChannelMessage& m) {
  if (m.type != "state") throw std::runtime_error("expected a state message, got " + m.type);
  const auto& p = m.payload;
  GameState s;
  s.layout = layout;
  s.player = pose_from_json(p.at("player"));
  s.ai = pose_from_json(p.at("ai"));
  s.pig = {p.at("pig").at("row").get<int>(), p.at("pig").at("col").get<int>()};
  s.actions_used = p.at("actions_used").get<int>();
  s.trial_index = m.trial;
  s.status = *parse_status(p.at("status").get<std::string>());
  return s;
}

struct CohortConfig {
  int per_cell = 10;
  std::uint64_t seed = 20240601;
  bool plant_outlier = true;
  GameRules rules;
};

struct Cohort {
  std::vector<ParticipantRow> rows;
  std::string outlier_id;
  service::ExportResult exported;
};

// Cell-specific parameter shifts so the synthetic table has main effects and
// an interaction to detect.
inline cog::ModelParams cell_params(Demographic d, Treatment t) {
  cog::ModelParams p;
  switch (d) {
    case Demographic::Black: p.rotation_bla = -0.6; break;
    case Demographic::White: p.rotation_bla = -0.15; break;
    case Demographic::NonWhite: p.rotation_bla = 0.0; break;
  }
  const TreatmentGroup g = group_of(t);
  if (d == Demographic::Black && g == TreatmentGroup::Black) p.exit_patience = 1;
  if (d == Demographic::White && g == TreatmentGroup::White) p.exit_patience = 3;
  return p;
}

// Key policy that only turns in place; used for the planted outlier.
inline ArrowKey spin_key(const GameState& s) { return key_for(anticlockwise(s.player.facing)); }

// Plays one participant to the end of trial 15. `decide` is called on the
// state rebuilt from the latest state message.
template <typename Begin, typename Decide, typename End>
void play_session(service::SessionService& svc, const std::string& session_id, const BoardLayout& layout,
                  Begin&& begin, Decide&& decide, End&& end) {
  service::ChannelMessage state = svc.current_state(session_id);
  begin(state_from_message(layout, state));
  std::int64_t client_seq = 0;
  while (true) {
    const GameState s = state_from_message(layout, state);
    const ArrowKey key = decide(s);
    nlohmann::ordered_json payload;
    payload["key"] = std::string(to_string(key));
    payload["latency_ms"] = 350.0;
    const auto result = svc.handle_message(session_id, {"key", s.trial_index, client_seq++, payload});
    std::optional<service::ChannelMessage> next_state;
    for (const auto& m : result.messages) {
      if (m.type == "trial_end") {
        end(*parse_status(m.payload.at("outcome").get<std::string>()), m.payload.at("actions_used").get<int>());
        next_state.reset();
      } else if (m.type == "state") {
        const bool opening = m.payload.at("actions_used").get<int>() == 0 && m.trial != s.trial_index;
        if (opening) begin(state_from_message(layout, m));
        next_state = m;
      }
    }
    if (result.session_trials_complete) return;
    if (!next_state) throw std::runtime_error("service sent no state after a key");
    state = *next_state;
  }
}

inline ResponseLabel shift_label(ResponseLabel l, int by) {
  const int i = std::clamp(static_cast<int>(l) + by, 0, static_cast<int>(kAllLabels.size()) - 1);
  return kAllLabels[static_cast<std::size_t>(i)];
}

inline ResponseLabel primary_label(const OutcomeCounts& c, Rng& rng) {
  const double n = std::max(1, c.total());
  const double caught = c.caught / n;
  const double exited = c.exited / n;
  ResponseLabel l = ResponseLabel::Vague;
  if (caught >= 0.5) l = ResponseLabel::AiCooperated;
  else if (caught >= 0.3) l = ResponseLabel::AiUserDependent;
  else if (caught >= 0.15) l = ResponseLabel::AiNoPattern;
  else if (exited >= 0.8) l = ResponseLabel::UserOwnMovement;
  else if (exited >= 0.5) l = ResponseLabel::AiNotIntelligent;
  else l = ResponseLabel::AiWorkedAgainst;
  if (rng.bernoulli(0.3)) l = shift_label(l, rng.bernoulli(0.5) ? 1 : -1);
  return l;
}

inline Cohort generate_cohort(const CohortConfig& cfg) {
  std::int64_t now = 1'700'000'000'000;
  service::ServiceConfig sc;
  sc.assignment = service::AssignmentMode::Fixed;
  sc.seed = cfg.seed;
  sc.rules = cfg.rules;
  sc.clock = [&now] { return now += 250; };
  service::SessionService svc(sc);
  const BoardLayout& layout = sc.layout;
  Rng rng(mix_seed(cfg.seed));

  std::map<std::string, std::pair<ResponseLabel, ResponseLabel>> codes;
  auto finish = [&](const std::string& session_id, const std::string& pid, int estimate) {
    SurveyResponse survey;
    survey.answers = {"synthetic answer 1", "synthetic answer 2", "synthetic answer 3", "synthetic answer 4",
                      "synthetic answer 5"};
    survey.intelligence_estimate = std::clamp(estimate, 0, 100);
    svc.submit_survey(session_id, survey);
    const OutcomeCounts oc = svc.record(session_id).outcome_counts();
    const ResponseLabel c1 = primary_label(oc, rng);
    const ResponseLabel c2 = rng.bernoulli(0.7) ? c1 : shift_label(c1, rng.bernoulli(0.5) ? 1 : -1);
    codes[pid] = {c1, c2};
  };

  int k_global = 0;
  for (Demographic d : kAllDemographics) {
    for (Treatment t : kAllTreatments) {
      for (int k = 0; k < cfg.per_cell; ++k, ++k_global) {
        const std::string pid = "p" + std::string(k_global < 100 ? (k_global < 10 ? "00" : "0") : "") +
                                std::to_string(k_global);
        const auto created = svc.create_session({pid, d, t});
        cog::CognitiveModel model(cell_params(d, t), layout, mix_seed(cfg.seed + 7919ULL * (k_global + 1)));
        play_session(
            svc, created.session_id, layout, [&](const GameState& s) { model.begin_trial(s); },
            [&](const GameState& s) { return model.decide(s); },
            [&](TrialStatus o, int a) { model.end_trial(o, a); });
        const OutcomeCounts oc = svc.record(created.session_id).outcome_counts();
        const double caught = oc.caught / static_cast<double>(std::max(1, oc.total()));
        finish(created.session_id, pid, static_cast<int>(std::lround(25.0 + 60.0 * caught + rng.logistic(6.0))));
      }
    }
  }

  Cohort cohort;
  if (cfg.plant_outlier) {
    cohort.outlier_id = "p-outlier";
    const auto created = svc.create_session({cohort.outlier_id, Demographic::White, Treatment::W1});
    play_session(
        svc, created.session_id, layout, [](const GameState&) {}, spin_key, [](TrialStatus, int) {});
    finish(created.session_id, cohort.outlier_id, 5);
  }

  cohort.exported = svc.export_sessions();
  cohort.rows = participants_from_csv(cohort.exported.participants_csv);
  for (auto& r : cohort.rows) {
    const auto& [c1, c2] = codes.at(r.id);
    r.coder1_label = c1;
    r.coder2_label = c2;
  }
  return cohort;
}

}  // namespace pigchase::synth
