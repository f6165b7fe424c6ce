#pragma once

// Batch simulation of model participants: 15-trial sessions, aggregate
// cumulative-score curves, outcome rates, R^2 fits and parameter sweeps.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigchase/cognitive.hpp"
#include "pigchase/game.hpp"
#include "pigchase/records.hpp"
#include "pigchase/turn.hpp"

namespace pigchase::sim {

enum class PlayerAgent : std::uint8_t { Model, RandomKeys };

struct SimOptions {
  GameRules rules;
  AiMotionModel ai_model = AiMotionModel::RotateThenAdvance;
  PlayerAgent agent = PlayerAgent::Model;
};

// Independent streams for the pig and the player agent, derived from one seed.
inline std::uint64_t pig_stream_seed(std::uint64_t seed) { return mix_seed(seed * 2); }
inline std::uint64_t agent_stream_seed(std::uint64_t seed) { return mix_seed(seed * 2 + 1); }

using KeyPolicy = std::function<ArrowKey(const GameState&)>;

inline GameState play_trial(GameState state, const KeyPolicy& policy, AiMotionModel ai_model,
                            std::vector<KeyLogEntry>& key_log) {
  while (state.status == TrialStatus::Running) {
    const ArrowKey key = policy(state);
    key_log.push_back({key, 0.0, 0});
    state = play_turn(std::move(state), key, ai_model).state;
  }
  return state;
}

// One simulated participant. The model's utilities carry over across all 15
// trials; the pig stream continues from trial to trial.
inline SessionRecord run_session(const cog::ModelParams& params, const BoardLayout& layout,
                                 std::uint64_t seed, const SimOptions& options = {},
                                 cog::ModelStats* stats = nullptr,
                                 std::function<void(const cog::TraceEvent&)> trace = {}) {
  SessionRecord rec;
  rec.session_id = "sim-" + std::to_string(seed);
  rec.participant_id = rec.session_id;
  rec.treatment = Treatment::Control;
  rec.status = SessionStatus::Complete;

  Rng pig_rng(pig_stream_seed(seed));
  Rng agent_rng(agent_stream_seed(seed));
  std::optional<cog::CognitiveModel> model;
  if (options.agent == PlayerAgent::Model) {
    model.emplace(params, layout, agent_rng.next());
    if (trace) model->set_trace(std::move(trace));
  }

  KeyPolicy policy;
  if (model) {
    policy = [&](const GameState& s) { return model->decide(s); };
  } else {
    policy = [&](const GameState&) { return kAllKeys[agent_rng.uniform_index(kAllKeys.size())]; };
  }

  for (int t = 1; t <= kTrialsPerSession; ++t) {
    GameState state = start_trial(layout, options.rules, t, std::move(pig_rng));
    if (model) model->begin_trial(state);
    std::vector<KeyLogEntry> log;
    state = play_trial(std::move(state), policy, options.ai_model, log);
    if (model) model->end_trial(state.status, state.actions_used);
    rec.trials.push_back(make_trial_record(state, std::move(log)));
    pig_rng = std::move(state.rng);
  }
  if (stats && model) *stats = model->stats();
  return rec;
}

using Curve = std::array<double, kTrialsPerSession>;

// Running total of trial scores from the first scored trial on; practice
// entries stay at zero.
inline std::array<long, kTrialsPerSession> cumulative_scores(const SessionRecord& s) {
  std::array<long, kTrialsPerSession> out{};
  long running = 0;
  for (const auto& t : s.trials) {
    if (t.trial_index < 1 || t.trial_index > kTrialsPerSession) continue;
    if (!t.practice) running += t.trial_score;
    out[static_cast<std::size_t>(t.trial_index - 1)] = t.practice ? 0 : running;
  }
  return out;
}

struct OutcomeRates {
  double caught = 0.0;
  double exited = 0.0;
  double exhausted = 0.0;
  double timed_out = 0.0;

  double sum() const { return caught + exited + exhausted + timed_out; }
};

struct RunSummary {
  int run = 0;
  std::uint64_t seed = 0;
  int total_score = 0;
  OutcomeCounts outcomes;
  std::array<long, kTrialsPerSession> cumulative{};
  long rotation_attempts = 0;
  long rotation_fired = 0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct BatchSummary {
  Curve avg_cumulative_score_per_trial{};
  OutcomeRates outcome_rates;
  std::vector<RunSummary> runs;

  // Fraction of rotation-strategy attempts where the rotation chunk was
  // retrieved and the rotation key pressed.
  double rotation_frequency() const {
    long attempts = 0, fired = 0;
    for (const auto& r : runs) {
      attempts += r.rotation_attempts;
      fired += r.rotation_fired;
    }
    return attempts == 0 ? 0.0 : static_cast<double>(fired) / static_cast<double>(attempts);
  }
};

inline RunSummary summarize_run(int run, std::uint64_t seed, const SessionRecord& s,
                                const cog::ModelStats& stats) {
  RunSummary r;
  r.run = run;
  r.seed = seed;
  r.total_score = s.total_score();
  r.outcomes = s.outcome_counts();
  r.cumulative = cumulative_scores(s);
  r.rotation_attempts = stats.rotation.attempts;
  r.rotation_fired = stats.rotation.fired;
  return r;
}

// Integer accumulation keeps the reduction exact, so the summary does not
// depend on the order runs are listed in.
inline BatchSummary summarize(std::vector<RunSummary> runs) {
  BatchSummary out;
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.run < b.run; });
  std::array<long, kTrialsPerSession> sums{};
  OutcomeCounts totals;
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += r.cumulative[i];
    totals.caught += r.outcomes.caught;
    totals.exited += r.outcomes.exited;
    totals.exhausted += r.outcomes.exhausted;
    totals.timed_out += r.outcomes.timed_out;
  }
  if (!runs.empty()) {
    for (std::size_t i = 0; i < sums.size(); ++i)
      out.avg_cumulative_score_per_trial[i] = static_cast<double>(sums[i]) / static_cast<double>(runs.size());
  }
  if (const int n = totals.total(); n > 0) {
    out.outcome_rates = {static_cast<double>(totals.caught) / n, static_cast<double>(totals.exited) / n,
                         static_cast<double>(totals.exhausted) / n, static_cast<double>(totals.timed_out) / n};
  }
  out.runs = std::move(runs);
  return out;
}

struct BatchConfig {
  int n_runs = 150;
  std::uint64_t base_seed = 1;
  cog::ModelParams model_params;
  BoardLayout layout = default_layout();
  SimOptions options;
  // 0 = hardware concurrency; 1 = serial.
  unsigned threads = 0;
};

inline BatchSummary run_batch(const BatchConfig& config) {
  if (config.n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  config.model_params.validate();
  std::vector<RunSummary> runs(static_cast<std::size_t>(config.n_runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < config.n_runs; k = next++) {
      const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
      cog::ModelStats stats;
      const SessionRecord s = run_session(config.model_params, config.layout, seed, config.options, &stats);
      runs[static_cast<std::size_t>(k)] = summarize_run(k, seed, s, stats);
    }
  };
  unsigned n_threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(config.n_runs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  return summarize(std::move(runs));
}

// 1 - SS_res / SS_tot against the reference mean; nullopt when the reference
// has no variance.
inline std::optional<double> fit_r2(std::span<const double> model, std::span<const double> reference) {
  if (model.size() != reference.size() || reference.empty())
    throw std::invalid_argument("fit_r2: curves must have equal, non-zero length");
  const double mean = std::accumulate(reference.begin(), reference.end(), 0.0) / static_cast<double>(reference.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ss_res += (reference[i] - model[i]) * (reference[i] - model[i]);
    ss_tot += (reference[i] - mean) * (reference[i] - mean);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

// --- Output formats ---------------------------------------------------------

inline std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string curve_csv(const Curve& curve) {
  std::string out = "trial_index,avg_cumulative_score\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out += std::to_string(i + 1) + "," + fixed(curve[i]) + "\n";
  return out;
}

inline std::string runs_csv(const BatchSummary& s) {
  std::string out = "run,seed,total_score,caught,exited,exhausted,timed_out,rotation_attempts,rotation_fired\n";
  for (const auto& r : s.runs) {
    out += std::to_string(r.run) + "," + std::to_string(r.seed) + "," + std::to_string(r.total_score) + "," +
           std::to_string(r.outcomes.caught) + "," + std::to_string(r.outcomes.exited) + "," +
           std::to_string(r.outcomes.exhausted) + "," + std::to_string(r.outcomes.timed_out) + "," +
           std::to_string(r.rotation_attempts) + "," + std::to_string(r.rotation_fired) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json summary_json(const BatchSummary& s) {
  nlohmann::ordered_json j;
  j["n_runs"] = s.runs.size();
  j["avg_cumulative_score_per_trial"] = s.avg_cumulative_score_per_trial;
  nlohmann::ordered_json rates;
  rates["caught"] = s.outcome_rates.caught;
  rates["exited"] = s.outcome_rates.exited;
  rates["exhausted"] = s.outcome_rates.exhausted;
  rates["timed_out"] = s.outcome_rates.timed_out;
  j["outcome_rates"] = rates;
  j["rotation_frequency"] = s.rotation_frequency();
  auto totals = nlohmann::ordered_json::array();
  for (const auto& r : s.runs) totals.push_back(r.total_score);
  j["run_totals"] = totals;
  return j;
}

// Reads a two-column curve CSV (trial_index, value) with a header line.
inline std::vector<double> read_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<int, double>> points;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() < 2) throw std::runtime_error("curve CSV: expected trial_index,value");
    points.emplace_back(std::stoi(fields[0]), std::stod(fields[1]));
  }
  std::sort(points.begin(), points.end());
  std::vector<double> out;
  for (const auto& [i, v] : points) out.push_back(v);
  return out;
}

// --- Sweeps -----------------------------------------------------------------

struct SweepAxis {
  std::string parameter;
  std::vector<std::string> values;
};

// "parameter = v1, v2, ..." per line; '#' comments.
inline std::vector<SweepAxis> parse_grid(const std::string& text) {
  std::vector<SweepAxis> axes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = cog::detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::runtime_error("grid: expected 'parameter = values'");
    SweepAxis axis{cog::detail::trim(t.substr(0, eq)), {}};
    std::istringstream vs(t.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      v = cog::detail::trim(v);
      if (!v.empty()) axis.values.push_back(v);
    }
    if (axis.values.empty()) throw std::runtime_error("grid: no values for " + axis.parameter);
    cog::ModelParams probe;
    for (const auto& value : axis.values) cog::set_param(probe, axis.parameter, value);
    axes.push_back(std::move(axis));
  }
  return axes;
}

struct SweepPoint {
  std::vector<std::pair<std::string, std::string>> assignment;
  cog::ModelParams params;
};

// Cartesian product, first axis varying slowest. No axes -> no points.
inline std::vector<SweepPoint> expand_grid(const std::vector<SweepAxis>& axes, const cog::ModelParams& base) {
  std::vector<SweepPoint> points;
  if (axes.empty()) return points;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    SweepPoint p{{}, base};
    for (std::size_t a = 0; a < axes.size(); ++a) {
      p.assignment.emplace_back(axes[a].parameter, axes[a].values[idx[a]]);
      cog::set_param(p.params, axes[a].parameter, axes[a].values[idx[a]]);
    }
    p.params.validate();
    points.push_back(std::move(p));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
  }
}

struct NamedCurve {
  std::string name;
  std::vector<double> values;
};

struct SweepRow {
  SweepPoint point;
  BatchSummary summary;
  std::vector<std::optional<double>> r2;
};

inline std::vector<SweepRow> sweep(const std::vector<SweepAxis>& axes, const BatchConfig& base,
                                   const std::vector<NamedCurve>& references = {}) {
  std::vector<SweepRow> rows;
  for (auto& point : expand_grid(axes, base.model_params)) {
    BatchConfig cfg = base;
    cfg.model_params = point.params;
    SweepRow row{std::move(point), run_batch(cfg), {}};
    for (const auto& ref : references)
      row.r2.push_back(fit_r2(row.summary.avg_cumulative_score_per_trial, ref.values));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepAxis>& axes, const std::vector<SweepRow>& rows,
                             const std::vector<NamedCurve>& references = {}) {
  std::string out;
  for (const auto& a : axes) out += a.parameter + ",";
  out += "caught,exited,exhausted,timed_out,rotation_frequency,final_avg_cumulative_score";
  for (const auto& r : references) out += ",r2_" + r.name;
  out += "\n";
  for (const auto& row : rows) {
    for (const auto& [k, v] : row.point.assignment) out += v + ",";
    const auto& s = row.summary;
    out += fixed(s.outcome_rates.caught) + "," + fixed(s.outcome_rates.exited) + "," +
           fixed(s.outcome_rates.exhausted) + "," + fixed(s.outcome_rates.timed_out) + "," +
           fixed(s.rotation_frequency()) + "," + fixed(s.avg_cumulative_score_per_trial.back());
    for (const auto& r2 : row.r2) out += "," + (r2 ? fixed(*r2) : std::string("NA"));
    out += "\n";
  }
  return out;
}

}  // namespace pigchase::sim
