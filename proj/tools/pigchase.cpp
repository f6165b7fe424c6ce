// pigchase: batch simulation, curve fitting, parameter sweeps, analysis of
// participant tables, synthetic cohorts and the live session server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pigchase/http.hpp"
#include "pigchase/sim.hpp"
#include "pigchase/stats.hpp"
#include "pigchase/synth.hpp"

namespace fs = std::filesystem;
using namespace pigchase;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

struct GameOptions {
  std::string layout_file;
  std::string scoring = "deduct-always";
  std::string pig = "random";
  double p_stay = 0.5;
  std::string ai_motion = "rotate";

  void add(CLI::App* app) {
    app->add_option("--layout", layout_file, "Layout text file (default: built-in)");
    app->add_option("--scoring", scoring, "deduct-always | deduct-on-score")->capture_default_str();
    app->add_option("--pig", pig, "random | static")->capture_default_str();
    app->add_option("--p-stay", p_stay, "Pig stay probability")->capture_default_str();
    app->add_option("--ai-motion", ai_motion, "rotate | direct")->capture_default_str();
  }

  BoardLayout layout() const { return layout_file.empty() ? default_layout() : load_layout(read_file(layout_file)); }

  GameRules rules() const {
    GameRules r;
    const auto mode = parse_scoring_mode(scoring);
    if (!mode) throw std::runtime_error("unknown scoring mode: " + scoring);
    r.scoring = *mode;
    if (pig == "static") r.pig.mode = PigMotionMode::Static;
    else if (pig != "random") throw std::runtime_error("unknown pig motion: " + pig);
    if (!(p_stay >= 0.0 && p_stay <= 1.0)) throw std::runtime_error("--p-stay must be within [0,1]");
    r.pig.p_stay = p_stay;
    return r;
  }

  AiMotionModel ai() const {
    if (ai_motion == "rotate") return AiMotionModel::RotateThenAdvance;
    if (ai_motion == "direct") return AiMotionModel::DirectStep;
    throw std::runtime_error("unknown AI motion model: " + ai_motion);
  }
};

struct BatchOptions {
  int runs = 150;
  std::uint64_t seed = 1;
  std::string params_file;
  unsigned threads = 0;
  std::string agent = "model";
  GameOptions game;

  void add(CLI::App* app) {
    app->add_option("--runs", runs, "Simulated participants")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Base seed; run k uses seed+k")->capture_default_str();
    app->add_option("--params", params_file, "Model parameter file (key = value)");
    app->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
    app->add_option("--agent", agent, "model | random")->capture_default_str();
    game.add(app);
  }

  sim::BatchConfig config() const {
    sim::BatchConfig c;
    c.n_runs = runs;
    c.base_seed = seed;
    if (!params_file.empty()) c.model_params = cog::parse_params(read_file(params_file));
    c.layout = game.layout();
    c.options.rules = game.rules();
    c.options.ai_model = game.ai();
    if (agent == "random") c.options.agent = sim::PlayerAgent::RandomKeys;
    else if (agent != "model") throw std::runtime_error("unknown agent: " + agent);
    c.threads = threads;
    return c;
  }
};

std::vector<sim::NamedCurve> load_references(const std::vector<std::string>& files) {
  std::vector<sim::NamedCurve> refs;
  for (const auto& f : files) refs.push_back({fs::path(f).stem().string(), sim::read_curve_csv(read_file(f))});
  return refs;
}

std::vector<ParticipantRow> load_rows(const std::string& file) {
  const std::string text = read_file(file);
  if (fs::path(file).extension() == ".jsonl") return participants_from_jsonl(text);
  return participants_from_csv(text);
}

// "id,label" lines replacing coder-2 labels.
void apply_second_coder(std::vector<ParticipantRow>& rows, const std::string& file) {
  std::map<std::string, ResponseLabel> codes;
  std::istringstream in(read_file(file));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("id,", 0) == 0)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw std::runtime_error(file + ":" + std::to_string(lineno) + ": expected id,label");
    const auto label = parse_label(f[1]);
    if (!label) throw std::runtime_error(file + ":" + std::to_string(lineno) + ": unknown label " + f[1]);
    codes[f[0]] = *label;
  }
  for (auto& r : rows) {
    auto it = codes.find(r.id);
    r.coder2_label = it == codes.end() ? std::nullopt : std::optional<ResponseLabel>(it->second);
  }
}

int cmd_simulate(const BatchOptions& opt, const std::string& out_dir, const std::string& trace_file) {
  const auto cfg = opt.config();
  const auto summary = sim::run_batch(cfg);
  write_file(fs::path(out_dir) / "curve.csv", sim::curve_csv(summary.avg_cumulative_score_per_trial));
  write_file(fs::path(out_dir) / "runs.csv", sim::runs_csv(summary));
  write_file(fs::path(out_dir) / "summary.json", sim::summary_json(summary).dump(2) + "\n");
  if (!trace_file.empty()) {
    std::ofstream trace(trace_file);
    sim::run_session(cfg.model_params, cfg.layout, cfg.base_seed, cfg.options, nullptr,
                     [&](const cog::TraceEvent& e) { trace << to_json(e).dump() << '\n'; });
  }
  const auto& r = summary.outcome_rates;
  std::printf("runs=%zu caught=%.4f exited=%.4f exhausted=%.4f timed_out=%.4f final_avg=%.4f\n",
              summary.runs.size(), r.caught, r.exited, r.exhausted, r.timed_out,
              summary.avg_cumulative_score_per_trial.back());
  return 0;
}

int cmd_fit(const std::string& model_file, const std::vector<std::string>& reference_files) {
  const auto model = sim::read_curve_csv(read_file(model_file));
  int status = 0;
  for (const auto& ref : load_references(reference_files)) {
    if (ref.values.size() != model.size()) {
      std::fprintf(stderr, "%s: %zu points, model has %zu\n", ref.name.c_str(), ref.values.size(), model.size());
      status = 1;
      continue;
    }
    const auto r2 = sim::fit_r2(model, ref.values);
    if (r2) std::printf("%s r2=%.6f\n", ref.name.c_str(), *r2);
    else std::printf("%s r2=undefined (reference has zero variance)\n", ref.name.c_str());
  }
  return status;
}

int cmd_sweep(const BatchOptions& opt, const std::string& grid_file, const std::vector<std::string>& references,
              const std::string& out_file) {
  const auto axes = sim::parse_grid(read_file(grid_file));
  const auto refs = load_references(references);
  const auto rows = sim::sweep(axes, opt.config(), refs);
  const std::string table = sim::sweep_csv(axes, rows, refs);
  if (out_file.empty()) std::cout << table;
  else write_file(out_file, table);
  return 0;
}

int cmd_analyze(const std::string& in_file, const std::string& out_dir, bool anova, const std::string& kappa_file,
                bool figures, double z) {
  auto rows = load_rows(in_file);
  if (!kappa_file.empty()) apply_second_coder(rows, kappa_file);
  stats::AnalysisOptions opt;
  // No selector given: everything.
  const bool all = !anova && kappa_file.empty() && !figures;
  opt.anova = all || anova;
  opt.kappa = all || !kappa_file.empty();
  opt.figures = true;
  opt.z_threshold = z;
  const auto rep = stats::analyze(rows, opt);
  const fs::path dir(out_dir);
  write_file(dir / "report.md", stats::render_report(rep));
  write_file(dir / "cleaned_participants.csv", participants_to_csv(rep.kept));
  if (all || figures) {
    write_file(dir / "fig_outcomes.csv", stats::outcomes_csv(rep.figures));
    write_file(dir / "fig_scores_intelligence.csv", stats::scores_csv(rep.figures));
    write_file(dir / "fig_coded_responses.csv", stats::coded_csv(rep.figures));
  }
  std::cout << stats::render_report(rep);
  return 0;
}

int cmd_synth(const std::string& out_dir, int per_cell, std::uint64_t seed, bool transcripts) {
  synth::CohortConfig cfg;
  cfg.per_cell = per_cell;
  cfg.seed = seed;
  const auto cohort = synth::generate_cohort(cfg);
  write_file(fs::path(out_dir) / "participants.csv", participants_to_csv(cohort.rows));
  if (transcripts) write_file(fs::path(out_dir) / "sessions.jsonl", cohort.exported.sessions_jsonl);
  std::printf("participants=%zu planted_outlier=%s\n", cohort.rows.size(), cohort.outlier_id.c_str());
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const GameOptions& game, int port, const std::string& host, const std::string& assignment,
              int timeout_s, std::uint64_t seed, const std::string& data_dir) {
  service::ServiceConfig cfg;
  cfg.layout = game.layout();
  cfg.rules = game.rules();
  cfg.ai_model = game.ai();
  const auto mode = service::parse_assignment(assignment);
  if (!mode) throw std::runtime_error("unknown assignment mode: " + assignment);
  cfg.assignment = *mode;
  cfg.trial_timeout_ms = static_cast<std::int64_t>(timeout_s) * 1000;
  cfg.seed = seed;
  cfg.data_dir = data_dir.empty() ? service::data_dir_from_env() : std::optional<fs::path>(data_dir);
  service::SessionService svc(cfg);
  http::Api api(svc);
  httplib::Server server;
  http::mount(server, api);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::printf("listening on %s:%d (data dir: %s)\n", host.c_str(), port,
              cfg.data_dir ? cfg.data_dir->string().c_str() : "none, in-memory only");
  std::fflush(stdout);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pig chase: cognitive model simulation, analysis and session server"};
  app.require_subcommand(1);

  BatchOptions sim_opt;
  std::string sim_out = "out";
  std::string trace_file;
  auto* simulate = app.add_subcommand("simulate", "Run a batch of simulated participants");
  sim_opt.add(simulate);
  simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();
  simulate->add_option("--trace", trace_file, "JSONL production trace of the first run");

  std::string fit_model;
  std::vector<std::string> fit_refs;
  auto* fit = app.add_subcommand("fit", "R^2 of a model curve against reference curves");
  fit->add_option("--model", fit_model, "Model curve CSV")->required();
  fit->add_option("--reference", fit_refs, "Reference curve CSV (repeatable)")->required();

  BatchOptions sweep_opt;
  std::string grid_file, sweep_out;
  std::vector<std::string> sweep_refs;
  auto* sweep = app.add_subcommand("sweep", "Run one batch per parameter grid point");
  sweep_opt.add(sweep);
  sweep->add_option("--grid", grid_file, "Grid file: parameter = v1, v2, ...")->required();
  sweep->add_option("--reference", sweep_refs, "Reference curve CSV (repeatable)");
  sweep->add_option("--out", sweep_out, "Output CSV (default: stdout)");

  std::string an_in, an_out = "analysis", an_kappa;
  bool an_anova = false, an_figures = false;
  double an_z = 3.0;
  auto* analyze = app.add_subcommand("analyze", "Clean, test and tabulate a participant table");
  analyze->add_option("--in", an_in, "Participants CSV or export JSONL")->required();
  analyze->add_option("--out", an_out, "Output directory")->capture_default_str();
  analyze->add_flag("--anova", an_anova, "Run the two-way ANOVA");
  analyze->add_option("--kappa", an_kappa, "Second coder labels (id,label CSV)");
  analyze->add_flag("--figures", an_figures, "Write figure CSVs");
  analyze->add_option("--z", an_z, "Outlier |z| threshold")->capture_default_str();

  std::string synth_out = "synthetic";
  int synth_per_cell = 10;
  std::uint64_t synth_seed = 20240601;
  bool synth_transcripts = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic cohort through the session service");
  synth_cmd->add_option("--out", synth_out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--per-cell", synth_per_cell, "Participants per demographic x treatment cell")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth_cmd->add_flag("--transcripts", synth_transcripts, "Also write sessions.jsonl");

  GameOptions serve_game;
  int port = 8080, timeout_s = 120;
  std::string host = "0.0.0.0", assignment = "random", data_dir;
  std::uint64_t serve_seed = 1;
  auto* serve = app.add_subcommand("serve", "Run the session HTTP server");
  serve_game.add(serve);
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--assignment", assignment, "random | balanced")->capture_default_str();
  serve->add_option("--timeout-s", timeout_s, "Per-trial timeout in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  serve->add_option("--seed", serve_seed, "Assignment and pig seed")->capture_default_str();
  serve->add_option("--data-dir", data_dir, std::string("Session store (default: $") + std::string(service::kDataDirEnv) + ")");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(sim_opt, sim_out, trace_file);
    if (*fit) return cmd_fit(fit_model, fit_refs);
    if (*sweep) return cmd_sweep(sweep_opt, grid_file, sweep_refs, sweep_out);
    if (*analyze) return cmd_analyze(an_in, an_out, an_anova, an_kappa, an_figures, an_z);
    if (*synth_cmd) return cmd_synth(synth_out, synth_per_cell, synth_seed, synth_transcripts);
    if (*serve) return cmd_serve(serve_game, port, host, assignment, timeout_s, serve_seed, data_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
