// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "pigchase/astar.hpp"
#include "pigchase/sim.hpp"
#include "pigchase/stats.hpp"
#include "pigchase/synth.hpp"

using namespace pigchase;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
};

int failures = 0;

void run(int id, const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char budget[64];
  std::snprintf(budget, sizeof budget, "%.2fs of %.0fs", secs, budget_s);
  c.expect(secs < budget_s, std::string("over time budget: ") + budget);
  if (!c.ok) ++failures;
  std::cout << (c.ok ? "PASS" : "FAIL") << "  [" << id << "] " << name << " (" << budget << ")";
  if (!c.ok) std::cout << " -- " << c.why;
  std::cout << std::endl;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string batch_csv(const sim::BatchSummary& s) {
  return sim::curve_csv(s.avg_cumulative_score_per_trial) + sim::runs_csv(s) + sim::summary_json(s).dump(2);
}

}  // namespace

int main() {
  run(1, "utility closed form", 1, [](Check& c) {
    const double alpha = 0.2, reward = 10.0;
    const std::map<int, double> worked{{1, 2.0}, {2, 3.6}, {5, 6.7232}};
    cog::Production p{"p", {}, {}, 0.0, 0};
    for (int n = 1; n <= 50; ++n) {
      cog::update_utility(p, reward, alpha);
      const double closed = reward * (1.0 - std::pow(1.0 - alpha, n));
      c.expect(std::abs(p.utility - closed) < 1e-9, "U(" + std::to_string(n) + ") off the closed form");
      if (auto it = worked.find(n); it != worked.end())
        c.expect(std::abs(p.utility - it->second) < 1e-9, "U(" + std::to_string(n) + ") off the worked value");
    }
  });

  run(2, "A* matches BFS on 100 random layouts", 5, [](Check& c) {
    int unreachable = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto sc = oracle::random_case(seed, 0.35);
      const auto path = a_star(sc.map, sc.start, sc.goals, sc.occupied);
      const auto want = oracle::bfs_distance(sc.map, sc.start, sc.goals, sc.occupied);
      c.expect(path.has_value() == want.has_value(), "reachability differs at seed " + std::to_string(seed));
      if (path && want)
        c.expect(static_cast<int>(path->size()) == *want, "length differs at seed " + std::to_string(seed));
      unreachable += !want;
    }
    c.expect(unreachable > 0 && unreachable < 100, "layouts did not exercise both outcomes");
  });

  run(3, "seeded batches are byte-identical", 120, [](Check& c) {
    sim::BatchConfig cfg;
    cfg.n_runs = 150;
    cfg.base_seed = 42;
    const std::string a = batch_csv(sim::run_batch(cfg));
    cfg.threads = 1;
    const std::string b = batch_csv(sim::run_batch(cfg));
    c.expect(!a.empty() && a == b, "summary output differs between identical batches");
  });

  run(4, "exit and rotation strategy gates", 120, [](Check& c) {
    cog::ModelParams p;
    p.exit_patience = 2;
    cog::ModelBuffers b;
    b.visual.board = &default_layout();
    b.visual.player = {{6, 2}, Orientation::N};
    b.visual.pig = {4, 4};
    auto at = [&](int d) {
      b.visual.ai = {{4 - std::min(d, 2), 4 + std::max(0, d - 2)}, Orientation::S};
      return cog::exit_strategy_check(b, p);
    };
    c.expect(at(3) == cog::ExitDecision::Proceed, "first check should only record a baseline");
    c.expect(at(4) != cog::ExitDecision::Exit, "one worsening check should not exit");
    c.expect(at(4) == cog::ExitDecision::Exit, "3->4, 4->4 should exit at patience 2");

    auto freq = [](double bla) {
      sim::BatchConfig cfg;
      cfg.n_runs = 200;
      cfg.base_seed = 7;
      cfg.model_params.rotation_bla = bla;
      return sim::run_batch(cfg).rotation_frequency();
    };
    const double hi = freq(0.0), lo = freq(-0.15);
    c.expect(hi > lo, "rotation frequency at bla 0 (" + sim::fixed(hi) + ") not above bla -0.15 (" +
                          sim::fixed(lo) + ")");
  });

  run(5, "model catches at least twice as often as random keys", 180, [](Check& c) {
    sim::BatchConfig cfg;
    cfg.n_runs = 200;
    cfg.base_seed = 1000;
    const double model = sim::run_batch(cfg).outcome_rates.caught;
    cfg.options.agent = sim::PlayerAgent::RandomKeys;
    const double random = sim::run_batch(cfg).outcome_rates.caught;
    c.expect(model >= 2.0 * random && model > 0.0,
             "catch rate " + sim::fixed(model) + " vs random " + sim::fixed(random));
  });

  run(6, "ANOVA against regression and F-tail references", 5, [](Check& c) {
    const std::vector<oracle::Obs> obs{{0, 0, 1}, {0, 0, 3}, {0, 1, 2},  {0, 1, 6},
                                       {1, 0, 5}, {1, 0, 7}, {1, 1, 10}, {1, 1, 12}};
    std::vector<stats::Observation> sobs;
    for (const auto& o : obs) sobs.push_back({o.a, o.b, o.y});
    const auto t = stats::two_way_anova(sobs, 2, 2);
    const auto want = oracle::type_two(obs, 2, 2);
    c.expect(std::abs(t.a.ss - want.ss_a) < 1e-6 && std::abs(t.b.ss - want.ss_b) < 1e-6 &&
                 std::abs(t.ab.ss - want.ss_ab) < 1e-6 && std::abs(t.residual.ss - want.ss_res) < 1e-6,
             "SS differ from the regression oracle");
    c.expect(t.a.df == 1 && t.b.df == 1 && t.ab.df == 1 && t.residual.df == 4, "df wrong");
    const double ms_res = want.ss_res / 4;
    c.expect(std::abs(t.a.f - want.ss_a / ms_res) < 1e-6 && std::abs(t.b.f - want.ss_b / ms_res) < 1e-6 &&
                 std::abs(t.ab.f - want.ss_ab / ms_res) < 1e-6,
             "F differs from the regression oracle");

    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
      const int la = 2 + static_cast<int>(rng.uniform_index(3)), lb = 2 + static_cast<int>(rng.uniform_index(6));
      const int per = 2 + static_cast<int>(rng.uniform_index(4));
      std::vector<stats::Observation> bal;
      for (int i = 0; i < la; ++i)
        for (int j = 0; j < lb; ++j)
          for (int k = 0; k < per; ++k) bal.push_back({i, j, 10.0 * rng.uniform01() + i - j});
      const auto bt = stats::two_way_anova(bal, la, lb);
      const double sum = bt.a.ss + bt.b.ss + bt.ab.ss + bt.residual.ss;
      c.expect(std::abs(sum - bt.ss_total) < 1e-9, "balanced SS do not add up to the total");
    }

    const struct {
      double f, d1, d2, p;
    } refs[] = {{6.85, 2, 914, 0.001114700216083816},
                {1.66, 6, 914, 0.12772716892862596},
                {2.22, 12, 914, 0.009411028157595987},
                {3.0, 3, 20, 0.054858618668295125},
                {0.5, 1, 10, 0.49564750438311955}};
    for (const auto& r : refs)
      c.expect(std::abs(stats::f_sf(r.f, r.d1, r.d2) - r.p) < 1e-8, "F tail off at F=" + sim::fixed(r.f, 2));
  });

  run(7, "correlation, kappa and outlier filter identities", 5, [](Check& c) {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> twice, neg;
    for (double v : x) {
      twice.push_back(2 * v);
      neg.push_back(-v);
    }
    const auto up = stats::pearson_r(x, twice), down = stats::pearson_r(x, neg);
    c.expect(up && std::abs(*up - 1.0) < 1e-12, "pearson_r(x, 2x) != 1");
    c.expect(down && std::abs(*down + 1.0) < 1e-12, "pearson_r(x, -x) != -1");
    const std::vector<ResponseLabel> labels{ResponseLabel::AiCooperated, ResponseLabel::Vague,
                                            ResponseLabel::AiWorkedAgainst, ResponseLabel::AiNoPattern};
    const auto k = stats::weighted_quadratic_kappa(labels, labels);
    c.expect(k && std::abs(*k - 1.0) < 1e-12, "kappa of identical codings != 1");

    const auto rows = participants_from_csv(read_text(fs::path(PIGCHASE_DATA_DIR) / "synthetic/participants.csv"));
    const auto filtered = stats::zscore_filter(rows);
    c.expect(filtered.removed.size() == 1 && filtered.removed[0].id == "p-outlier",
             "filter removed " + std::to_string(filtered.removed.size()) + " rows, expected only p-outlier");
    c.expect(filtered.kept.size() + 1 == rows.size(), "filter lost rows");
  });

  run(8, "simulate, export and analyze round trip", 180, [](Check& c) {
    const auto cohort = synth::generate_cohort({});
    const std::string csv = participants_to_csv(cohort.rows);
    const fs::path bundled = fs::path(PIGCHASE_DATA_DIR) / "synthetic/participants.csv";
    c.expect(csv == read_text(bundled), "regenerated cohort differs from the bundled dataset");

    // The exported table (before coding) must carry the same scores.
    const auto exported = participants_from_csv(cohort.exported.participants_csv);
    c.expect(exported.size() == cohort.rows.size(), "export row count differs");
    for (std::size_t i = 0; i < exported.size() && i < cohort.rows.size(); ++i)
      c.expect(exported[i].total_score == cohort.rows[i].total_score && exported[i].outcomes == cohort.rows[i].outcomes,
               "export lost scores for " + exported[i].id);
    c.expect(participants_from_jsonl(cohort.exported.sessions_jsonl) == exported, "JSONL and CSV exports disagree");

    const auto rep = stats::analyze(participants_from_csv(read_text(bundled)));
    const std::string report = stats::render_report(rep);
    const fs::path out = fs::temp_directory_path() / ("pigchase-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(out);
    std::ofstream(out / "report.md") << report;
    std::ofstream(out / "fig_outcomes.csv") << stats::outcomes_csv(rep.figures);
    std::ofstream(out / "fig_scores_intelligence.csv") << stats::scores_csv(rep.figures);
    std::ofstream(out / "fig_coded_responses.csv") << stats::coded_csv(rep.figures);

    c.expect(report.find("## Trial outcomes") != std::string::npos, "no outcome table");
    for (Treatment t : kAllTreatments)
      c.expect(report.find("| " + std::string(to_string(t)) + " | ") != std::string::npos,
               "outcome table misses " + std::string(to_string(t)));
    c.expect(rep.anova.has_value(), "ANOVA not computed");
    if (rep.anova) {
      const auto& t = *rep.anova;
      c.expect(t.a.df == 2 && t.b.df == 6 && t.ab.df == 12, "ANOVA is not 3x7");
      const std::regex line(R"(- [^:]+: \(F = \d+\.\d\d, p (<|=) (\.\d+|1\.00)\))");
      int effects = 0;
      for (auto it = std::sregex_iterator(report.begin(), report.end(), line); it != std::sregex_iterator(); ++it)
        ++effects;
      c.expect(effects == 3, "ANOVA effects not in F = x.xx, p = .xx form");
    }
    for (const char* f : {"fig_outcomes.csv", "fig_scores_intelligence.csv", "fig_coded_responses.csv"}) {
      const std::string text = read_text(out / f);
      c.expect(std::count(text.begin(), text.end(), '\n') > 1, std::string(f) + " is empty");
      const fs::path golden = fs::path(PIGCHASE_GOLDEN_DIR) / f;
      c.expect(text == read_text(golden), std::string(f) + " differs from the golden copy");
    }
    fs::remove_all(out);
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
