#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "pigchase/stats.hpp"

using namespace pigchase;
using namespace pigchase::stats;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParticipantRow row(std::string id, Demographic d, Treatment t, double score, std::optional<double> est = 50.0) {
  ParticipantRow r;
  r.id = std::move(id);
  r.demographic = d;
  r.treatment = t;
  r.total_score = score;
  r.intelligence_estimate = est;
  return r;
}

// Balanced 2x2, two observations per cell; see the hand computation below.
std::vector<Observation> two_by_two() {
  return {{0, 0, 1}, {0, 0, 3}, {0, 1, 2}, {0, 1, 6}, {1, 0, 5}, {1, 0, 7}, {1, 1, 10}, {1, 1, 12}};
}

}  // namespace

TEST(FTail, MatchesReferenceValues) {
  // Upper-tail values from an independent statistics package.
  struct Ref {
    double f, d1, d2, p;
  };
  const Ref refs[] = {{6.85, 2, 914, 0.001114700216083816},  {1.66, 6, 914, 0.12772716892862596},
                      {2.22, 12, 914, 0.009411028157595987}, {3.0, 3, 20, 0.054858618668295125},
                      {0.5, 1, 10, 0.49564750438311955},     {10.0, 1, 4, 0.03410942316740963}};
  for (const auto& r : refs) EXPECT_NEAR(f_sf(r.f, r.d1, r.d2), r.p, 1e-10) << r.f << " " << r.d1 << " " << r.d2;
}

TEST(FTail, IncompleteBetaReferenceValues) {
  EXPECT_NEAR(incomplete_beta(2.5, 3.0, 0.4), 0.4123610068859569, 1e-12);
  EXPECT_NEAR(incomplete_beta(0.5, 0.5, 0.9), 0.7951672353008665, 1e-12);
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_THROW(incomplete_beta(0, 3, 0.5), StatsError);
}

TEST(FTail, EdgeCases) {
  EXPECT_EQ(f_sf(0.0, 3, 10), 1.0);
  EXPECT_EQ(f_sf(-1.0, 3, 10), 1.0);
  EXPECT_EQ(f_sf(std::numeric_limits<double>::infinity(), 3, 10), 0.0);
  EXPECT_THROW(f_sf(1.0, 0, 10), StatsError);
  EXPECT_THROW(f_sf(NAN, 1, 10), StatsError);
  double prev = 1.0;
  for (double f = 0.1; f < 20; f += 0.7) {
    const double p = f_sf(f, 4, 30);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(ZFilter, ConstantScoresKeepEverything) {
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 20; ++i) rows.push_back(row("p" + std::to_string(i), Demographic::White, Treatment::W1, 7));
  const auto r = zscore_filter(rows);
  EXPECT_EQ(r.kept.size(), 20u);
  EXPECT_TRUE(r.removed.empty());
}

TEST(ZFilter, SingleFarValueIsRemoved) {
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 99; ++i) rows.push_back(row("p" + std::to_string(i), Demographic::Black, Treatment::B1, 0));
  rows.push_back(row("far", Demographic::Black, Treatment::B1, 1000));
  const auto r = zscore_filter(rows);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].id, "far");
  EXPECT_EQ(r.kept.size(), 99u);
}

TEST(ZFilter, InfiniteThresholdIsIdentity) {
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 99; ++i) rows.push_back(row("p" + std::to_string(i), Demographic::Black, Treatment::B1, 0));
  rows.push_back(row("far", Demographic::Black, Treatment::B1, 1000));
  const auto r = zscore_filter(rows, Field::TotalScore, std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.kept, rows);
}

TEST(ZFilter, StatisticsArePerTreatment) {
  // 1000 is ordinary among the W2 rows and extreme only within B1.
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 30; ++i) rows.push_back(row("b" + std::to_string(i), Demographic::Black, Treatment::B1, i % 3));
  for (int i = 0; i < 30; ++i)
    rows.push_back(row("w" + std::to_string(i), Demographic::White, Treatment::W2, 990 + i % 20));
  rows.push_back(row("b-far", Demographic::Black, Treatment::B1, 1000));
  const auto r = zscore_filter(rows);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].id, "b-far");
}

TEST(ZFilter, MissingFieldIsKept) {
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 40; ++i)
    rows.push_back(row("p" + std::to_string(i), Demographic::Black, Treatment::B1, 0, i == 0 ? std::nullopt : std::optional<double>(50)));
  rows.push_back(row("far", Demographic::Black, Treatment::B1, 0, 100));
  const auto r = zscore_filter(rows, Field::IntelligenceEstimate);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].id, "far");
}

TEST(ZFilter, SinglePassIsNotIdempotent) {
  // Removing the largest value shrinks sd, exposing the next one.
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(row("p" + std::to_string(i), Demographic::White, Treatment::W1, i % 2));
  rows.push_back(row("big", Demographic::White, Treatment::W1, 40));
  rows.push_back(row("mid", Demographic::White, Treatment::W1, 8));
  const auto first = zscore_filter(rows);
  ASSERT_EQ(first.removed.size(), 1u);
  EXPECT_EQ(first.removed[0].id, "big");
  const auto second = zscore_filter(first.kept);
  ASSERT_EQ(second.removed.size(), 1u);
  EXPECT_EQ(second.removed[0].id, "mid");
}

TEST(Anova, BalancedTwoByTwoMatchesHandComputation) {
  // Cell means 2, 4, 6, 11; grand mean 5.75; n = 2 per cell.
  //   SS_A  = 4 * ((3 - 5.75)^2 + (8.5 - 5.75)^2) = 60.5
  //   SS_B  = 4 * ((4 - 5.75)^2 + (7.5 - 5.75)^2) = 24.5
  //   SS_AB = 2 * sum (cell - grand)^2 - SS_A - SS_B = 89.5 - 85 = 4.5
  //   SS_res = 2 + 8 + 2 + 2 = 14, df 4, MS 3.5
  const auto obs = two_by_two();
  const auto t = two_way_anova(obs, 2, 2);
  EXPECT_NEAR(t.a.ss, 60.5, 1e-9);
  EXPECT_NEAR(t.b.ss, 24.5, 1e-9);
  EXPECT_NEAR(t.ab.ss, 4.5, 1e-9);
  EXPECT_NEAR(t.residual.ss, 14.0, 1e-9);
  EXPECT_EQ(t.a.df, 1);
  EXPECT_EQ(t.b.df, 1);
  EXPECT_EQ(t.ab.df, 1);
  EXPECT_EQ(t.residual.df, 4);
  EXPECT_NEAR(t.a.f, 60.5 / 3.5, 1e-9);
  EXPECT_NEAR(t.b.f, 7.0, 1e-9);
  EXPECT_NEAR(t.ab.f, 4.5 / 3.5, 1e-9);
  EXPECT_NEAR(t.a.p, 0.014172594972725132, 1e-10);
  EXPECT_NEAR(t.b.p, 0.057235231106631514, 1e-10);
  EXPECT_NEAR(t.ab.p, 0.320187971412982, 1e-10);
  EXPECT_NEAR(t.ss_total, 103.5, 1e-9);
  EXPECT_FALSE(t.degenerate);
}

TEST(Anova, ResponseDrivenByAOnly) {
  std::vector<Observation> obs;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (double e : {-0.5, 0.5}) obs.push_back({a, b, 10.0 * a + e});
  const auto t = two_way_anova(obs, 2, 2);
  EXPECT_NEAR(t.b.ss, 0.0, 1e-9);
  EXPECT_NEAR(t.ab.ss, 0.0, 1e-9);
  EXPECT_NEAR(t.a.ss, 200.0, 1e-9);
  EXPECT_GT(t.a.f, 100.0);
  EXPECT_NEAR(t.b.f, 0.0, 1e-9);
}

TEST(Anova, AllEqualIsDegenerate) {
  std::vector<Observation> obs;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 3; ++k) obs.push_back({a, b, 4.0});
  const auto t = two_way_anova(obs, 3, 2);
  EXPECT_TRUE(t.degenerate);
  for (const auto* e : {&t.a, &t.b, &t.ab}) {
    EXPECT_EQ(e->f, 0.0);
    EXPECT_EQ(e->p, 1.0);
  }
}

TEST(Anova, EmptyCellIsNamed) {
  auto obs = two_by_two();
  obs.erase(std::remove_if(obs.begin(), obs.end(), [](const Observation& o) { return o.a == 1 && o.b == 0; }),
            obs.end());
  try {
    two_way_anova(obs, 2, 2, {"lo", "hi"}, {"x", "y"}, "dose", "arm");
    FAIL() << "expected an error";
  } catch (const StatsError& e) {
    EXPECT_NE(std::string(e.what()).find("empty cell (dose=hi, arm=x)"), std::string::npos) << e.what();
  }
}

TEST(Anova, NeedsResidualDegreesOfFreedom) {
  const std::vector<Observation> one_each{{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 4}};
  EXPECT_THROW(two_way_anova(one_each, 2, 2), StatsError);
  EXPECT_THROW(two_way_anova(one_each, 1, 2), StatsError);
}

TEST(Anova, BalancedDecompositionSumsToTotal) {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const int la = 2 + static_cast<int>(rng.uniform_index(3)), lb = 2 + static_cast<int>(rng.uniform_index(6));
    const int per = 2 + static_cast<int>(rng.uniform_index(4));
    std::vector<Observation> obs;
    for (int a = 0; a < la; ++a)
      for (int b = 0; b < lb; ++b)
        for (int k = 0; k < per; ++k) obs.push_back({a, b, 3.0 * a - b + rng.logistic(2.0)});
    const auto t = two_way_anova(obs, la, lb);
    EXPECT_NEAR(t.a.ss + t.b.ss + t.ab.ss + t.residual.ss, t.ss_total, 1e-9);
    EXPECT_EQ(t.a.df + t.b.df + t.ab.df + t.residual.df, t.n - 1);
  }
}

TEST(Anova, UnbalancedTypeTwoMatchesReferencePackage) {
  const std::vector<std::pair<std::pair<int, int>, std::vector<double>>> cells = {
      {{0, 0}, {3, 4}},       {{0, 1}, {6, 5, 7}}, {{0, 2}, {2, 8}},
      {{1, 0}, {9, 7, 8, 6}}, {{1, 1}, {4, 5}},    {{1, 2}, {10, 12, 11}}};
  std::vector<Observation> obs;
  for (const auto& [cell, ys] : cells)
    for (double y : ys) obs.push_back({cell.first, cell.second, y});
  const auto t = two_way_anova(obs, 2, 3);
  EXPECT_NEAR(t.a.ss, 30.858333333333302, 1e-9);
  EXPECT_NEAR(t.b.ss, 23.62499999999999, 1e-9);
  EXPECT_NEAR(t.ab.ss, 36.375000000000014, 1e-9);
  EXPECT_NEAR(t.residual.ss, 28.0, 1e-9);
  EXPECT_NEAR(t.a.f, 11.020833333333321, 1e-9);
  EXPECT_NEAR(t.b.f, 4.218749999999998, 1e-9);
  EXPECT_NEAR(t.ab.f, 6.495535714285717, 1e-9);
  EXPECT_NEAR(t.a.p, 0.007750544305132962, 1e-10);
  EXPECT_NEAR(t.b.p, 0.04693424471225034, 1e-10);
  EXPECT_NEAR(t.ab.p, 0.01556696491023044, 1e-10);
}

TEST(Anova, UnbalancedRandomDesignsMatchRegressionOracle) {
  Rng rng(77);
  for (int rep = 0; rep < 25; ++rep) {
    const int la = 3, lb = 7;
    std::vector<Observation> obs;
    std::vector<oracle::Obs> plain;
    for (int a = 0; a < la; ++a)
      for (int b = 0; b < lb; ++b) {
        const int n = 1 + static_cast<int>(rng.uniform_index(5)) + (a == 0 && b == 0 ? 1 : 0);
        for (int k = 0; k < n; ++k) {
          const double y = a - 0.5 * b + (a == 2 && b > 3 ? 2.0 : 0.0) + rng.logistic(1.0);
          obs.push_back({a, b, y});
          plain.push_back({a, b, y});
        }
      }
    const auto t = two_way_anova(obs, la, lb);
    const auto want = oracle::type_two(plain, la, lb);
    EXPECT_NEAR(t.a.ss, want.ss_a, 1e-7);
    EXPECT_NEAR(t.b.ss, want.ss_b, 1e-7);
    EXPECT_NEAR(t.ab.ss, want.ss_ab, 1e-7);
    EXPECT_NEAR(t.residual.ss, want.ss_res, 1e-7);
    for (const auto* e : t.rows()) {
      EXPECT_GE(e->ss, -1e-9);
      EXPECT_GE(e->p, 0.0);
      EXPECT_LE(e->p, 1.0);
    }
  }
}

TEST(Anova, DemographicTreatmentUsesNamedFactors) {
  std::vector<ParticipantRow> rows;
  int k = 0;
  for (Demographic d : kAllDemographics)
    for (Treatment t : kAllTreatments)
      for (int i = 0; i < 3; ++i)
        rows.push_back(row("p" + std::to_string(k++), d, t, static_cast<double>(static_cast<int>(d) * 4 + i)));
  const auto t = demographic_treatment_anova(rows);
  EXPECT_EQ(t.a.name, "demographic");
  EXPECT_EQ(t.b.name, "treatment");
  EXPECT_EQ(t.ab.name, "demographic x treatment");
  EXPECT_EQ(t.a.df, 2);
  EXPECT_EQ(t.b.df, 6);
  EXPECT_EQ(t.ab.df, 12);
  EXPECT_EQ(t.residual.df, 63 - 21);
}

TEST(Format, EffectSummaryStyle) {
  AnovaEffect e{"demographic", 0, 2, 0, 6.85, 0.0004};
  EXPECT_EQ(format_effect(e), "F = 6.85, p < .001");
  e.p = 0.004;
  EXPECT_EQ(format_effect(e), "F = 6.85, p < .01");
  e.p = 0.0312;
  EXPECT_EQ(format_effect(e), "F = 6.85, p = .03");
  EXPECT_EQ(format_p(0.999), "p = 1.00");
  EXPECT_EQ(format_p(0.5), "p = .50");
}

TEST(Format, TableHasFourRows) {
  const auto obs = two_by_two();
  const std::string text = anova_table_text(two_way_anova(obs, 2, 2, {}, {}, "A", "B"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_NE(text.find("| A x B"), std::string::npos);
  EXPECT_NE(text.find("| Residual"), std::string::npos);
}

TEST(Pearson, Identities) {
  const std::vector<double> x{1, 2, 3, 4, 5.5, 9};
  std::vector<double> twice, neg;
  for (double v : x) {
    twice.push_back(2 * v);
    neg.push_back(-v);
  }
  EXPECT_DOUBLE_EQ(*pearson_r(x, twice), 1.0);
  EXPECT_DOUBLE_EQ(*pearson_r(x, neg), -1.0);
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  EXPECT_NEAR(*pearson_r(a, b), 0.8, 1e-12);
  std::vector<double> a2, b2;
  for (double v : a) a2.push_back(10 * v + 3);
  for (double v : b) b2.push_back(0.5 * v - 1);
  EXPECT_NEAR(*pearson_r(a2, b2), 0.8, 1e-12);
}

TEST(Pearson, UndefinedCases) {
  const std::vector<double> x{1, 2, 3}, flat{2, 2, 2}, two{1, 2};
  EXPECT_FALSE(pearson_r(x, flat).has_value());
  EXPECT_FALSE(pearson_r(two, two).has_value());
  EXPECT_THROW(pearson_r(x, two), StatsError);
}

TEST(Kappa, IdenticalIsOne) {
  const std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 3, 2};
  EXPECT_DOUBLE_EQ(*weighted_quadratic_kappa(a, a, 7), 1.0);
  const std::vector<ResponseLabel> labels{ResponseLabel::AiCooperated, ResponseLabel::Vague,
                                          ResponseLabel::AiWorkedAgainst};
  EXPECT_DOUBLE_EQ(*weighted_quadratic_kappa(std::span<const ResponseLabel>(labels), labels), 1.0);
}

TEST(Kappa, OppositeExtremesHandExample) {
  // Observed disagreement weight is 1 on every item; expected is 0.5.
  const std::vector<int> a{0, 0, 6, 6}, b{6, 6, 0, 0};
  EXPECT_NEAR(*weighted_quadratic_kappa(a, b, 7), -1.0, 1e-12);
}

TEST(Kappa, TwelveItemReference) {
  const std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 2}, b{0, 1, 3, 3, 4, 6, 6, 1, 1, 2, 2, 2};
  EXPECT_NEAR(*weighted_quadratic_kappa(a, b, 7), 0.9501039501039501, 1e-12);
}

TEST(Kappa, ReversingTheScaleChangesNothing) {
  const std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 2}, b{0, 1, 3, 3, 4, 6, 6, 1, 1, 2, 2, 2};
  std::vector<int> ra, rb;
  for (int v : a) ra.push_back(6 - v);
  for (int v : b) rb.push_back(6 - v);
  EXPECT_NEAR(*weighted_quadratic_kappa(ra, rb, 7), *weighted_quadratic_kappa(a, b, 7), 1e-12);
}

TEST(Kappa, SingleSharedLabelIsUndefined) {
  const std::vector<int> a{3, 3, 3};
  EXPECT_FALSE(weighted_quadratic_kappa(a, a, 7).has_value());
  const std::vector<int> bad{7, 0, 0};
  EXPECT_THROW(weighted_quadratic_kappa(a, bad, 7), StatsError);
}

TEST(Kappa, Bands) {
  EXPECT_EQ(kappa_band(0.73), "substantial");
  EXPECT_EQ(kappa_band(0.5), "moderate");
  EXPECT_EQ(kappa_band(0.95), "almost perfect");
  EXPECT_EQ(kappa_band(-0.1), "poor");
}

TEST(Figures, AllCaughtIsFullCatchRate) {
  std::vector<ParticipantRow> rows;
  for (Treatment t : kAllTreatments) {
    auto r = row(std::string(to_string(t)), Demographic::White, t, 100);
    r.outcomes.caught = 12;
    rows.push_back(r);
  }
  const auto f = aggregate_figures(rows);
  ASSERT_EQ(f.outcomes.size(), 8u);
  for (const auto& s : f.outcomes) EXPECT_DOUBLE_EQ(s.caught_pct, 100.0);
  EXPECT_EQ(f.outcomes.back().treatment, "overall");
  EXPECT_EQ(f.outcomes.back().trials, 84);
}

TEST(Figures, PercentagesClose) {
  Rng rng(4);
  std::vector<ParticipantRow> rows;
  for (int i = 0; i < 70; ++i) {
    auto r = row("p" + std::to_string(i), kAllDemographics[rng.uniform_index(3)], kAllTreatments[rng.uniform_index(7)],
                 rng.uniform01() * 100);
    for (int k = 0; k < 12; ++k) r.outcomes.add(static_cast<TrialStatus>(1 + rng.uniform_index(4)));
    r.coder1_label = kAllLabels[rng.uniform_index(7)];
    rows.push_back(r);
  }
  const auto f = aggregate_figures(rows);
  for (const auto& s : f.outcomes)
    EXPECT_NEAR(s.caught_pct + s.exited_pct + s.exhausted_pct + s.timed_out_pct, 100.0, 1e-9);
  for (const auto& c : f.coded) {
    double sum = 0;
    for (std::size_t i = 0; i < kAllLabels.size(); ++i) sum += c.percent(i);
    EXPECT_NEAR(sum, c.n_coded ? 100.0 : 0.0, 1e-9);
  }
  int n = 0;
  for (const auto& c : f.scores) n += c.n;
  EXPECT_EQ(n, 70);
}

TEST(Figures, GoldenSnapshotOfBundledDataset) {
  const auto rows = participants_from_csv(slurp(std::string(PIGCHASE_DATA_DIR) + "/synthetic/participants.csv"));
  const auto rep = analyze(rows);
  const std::string golden = PIGCHASE_GOLDEN_DIR;
  EXPECT_EQ(outcomes_csv(rep.figures), slurp(golden + "/fig_outcomes.csv"));
  EXPECT_EQ(scores_csv(rep.figures), slurp(golden + "/fig_scores_intelligence.csv"));
  EXPECT_EQ(coded_csv(rep.figures), slurp(golden + "/fig_coded_responses.csv"));
}

TEST(Pipeline, BundledDatasetLosesOnlyThePlantedOutlier) {
  const auto rows = participants_from_csv(slurp(std::string(PIGCHASE_DATA_DIR) + "/synthetic/participants.csv"));
  const auto rep = analyze(rows);
  ASSERT_EQ(rep.removed.size(), 1u);
  EXPECT_EQ(rep.removed[0].id, "p-outlier");
  EXPECT_EQ(rep.kept.size(), rows.size() - 1);
  ASSERT_TRUE(rep.anova.has_value());
  EXPECT_EQ(rep.anova->a.df, 2);
  EXPECT_EQ(rep.anova->b.df, 6);
  EXPECT_EQ(rep.anova->ab.df, 12);
  ASSERT_TRUE(rep.kappa.has_value());
  EXPECT_GT(*rep.kappa, 0.6);
}

TEST(Report, HasEverySection) {
  const auto rows = participants_from_csv(slurp(std::string(PIGCHASE_DATA_DIR) + "/synthetic/participants.csv"));
  const std::string text = render_report(analyze(rows));
  for (const char* heading : {"# Analysis report", "## Cleaning", "## Trial outcomes", "## Two-way ANOVA on total score",
                              "## Score vs intelligence estimate (Pearson r)", "## Coder agreement"})
    EXPECT_NE(text.find(heading), std::string::npos) << heading;
  EXPECT_NE(text.find("- demographic: (F = "), std::string::npos);
  EXPECT_NE(text.find("| overall |"), std::string::npos);
  EXPECT_NE(text.find("p-outlier"), std::string::npos);
}

TEST(Report, AnovaErrorIsReported) {
  std::vector<ParticipantRow> rows{row("a", Demographic::White, Treatment::W1, 1), row("b", Demographic::Black, Treatment::B1, 2)};
  const auto rep = analyze(rows);
  EXPECT_FALSE(rep.anova.has_value());
  ASSERT_TRUE(rep.anova_error.has_value());
  EXPECT_NE(render_report(rep).find("ANOVA not computed: ANOVA: empty cell"), std::string::npos);
}

TEST(Records, ParticipantCsvRoundTrip) {
  auto r = row("x1", Demographic::NonWhite, Treatment::BNP, -12, 63);
  r.outcomes = {5, 4, 2, 1};
  r.coder1_label = ResponseLabel::AiNoPattern;
  auto s = row("x2", Demographic::White, Treatment::Control, 40.5, std::nullopt);
  const std::vector<ParticipantRow> rows{r, s};
  const std::string csv = participants_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kParticipantCsvHeader);
  EXPECT_EQ(participants_from_csv(csv), rows);
  EXPECT_THROW(participants_from_csv(std::string(kParticipantCsvHeader) + "\nx,Martian,B1,Black,1,,0,0,0,0,,\n"),
               RecordError);
}
