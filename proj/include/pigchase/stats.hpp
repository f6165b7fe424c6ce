#pragma once

// Analysis of participant tables: per-treatment outlier removal, two-way
// ANOVA with Type II sums of squares, Pearson r, weighted kappa and the
// aggregated figure tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pigchase/records.hpp"

namespace pigchase::stats {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Special functions

namespace detail {

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw StatsError("incomplete beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("incomplete beta: a and b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Upper tail P(F > f) for an F(d1, d2) variate.
inline double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw StatsError("f_sf: degrees of freedom must be positive");
  if (std::isnan(f)) throw StatsError("f_sf: F is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

// ---------------------------------------------------------------------------
// Outlier removal

enum class Field : std::uint8_t { TotalScore, IntelligenceEstimate };

inline std::optional<double> field_value(const ParticipantRow& r, Field f) {
  if (f == Field::TotalScore) return r.total_score;
  return r.intelligence_estimate;
}

struct FilterResult {
  std::vector<ParticipantRow> kept;
  std::vector<ParticipantRow> removed;
};

// Single pass: |x - mean| / sd > threshold within each treatment is dropped.
// sd is the population standard deviation; a group with sd = 0 loses
// nothing. Rows lacking the field are kept.
inline FilterResult zscore_filter(const std::vector<ParticipantRow>& rows, Field field = Field::TotalScore,
                                  double threshold = 3.0) {
  std::map<Treatment, std::pair<double, double>> moments;  // mean, sd
  {
    std::map<Treatment, std::vector<double>> values;
    for (const auto& r : rows) {
      const auto v = field_value(r, field);
      if (!v) continue;
      if (!std::isfinite(*v)) throw StatsError("zscore_filter: non-finite value for " + r.id);
      values[r.treatment].push_back(*v);
    }
    for (const auto& [t, xs] : values) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      moments[t] = {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
    }
  }
  FilterResult out;
  for (const auto& r : rows) {
    const auto v = field_value(r, field);
    bool drop = false;
    if (v) {
      const auto [mean, sd] = moments.at(r.treatment);
      drop = sd > 0.0 && std::fabs(*v - mean) / sd > threshold;
    }
    (drop ? out.removed : out.kept).push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-way ANOVA

struct AnovaEffect {
  std::string name;
  double ss = 0.0;
  int df = 0;
  double ms = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct AnovaTable {
  AnovaEffect a;
  AnovaEffect b;
  AnovaEffect ab;
  AnovaEffect residual;
  double ss_total = 0.0;
  int n = 0;
  // Residual mean square is zero, so F is reported as 0 with p = 1.
  bool degenerate = false;

  std::array<const AnovaEffect*, 4> rows() const { return {&a, &b, &ab, &residual}; }
};

struct Observation {
  int a = 0;  // level index of factor A
  int b = 0;  // level index of factor B
  double y = 0.0;
};

namespace detail {

enum Terms : unsigned { kA = 1, kB = 2, kAB = 4 };

// Intercept plus treatment-coded dummies for the requested terms.
inline Eigen::MatrixXd design(std::span<const Observation> obs, int levels_a, int levels_b, unsigned terms) {
  int cols = 1;
  if (terms & kA) cols += levels_a - 1;
  if (terms & kB) cols += levels_b - 1;
  if (terms & kAB) cols += (levels_a - 1) * (levels_b - 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(obs.size()), cols);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Observation& o = obs[i];
    Eigen::Index c = 0;
    x(row, c++) = 1.0;
    if (terms & kA) {
      for (int l = 1; l < levels_a; ++l) x(row, c++) = o.a == l ? 1.0 : 0.0;
    }
    if (terms & kB) {
      for (int l = 1; l < levels_b; ++l) x(row, c++) = o.b == l ? 1.0 : 0.0;
    }
    if (terms & kAB) {
      for (int la = 1; la < levels_a; ++la)
        for (int lb = 1; lb < levels_b; ++lb) x(row, c++) = (o.a == la && o.b == lb) ? 1.0 : 0.0;
    }
  }
  return x;
}

inline double rss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw StatsError("ANOVA: singular design matrix");
  const Eigen::VectorXd beta = qr.solve(y);
  return (y - x * beta).squaredNorm();
}

inline AnovaEffect effect(std::string name, double ss, int df, double ms_res, int df_res, bool degenerate) {
  AnovaEffect e{std::move(name), std::max(0.0, ss), df, 0.0, 0.0, 1.0};
  e.ms = df > 0 ? e.ss / df : 0.0;
  if (!degenerate && df > 0) {
    e.f = e.ms / ms_res;
    e.p = f_sf(e.f, df, df_res);
  }
  return e;
}

}  // namespace detail

// Type II sums of squares from nested least-squares fits:
//   SS_A  = RSS(B) - RSS(A+B)
//   SS_B  = RSS(A) - RSS(A+B)
//   SS_AB = RSS(A+B) - RSS(A+B+AB)
inline AnovaTable two_way_anova(std::span<const Observation> obs, int levels_a, int levels_b,
                                const std::vector<std::string>& names_a = {},
                                const std::vector<std::string>& names_b = {},
                                std::string factor_a = "A", std::string factor_b = "B") {
  if (levels_a < 2 || levels_b < 2) throw StatsError("ANOVA: each factor needs at least two levels");
  std::vector<int> cell_n(static_cast<std::size_t>(levels_a * levels_b), 0);
  for (const auto& o : obs) {
    if (o.a < 0 || o.a >= levels_a || o.b < 0 || o.b >= levels_b) throw StatsError("ANOVA: level index out of range");
    if (!std::isfinite(o.y)) throw StatsError("ANOVA: non-finite response");
    ++cell_n[static_cast<std::size_t>(o.a * levels_b + o.b)];
  }
  for (int la = 0; la < levels_a; ++la) {
    for (int lb = 0; lb < levels_b; ++lb) {
      if (cell_n[static_cast<std::size_t>(la * levels_b + lb)] == 0) {
        const std::string na = la < static_cast<int>(names_a.size()) ? names_a[static_cast<std::size_t>(la)] : std::to_string(la);
        const std::string nb = lb < static_cast<int>(names_b.size()) ? names_b[static_cast<std::size_t>(lb)] : std::to_string(lb);
        throw StatsError("ANOVA: empty cell (" + factor_a + "=" + na + ", " + factor_b + "=" + nb + ")");
      }
    }
  }
  const int n = static_cast<int>(obs.size());
  const int df_a = levels_a - 1, df_b = levels_b - 1, df_ab = df_a * df_b;
  const int df_res = n - levels_a * levels_b;
  if (df_res < 1) throw StatsError("ANOVA: no residual degrees of freedom");

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = obs[static_cast<std::size_t>(i)].y;
  using namespace detail;
  const double rss_a = rss(design(obs, levels_a, levels_b, kA), y);
  const double rss_b = rss(design(obs, levels_a, levels_b, kB), y);
  const double rss_add = rss(design(obs, levels_a, levels_b, kA | kB), y);
  const double rss_full = rss(design(obs, levels_a, levels_b, kA | kB | kAB), y);

  AnovaTable t;
  t.n = n;
  const double mean = y.mean();
  t.ss_total = (y.array() - mean).square().sum();
  const double ms_res = rss_full / df_res;
  // Relative to the spread of the data; exact-fit residuals are roundoff.
  t.degenerate = rss_full <= 1e-12 * std::max(1.0, t.ss_total);
  t.residual = {"Residual", rss_full, df_res, ms_res, 0.0, 1.0};
  t.a = effect(std::move(factor_a), rss_b - rss_add, df_a, ms_res, df_res, t.degenerate);
  t.b = effect(std::move(factor_b), rss_a - rss_add, df_b, ms_res, df_res, t.degenerate);
  t.ab = effect(t.a.name + " x " + t.b.name, rss_add - rss_full, df_ab, ms_res, df_res, t.degenerate);
  return t;
}

// Demographic x treatment on total score, over the levels present in rows.
inline AnovaTable demographic_treatment_anova(const std::vector<ParticipantRow>& rows) {
  std::vector<Demographic> demos;
  std::vector<Treatment> treatments;
  for (Demographic d : kAllDemographics)
    if (std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.demographic == d; })) demos.push_back(d);
  for (Treatment t : kAllTreatments)
    if (std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.treatment == t; })) treatments.push_back(t);
  std::vector<Observation> obs;
  for (const auto& r : rows) {
    const int a = static_cast<int>(std::find(demos.begin(), demos.end(), r.demographic) - demos.begin());
    const int b = static_cast<int>(std::find(treatments.begin(), treatments.end(), r.treatment) - treatments.begin());
    obs.push_back({a, b, r.total_score});
  }
  std::vector<std::string> na, nb;
  for (auto d : demos) na.emplace_back(to_string(d));
  for (auto t : treatments) nb.emplace_back(to_string(t));
  return two_way_anova(obs, static_cast<int>(demos.size()), static_cast<int>(treatments.size()), na, nb,
                       "demographic", "treatment");
}

// ---------------------------------------------------------------------------
// Reporting format

inline std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// "p < .001", "p < .01", otherwise "p = .xx" with no leading zero.
inline std::string format_p(double p) {
  if (p < 0.001) return "p < .001";
  if (p < 0.01) return "p < .01";
  std::string s = format_fixed(p, 2);
  if (s == "1.00") return "p = 1.00";
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return "p = " + s;
}

inline std::string format_effect(const AnovaEffect& e) {
  return "F = " + format_fixed(e.f, 2) + ", " + format_p(e.p);
}

inline std::string anova_table_text(const AnovaTable& t) {
  std::string out;
  char line[200];
  std::snprintf(line, sizeof line, "| %-26s | %14s | %5s | %12s | %8s | %-10s |\n", "Effect", "SS", "df", "MS", "F", "p");
  out += line;
  out += "|----------------------------|----------------|-------|--------------|----------|------------|\n";
  for (const AnovaEffect* e : t.rows()) {
    const bool res = e == &t.residual;
    std::snprintf(line, sizeof line, "| %-26s | %14.4f | %5d | %12.4f | %8s | %-10s |\n", e->name.c_str(), e->ss,
                  e->df, e->ms, res ? "" : format_fixed(e->f, 2).c_str(), res ? "" : format_p(e->p).c_str());
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation and agreement

// nullopt when either side has no variance or fewer than 3 pairs.
inline std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("pearson_r: length mismatch");
  if (x.size() < 3) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Ordinal codes 0..k-1. nullopt when the expected disagreement is zero,
// e.g. both coders used one and the same label throughout.
inline std::optional<double> weighted_quadratic_kappa(std::span<const int> c1, std::span<const int> c2, int k) {
  if (c1.size() != c2.size()) throw StatsError("kappa: length mismatch");
  if (k < 2) throw StatsError("kappa: need at least two categories");
  if (c1.empty()) return std::nullopt;
  std::vector<double> observed(static_cast<std::size_t>(k * k), 0.0);
  std::vector<double> m1(static_cast<std::size_t>(k), 0.0), m2(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < c1.size(); ++i) {
    if (c1[i] < 0 || c1[i] >= k || c2[i] < 0 || c2[i] >= k) throw StatsError("kappa: label out of range");
    observed[static_cast<std::size_t>(c1[i] * k + c2[i])] += 1.0;
    m1[static_cast<std::size_t>(c1[i])] += 1.0;
    m2[static_cast<std::size_t>(c2[i])] += 1.0;
  }
  const double n = static_cast<double>(c1.size());
  double wo = 0.0, we = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) / static_cast<double>((k - 1) * (k - 1));
      wo += w * observed[static_cast<std::size_t>(i * k + j)] / n;
      we += w * m1[static_cast<std::size_t>(i)] * m2[static_cast<std::size_t>(j)] / (n * n);
    }
  }
  if (we == 0.0) return std::nullopt;
  return 1.0 - wo / we;
}

// Labels ranked by their position in `order` (default: the taxonomy order).
inline std::optional<double> weighted_quadratic_kappa(std::span<const ResponseLabel> c1, std::span<const ResponseLabel> c2,
                                                      std::span<const ResponseLabel> order = kAllLabels) {
  auto rank = [&](ResponseLabel l) {
    const auto it = std::find(order.begin(), order.end(), l);
    if (it == order.end()) throw StatsError("kappa: label missing from order: " + std::string(to_string(l)));
    return static_cast<int>(it - order.begin());
  };
  std::vector<int> a, b;
  for (auto l : c1) a.push_back(rank(l));
  for (auto l : c2) b.push_back(rank(l));
  return weighted_quadratic_kappa(a, b, static_cast<int>(order.size()));
}

// Conventional verbal bands for kappa.
inline std::string_view kappa_band(double kappa) {
  if (kappa < 0.0) return "poor";
  if (kappa <= 0.20) return "slight";
  if (kappa <= 0.40) return "fair";
  if (kappa <= 0.60) return "moderate";
  if (kappa <= 0.80) return "substantial";
  return "almost perfect";
}

// ---------------------------------------------------------------------------
// Figure tables

struct OutcomeShare {
  std::string treatment;  // treatment code or "overall"
  int trials = 0;
  double caught_pct = 0.0;
  double exited_pct = 0.0;
  double exhausted_pct = 0.0;
  double timed_out_pct = 0.0;
};

struct ScoreCell {
  Treatment treatment;
  Demographic demographic;
  int n = 0;
  double mean_score = 0.0;
  std::optional<double> mean_intelligence;
};

struct CodedCell {
  TreatmentGroup group;
  Demographic demographic;
  int n_coded = 0;
  std::array<int, kAllLabels.size()> counts{};

  double percent(std::size_t label) const {
    return n_coded == 0 ? 0.0 : 100.0 * counts[label] / n_coded;
  }
};

struct FigureData {
  std::vector<OutcomeShare> outcomes;
  std::vector<ScoreCell> scores;
  std::vector<CodedCell> coded;
};

inline OutcomeShare share_of(std::string name, const OutcomeCounts& c) {
  OutcomeShare s{std::move(name), c.total(), 0, 0, 0, 0};
  if (s.trials > 0) {
    const double n = s.trials;
    s.caught_pct = 100.0 * c.caught / n;
    s.exited_pct = 100.0 * c.exited / n;
    s.exhausted_pct = 100.0 * c.exhausted / n;
    s.timed_out_pct = 100.0 * c.timed_out / n;
  }
  return s;
}

inline FigureData aggregate_figures(const std::vector<ParticipantRow>& rows) {
  FigureData fig;
  OutcomeCounts overall;
  for (Treatment t : kAllTreatments) {
    OutcomeCounts c;
    bool any = false;
    for (const auto& r : rows) {
      if (r.treatment != t) continue;
      any = true;
      c.caught += r.outcomes.caught;
      c.exited += r.outcomes.exited;
      c.exhausted += r.outcomes.exhausted;
      c.timed_out += r.outcomes.timed_out;
    }
    if (!any) continue;
    overall.caught += c.caught;
    overall.exited += c.exited;
    overall.exhausted += c.exhausted;
    overall.timed_out += c.timed_out;
    fig.outcomes.push_back(share_of(std::string(to_string(t)), c));
  }
  fig.outcomes.push_back(share_of("overall", overall));

  for (Treatment t : kAllTreatments) {
    for (Demographic d : kAllDemographics) {
      ScoreCell cell{t, d, 0, 0.0, std::nullopt};
      double score_sum = 0.0, est_sum = 0.0;
      int est_n = 0;
      for (const auto& r : rows) {
        if (r.treatment != t || r.demographic != d) continue;
        ++cell.n;
        score_sum += r.total_score;
        if (r.intelligence_estimate) {
          est_sum += *r.intelligence_estimate;
          ++est_n;
        }
      }
      if (cell.n == 0) continue;
      cell.mean_score = score_sum / cell.n;
      if (est_n > 0) cell.mean_intelligence = est_sum / est_n;
      fig.scores.push_back(cell);
    }
  }

  for (TreatmentGroup g : kAllGroups) {
    for (Demographic d : kAllDemographics) {
      CodedCell cell{g, d, 0, {}};
      bool any = false;
      for (const auto& r : rows) {
        if (group_of(r.treatment) != g || r.demographic != d) continue;
        any = true;
        if (!r.coder1_label) continue;
        ++cell.n_coded;
        ++cell.counts[static_cast<std::size_t>(*r.coder1_label)];
      }
      if (any) fig.coded.push_back(cell);
    }
  }
  return fig;
}

inline std::string pct(double x) { return format_fixed(x, 2); }

inline std::string outcomes_csv(const FigureData& f) {
  std::string out = "treatment,trials,caught_pct,exited_pct,exhausted_pct,timed_out_pct\n";
  for (const auto& s : f.outcomes)
    out += s.treatment + "," + std::to_string(s.trials) + "," + pct(s.caught_pct) + "," + pct(s.exited_pct) + "," +
           pct(s.exhausted_pct) + "," + pct(s.timed_out_pct) + "\n";
  return out;
}

inline std::string scores_csv(const FigureData& f) {
  std::string out = "treatment,demographic,n,mean_score,mean_intelligence_estimate\n";
  for (const auto& c : f.scores)
    out += std::string(to_string(c.treatment)) + "," + std::string(to_string(c.demographic)) + "," +
           std::to_string(c.n) + "," + format_fixed(c.mean_score, 4) + "," +
           (c.mean_intelligence ? format_fixed(*c.mean_intelligence, 4) : std::string("NA")) + "\n";
  return out;
}

inline std::string coded_csv(const FigureData& f) {
  std::string out = "treatment_group,demographic,label,count,percent\n";
  for (const auto& c : f.coded)
    for (std::size_t i = 0; i < kAllLabels.size(); ++i)
      out += std::string(to_string(c.group)) + "," + std::string(to_string(c.demographic)) + "," +
             std::string(to_string(kAllLabels[i])) + "," + std::to_string(c.counts[i]) + "," + pct(c.percent(i)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Full analysis

struct Correlation {
  std::string scope;
  int n = 0;
  std::optional<double> r;
};

struct AnalysisOptions {
  double z_threshold = 3.0;
  bool anova = true;
  bool kappa = true;
  bool figures = true;
};

struct AnalysisReport {
  int n_input = 0;
  std::vector<ParticipantRow> removed;
  std::vector<ParticipantRow> kept;
  std::optional<AnovaTable> anova;
  std::optional<std::string> anova_error;
  std::vector<Correlation> correlations;
  int kappa_pairs = 0;
  std::optional<double> kappa;
  FigureData figures;
};

inline Correlation score_intelligence_r(std::string scope, const std::vector<const ParticipantRow*>& rows) {
  std::vector<double> x, y;
  for (const auto* r : rows) {
    if (!r->intelligence_estimate) continue;
    x.push_back(r->total_score);
    y.push_back(*r->intelligence_estimate);
  }
  return {std::move(scope), static_cast<int>(x.size()), pearson_r(x, y)};
}

inline AnalysisReport analyze(const std::vector<ParticipantRow>& rows, const AnalysisOptions& opt = {}) {
  AnalysisReport rep;
  rep.n_input = static_cast<int>(rows.size());
  auto filtered = zscore_filter(rows, Field::TotalScore, opt.z_threshold);
  rep.kept = std::move(filtered.kept);
  rep.removed = std::move(filtered.removed);

  if (opt.anova) {
    try {
      rep.anova = demographic_treatment_anova(rep.kept);
    } catch (const StatsError& e) {
      rep.anova_error = e.what();
    }
  }

  std::vector<const ParticipantRow*> all;
  for (const auto& r : rep.kept) all.push_back(&r);
  rep.correlations.push_back(score_intelligence_r("all", all));
  for (Treatment t : kAllTreatments) {
    std::vector<const ParticipantRow*> sub;
    for (const auto* r : all)
      if (r->treatment == t) sub.push_back(r);
    if (!sub.empty()) rep.correlations.push_back(score_intelligence_r(std::string(to_string(t)), sub));
  }
  for (Demographic d : kAllDemographics) {
    std::vector<const ParticipantRow*> sub;
    for (const auto* r : all)
      if (r->demographic == d) sub.push_back(r);
    if (!sub.empty()) rep.correlations.push_back(score_intelligence_r(std::string(to_string(d)), sub));
  }

  if (opt.kappa) {
    std::vector<ResponseLabel> c1, c2;
    for (const auto& r : rep.kept) {
      if (r.coder1_label && r.coder2_label) {
        c1.push_back(*r.coder1_label);
        c2.push_back(*r.coder2_label);
      }
    }
    rep.kappa_pairs = static_cast<int>(c1.size());
    rep.kappa = weighted_quadratic_kappa(c1, c2);
  }
  if (opt.figures) rep.figures = aggregate_figures(rep.kept);
  return rep;
}

inline std::string render_report(const AnalysisReport& rep) {
  std::string out = "# Analysis report\n\n## Cleaning\n\n";
  out += "Participants in: " + std::to_string(rep.n_input) + "\n";
  out += "Removed as outliers (|z| > 3 on total score, per treatment): " + std::to_string(rep.removed.size());
  if (!rep.removed.empty()) {
    out += " (";
    for (std::size_t i = 0; i < rep.removed.size(); ++i) out += (i ? ", " : "") + rep.removed[i].id;
    out += ")";
  }
  out += "\nParticipants analysed: " + std::to_string(rep.kept.size()) + "\n\n";

  out += "## Trial outcomes\n\n| Treatment | Trials | Caught % | Exited % | Exhausted % | Timed out % |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& s : rep.figures.outcomes)
    out += "| " + s.treatment + " | " + std::to_string(s.trials) + " | " + pct(s.caught_pct) + " | " + pct(s.exited_pct) +
           " | " + pct(s.exhausted_pct) + " | " + pct(s.timed_out_pct) + " |\n";

  out += "\n## Two-way ANOVA on total score\n\n";
  if (rep.anova) {
    const auto& t = *rep.anova;
    out += anova_table_text(t);
    out += "\n";
    for (const AnovaEffect* e : {&t.a, &t.b, &t.ab}) out += "- " + e->name + ": (" + format_effect(*e) + ")\n";
    if (t.degenerate) out += "- degenerate: residual mean square is zero\n";
  } else if (rep.anova_error) {
    out += "ANOVA not computed: " + *rep.anova_error + "\n";
  } else {
    out += "ANOVA skipped.\n";
  }

  out += "\n## Score vs intelligence estimate (Pearson r)\n\n| Scope | n | r |\n|---|---|---|\n";
  for (const auto& c : rep.correlations)
    out += "| " + c.scope + " | " + std::to_string(c.n) + " | " + (c.r ? format_fixed(*c.r, 3) : std::string("undefined")) + " |\n";

  out += "\n## Coder agreement\n\n";
  if (rep.kappa)
    out += "Weighted quadratic kappa = " + format_fixed(*rep.kappa, 2) + " over " + std::to_string(rep.kappa_pairs) +
           " double-coded responses, indicating " + std::string(kappa_band(*rep.kappa)) + " agreement\n";
  else
    out += "Weighted quadratic kappa undefined (" + std::to_string(rep.kappa_pairs) + " double-coded responses)\n";
  return out;
}

}  // namespace pigchase::stats
