#pragma once

// Selection rules and result tables over a loaded ResultsStore.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganbench/harness.hpp"
#include "ganbench/metrics.hpp"

namespace ganbench {

/// No usable trial behind a requested statistic.
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Normal-approximation 95% interval: mean +- 1.96 s / sqrt(n), s the sample
/// standard deviation.
inline Interval confidence_interval(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("confidence_interval: need at least 2 values");
  const double n = double(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

/// Mean and, when at least two values exist, the interval half-width.
inline Interval summarize(std::span<const double> values) {
  if (values.empty()) throw NoDataError("summarize: no values");
  if (values.size() == 1) return {values[0], 0.0};
  return confidence_interval(values);
}

struct Setting {
  double lr = 0.0;
  std::size_t h = 0;
  friend auto operator<=>(const Setting&, const Setting&) = default;
};

struct CellKey {
  Family family = Family::normal;
  std::size_t dim = 0;
  std::size_t n = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline std::string cell_label(const CellKey& c) {
  return std::string(family_name(c.family)) + "-d" + std::to_string(c.dim) + "-n" + std::to_string(c.n);
}

inline double trial_minimum(const TrialResult& r, Metric m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.records) best = std::min(best, metric_value(rec.divergence, m));
  return best;
}

struct SettingSummary {
  Setting setting;
  std::vector<std::size_t> trials;  // ok trial indices, ascending
  std::vector<double> minima;       // per-trial minimum over epochs, aligned with `trials`
  std::size_t failed = 0;
  double mean = 0.0;
  double half_width = 0.0;

  bool has_data() const { return !minima.empty(); }
};

/// Per-setting statistics of one (model, cell, metric); settings ascending.
struct CellSummary {
  std::string model;
  CellKey cell;
  Metric metric = Metric::js;
  std::vector<SettingSummary> settings;
  std::optional<std::size_t> best;  // index into settings

  const SettingSummary& best_setting() const {
    if (!best) throw NoDataError("no ok trials for " + model + " " + cell_label(cell));
    return settings[*best];
  }
};

inline CellSummary summarize_cell(const ResultsStore& store, const std::string& model, const CellKey& cell,
                                  Metric metric) {
  CellSummary cs;
  cs.model = model;
  cs.cell = cell;
  cs.metric = metric;
  std::map<Setting, SettingSummary> by_setting;
  for (const auto& r : store.results) {
    const auto& k = r.key;
    if (k.model != model || k.family != cell.family || k.dim != cell.dim || k.n_samples != cell.n) continue;
    auto& s = by_setting[Setting{k.lr, k.h}];
    s.setting = Setting{k.lr, k.h};
    if (!r.ok || r.records.empty()) {
      ++s.failed;
      continue;
    }
    s.trials.push_back(k.trial);
    s.minima.push_back(trial_minimum(r, metric));
  }
  for (auto& [setting, s] : by_setting) {
    if (s.has_data()) {
      const Interval iv = summarize(s.minima);
      s.mean = iv.mean;
      s.half_width = iv.half_width;
    }
    cs.settings.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < cs.settings.size(); ++i) {
    if (!cs.settings[i].has_data()) continue;
    if (!cs.best || cs.settings[i].mean < cs.settings[*cs.best].mean) cs.best = i;
  }
  return cs;
}

/// Setting with the lowest mean of per-trial minima; ties go to the smaller
/// (lr, h). Empty when no setting has an ok trial.
inline std::optional<SettingSummary> best_setting(const ResultsStore& store, const std::string& model, Family family,
                                                  std::size_t dim, std::size_t n, Metric metric) {
  const CellSummary cs = summarize_cell(store, model, CellKey{family, dim, n}, metric);
  if (!cs.best) return std::nullopt;
  return cs.settings[*cs.best];
}

struct RankingTable {
  CellKey cell;
  Metric metric = Metric::js;
  std::vector<std::string> order;  // models, best first
  std::vector<double> scores;      // aligned with `order`

  std::size_t rank_of(const std::string& model) const {
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] == model) return i;
    throw std::out_of_range("RankingTable: no model " + model);
  }
};

inline std::vector<std::string> store_models(const ResultsStore& store) {
  if (store.plan) return store.plan->models;
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& r : store.results)
    if (seen.insert(r.key.model).second) out.push_back(r.key.model);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<CellKey> store_cells(const ResultsStore& store) {
  std::set<CellKey> cells;
  for (const auto& r : store.results) cells.insert(CellKey{r.key.family, r.key.dim, r.key.n_samples});
  return {cells.begin(), cells.end()};
}

/// Models ordered by best-setting score, equal scores by name.
inline RankingTable ranking_table(const ResultsStore& store, const CellKey& cell, Metric metric,
                                  std::vector<std::string> models = {}) {
  if (models.empty()) models = store_models(store);
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& m : models) {
    const auto best = best_setting(store, m, cell.family, cell.dim, cell.n, metric);
    if (!best) throw NoDataError("ranking_table: no ok trials for " + m + " " + cell_label(cell));
    scored.emplace_back(best->mean, m);
  }
  std::sort(scored.begin(), scored.end());
  RankingTable t;
  t.cell = cell;
  t.metric = metric;
  for (auto& [score, m] : scored) {
    t.order.push_back(m);
    t.scores.push_back(score);
  }
  return t;
}

/// Number of distinct settings that produced some trial's lowest minimum.
inline std::size_t unique_best_counts(const ResultsStore& store, const std::string& model, const CellKey& cell,
                                      Metric metric) {
  const CellSummary cs = summarize_cell(store, model, cell, metric);
  std::map<std::size_t, std::pair<double, Setting>> winner;  // trial -> (minimum, setting)
  for (const auto& s : cs.settings)
    for (std::size_t i = 0; i < s.trials.size(); ++i) {
      auto it = winner.find(s.trials[i]);
      if (it == winner.end() || s.minima[i] < it->second.first) winner[s.trials[i]] = {s.minima[i], s.setting};
    }
  if (winner.empty()) throw NoDataError("unique_best_counts: no ok trials for " + model + " " + cell_label(cell));
  std::set<Setting> distinct;
  for (const auto& [trial, w] : winner) distinct.insert(w.second);
  return distinct.size();
}

inline constexpr std::array<Metric, 3> kRankedMetrics{Metric::js, Metric::kl, Metric::wd};

struct RobustnessCounts {
  std::string model;
  std::map<Metric, std::size_t> per_metric;
  std::size_t total = 0;
  std::size_t max_possible = 0;  // metrics x cells x settings for this model
  double percentage = 0.0;       // 100 * total / max_possible
  std::vector<std::string> skipped;  // cells without data
};

/// Counts settings whose mean of minima lies within the best setting's
/// interval, summed over metrics and cells. `ci_scale` widens or narrows
/// every interval.
inline RobustnessCounts robustness_counts(const ResultsStore& store, const std::string& model,
                                          std::span<const Metric> metrics = kRankedMetrics, double ci_scale = 1.0) {
  RobustnessCounts rc;
  rc.model = model;
  const auto cells = store_cells(store);
  std::size_t settings = 0;
  if (store.plan) {
    settings = store.plan->grid_size();
  } else {
    std::set<Setting> seen;
    for (const auto& r : store.results) seen.insert(Setting{r.key.lr, r.key.h});
    settings = seen.size();
  }
  for (Metric m : metrics) {
    std::size_t count = 0;
    for (const auto& cell : cells) {
      const CellSummary cs = summarize_cell(store, model, cell, m);
      if (!cs.best) {
        rc.skipped.push_back(std::string(metric_name(m)) + " " + cell_label(cell));
        continue;
      }
      const auto& best = cs.settings[*cs.best];
      const double bound = best.mean + ci_scale * best.half_width;
      for (const auto& s : cs.settings)
        if (s.has_data() && s.mean <= bound) ++count;
    }
    rc.per_metric[m] = count;
    rc.total += count;
  }
  rc.max_possible = metrics.size() * cells.size() * settings;
  rc.percentage = rc.max_possible ? 100.0 * double(rc.total) / double(rc.max_possible) : 0.0;
  return rc;
}

// ---- text and CSV tables ----

namespace detail {
inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string bracketed(const std::vector<std::string>& parts) {
  std::string s = "[";
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? ", " : "") + parts[i];
  return s + "]";
}

/// Left-aligned columns padded to the widest cell.
inline std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      line += r[c];
      if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

inline std::string csv_join(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
    out += "\n";
  }
  return out;
}

struct Layout {
  std::vector<std::string> models;
  std::vector<Family> families;
  std::vector<std::size_t> sizes;
};

inline Layout layout_of(const ResultsStore& store) {
  Layout l;
  l.models = store_models(store);
  std::set<Family> fams;
  std::set<std::size_t> sizes;
  for (const auto& c : store_cells(store)) {
    fams.insert(c.family);
    sizes.insert(c.n);
  }
  l.families.assign(fams.begin(), fams.end());
  l.sizes.assign(sizes.begin(), sizes.end());
  return l;
}
}  // namespace detail

/// A grid of models x families whose cells hold one entry per sample size.
struct GridTable {
  std::string title;
  std::vector<std::string> models;
  std::vector<Family> families;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<std::vector<std::string>>> cells;  // [model][family][size]

  std::string text() const {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"Model"};
    for (Family f : families) head.emplace_back(family_name(f));
    rows.push_back(head);
    for (std::size_t m = 0; m < models.size(); ++m) {
      std::vector<std::string> row{models[m]};
      for (std::size_t f = 0; f < families.size(); ++f) row.push_back(detail::bracketed(cells[m][f]));
      rows.push_back(row);
    }
    std::string sizes_note = "sample sizes";
    for (auto n : sizes) sizes_note += " " + std::to_string(n);
    return title + " (" + sizes_note + ")\n" + detail::align(rows);
  }

  std::string csv() const {
    std::vector<std::vector<std::string>> rows{{"model", "family", "n", "value"}};
    for (std::size_t m = 0; m < models.size(); ++m)
      for (std::size_t f = 0; f < families.size(); ++f)
        for (std::size_t s = 0; s < sizes.size(); ++s)
          rows.push_back({models[m], std::string(family_name(families[f])), std::to_string(sizes[s]), cells[m][f][s]});
    return detail::csv_join(rows);
  }
};

namespace detail {
template <class F>
GridTable grid_table(const ResultsStore& store, std::string title, F&& cell_value) {
  const Layout l = layout_of(store);
  GridTable t{std::move(title), l.models, l.families, l.sizes, {}};
  t.cells.assign(l.models.size(), std::vector<std::vector<std::string>>(l.families.size()));
  for (std::size_t m = 0; m < l.models.size(); ++m)
    for (std::size_t f = 0; f < l.families.size(); ++f)
      for (auto n : l.sizes) t.cells[m][f].push_back(cell_value(l.models[m], l.families[f], n));
  return t;
}
}  // namespace detail

/// Best-setting mean of minima with interval half-width.
inline GridTable score_table(const ResultsStore& store, std::size_t dim, Metric metric) {
  return detail::grid_table(
      store, "Best mean of minima, " + std::string(metric_name(metric)) + ", d=" + std::to_string(dim),
      [&](const std::string& model, Family f, std::size_t n) -> std::string {
        const auto best = best_setting(store, model, f, dim, n, metric);
        if (!best) return "n/a";
        return detail::fixed(best->mean) + " +- " + detail::fixed(best->half_width);
      });
}

inline GridTable rank_table(const ResultsStore& store, std::size_t dim, Metric metric) {
  std::map<CellKey, std::optional<RankingTable>> cache;
  return detail::grid_table(
      store, "Rank, " + std::string(metric_name(metric)) + ", d=" + std::to_string(dim),
      [&](const std::string& model, Family f, std::size_t n) -> std::string {
        const CellKey c{f, dim, n};
        if (!cache.count(c)) {
          try {
            cache[c] = ranking_table(store, c, metric);
          } catch (const NoDataError&) {
            cache[c] = std::nullopt;
          }
        }
        return cache[c] ? std::to_string(cache[c]->rank_of(model)) : "n/a";
      });
}

inline GridTable unique_best_table(const ResultsStore& store, std::size_t dim, Metric metric) {
  return detail::grid_table(
      store, "Unique best settings, " + std::string(metric_name(metric)) + ", d=" + std::to_string(dim),
      [&](const std::string& model, Family f, std::size_t n) -> std::string {
        try {
          return std::to_string(unique_best_counts(store, model, CellKey{f, dim, n}, metric));
        } catch (const NoDataError&) {
          return "n/a";
        }
      });
}

struct RobustnessTable {
  std::vector<RobustnessCounts> rows;
  std::size_t all_models_max = 0;

  std::string text() const {
    std::vector<std::vector<std::string>> out{{"Model", "JS", "KL", "WD", "Total (% of model max, % of all-model max)"}};
    for (const auto& r : rows) {
      const double all_pct = all_models_max ? 100.0 * double(r.total) / double(all_models_max) : 0.0;
      out.push_back({r.model, std::to_string(r.per_metric.at(Metric::js)), std::to_string(r.per_metric.at(Metric::kl)),
                     std::to_string(r.per_metric.at(Metric::wd)),
                     std::to_string(r.total) + " (" + detail::fixed(r.percentage, 2) + "%, " +
                         detail::fixed(all_pct, 2) + "%)"});
    }
    return "Settings within the best interval (model max " +
           std::to_string(rows.empty() ? 0 : rows.front().max_possible) + ", all-model max " +
           std::to_string(all_models_max) + ")\n" + detail::align(out);
  }

  std::string csv() const {
    std::vector<std::vector<std::string>> out{{"model", "js", "kl", "wd", "total", "max_possible", "percentage"}};
    for (const auto& r : rows)
      out.push_back({r.model, std::to_string(r.per_metric.at(Metric::js)), std::to_string(r.per_metric.at(Metric::kl)),
                     std::to_string(r.per_metric.at(Metric::wd)), std::to_string(r.total),
                     std::to_string(r.max_possible), format_g(r.percentage)});
    return detail::csv_join(out);
  }
};

inline RobustnessTable robustness_table(const ResultsStore& store) {
  RobustnessTable t;
  for (const auto& m : store_models(store)) t.rows.push_back(robustness_counts(store, m));
  for (const auto& r : t.rows) t.all_models_max += r.max_possible;
  return t;
}

// ---- epoch curves ----

struct CurveSeries {
  std::string model;
  Setting setting;
  std::vector<double> mean;        // per epoch
  std::vector<double> half_width;  // per epoch
};

struct CurveSet {
  CellKey cell;
  Metric metric = Metric::js;
  std::vector<CurveSeries> series;
  double baseline = 0.0;
};

/// Per-epoch mean and interval of each model at its best setting.
inline CurveSet curves(const ResultsStore& store, const CellKey& cell, Metric metric, double baseline) {
  CurveSet cs;
  cs.cell = cell;
  cs.metric = metric;
  cs.baseline = baseline;
  for (const auto& model : store_models(store)) {
    const auto best = best_setting(store, model, cell.family, cell.dim, cell.n, metric);
    if (!best) continue;
    std::vector<const TrialResult*> runs;
    for (std::size_t t : best->trials) {
      const TrialResult* r = store.find(RunKey{model, cell.family, cell.dim, cell.n, best->setting.lr, best->setting.h, t});
      if (r) runs.push_back(r);
    }
    CurveSeries s;
    s.model = model;
    s.setting = best->setting;
    const std::size_t epochs = runs.front()->records.size();
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<double> vals;
      for (const auto* r : runs)
        if (e < r->records.size()) vals.push_back(metric_value(r->records[e].divergence, metric));
      const Interval iv = summarize(vals);
      s.mean.push_back(iv.mean);
      s.half_width.push_back(iv.half_width);
    }
    cs.series.push_back(std::move(s));
  }
  if (cs.series.empty()) throw NoDataError("curves: no ok runs for " + cell_label(cell));
  return cs;
}

inline std::string curves_csv(const CurveSet& cs) {
  std::vector<std::vector<std::string>> rows{{"model", "lr", "h", "epoch", "mean", "half_width", "baseline"}};
  for (const auto& s : cs.series)
    for (std::size_t e = 0; e < s.mean.size(); ++e)
      rows.push_back({s.model, format_g(s.setting.lr), std::to_string(s.setting.h), std::to_string(e + 1),
                      format_g(s.mean[e]), format_g(s.half_width[e]), format_g(cs.baseline)});
  return detail::csv_join(rows);
}

inline std::string curves_svg(const CurveSet& cs) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double W = 720, H = 420, L = 70, R = 170, T = 30, B = 50;
  std::size_t epochs = 1;
  double lo = cs.baseline, hi = cs.baseline;
  for (const auto& s : cs.series) {
    epochs = std::max(epochs, s.mean.size());
    for (std::size_t e = 0; e < s.mean.size(); ++e) {
      lo = std::min(lo, s.mean[e] - s.half_width[e]);
      hi = std::max(hi, s.mean[e] + s.half_width[e]);
    }
  }
  lo = std::min(lo, 0.0);
  if (!(hi > lo)) hi = lo + 1.0;
  auto px = [&](double e) { return L + (W - L - R) * (epochs > 1 ? (e - 1.0) / double(epochs - 1) : 0.5); };
  auto py = [&](double v) { return T + (H - T - B) * (1.0 - (v - lo) / (hi - lo)); };
  auto num = [](double v) { return detail::fixed(v, 2); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(L) + "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" +
         std::string(metric_name(cs.metric)) + " by epoch, " + cell_label(cs.cell) + "</text>\n";
  svg += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    svg += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(v) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + format_g(v) + "</text>\n";
  }
  svg += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">epoch (1-" + std::to_string(epochs) +
         ")</text>\n";
  for (std::size_t i = 0; i < cs.series.size(); ++i) {
    const auto& s = cs.series[i];
    const std::string color = palette[i % 10];
    std::string band, line;
    for (std::size_t e = 0; e < s.mean.size(); ++e)
      band += num(px(double(e + 1))) + "," + num(py(s.mean[e] + s.half_width[e])) + " ";
    for (std::size_t e = s.mean.size(); e-- > 0;)
      band += num(px(double(e + 1))) + "," + num(py(s.mean[e] - s.half_width[e])) + " ";
    for (std::size_t e = 0; e < s.mean.size(); ++e) line += num(px(double(e + 1))) + "," + num(py(s.mean[e])) + " ";
    svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + num(W - R + 10) + "\" y=\"" + num(T + 16 * (i + 1)) + "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" +
           color + "\">" + s.model + "</text>\n";
  }
  svg += "<line x1=\"" + num(L) + "\" y1=\"" + num(py(cs.baseline)) + "\" x2=\"" + num(W - R) + "\" y2=\"" +
         num(py(cs.baseline)) + "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
  svg += "<text x=\"" + num(W - R + 10) + "\" y=\"" + num(T + 16 * (cs.series.size() + 1)) +
         "\" font-family=\"sans-serif\" font-size=\"11\">Expected</text>\n";
  svg += "</svg>\n";
  return svg;
}

/// Spec of a cell as recorded in its runs.
inline std::optional<DistributionSpec> cell_spec(const ResultsStore& store, Family family, std::size_t dim) {
  for (const auto& r : store.results)
    if (r.key.family == family && r.key.dim == dim) return parse_spec(r.spec_snapshot);
  return std::nullopt;
}

inline constexpr std::size_t kBaselineRepeats = 10;

/// Expected baseline of a (family, dim) cell with a fixed stream.
inline DivergenceReport cell_baseline(const DistributionSpec& spec, std::uint64_t seed) {
  Rng rng = Rng(seed).split("baseline").split(family_name(spec.family)).split(std::uint64_t(spec.dim));
  return expected_baseline(spec, kEvalBatchRows, kBaselineRepeats, rng);
}

/// Writes curves CSV and SVG for every cell and the given metrics. Returns the
/// written paths.
inline std::vector<fs::path> emit_curves(const ResultsStore& store, const fs::path& out_dir,
                                         std::span<const Metric> metrics) {
  fs::create_directories(out_dir);
  if (!fs::is_directory(out_dir)) throw std::runtime_error("emit_curves: cannot create " + out_dir.string());
  const std::uint64_t seed = store.plan ? store.plan->master_seed : 0;
  std::vector<fs::path> written;
  for (const auto& cell : store_cells(store)) {
    const auto spec = cell_spec(store, cell.family, cell.dim);
    if (!spec) continue;
    const DivergenceReport base = cell_baseline(*spec, seed);
    for (Metric m : metrics) {
      CurveSet cs;
      try {
        cs = curves(store, cell, m, metric_value(base, m));
      } catch (const NoDataError&) {
        continue;
      }
      const std::string stem = "curves-" + cell_label(cell) + "-" + std::string(metric_name(m));
      atomic_write(out_dir / (stem + ".csv"), curves_csv(cs));
      atomic_write(out_dir / (stem + ".svg"), curves_svg(cs));
      written.push_back(out_dir / (stem + ".csv"));
      written.push_back(out_dir / (stem + ".svg"));
    }
  }
  return written;
}

}  // namespace ganbench
