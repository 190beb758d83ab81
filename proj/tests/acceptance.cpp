// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 3 6      run only the listed criteria
//
// Exit status is 0 when every gating criterion passes or fails only in the
// documented way listed in kKnownRed; anything else exits 1.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "ganbench/ganbench.hpp"

using namespace ganbench;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Criteria expected to stay red, with the reason summarised in the README.
const std::set<int> kKnownRed{5};
// Reported only.
const std::set<int> kNonGating{7};

std::string g(double v) { return format_g(v); }

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("ganbench-accept-" + std::to_string(::getpid()) + "-" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---- 1: parameter counts ----

// Published totals, rows h = 32..512, columns d = 16..128,
// entries {standard, InfoGAN, BEGAN}.
constexpr std::size_t kPublished[5][4][3] = {
    {{1393, 1821, 1888}, {2433, 2861, 3456}, {4513, 4941, 6592}, {8673, 9101, 12864}},
    {{3281, 4125, 4256}, {5345, 6189, 7360}, {9473, 10317, 13568}, {17729, 18573, 25984}},
    {{8593, 10269, 10528}, {12705, 14381, 16704}, {20929, 22605, 29056}, {37377, 39053, 53760}},
    {{25361, 28701, 29216}, {33569, 36909, 41536}, {49985, 53325, 66176}, {82817, 86157, 115456}},
    {{83473, 90141, 91168}, {99873, 106541, 115776}, {132673, 139341, 164992}, {198273, 204941, 263424}},
};

Verdict parameter_counts() {
  const std::size_t hs[5] = {32, 64, 128, 256, 512}, ds[4] = {16, 32, 64, 128};
  const VariantKind kinds[3] = {VariantKind::NSGAN, VariantKind::InfoGAN, VariantKind::BEGAN};
  std::size_t bad[3] = {0, 0, 0};
  std::string first;
  for (std::size_t hi = 0; hi < 5; ++hi)
    for (std::size_t di = 0; di < 4; ++di)
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t got = model_shapes(kinds[k], ds[di], hs[hi]).parameter_count();
        if (got == kPublished[hi][di][k]) continue;
        ++bad[k];
        if (first.empty())
          first = std::string(variant_name(kinds[k])) + " h=" + std::to_string(hs[hi]) + " d=" +
                  std::to_string(ds[di]) + " got " + std::to_string(got);
      }
  // Every other variant shares the standard architecture.
  std::size_t others = 0;
  for (VariantKind k : kAllVariants) {
    if (k == VariantKind::InfoGAN || k == VariantKind::BEGAN) continue;
    for (std::size_t hi = 0; hi < 5; ++hi)
      for (std::size_t di = 0; di < 4; ++di)
        others += model_shapes(k, ds[di], hs[hi]).parameter_count() != kPublished[hi][di][0];
  }
  const bool ok = bad[0] + bad[1] + bad[2] + others == 0;
  return {ok, "mismatches standard " + std::to_string(bad[0]) + "/20, InfoGAN " + std::to_string(bad[1]) +
                  "/20, BEGAN " + std::to_string(bad[2]) + "/20, other variants " + std::to_string(others) +
                  (first.empty() ? "" : "; first: " + first)};
}

// ---- 2: gradients ----

Verdict gradients() {
  double worst_plain = 0.0, worst_penalty = 0.0;
  std::string worst_plain_name, worst_penalty_name;
  std::size_t checked = 0;
  bool starved = false;
  auto note = [&](double e, bool penalty, const std::string& name) {
    double& w = penalty ? worst_penalty : worst_plain;
    if (e > w) {
      w = e;
      (penalty ? worst_penalty_name : worst_plain_name) = name;
    }
  };
  for (std::uint64_t seed : {11u, 12u, 13u})
    for (VariantKind kind : kAllVariants)
      for (PenaltyPoint point : {PenaltyPoint::literal, PenaltyPoint::interpolate}) {
        if (point == PenaltyPoint::interpolate && kind != VariantKind::WGANGP) continue;
        GradProblem p = make_grad_problem(kind, seed, 8, 3, 8, point);
        const std::string name = std::string(variant_name(kind)) +
                                 (kind == VariantKind::WGANGP ? "/" + std::string(penalty_point_name(point)) : "");
        auto d_obj = [&](Tape& t) {
          return evaluate_objectives(p.variant, p.models, p.batch, t, Side::discriminator).d_objective;
        };
        auto g_obj = [&](Tape& t) {
          return evaluate_objectives(p.variant, p.models, p.batch, t, Side::generator).g_objective;
        };
        const auto rd = gradient_check(discriminator_stores(p.models), d_obj);
        const auto rg = gradient_check({&p.models.g_params}, g_obj);
        starved = starved || rd.checked == 0 || rg.checked == 0;
        checked += rd.checked + rg.checked;
        note(rd.max_rel_error, p.variant.has_penalty(), name + " D");
        note(rg.max_rel_error, false, name + " G");
      }
  const bool ok = !starved && worst_plain <= 1e-4 && worst_penalty <= 1e-3;
  return {ok, std::to_string(checked) + " partials; worst objective " + g(worst_plain) + " (" + worst_plain_name +
                  "), worst penalty " + g(worst_penalty) + " (" + worst_penalty_name + ")"};
}

// ---- 3: divergences with closed forms ----

Verdict divergences() {
  bool ok = true;
  double worst_kl = 0.0, worst_wd = 0.0, worst_asym = 0.0, worst_energy = 0.0;
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    Rng rng(seed);
    const std::size_t n = 100000;
    Matrix2D a(n, 1), b(n, 1);
    for (auto& x : a.values()) x = rng.normal();
    for (auto& x : b.values()) x = rng.normal() + 1.0;
    const auto [ha, hb] = histogram_pair(a.values(), b.values());
    const double k = kl(ha, hb), w = wd1(a.values(), b.values());
    const double asym = std::abs(js(ha, hb) - js(hb, ha));
    Matrix2D c(300, 5);
    for (auto& x : c.values()) x = rng.uniform() * 10.0 - 5.0;
    const double e = energy_distance(c, c);
    worst_kl = std::max(worst_kl, std::abs(k - 0.5) / 0.5);
    worst_wd = std::max(worst_wd, std::abs(w - 1.0));
    worst_asym = std::max(worst_asym, asym);
    worst_energy = std::max(worst_energy, std::abs(e));
    ok = ok && std::abs(k - 0.5) <= 0.15 * 0.5 && std::abs(w - 1.0) <= 0.05 && asym <= 1e-12 && e == 0.0;
  }
  return {ok, "kl rel err " + g(worst_kl) + ", wd1 rel err " + g(worst_wd) + ", js asym " + g(worst_asym) +
                  ", energy(x,x) " + g(worst_energy)};
}

// ---- 4 and 5 share one run of the desk plan ----

struct DeskRun {
  fs::path root;
  double seconds = 0.0;
};

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<DeskRun> g_desk;

const DeskRun& desk_run_single_worker() {
  if (!g_desk) {
    DeskRun r;
    r.root = scratch("w1");
    r.seconds = timed([&] { run_plan(desk_plan(), r.root, 1); });
    g_desk = r;
  }
  return *g_desk;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

Verdict determinism() {
  const auto& one = desk_run_single_worker();
  const fs::path four = scratch("w4");
  const double secs = timed([&] { run_plan(desk_plan(), four, 4); });
  const auto a = tree_bytes(one.root), b = tree_bytes(four);
  fs::remove_all(four);
  std::size_t differing = 0;
  for (const auto& [path, bytes] : a) {
    auto it = b.find(path);
    differing += (it == b.end() || it->second != bytes);
  }
  for (const auto& [path, bytes] : b) differing += !a.count(path);
  const bool ok = differing == 0 && a.size() == 2 * expand_plan(desk_plan()).size() + 1;
  return {ok, std::to_string(a.size()) + " files, " + std::to_string(differing) + " differ; workers=1 " +
                  g(one.seconds) + "s, workers=4 " + g(secs) + "s"};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict learning_signal() {
  const ExperimentPlan plan = desk_plan();
  const auto store = load_store(plan_directory(desk_run_single_worker().root, plan));
  bool ok = true;
  std::string detail;
  std::optional<DivergenceReport> base;
  for (const std::string model : {"NSGAN", "WGAN", "HellingerGAN"}) {
    std::vector<double> first, last;
    std::size_t failed = 0;
    for (std::size_t t = 0; t < 5; ++t) {
      const RunKey key{model, Family::normal, 16, 10000, 0.002, 64, t};
      const TrialResult* r = store.find(key);
      if (!r || !r->ok || r->records.size() != 25) {
        ++failed;
        first.push_back(std::numeric_limits<double>::infinity());
        last.push_back(std::numeric_limits<double>::infinity());
        continue;
      }
      if (!base) base = cell_baseline(parse_spec(r->spec_snapshot), plan.master_seed);
      first.push_back(r->records.front().divergence.js);
      last.push_back(r->records.back().divergence.js);
    }
    const double f = median(first), l = median(last);
    const double floor = base ? base->js : std::numeric_limits<double>::quiet_NaN();
    const bool model_ok = failed == 0 && l <= 0.6 * f && l <= 5.0 * floor;
    ok = ok && model_ok;
    detail += (detail.empty() ? "" : "; ") + model + " js " + g(f) + "->" + g(l) + " (ratio " + g(l / f) +
              ", x" + g(l / floor) + " baseline" + (failed ? ", " + std::to_string(failed) + " failed" : "") + ")";
  }
  if (base) detail += "; baseline js " + g(base->js);
  return {ok, detail};
}

// ---- 6: analysis rules against a naive recomputation from raw files ----

struct FixtureRun {
  std::string model, cell;
  double lr;
  std::size_t h, trial;
  bool ok;
  std::vector<std::array<double, 3>> rows;  // kl, js, wd per epoch
};

std::vector<FixtureRun> read_raw(const fs::path& dir) {
  std::vector<FixtureRun> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    FixtureRun r;
    const auto rel = fs::relative(e.path(), dir);
    auto part = rel.begin();
    r.model = (part++)->string();
    r.cell = (part++)->string();
    const std::string stem = e.path().stem().string();  // lr<lr>-h<h>-t<t>
    const auto hpos = stem.rfind("-h"), tpos = stem.rfind("-t");
    r.lr = std::stod(stem.substr(2, hpos - 2));
    r.h = std::stoul(stem.substr(hpos + 2, tpos - hpos - 2));
    r.trial = std::stoul(stem.substr(tpos + 2));
    fs::path sidecar = e.path();
    sidecar.replace_extension(".json");
    std::ifstream js(sidecar);
    r.ok = nlohmann::json::parse(js).at("status") == "ok";
    std::ifstream in(e.path());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<double> cells;
      std::stringstream ls(line);
      std::string c;
      while (std::getline(ls, c, ',')) cells.push_back(std::stod(c));
      r.rows.push_back({cells[1], cells[2], cells[3]});
    }
    out.push_back(r);
  }
  return out;
}

struct NaiveSetting {
  double lr;
  std::size_t h;
  double mean, half;
};

struct NaiveCell {
  std::vector<NaiveSetting> settings;  // with data, ascending (lr, h)
  std::size_t best = 0;
  std::size_t unique_best = 0;
};

NaiveCell naive(const std::vector<FixtureRun>& runs, const std::string& model, const std::string& cell, int col) {
  std::map<std::pair<double, std::size_t>, std::map<std::size_t, double>> minima;
  for (const auto& r : runs) {
    if (r.model != model || r.cell != cell || !r.ok) continue;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& row : r.rows) m = std::min(m, row[col]);
    minima[{r.lr, r.h}][r.trial] = m;
  }
  NaiveCell out;
  std::map<std::size_t, std::pair<double, std::size_t>> per_trial;  // trial -> (min, setting index)
  for (const auto& [s, by_trial] : minima) {
    double sum = 0.0;
    for (const auto& [t, v] : by_trial) sum += v;
    const double n = double(by_trial.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& [t, v] : by_trial) ss += (v - mean) * (v - mean);
    const double half = by_trial.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    const std::size_t idx = out.settings.size();
    out.settings.push_back({s.first, s.second, mean, half});
    for (const auto& [t, v] : by_trial) {
      auto it = per_trial.find(t);
      if (it == per_trial.end() || v < it->second.first) per_trial[t] = {v, idx};
    }
  }
  for (std::size_t i = 1; i < out.settings.size(); ++i)
    if (out.settings[i].mean < out.settings[out.best].mean) out.best = i;
  std::set<std::size_t> winners;
  for (const auto& [t, w] : per_trial) winners.insert(w.second);
  out.unique_best = winners.size();
  return out;
}

Verdict analysis_rules() {
  const fs::path dir = scratch("fixture");
  const std::vector<std::string> models{"LSGAN", "TVGAN"};
  const std::vector<std::pair<Family, std::string>> cells{{Family::normal, "normal-d16-n1000"},
                                                          {Family::gamma, "gamma-d16-n1000"}};
  const std::vector<double> lrs{0.02, 0.002};
  const std::vector<std::size_t> hs{32, 64};
  Rng rng(4242);
  auto q = [&] { return double(rng.below(160)) / 16.0; };  // exact in CSV text
  for (const auto& model : models)
    for (const auto& [family, label] : cells) {
      Rng srng(7);
      const std::string snapshot = serialize_spec(make_spec(family, 16, srng));
      for (double lr : lrs)
        for (std::size_t h : hs)
          for (std::size_t t = 0; t < 5; ++t) {
            TrialResult r;
            r.key = RunKey{model, family, 16, 1000, lr, h, t};
            r.ok = !(model == "TVGAN" && family == Family::gamma && lr == 0.002 && h == 32 && t == 3);
            r.spec_snapshot = snapshot;
            if (r.ok)
              for (std::size_t e = 1; e <= 3; ++e) {
                EpochRecord rec;
                rec.epoch = e;
                rec.divergence = {q(), q(), q(), q()};
                rec.d_loss = q();
                rec.g_loss = q();
                r.records.push_back(rec);
              }
            // An exact tie between two settings exercises the tie-break.
            if (model == "LSGAN" && family == Family::normal && lr == 0.002 && h == 64) {
              r.records = {};
              for (std::size_t e = 1; e <= 3; ++e) {
                EpochRecord rec;
                rec.epoch = e;
                rec.divergence = {0.0625, 0.0625 * double(t + 1), 1.0, 1.0};
                r.records.push_back(rec);
              }
            }
            if (model == "LSGAN" && family == Family::normal && lr == 0.02 && h == 64)
              for (std::size_t e = 0; e < 3; ++e) r.records[e].divergence.js = 0.0625 * double(t + 1);
            persist(r, dir);
          }
    }

  const auto store = load_store(dir);
  const auto raw = read_raw(dir);
  std::size_t compared = 0, mismatched = 0;
  std::string first;
  auto expect = [&](bool same, const std::string& what) {
    ++compared;
    if (!same) {
      ++mismatched;
      if (first.empty()) first = what;
    }
  };
  const std::array<std::pair<Metric, int>, 3> metrics{{{Metric::kl, 0}, {Metric::js, 1}, {Metric::wd, 2}}};
  for (const auto& model : models) {
    std::map<Metric, std::size_t> robust;
    std::size_t robust_total = 0;
    for (const auto& [metric, col] : metrics)
      for (const auto& [family, label] : cells) {
        const NaiveCell nc = naive(raw, model, label, col);
        const auto lib = best_setting(store, model, family, 16, 1000, metric);
        const std::string tag = model + " " + label + " " + std::string(metric_name(metric));
        const auto& nb = nc.settings[nc.best];
        expect(lib && lib->setting.lr == nb.lr && lib->setting.h == nb.h && lib->mean == nb.mean &&
                   lib->half_width == nb.half,
               "best_setting " + tag);
        expect(unique_best_counts(store, model, CellKey{family, 16, 1000}, metric) == nc.unique_best,
               "unique_best_counts " + tag);
        std::size_t within = 0;
        for (const auto& s : nc.settings) within += s.mean <= nb.mean + nb.half;
        robust[metric] += within;
        robust_total += within;
      }
    const auto rc = robustness_counts(store, model);
    bool same = rc.total == robust_total && rc.max_possible == metrics.size() * cells.size() * lrs.size() * hs.size();
    for (const auto& [m, c] : robust) same = same && rc.per_metric.at(m) == c;
    expect(same, "robustness_counts " + model);
  }
  // The tie must resolve to the smaller (lr, h).
  const auto tie = best_setting(store, "LSGAN", Family::normal, 16, 1000, Metric::js);
  expect(tie && tie->setting.lr == 0.002 && tie->setting.h == 64, "tie-break");
  fs::remove_all(dir);
  return {mismatched == 0 && store.corrupt.empty(),
          std::to_string(compared - mismatched) + "/" + std::to_string(compared) + " comparisons equal" +
              (first.empty() ? "" : "; first mismatch: " + first)};
}

// ---- 7: reduced high-dimensional grid, reported ----

Verdict soft_reproduction() {
  ExperimentPlan plan = desk_plan();
  plan.models = {"NSGAN"};
  plan.families = {Family::normal};
  plan.dims = {128};
  plan.sample_sizes = {10000};
  plan.learning_rates = {0.02, 0.002};
  plan.hidden_dims = {64, 256};
  plan.trials = 5;
  const fs::path root = scratch("soft");
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  const double secs = timed([&] { run_plan(plan, root, workers); });
  const auto store = load_store(plan_directory(root, plan));
  fs::remove_all(root);
  const auto best = best_setting(store, "NSGAN", Family::normal, 128, 10000, Metric::js);
  if (!best) return {false, "no ok trials"};
  const double target = 0.120, band = 3 * 0.018;
  const auto base = cell_baseline(parse_spec(store.results.front().spec_snapshot), plan.master_seed);
  std::size_t failed = 0;
  for (const auto& r : store.results) failed += !r.ok;
  const bool ok = std::abs(best->mean - target) <= band;
  return {ok, "best lr=" + g(best->setting.lr) + " h=" + std::to_string(best->setting.h) + " js " + g(best->mean) +
                  " +- " + g(best->half_width) + " vs " + g(target) + " +- " + g(band) + "; baseline js " +
                  g(base.js) + "; " + std::to_string(failed) + " failed; grid 4 settings x 5 trials (published: 15 x 20), " +
                  g(secs) + "s"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"parameter counts", parameter_counts},
      {"gradient suite", gradients},
      {"divergence closed forms", divergences},
      {"protocol determinism", determinism},
      {"learning signal", learning_signal},
      {"analysis rules", analysis_rules},
      {"soft reproduction (reported)", soft_reproduction},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  bool gate = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::string note;
    if (!v.pass && kNonGating.count(id)) note = " [not gating]";
    else if (!v.pass && kKnownRed.count(id)) note = " [known red, see README]";
    std::printf("%s %d %s: %s%s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str(),
                note.c_str());
    std::fflush(stdout);
    if (!v.pass && !kNonGating.count(id) && !kKnownRed.count(id)) gate = false;
  }
  if (g_desk) fs::remove_all(g_desk->root);
  return gate ? 0 : 1;
}
