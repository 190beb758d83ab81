// ganbench: plan, run, analyze, baseline, selftest.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ganbench/ganbench.hpp"

namespace gb = ganbench;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;
constexpr std::size_t kLargePlanRuns = 10000;

struct Options {
  std::string plan_path;
  std::string out = "results";
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
  std::string metric;
  std::string wgangp_penalty;
};

gb::ExperimentPlan resolve_plan(const Options& o) {
  gb::ExperimentPlan p = o.plan_path.empty() ? gb::desk_plan() : gb::load_plan(o.plan_path);
  if (o.seed) p.master_seed = *o.seed;
  if (!o.wgangp_penalty.empty()) p.wgangp_penalty = gb::parse_penalty_point(o.wgangp_penalty);
  p.validate();
  return p;
}

gb::fs::path resolve_out(const Options& o) {
  if (const char* env = std::getenv("GANBENCH_OUT"); env && *env) return env;
  return o.out;
}

int cmd_plan(const Options& o) {
  const auto plan = resolve_plan(o);
  const auto keys = gb::expand_plan(plan);
  std::cout << "runs: " << keys.size() << "\n"
            << "grid settings: " << plan.grid_size() << "\n"
            << "plan hash: " << gb::plan_hash(plan) << "\n";
  if (keys.size() > kLargePlanRuns)
    std::cerr << "warning: " << keys.size() << " runs; this plan is far beyond desk scale\n";
  return kOk;
}

int cmd_run(const Options& o) {
  const auto plan = resolve_plan(o);
  const auto total = gb::expand_plan(plan).size();
  if (total > kLargePlanRuns) std::cerr << "warning: " << total << " runs; this plan is far beyond desk scale\n";
  const auto out = resolve_out(o);
  std::mutex mu;
  const auto summary = gb::run_plan(plan, out, o.workers, [&](const std::string& line) {
    std::lock_guard lock(mu);
    std::cerr << line << "\n";
  });
  std::cout << "store: " << gb::plan_directory(out, plan).string() << "\n"
            << "planned " << summary.planned << ", already done " << summary.skipped << ", executed "
            << summary.executed << ", diverged " << summary.failed << "\n";
  for (const auto& e : summary.io_errors) std::cerr << "write error: " << e << "\n";
  return summary.io_errors.empty() ? kOk : kRuntime;
}

std::vector<gb::Metric> selected_metrics(const Options& o) {
  if (!o.metric.empty()) return {gb::parse_metric(o.metric)};
  return {gb::Metric::kl, gb::Metric::js, gb::Metric::wd};
}

int cmd_analyze(const Options& o) {
  const auto plan = resolve_plan(o);
  const auto metrics = selected_metrics(o);
  const auto dir = gb::plan_directory(resolve_out(o), plan);
  const auto store = gb::load_store(dir);
  for (const auto& c : store.corrupt) std::cerr << "corrupt run " << c.path << ": " << c.reason << "\n";
  if (store.results.empty()) {
    std::cerr << "error: no results under " << dir.string() << "; run the plan first\n";
    return kValidation;
  }
  const auto adir = dir / "analysis";
  std::set<std::size_t> dims;
  for (const auto& c : gb::store_cells(store)) dims.insert(c.dim);
  for (std::size_t d : dims)
    for (gb::Metric m : metrics) {
      const std::string tag = std::string(gb::metric_name(m)) + "-d" + std::to_string(d);
      for (const auto& [name, table] :
           {std::pair{"scores", gb::score_table(store, d, m)}, std::pair{"ranks", gb::rank_table(store, d, m)},
            std::pair{"unique-best", gb::unique_best_table(store, d, m)}}) {
        gb::atomic_write(adir / (std::string(name) + "-" + tag + ".csv"), table.csv());
        gb::atomic_write(adir / (std::string(name) + "-" + tag + ".txt"), table.text());
        std::cout << table.text() << "\n";
      }
    }
  const auto robust = gb::robustness_table(store);
  gb::atomic_write(adir / "robustness.csv", robust.csv());
  gb::atomic_write(adir / "robustness.txt", robust.text());
  std::cout << robust.text() << "\n";
  const auto files = gb::emit_curves(store, adir, metrics);
  std::cout << "wrote " << files.size() << " curve files to " << adir.string() << "\n";
  std::size_t failed = 0;
  for (const auto& r : store.results) failed += r.ok ? 0 : 1;
  std::cout << "runs: " << store.results.size() << " loaded, " << failed << " diverged, " << store.corrupt.size()
            << " corrupt\n";
  return kOk;
}

int cmd_baseline(const Options& o) {
  const auto plan = resolve_plan(o);
  std::cout << "family,dim,kl,js,wd,energy\n";
  for (gb::Family f : plan.families)
    for (std::size_t d : plan.dims) {
      const gb::RunKey key{plan.models.front(), f, d, plan.sample_sizes.front(), plan.learning_rates.front(),
                           plan.hidden_dims.front(), 0};
      const auto data = gb::cell_data(plan, key);
      const auto base = gb::cell_baseline(data.spec, plan.master_seed);
      std::cout << gb::family_name(f) << "," << d << "," << gb::to_csv_fragment(base) << "\n";
    }
  return kOk;
}

int cmd_selftest() {
  bool all = true;
  for (const auto& c : gb::run_selftest()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    all = all && c.passed;
  }
  return all ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark of GAN variants on synthetic distributions"};
  Options o;
  app.add_option("--plan", o.plan_path, "Plan file (JSON); defaults to the built-in desk plan");
  app.add_option("--out", o.out, "Results root (GANBENCH_OUT overrides)");
  app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Override the plan's master seed");
  app.add_option("--metric", o.metric, "Restrict analysis to one metric")
      ->check(CLI::IsMember({"kl", "js", "wd", "energy"}));
  app.add_option("--wgangp-penalty", o.wgangp_penalty, "WGANGP penalty point")
      ->check(CLI::IsMember({"literal", "interpolate"}));
  app.require_subcommand(1, 1);
  auto* plan = app.add_subcommand("plan", "Validate a plan and print its run count")->fallthrough();
  auto* run = app.add_subcommand("run", "Execute the plan, skipping finished runs")->fallthrough();
  auto* analyze = app.add_subcommand("analyze", "Emit tables and curves for a finished plan")->fallthrough();
  auto* baseline = app.add_subcommand("baseline", "Expected divergences of the true distributions")->fallthrough();
  auto* selftest = app.add_subcommand("selftest", "Gradient, parameter-count and divergence checks")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kValidation;
  }

  try {
    if (plan->parsed()) return cmd_plan(o);
    if (run->parsed()) return cmd_run(o);
    if (analyze->parsed()) return cmd_analyze(o);
    if (baseline->parsed()) return cmd_baseline(o);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntime;
  }
  return kValidation;
}
