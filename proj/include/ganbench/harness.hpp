#pragma once

// Experiment plans, deterministic per-run seeding, parallel execution and the
// on-disk results store.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganbench/distributions.hpp"
#include "ganbench/train.hpp"

namespace ganbench {

namespace fs = std::filesystem;

inline constexpr std::size_t kEvalBatchRows = 1024;

struct ExperimentPlan {
  std::vector<std::string> models;
  std::vector<Family> families;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> learning_rates{2e-1, 2e-2, 2e-3};
  std::vector<std::size_t> hidden_dims{32, 64, 128, 256, 512};
  std::size_t batch = 1024;
  std::size_t epochs = 25;
  std::size_t trials = 20;
  std::uint64_t master_seed = 0;
  bool resample_per_trial = false;
  PenaltyPoint wgangp_penalty = PenaltyPoint::literal;

  std::size_t grid_size() const { return learning_rates.size() * hidden_dims.size(); }

  void validate() const {
    auto need = [](bool nonempty, const char* field) {
      if (!nonempty) throw std::invalid_argument(std::string("plan: field '") + field + "' is empty");
    };
    need(!models.empty(), "models");
    need(!families.empty(), "families");
    need(!dims.empty(), "dims");
    need(!sample_sizes.empty(), "sample_sizes");
    need(!learning_rates.empty(), "learning_rates");
    need(!hidden_dims.empty(), "hidden_dims");
    for (const auto& m : models) parse_variant(m);
    for (auto d : dims)
      if (d != 16 && d != 32 && d != 64 && d != 128)
        throw std::invalid_argument("plan: dimension " + std::to_string(d) + " not in {16, 32, 64, 128}");
    for (auto n : sample_sizes)
      if (n != 1000 && n != 10000 && n != 100000)
        throw std::invalid_argument("plan: sample size " + std::to_string(n) + " not in {1000, 10000, 100000}");
    for (double lr : learning_rates)
      if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("plan: learning rates must be positive");
    for (auto h : hidden_dims)
      if (std::find(kHiddenSizes.begin(), kHiddenSizes.end(), h) == kHiddenSizes.end())
        throw std::invalid_argument("plan: hidden size " + std::to_string(h) + " not in {32, 64, 128, 256, 512}");
    if (batch < 1 || epochs < 1 || trials < 1) throw std::invalid_argument("plan: batch, epochs and trials must be >= 1");
    auto distinct = [](auto v, const char* field) {
      std::sort(v.begin(), v.end());
      if (std::adjacent_find(v.begin(), v.end()) != v.end())
        throw std::invalid_argument(std::string("plan: duplicate entry in '") + field + "'");
    };
    distinct(models, "models");
    distinct(families, "families");
    distinct(dims, "dims");
    distinct(sample_sizes, "sample_sizes");
    distinct(learning_rates, "learning_rates");
    distinct(hidden_dims, "hidden_dims");
  }
};

inline void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  std::vector<std::string> fams;
  for (Family f : p.families) fams.emplace_back(family_name(f));
  j = nlohmann::json{{"models", p.models},
                     {"families", fams},
                     {"dims", p.dims},
                     {"sample_sizes", p.sample_sizes},
                     {"learning_rates", p.learning_rates},
                     {"hidden_dims", p.hidden_dims},
                     {"batch", p.batch},
                     {"epochs", p.epochs},
                     {"trials", p.trials},
                     {"master_seed", p.master_seed},
                     {"resample_per_trial", p.resample_per_trial},
                     {"wgangp_penalty", penalty_point_name(p.wgangp_penalty)}};
}

inline void from_json(const nlohmann::json& j, ExperimentPlan& p) {
  static const std::set<std::string> known{"models",      "families", "dims",   "sample_sizes",
                                           "learning_rates", "hidden_dims", "batch", "epochs",
                                           "trials",      "master_seed", "resample_per_trial", "wgangp_penalty"};
  if (!j.is_object()) throw std::invalid_argument("plan: top level must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument("plan: unknown key '" + k + "'");
  p = ExperimentPlan{};
  p.models = j.at("models").get<std::vector<std::string>>();
  p.families.clear();
  for (const auto& f : j.at("families").get<std::vector<std::string>>()) p.families.push_back(parse_family(f));
  p.dims = j.at("dims").get<std::vector<std::size_t>>();
  p.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
  if (j.contains("learning_rates")) p.learning_rates = j["learning_rates"].get<std::vector<double>>();
  if (j.contains("hidden_dims")) p.hidden_dims = j["hidden_dims"].get<std::vector<std::size_t>>();
  if (j.contains("batch")) p.batch = j["batch"].get<std::size_t>();
  if (j.contains("epochs")) p.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("trials")) p.trials = j["trials"].get<std::size_t>();
  if (j.contains("master_seed")) p.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("resample_per_trial")) p.resample_per_trial = j["resample_per_trial"].get<bool>();
  if (j.contains("wgangp_penalty")) p.wgangp_penalty = parse_penalty_point(j["wgangp_penalty"].get<std::string>());
}

/// Parses and validates a plan document.
inline ExperimentPlan parse_plan(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("plan: not valid JSON: ") + e.what());
  }
  ExperimentPlan p;
  try {
    p = j.get<ExperimentPlan>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("plan: ") + e.what());
  }
  p.validate();
  return p;
}

inline ExperimentPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("plan: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

/// Small default plan: 3 models x 2 families x d16 x n10000 x 2x2 grid x 5 trials.
inline ExperimentPlan desk_plan() {
  ExperimentPlan p;
  p.models = {"NSGAN", "WGAN", "HellingerGAN"};
  p.families = {Family::normal, Family::gamma};
  p.dims = {16};
  p.sample_sizes = {10000};
  p.learning_rates = {2e-2, 2e-3};
  p.hidden_dims = {32, 64};
  p.trials = 5;
  p.master_seed = 20240;
  return p;
}

inline std::string canonical_plan(const ExperimentPlan& p) { return nlohmann::json(p).dump(); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string plan_hash(const ExperimentPlan& p) { return hex64(mix64(fnv1a64(canonical_plan(p)))); }

struct RunKey {
  std::string model;
  Family family = Family::normal;
  std::size_t dim = 0;
  std::size_t n_samples = 0;
  double lr = 0.0;
  std::size_t h = 0;
  std::size_t trial = 0;

  auto tie() const { return std::tie(model, family, dim, n_samples, lr, h, trial); }
  friend bool operator==(const RunKey& a, const RunKey& b) { return a.tie() == b.tie(); }
  friend bool operator<(const RunKey& a, const RunKey& b) { return a.tie() < b.tie(); }
};

/// Cartesian product in the order models, families, dims, sizes, lr, h, trial.
inline std::vector<RunKey> expand_plan(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<RunKey> keys;
  keys.reserve(plan.models.size() * plan.families.size() * plan.dims.size() * plan.sample_sizes.size() *
               plan.grid_size() * plan.trials);
  for (const auto& m : plan.models)
    for (Family f : plan.families)
      for (auto d : plan.dims)
        for (auto n : plan.sample_sizes)
          for (double lr : plan.learning_rates)
            for (auto h : plan.hidden_dims)
              for (std::size_t t = 0; t < plan.trials; ++t) keys.push_back(RunKey{m, f, d, n, lr, h, t});
  return keys;
}

inline std::uint64_t derive_seed(std::uint64_t master_seed, const RunKey& key) {
  std::uint64_t s = mix64(master_seed ^ 0x6a09e667f3bcc908ULL);
  s = hash_combine(s, fnv1a64(key.model));
  s = hash_combine(s, fnv1a64(family_name(key.family)));
  s = hash_combine(s, key.dim);
  s = hash_combine(s, key.n_samples);
  s = hash_combine(s, std::bit_cast<std::uint64_t>(key.lr));
  s = hash_combine(s, key.h);
  s = hash_combine(s, key.trial);
  return s;
}

/// The three data streams of a cell. Without per-trial resampling every run
/// of a (family, dim) cell shares one spec and one evaluation batch.
struct CellData {
  DistributionSpec spec;
  Matrix2D train;
  Matrix2D eval;
};

inline CellData cell_data(const ExperimentPlan& plan, const RunKey& key) {
  const Rng root(plan.master_seed);
  auto cell = [&](const char* stream) {
    Rng r = root.split(stream).split(family_name(key.family)).split(std::uint64_t(key.dim));
    return plan.resample_per_trial ? r.split(std::uint64_t(key.trial)) : r;
  };
  CellData c;
  Rng spec_rng = cell("spec");
  c.spec = make_spec(key.family, key.dim, spec_rng);
  Rng train_rng = cell("train").split(std::uint64_t(key.n_samples));
  c.train = sample(c.spec, key.n_samples, train_rng);
  Rng eval_rng = cell("eval");
  c.eval = sample(c.spec, kEvalBatchRows, eval_rng);
  return c;
}

struct TrialResult {
  RunKey key;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  std::vector<EpochRecord> records;
  std::string spec_snapshot;
  std::size_t exp_clamp_events = 0;
};

inline TrialResult run_trial(const ExperimentPlan& plan, const RunKey& key) {
  const CellData data = cell_data(plan, key);
  const GanVariant variant = GanVariant::make(parse_variant(key.model), plan.wgangp_penalty);
  TrainConfig cfg;
  cfg.lr = key.lr;
  cfg.hidden_dim = key.h;
  cfg.batch_size = plan.batch;
  cfg.epochs = plan.epochs;
  cfg.seed = derive_seed(plan.master_seed, key);
  const TrainResult tr = train(variant, data.train, data.eval, cfg);
  TrialResult r;
  r.key = key;
  r.seed = cfg.seed;
  r.ok = !tr.failed;
  r.failure = tr.failure;
  r.records = tr.history;
  r.spec_snapshot = serialize_spec(data.spec);
  r.exp_clamp_events = tr.exp_clamp_events;
  return r;
}

// ---- on-disk store ----

inline constexpr const char* kCsvHeader = "epoch,kl,js,wd,energy,d_loss,g_loss";

/// Path of a run relative to the plan directory, without extension.
inline fs::path run_stem(const RunKey& k) {
  return fs::path(k.model) /
         (std::string(family_name(k.family)) + "-d" + std::to_string(k.dim) + "-n" + std::to_string(k.n_samples)) /
         ("lr" + format_g(k.lr) + "-h" + std::to_string(k.h) + "-t" + std::to_string(k.trial));
}

inline std::string records_csv(const std::vector<EpochRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + "," + to_csv_fragment(r.divergence) + "," + format_g(r.d_loss) + "," +
           format_g(r.g_loss) + "\n";
  }
  return out;
}

inline std::string sidecar_json(const TrialResult& r) {
  nlohmann::json key{{"model", r.key.model},   {"family", family_name(r.key.family)},
                     {"dim", r.key.dim},       {"n_samples", r.key.n_samples},
                     {"lr", r.key.lr},         {"h", r.key.h},
                     {"trial", r.key.trial}};
  nlohmann::json j{{"key", key},
                   {"seed", r.seed},
                   {"status", r.ok ? "ok" : "failed"},
                   {"failure", r.failure},
                   {"exp_clamp_events", r.exp_clamp_events},
                   {"spec_snapshot", nlohmann::json::parse(r.spec_snapshot)}};
  return j.dump(2) + "\n";
}

/// Writes via a temporary sibling and rename so readers never see a partial file.
inline void atomic_write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + hex64(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw fs::filesystem_error("cannot open for writing", tmp, std::make_error_code(std::errc::io_error));
    out << text;
    out.flush();
    if (!out) throw fs::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
  }
  fs::rename(tmp, path);
}

/// Writes the run CSV then its sidecar; the sidecar marks the run complete.
inline void persist(const TrialResult& r, const fs::path& plan_dir) {
  const fs::path stem = plan_dir / run_stem(r.key);
  atomic_write(fs::path(stem.string() + ".csv"), records_csv(r.records));
  atomic_write(fs::path(stem.string() + ".json"), sidecar_json(r));
}

struct CorruptRun {
  std::string path;
  std::string reason;
};

struct ResultsStore {
  std::optional<ExperimentPlan> plan;
  std::vector<TrialResult> results;  // sorted by key
  std::vector<CorruptRun> corrupt;

  const TrialResult* find(const RunKey& k) const {
    auto it = std::lower_bound(results.begin(), results.end(), k,
                               [](const TrialResult& r, const RunKey& key) { return r.key < key; });
    return (it != results.end() && it->key == k) ? &*it : nullptr;
  }
};

namespace detail {
inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline double parse_number(const std::string& cell) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("bad number '" + cell + "'");
  }
  if (used != cell.size()) throw std::runtime_error("bad number '" + cell + "'");
  return v;
}

inline std::vector<EpochRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file");
  if (line != kCsvHeader) throw std::runtime_error("unexpected header '" + line + "'");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("row has " + std::to_string(cells.size()) + " fields");
    EpochRecord r;
    const double e = parse_number(cells[0]);
    if (e < 1 || e != std::floor(e)) throw std::runtime_error("bad epoch index");
    r.epoch = std::size_t(e);
    r.divergence = {parse_number(cells[1]), parse_number(cells[2]), parse_number(cells[3]), parse_number(cells[4])};
    r.d_loss = parse_number(cells[5]);
    r.g_loss = parse_number(cells[6]);
    out.push_back(r);
  }
  return out;
}

inline TrialResult parse_sidecar(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TrialResult r;
  const auto& k = j.at("key");
  r.key.model = k.at("model").get<std::string>();
  r.key.family = parse_family(k.at("family").get<std::string>());
  r.key.dim = k.at("dim").get<std::size_t>();
  r.key.n_samples = k.at("n_samples").get<std::size_t>();
  r.key.lr = k.at("lr").get<double>();
  r.key.h = k.at("h").get<std::size_t>();
  r.key.trial = k.at("trial").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw std::runtime_error("unknown status '" + status + "'");
  r.ok = status == "ok";
  r.failure = j.at("failure").get<std::string>();
  r.exp_clamp_events = j.at("exp_clamp_events").get<std::size_t>();
  r.spec_snapshot = j.at("spec_snapshot").dump();
  return r;
}
}  // namespace detail

inline fs::path plan_directory(const fs::path& out_root, const ExperimentPlan& plan) {
  return out_root / plan_hash(plan);
}

/// Reads every completed run under a plan directory. Unreadable or malformed
/// runs are listed in `corrupt` and left out of `results`.
inline ResultsStore load_store(const fs::path& plan_dir) {
  ResultsStore store;
  if (!fs::is_directory(plan_dir)) return store;
  if (fs::exists(plan_dir / "plan.json")) store.plan = load_plan(plan_dir / "plan.json");
  std::vector<fs::path> sidecars;
  for (const auto& e : fs::recursive_directory_iterator(plan_dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    if (e.path() == plan_dir / "plan.json") continue;
    sidecars.push_back(e.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  for (const auto& sc : sidecars) {
    try {
      TrialResult r = detail::parse_sidecar(detail::slurp(sc));
      if (plan_dir / (run_stem(r.key).string() + ".json") != sc)
        throw std::runtime_error("sidecar key does not match its location");
      fs::path csv = sc;
      csv.replace_extension(".csv");
      r.records = detail::parse_records_csv(detail::slurp(csv));
      if (r.ok && store.plan && r.records.size() != store.plan->epochs)
        throw std::runtime_error("ok run has " + std::to_string(r.records.size()) + " epochs");
      store.results.push_back(std::move(r));
    } catch (const std::exception& e) {
      store.corrupt.push_back({sc.string(), e.what()});
    }
  }
  std::sort(store.results.begin(), store.results.end(),
            [](const TrialResult& a, const TrialResult& b) { return a.key < b.key; });
  return store;
}

struct RunSummary {
  std::size_t planned = 0;
  std::size_t skipped = 0;   // already persisted
  std::size_t executed = 0;
  std::size_t failed = 0;    // trials whose training diverged
  std::vector<std::string> io_errors;
};

using RunLogger = std::function<void(const std::string&)>;

/// Executes every key of the plan without a persisted result, using
/// `worker_count` threads, and writes each result atomically under
/// out_root/<plan-hash>/. Stored bytes do not depend on the worker count.
inline RunSummary run_plan(const ExperimentPlan& plan, const fs::path& out_root, std::size_t worker_count,
                           const RunLogger& log = {}) {
  if (worker_count < 1) throw std::invalid_argument("run_plan: worker_count must be >= 1");
  plan.validate();
  const fs::path dir = plan_directory(out_root, plan);
  fs::create_directories(dir);
  if (!fs::exists(dir / "plan.json")) atomic_write(dir / "plan.json", nlohmann::json(plan).dump(2) + "\n");

  const auto keys = expand_plan(plan);
  RunSummary summary;
  summary.planned = keys.size();
  std::vector<RunKey> pending;
  for (const auto& k : keys) {
    if (fs::exists(fs::path((dir / run_stem(k)).string() + ".json")))
      ++summary.skipped;
    else
      pending.push_back(k);
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const RunKey& k = pending[i];
      TrialResult r = run_trial(plan, k);
      std::string io_error;
      for (int attempt = 0; attempt < 2; ++attempt) {
        try {
          persist(r, dir);
          io_error.clear();
          break;
        } catch (const std::exception& e) {
          io_error = e.what();
        }
      }
      std::lock_guard lock(mu);
      ++summary.executed;
      if (!r.ok) ++summary.failed;
      if (!io_error.empty()) summary.io_errors.push_back(run_stem(k).string() + ": " + io_error);
      if (log) {
        std::string line = run_stem(k).string() + (r.ok ? " ok" : " failed (" + r.failure + ")");
        if (r.ok && !r.records.empty()) line += " final js=" + format_g(r.records.back().divergence.js);
        if (!io_error.empty()) line += " [write failed: " + io_error + "]";
        log(line);
      }
    }
  };
  const std::size_t n_threads = std::min(worker_count, std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  return summary;
}

}  // namespace ganbench
