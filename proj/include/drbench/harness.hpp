#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "drbench/io.hpp"
#include "drbench/metrics.hpp"
#include "drbench/reducers.hpp"

namespace drbench {

// Pseudo-metric resolved per dataset: Procrustes when the embedding keeps the
// input dimension, otherwise 1-NN on the class labels.
inline constexpr const char* kBayesKey = "bayes";

struct DatasetSpec {
  std::string name;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string variant;
};

struct AlgorithmSpec {
  std::string name;
  std::vector<HyperparamAssignment> grid;  // never empty; {} means defaults only
};

struct ExperimentPlan {
  std::vector<DatasetSpec> datasets;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::string> metrics;
  std::vector<std::uint64_t> seeds;
  Eigen::Index embedding_dim = 2;
  std::string aggregate = "mean";  // or "median"

  std::size_t metric_index(const std::string& key) const {
    const auto it = std::find(metrics.begin(), metrics.end(), key);
    if (it == metrics.end()) fail("metric '", key, "' is not part of the plan");
    return static_cast<std::size_t>(it - metrics.begin());
  }
};

inline std::string metric_display_name(const std::string& key) {
  if (key == kBayesKey) return "Procrustes/KNN";
  return metric_info(parse_metric(key)).display;
}

inline std::string orientation_name(Orientation o) { return o == Orientation::maximize ? "maximize" : "minimize"; }

inline Orientation parse_orientation(const std::string& s) {
  if (s == "maximize") return Orientation::maximize;
  if (s == "minimize") return Orientation::minimize;
  fail("unknown orientation '", s, "'");
}

// ---------------------------------------------------------------------------
// Plan files

/// Expands {"algorithm": name, "p": [v...], "q": [w...]} into the cartesian
/// product of configurations, in key order with the last key varying fastest.
/// A scalar counts as a one-element list. Every configuration is checked
/// against the algorithm's schema.
inline std::vector<HyperparamAssignment> expand_grid(const std::string& algorithm, const json& grid) {
  if (!grid.is_object()) fail("grid for '", algorithm, "' must be a JSON object");
  std::vector<std::pair<std::string, std::vector<ParamValue>>> axes;
  for (const auto& [key, v] : grid.items()) {
    if (key == "algorithm") {
      if (v.get<std::string>() != algorithm) {
        fail("grid declares algorithm '", v.get<std::string>(), "' but is used for '", algorithm, "'");
      }
      continue;
    }
    std::vector<ParamValue> values;
    const json list = v.is_array() ? v : json::array({v});
    if (list.empty()) fail("grid for '", algorithm, "': parameter '", key, "' has no values");
    for (const auto& x : list) {
      if (x.is_number_integer()) values.emplace_back(x.get<std::int64_t>());
      else if (x.is_number()) values.emplace_back(x.get<double>());
      else if (x.is_string()) values.emplace_back(x.get<std::string>());
      else fail("grid for '", algorithm, "': parameter '", key, "' has a non-scalar value");
    }
    axes.emplace_back(key, std::move(values));
  }
  std::vector<HyperparamAssignment> out{HyperparamAssignment{}};
  for (const auto& [key, values] : axes) {
    std::vector<HyperparamAssignment> next;
    for (const auto& base : out) {
      for (const auto& v : values) {
        auto cfg = base;
        cfg.set(key, v);
        next.push_back(std::move(cfg));
      }
    }
    out = std::move(next);
  }
  for (const auto& cfg : out) resolve_params(algorithm, reducer_schema(algorithm), cfg);
  return out;
}

inline void validate_plan(const ExperimentPlan& plan) {
  if (plan.datasets.empty()) fail("plan: no datasets");
  if (plan.algorithms.empty()) fail("plan: no algorithms");
  if (plan.metrics.empty()) fail("plan: no metrics");
  if (plan.seeds.empty()) fail("plan: no seeds");
  if (plan.embedding_dim < 1) fail("plan: embedding_dim must be positive");
  if (plan.aggregate != "mean" && plan.aggregate != "median") {
    fail("plan: aggregate must be mean or median, got '", plan.aggregate, "'");
  }
  std::set<std::string> seen;
  for (const auto& m : plan.metrics) {
    if (!seen.insert(m).second) fail("plan: metric '", m, "' listed twice");
    if (m == kBayesKey) continue;
    if (parse_metric(m) == MetricId::lcmc) fail("plan: lcmc needs a neighborhood size; use kmax or qnx");
  }
  std::set<std::string> names;
  for (const auto& d : plan.datasets) {
    if (!names.insert(d.name).second) fail("plan: dataset '", d.name, "' listed twice");
  }
  std::set<std::string> algos;
  for (const auto& a : plan.algorithms) {
    reducer_schema(a.name);
    if (!algos.insert(a.name).second) fail("plan: algorithm '", a.name, "' listed twice");
    if (a.grid.empty()) fail("plan: grid for '", a.name, "' is empty");
  }
  std::set<std::uint64_t> seeds(plan.seeds.begin(), plan.seeds.end());
  if (seeds.size() != plan.seeds.size()) fail("plan: duplicate seeds");
}

/// Reads a plan. Grid references are either a path (relative to the plan
/// file), an inline grid object, or an explicit array of configurations.
inline ExperimentPlan parse_plan(const json& j, const fs::path& base_dir) {
  ExperimentPlan plan;
  const std::uint64_t data_seed = j.value("data_seed", std::uint64_t{1});
  for (const auto& d : j.at("datasets")) {
    DatasetSpec spec;
    if (d.is_string()) {
      spec.name = d.get<std::string>();
    } else {
      spec.name = d.at("name").get<std::string>();
      spec.n = d.value("n", std::size_t{0});
      spec.variant = d.value("variant", "");
    }
    spec.seed = d.is_object() ? d.value("seed", data_seed) : data_seed;
    if (spec.n == 0) spec.n = default_dataset_size(spec.name);
    plan.datasets.push_back(std::move(spec));
  }
  for (const auto& a : j.at("algorithms")) {
    AlgorithmSpec spec;
    spec.name = a.is_string() ? a.get<std::string>() : a.at("name").get<std::string>();
    reducer_schema(spec.name);
    const json grid = a.is_object() && a.contains("grid") ? a.at("grid") : json::object();
    if (grid.is_string()) {
      const fs::path path = base_dir / grid.get<std::string>();
      if (!fs::exists(path)) fail("plan: grid file '", path.string(), "' does not exist");
      spec.grid = expand_grid(spec.name, json::parse(read_text(path)));
    } else if (grid.is_array()) {
      for (const auto& cfg : grid) {
        spec.grid.push_back(params_from_json(cfg));
        resolve_params(spec.name, reducer_schema(spec.name), spec.grid.back());
      }
    } else {
      spec.grid = expand_grid(spec.name, grid);
    }
    plan.algorithms.push_back(std::move(spec));
  }
  for (const auto& m : j.at("metrics")) plan.metrics.push_back(m.get<std::string>());
  for (const auto& s : j.at("seeds")) plan.seeds.push_back(s.get<std::uint64_t>());
  plan.embedding_dim = j.value("embedding_dim", Eigen::Index{2});
  plan.aggregate = j.value("aggregate", "mean");
  validate_plan(plan);
  return plan;
}

inline ExperimentPlan load_plan(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail("plan '", path.string(), "': ", e.what());
  }
  try {
    return parse_plan(j, path.parent_path());
  } catch (const json::exception& e) {
    fail("plan '", path.string(), "': ", e.what());
  }
}

// Fully expanded form; parse_plan reads it back to the same plan.
inline json plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["datasets"] = json::array();
  for (const auto& d : plan.datasets) {
    json e;
    e["name"] = d.name;
    e["n"] = d.n;
    e["seed"] = d.seed;
    if (!d.variant.empty()) e["variant"] = d.variant;
    j["datasets"].push_back(e);
  }
  j["algorithms"] = json::array();
  for (const auto& a : plan.algorithms) {
    json e;
    e["name"] = a.name;
    e["grid"] = json::array();
    for (const auto& cfg : a.grid) e["grid"].push_back(params_to_json(cfg));
    j["algorithms"].push_back(e);
  }
  j["metrics"] = plan.metrics;
  j["seeds"] = plan.seeds;
  j["embedding_dim"] = plan.embedding_dim;
  j["aggregate"] = plan.aggregate;
  return j;
}

// ---------------------------------------------------------------------------
// Prepared inputs

inline MetricId bayes_metric_for(const PointSet& ps, Eigen::Index p) {
  if (ps.dim() == p) return MetricId::procrustes;
  if (ps.labels) return MetricId::one_nn;
  fail("dataset '", ps.generator, "': no Bayes reference (dimension ", ps.dim(), " != ", p, " and no labels)");
}

struct PreparedDataset {
  DatasetSpec spec;
  PointSet data;
  Geometry geometry;
  MetricId bayes;
};

inline std::vector<PreparedDataset> prepare_datasets(const ExperimentPlan& plan) {
  std::vector<PreparedDataset> out;
  for (const auto& spec : plan.datasets) {
    PreparedDataset d{spec, generate_dataset(spec.name, spec.n, spec.seed, spec.variant), {}, MetricId::procrustes};
    d.geometry = Geometry::of(d.data.points);
    d.bayes = bayes_metric_for(d.data, plan.embedding_dim);
    for (const auto& m : plan.metrics) {
      if (m == kBayesKey) continue;
      const auto id = parse_metric(m);
      if (id == MetricId::procrustes && d.data.dim() != plan.embedding_dim) {
        fail("plan: procrustes is undefined for '", spec.name, "' (dimension ", d.data.dim(), " vs ",
             plan.embedding_dim, ")");
      }
      if (id == MetricId::one_nn && !d.data.labels) fail("plan: 1nn needs labels, '", spec.name, "' has none");
    }
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Score records

struct ScoreRecord {
  std::string dataset;
  std::string algorithm;
  std::size_t config = 0;  // index into the algorithm's grid
  HyperparamAssignment params;
  std::uint64_t seed = 0;
  std::string metric;     // catalog key or "bayes"
  std::string scored_as;  // catalog key actually computed
  double value = 0.0;
  Orientation orientation = Orientation::maximize;
  bool ok = true;
  std::string error;
};

inline json record_to_json(const ScoreRecord& r) {
  json j;
  j["dataset"] = r.dataset;
  j["algorithm"] = r.algorithm;
  j["config"] = r.config;
  j["params"] = params_to_json(r.params);
  j["seed"] = r.seed;
  j["metric"] = r.metric;
  j["scored_as"] = r.scored_as;
  j["value"] = r.value;
  j["orientation"] = orientation_name(r.orientation);
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  return j;
}

inline ScoreRecord record_from_json(const json& j) {
  ScoreRecord r;
  r.dataset = j.at("dataset").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.config = j.at("config").get<std::size_t>();
  r.params = params_from_json(j.at("params"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.metric = j.at("metric").get<std::string>();
  r.scored_as = j.at("scored_as").get<std::string>();
  r.value = j.at("value").get<double>();
  r.orientation = parse_orientation(j.at("orientation").get<std::string>());
  r.ok = j.at("ok").get<bool>();
  r.error = j.value("error", "");
  return r;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string scores_csv(const std::vector<ScoreRecord>& records) {
  std::string out = "dataset,algorithm,config,params,seed,metric,scored_as,value,orientation,ok\n";
  for (const auto& r : records) {
    out += r.dataset + "," + r.algorithm + "," + std::to_string(r.config) + "," + csv_quote(r.params.to_string()) +
           "," + std::to_string(r.seed) + "," + r.metric + "," + r.scored_as + "," + format_double(r.value) + "," +
           orientation_name(r.orientation) + "," + (r.ok ? "true" : "false") + "\n";
  }
  return out;
}

struct BayesRecord {
  std::string dataset;
  std::size_t n = 0;
  Eigen::Index dataset_dim = 0;
  Eigen::Index embedding_dim = 0;
  std::string algorithm;
  std::string selected_by;  // metric key the configuration was tuned for
  std::size_t config = 0;
  HyperparamAssignment params;
  std::uint64_t seed = 0;
  std::string bayes_metric;
  double value = 0.0;
  Orientation orientation = Orientation::minimize;
  bool ok = true;
  std::string error;

  bool high_dim() const { return dataset_dim > embedding_dim; }
};

inline json bayes_to_json(const BayesRecord& r) {
  json j;
  j["dataset"] = r.dataset;
  j["n"] = r.n;
  j["dataset_dim"] = r.dataset_dim;
  j["embedding_dim"] = r.embedding_dim;
  j["algorithm"] = r.algorithm;
  j["selected_by"] = r.selected_by;
  j["config"] = r.config;
  j["params"] = params_to_json(r.params);
  j["seed"] = r.seed;
  j["bayes_metric"] = r.bayes_metric;
  j["value"] = r.value;
  j["orientation"] = orientation_name(r.orientation);
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  return j;
}

inline BayesRecord bayes_from_json(const json& j) {
  BayesRecord r;
  r.dataset = j.at("dataset").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.dataset_dim = j.at("dataset_dim").get<Eigen::Index>();
  r.embedding_dim = j.at("embedding_dim").get<Eigen::Index>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.selected_by = j.at("selected_by").get<std::string>();
  r.config = j.at("config").get<std::size_t>();
  r.params = params_from_json(j.at("params"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.bayes_metric = j.at("bayes_metric").get<std::string>();
  r.value = j.at("value").get<double>();
  r.orientation = parse_orientation(j.at("orientation").get<std::string>());
  r.ok = j.at("ok").get<bool>();
  r.error = j.value("error", "");
  return r;
}

inline std::vector<BayesRecord> read_bayes_log(const fs::path& path) {
  std::vector<BayesRecord> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(bayes_from_json(json::parse(line)));
  }
  return out;
}

inline std::string bayes_jsonl(const std::vector<BayesRecord>& records) {
  std::string out;
  for (const auto& r : records) out += dump_json(bayes_to_json(r)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Work items and the worker pool

struct WorkItem {
  std::size_t dataset = 0;
  std::size_t algorithm = 0;
  std::size_t config = 0;
  std::size_t seed = 0;  // index into plan.seeds
};

// Canonical order: dataset, algorithm, configuration, seed.
inline std::vector<WorkItem> enumerate_work(const ExperimentPlan& plan) {
  std::vector<WorkItem> items;
  for (std::size_t d = 0; d < plan.datasets.size(); ++d)
    for (std::size_t a = 0; a < plan.algorithms.size(); ++a)
      for (std::size_t c = 0; c < plan.algorithms[a].grid.size(); ++c)
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) items.push_back({d, a, c, s});
  return items;
}

inline std::size_t worker_count(std::size_t requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DRBENCH_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Indices are
/// claimed in increasing order. The first exception is rethrown after all
/// threads finish.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  workers = std::min(workers, count);
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

/// Runs one (dataset, algorithm, config, seed) tuple and scores every plan
/// metric. Reducer failures turn into failed records holding the worst value
/// for each metric's orientation.
inline std::vector<ScoreRecord> evaluate_item(const ExperimentPlan& plan, const std::vector<PreparedDataset>& data,
                                              const WorkItem& item) {
  const auto& d = data[item.dataset];
  const auto& algo = plan.algorithms[item.algorithm];
  const auto& params = algo.grid[item.config];
  const std::uint64_t seed = plan.seeds[item.seed];

  std::vector<ScoreRecord> out;
  for (const auto& key : plan.metrics) {
    ScoreRecord r;
    r.dataset = d.spec.name;
    r.algorithm = algo.name;
    r.config = item.config;
    r.params = params;
    r.seed = seed;
    r.metric = key;
    const MetricId id = key == kBayesKey ? d.bayes : parse_metric(key);
    r.scored_as = metric_info(id).key;
    r.orientation = orientation_of(id);
    out.push_back(std::move(r));
  }

  auto mark_failed = [](ScoreRecord& r, const std::string& what) {
    r.ok = false;
    r.error = what;
    r.value = worst_value(r.orientation);
  };

  Embedding emb;
  try {
    emb = run_reducer(algo.name, d.data, params, seed, plan.embedding_dim);
    require_finite(emb.points, algo.name.c_str());
  } catch (const std::exception& e) {
    for (auto& r : out) mark_failed(r, e.what());
    return out;
  }
  Evaluation ev(d.data.points, d.geometry, emb.points, d.data.labels);
  for (auto& r : out) {
    try {
      r.value = ev.evaluate(parse_metric(r.scored_as)).value;
      if (!std::isfinite(r.value)) mark_failed(r, "non-finite score");
    } catch (const std::exception& e) {
      mark_failed(r, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid search

struct RunOptions {
  fs::path out_dir;
  bool resume = false;
  std::size_t workers = 0;                 // 0: DRBENCH_WORKERS, else hardware threads
  std::optional<std::size_t> stop_after;   // run at most this many new work items
  std::function<void(const std::string&)> progress;
};

struct RunStatus {
  std::size_t items_total = 0;
  std::size_t items_reused = 0;
  std::size_t items_run = 0;
  bool complete = false;
  std::vector<std::string> failures;  // "dataset/algorithm/config/seed: message"
};

struct ScoreTable {
  std::vector<ScoreRecord> records;  // canonical order
};

namespace detail {

struct ItemIndex {
  std::map<std::string, std::size_t> dataset, algorithm;
  std::map<std::uint64_t, std::size_t> seed;

  explicit ItemIndex(const ExperimentPlan& plan) {
    for (std::size_t i = 0; i < plan.datasets.size(); ++i) dataset[plan.datasets[i].name] = i;
    for (std::size_t i = 0; i < plan.algorithms.size(); ++i) algorithm[plan.algorithms[i].name] = i;
    for (std::size_t i = 0; i < plan.seeds.size(); ++i) seed[plan.seeds[i]] = i;
  }

  // Position of the record's work item in enumerate_work order.
  std::optional<std::size_t> locate(const ExperimentPlan& plan, const ScoreRecord& r) const {
    const auto d = dataset.find(r.dataset);
    const auto a = algorithm.find(r.algorithm);
    const auto s = seed.find(r.seed);
    if (d == dataset.end() || a == algorithm.end() || s == seed.end()) return std::nullopt;
    if (r.config >= plan.algorithms[a->second].grid.size()) return std::nullopt;
    std::size_t idx = 0;
    for (std::size_t di = 0; di < d->second; ++di)
      for (const auto& al : plan.algorithms) idx += al.grid.size() * plan.seeds.size();
    for (std::size_t ai = 0; ai < a->second; ++ai) idx += plan.algorithms[ai].grid.size() * plan.seeds.size();
    return idx + r.config * plan.seeds.size() + s->second;
  }
};

inline std::string item_lines(const std::vector<ScoreRecord>& records) {
  std::string out;
  for (const auto& r : records) out += dump_json(record_to_json(r)) + "\n";
  return out;
}

// Complete items recovered from a possibly truncated log. Lines that do not
// parse, or items missing any metric, are dropped.
inline std::map<std::size_t, std::vector<ScoreRecord>> recover_log(const ExperimentPlan& plan, const fs::path& log) {
  std::map<std::size_t, std::vector<ScoreRecord>> items;
  if (!fs::exists(log)) return items;
  const ItemIndex index(plan);
  std::istringstream in(read_text(log));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ScoreRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const std::exception&) {
      continue;
    }
    const auto pos = index.locate(plan, r);
    if (!pos) continue;
    items[*pos].push_back(std::move(r));
  }
  for (auto it = items.begin(); it != items.end();) {
    std::vector<ScoreRecord> ordered(plan.metrics.size());
    std::vector<bool> seen(plan.metrics.size(), false);
    bool complete = true;
    for (auto& r : it->second) {
      const auto m = std::find(plan.metrics.begin(), plan.metrics.end(), r.metric);
      if (m == plan.metrics.end()) {
        complete = false;
        break;
      }
      const auto k = static_cast<std::size_t>(m - plan.metrics.begin());
      seen[k] = true;
      ordered[k] = std::move(r);
    }
    complete = complete && std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    if (complete) {
      it->second = std::move(ordered);
      ++it;
    } else {
      it = items.erase(it);
    }
  }
  return items;
}

}  // namespace detail

/// Runs every work item of the plan, appending each item's records to
/// out_dir/scores.jsonl as one block. With resume, complete items already in
/// the log are kept and skipped. Once all items are present the log is
/// rewritten in canonical order and scores.csv is produced.
inline std::pair<ScoreTable, RunStatus> run_grid_search(const ExperimentPlan& plan,
                                                        const std::vector<PreparedDataset>& data,
                                                        const RunOptions& opts) {
  const auto items = enumerate_work(plan);
  const fs::path log_path = opts.out_dir / "scores.jsonl";
  RunStatus status;
  status.items_total = items.size();

  std::map<std::size_t, std::vector<ScoreRecord>> done;
  if (opts.resume) done = detail::recover_log(plan, log_path);
  status.items_reused = done.size();
  {
    // Drop truncated or stale lines before appending.
    std::string clean;
    for (const auto& [pos, recs] : done) clean += detail::item_lines(recs);
    write_text(log_path, clean);
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!done.count(i)) pending.push_back(i);
  }
  std::size_t budget = pending.size();
  if (opts.stop_after) budget = std::min(budget, *opts.stop_after);

  std::mutex mutex;
  std::ofstream log(log_path, std::ios::binary | std::ios::app);
  if (!log) fail("cannot open '", log_path.string(), "' for appending");
  parallel_for(budget, worker_count(opts.workers), [&](std::size_t k) {
    const std::size_t pos = pending[k];
    auto recs = evaluate_item(plan, data, items[pos]);
    const std::string block = detail::item_lines(recs);
    std::lock_guard<std::mutex> lock(mutex);
    log << block;
    log.flush();
    ++status.items_run;
    if (opts.progress) {
      const auto& it = items[pos];
      opts.progress("[" + std::to_string(done.size() + 1) + "/" + std::to_string(items.size()) + "] " +
                    plan.datasets[it.dataset].name + " " + plan.algorithms[it.algorithm].name + " config " +
                    std::to_string(it.config) + " seed " + std::to_string(plan.seeds[it.seed]));
    }
    done.emplace(pos, std::move(recs));
  });
  log.close();

  ScoreTable table;
  for (const auto& [pos, recs] : done) {
    for (const auto& r : recs) {
      table.records.push_back(r);
      if (!r.ok) {
        status.failures.push_back(r.dataset + "/" + r.algorithm + "/" + std::to_string(r.config) + "/" +
                                  std::to_string(r.seed) + " " + r.metric + ": " + r.error);
      }
    }
  }
  status.complete = done.size() == items.size();
  if (status.complete) {
    write_text(log_path, detail::item_lines(table.records));
    write_text(opts.out_dir / "scores.csv", scores_csv(table.records));
  }
  return {std::move(table), std::move(status)};
}

inline ScoreTable read_score_table(const ExperimentPlan& plan, const fs::path& log) {
  ScoreTable t;
  for (auto& [pos, recs] : detail::recover_log(plan, log)) {
    for (auto& r : recs) t.records.push_back(std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Winner selection

inline double aggregate_values(std::vector<double> v, const std::string& how) {
  if (v.empty()) fail("aggregate of no values");
  if (how == "median") {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  }
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Best configuration for (dataset, algorithm, metric): per-config seeds are
/// aggregated (mean unless `how` says median), any failed seed makes the
/// config worst, and ties go to the earlier config.
inline std::size_t select_best(const ScoreTable& t, const std::string& dataset, const std::string& algorithm,
                               const std::string& metric, const std::string& how = "mean") {
  std::map<std::size_t, std::vector<double>> values;
  std::map<std::size_t, bool> failed;
  std::optional<Orientation> orientation;
  for (const auto& r : t.records) {
    if (r.dataset != dataset || r.algorithm != algorithm || r.metric != metric) continue;
    values[r.config].push_back(r.value);
    failed[r.config] = failed[r.config] || !r.ok;
    orientation = r.orientation;
  }
  if (values.empty()) fail("select_best: no records for ", dataset, "/", algorithm, "/", metric);
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (const auto& [cfg, v] : values) {
    const double score = failed[cfg] ? worst_value(*orientation) : aggregate_values(v, how);
    if (!best || better(*orientation, score, best_value)) {
      best = cfg;
      best_value = score;
    }
  }
  return *best;
}

inline fs::path winner_embedding_path(const fs::path& out_dir, const std::string& dataset,
                                      const std::string& algorithm, std::size_t config) {
  return out_dir / "embeddings" / (dataset + "__" + algorithm + "__c" + std::to_string(config) + ".csv");
}

/// For every (dataset, algorithm, metric) picks the winning configuration,
/// re-runs each distinct winner once with the plan's first seed, and scores
/// it with the dataset's Bayes metric. Winner embeddings are written under
/// out_dir/embeddings when out_dir is non-empty.
inline std::vector<BayesRecord> score_winners(const ExperimentPlan& plan, const std::vector<PreparedDataset>& data,
                                              const ScoreTable& t, const fs::path& out_dir,
                                              std::size_t workers = 0) {
  struct Winner {
    std::size_t dataset, algorithm, config;
  };
  std::vector<BayesRecord> records;
  std::vector<Winner> runs;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> run_of;
  std::vector<std::size_t> record_run;
  const std::uint64_t seed = plan.seeds.front();
  for (std::size_t d = 0; d < data.size(); ++d) {
    for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
      for (const auto& metric : plan.metrics) {
        const std::size_t cfg = select_best(t, data[d].spec.name, plan.algorithms[a].name, metric, plan.aggregate);
        const auto key = std::make_tuple(d, a, cfg);
        if (!run_of.count(key)) {
          run_of[key] = runs.size();
          runs.push_back({d, a, cfg});
        }
        BayesRecord r;
        r.dataset = data[d].spec.name;
        r.n = static_cast<std::size_t>(data[d].data.n());
        r.dataset_dim = data[d].data.dim();
        r.embedding_dim = plan.embedding_dim;
        r.algorithm = plan.algorithms[a].name;
        r.selected_by = metric;
        r.config = cfg;
        r.params = plan.algorithms[a].grid[cfg];
        r.seed = seed;
        r.bayes_metric = metric_info(data[d].bayes).key;
        r.orientation = orientation_of(data[d].bayes);
        records.push_back(std::move(r));
        record_run.push_back(run_of[key]);
      }
    }
  }

  struct Outcome {
    double value = 0.0;
    bool ok = true;
    std::string error;
  };
  std::vector<Outcome> outcomes(runs.size());
  parallel_for(runs.size(), worker_count(workers), [&](std::size_t i) {
    const auto& w = runs[i];
    const auto& d = data[w.dataset];
    const auto& algo = plan.algorithms[w.algorithm];
    Outcome& o = outcomes[i];
    try {
      const auto emb = run_reducer(algo.name, d.data, algo.grid[w.config], seed, plan.embedding_dim);
      require_finite(emb.points, algo.name.c_str());
      Evaluation ev(d.data.points, d.geometry, emb.points, d.data.labels);
      o.value = ev.evaluate(d.bayes).value;
      if (!out_dir.empty()) write_embedding(winner_embedding_path(out_dir, d.spec.name, algo.name, w.config), emb);
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
      o.value = worst_value(orientation_of(d.bayes));
    }
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& o = outcomes[record_run[i]];
    records[i].value = o.value;
    records[i].ok = o.ok;
    records[i].error = o.error;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Rank aggregation

struct PairRanks {
  std::string dataset;
  std::string algorithm;
  bool high_dim = false;
  std::vector<double> ranks;  // aligned with RankSummary::metrics
};

struct RankRow {
  std::string metric;
  std::optional<double> avg_2d;
  std::optional<double> avg_high_dim;
  double overall = 0.0;
};

struct RankSummary {
  std::vector<std::string> metrics;
  std::vector<PairRanks> pairs;
  std::vector<RankRow> rows;
};

/// Ranks the metrics 1..m within every (algorithm, dataset) pair by the Bayes
/// value of the configuration each metric selected (best = 1, ties share the
/// average rank), then averages within the 2D and high-dimensional groups.
/// The overall score is the mean of the group averages, or the only one present.
inline RankSummary rank_metrics(const std::vector<BayesRecord>& bayes) {
  RankSummary s;
  std::vector<std::pair<std::string, std::string>> pair_order;
  std::map<std::pair<std::string, std::string>, std::map<std::string, const BayesRecord*>> cells;
  for (const auto& r : bayes) {
    if (std::find(s.metrics.begin(), s.metrics.end(), r.selected_by) == s.metrics.end()) {
      s.metrics.push_back(r.selected_by);
    }
    const auto key = std::make_pair(r.dataset, r.algorithm);
    if (!cells.count(key)) pair_order.push_back(key);
    if (!cells[key].emplace(r.selected_by, &r).second) {
      fail("duplicate Bayes record for ", r.algorithm, "/", r.dataset, "/", r.selected_by);
    }
  }
  for (const auto& key : pair_order) {
    const auto& row = cells[key];
    std::vector<double> keyed(s.metrics.size());
    bool high = false;
    for (std::size_t m = 0; m < s.metrics.size(); ++m) {
      const auto it = row.find(s.metrics[m]);
      if (it == row.end()) {
        fail("missing Bayes record for ", key.second, "/", key.first, "/", s.metrics[m]);
      }
      const BayesRecord& r = *it->second;
      high = r.high_dim();
      const double v = r.ok ? r.value : worst_value(r.orientation);
      // Rank ascending on a key where smaller is better.
      keyed[m] = r.orientation == Orientation::minimize ? v : -v;
    }
    PairRanks p{key.first, key.second, high, average_ranks(keyed)};
    s.pairs.push_back(std::move(p));
  }
  for (std::size_t m = 0; m < s.metrics.size(); ++m) {
    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (const auto& p : s.pairs) {
      sum[p.high_dim ? 1 : 0] += p.ranks[m];
      ++count[p.high_dim ? 1 : 0];
    }
    RankRow row;
    row.metric = s.metrics[m];
    if (count[0]) row.avg_2d = sum[0] / static_cast<double>(count[0]);
    if (count[1]) row.avg_high_dim = sum[1] / static_cast<double>(count[1]);
    if (row.avg_2d && row.avg_high_dim) row.overall = (*row.avg_2d + *row.avg_high_dim) / 2.0;
    else row.overall = row.avg_2d ? *row.avg_2d : row.avg_high_dim.value_or(0.0);
    s.rows.push_back(std::move(row));
  }
  return s;
}

/// One RankSummary per plan seed, built from the grid-search records alone:
/// each metric's winner is chosen on that seed's scores and judged by the
/// Bayes value recorded for the same run. Requires "bayes" in the plan.
inline std::vector<RankSummary> seedwise_rank_summaries(const ExperimentPlan& plan,
                                                        const std::vector<PreparedDataset>& data,
                                                        const ScoreTable& t) {
  plan.metric_index(kBayesKey);
  std::vector<RankSummary> out;
  for (const auto seed : plan.seeds) {
    ScoreTable slice;
    std::map<std::tuple<std::string, std::string, std::size_t>, const ScoreRecord*> bayes_of;
    for (const auto& r : t.records) {
      if (r.seed != seed) continue;
      slice.records.push_back(r);
      if (r.metric == kBayesKey) bayes_of[{r.dataset, r.algorithm, r.config}] = &r;
    }
    std::vector<BayesRecord> records;
    for (const auto& d : data) {
      for (const auto& algo : plan.algorithms) {
        for (const auto& metric : plan.metrics) {
          const std::size_t cfg = select_best(slice, d.spec.name, algo.name, metric);
          const auto* b = bayes_of.at({d.spec.name, algo.name, cfg});
          BayesRecord r;
          r.dataset = d.spec.name;
          r.n = static_cast<std::size_t>(d.data.n());
          r.dataset_dim = d.data.dim();
          r.embedding_dim = plan.embedding_dim;
          r.algorithm = algo.name;
          r.selected_by = metric;
          r.config = cfg;
          r.params = algo.grid[cfg];
          r.seed = seed;
          r.bayes_metric = b->scored_as;
          r.value = b->value;
          r.orientation = b->orientation;
          r.ok = b->ok;
          records.push_back(std::move(r));
        }
      }
    }
    out.push_back(rank_metrics(records));
  }
  return out;
}

}  // namespace drbench
