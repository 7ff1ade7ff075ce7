#pragma once

#include "drbench/harness.hpp"
#include "drbench/report.hpp"

namespace drbench {

struct ExperimentResult {
  RunStatus status;
  ScoreTable scores;
  std::vector<BayesRecord> bayes;
  RankSummary summary;
  std::vector<RankSummary> per_seed;  // empty unless "bayes" is a plan metric
};

namespace detail {

inline void clear_generated(const fs::path& out_dir) {
  for (const char* sub : {"embeddings", "figures", "tables"}) fs::remove_all(out_dir / sub);
  for (const char* file : {"scores.jsonl", "scores.csv", "bayes.jsonl", "bayes.csv"}) fs::remove(out_dir / file);
}

inline std::string bayes_csv(const std::vector<BayesRecord>& records) {
  std::string out = "dataset,algorithm,selected_by,config,params,seed,bayes_metric,value,ok\n";
  for (const auto& r : records) {
    out += r.dataset + "," + r.algorithm + "," + r.selected_by + "," + std::to_string(r.config) + "," +
           csv_quote(r.params.to_string()) + "," + std::to_string(r.seed) + "," + r.bayes_metric + "," +
           format_double(r.value) + "," + (r.ok ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace detail

/// Writes every report artifact from persisted records: tables, the per-seed
/// rank table when available, and one SVG per winner embedding on disk.
inline void write_report(const fs::path& out_dir, const ExperimentPlan& plan, const std::vector<BayesRecord>& bayes,
                         const std::vector<RankSummary>& per_seed) {
  std::map<std::string, std::optional<std::vector<int>>> labels;
  for (const auto& d : plan.datasets) labels[d.name] = generate_dataset(d.name, d.n, d.seed, d.variant).labels;
  emit_report(
      out_dir, bayes,
      [&](const BayesRecord& r) -> std::optional<Embedding> {
        const auto path = winner_embedding_path(out_dir, r.dataset, r.algorithm, r.config);
        if (!fs::exists(path)) return std::nullopt;
        return load_external_embedding(path, r.n);
      },
      [&](const std::string& dataset) { return labels.count(dataset) ? labels.at(dataset) : std::nullopt; });
  if (!per_seed.empty()) write_text(out_dir / "tables" / "table1_seeds.csv", seed_table_csv(plan.seeds, per_seed));
}

/// Full protocol: grid search, winner re-runs scored by the Bayes metric,
/// rank aggregation and report. Stops after the grid phase when the run is
/// interrupted (opts.stop_after) so a later resume can finish it.
inline ExperimentResult run_experiment(const ExperimentPlan& plan, const RunOptions& opts) {
  const auto plan_text = dump_json(plan_to_json(plan), 2) + "\n";
  const auto snapshot = opts.out_dir / "plan.json";
  if (opts.resume && fs::exists(snapshot) && read_text(snapshot) != plan_text) {
    fail("--resume: plan differs from the one recorded in ", snapshot.string());
  }
  if (!opts.resume) detail::clear_generated(opts.out_dir);
  write_text(snapshot, plan_text);

  const auto data = prepare_datasets(plan);
  ExperimentResult result;
  auto [table, status] = run_grid_search(plan, data, opts);
  result.scores = std::move(table);
  result.status = std::move(status);
  if (!result.status.complete) return result;

  result.bayes = score_winners(plan, data, result.scores, opts.out_dir, opts.workers);
  write_text(opts.out_dir / "bayes.jsonl", bayes_jsonl(result.bayes));
  write_text(opts.out_dir / "bayes.csv", detail::bayes_csv(result.bayes));
  for (const auto& r : result.bayes) {
    if (!r.ok) {
      result.status.failures.push_back(r.dataset + "/" + r.algorithm + " winner for " + r.selected_by + ": " +
                                       r.error);
    }
  }
  result.summary = rank_metrics(result.bayes);
  if (std::find(plan.metrics.begin(), plan.metrics.end(), kBayesKey) != plan.metrics.end()) {
    result.per_seed = seedwise_rank_summaries(plan, data, result.scores);
  }
  write_report(opts.out_dir, plan, result.bayes, result.per_seed);
  return result;
}

}  // namespace drbench
