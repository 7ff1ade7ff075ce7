#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drbench/drbench.hpp"

using namespace drbench;

namespace {

int cmd_generate(const std::string& dataset, std::size_t n, std::uint64_t seed, const std::string& variant,
                 const std::string& out) {
  const auto ps = generate_dataset(dataset, n == 0 ? default_dataset_size(dataset) : n, seed, variant);
  write_pointset(out, ps);
  std::cerr << "wrote " << ps.n() << "x" << ps.dim() << " points to " << out << "\n";
  return 0;
}

int cmd_embed(const std::string& algo, const std::string& input, const std::string& params, std::uint64_t seed,
              Eigen::Index dim, const std::string& out) {
  const auto ps = read_pointset(input);
  const auto e = run_reducer(algo, ps, parse_params(params), seed, dim);
  write_embedding(out, e);
  std::cerr << algo << ": objective " << format_double(e.provenance.objective) << " after "
            << e.provenance.iterations << " iterations\n";
  return 0;
}

int cmd_score(const std::string& input, const std::string& embedding, const std::string& metrics,
              std::optional<std::size_t> k) {
  const auto ps = read_pointset(input);
  const auto emb = load_external_embedding(embedding, static_cast<std::size_t>(ps.n()));
  const auto geo = Geometry::of(ps.points);
  Evaluation ev(ps.points, geo, emb.points, ps.labels);

  std::vector<MetricId> ids;
  if (metrics == "all") {
    for (const auto& m : metric_catalog()) {
      if (m.id == MetricId::lcmc && !k) continue;
      if (ev.applicable(m.id)) ids.push_back(m.id);
    }
  } else {
    std::size_t start = 0;
    while (start <= metrics.size()) {
      const auto end = std::min(metrics.find(',', start), metrics.size());
      const auto id = parse_metric(metrics.substr(start, end - start));
      if (id == MetricId::one_nn && !ps.labels) fail("1nn: '", input, "' has no label column");
      if (id == MetricId::procrustes && !ev.applicable(id)) {
        fail<DimensionMismatch>("procrustes: input has ", ps.dim(), " columns but the embedding has ", emb.dim());
      }
      ids.push_back(id);
      start = end + 1;
    }
  }
  for (const auto id : ids) {
    const auto s = ev.evaluate(id, k);
    json j;
    j["metric"] = metric_info(id).key;
    j["display"] = metric_info(id).display;
    j["value"] = s.value;
    j["orientation"] = orientation_name(s.orientation);
    if (s.k) j["k"] = *s.k;
    for (const auto& [name, v] : s.aux) j[name] = v;
    std::cout << dump_json(j) << "\n";
  }
  return 0;
}

void report_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "failed: " << f << "\n";
}

int cmd_search(const std::string& plan_path, const std::string& out, bool resume,
               std::optional<std::size_t> stop_after, std::size_t workers, bool quiet) {
  const auto plan = load_plan(plan_path);
  RunOptions opts;
  opts.out_dir = out;
  opts.resume = resume;
  opts.stop_after = stop_after;
  opts.workers = workers;
  if (!quiet) opts.progress = [](const std::string& line) { std::cerr << line << "\n"; };
  const auto result = run_experiment(plan, opts);
  report_failures(result.status.failures);
  if (!result.status.complete) {
    std::cerr << "stopped with " << result.status.items_reused + result.status.items_run << " of "
              << result.status.items_total << " work items done; rerun with --resume to finish\n";
    return 2;
  }
  std::cout << table1_csv(result.summary);
  return result.status.failures.empty() ? 0 : 1;
}

int cmd_rank(const std::string& out) {
  const auto bayes = read_bayes_log(fs::path(out) / "bayes.jsonl");
  const auto summary = rank_metrics(bayes);
  write_text(fs::path(out) / "tables" / "table1.csv", table1_csv(summary));
  std::cout << table1_csv(summary);
  return 0;
}

int cmd_report(const std::string& out) {
  const fs::path dir(out);
  const auto plan = load_plan(dir / "plan.json");
  const auto bayes = read_bayes_log(dir / "bayes.jsonl");
  std::vector<RankSummary> per_seed;
  if (std::find(plan.metrics.begin(), plan.metrics.end(), kBayesKey) != plan.metrics.end() &&
      fs::exists(dir / "scores.jsonl")) {
    const auto table = read_score_table(plan, dir / "scores.jsonl");
    if (table.records.size() == enumerate_work(plan).size() * plan.metrics.size()) {
      per_seed = seedwise_rank_summaries(plan, prepare_datasets(plan), table);
    }
  }
  write_report(dir, plan, bayes, per_seed);
  std::cerr << "report written to " << (dir / "tables").string() << " and " << (dir / "figures").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark dimensionality-reduction quality metrics against Bayes-error references"};
  app.require_subcommand(1);

  std::string dataset, out, variant, algo, input, params, embedding, metrics = "all", plan;
  std::size_t n = 0, workers = 0;
  std::uint64_t seed = 1;
  Eigen::Index dim = 2;
  std::optional<std::size_t> k, stop_after;
  bool resume = false, quiet = false;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset as CSV plus a JSON sidecar");
  gen->add_option("--dataset", dataset, "two-lines, three-gaussians, trefoil, curved-xs, noisy-circles, hd-clusters")
      ->required();
  gen->add_option("--n", n, "Number of points (default 250, or 800 for hd-clusters)");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--variant", variant, "two-lines only: formula or lines");
  gen->add_option("--out", out, "Output CSV path")->required();

  auto* emb = app.add_subcommand("embed", "Embed a dataset CSV with one reducer");
  emb->add_option("--algo", algo, "pca, sammon, tsne or lmds")->required();
  emb->add_option("--input", input, "Dataset CSV")->required();
  emb->add_option("--params", params, "Hyperparameters as name=value,name=value");
  emb->add_option("--seed", seed, "Random seed");
  emb->add_option("--dim", dim, "Target dimension");
  emb->add_option("--out", out, "Output embedding CSV")->required();

  auto* score = app.add_subcommand("score", "Score an embedding against its source; JSON lines on stdout");
  score->add_option("--input", input, "Dataset CSV")->required();
  score->add_option("--embedding", embedding, "Embedding CSV (n rows, no header)")->required();
  score->add_option("--metric", metrics, "Comma-separated metric keys, or all");
  score->add_option("--k", k, "Neighborhood size for qnx and lcmc");

  auto* search = app.add_subcommand("search", "Run a plan: grid search, winner re-runs, ranks and report");
  search->add_option("--plan", plan, "Plan JSON")->required();
  search->add_option("--out", out, "Output directory")->required();
  search->add_flag("--resume", resume, "Continue from a partial score log in --out");
  search->add_option("--stop-after", stop_after, "Stop after this many work items (for testing resume)");
  search->add_option("--workers", workers, "Worker threads (default: DRBENCH_WORKERS or all cores)");
  search->add_flag("--quiet", quiet, "No progress lines");

  auto* rank = app.add_subcommand("rank", "Recompute the rank summary from a finished run's Bayes records");
  rank->add_option("--out", out, "Run directory")->required();

  auto* report = app.add_subcommand("report", "Re-emit tables and figures from a finished run");
  report->add_option("--out", out, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  auto unknown = [](CLI::App* sub, const std::string& what, const std::string& name) {
    std::cerr << "error: unknown " << what << " '" << name << "'\n\n" << sub->help();
    return 1;
  };
  if (*gen && std::find(dataset_names().begin(), dataset_names().end(), dataset) == dataset_names().end()) {
    return unknown(gen, "dataset", dataset);
  }
  if (*emb && std::find(reducer_names().begin(), reducer_names().end(), algo) == reducer_names().end()) {
    return unknown(emb, "algorithm", algo);
  }

  try {
    if (*gen) return cmd_generate(dataset, n, seed, variant, out);
    if (*emb) return cmd_embed(algo, input, params, seed, dim, out);
    if (*score) return cmd_score(input, embedding, metrics, k);
    if (*search) return cmd_search(plan, out, resume, stop_after, workers, quiet);
    if (*rank) return cmd_rank(out);
    if (*report) return cmd_report(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
