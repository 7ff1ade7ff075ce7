// Acceptance runner: one PASS/FAIL line per criterion. Criteria 4-7 run the
// default plan three times (about ten minutes on one core).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "drbench/drbench.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drbench;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Verdict {
  int id;
  std::string name;
  bool pass;
  bool soft = false;
  std::string detail;
};

class Report {
 public:
  explicit Report(std::ostream& file) : file_(file) {}

  void line(const std::string& s) {
    std::cout << s << "\n" << std::flush;
    file_ << s << "\n" << std::flush;
  }

  void add(const Verdict& v) {
    verdicts_.push_back(v);
    const std::string tag = v.pass ? "PASS" : (v.soft ? "FAIL (soft)" : "FAIL");
    line("[" + tag + "] criterion " + std::to_string(v.id) + " " + v.name + ": " + v.detail);
  }

  int exit_code() const {
    for (const auto& v : verdicts_) {
      if (!v.pass && !v.soft) return 1;
    }
    return 0;
  }

 private:
  std::ostream& file_;
  std::vector<Verdict> verdicts_;
};

// Tracks the worst deviation seen for a named check.
struct Deviation {
  double worst = 0.0;
  std::string where;
  void see(double err, const std::string& at) {
    if (!(err <= worst)) {
      worst = err;
      where = at;
    }
  }
};

// ---------------------------------------------------------------------------
// 1. Identity suite

Verdict identity_suite() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream bad;
  auto check = [&](const std::string& where, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) {
      ok = false;
      bad << " " << where << "=" << format_double(got) << " (want " << format_double(want) << ")";
    }
  };
  for (const auto& name : dataset_names()) {
    // hd-clusters needs a multiple of 16 points.
    const auto ps = generate_dataset(name, name == "hd-clusters" ? 96 : 100, 1, "");
    const auto n = static_cast<std::size_t>(ps.n());
    const auto g = Geometry::of(ps.points);
    Evaluation ev(ps.points, g, ps.points, ps.labels);
    const auto& m = ev.coranking();
    const double nm1 = static_cast<double>(n - 1);
    for (std::size_t K = 1; K < n; ++K) {
      check(name + " Q_NX(" + std::to_string(K) + ")", q_nx(m, K).value, 1.0, 1e-12);
      check(name + " LCMC(" + std::to_string(K) + ")", lcmc(m, K).value, 1.0 - static_cast<double>(K) / nm1, 1e-12);
    }
    check(name + " qnx", ev.evaluate(MetricId::qnx).value, 1.0, 1e-12);
    check(name + " entropy", ev.evaluate(MetricId::entropy).value, std::log(nm1), 1e-10);
    check(name + " mi", ev.evaluate(MetricId::mutual_info).value, std::log(nm1), 1e-10);
    check(name + " local-error", ev.evaluate(MetricId::local_error).value, 0.0, 0.0);
    check(name + " spectral-overlap", ev.evaluate(MetricId::spectral_overlap).value, 1.0, 1e-12);
    check(name + " spearman", ev.evaluate(MetricId::spearman).value, 1.0, 1e-12);
    check(name + " procrustes", ev.evaluate(MetricId::procrustes).value, 0.0, 1e-9);
  }
  const double secs = seconds_since(t0);
  const bool fast = secs < 10.0;
  std::string detail = "6 datasets (n=100; three-gaussians 99, hd-clusters 96), runtime " + fmt("%.2f", secs) + " s (limit 10 s)";
  if (!ok) detail += "; mismatches:" + bad.str();
  return {1, "identity suite", ok && fast, false, detail};
}

// ---------------------------------------------------------------------------
// 2. Oracle suite

Verdict oracle_suite() {
  const auto t0 = Clock::now();
  Rng rng(2024, "acceptance-oracle");
  long long coranking_mismatch = 0;
  Deviation local, so_simple, so_weighted, qnx, nn;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 4 + rng.below(9);  // 4..12
    const std::size_t d = 1 + rng.below(4);
    const std::size_t p = 1 + rng.below(3);
    // Odd instances sit on a small integer lattice so distance ties occur.
    const bool lattice = inst % 2 == 1;
    auto draw = [&](std::size_t cols) {
      Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          m(i, j) = lattice ? static_cast<double>(rng.below(4)) : rng.normal();
      return m;
    };
    const Matrix x = draw(d);
    const Matrix y = draw(p);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(3));

    const auto hi = Geometry::of(x);
    const auto lo = Geometry::of(y);
    const auto m = coranking_matrix(hi.ranks, lo.ranks);

    const auto dx = oracle::distances(testutil::to_points(x));
    const auto dy = oracle::distances(testutil::to_points(y));
    const auto rx = oracle::ranks(dx);
    const auto ry = oracle::ranks(dy);
    const auto om = oracle::coranking(rx, ry);
    for (std::size_t k = 0; k + 1 < n; ++k)
      for (std::size_t l = 0; l + 1 < n; ++l) coranking_mismatch += m(k, l) != om[k][l];

    const std::string at = "instance " + std::to_string(inst) + " (n=" + std::to_string(n) + ")";
    const double le_ref = oracle::local_error(dx, dy, rx);
    local.see(std::abs(local_error(hi.distances, lo.distances, hi.ranks).value - le_ref) / std::max(1.0, le_ref), at);
    so_simple.see(std::abs(spectral_overlap_simple(hi.ranks, lo.ranks).value - oracle::spectral_overlap_simple(rx, ry)),
                  at);
    so_weighted.see(std::abs(spectral_overlap_weighted(m).value - oracle::spectral_overlap_weighted(dx, dy)), at);
    for (std::size_t K = 1; K < n; ++K) {
      qnx.see(std::abs(q_nx(m, K).value - oracle::qnx(dx, dy, K)), at + " K=" + std::to_string(K));
    }
    nn.see(std::abs(one_nn_accuracy(lo.ranks, labels).value - oracle::one_nn(ry, labels)), at);
  }
  const double secs = seconds_since(t0);
  const double tol = 1e-10;
  const bool ok = coranking_mismatch == 0 && local.worst <= tol && so_simple.worst <= tol &&
                  so_weighted.worst <= tol && qnx.worst <= tol && nn.worst <= tol;
  std::string detail = "50 instances n<=12: co-ranking cell mismatches " + std::to_string(coranking_mismatch) +
                       "; max |err| local error (relative) " + fmt("%.1e", local.worst) + ", SO simple " +
                       fmt("%.1e", so_simple.worst) + ", SO weighted " + fmt("%.1e", so_weighted.worst) +
                       ", Q_NX " + fmt("%.1e", qnx.worst) + ", 1-NN " + fmt("%.1e", nn.worst) + " (tol 1e-10); " +
                       "runtime " + fmt("%.2f", secs) + " s (limit 30 s)";
  return {2, "oracle suite", ok && secs < 30.0, false, detail};
}

// ---------------------------------------------------------------------------
// 3. Gradient suite

template <typename F>
double gradient_error(const F& f, const Matrix& y) {
  Matrix g;
  f.value_and_gradient(y, g);
  const double h = 1e-6;
  Matrix fd(y.rows(), y.cols());
  Matrix probe = y;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      probe(i, j) = y(i, j) + h;
      const double up = f.value(probe);
      probe(i, j) = y(i, j) - h;
      const double down = f.value(probe);
      probe(i, j) = y(i, j);
      fd(i, j) = (up - down) / (2 * h);
    }
  }
  return (g - fd).norm() / fd.norm();
}

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  Deviation sam, kl, lmds;
  for (std::uint64_t r = 1; r <= 10; ++r) {
    const std::string at = "restart " + std::to_string(r);
    {
      const Matrix x = testutil::random_points(20, 5, 100 + r);
      SammonStress f(pairwise_distances(x).values);
      sam.see(gradient_error(f, testutil::random_points(20, 2, 200 + r)), at);
    }
    {
      const Matrix x = testutil::random_points(15, 4, 300 + r);
      const auto bw = gaussian_conditionals(pairwise_distances(x), 5.0);
      // Even restarts check the early-exaggeration phase.
      TsneObjective f(joint_affinities(bw.conditional), r % 2 == 0 ? 12.0 : 1.0);
      kl.see(gradient_error(f, testutil::random_points(15, 2, 400 + r)), at);
    }
    {
      const auto g = Geometry::of(testutil::random_points(18, 4, 500 + r));
      LocalMdsStress f(g.distances, g.ranks, 2 + r % 5, 0.25 * static_cast<double>(r % 4 + 1));
      lmds.see(gradient_error(f, testutil::random_points(18, 2, 600 + r)), at);
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = sam.worst < 1e-4 && kl.worst < 1e-4 && lmds.worst < 1e-4;
  const std::string detail = "10 restarts, max relative error Sammon (n=20) " + fmt("%.1e", sam.worst) +
                             ", t-SNE KL (n=15) " + fmt("%.1e", kl.worst) + ", local MDS (n=18) " +
                             fmt("%.1e", lmds.worst) + " (tol 1e-4); runtime " + fmt("%.2f", secs) +
                             " s (limit 60 s)";
  return {3, "gradient suite", ok && secs < 60.0, false, detail};
}

// ---------------------------------------------------------------------------
// 4-7. Full plan runs

struct PlanRun {
  ExperimentResult result;
  double seconds = 0.0;
};

PlanRun run_plan(const ExperimentPlan& plan, const fs::path& dir, std::size_t workers, Report& report,
                 const std::string& label) {
  RunOptions opts;
  opts.out_dir = dir;
  opts.workers = workers;
  const auto t0 = Clock::now();
  PlanRun r{run_experiment(plan, opts), 0.0};
  r.seconds = seconds_since(t0);
  report.line("  run " + label + ": " + std::to_string(r.result.status.items_run) + " work items in " +
              fmt("%.1f", r.seconds) + " s, " + std::to_string(r.result.status.failures.size()) + " failures");
  return r;
}

Verdict procrustes_ordering(const PlanRun& run) {
  std::map<std::string, std::pair<double, int>> acc;
  std::set<std::string> datasets;
  for (const auto& r : run.result.bayes) {
    if (r.high_dim() || r.bayes_metric != "procrustes") continue;
    acc[r.algorithm].first += r.value;
    acc[r.algorithm].second += 1;
    datasets.insert(r.dataset);
  }
  std::string detail = "mean Procrustes over " + std::to_string(datasets.size()) + " 2D datasets:";
  std::map<std::string, double> mean;
  for (const auto& [a, s] : acc) {
    mean[a] = s.first / s.second;
    detail += " " + a + " " + fmt("%.4g", mean[a]);
  }
  bool ok = mean.count("sammon") && mean.count("tsne") && mean.count("lmds") && datasets.size() == 5;
  if (ok) ok = mean["sammon"] < mean["tsne"] && mean["sammon"] < mean["lmds"];
  detail += "; Sammon strictly lowest required; runtime " + fmt("%.0f", run.seconds) + " s (limit 1800 s)";
  return {4, "2D Procrustes ordering", ok && run.seconds < 1800.0, false, detail};
}

Verdict clusters_ordering(const PlanRun& run) {
  double tsne_best = -1.0, sammon_best = -1.0;
  for (const auto& r : run.result.bayes) {
    if (r.dataset != "hd-clusters" || r.bayes_metric != "1nn" || !r.ok) continue;
    if (r.algorithm == "tsne") tsne_best = std::max(tsne_best, r.value);
    if (r.algorithm == "sammon") sammon_best = std::max(sammon_best, r.value);
  }
  const bool ok = tsne_best >= 0.90 && sammon_best >= 0.0 && sammon_best <= 0.60;
  const std::string detail = "hd-clusters n=800: t-SNE best 1-NN " + fmt("%.4f", tsne_best) + " (need >= 0.90), Sammon 1-NN " +
                             fmt("%.4f", sammon_best) + " (need <= 0.60); runtime " + fmt("%.0f", run.seconds) +
                             " s (limit 1800 s)";
  return {5, "HD clusters ordering", ok && run.seconds < 1800.0, false, detail};
}

// 1-based place among non-Bayes metrics: one plus the number strictly better.
std::size_t place(const RankSummary& s, const std::string& metric) {
  double own = 0.0;
  for (const auto& r : s.rows) {
    if (r.metric == metric) own = r.overall;
  }
  std::size_t better = 0;
  for (const auto& r : s.rows) {
    if (r.metric != kBayesKey && r.overall < own) ++better;
  }
  return better + 1;
}

Verdict rank_structure(const PlanRun& run, Report& report) {
  const auto& s = run.result.summary;
  const std::size_t m = s.metrics.size();
  bool valid = !s.rows.empty() && !s.pairs.empty();
  for (const auto& p : s.pairs) {
    double sum = 0.0;
    for (double r : p.ranks) sum += r;
    valid = valid && std::abs(sum - static_cast<double>(m * (m + 1)) / 2.0) < 1e-9;
  }
  for (const auto& r : s.rows) {
    const double expect = r.avg_2d && r.avg_high_dim ? (*r.avg_2d + *r.avg_high_dim) / 2.0
                                                     : (r.avg_2d ? *r.avg_2d : *r.avg_high_dim);
    valid = valid && r.overall == expect;
  }

  double bayes_overall = 0.0;
  for (const auto& r : s.rows) {
    if (r.metric == kBayesKey) bayes_overall = r.overall;
  }
  bool bayes_best = true;
  for (const auto& r : s.rows) bayes_best = bayes_best && bayes_overall <= r.overall;

  const std::size_t others = m - 1;
  const std::size_t half = (others + 1) / 2;
  const std::size_t qnx_place = place(s, "qnx");
  const std::size_t so_place = place(s, "spectral-overlap");

  report.line("  rank summary (overall): " + [&] {
    std::string t;
    for (const auto& r : s.rows) t += metric_display_name(r.metric) + " " + fmt("%.3f", r.overall) + "; ";
    return t;
  }());
  // Seed-level view of the same pipeline.
  std::vector<double> qnx_places, so_places, bayes_gap;
  for (std::size_t i = 0; i < run.result.per_seed.size(); ++i) {
    const auto& ps = run.result.per_seed[i];
    double b = 0.0, best_other = 1e300;
    for (const auto& r : ps.rows) {
      if (r.metric == kBayesKey) b = r.overall;
      else best_other = std::min(best_other, r.overall);
    }
    qnx_places.push_back(static_cast<double>(place(ps, "qnx")));
    so_places.push_back(static_cast<double>(place(ps, "spectral-overlap")));
    bayes_gap.push_back(best_other - b);
    std::string t = "  seed index " + std::to_string(i) + ":";
    for (const auto& r : ps.rows) t += " " + r.metric + "=" + fmt("%.3f", r.overall);
    report.line(t);
  }
  auto mean_sd = [](const std::vector<double>& v) {
    if (v.empty()) return std::string("n/a");
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt("%.2f", mean) + " +/- " + fmt("%.2f", sd);
  };

  const bool ok = valid && bayes_best && qnx_place <= half && so_place <= half;
  std::string detail = std::string("valid summary ") + (valid ? "yes" : "NO") + "; Bayes row best " +
                       (bayes_best ? "yes" : "NO") + " (" + fmt("%.3f", bayes_overall) + "); Q_NX place " +
                       std::to_string(qnx_place) + ", Spectral Overlap place " + std::to_string(so_place) + " of " +
                       std::to_string(others) + " non-Bayes metrics (top half is <= " + std::to_string(half) +
                       "); per-seed place Q_NX " + mean_sd(qnx_places) + ", Spectral Overlap " + mean_sd(so_places) +
                       ", Bayes margin over best other " + mean_sd(bayes_gap);
  return {6, "rank summary structure", ok, true, detail};
}

std::vector<std::string> output_files(const fs::path& dir) {
  std::vector<std::string> files{"scores.jsonl", "scores.csv", "bayes.jsonl", "bayes.csv"};
  if (fs::exists(dir / "tables")) {
    for (const auto& e : fs::directory_iterator(dir / "tables")) files.push_back("tables/" + e.path().filename().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Verdict determinism(const ExperimentPlan& plan, const fs::path& root, const fs::path& a, Report& report) {
  const auto b = root / "run_b";
  const auto c = root / "run_c";
  run_plan(plan, b, 2, report, "B (2 workers)");

  RunOptions part;
  part.out_dir = c;
  part.workers = 1;
  const std::size_t total = enumerate_work(plan).size();
  part.stop_after = total / 2;
  const auto t0 = Clock::now();
  const auto first = run_experiment(plan, part);
  // Leave a torn line behind, as a killed process would.
  std::ofstream(c / "scores.jsonl", std::ios::app) << "{\"dataset\":\"two-li";
  part.stop_after.reset();
  part.resume = true;
  const auto second = run_experiment(plan, part);
  report.line("  run C (interrupted after " + std::to_string(first.status.items_run) + " of " +
              std::to_string(total) + " items, then resumed): " + std::to_string(second.status.items_reused) +
              " reused, " + std::to_string(second.status.items_run) + " run in " + fmt("%.1f", seconds_since(t0)) +
              " s");

  std::size_t compared = 0;
  std::vector<std::string> differ;
  for (const auto& f : output_files(a)) {
    ++compared;
    const auto ta = fs::exists(a / f) ? read_text(a / f) : std::string("<missing>");
    for (const auto& other : {b, c}) {
      const auto to = fs::exists(other / f) ? read_text(other / f) : std::string("<missing>");
      if (ta != to) differ.push_back(other.filename().string() + "/" + f);
    }
  }
  const bool ok = !first.status.complete && second.status.complete && differ.empty() && compared > 4;
  std::string detail = std::to_string(compared) + " files (score logs and tables) compared across runs A, B and C: ";
  if (differ.empty()) {
    detail += "all byte-identical";
  } else {
    detail += "differ:";
    for (const auto& d : differ) detail += " " + d;
  }
  return {7, "determinism and resume", ok, false, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string plan_path = std::string(DRBENCH_SOURCE_DIR) + "/data/plans/default.json";
  std::string out = "acceptance_runs";
  bool quick = false;
  app.add_option("--plan", plan_path, "Plan used for criteria 4-7");
  app.add_option("--out", out, "Scratch directory for the plan runs");
  app.add_flag("--quick", quick, "Only criteria 1-3");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out);
  std::ofstream file(fs::path(out) / "acceptance_report.txt");
  Report report(file);
  try {
    report.add(identity_suite());
    report.add(oracle_suite());
    report.add(gradient_suite());
    if (!quick) {
      const auto plan = load_plan(plan_path);
      const auto a = run_plan(plan, fs::path(out) / "run_a", 0, report, "A");
      report.add(procrustes_ordering(a));
      report.add(clusters_ordering(a));
      report.add(rank_structure(a, report));
      report.add(determinism(plan, out, fs::path(out) / "run_a", report));
    }
  } catch (const std::exception& e) {
    report.line(std::string("[FAIL] aborted: ") + e.what());
    return 1;
  }
  return report.exit_code();
}
