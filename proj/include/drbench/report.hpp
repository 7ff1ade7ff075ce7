#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drbench/harness.hpp"

namespace drbench {

inline std::string algorithm_short_name(const std::string& a) {
  if (a == "lmds") return "LMDS";
  if (a == "tsne") return "tSNE";
  if (a == "sammon") return "Sammon";
  if (a == "pca") return "PCA";
  return a;
}

inline std::string algorithm_long_name(const std::string& a) {
  if (a == "lmds") return "Local MDS";
  if (a == "tsne") return "t-SNE";
  if (a == "sammon") return "Sammon Mapping";
  if (a == "pca") return "PCA";
  return a;
}

inline std::string dataset_display_name(const std::string& d) {
  if (d == "two-lines") return "2 Lines";
  if (d == "three-gaussians") return "3 Gaussians";
  if (d == "trefoil") return "Trefoil";
  if (d == "curved-xs") return "Xs";
  if (d == "noisy-circles") return "Circles";
  if (d == "hd-clusters") return "Clusters";
  return d;
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline std::string table1_csv(const RankSummary& s) {
  std::string out = "Metric,2D Avg Rank,High Dim Avg Rank,Overall Avg\n";
  for (const auto& r : s.rows) {
    out += csv_quote(metric_display_name(r.metric)) + "," + optional_cell(r.avg_2d) + "," +
           optional_cell(r.avg_high_dim) + "," + format_double(r.overall) + "\n";
  }
  return out;
}

/// Per-seed rank rows followed by the across-seed mean and sample standard
/// deviation of each metric's overall average.
inline std::string seed_table_csv(const std::vector<std::uint64_t>& seeds, const std::vector<RankSummary>& per_seed) {
  std::string out = "Metric,Seed,2D Avg Rank,High Dim Avg Rank,Overall Avg\n";
  if (per_seed.empty()) return out;
  const auto& metrics = per_seed.front().metrics;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    std::vector<double> overall;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
      const auto& r = per_seed[s].rows[m];
      out += csv_quote(metric_display_name(r.metric)) + "," + std::to_string(seeds[s]) + "," +
             optional_cell(r.avg_2d) + "," + optional_cell(r.avg_high_dim) + "," + format_double(r.overall) + "\n";
      overall.push_back(r.overall);
    }
    double mean = 0.0, var = 0.0;
    for (double v : overall) mean += v / static_cast<double>(overall.size());
    for (double v : overall) var += (v - mean) * (v - mean);
    const double sd = overall.size() > 1 ? std::sqrt(var / static_cast<double>(overall.size() - 1)) : 0.0;
    out += csv_quote(metric_display_name(metrics[m])) + ",mean,,," + format_double(mean) + "\n";
    out += csv_quote(metric_display_name(metrics[m])) + ",sd,,," + format_double(sd) + "\n";
  }
  return out;
}

// Algorithm x dataset rows with one column per selecting metric; the Bayes
// column is titled by the reference metric itself.
inline std::string winners_csv(const std::vector<BayesRecord>& bayes, bool high_dim, const std::string& bayes_title) {
  std::vector<std::string> metrics;
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> cells;
  for (const auto& r : bayes) {
    if (r.high_dim() != high_dim) continue;
    if (std::find(metrics.begin(), metrics.end(), r.selected_by) == metrics.end()) metrics.push_back(r.selected_by);
    const auto key = std::make_pair(r.algorithm, r.dataset);
    if (!cells.count(key)) rows.push_back(key);
    cells[key][r.selected_by] = r.value;
  }
  std::string out = "Algorithm,Data";
  for (const auto& m : metrics) out += "," + csv_quote(m == kBayesKey ? bayes_title : metric_display_name(m));
  out += "\n";
  for (const auto& key : rows) {
    out += csv_quote(algorithm_short_name(key.first)) + "," + csv_quote(dataset_display_name(key.second));
    for (const auto& m : metrics) {
      const auto it = cells[key].find(m);
      out += "," + (it == cells[key].end() ? std::string() : format_double(it->second));
    }
    out += "\n";
  }
  return out;
}

// Mean Procrustes distance per algorithm over every 2D winner.
inline std::string procrustes_summary_csv(const std::vector<BayesRecord>& bayes) {
  std::vector<std::string> algos;
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : bayes) {
    if (r.high_dim() || r.bayes_metric != "procrustes") continue;
    if (!acc.count(r.algorithm)) algos.push_back(r.algorithm);
    acc[r.algorithm].first += r.value;
    acc[r.algorithm].second += 1;
  }
  std::string out = "Method,Avg. Procrust. Dist.\n";
  for (const auto& a : algos) {
    out += csv_quote(algorithm_long_name(a)) + "," +
           format_double(acc[a].first / static_cast<double>(acc[a].second)) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG scatter plots

namespace detail {

inline const char* class_color(int label) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
                                  "#8c6d31", "#843c39", "#7b4173", "#3182bd"};
  const int k = ((label % 16) + 16) % 16;
  return palette[k];
}

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

}  // namespace detail

/// Self-contained scatter plot of the first two columns, colored by label.
inline std::string scatter_svg(const Matrix& points, const std::optional<std::vector<int>>& labels,
                               const std::string& title) {
  const double width = 480, height = 500, margin = 24, top = 44;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (points.rows() > 0) {
    xmin = points.col(0).minCoeff();
    xmax = points.col(0).maxCoeff();
    const Eigen::Index yc = points.cols() > 1 ? 1 : 0;
    ymin = points.col(yc).minCoeff();
    ymax = points.col(yc).maxCoeff();
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double plot = std::min(width - 2 * margin, height - top - margin);
  const double scale = plot / span;
  const double x0 = margin + (plot - (xmax - xmin) * scale) / 2;
  const double y0 = top + (plot - (ymax - ymin) * scale) / 2;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fixed2(width) + "\" height=\"" +
                    detail::fixed2(height) + "\" viewBox=\"0 0 " + detail::fixed2(width) + " " +
                    detail::fixed2(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fixed2(width / 2) +
         "\" y=\"26\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::xml_escape(title) + "</text>\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double px = x0 + (points(i, 0) - xmin) * scale;
    const double py = y0 + (ymax - points(i, points.cols() > 1 ? 1 : 0)) * scale;
    const char* color = labels ? detail::class_color((*labels)[static_cast<std::size_t>(i)]) : "#1f77b4";
    out += "<circle cx=\"" + detail::fixed2(px) + "\" cy=\"" + detail::fixed2(py) + "\" r=\"2.5\" fill=\"" + color +
           "\" fill-opacity=\"0.8\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline std::string figure_title(const BayesRecord& r) {
  char value[32];
  std::snprintf(value, sizeof(value), "%.4g", r.value);
  return algorithm_short_name(r.algorithm) + " on " + dataset_display_name(r.dataset) + ": " +
         metric_display_name(r.selected_by) + " | " + metric_info(parse_metric(r.bayes_metric)).display + " " +
         value;
}

inline fs::path figure_path(const fs::path& out_dir, const BayesRecord& r) {
  return out_dir / "figures" / (r.dataset + "__" + r.algorithm + "__" + r.selected_by + ".svg");
}

/// Writes tables/table1.csv (rank summary), table2.csv (high-dimensional
/// winners), table3.csv (mean Procrustes per method), table4.csv (2D winners)
/// and, when `embeddings` can supply a winner's points, one SVG per record.
inline void emit_report(const fs::path& out_dir, const std::vector<BayesRecord>& bayes,
                        const std::function<std::optional<Embedding>(const BayesRecord&)>& embeddings = {},
                        const std::function<std::optional<std::vector<int>>(const std::string&)>& labels = {}) {
  const auto summary = bayes.empty() ? RankSummary{} : rank_metrics(bayes);
  write_text(out_dir / "tables" / "table1.csv", table1_csv(summary));
  write_text(out_dir / "tables" / "table2.csv", winners_csv(bayes, true, "1-NN"));
  write_text(out_dir / "tables" / "table3.csv", procrustes_summary_csv(bayes));
  write_text(out_dir / "tables" / "table4.csv", winners_csv(bayes, false, "Procrustes"));
  if (!embeddings) return;
  for (const auto& r : bayes) {
    if (!r.ok) continue;
    const auto e = embeddings(r);
    if (!e) continue;
    write_text(figure_path(out_dir, r), scatter_svg(e->points, labels ? labels(r.dataset) : std::nullopt,
                                                    figure_title(r)));
  }
}

}  // namespace drbench
