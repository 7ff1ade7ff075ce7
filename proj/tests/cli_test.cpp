#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "drbench/drbench.hpp"

using namespace drbench;

namespace {

struct Run {
  int code;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DRBENCH_CLI + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "drbench_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '{') out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST(Cli, GenerateHdClusters) {
  const auto dir = scratch("gen_hd");
  const auto r = cli("generate --dataset hd-clusters --n 800 --seed 1 --out " + q(dir / "c.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto ps = read_pointset(dir / "c.csv");
  EXPECT_EQ(ps.n(), 800);
  EXPECT_EQ(ps.dim(), 4);
  ASSERT_TRUE(ps.labels);
  std::map<int, int> counts;
  for (int l : *ps.labels) ++counts[l];
  EXPECT_EQ(counts.size(), 16u);
  for (const auto& [label, c] : counts) EXPECT_EQ(c, 50) << label;
}

TEST(Cli, GenerateTrefoilAndRejectUnknown) {
  const auto dir = scratch("gen_tref");
  ASSERT_EQ(cli("generate --dataset trefoil --n 250 --out " + q(dir / "t.csv")).code, 0);
  const auto ps = read_pointset(dir / "t.csv");
  EXPECT_EQ(ps.n(), 250);
  EXPECT_EQ(ps.dim(), 2);
  const auto bad = cli("generate --dataset swiss-roll --out " + q(dir / "x.csv"));
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.out.find("unknown dataset"), std::string::npos);
  EXPECT_NE(bad.out.find("hd-clusters"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "x.csv"));
  EXPECT_NE(cli("generate --dataset trefoil").code, 0);
  EXPECT_NE(cli("frobnicate").code, 0);
}

TEST(Cli, EmbedWritesEmbeddingAndProvenance) {
  const auto dir = scratch("embed");
  ASSERT_EQ(cli("generate --dataset noisy-circles --n 60 --out " + q(dir / "c.csv")).code, 0);
  auto r = cli("embed --algo sammon --input " + q(dir / "c.csv") + " --params max_iter=50 --out " + q(dir / "s.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(load_external_embedding(dir / "s.csv", 60).dim(), 2);

  r = cli("embed --algo tsne --input " + q(dir / "c.csv") + " --params perplexity=30,iterations=50 --seed 3 --out " +
          q(dir / "t.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto side = json::parse(read_text(dir / "t.json"));
  EXPECT_EQ(side["params"]["perplexity"].get<double>(), 30.0);
  EXPECT_EQ(side["seed"], 3);

  r = cli("embed --algo tsne --input " + q(dir / "c.csv") + " --params perplexity=60 --out " + q(dir / "bad.csv"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("perplexity"), std::string::npos);
  EXPECT_NE(cli("embed --algo umap --input " + q(dir / "c.csv") + " --out " + q(dir / "u.csv")).code, 0);
}

TEST(Cli, ScoreIdentityEmbedding) {
  const auto dir = scratch("score");
  ASSERT_EQ(cli("generate --dataset three-gaussians --n 60 --out " + q(dir / "g.csv")).code, 0);
  const auto ps = read_pointset(dir / "g.csv");
  Embedding e;
  e.points = ps.points;
  write_embedding(dir / "same.csv", e);

  auto r = cli("score --input " + q(dir / "g.csv") + " --embedding " + q(dir / "same.csv") + " --metric all");
  ASSERT_EQ(r.code, 0) << r.out;
  std::map<std::string, double> v;
  for (const auto& j : json_lines(r.out)) v[j["metric"]] = j["value"].get<double>();
  EXPECT_EQ(v.at("qnx"), 1.0);
  EXPECT_EQ(v.at("local-error"), 0.0);
  EXPECT_EQ(v.at("spearman"), 1.0);
  EXPECT_LT(v.at("procrustes"), 1e-12);
  EXPECT_EQ(v.count("lcmc"), 0u);

  r = cli("score --input " + q(dir / "g.csv") + " --embedding " + q(dir / "same.csv") + " --metric qnx,entropy --k 5");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["k"], 5);
}

TEST(Cli, ScoreErrors) {
  const auto dir = scratch("score_err");
  ASSERT_EQ(cli("generate --dataset trefoil --n 30 --out " + q(dir / "t.csv")).code, 0);
  Embedding e;
  e.points = read_pointset(dir / "t.csv").points;
  write_embedding(dir / "e.csv", e);
  auto r = cli("score --input " + q(dir / "t.csv") + " --embedding " + q(dir / "e.csv") + " --metric 1nn");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("label"), std::string::npos);
  write_text(dir / "short.csv", "1,2\n3,4\n");
  r = cli("score --input " + q(dir / "t.csv") + " --embedding " + q(dir / "short.csv"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("expected 30"), std::string::npos) << r.out;
  EXPECT_NE(cli("score --input " + q(dir / "t.csv") + " --embedding " + q(dir / "e.csv") + " --metric nope").code, 0);
}

TEST(Cli, SearchRankReportAndResume) {
  const fs::path plan = fs::path(DRBENCH_SOURCE_DIR) / "data" / "plans" / "smoke.json";
  const auto a = scratch("search_a");
  const auto b = scratch("search_b");
  auto r = cli("search --quiet --plan " + q(plan) + " --out " + q(a));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Metric,2D Avg Rank,High Dim Avg Rank,Overall Avg"), std::string::npos);

  r = cli("search --quiet --plan " + q(plan) + " --out " + q(b) + " --stop-after 5");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("--resume"), std::string::npos);
  r = cli("search --quiet --resume --plan " + q(plan) + " --out " + q(b));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"scores.jsonl", "bayes.jsonl", "tables/table1.csv", "tables/table2.csv", "tables/table4.csv",
                        "tables/table1_seeds.csv"}) {
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }

  const auto table1 = read_text(a / "tables" / "table1.csv");
  r = cli("rank --out " + q(a));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find(table1), std::string::npos);

  fs::remove_all(a / "figures");
  ASSERT_EQ(cli("report --out " + q(a)).code, 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(a / "figures"), fs::directory_iterator{}),
            std::distance(fs::directory_iterator(b / "figures"), fs::directory_iterator{}));

  EXPECT_NE(cli("search --plan " + q(plan) + " --out " + q(a) + " --no-such-flag").code, 0);
  EXPECT_NE(cli("search --plan /nonexistent/plan.json --out " + q(a)).code, 0);
}
