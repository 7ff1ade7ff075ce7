#include <gtest/gtest.h>

#include <filesystem>

#include "drbench/io.hpp"
#include "test_util.hpp"

using namespace drbench;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "drbench_io_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Io, EmbeddingRoundTrip) {
  Embedding e;
  e.points = testutil::random_points(17, 2, 1, 1e3);
  e.points(3, 1) = 1e-300;
  e.provenance.algorithm = "tsne";
  e.provenance.params.set("perplexity", 12.5);
  e.provenance.params.set("iterations", std::int64_t{400});
  e.provenance.seed = 9;
  const auto path = scratch("emb.csv");
  write_embedding(path, e);
  const auto back = load_external_embedding(path, 17);
  EXPECT_EQ((back.points - e.points).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(back.provenance.algorithm, "external");
  EXPECT_EQ(back.provenance.params, e.provenance.params);
  EXPECT_EQ(back.provenance.seed, 9u);
}

TEST(Io, WrongRowCountNamesBothCounts) {
  Embedding e;
  e.points = testutil::random_points(5, 2, 2);
  const auto path = scratch("short.csv");
  write_embedding(path, e);
  try {
    load_external_embedding(path, 6);
    FAIL() << "expected a mismatch";
  } catch (const DimensionMismatch& err) {
    const std::string msg = err.what();
    EXPECT_NE(msg.find("expected 6"), std::string::npos) << msg;
    EXPECT_NE(msg.find("found 5"), std::string::npos) << msg;
  }
}

TEST(Io, NanRowRejectedWithIndex) {
  const auto path = scratch("nan.csv");
  write_text(path, "1,2\n3,4\nnan,5\n");
  try {
    load_external_embedding(path, 3);
    FAIL() << "expected rejection";
  } catch (const Error& err) {
    EXPECT_NE(std::string(err.what()).find("row 2"), std::string::npos) << err.what();
  }
}

TEST(Io, PointSetRoundTripKeepsLabelsAndMeta) {
  const auto ps = gen_three_gaussians(30, 4);
  const auto path = scratch("gauss.csv");
  write_pointset(path, ps);
  const auto back = read_pointset(path);
  EXPECT_EQ((back.points - ps.points).cwiseAbs().maxCoeff(), 0.0);
  ASSERT_TRUE(back.labels);
  EXPECT_EQ(*back.labels, *ps.labels);
  EXPECT_EQ(back.generator, "three-gaussians");
  EXPECT_EQ(back.seed, 4u);
}

TEST(Io, RaggedCsvRejected) {
  const auto path = scratch("ragged.csv");
  write_text(path, "1,2\n3\n");
  EXPECT_THROW(detail::read_numeric_csv(path), Error);
}

TEST(Io, JsonRealsKeepFullPrecision) {
  EXPECT_EQ(dump_json(json(0.1)), "0.10000000000000001");
  EXPECT_EQ(dump_json(json(1.0)), "1.0");
  EXPECT_EQ(dump_json(json(2.0 / 3.0)), "0.66666666666666663");
  EXPECT_EQ(dump_json(json(1e300)), "1.0000000000000001e+300");
  EXPECT_EQ(dump_json(json{{"a", 3}, {"b", {1.5, "x"}}}), R"({"a":3,"b":[1.5,"x"]})");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(json::parse(dump_json(json(v))).get<double>(), v);
}
