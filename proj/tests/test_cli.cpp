#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "bskpd/io.hpp"
#include "cli.hpp"
#include "test_util.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "bskpd");
  std::ostringstream out, err;
  const int code = bskpd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& s, const std::string& what) {
  return s.find(what) != std::string::npos;
}

}  // namespace

TEST(Cli, EndToEndPipeline) {
  const auto dir = testutil::scratch_dir("cli");
  const std::string data = (dir / "data").string();
  const std::string chain = (dir / "chain").string();
  const std::string manifest = (dir / "data" / "manifest.json").string();

  auto r = run({"simulate", "--out", data, "--n", "60", "--dims", "8,8,1", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "# simulate config:"));
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "c_true.bten"));

  std::ofstream(dir / "fit.json") << R"({"p": [4, 4, 1], "d": [2, 2, 1], "rank": 2,
    "iterations": 100, "burn_in": 40, "thin": 2, "seed": 5})";
  r = run({"fit", "--data", manifest, "--config", (dir / "fit.json").string(), "--out", chain,
           "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "loglik"));
  EXPECT_TRUE(std::filesystem::exists(dir / "chain" / "COMPLETE"));

  r = run({"summarize", "--chain", chain});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "y1 (continuous)"));
  EXPECT_TRUE(contains(r.out, "Sigma median"));

  const std::string preds = (dir / "pred.csv").string();
  r = run({"predict", "--chain", chain, "--data", manifest, "--out", preds});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "y1 RMSE"));
  const auto table = bskpd::read_csv(preds);
  EXPECT_EQ(table.rows.size(), 60u);
  EXPECT_NO_THROW(table.column("y2_prob"));

  r = run({"crossval", "--data", manifest, "--config", (dir / "fit.json").string(), "--folds",
           "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "y1 RMSE: "));
  EXPECT_TRUE(contains(r.out, " ± "));
  EXPECT_TRUE(contains(r.out, "y2 AUC: "));

  r = run({"export-maps", "--chain", chain, "--out", (dir / "maps").string(), "--axis", "3",
           "--slice", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "maps" / "y1_median_axis3_slice0.pgm"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"fit", "--bogus"}).code, bskpd::cli::kUsage);
  EXPECT_EQ(run({}).code, bskpd::cli::kUsage);
  EXPECT_EQ(run({"nonsense"}).code, bskpd::cli::kUsage);
}

TEST(Cli, DataErrorsMapToExitCode) {
  const auto dir = testutil::scratch_dir("cli_err");
  auto r = run({"summarize", "--chain", (dir / "nothing").string()});
  EXPECT_EQ(r.code, bskpd::cli::kDataError);
  EXPECT_FALSE(r.err.empty());

  ASSERT_EQ(run({"simulate", "--out", (dir / "d").string(), "--n", "10", "--dims", "6,6,1"}).code, 0);
  std::ofstream(dir / "bad.json") << R"({"p": [4, 4, 1], "d": [2, 2, 1]})";
  r = run({"fit", "--data", (dir / "d" / "manifest.json").string(), "--config",
           (dir / "bad.json").string(), "--out", (dir / "c").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "valid p x d splits"));
}

TEST(Cli, QuickSelftestPasses) {
  const auto r = run({"selftest", "--quick"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(contains(r.out, "selftest passed"));
}
