#include "cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using heisen::cli::execute;
using nlohmann::json;

namespace {

struct Invocation {
  int status;
  std::string out;
  std::string err;
};

Invocation run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = execute(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("heisen_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).status, 0);
  EXPECT_EQ(run({}).status, 2);
  EXPECT_EQ(run({"bogus"}).status, 2);
  EXPECT_EQ(run({"tile"}).status, 2);
  EXPECT_EQ(run({"group", "check", "--res", "16"}).status, 2);
  EXPECT_EQ(run({"group", "check", "--t", "0.4"}).status, 2);
  EXPECT_EQ(run({"group", "check", "--metric", "taxicab"}).status, 2);
  EXPECT_EQ(run({"dist", "pair", "--p", "1,2"}).status, 2);
  EXPECT_EQ(run({"group", "check", "--config", "/nonexistent/heisen.json"}).status, 2);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"seed": 3, "samples": 500, "tolerances": {"group": 1e-11}})";
  const Invocation r = run({"group", "check", "--config", (dir / "cfg.json").string(), "--samples", "700", "--out",
                     (dir / "out").string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const json report = json::parse(slurp(dir / "out" / "group_check.json"));
  EXPECT_EQ(report["config"]["seed"], 3);
  EXPECT_EQ(report["config"]["samples"], 700);
  EXPECT_EQ(report["config"]["tolerances"]["group"], 1e-11);
  EXPECT_EQ(report["verdict"], "pass");
  EXPECT_EQ(report["result"]["samples"], 700);

  std::ofstream(dir / "bad.json") << R"({"resolution": 64})";
  EXPECT_EQ(run({"group", "check", "--config", (dir / "bad.json").string()}).status, 2);
  std::ofstream(dir / "neg.json") << R"({"tolerances": {"nesting": -1}})";
  EXPECT_EQ(run({"group", "check", "--config", (dir / "neg.json").string()}).status, 2);
}

TEST(Cli, OutputsAreDeterministic) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(run({"dist", "estimate", "--samples", "150", "--seed", "4", "--out", dir.string()}).status, 0);
  }
  EXPECT_EQ(slurp(a / "dist_estimate.json"), slurp(b / "dist_estimate.json"));
  EXPECT_EQ(slurp(a / "dist_ratios.csv"), slurp(b / "dist_ratios.csv"));
  const std::string csv = slurp(a / "dist_ratios.csv");
  EXPECT_EQ(csv.substr(0, 12), "pair,ratio\r\n");

  const fs::path c = scratch("det_c");
  ASSERT_EQ(run({"dist", "estimate", "--samples", "150", "--seed", "5", "--out", c.string()}).status, 0);
  const json ja = json::parse(slurp(a / "dist_estimate.json"));
  const json jc = json::parse(slurp(c / "dist_estimate.json"));
  EXPECT_NE(ja["config_hash"], jc["config_hash"]);
}

TEST(Cli, DistPairReportsBothRoutes) {
  const fs::path dir = scratch("pair");
  const Invocation r = run({"dist", "pair", "--p", "0,0,0", "--q", "1,0,0", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const json report = json::parse(slurp(dir / "dist_pair.json"));
  EXPECT_NEAR(report["result"]["cc_exact"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(report["result"]["cc_shoot"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(report["result"]["cc_shoot_fell_back"], false);
}

TEST(Cli, TileBuildWritesDumpAndSidecar) {
  const fs::path dir = scratch("tile");
  const Invocation r = run({"tile", "build", "--res", "64", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "tile.hvox"));
  const json side = json::parse(slurp(dir / "tile.hvox.json"));
  EXPECT_EQ(side["format"], "HVOX");
  EXPECT_NEAR(side["measure"].get<double>(), 1.0, 1e-9);
  const Invocation v = run({"tile", "verify", "--input", (dir / "tile.hvox").string(), "--out", dir.string()});
  EXPECT_EQ(v.status, 0) << v.out << v.err;
  EXPECT_EQ(run({"tile", "verify", "--input", (dir / "missing.hvox").string(), "--out", dir.string()}).status, 1);
}

TEST(Cli, MraProjectWritesCoefficients) {
  const fs::path dir = scratch("mra");
  const Invocation r = run({"mra", "project", "--res", "32", "--test-res", "24", "--level", "0", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string csv = slurp(dir / "mra_coefficients.csv");
  EXPECT_EQ(csv.substr(0, csv.find("\r\n")), "level,gamma_m,gamma_n,gamma_k,coefficient");
}
