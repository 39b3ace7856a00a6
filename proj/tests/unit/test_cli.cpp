#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "cadkit/cli/cli.hpp"
#include "cadkit/code/parser.hpp"
#include "cadkit/graph/archive.hpp"
#include "generators.hpp"
#include "tempdir.hpp"

using namespace cadkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cadkit_run(std::vector<std::string> args) {
  args.insert(args.begin(), "cadkit");
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = cli::run(args);
  Result r{code, testing::internal::GetCapturedStdout(), testing::internal::GetCapturedStderr()};
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write_programs(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    testgen::write_file(dir / ("p" + std::to_string(i) + ".cadc"), code::serialize(testgen::single_extrusion(rng)));
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(cadkit_run({"--help"}).code, 0);
  EXPECT_EQ(cadkit_run({"exec", "--help"}).code, 0);
  // the installed binary too
  const std::string cmd = std::string("\"") + CADKIT_CLI_PATH + "\" --help > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cadkit_run({}).code, cli::kExitUsage);
  EXPECT_EQ(cadkit_run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(cadkit_run({"exec"}).code, cli::kExitUsage);
  const auto r = cadkit_run({"eval", "--gt", "a", "--pred", "b", "--cd-power", "3"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(count_lines(r.err), 1u);
}

TEST(Cli, DataErrorsExitTwo) {
  testgen::TempDir dir;
  testgen::write_file(dir / "bad.cadc", "sketch_0 = [ nonsense");
  const auto r = cadkit_run({"exec", (dir / "bad.cadc").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_EQ(count_lines(r.err), 1u);
  EXPECT_EQ(cadkit_run({"exec", (dir / "missing.cadc").string()}).code, cli::kExitData);
}

TEST(Cli, ExecSamplesCube) {
  testgen::TempDir dir;
  testgen::write_file(dir / "cube.cadc", code::serialize(testgen::unit_cube()));
  const auto r = cadkit_run({"exec", (dir / "cube.cadc").string(), "--sample", "8096", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string xyz = testgen::read_file(dir / "cube.xyz");
  EXPECT_EQ(count_lines(xyz), 8096u);
  std::istringstream in(xyz);
  double x, y, z;
  std::size_t n = 0;
  while (in >> x >> y >> z) {
    ++n;
    EXPECT_GE(x, -1e-12);
    EXPECT_LE(x, 1 + 1e-12);
  }
  EXPECT_EQ(n, 8096u);
  // same seed, same file
  ASSERT_EQ(cadkit_run({"exec", (dir / "cube.cadc").string(), "--sample", "8096", "--seed", "7", "-o",
                        (dir / "again.xyz").string()})
                .code,
            0);
  EXPECT_EQ(testgen::read_file(dir / "again.xyz"), xyz);
}

TEST(Cli, EvalIdentity) {
  testgen::TempDir dir;
  write_programs(dir / "g", 5, 61);
  const auto r = cadkit_run({"eval", "--gt", (dir / "g").string(), "--pred", (dir / "g").string(), "--n-points",
                             "1000", "-o", (dir / "report.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(testgen::read_file(dir / "report.json"));
  EXPECT_EQ(j["acc_cmd"], 1.0);
  EXPECT_EQ(j["cd_median_e3"], 0.0);
  EXPECT_EQ(j["invalid_ratio_pct"], 0.0);
  EXPECT_EQ(json::parse(r.out), j);
}

TEST(Cli, EvalMissingPredictionIsInvalid) {
  testgen::TempDir dir;
  write_programs(dir / "g", 4, 62);
  write_programs(dir / "p", 3, 62);
  const auto r = cadkit_run({"eval", "--gt", (dir / "g").string(), "--pred", (dir / "p").string(), "--n-points",
                             "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["invalid_ratio_pct"], 25.0);
}

TEST(Cli, ForgeCorruptDeterministic) {
  testgen::TempDir dir;
  write_programs(dir / "g", 6, 63);
  for (const char* name : {"a.jsonl", "b.jsonl"})
    ASSERT_EQ(cadkit_run({"forge", "corrupt", (dir / "g").string(), "--ratio", "0.5:0.8", "--seed", "1", "-o",
                          (dir / name).string()})
                  .code,
              0);
  const std::string a = testgen::read_file(dir / "a.jsonl");
  EXPECT_EQ(count_lines(a), 6u);
  EXPECT_EQ(a, testgen::read_file(dir / "b.jsonl"));
  ASSERT_EQ(cadkit_run({"forge", "corrupt", (dir / "g").string(), "--seed", "2", "-o", (dir / "c.jsonl").string()})
                .code,
            0);
  EXPECT_NE(a, testgen::read_file(dir / "c.jsonl"));
  EXPECT_EQ(cadkit_run({"forge", "corrupt", (dir / "g").string(), "--ratio", "0.9:0.2"}).code, cli::kExitUsage);
}

TEST(Cli, ForgeTasks) {
  testgen::TempDir dir;
  write_programs(dir / "g", 3, 64);
  json qs = json::array();
  for (int i = 0; i < 3; ++i)
    qs.push_back({{"brep_ref", "p" + std::to_string(i)},
                  {"question", "How many faces?"},
                  {"options", {"4", "5", "6", "7"}},
                  {"answer", "C"}});
  testgen::write_file(dir / "q.json", qs.dump());
  for (const char* task : {"reverse", "completion", "qa"}) {
    std::vector<std::string> args{"forge", task, (dir / "g").string(), "--seed", "4"};
    if (std::string(task) == "qa") args = {"forge", "qa", "--questions", (dir / "q.json").string()};
    const auto r = cadkit_run(args);
    ASSERT_EQ(r.code, 0) << task << ": " << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      const json j = json::parse(line);
      EXPECT_TRUE(j.contains("prompt"));
      ++n;
    }
    EXPECT_EQ(n, 3u) << task;
  }
}

TEST(Cli, ConvertRoundTrip) {
  testgen::TempDir dir;
  Rng rng(65);
  for (int i = 0; i < 5; ++i) {
    const std::string text = code::serialize(testgen::multi_extrusion(rng));
    testgen::write_file(dir / "p.cadc", text);
    ASSERT_EQ(cadkit_run({"convert", (dir / "p.cadc").string(), "-o", (dir / "p.json").string()}).code, 0);
    const json tokens = json::parse(testgen::read_file(dir / "p.json"));
    EXPECT_TRUE(tokens.contains("rows"));
    const auto back = cadkit_run({"convert", (dir / "p.json").string(), "--to", "code"});
    ASSERT_EQ(back.code, 0) << back.err;
    EXPECT_EQ(back.out, text);
  }
}

TEST(Cli, GraphArchive) {
  testgen::TempDir dir;
  testgen::write_file(dir / "cube.cadc", code::serialize(testgen::unit_cube()));
  const auto r = cadkit_run({"graph", (dir / "cube.cadc").string(), "--uv-res", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["edges"], 12);
  const auto a = graph::read_archive(dir / "cube.graph.json");
  EXPECT_EQ(a.at("node_grids").shape, (std::vector<std::size_t>{6, 6, 6, 7}));
  EXPECT_EQ(a.at("edge_index").shape, (std::vector<std::size_t>{12, 2}));
}

TEST(Cli, ConfigFileSetsFlags) {
  testgen::TempDir dir;
  testgen::write_file(dir / "cube.cadc", code::serialize(testgen::unit_cube()));
  testgen::write_file(dir / "cfg.json", R"({"sample": 100, "seed": 3})");
  ASSERT_EQ(cadkit_run({"--config", (dir / "cfg.json").string(), "exec", (dir / "cube.cadc").string()}).code, 0);
  const std::string from_cfg = testgen::read_file(dir / "cube.xyz");
  EXPECT_EQ(count_lines(from_cfg), 100u);
  ASSERT_EQ(cadkit_run({"exec", (dir / "cube.cadc").string(), "--sample", "100", "--seed", "3", "-o",
                        (dir / "flags.xyz").string()})
                .code,
            0);
  EXPECT_EQ(testgen::read_file(dir / "flags.xyz"), from_cfg);
  // command-line flags win over the file
  ASSERT_EQ(cadkit_run({"--config", (dir / "cfg.json").string(), "exec", (dir / "cube.cadc").string(), "--sample",
                        "50"})
                .code,
            0);
  EXPECT_EQ(count_lines(testgen::read_file(dir / "cube.xyz")), 50u);
  testgen::write_file(dir / "broken.json", "{");
  EXPECT_EQ(cadkit_run({"--config", (dir / "broken.json").string(), "exec", (dir / "cube.cadc").string()}).code,
            cli::kExitUsage);
}

TEST(Cli, AlignCheck) {
  const auto r = cadkit_run({"align", "check", "--trials", "2", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, AlignTrainWritesCheckpoint) {
  testgen::TempDir dir;
  write_programs(dir / "g", 3, 66);
  const auto r = cadkit_run({"align", "train", "--data", (dir / "g").string(), "-o", (dir / "ck.json").string(),
                             "--steps", "2", "--d-align", "16", "--d-node", "8", "--d-llm", "16", "--n-query-gen",
                             "4", "--heads", "2", "--grid-res", "4", "--loss-csv", (dir / "loss.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "ck.json"));
  EXPECT_EQ(count_lines(testgen::read_file(dir / "loss.csv")), 3u);  // header + 2 steps
  const auto s2 = cadkit_run({"align", "train", "--phase", "stage2", "--data", (dir / "g").string(), "--init",
                              (dir / "ck.json").string(), "-o", (dir / "ck2.json").string(), "--steps", "1"});
  EXPECT_EQ(s2.code, 0) << s2.err;
}
