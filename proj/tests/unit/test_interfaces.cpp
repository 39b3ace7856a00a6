// File-level interfaces consumed by external tooling: forge JSON Lines,
// report.json and tensor archives, all produced through the CLI.

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cadkit/align/checkpoint.hpp"
#include "cadkit/cli/cli.hpp"
#include "cadkit/code/parser.hpp"
#include "cadkit/forge/forge.hpp"
#include "cadkit/graph/archive.hpp"
#include "cadkit/metrics/metrics.hpp"
#include "generators.hpp"
#include "tempdir.hpp"

using namespace cadkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int quiet_run(std::vector<std::string> args) {
  args.insert(args.begin(), "cadkit");
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int code = cli::run(args);
  testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  return code;
}

void write_programs(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "s%03zu.cadc", i);
    testgen::write_file(dir / name, code::serialize(testgen::multi_extrusion(rng)));
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

TEST(Records, StreamMatchesRawJson) {
  testgen::TempDir dir;
  write_programs(dir / "g", 25, 71);
  std::string all;
  json qs = json::array();
  for (int i = 0; i < 25; ++i)
    qs.push_back({{"brep_ref", "s" + std::to_string(i)},
                  {"question", "Which operation comes last?"},
                  {"options", {"NewBody", "Join", "Cut", "Intersect"}},
                  {"answer", "A"}});
  testgen::write_file(dir / "q.json", qs.dump());
  for (const char* task : {"reverse", "completion", "corrupt", "qa"}) {
    const auto out = dir / (std::string(task) + ".jsonl");
    std::vector<std::string> args{"forge", task, (dir / "g").string(), "--seed", "9", "-o", out.string()};
    if (std::string(task) == "qa") args = {"forge", "qa", "--questions", (dir / "q.json").string(), "-o", out.string()};
    ASSERT_EQ(quiet_run(args), 0) << task;
    all += testgen::read_file(out);
  }
  testgen::write_file(dir / "all.jsonl", all);
  const auto raw = lines_of(all);
  ASSERT_EQ(raw.size(), 100u);

  std::ifstream in(dir / "all.jsonl");
  forge::RecordReader reader(in);
  std::size_t i = 0;
  while (auto rec = reader.next()) {
    ASSERT_LT(i, raw.size());
    const json j = json::parse(raw[i]);
    EXPECT_EQ(forge::to_string(rec->task), j["task"].get<std::string>());
    EXPECT_EQ(rec->brep_ref, j["brep_ref"].get<std::string>());
    EXPECT_EQ(rec->prompt, j["prompt"].get<std::string>());
    EXPECT_EQ(rec->target, j["target"].get<std::string>());
    if (j["input_code"].is_null())
      EXPECT_FALSE(rec->input_code.has_value());
    else
      EXPECT_EQ(rec->input_code, j["input_code"].get<std::string>());
    EXPECT_EQ(rec->meta, j["meta"]);
    EXPECT_EQ(rec->to_json(), j);
    ++i;
  }
  EXPECT_EQ(i, 100u);
  EXPECT_EQ(reader.line(), 100u);
}

TEST(Records, BadLineIsNamed) {
  testgen::TempDir dir;
  write_programs(dir / "g", 4, 72);
  ASSERT_EQ(quiet_run({"forge", "reverse", (dir / "g").string(), "-o", (dir / "r.jsonl").string()}), 0);
  auto lines = lines_of(testgen::read_file(dir / "r.jsonl"));
  lines[2] = lines[2].substr(0, lines[2].size() / 2);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::istringstream in(text);
  forge::RecordReader reader(in);
  ASSERT_TRUE(reader.next().has_value());
  ASSERT_TRUE(reader.next().has_value());
  try {
    reader.next();
    FAIL() << "truncated line accepted";
  } catch (const forge::ForgeError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Report, MatchesLibrary) {
  testgen::TempDir dir;
  write_programs(dir / "g", 6, 73);
  // predictions: a mix of exact, perturbed and broken programs
  fs::create_directories(dir / "p");
  Rng rng(74);
  std::size_t i = 0;
  std::vector<metrics::EvalPair> pairs;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "g")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string gt = testgen::read_file(f);
    std::string pred = gt;
    if (i % 3 == 1) pred = code::serialize(testgen::single_extrusion(rng));
    if (i % 3 == 2) pred = "sketch_0 = [";
    testgen::write_file(dir / "p" / f.filename(), pred);
    pairs.push_back({gt, pred});
    ++i;
  }
  ASSERT_EQ(quiet_run({"eval", "--gt", (dir / "g").string(), "--pred", (dir / "p").string(), "--n-points", "800",
                       "--seed", "5", "-o", (dir / "report.json").string()}),
            0);
  metrics::EvalConfig cfg;
  cfg.n_points = 800;
  cfg.seed = 5;
  const json lib = metrics::evaluate(pairs, cfg).to_json(cfg);
  const json cli = json::parse(testgen::read_file(dir / "report.json"));
  EXPECT_EQ(cli, lib);
  EXPECT_EQ(cli.dump(), lib.dump());
}

TEST(Report, DeltaOverride) {
  testgen::TempDir dir;
  fs::create_directories(dir / "g");
  fs::create_directories(dir / "p");
  const auto gt = testgen::box(20, 20, 200, 200, 255);
  const auto pred = testgen::box(22, 20, 200, 200, 255);  // two levels off on one coordinate
  testgen::write_file(dir / "g" / "a.cadc", code::serialize(gt));
  testgen::write_file(dir / "p" / "a.cadc", code::serialize(pred));
  json reports[2];
  const char* deltas[2] = {"3", "2"};
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("r" + std::to_string(k) + ".json");
    ASSERT_EQ(quiet_run({"eval", "--gt", (dir / "g").string(), "--pred", (dir / "p").string(), "--delta", deltas[k],
                         "--n-points", "300", "-o", out.string()}),
              0);
    reports[k] = json::parse(testgen::read_file(out));
  }
  EXPECT_EQ(reports[0]["config"]["delta"], 3);
  EXPECT_EQ(reports[1]["config"]["delta"], 2);
  EXPECT_EQ(reports[0]["acc_param"], 1.0);
  EXPECT_LT(reports[1]["acc_param"].get<double>(), 1.0);
}

TEST(Archive, GraphFromCliMatchesLibrary) {
  testgen::TempDir dir;
  Rng rng(75);
  const auto prog = testgen::multi_extrusion(rng);
  testgen::write_file(dir / "m.cadc", code::serialize(prog));
  ASSERT_EQ(quiet_run({"graph", (dir / "m.cadc").string(), "--uv-res", "5", "-o", (dir / "m.graph.json").string()}),
            0);
  const auto a = graph::read_archive(dir / "m.graph.json");
  const auto ref = graph::to_archive(graph::build_face_graph(geom::execute(prog), 5));
  for (const char* name : {"node_grids", "edge_index", "edge_grids"}) {
    EXPECT_EQ(a.at(name).shape, ref.at(name).shape) << name;
    ASSERT_EQ(a.at(name).data.size(), ref.at(name).data.size());
    for (std::size_t k = 0; k < ref.at(name).data.size(); ++k)
      ASSERT_EQ(static_cast<float>(a.at(name).data[k]), static_cast<float>(ref.at(name).data[k]));
  }
  const json header = json::parse(testgen::read_file(dir / "m.graph.json"));
  EXPECT_TRUE(header.is_object());
}

TEST(Archive, CheckpointTensorsReadable) {
  testgen::TempDir dir;
  write_programs(dir / "g", 2, 76);
  ASSERT_EQ(quiet_run({"align", "train", "--data", (dir / "g").string(), "-o", (dir / "ck.json").string(), "--steps",
                       "1", "--d-align", "16", "--d-node", "8", "--d-llm", "16", "--n-query-gen", "4", "--heads", "2",
                       "--grid-res", "4"}),
            0);
  const auto ck = align::read_checkpoint(dir / "ck.json");
  align::Model m(ck.config);
  align::load_parameters(m, ck);
  EXPECT_EQ(ck.config.d_align, 16u);
  const auto a = graph::read_archive(align::tensors_path_for(dir / "ck.json"));
  for (const auto& [name, t] : m.params().all()) {
    const auto& stored = a.at("param/" + name);
    EXPECT_EQ(stored.shape, t.shape()) << name;
    EXPECT_EQ(stored.data, t.data()) << name;
  }
}
