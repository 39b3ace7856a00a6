#include <gtest/gtest.h>

#include <cmath>

#include "cadkit/code/parser.hpp"
#include "cadkit/geom/sampling.hpp"
#include "cadkit/metrics/metrics.hpp"
#include "generators.hpp"

using namespace cadkit;
using namespace cadkit::metrics;
using code::CommandType;
using code::TokenRow;
using code::TokenSequence;
using geom::PointCloud;
using geom::Vec3;

namespace {

TokenRow row(CommandType t, std::initializer_list<std::pair<int, int>> slots) {
  TokenRow r(t);
  for (auto [s, v] : slots) r.params[s] = v;
  return r;
}

TokenRow line(int x, int y) { return row(CommandType::Line, {{code::kX, x}, {code::kY, y}}); }
TokenRow arc(int x, int y) {
  return row(CommandType::Arc, {{code::kX, x}, {code::kY, y}, {code::kSweep, 64}, {code::kCcw, 1}});
}
TokenRow circle(int x, int y, int r) {
  return row(CommandType::Circle, {{code::kX, x}, {code::kY, y}, {code::kRadius, r}});
}

PointCloud random_cloud(Rng& rng, std::size_t n) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({uniform01(rng), uniform01(rng), uniform01(rng)});
  return c;
}

std::string program_text(const code::Program& p) { return code::serialize(p); }

code::ExtrudeParams plain_extrude(code::SketchId id) {
  code::ExtrudeParams e;
  e.sketch = id;
  e.origin = {128, 128, 128};
  e.scale = 255;
  e.distances = {255, 128};
  return e;
}

}  // namespace

TEST(AccCmd, Identity) {
  const TokenSequence s{{line(1, 2), arc(3, 4), circle(5, 6, 7)}};
  EXPECT_EQ(acc_cmd(s, s), 1.0);
}

TEST(AccCmd, OneWrongType) {
  const TokenSequence gt{{line(1, 1), line(2, 2), arc(3, 3), circle(4, 4, 4)}};
  const TokenSequence pred{{line(1, 1), line(2, 2), line(3, 3), circle(4, 4, 4)}};
  EXPECT_EQ(acc_cmd(gt, pred), 0.75);
}

TEST(AccCmd, ShortPredictionIsPadded) {
  const TokenSequence gt{{line(1, 1), line(2, 2), arc(3, 3), circle(4, 4, 4)}};
  const TokenSequence pred{{line(1, 1), line(2, 2)}};
  EXPECT_EQ(acc_cmd(gt, pred), 0.5);
  EXPECT_EQ(acc_cmd(pred, gt), 0.5);
  EXPECT_EQ(command_tally(gt, pred).total, 4u);
}

TEST(AccParam, Identity) {
  const TokenSequence s{{line(1, 2), arc(3, 4), circle(5, 6, 7)}};
  const auto a = acc_param(s, s);
  EXPECT_EQ(a.value, 1.0);
  EXPECT_EQ(a.slots, 2u + 4u + 3u);
}

TEST(AccParam, Tolerance) {
  const TokenSequence gt{{line(100, 100)}};
  const auto off5 = acc_param(gt, TokenSequence{{line(105, 100)}}, 3);
  EXPECT_EQ(off5.value, 0.5);
  EXPECT_EQ(off5.slots, 2u);
  EXPECT_EQ(acc_param(gt, TokenSequence{{line(102, 100)}}, 3).value, 1.0);
  // strict: exactly delta levels away is wrong
  EXPECT_EQ(acc_param(gt, TokenSequence{{line(103, 100)}}, 3).value, 0.5);
  // a type mismatch loses every slot of that command
  EXPECT_EQ(acc_param(gt, TokenSequence{{arc(100, 100)}}, 3).value, 0.0);
}

TEST(AccParam, UndefinedWithoutSlots) {
  const TokenSequence empty;
  const auto a = acc_param(empty, TokenSequence{{line(1, 1)}});
  EXPECT_FALSE(a.defined);
  EXPECT_EQ(a.value, 1.0);
  EXPECT_EQ(a.slots, 0u);
}

TEST(Chamfer, IdentityIsExactlyZero) {
  Rng rng(51);
  const auto p = random_cloud(rng, 1000);
  EXPECT_EQ(chamfer(p, p), 0.0);
}

TEST(Chamfer, SinglePoint) {
  PointCloud p, q;
  p.points = {{0, 0, 0}};
  q.points = {{0.1, 0, 0}};
  EXPECT_NEAR(chamfer(p, q), 0.02, 1e-12);
  EXPECT_NEAR(chamfer(p, q, 1), 0.2, 1e-12);
  Rng rng(52);
  for (int i = 0; i < 50; ++i) {
    const double t = uniform01(rng);
    q.points = {{0, 0, t}};
    EXPECT_NEAR(chamfer(p, q), 2 * t * t, 1e-12);
  }
}

TEST(Chamfer, IndexMatchesBruteForce) {
  Rng rng(53);
  for (int i = 0; i < 30; ++i) {
    const auto p = random_cloud(rng, 1 + draw_below(rng, 700));
    const auto q = random_cloud(rng, 1 + draw_below(rng, 700));
    for (int power : {1, 2}) EXPECT_NEAR(chamfer(p, q, power), chamfer_bruteforce(p, q, power), 1e-9);
  }
}

TEST(Chamfer, Symmetric) {
  Rng rng(54);
  const auto p = random_cloud(rng, 300), q = random_cloud(rng, 500);
  EXPECT_EQ(chamfer(p, q), chamfer(q, p));
}

TEST(Chamfer, OffsetCubes) {
  const auto s = geom::execute(testgen::unit_cube());
  const auto p = geom::sample_surface(s, 2000, 1);
  auto q = p;
  for (auto& x : q.points) x = x + Vec3{0.05, 0, 0};
  EXPECT_NEAR(chamfer(p, q), chamfer_bruteforce(p, q), 1e-9);
  EXPECT_GT(chamfer(p, q), 0.0);
}

TEST(Chamfer, EmptyCloudThrows) {
  PointCloud p, q;
  q.points = {{0, 0, 0}};
  EXPECT_THROW(chamfer(p, q), MetricsError);
}

TEST(Validity, InvalidRatioCounts) {
  const std::string good = program_text(testgen::unit_cube());
  EXPECT_EQ(invalid_ratio({good, good, good}), 0.0);
  EXPECT_EQ(invalid_ratio({good, good, good, "sketch_0 = [\n"}), 0.25);
  EXPECT_EQ(check_program("not code").stage, "parse");
  EXPECT_TRUE(check_program(good).valid);
}

TEST(Validity, StagesReported) {
  testgen::ProgramBuilder b;
  const auto id = b.sketch();
  b.loop(id, code::Point2q{0, 0});
  b.line(id, 100, 0);
  b.line(id, 100, 100);
  b.extrude(plain_extrude(id));
  EXPECT_EQ(check_program(program_text(b.p)).stage, "validate");

  testgen::ProgramBuilder c;
  testgen::add_box(c, {64, 64, 192, 192, 128, 200}, code::BoolOp::NewBody);
  testgen::add_box(c, {0, 0, 255, 255, 100, 255}, code::BoolOp::Cut);
  EXPECT_EQ(check_program(program_text(c.p)).stage, "execute");
}

TEST(Ambiguity, Counting) {
  const auto none = ambiguity_stats(std::vector<AmbiguitySample>(5, {0.0, 1.0}));
  ASSERT_EQ(none.below.size(), 2u);
  EXPECT_EQ(none.below[0], 0.0);
  EXPECT_EQ(none.below[1], 0.0);

  std::vector<AmbiguitySample> r(10, {0.001, 1.0});
  r[3].acc_cmd = 0.85;
  r[7].acc_cmd = 0.5;
  r.push_back({0.5, 0.1});  // above the CD threshold: ignored
  const auto s = ambiguity_stats(r);
  EXPECT_EQ(s.low_cd_count, 10u);
  EXPECT_DOUBLE_EQ(*s.below[0], 0.2);
  EXPECT_DOUBLE_EQ(*s.below[1], 0.1);

  const auto empty = ambiguity_stats({{1.0, 0.2}});
  EXPECT_FALSE(empty.below[0].has_value());
}

TEST(Median, OrderInvariant) {
  std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(median(v), 3.0);
  std::vector<double> w{4, 1, 3, 2};
  EXPECT_EQ(median(w), 2.5);
  Rng rng(55);
  std::vector<double> x(101);
  for (auto& d : x) d = uniform01(rng);
  const double m = median(x);
  for (int i = 0; i < 10; ++i) {
    shuffle(rng, x);
    EXPECT_EQ(median(x), m);
  }
}

TEST(Evaluate, LoopSwapLowersAccuracyButNotGeometry) {
  // plate with a hole, written hole-first in the prediction
  testgen::ProgramBuilder g, p;
  const auto a = g.sketch();
  g.rect(a, 20, 20, 230, 230);
  g.circle(a, 125, 125, 40);
  g.extrude(plain_extrude(a));
  const auto b = p.sketch();
  p.circle(b, 125, 125, 40);
  p.rect(b, 20, 20, 230, 230);
  p.extrude(plain_extrude(b));

  EvalConfig cfg;
  cfg.n_points = 2000;
  const auto r = evaluate_pair({program_text(g.p), program_text(p.p)}, cfg, 3);
  EXPECT_LT(r.commands.fraction(), 1.0);
  ASSERT_TRUE(r.cd.has_value());
  EXPECT_EQ(*r.cd, 0.0);
}

TEST(Evaluate, IdentityReport) {
  Rng rng(56);
  std::vector<EvalPair> pairs;
  for (int i = 0; i < 6; ++i) {
    const auto t = program_text(testgen::single_extrusion(rng));
    pairs.push_back({t, t});
  }
  EvalConfig cfg;
  cfg.n_points = 1000;
  const auto rep = evaluate(pairs, cfg);
  EXPECT_EQ(rep.acc_cmd, 1.0);
  EXPECT_EQ(rep.acc_param, 1.0);
  ASSERT_TRUE(rep.cd_median.has_value());
  EXPECT_EQ(*rep.cd_median, 0.0);
  EXPECT_EQ(rep.invalid_ratio, 0.0);
  const auto j = rep.to_json(cfg);
  for (const char* k : {"acc_cmd", "acc_param", "cd_median_e3", "invalid_ratio_pct", "n_samples", "config"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["config"]["n_points"], 1000);
  EXPECT_EQ(j["n_samples"], 6);
}

TEST(Evaluate, DeltaOverride) {
  testgen::ProgramBuilder g;
  const auto a = g.sketch();
  g.rect(a, 20, 20, 200, 200);
  g.extrude(plain_extrude(a));
  auto p = g.p;
  std::get<code::Command>(p.statements[2]).geom = code::Line{{202, 20}};  // 2 levels off
  EvalConfig cfg;
  cfg.n_points = 500;
  cfg.delta = 3;
  const auto loose = evaluate({{program_text(g.p), program_text(p)}}, cfg);
  cfg.delta = 2;
  const auto tight = evaluate({{program_text(g.p), program_text(p)}}, cfg);
  EXPECT_EQ(loose.acc_param, 1.0);
  EXPECT_LT(tight.acc_param, 1.0);
}

TEST(Evaluate, BrokenPredictions) {
  const auto gt = program_text(testgen::unit_cube());
  EvalConfig cfg;
  cfg.n_points = 500;
  const auto rep = evaluate({{gt, gt}, {gt, "garbage"}}, cfg);
  EXPECT_EQ(rep.n_invalid, 1u);
  EXPECT_EQ(rep.invalid_ratio, 0.5);
  EXPECT_EQ(rep.cd_values.size(), 1u);
  // the unparsable prediction counts as an empty sequence
  EXPECT_EQ(rep.commands.total, 2 * code::to_tokens(code::parse(gt).program.value()).rows.size());
  EXPECT_THROW(evaluate({{"garbage", gt}}, cfg), MetricsError);
}
