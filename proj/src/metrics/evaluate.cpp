#include "cadkit/code/parser.hpp"
#include "cadkit/code/validate.hpp"
#include "cadkit/metrics/metrics.hpp"

namespace cadkit::metrics {

namespace {

struct Executed {
  Validity validity;
  std::optional<code::Program> program;
  std::optional<geom::PointCloud> cloud;
};

Executed run(std::string_view text, std::size_t n_points, std::uint64_t seed) {
  Executed out;
  auto parsed = code::parse(text);
  if (!parsed.ok()) {
    out.validity = {false, "parse",
                    parsed.diagnostics.empty() ? "" : code::format_diagnostic(parsed.diagnostics.front())};
    return out;
  }
  out.program = std::move(parsed.program);
  const auto diags = code::validate(*out.program);
  if (code::has_errors(diags)) {
    out.validity = {false, "validate", code::format_diagnostic(diags.front())};
    return out;
  }
  try {
    const geom::Solid solid = geom::execute(*out.program);
    try {
      out.cloud = geom::sample_surface(solid, n_points, seed);
    } catch (const geom::GeomError& e) {
      out.validity = {false, "sample", e.what()};
      return out;
    }
  } catch (const geom::GeomError& e) {
    out.validity = {false, "execute", e.what()};
    return out;
  }
  if (out.cloud->points.empty()) {
    out.validity = {false, "sample", "no boundary points"};
    return out;
  }
  out.validity = {true, "", ""};
  return out;
}

code::TokenSequence tokens_or_empty(const std::optional<code::Program>& p) {
  if (!p) return {};
  try {
    return code::to_tokens(*p);
  } catch (const code::TokenError&) {
    return {};
  }
}

}  // namespace

Validity check_program(std::string_view text, std::size_t n_points, std::uint64_t seed) {
  return run(text, n_points, seed).validity;
}

double invalid_ratio(const std::vector<std::string>& programs, std::size_t n_points, std::uint64_t seed) {
  if (programs.empty()) return 0.0;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < programs.size(); ++i)
    if (!check_program(programs[i], n_points, derive_seed(seed, i)).valid) ++bad;
  return static_cast<double>(bad) / static_cast<double>(programs.size());
}

SampleResult evaluate_pair(const EvalPair& pair, const EvalConfig& config, std::uint64_t sample_seed) {
  const Executed gt = run(pair.gt, config.n_points, sample_seed);
  if (!gt.validity.valid)
    throw MetricsError("ground truth is invalid (" + gt.validity.stage + "): " + gt.validity.message);
  const Executed pred = run(pair.pred, config.n_points, sample_seed);

  SampleResult r;
  r.validity = pred.validity;
  const auto gt_tokens = code::to_tokens(*gt.program);
  const auto pred_tokens = tokens_or_empty(pred.program);
  r.commands = command_tally(gt_tokens, pred_tokens);
  r.params = param_tally(gt_tokens, pred_tokens, config.delta);
  if (pred.validity.valid)
    r.cd = chamfer(geom::normalize(*gt.cloud), geom::normalize(*pred.cloud), config.cd_power);
  return r;
}

MetricReport evaluate(const std::vector<EvalPair>& pairs, const EvalConfig& config) {
  MetricReport rep;
  rep.n_samples = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SampleResult r = evaluate_pair(pairs[i], config, derive_seed(config.seed, i));
    rep.commands += r.commands;
    rep.params += r.params;
    if (!r.validity.valid) ++rep.n_invalid;
    if (r.cd) rep.cd_values.push_back(*r.cd);
    rep.samples.push_back(std::move(r));
  }
  rep.acc_cmd = rep.commands.fraction();
  rep.acc_param = rep.params.fraction();
  rep.acc_param_defined = rep.params.total > 0;
  if (!rep.cd_values.empty()) rep.cd_median = median(rep.cd_values);
  rep.invalid_ratio = pairs.empty() ? 0.0 : static_cast<double>(rep.n_invalid) / static_cast<double>(pairs.size());
  return rep;
}

nlohmann::json MetricReport::to_json(const EvalConfig& config) const {
  nlohmann::json j;
  j["acc_cmd"] = acc_cmd;
  j["acc_param"] = acc_param;
  j["cd_median_e3"] = cd_median ? nlohmann::json(*cd_median * 1e3) : nlohmann::json(nullptr);
  j["invalid_ratio_pct"] = invalid_ratio * 100.0;
  j["n_samples"] = n_samples;
  j["config"] = {{"delta", config.delta},
                 {"cd_power", config.cd_power},
                 {"n_points", config.n_points},
                 {"seed", config.seed}};
  return j;
}

}  // namespace cadkit::metrics
