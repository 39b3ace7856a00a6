#include "cadkit/cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cadkit/align/checkpoint.hpp"
#include "cadkit/align/gradcheck.hpp"
#include "cadkit/align/trainer.hpp"
#include "cadkit/code/parser.hpp"
#include "cadkit/code/tokens.hpp"
#include "cadkit/code/validate.hpp"
#include "cadkit/forge/forge.hpp"
#include "cadkit/geom/error.hpp"
#include "cadkit/geom/sampling.hpp"
#include "cadkit/geom/solid.hpp"
#include "cadkit/graph/face_graph.hpp"
#include "cadkit/metrics/metrics.hpp"

namespace cadkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Files created by a command; removed unless the command commits.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : paths_) fs::remove(p, ec);
  }
  void add(const fs::path& p) { paths_.push_back(p); }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling and renames into place.
void write_text(const fs::path& p, const std::string& content, OutputGuard& guard) {
  const fs::path tmp = p.string() + ".tmp";
  guard.add(tmp);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    out << content;
    if (!out) throw DataError("write failed: " + p.string());
  }
  guard.add(p);
  fs::rename(tmp, p);
}

void emit(const std::optional<fs::path>& out, const std::string& content, OutputGuard& guard) {
  if (out)
    write_text(*out, content, guard);
  else
    std::cout << content;
}

code::Program parse_program(const std::string& text, const std::string& where,
                            code::ParseMode mode = code::ParseMode::Complete) {
  auto r = code::parse(text, mode);
  if (!r.ok()) {
    std::string msg = where + ": does not parse";
    if (!r.diagnostics.empty()) msg += ": " + code::format_diagnostic(r.diagnostics.front());
    throw DataError(msg);
  }
  return std::move(*r.program);
}

code::Program load_program(const fs::path& p) { return parse_program(read_text(p), p.string()); }

code::Program load_valid_program(const fs::path& p) {
  code::Program prog = load_program(p);
  const auto diags = code::validate(prog);
  if (code::has_errors(diags)) throw DataError(p.string() + ": " + code::format_diagnostic(diags.front()));
  return prog;
}

/// Program files named on the command line; directories contribute their
/// `.cadc` files in name order.
std::vector<fs::path> list_programs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".cadc") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw DataError("no such file or directory: " + in);
    }
  }
  if (out.empty()) throw DataError("no program files found");
  return out;
}

std::pair<double, double> parse_range(const std::string& text, const std::string& flag) {
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("");
      return {v, v};
    }
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    const double lo = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument("");
    const double hi = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument("");
    if (!(lo <= hi)) throw std::invalid_argument("");
    if (lo < 0.0 || hi > 1.0) throw std::invalid_argument("");
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError(flag + " expects lo:hi with 0 <= lo <= hi <= 1, got '" + text + "'");
  }
}

forge::Prompts load_prompts(const std::string& path) {
  if (path.empty()) return forge::Prompts::builtin();
  try {
    return forge::Prompts::from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Options of every subcommand

struct Options {
  std::string config;

  std::string input;
  std::vector<std::string> inputs;
  std::string output;
  std::uint64_t seed = 0;

  std::string to;
  std::size_t sample = 8096;
  bool normalize = false;
  int uv_res = 10;

  std::string prompts;
  std::string keep = "0.3:0.5";
  std::string ratio = "0.5:0.8";
  std::string questions;

  std::string gt, pred;
  int delta = 3;
  int cd_power = 2;
  std::size_t n_points = 8096;

  std::string data, records, programs, init, loss_csv, phase = "align";
  std::size_t steps = 2000;
  std::size_t batch = 0;
  double lr = 3e-4;
  bool stop_early = false;
  std::size_t d_align = 64, d_node = 32, d_llm = 64, n_query_gen = 16;
  int heads = 4, grid_res = 10;
  double temperature = 0.07, lambda_con = 1.0, lambda_cap = 2.0;
  std::size_t trials = 20;
};

std::optional<fs::path> out_path(const Options& o) {
  if (o.output.empty()) return std::nullopt;
  return fs::path(o.output);
}

// ---------------------------------------------------------------------------
// Handlers

void cmd_convert(const Options& o) {
  const fs::path in(o.input);
  std::string to = o.to;
  if (to.empty()) to = in.extension() == ".json" ? "code" : "tokens";
  if (to != "code" && to != "tokens") throw UsageError("--to must be 'code' or 'tokens'");
  const std::string text = read_text(in);
  std::string result;
  try {
    if (to == "code") {
      result = code::serialize(code::from_tokens(code::tokens_from_json(json::parse(text))));
    } else {
      result = code::to_json(code::to_tokens(parse_program(text, in.string()))).dump() + "\n";
    }
  } catch (const json::exception& e) {
    throw DataError(in.string() + ": " + e.what());
  } catch (const code::TokenError& e) {
    throw DataError(in.string() + ": " + e.what());
  }
  OutputGuard guard;
  emit(out_path(o), result, guard);
  guard.commit();
}

void cmd_exec(const Options& o) {
  if (o.sample == 0) throw UsageError("--sample must be positive");
  const fs::path in(o.input);
  const fs::path out = o.output.empty() ? fs::path(in).replace_extension(".xyz") : fs::path(o.output);
  const code::Program prog = load_valid_program(in);
  geom::PointCloud cloud = geom::sample_surface(geom::execute(prog), o.sample, o.seed);
  if (o.normalize) cloud = geom::normalize(cloud);
  std::ostringstream ss;
  geom::write_xyz(ss, cloud);
  OutputGuard guard;
  write_text(out, ss.str(), guard);
  guard.commit();
  std::cout << json{{"output", out.string()}, {"points", cloud.points.size()}, {"seed", o.seed}}.dump() << "\n";
}

void cmd_graph(const Options& o) {
  if (o.uv_res < 2) throw UsageError("--uv-res must be at least 2");
  const fs::path in(o.input);
  const fs::path out = o.output.empty() ? fs::path(in).replace_extension(".graph.json") : fs::path(o.output);
  if (out.extension() == ".bin") throw UsageError("graph output must not end in .bin");
  const code::Program prog = load_valid_program(in);
  const graph::FaceGraph g = graph::build_face_graph(geom::execute(prog), o.uv_res);
  OutputGuard guard;
  guard.add(out);
  guard.add(graph::blob_path_for(out));
  graph::export_tensors(g, out);
  guard.commit();
  std::cout << json{{"output", out.string()}, {"nodes", g.node_count()}, {"edges", g.edges.size()}}.dump() << "\n";
}

void write_records(const Options& o, const std::vector<forge::TrainingRecord>& records) {
  std::string text;
  for (const auto& r : records) text += r.to_line() + "\n";
  OutputGuard guard;
  emit(out_path(o), text, guard);
  guard.commit();
  if (out_path(o)) std::cout << json{{"output", o.output}, {"records", records.size()}}.dump() << "\n";
}

void cmd_forge(const std::string& task, const Options& o) {
  std::vector<forge::TrainingRecord> records;
  if (task == "qa") {
    if (o.questions.empty()) throw UsageError("forge qa needs --questions");
    json items;
    try {
      items = json::parse(read_text(o.questions));
      if (!items.is_array()) throw DataError(o.questions + ": expected a JSON array");
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& q = items[i];
        records.push_back(forge::qa_record(q.at("brep_ref").get<std::string>(), q.at("question").get<std::string>(),
                                           q.at("options").get<std::vector<std::string>>(),
                                           q.at("answer").get<std::string>(), derive_seed(o.seed, i)));
      }
    } catch (const json::exception& e) {
      throw DataError(o.questions + ": " + e.what());
    }
    write_records(o, records);
    return;
  }
  const forge::Prompts prompts = load_prompts(o.prompts);
  const auto keep = parse_range(o.keep, "--keep");
  const auto ratio = parse_range(o.ratio, "--ratio");
  if (o.inputs.empty()) throw UsageError("forge " + task + " needs input programs");
  const auto files = list_programs(o.inputs);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const code::Program prog = load_valid_program(files[i]);
    const std::string ref = files[i].stem().string();
    const std::uint64_t s = derive_seed(o.seed, i);
    try {
      if (task == "reverse") {
        records.push_back(forge::reverse_record(ref, prog, s, prompts));
      } else if (task == "completion") {
        records.push_back(
            forge::completion_record(ref, forge::mask_for_completion_seeded(prog, s, keep.first, keep.second), s, prompts));
      } else {
        records.push_back(forge::correction_record(
            ref, forge::inject_errors_seeded(prog, s, ratio.first, ratio.second), prog, s, prompts));
      }
    } catch (const forge::ForgeError& e) {
      throw DataError(files[i].string() + ": " + e.what());
    }
  }
  write_records(o, records);
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

void cmd_eval(const Options& o) {
  if (o.gt.empty() || o.pred.empty()) throw UsageError("eval needs --gt and --pred");
  if (o.cd_power != 1 && o.cd_power != 2) throw UsageError("--cd-power must be 1 or 2");
  if (o.delta < 1) throw UsageError("--delta must be at least 1");
  if (o.n_points == 0) throw UsageError("--n-points must be positive");
  metrics::EvalConfig cfg;
  cfg.delta = o.delta;
  cfg.cd_power = o.cd_power;
  cfg.n_points = o.n_points;
  cfg.seed = o.seed;
  std::vector<metrics::EvalPair> pairs;
  for (const auto& g : sorted_files(o.gt)) {
    const fs::path p = fs::path(o.pred) / g.filename();
    pairs.push_back({read_text(g), fs::exists(p) ? read_text(p) : std::string()});
  }
  if (pairs.empty()) throw DataError("no ground-truth files in " + o.gt);
  metrics::MetricReport rep;
  try {
    rep = metrics::evaluate(pairs, cfg);
  } catch (const metrics::MetricsError& e) {
    throw DataError(e.what());
  }
  const std::string text = rep.to_json(cfg).dump(2) + "\n";
  OutputGuard guard;
  if (!o.output.empty()) write_text(o.output, text, guard);
  guard.commit();
  std::cout << rep.to_json(cfg).dump() << "\n";
}

align::AlignConfig model_config(const Options& o) {
  align::AlignConfig c;
  c.d_align = o.d_align;
  c.d_node = o.d_node;
  c.d_llm = o.d_llm;
  c.n_query_gen = o.n_query_gen;
  c.heads = o.heads;
  c.grid_res = o.grid_res;
  c.temperature = o.temperature;
  c.lambda_con = o.lambda_con;
  c.lambda_cap = o.lambda_cap;
  c.seed = o.seed;
  return c;
}

std::vector<align::Example> training_examples(const align::Model& model, const Options& o, align::Phase phase) {
  std::vector<align::Example> data;
  const forge::Prompts& prompts = forge::Prompts::builtin();
  if (!o.records.empty()) {
    if (o.programs.empty()) throw UsageError("--records needs --programs to resolve B-rep references");
    std::ifstream in(o.records);
    if (!in) throw DataError("cannot read " + o.records);
    forge::RecordReader reader(in);
    try {
      while (auto rec = reader.next()) {
        if (rec->task == forge::Task::Qa) continue;  // answers are not CAD Code
        const code::Program brep_prog = load_valid_program(fs::path(o.programs) / (rec->brep_ref + ".cadc"));
        const code::Program target = parse_program(rec->target, o.records);
        std::string prompt = rec->prompt;
        if (rec->input_code) prompt += "\n" + *rec->input_code;
        align::Example ex = align::make_example(model, brep_prog, prompt);
        ex.code = model.tokenizer().encode(code::serialize(target));
        data.push_back(std::move(ex));
      }
    } catch (const forge::ForgeError& e) {
      throw DataError(o.records + ": " + e.what());
    }
  } else {
    if (o.data.empty()) throw UsageError("align train needs --data or --records");
    for (const auto& f : list_programs({o.data}))
      data.push_back(align::make_example(model, load_valid_program(f), phase == align::Phase::Align ? "" : prompts.reverse));
  }
  if (data.empty()) throw DataError("no training examples");
  return data;
}

void cmd_align_train(const Options& o) {
  if (o.output.empty()) throw UsageError("align train needs -o CHECKPOINT.json");
  align::Phase phase;
  try {
    phase = align::phase_from_string(o.phase);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (phase == align::Phase::Stage2 && o.init.empty()) throw UsageError("stage2 starts from a stage1 checkpoint (--init)");
  if (o.lr <= 0.0) throw UsageError("--lr must be positive");

  std::optional<align::Checkpoint> init;
  align::AlignConfig cfg = model_config(o);
  if (!o.init.empty()) {
    try {
      init = align::read_checkpoint(o.init);
    } catch (const align::CheckpointError& e) {
      throw DataError(e.what());
    }
    cfg = init->config;
  }
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  align::Model model(cfg);
  if (init) align::load_parameters(model, *init);
  const auto data = training_examples(model, o, phase);

  align::TrainOptions topt;
  topt.phase = phase;
  topt.steps = o.steps;
  topt.batch_size = o.batch;
  topt.seed = o.seed;
  topt.adam.lr = o.lr;
  align::Trainer trainer(model, topt);
  std::function<bool(std::size_t)> done;
  if (o.stop_early) {
    if (phase == align::Phase::Align)
      done = [&](std::size_t) { return align::retrieval(model, data).perfect(); };
    else
      done = [&](std::size_t) { return align::exact_matches(model, data) == data.size(); };
  }
  try {
    trainer.run(data, done, 10);
  } catch (const align::Divergence& e) {
    throw DataError(e.what());
  }

  OutputGuard guard;
  const fs::path manifest(o.output);
  guard.add(manifest);
  guard.add(align::tensors_path_for(manifest));
  guard.add(graph::blob_path_for(align::tensors_path_for(manifest)));
  align::save_checkpoint(manifest, model, trainer);
  if (!o.loss_csv.empty()) {
    guard.add(o.loss_csv);
    align::write_loss_csv(trainer.curve(), o.loss_csv);
  }
  guard.commit();
  const auto& last = trainer.curve().back();
  std::cout << json{{"checkpoint", manifest.string()},
                    {"phase", o.phase},
                    {"steps", trainer.steps_taken()},
                    {"loss_total", last.total}}
                   .dump()
            << "\n";
}

bool cmd_align_check(const Options& o) {
  const auto results = align::gradient_suite(o.trials, o.seed);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.op << " trials=" << r.trials << " max_rel_err=" << r.max_rel_err
              << "\n";
    ok = ok && r.passed();
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Config file: flags of the selected command are inserted ahead of the
// command-line flags; with TakeLast the command line wins.

std::vector<std::string> config_flags(const json& cfg, CLI::App* leaf) {
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    CLI::Option* opt = leaf->get_option_no_throw(flag);
    if (!opt) {
      std::cerr << "cadkit: config key '" << key << "' is not a flag of '" << leaf->get_name() << "', ignored\n";
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      out.push_back(flag);
      for (const auto& v : value) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      out.push_back(flag);
      out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args_in) {
  Options o;
  CLI::App app{"cadkit: CAD Code parsing, solid execution, face graphs, dataset forging, metrics and alignment training"};
  app.name("cadkit");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "JSON file whose keys set flags of the command; command-line flags win");

  auto* convert = app.add_subcommand("convert", "Convert CAD Code to token JSON or back");
  convert->add_option("input", o.input, "Program (.cadc) or token file (.json)")->required();
  convert->add_option("-o,--output", o.output, "Output file (default: stdout)");
  convert->add_option("--to", o.to, "Target form: code or tokens (default: from the input extension)");

  auto* exec = app.add_subcommand("exec", "Execute a program and sample its surface to .xyz");
  exec->add_option("input", o.input, "Program file")->required();
  exec->add_option("-o,--output", o.output, "Output .xyz (default: input with .xyz)");
  exec->add_option("--sample", o.sample, "Number of surface points")->capture_default_str();
  exec->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
  exec->add_flag("--normalize", o.normalize, "Scale the cloud into the unit cube");

  auto* graph_cmd = app.add_subcommand("graph", "Build the face-adjacency graph and write its tensor archive");
  graph_cmd->add_option("input", o.input, "Program file")->required();
  graph_cmd->add_option("-o,--output", o.output, "Archive header (default: input with .graph.json)");
  graph_cmd->add_option("--uv-res", o.uv_res, "UV grid resolution")->capture_default_str();

  auto* forge_cmd = app.add_subcommand("forge", "Write training records as JSON Lines");
  forge_cmd->require_subcommand(1);
  for (const char* task : {"reverse", "completion", "corrupt"}) {
    auto* sub = forge_cmd->add_subcommand(task, std::string("Forge ") + task + " records");
    sub->add_option("inputs", o.inputs, "Program files or directories of .cadc files")->required();
    sub->add_option("-o,--output", o.output, "Output .jsonl (default: stdout)");
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--prompts", o.prompts, "Prompt template JSON (default: built-in)");
    if (std::string(task) == "completion") sub->add_option("--keep", o.keep, "Kept fraction range lo:hi")->capture_default_str();
    if (std::string(task) == "corrupt") sub->add_option("--ratio", o.ratio, "Corruption ratio range lo:hi")->capture_default_str();
  }
  auto* qa = forge_cmd->add_subcommand("qa", "Forge multiple-choice records");
  qa->add_option("--questions", o.questions, "JSON array of {brep_ref, question, options, answer}")->required();
  qa->add_option("-o,--output", o.output, "Output .jsonl (default: stdout)");
  qa->add_option("--seed", o.seed, "Master seed")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Score predicted programs against ground truth");
  eval->add_option("--gt", o.gt, "Directory of ground-truth programs")->required();
  eval->add_option("--pred", o.pred, "Directory of predictions with the same file names")->required();
  eval->add_option("-o,--output", o.output, "report.json path");
  eval->add_option("--delta", o.delta, "Parameter tolerance in quantization levels")->capture_default_str();
  eval->add_option("--cd-power", o.cd_power, "Chamfer distance power (1 or 2)")->capture_default_str();
  eval->add_option("--n-points", o.n_points, "Points sampled per solid")->capture_default_str();
  eval->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();

  auto* align_cmd = app.add_subcommand("align", "Alignment and stage training");
  align_cmd->require_subcommand(1);
  auto* train = align_cmd->add_subcommand("train", "Train a toy model and write a checkpoint");
  train->add_option("--phase", o.phase, "align, stage1 or stage2")->capture_default_str();
  train->add_option("--data", o.data, "Directory of .cadc programs");
  train->add_option("--records", o.records, "Forge JSONL records to train on");
  train->add_option("--programs", o.programs, "Directory holding <brep_ref>.cadc for --records");
  train->add_option("--init", o.init, "Checkpoint to start from");
  train->add_option("-o,--output", o.output, "Checkpoint manifest (.json)")->required();
  train->add_option("--loss-csv", o.loss_csv, "Loss curve CSV");
  train->add_option("--steps", o.steps, "Maximum optimizer steps")->capture_default_str();
  train->add_option("--batch", o.batch, "Batch size (0: whole set)")->capture_default_str();
  train->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--seed", o.seed, "Seed for initialization and batching")->capture_default_str();
  train->add_flag("--stop-early", o.stop_early,
                  "Stop once retrieval (align) or greedy regeneration (stage1/2) is perfect");
  train->add_option("--d-align", o.d_align)->capture_default_str();
  train->add_option("--d-node", o.d_node)->capture_default_str();
  train->add_option("--d-llm", o.d_llm)->capture_default_str();
  train->add_option("--n-query-gen", o.n_query_gen)->capture_default_str();
  train->add_option("--heads", o.heads)->capture_default_str();
  train->add_option("--grid-res", o.grid_res)->capture_default_str();
  train->add_option("--temperature", o.temperature)->capture_default_str();
  train->add_option("--lambda-con", o.lambda_con)->capture_default_str();
  train->add_option("--lambda-cap", o.lambda_cap)->capture_default_str();
  auto* check = align_cmd->add_subcommand("check", "Run the finite-difference gradient suite");
  check->add_option("--trials", o.trials, "Random shapes per op")->capture_default_str();
  check->add_option("--seed", o.seed, "Seed")->capture_default_str();

  std::vector<std::string> args(args_in.begin() + (args_in.empty() ? 0 : 1), args_in.end());
  try {
    // locate --config and the command words before parsing
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size())
        config_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0)
        config_path = args[i].substr(9);
    }
    std::vector<std::size_t> words;
    for (std::size_t i = 0; i < args.size() && words.size() < 2; ++i) {
      if (args[i] == "--config") {
        ++i;
        continue;
      }
      if (args[i].rfind("--config=", 0) == 0) continue;
      if (args[i].empty() || args[i][0] == '-') break;
      words.push_back(i);
      if (args[i] != "forge" && args[i] != "align") break;
    }
    if (!config_path.empty() && !words.empty()) {
      CLI::App* leaf = app.get_subcommand_no_throw(args[words[0]]);
      if (leaf && words.size() == 2) leaf = leaf->get_subcommand_no_throw(args[words[1]]);
      if (leaf) {
        json cfg;
        try {
          cfg = json::parse(read_text(config_path));
        } catch (const json::exception& e) {
          throw UsageError(config_path + ": " + e.what());
        } catch (const DataError& e) {
          throw UsageError(e.what());
        }
        if (!cfg.is_object()) throw UsageError(config_path + ": expected a JSON object");
        const auto extra = config_flags(cfg, leaf);
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(words.back() + 1), extra.begin(), extra.end());
      }
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "cadkit: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*convert) {
      cmd_convert(o);
    } else if (*exec) {
      cmd_exec(o);
    } else if (*graph_cmd) {
      cmd_graph(o);
    } else if (*forge_cmd) {
      for (auto* sub : forge_cmd->get_subcommands()) cmd_forge(sub->get_name(), o);
    } else if (*eval) {
      cmd_eval(o);
    } else if (*train) {
      cmd_align_train(o);
    } else if (*check) {
      if (!cmd_align_check(o)) {
        std::cerr << "cadkit: gradient check failed\n";
        return kExitData;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "cadkit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cadkit: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace cadkit::cli
