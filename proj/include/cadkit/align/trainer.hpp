#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadkit/align/model.hpp"
#include "cadkit/align/optimizer.hpp"
#include "cadkit/code/program.hpp"

namespace cadkit::align {

enum class Phase { Align, Stage1, Stage2 };
const char* to_string(Phase p);
Phase phase_from_string(const std::string& s);

/// Parameter groups updated in a phase. Stage 1 and 2 keep the encoder frozen.
std::vector<std::string> trainable_groups(Phase p);

class Divergence : public std::runtime_error {
 public:
  explicit Divergence(std::size_t step)
      : std::runtime_error("loss is not finite at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A (graph, code) pair plus the prompt used by stage 1/2.
struct Example {
  BrepInput brep;
  std::vector<int> code;
  std::vector<int> prompt;
};

/// Executes the program, builds its face graph at the model's grid
/// resolution and tokenizes the canonical text.
Example make_example(const Model& model, const code::Program& target, const std::string& prompt = {});

struct TrainOptions {
  Phase phase = Phase::Align;
  std::size_t steps = 2000;
  std::size_t batch_size = 0;  // 0: whole dataset each step
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct LossRow {
  std::size_t step = 0;
  double con = 0.0;
  double cap = 0.0;  // stage 1/2: the token loss
  double total = 0.0;
};

class Trainer {
 public:
  Trainer(Model& model, TrainOptions options);

  /// One optimizer step on the next batch. Throws Divergence on a NaN loss.
  LossRow step(const std::vector<Example>& data);
  /// Steps until `options.steps` or until `done(step)` returns true; `done`
  /// is consulted every `check_every` steps.
  std::vector<LossRow> run(const std::vector<Example>& data, const std::function<bool(std::size_t)>& done = {},
                           std::size_t check_every = 10);

  std::size_t steps_taken() const { return step_; }
  Adam& optimizer() { return adam_; }
  Rng& rng() { return rng_; }
  const TrainOptions& options() const { return opts_; }
  const std::vector<LossRow>& curve() const { return curve_; }
  void restore(std::size_t step, Rng rng) {
    step_ = step;
    rng_ = rng;
  }

 private:
  std::vector<std::size_t> next_batch(std::size_t n);

  Model& model_;
  TrainOptions opts_;
  Adam adam_;
  Rng rng_;
  std::size_t step_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::vector<std::pair<std::string, Tensor>> trainable_;
  std::vector<LossRow> curve_;
};

void write_loss_csv(const std::vector<LossRow>& rows, const std::filesystem::path& path);

struct Retrieval {
  double brep_to_code = 0.0;
  double code_to_brep = 0.0;
  bool perfect() const { return brep_to_code == 1.0 && code_to_brep == 1.0; }
};

/// Top-1 retrieval by argmax cosine between z_con and t_eos.
Retrieval retrieval(const Model& model, const std::vector<Example>& data);

/// Number of examples whose greedy decode reproduces the code exactly.
std::size_t exact_matches(const Model& model, const std::vector<Example>& data);

}  // namespace cadkit::align
