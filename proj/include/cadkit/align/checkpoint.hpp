#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cadkit/align/model.hpp"
#include "cadkit/align/trainer.hpp"
#include "cadkit/graph/archive.hpp"

namespace cadkit::align {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint is a JSON manifest (config, phase, step, RNG state) next to
/// an f64 tensor archive holding parameters and Adam moments. For manifest
/// `run.json` the archive is `run.tensors.json` + `run.tensors.bin`.
void save_checkpoint(const std::filesystem::path& manifest, const Model& model, Trainer& trainer);
/// Parameters only (no optimizer state).
void save_checkpoint(const std::filesystem::path& manifest, const Model& model);

struct Checkpoint {
  nlohmann::json manifest;
  AlignConfig config;
  graph::TensorArchive tensors;
};

std::filesystem::path tensors_path_for(const std::filesystem::path& manifest);
Checkpoint read_checkpoint(const std::filesystem::path& manifest);
/// Copies every parameter from the checkpoint; throws on a missing or
/// mis-shaped tensor.
void load_parameters(Model& model, const Checkpoint& ckpt);
/// Restores step, RNG and Adam moments.
void load_trainer_state(Trainer& trainer, const Checkpoint& ckpt);

}  // namespace cadkit::align
