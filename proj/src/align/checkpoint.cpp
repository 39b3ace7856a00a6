#include "cadkit/align/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace cadkit::align {

namespace {

graph::Tensor pack(const std::string& name, std::size_t rows, std::size_t cols, const std::vector<double>& data) {
  graph::Tensor t;
  t.name = name;
  t.dtype = graph::DType::F64;
  t.shape = {rows, cols};
  t.data = data;
  return t;
}

void write(const std::filesystem::path& manifest, const Model& model, const nlohmann::json& extra,
           const graph::TensorArchive& archive) {
  const auto header = tensors_path_for(manifest);
  graph::write_archive(archive, header);
  nlohmann::json j = extra;
  j["format"] = "cadkit-checkpoint";
  j["version"] = 1;
  j["config"] = model.config().to_json();
  j["tensors"] = header.filename().string();
  std::ofstream out(manifest);
  if (!out) throw CheckpointError("cannot write " + manifest.string());
  out << j.dump(2) << '\n';
  if (!out) throw CheckpointError("write failed: " + manifest.string());
}

graph::TensorArchive params_archive(const Model& model) {
  graph::TensorArchive a;
  for (const auto& [name, p] : model.params().all()) a.tensors.push_back(pack("param/" + name, p.rows(), p.cols(), p.data()));
  return a;
}

}  // namespace

std::filesystem::path tensors_path_for(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".tensors.json");
  return p;
}

void save_checkpoint(const std::filesystem::path& manifest, const Model& model) {
  write(manifest, model, {{"phase", nullptr}, {"step", 0}}, params_archive(model));
}

void save_checkpoint(const std::filesystem::path& manifest, const Model& model, Trainer& trainer) {
  graph::TensorArchive a = params_archive(model);
  const Adam& adam = trainer.optimizer();
  for (const auto& [name, m] : adam.first()) {
    const Tensor* p = model.params().find(name);
    if (!p) continue;
    a.tensors.push_back(pack("adam_m/" + name, p->rows(), p->cols(), m));
    a.tensors.push_back(pack("adam_v/" + name, p->rows(), p->cols(), adam.second().at(name)));
  }
  std::ostringstream rng;
  rng << trainer.rng();
  nlohmann::json extra;
  extra["phase"] = to_string(trainer.options().phase);
  extra["step"] = trainer.steps_taken();
  extra["rng_state"] = rng.str();
  extra["adam"] = {{"lr", adam.config().lr},
                   {"beta1", adam.config().beta1},
                   {"beta2", adam.config().beta2},
                   {"eps", adam.config().eps},
                   {"t", adam.steps()}};
  write(manifest, model, extra, a);
}

Checkpoint read_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw CheckpointError("cannot open " + manifest.string());
  Checkpoint c;
  try {
    c.manifest = nlohmann::json::parse(in);
    if (c.manifest.value("format", "") != "cadkit-checkpoint") throw CheckpointError("not a checkpoint manifest");
    c.config = AlignConfig::from_json(c.manifest.at("config"));
    c.tensors = graph::read_archive(manifest.parent_path() / c.manifest.at("tensors").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(manifest.string() + ": " + e.what());
  } catch (const graph::ArchiveError& e) {
    throw CheckpointError(manifest.string() + ": " + e.what());
  }
  return c;
}

void load_parameters(Model& model, const Checkpoint& ckpt) {
  for (auto& [name, p] : model.params().all()) {
    const graph::Tensor* t = ckpt.tensors.find("param/" + name);
    if (!t) throw CheckpointError("checkpoint lacks parameter " + name);
    if (t->shape != std::vector<std::size_t>{p.rows(), p.cols()})
      throw CheckpointError("parameter " + name + " has a different shape in the checkpoint");
    // write in place: layers hold handles to the same nodes
    p.node()->value = t->data;
  }
}

void load_trainer_state(Trainer& trainer, const Checkpoint& ckpt) {
  const auto& j = ckpt.manifest;
  if (!j.contains("rng_state") || !j.contains("adam")) throw CheckpointError("checkpoint has no trainer state");
  Rng rng;
  std::istringstream in(j.at("rng_state").get<std::string>());
  in >> rng;
  if (!in) throw CheckpointError("bad RNG state");
  trainer.restore(j.at("step").get<std::size_t>(), rng);
  Adam& adam = trainer.optimizer();
  adam.set_steps(j.at("adam").at("t").get<std::size_t>());
  adam.first().clear();
  adam.second().clear();
  for (const auto& t : ckpt.tensors.tensors) {
    if (t.name.rfind("adam_m/", 0) == 0) adam.first()[t.name.substr(7)] = t.data;
    if (t.name.rfind("adam_v/", 0) == 0) adam.second()[t.name.substr(7)] = t.data;
  }
}

}  // namespace cadkit::align
