#include <string>

#include "cadkit/code/parser.hpp"
#include "cadkit/forge/forge.hpp"

namespace cadkit::forge {

const char* to_string(Task t) {
  switch (t) {
    case Task::Reverse: return "reverse";
    case Task::Completion: return "completion";
    case Task::Correction: return "correction";
    case Task::Qa: return "qa";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "reverse") return Task::Reverse;
  if (s == "completion") return Task::Completion;
  if (s == "correction") return Task::Correction;
  if (s == "qa") return Task::Qa;
  throw ForgeError(ForgeError::Kind::BadRecord, "unknown task '" + s + "'");
}

// Keep in sync with assets/prompts.json.
const Prompts& Prompts::builtin() {
  static const Prompts p{"Reconstruct the CAD Code from the given B-rep.", "Complete the remaining CAD Code.",
                         "Correct the errors in the CAD Code to match the B-rep.", 1};
  return p;
}

Prompts Prompts::from_json(const nlohmann::json& j) {
  try {
    Prompts p;
    p.version = j.at("version").get<int>();
    p.reverse = j.at("reverse").get<std::string>();
    p.completion = j.at("completion").get<std::string>();
    p.correction = j.at("correction").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ForgeError(ForgeError::Kind::TemplateMismatch, std::string("malformed prompt file: ") + e.what());
  }
}

nlohmann::json Prompts::to_json() const {
  return {{"version", version}, {"reverse", reverse}, {"completion", completion}, {"correction", correction}};
}

nlohmann::json TrainingRecord::to_json() const {
  nlohmann::json j;
  j["task"] = forge::to_string(task);
  j["brep_ref"] = brep_ref;
  j["prompt"] = prompt;
  j["input_code"] = input_code ? nlohmann::json(*input_code) : nlohmann::json(nullptr);
  j["target"] = target;
  j["meta"] = meta;
  return j;
}

TrainingRecord TrainingRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ForgeError(ForgeError::Kind::BadRecord, "record must be a JSON object");
  for (const char* key : {"task", "brep_ref", "prompt", "input_code", "target", "meta"})
    if (!j.contains(key)) throw ForgeError(ForgeError::Kind::BadRecord, std::string("record lacks '") + key + "'");
  try {
    TrainingRecord r;
    r.task = task_from_string(j["task"].get<std::string>());
    r.brep_ref = j["brep_ref"].get<std::string>();
    r.prompt = j["prompt"].get<std::string>();
    if (!j["input_code"].is_null()) r.input_code = j["input_code"].get<std::string>();
    r.target = j["target"].get<std::string>();
    r.meta = j["meta"];
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ForgeError(ForgeError::Kind::BadRecord, std::string("record field has the wrong type: ") + e.what());
  }
}

std::string TrainingRecord::to_line() const { return to_json().dump(); }

bool TrainingRecord::operator==(const TrainingRecord& o) const { return to_json() == o.to_json(); }

TrainingRecord reverse_record(const std::string& brep_ref, const code::Program& full, std::uint64_t seed,
                              const Prompts& prompts) {
  TrainingRecord r;
  r.task = Task::Reverse;
  r.brep_ref = brep_ref;
  r.prompt = prompts.reverse;
  r.target = code::serialize(full);
  r.meta = {{"seed", seed}};
  return r;
}

TrainingRecord completion_record(const std::string& brep_ref, const CompletionSample& sample, std::uint64_t seed,
                                 const Prompts& prompts) {
  TrainingRecord r;
  r.task = Task::Completion;
  r.brep_ref = brep_ref;
  r.prompt = prompts.completion;
  r.input_code = code::serialize(sample.prefix);
  r.target = code::serialize(sample.full);
  if (r.target.compare(0, r.input_code->size(), *r.input_code) != 0)
    throw ForgeError(ForgeError::Kind::TemplateMismatch, "completion prefix is not a prefix of the target");
  r.meta = {{"seed", seed}, {"keep_fraction", sample.keep_fraction}, {"kept_statements", sample.cut}};
  return r;
}

TrainingRecord correction_record(const std::string& brep_ref, const Corruption& corruption,
                                 const code::Program& full, std::uint64_t seed, const Prompts& prompts) {
  TrainingRecord r;
  r.task = Task::Correction;
  r.brep_ref = brep_ref;
  r.prompt = prompts.correction;
  r.input_code = code::serialize(corruption.corrupted);
  r.target = code::serialize(full);
  if (*r.input_code == r.target)
    throw ForgeError(ForgeError::Kind::TemplateMismatch, "corrupted code equals the target");
  r.meta = {{"seed", seed},
            {"ratio", corruption.ratio},
            {"quota", corruption.quota},
            {"affected", corruption.affected},
            {"edits", to_json(corruption.edits)}};
  return r;
}

TrainingRecord qa_record(const std::string& brep_ref, const std::string& question,
                         const std::vector<std::string>& options, const std::string& answer, std::uint64_t seed) {
  if (options.size() != 4)
    throw ForgeError(ForgeError::Kind::TemplateMismatch, "a question needs exactly four options");
  if (answer.size() != 1 || answer[0] < 'A' || answer[0] > 'D')
    throw ForgeError(ForgeError::Kind::TemplateMismatch, "answer must be one of A, B, C, D");
  TrainingRecord r;
  r.task = Task::Qa;
  r.brep_ref = brep_ref;
  r.prompt = question;
  for (std::size_t i = 0; i < 4; ++i) r.prompt += std::string("\n") + static_cast<char>('A' + i) + ". " + options[i];
  r.target = answer;
  r.meta = {{"seed", seed}};
  return r;
}

std::optional<TrainingRecord> RecordReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ForgeError(ForgeError::Kind::BadRecord, "line " + std::to_string(line_) + ": " + e.what());
    }
    try {
      return TrainingRecord::from_json(j);
    } catch (const ForgeError& e) {
      throw ForgeError(ForgeError::Kind::BadRecord, "line " + std::to_string(line_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::vector<TrainingRecord> read_records(std::istream& in) {
  RecordReader reader(in);
  std::vector<TrainingRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace cadkit::forge
