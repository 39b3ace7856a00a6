#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadkit/code/program.hpp"
#include "cadkit/util/random.hpp"

namespace cadkit::forge {

class ForgeError : public std::runtime_error {
 public:
  enum class Kind { EmptyDataset, BadRatio, TooShort, NoEligibleEdit, TemplateMismatch, BadRecord };

  ForgeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Splits

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Shuffles 0..n-1 by seed; val and test get floor(ratio * n) items and the
/// remainder goes to train.
SplitIndices split_indices(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed);

template <class T>
std::array<std::vector<T>, 3> split_dataset(const std::vector<T>& items,
                                            std::array<double, 3> ratios = {0.90, 0.05, 0.05},
                                            std::uint64_t seed = 0) {
  const SplitIndices s = split_indices(items.size(), ratios, seed);
  std::array<std::vector<T>, 3> out;
  for (auto i : s.train) out[0].push_back(items[i]);
  for (auto i : s.val) out[1].push_back(items[i]);
  for (auto i : s.test) out[2].push_back(items[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Completion

struct CompletionSample {
  code::Program prefix;
  code::Program full;
  double keep_fraction = 0.0;
  std::size_t cut = 0;  // statements kept
};

/// Keeps the first floor(keep_fraction * n) statements. A cut right after a
/// new_loop or a sketch declaration moves back to the nearest earlier valid
/// cut (or forward when there is none).
CompletionSample mask_for_completion(const code::Program& program, double keep_fraction);

/// keep_fraction drawn uniformly from [lo, hi].
CompletionSample mask_for_completion_seeded(const code::Program& program, std::uint64_t seed, double lo = 0.3,
                                            double hi = 0.5);

// ---------------------------------------------------------------------------
// Error injection

struct PermuteLoop {
  int sketch = 0;
  std::size_t loop = 0;
  /// New position i holds the command that was at permutation[i].
  std::vector<std::size_t> permutation;
  bool operator==(const PermuteLoop&) const = default;
};

struct ParamNoise {
  std::size_t statement = 0;
  std::string field;
  code::Level old_level = 0;
  code::Level new_level = 0;
  bool operator==(const ParamNoise&) const = default;
};

struct EditLog {
  std::vector<PermuteLoop> permutations;  // applied first
  std::vector<ParamNoise> noise;          // applied second, in order

  std::size_t size() const { return permutations.size() + noise.size(); }
};

nlohmann::json to_json(const EditLog& log);
EditLog edit_log_from_json(const nlohmann::json& j);

struct Corruption {
  code::Program corrupted;
  EditLog edits;
  double ratio = 0.0;
  std::size_t quota = 0;     // ceil(ratio * eligible)
  std::size_t affected = 0;  // commands changed
};

/// Eligible commands are Line, Arc, Circle and Extrude statements.
std::size_t eligible_count(const code::Program& program);

/// Noisable fields of a statement, e.g. "endpoint.x", "sweep", "distances.0".
std::vector<std::string> noise_fields(const code::Statement& st);
code::Level get_field(const code::Statement& st, const std::string& field);
void set_field(code::Statement& st, const std::string& field, code::Level value);

/// Corrupts ceil(ratio * eligible) commands: loops of three or more commands
/// may have their first k-1 commands permuted, and the rest of the quota gets
/// parameter noise of +-[5, 25] levels.
Corruption inject_errors(const code::Program& program, double ratio, std::uint64_t seed);
Corruption inject_errors_seeded(const code::Program& program, std::uint64_t seed, double lo = 0.5, double hi = 0.8);

code::Program apply_edits(const code::Program& program, const EditLog& log);
code::Program invert_edits(const code::Program& corrupted, const EditLog& log);

// ---------------------------------------------------------------------------
// Records

enum class Task { Reverse, Completion, Correction, Qa };
const char* to_string(Task t);
Task task_from_string(const std::string& s);

struct Prompts {
  std::string reverse;
  std::string completion;
  std::string correction;
  int version = 1;

  /// The frozen built-in templates.
  static const Prompts& builtin();
  static Prompts from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrainingRecord {
  Task task = Task::Reverse;
  std::string brep_ref;
  std::string prompt;
  std::optional<std::string> input_code;
  std::string target;
  nlohmann::json meta = nlohmann::json::object();

  nlohmann::json to_json() const;
  static TrainingRecord from_json(const nlohmann::json& j);
  /// One line of JSON, no trailing newline.
  std::string to_line() const;
  bool operator==(const TrainingRecord& o) const;
};

TrainingRecord reverse_record(const std::string& brep_ref, const code::Program& full, std::uint64_t seed,
                              const Prompts& prompts = Prompts::builtin());
TrainingRecord completion_record(const std::string& brep_ref, const CompletionSample& sample, std::uint64_t seed,
                                 const Prompts& prompts = Prompts::builtin());
TrainingRecord correction_record(const std::string& brep_ref, const Corruption& corruption,
                                 const code::Program& full, std::uint64_t seed,
                                 const Prompts& prompts = Prompts::builtin());
/// Question text followed by the four options as "A. ...".."D. ...".
TrainingRecord qa_record(const std::string& brep_ref, const std::string& question,
                         const std::vector<std::string>& options, const std::string& answer, std::uint64_t seed);

/// Streams records from JSON Lines; blank lines are skipped.
class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : in_(in) {}
  /// Throws ForgeError(BadRecord) naming the line on malformed input.
  std::optional<TrainingRecord> next();
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<TrainingRecord> read_records(std::istream& in);

}  // namespace cadkit::forge
