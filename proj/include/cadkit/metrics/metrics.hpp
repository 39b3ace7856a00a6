#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cadkit/code/tokens.hpp"
#include "cadkit/geom/sampling.hpp"

namespace cadkit::metrics {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sequence accuracy

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;

  double fraction() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0; }
  Tally& operator+=(const Tally& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

/// Matching command types after padding the shorter sequence with EOS;
/// total = max(|gt|, |pred|).
Tally command_tally(const code::TokenSequence& gt, const code::TokenSequence& pred);
/// Parameter slots of ground-truth commands whose prediction has the same
/// command type and lies within `delta` levels (strictly). total = K.
Tally param_tally(const code::TokenSequence& gt, const code::TokenSequence& pred, int delta = 3);

double acc_cmd(const code::TokenSequence& gt, const code::TokenSequence& pred);

struct ParamAccuracy {
  double value = 1.0;
  std::size_t slots = 0;   // K
  bool defined = true;     // false when K = 0; value is then 1.0
};
ParamAccuracy acc_param(const code::TokenSequence& gt, const code::TokenSequence& pred, int delta = 3);

// ---------------------------------------------------------------------------
// Chamfer distance

/// Static 3-d tree answering exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(const std::vector<geom::Vec3>& points);
  /// Squared distance to the nearest stored point.
  double nearest_sq(geom::Vec3 q) const;

 private:
  struct Node {
    std::size_t point;
    int axis;
    std::size_t left, right;  // kNone when absent
  };
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(std::size_t node, geom::Vec3 q, double& best) const;

  std::vector<geom::Vec3> points_;
  std::vector<Node> nodes_;
  std::size_t root_ = kNone;
};

/// mean_p min_q |p-q|^power + mean_q min_p |q-p|^power, power 1 or 2.
double chamfer(const geom::PointCloud& p, const geom::PointCloud& q, int power = 2);
/// O(|P| |Q|) reference used in tests.
double chamfer_bruteforce(const geom::PointCloud& p, const geom::PointCloud& q, int power = 2);

// ---------------------------------------------------------------------------
// Validity

struct Validity {
  bool valid = false;
  std::string stage;  // "parse", "validate", "execute", "sample" or "" when valid
  std::string message;
};

/// Valid iff the code parses, validates, executes and yields boundary points.
Validity check_program(std::string_view code, std::size_t n_points = 256, std::uint64_t seed = 0);
double invalid_ratio(const std::vector<std::string>& programs, std::size_t n_points = 256, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Ambiguity statistics

struct AmbiguitySample {
  double cd = 0.0;
  double acc_cmd = 0.0;
};

struct AmbiguityStats {
  std::size_t low_cd_count = 0;
  /// One entry per accuracy threshold; nullopt when no sample is under the
  /// CD threshold.
  std::vector<std::optional<double>> below;
};

AmbiguityStats ambiguity_stats(const std::vector<AmbiguitySample>& results, double cd_threshold = 0.01,
                               const std::vector<double>& acc_thresholds = {0.9, 0.8});

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Batch evaluation

struct EvalConfig {
  int delta = 3;
  int cd_power = 2;
  std::size_t n_points = 8096;
  std::uint64_t seed = 0;
};

struct SampleResult {
  Validity validity;
  Tally commands;
  Tally params;
  std::optional<double> cd;  // set when both programs execute
};

struct MetricReport {
  double acc_cmd = 0.0;
  double acc_param = 0.0;
  bool acc_param_defined = true;
  std::optional<double> cd_median;
  std::vector<double> cd_values;
  double invalid_ratio = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_invalid = 0;
  Tally commands;  // micro-averaged over all samples; total = Nc
  Tally params;    // total = K
  std::vector<SampleResult> samples;

  /// {acc_cmd, acc_param, cd_median_e3, invalid_ratio_pct, n_samples, config}
  nlohmann::json to_json(const EvalConfig& config) const;
};

struct EvalPair {
  std::string gt;
  std::string pred;
};

/// Ground truth must be valid. Predictions that do not parse count as empty
/// command sequences; invalid predictions have no CD.
SampleResult evaluate_pair(const EvalPair& pair, const EvalConfig& config, std::uint64_t sample_seed);
MetricReport evaluate(const std::vector<EvalPair>& pairs, const EvalConfig& config = {});

}  // namespace cadkit::metrics
