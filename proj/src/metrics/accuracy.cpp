#include <algorithm>
#include <cstdlib>

#include "cadkit/metrics/metrics.hpp"

namespace cadkit::metrics {

namespace {

code::CommandType type_at(const code::TokenSequence& s, std::size_t i) {
  return i < s.rows.size() ? s.rows[i].type : code::CommandType::Eos;
}

}  // namespace

Tally command_tally(const code::TokenSequence& gt, const code::TokenSequence& pred) {
  Tally t;
  t.total = std::max(gt.rows.size(), pred.rows.size());
  for (std::size_t i = 0; i < t.total; ++i)
    if (type_at(gt, i) == type_at(pred, i)) ++t.correct;
  return t;
}

Tally param_tally(const code::TokenSequence& gt, const code::TokenSequence& pred, int delta) {
  Tally t;
  for (std::size_t i = 0; i < gt.rows.size(); ++i) {
    const auto& g = gt.rows[i];
    const bool same = type_at(pred, i) == g.type;
    for (int s = 0; s < code::kParamCount; ++s) {
      if (g.params[s] == code::kUnused) continue;
      ++t.total;
      if (!same) continue;
      const int p = pred.rows[i].params[s];
      if (p != code::kUnused && std::abs(p - g.params[s]) < delta) ++t.correct;
    }
  }
  return t;
}

double acc_cmd(const code::TokenSequence& gt, const code::TokenSequence& pred) {
  return command_tally(gt, pred).fraction();
}

ParamAccuracy acc_param(const code::TokenSequence& gt, const code::TokenSequence& pred, int delta) {
  const Tally t = param_tally(gt, pred, delta);
  ParamAccuracy a;
  a.slots = t.total;
  a.defined = t.total > 0;
  a.value = t.fraction();
  return a;
}

AmbiguityStats ambiguity_stats(const std::vector<AmbiguitySample>& results, double cd_threshold,
                               const std::vector<double>& acc_thresholds) {
  AmbiguityStats s;
  std::vector<std::size_t> below(acc_thresholds.size(), 0);
  for (const auto& r : results) {
    if (!(r.cd <= cd_threshold)) continue;
    ++s.low_cd_count;
    for (std::size_t k = 0; k < acc_thresholds.size(); ++k)
      if (r.acc_cmd < acc_thresholds[k]) ++below[k];
  }
  for (auto b : below) {
    if (s.low_cd_count == 0)
      s.below.push_back(std::nullopt);
    else
      s.below.push_back(static_cast<double>(b) / static_cast<double>(s.low_cd_count));
  }
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) throw MetricsError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace cadkit::metrics
