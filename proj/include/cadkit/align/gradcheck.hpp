#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cadkit/align/tensor.hpp"
#include "cadkit/util/random.hpp"

namespace cadkit::align {

inline constexpr double kFdStep = 1e-4;
inline constexpr double kGradTolerance = 1e-4;

/// (|a - n| - noise)+ / max(|a|, |n|, floor). `noise` is the round-off
/// bound of the numeric estimate; the floor keeps entries whose true
/// gradient is zero from dividing round-off by round-off.
double relative_error(double analytic, double numeric, double noise = 0.0, double floor = 1e-6);

/// Largest relative error between the tape gradient of `loss` and five-point central
/// differences, over all entries of `inputs` (or `max_entries` random ones per
/// input when non-zero).
double check_gradients(const std::function<Tensor()>& loss, const std::vector<Tensor>& inputs, Rng& rng,
                       std::size_t max_entries = 0);

struct GradCheckResult {
  std::string op;
  std::size_t trials = 0;
  double max_rel_err = 0.0;
  bool passed() const { return max_rel_err < kGradTolerance; }
};

/// Every differentiable op and model block on `trials` random shapes.
std::vector<GradCheckResult> gradient_suite(std::size_t trials = 20, std::uint64_t seed = 0);

}  // namespace cadkit::align
