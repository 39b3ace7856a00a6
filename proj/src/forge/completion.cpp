#include <cmath>
#include <numeric>

#include "cadkit/forge/forge.hpp"

namespace cadkit::forge {

SplitIndices split_indices(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed) {
  if (n == 0) throw ForgeError(ForgeError::Kind::EmptyDataset, "cannot split an empty dataset");
  for (double r : ratios)
    if (r < 0.0) throw ForgeError(ForgeError::Kind::BadRatio, "split ratios must be non-negative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw ForgeError(ForgeError::Kind::BadRatio, "split ratios must sum to 1");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(rng, order);

  // The small epsilon keeps products like 0.29 * 100 from flooring to 28.
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n) + 1e-9));
  const std::size_t n_train = n - n_val - n_test;

  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

namespace {

bool valid_cut(const code::Program& p, std::size_t k) {
  if (k == 0 || k >= p.statements.size()) return false;
  const auto& last = p.statements[k - 1];
  return !std::holds_alternative<code::LoopStart>(last) && !std::holds_alternative<code::SketchDecl>(last);
}

}  // namespace

CompletionSample mask_for_completion(const code::Program& program, double keep_fraction) {
  const std::size_t n = program.statements.size();
  if (n < 2) throw ForgeError(ForgeError::Kind::TooShort, "completion needs at least 2 statements");
  if (!(keep_fraction > 0.0 && keep_fraction < 1.0))
    throw ForgeError(ForgeError::Kind::BadRatio, "keep fraction must lie in (0, 1)");

  const auto target = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(n) + 1e-9));
  std::size_t cut = 0;
  for (std::size_t k = std::min(target, n - 1); k >= 1 && !cut; --k)
    if (valid_cut(program, k)) cut = k;
  for (std::size_t k = target + 1; k < n && !cut; ++k)
    if (valid_cut(program, k)) cut = k;
  if (!cut) throw ForgeError(ForgeError::Kind::TooShort, "program has no valid completion cut");

  CompletionSample s;
  s.full = program;
  s.full.spans.clear();
  s.prefix.statements.assign(program.statements.begin(), program.statements.begin() + cut);
  s.keep_fraction = keep_fraction;
  s.cut = cut;
  return s;
}

CompletionSample mask_for_completion_seeded(const code::Program& program, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  return mask_for_completion(program, lo + (hi - lo) * uniform01(rng));
}

}  // namespace cadkit::forge
