#pragma once

// Independent reference computations used by unit and acceptance tests.

#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "cadkit/geom/solid.hpp"
#include "cadkit/graph/face_graph.hpp"
#include "generators.hpp"

namespace cadkit::testgen {

/// Fraction of uniform probes in [lo, hi]^3 classified inside, times the box volume.
inline double monte_carlo_volume(const geom::Solid& solid, std::size_t probes, double lo, double hi,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < probes; ++i) {
    const geom::Vec3 p{lo + (hi - lo) * uniform01(rng), lo + (hi - lo) * uniform01(rng),
                       lo + (hi - lo) * uniform01(rng)};
    if (solid.contains(p) == geom::Membership::Inside) ++inside;
  }
  const double side = hi - lo;
  return side * side * side * static_cast<double>(inside) / static_cast<double>(probes);
}

struct CutOracleResult {
  std::size_t probes = 0;
  std::size_t mismatches = 0;
  std::size_t inside = 0;  // probes the oracle puts inside A - B
};

/// A minus B by interval arithmetic: inside iff strictly inside A on every
/// axis and not in the closed box B. Probes closer than 1e-6 to any box plane
/// are skipped since the executor may call them boundary.
inline CutOracleResult check_box_cut(const BoxSpec& a, const BoxSpec& b, std::size_t probes, Rng& rng) {
  ProgramBuilder pb;
  add_box(pb, a, code::BoolOp::NewBody);
  add_box(pb, b, code::BoolOp::Cut);
  CutOracleResult out;
  geom::Solid solid;
  try {
    solid = geom::execute(pb.p);
  } catch (const geom::GeomError& e) {
    // the executor may only give up when B swallows A
    bool covered = true;
    for (int k = 0; k < 3; ++k) covered = covered && b.lo(k) <= a.lo(k) && a.hi(k) <= b.hi(k);
    out.probes = 1;
    out.mismatches = covered && e.kind() == geom::GeomError::Kind::EmptyResult ? 0 : 1;
    return out;
  }
  double lo[3], hi[3];
  for (int k = 0; k < 3; ++k) {
    lo[k] = std::min(a.lo(k), b.lo(k)) - 0.05;
    hi[k] = std::max(a.hi(k), b.hi(k)) + 0.05;
  }
  while (out.probes < probes) {
    double c[3];
    bool near = false;
    for (int k = 0; k < 3; ++k) {
      c[k] = lo[k] + (hi[k] - lo[k]) * uniform01(rng);
      for (double plane : {a.lo(k), a.hi(k), b.lo(k), b.hi(k)}) near = near || std::abs(c[k] - plane) < 1e-6;
    }
    if (near) continue;
    bool in_a = true, in_b = true;
    for (int k = 0; k < 3; ++k) {
      in_a = in_a && a.lo(k) < c[k] && c[k] < a.hi(k);
      in_b = in_b && b.lo(k) <= c[k] && c[k] <= b.hi(k);
    }
    const bool expected = in_a && !in_b;
    const bool got = solid.contains({c[0], c[1], c[2]}) == geom::Membership::Inside;
    ++out.probes;
    if (expected) ++out.inside;
    if (expected != got) ++out.mismatches;
  }
  return out;
}

/// Breadth-first reachability from node 0 over the edge list.
inline bool bfs_connected(std::size_t n, const std::vector<std::array<std::size_t, 2>>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == n;
}

}  // namespace cadkit::testgen
