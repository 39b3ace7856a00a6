#include "cadkit/graph/face_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

namespace cadkit::graph {

using geom::FaceKind;
using geom::LeafFace;
using geom::Solid;
using geom::Vec3;

namespace {

constexpr int kProbeGrid = 32;
constexpr int kBisectSteps = 40;

struct FaceProbe {
  const Solid& solid;
  const LeafFace& face;
  double delta;
  bool periodic;

  FaceProbe(const Solid& s, const LeafFace& f, double d)
      : solid(s), face(f), delta(d), periodic(is_periodic(s, f)) {}

  static bool is_periodic(const Solid& s, const LeafFace& f) {
    if (f.kind == FaceKind::PlanarCap) return false;
    return s.leaves()[f.leaf].profile.loops[f.loop].curves[f.curve].kind == geom::Curve2::Kind::Circle;
  }

  bool alive(double u, double v) const {
    if (periodic) u -= std::floor(u);
    return geom::survives(solid, face, geom::evaluate_face(solid, face, u, v), delta);
  }

  Vec3 point(double u, double v) const { return geom::evaluate_face(solid, face, u, v).point; }

  // a is alive, b is not; returns the boundary point on the alive side.
  Vec3 bisect(double ua, double va, double ub, double vb) const {
    for (int k = 0; k < kBisectSteps; ++k) {
      const double um = 0.5 * (ua + ub), vm = 0.5 * (va + vb);
      if (alive(um, vm)) {
        ua = um;
        va = vm;
      } else {
        ub = um;
        vb = vm;
      }
    }
    return point(periodic ? ua - std::floor(ua) : ua, va);
  }

  bool alive_near(double u, double v, double h) const {
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        if (a == 0 && b == 0) continue;
        double uu = u + a * h;
        const double vv = std::clamp(v + b * h, 0.0, 1.0);
        uu = periodic ? uu - std::floor(uu) : std::clamp(uu, 0.0, 1.0);
        if (alive(uu, vv)) return true;
      }
    }
    return false;
  }
};

double model_size(const Solid& solid) {
  const auto b = solid.bounds();
  const Vec3 e = b.hi - b.lo;
  return std::max({e.x, e.y, e.z, 1e-12});
}

// Points on the trimmed boundary of a face: transitions of survival between
// neighboring probe cells, and natural borders of surviving cells.
std::vector<Vec3> boundary_points(const FaceProbe& fp) {
  const int m = kProbeGrid;
  auto c = [m](int i) { return (i + 0.5) / m; };
  std::vector<char> alive(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) alive[i * m + j] = fp.alive(c(i), c(j));

  std::vector<Vec3> pts;
  auto edge_between = [&](double ua, double va, bool la, double ub, double vb, bool lb) {
    if (la == lb) return;
    if (la)
      pts.push_back(fp.bisect(ua, va, ub, vb));
    else
      pts.push_back(fp.bisect(ub, vb, ua, va));
  };
  auto border = [&](double ua, double va, double ub, double vb) {
    if (fp.alive(ub, vb))
      pts.push_back(fp.point(ub, vb));
    else
      pts.push_back(fp.bisect(ua, va, ub, vb));
  };

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const bool a = alive[i * m + j];
      if (i + 1 < m) edge_between(c(i), c(j), a, c(i + 1), c(j), alive[(i + 1) * m + j]);
      if (j + 1 < m) edge_between(c(i), c(j), a, c(i), c(j + 1), alive[i * m + j + 1]);
      if (!a) continue;
      if (fp.periodic) {
        if (i == m - 1) edge_between(c(i), c(j), a, 1.0 + c(0), c(j), alive[j]);
      } else {
        if (i == 0) border(c(i), c(j), 0.0, c(j));
        if (i == m - 1) border(c(i), c(j), 1.0, c(j));
      }
      if (j == 0) border(c(i), c(j), c(i), 0.0);
      if (j == m - 1) border(c(i), c(j), c(i), 1.0);
    }
  }
  return pts;
}

bool has_length(const std::vector<Vec3>& pts, double min_len) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (geom::norm(pts[i] - pts[j]) > min_len) return true;
  return false;
}

// Greedy nearest-neighbour chain starting from the point farthest from the
// centroid.
std::vector<Vec3> order_chain(std::vector<Vec3> pts) {
  std::vector<Vec3> uniq;
  for (const auto& p : pts)
    if (std::none_of(uniq.begin(), uniq.end(), [&](const Vec3& q) { return geom::norm(p - q) < 1e-9; }))
      uniq.push_back(p);
  if (uniq.size() < 2) return uniq;
  Vec3 centroid;
  for (const auto& p : uniq) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(uniq.size()));
  std::size_t start = 0;
  for (std::size_t i = 1; i < uniq.size(); ++i)
    if (geom::norm(uniq[i] - centroid) > geom::norm(uniq[start] - centroid)) start = i;

  std::vector<Vec3> chain{uniq[start]};
  std::vector<bool> used(uniq.size(), false);
  used[start] = true;
  for (std::size_t k = 1; k < uniq.size(); ++k) {
    std::size_t best = uniq.size();
    double best_d = 0.0;
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      if (used[i]) continue;
      const double d = geom::norm(uniq[i] - chain.back());
      if (best == uniq.size() || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    used[best] = true;
    chain.push_back(uniq[best]);
  }
  return chain;
}

std::vector<Vec3> resample(const std::vector<Vec3>& chain, int r) {
  std::vector<double> acc{0.0};
  for (std::size_t i = 1; i < chain.size(); ++i) acc.push_back(acc.back() + geom::norm(chain[i] - chain[i - 1]));
  std::vector<Vec3> out;
  for (int k = 0; k < r; ++k) {
    const double s = acc.back() * k / (r - 1);
    const auto it = std::lower_bound(acc.begin(), acc.end(), s);
    const std::size_t i = std::clamp<std::size_t>(it - acc.begin(), 1, chain.size() - 1);
    const double seg = acc[i] - acc[i - 1];
    const double t = seg > 0 ? std::clamp((s - acc[i - 1]) / seg, 0.0, 1.0) : 0.0;
    out.push_back(chain[i - 1] + (chain[i] - chain[i - 1]) * t);
  }
  return out;
}

Vec3 normal_at(const Solid& solid, const LeafFace& face, Vec3 p) {
  double u = 0, v = 0;
  geom::face_param(solid, face, p, u, v);
  return geom::evaluate_face(solid, face, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)).normal;
}

}  // namespace

std::vector<LeafFace> enumerate_faces(const Solid& solid) {
  std::vector<LeafFace> out;
  for (const auto& f : geom::leaf_faces(solid))
    if (geom::face_survives_somewhere(solid, f, kProbeGrid)) out.push_back(f);
  if (out.empty()) throw geom::GeomError(geom::GeomError::Kind::EmptyResult, "no face of the solid survives");
  return out;
}

FaceGraph adjacency_graph(const Solid& solid) {
  FaceGraph g;
  g.solid = solid;
  g.faces = enumerate_faces(solid);
  const double delta = solid.probe_offset();
  const double size = model_size(solid);
  const double on_tol = 5.0 * delta;
  const std::size_t n = g.faces.size();

  std::vector<FaceProbe> probes;
  probes.reserve(n);
  for (const auto& f : g.faces) probes.emplace_back(solid, f, delta);

  g.flipped.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    bool done = false;
    for (int a = 0; a < kProbeGrid && !done; ++a) {
      for (int b = 0; b < kProbeGrid && !done; ++b) {
        const auto fp = geom::evaluate_face(solid, g.faces[i], (a + 0.5) / kProbeGrid, (b + 0.5) / kProbeGrid);
        Vec3 outward;
        if (geom::survives(solid, g.faces[i], fp, delta, &outward)) {
          g.flipped[i] = geom::dot(outward, fp.normal) < 0;
          done = true;
        }
      }
    }
  }

  std::map<std::array<std::size_t, 2>, std::vector<Vec3>> support;
  for (std::size_t i = 0; i < n; ++i) {
    for (const Vec3& p : boundary_points(probes[i])) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (geom::patch_distance(solid, g.faces[j], p) > on_tol) continue;
        double u = 0, v = 0;
        geom::face_param(solid, g.faces[j], p, u, v);
        if (!probes[j].alive_near(u, v, 2e-3)) continue;
        support[{std::min(i, j), std::max(i, j)}].push_back(p);
      }
    }
  }
  for (auto& [key, pts] : support) {
    if (!has_length(pts, 1e-3 * size)) continue;
    g.edges.push_back(key);
    g.edge_support.push_back(std::move(pts));
  }
  return g;
}

void sample_uv_grids(FaceGraph& g, int r) {
  if (r < 2) throw std::invalid_argument("grid resolution must be at least 2");
  const Solid& solid = g.solid;
  const double delta = solid.probe_offset();
  const double size = model_size(solid);
  g.resolution = r;
  g.node_grids.assign(g.faces.size() * r * r * kNodeChannels, 0.0);
  for (std::size_t f = 0; f < g.faces.size(); ++f) {
    const double sign = g.flipped[f] ? -1.0 : 1.0;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        const double u = static_cast<double>(i) / (r - 1);
        const double v = static_cast<double>(j) / (r - 1);
        const auto fp = geom::evaluate_face(solid, g.faces[f], u, v);
        double* cell = &g.node_grids[((f * r + i) * r + j) * kNodeChannels];
        const Vec3 nrm = fp.normal * sign;
        const double vals[kNodeChannels] = {fp.point.x, fp.point.y, fp.point.z, nrm.x, nrm.y, nrm.z,
                                            geom::survives(solid, g.faces[f], fp, delta) ? 1.0 : 0.0};
        std::copy(vals, vals + kNodeChannels, cell);
      }
    }
  }

  g.edge_grids.assign(g.edges.size() * r * kEdgeChannels, 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const LeafFace& fa = g.faces[g.edges[e][0]];
    const LeafFace& fb = g.faces[g.edges[e][1]];
    const auto chain = order_chain(g.edge_support[e]);
    auto pts = resample(chain, r);
    for (auto& p : pts) {
      for (int it = 0; it < 200; ++it) {
        const Vec3 q = geom::project_to_surface(solid, fb, geom::project_to_surface(solid, fa, p));
        const double step = geom::norm(q - p);
        p = q;
        if (step < 1e-15 * size) break;
      }
    }
    for (int k = 0; k < r; ++k) {
      const Vec3 dir = pts[std::min(k + 1, r - 1)] - pts[std::max(k - 1, 0)];
      Vec3 t = geom::cross(normal_at(solid, fa, pts[k]), normal_at(solid, fb, pts[k]));
      if (geom::norm(t) < 1e-6) t = dir;
      if (geom::norm(t) == 0.0) t = chain.size() > 1 ? chain.back() - chain.front() : Vec3{1, 0, 0};
      t = geom::normalized(t);
      if (geom::dot(t, dir) < 0) t = -t;
      double* cell = &g.edge_grids[(e * r + k) * kEdgeChannels];
      const double vals[kEdgeChannels] = {pts[k].x, pts[k].y, pts[k].z, t.x, t.y, t.z};
      std::copy(vals, vals + kEdgeChannels, cell);
    }
  }
}

bool is_connected(const FaceGraph& g) {
  const std::size_t n = g.faces.size();
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : g.edges) {
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
    for (auto w : adj[u])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push(w);
      }
  }
  return count == n;
}

TensorArchive to_archive(const FaceGraph& g) {
  const std::size_t n = g.faces.size(), e = g.edges.size(), r = static_cast<std::size_t>(g.resolution);
  TensorArchive a;
  a.tensors.push_back({"node_grids", DType::F32, {n, r, r, static_cast<std::size_t>(kNodeChannels)}, g.node_grids});
  Tensor idx{"edge_index", DType::F32, {e, 2}, {}};
  for (const auto& ed : g.edges) {
    idx.data.push_back(static_cast<double>(ed[0]));
    idx.data.push_back(static_cast<double>(ed[1]));
  }
  a.tensors.push_back(std::move(idx));
  a.tensors.push_back({"edge_grids", DType::F32, {e, r, static_cast<std::size_t>(kEdgeChannels)}, g.edge_grids});
  return a;
}

void export_tensors(const FaceGraph& g, const std::filesystem::path& header) {
  if (g.resolution < 2) throw ArchiveError("graph grids are not sampled");
  write_archive(to_archive(g), header);
}

}  // namespace cadkit::graph
