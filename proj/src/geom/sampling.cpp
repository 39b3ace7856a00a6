#include "cadkit/geom/sampling.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <random>

#include "cadkit/geom/face.hpp"

namespace cadkit::geom {

PointCloud sample_surface(const Solid& solid, std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  cloud.seed = seed;
  if (n == 0) return cloud;
  cloud.points.reserve(n);

  const auto faces = leaf_faces(solid);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& f : faces) {
    total += face_area(solid, f);
    cumulative.push_back(total);
  }
  if (total <= 0.0) throw GeomError(GeomError::Kind::SamplingExhausted, "solid has no surface area");

  const double delta = solid.probe_offset();
  std::mt19937_64 rng(seed);
  std::size_t attempts = 0;
  while (cloud.points.size() < n) {
    const double pick = uniform01(rng) * total;
    const std::size_t fi = std::min<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(), faces.size() - 1);
    const LeafFace& face = faces[fi];
    FacePoint fp;
    // Caps are sampled by rejection over the profile's bounding box.
    do {
      const double u = uniform01(rng);
      const double v = uniform01(rng);
      fp = evaluate_face(solid, face, u, v);
    } while (!fp.on_patch);
    ++attempts;
    if (survives(solid, face, fp, delta) && solid.contains(fp.point) == Membership::Boundary)
      cloud.points.push_back(fp.point);
    if (attempts >= 100000 && static_cast<double>(cloud.points.size()) < 1e-4 * static_cast<double>(attempts))
      throw GeomError(GeomError::Kind::SamplingExhausted,
                      "only " + std::to_string(cloud.points.size()) + " of " + std::to_string(attempts) +
                          " candidates lie on the boundary");
  }
  return cloud;
}

PointCloud normalize(const PointCloud& cloud) {
  Box3 box;
  for (const auto& p : cloud.points) box.add(p);
  const Vec3 e = box.hi - box.lo;
  const double longest = box.empty() ? 0.0 : std::max({e.x, e.y, e.z});
  if (!(longest > 0.0)) throw GeomError(GeomError::Kind::ZeroExtent, "all points coincide");
  const Vec3 center = (box.lo + box.hi) * 0.5;
  PointCloud out;
  out.seed = cloud.seed;
  out.normalized = true;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back((p - center) * (1.0 / longest));
  return out;
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  const auto old = out.precision(9);
  for (const auto& p : cloud.points) out << p.x << ' ' << p.y << ' ' << p.z << '\n';
  out.precision(old);
}

}  // namespace cadkit::geom
