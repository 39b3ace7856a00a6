#include <algorithm>
#include <cmath>
#include <numeric>

#include "cadkit/metrics/metrics.hpp"

namespace cadkit::metrics {

using geom::Vec3;

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

std::size_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return kNone;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const std::size_t id = nodes_.size();
  nodes_.push_back({idx[mid], axis, kNone, kNone});
  const std::size_t l = build(idx, lo, mid, depth + 1);
  const std::size_t r = build(idx, mid + 1, hi, depth + 1);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void KdTree::search(std::size_t n, Vec3 q, double& best) const {
  if (n == kNone) return;
  const Node& node = nodes_[n];
  const Vec3 d = points_[node.point] - q;
  best = std::min(best, geom::dot(d, d));
  const double diff = q[node.axis] - points_[node.point][node.axis];
  // near side first so the bound is tight before the far side is tested
  search(diff < 0 ? node.left : node.right, q, best);
  if (diff * diff < best) search(diff < 0 ? node.right : node.left, q, best);
}

double KdTree::nearest_sq(Vec3 q) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

namespace {

double term(const std::vector<Vec3>& from, const KdTree& to, int power) {
  double sum = 0.0;
  for (const auto& p : from) {
    const double d2 = to.nearest_sq(p);
    sum += power == 2 ? d2 : std::sqrt(d2);
  }
  return sum / static_cast<double>(from.size());
}

void check(const geom::PointCloud& p, const geom::PointCloud& q, int power) {
  if (p.points.empty() || q.points.empty()) throw MetricsError("chamfer distance of an empty cloud");
  if (power != 1 && power != 2) throw MetricsError("chamfer power must be 1 or 2");
}

}  // namespace

double chamfer(const geom::PointCloud& p, const geom::PointCloud& q, int power) {
  check(p, q, power);
  const KdTree tp(p.points), tq(q.points);
  return term(p.points, tq, power) + term(q.points, tp, power);
}

double chamfer_bruteforce(const geom::PointCloud& p, const geom::PointCloud& q, int power) {
  check(p, q, power);
  auto one = [power](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double sum = 0.0;
    for (const auto& x : a) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : b) best = std::min(best, geom::dot(x - y, x - y));
      sum += power == 2 ? best : std::sqrt(best);
    }
    return sum / static_cast<double>(a.size());
  };
  return one(p.points, q.points) + one(q.points, p.points);
}

}  // namespace cadkit::metrics
