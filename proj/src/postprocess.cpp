#include "quadlayout/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "quadlayout/errors.hpp"

namespace quadlayout {

namespace {

struct Cluster {
  std::vector<std::size_t> members;  // endpoint indices (2 * edge + side)
  Vec3 position;
  bool alive = true;
};

Vec3 mean_of(const std::vector<std::size_t>& members, std::span<const Vec3> points) {
  Vec3 s;
  for (std::size_t m : members) s += points[m];
  return s / static_cast<double>(members.size());
}

bool share_edge(const Cluster& a, const Cluster& b) {
  for (std::size_t x : a.members) {
    for (std::size_t y : b.members) {
      if (x / 2 == y / 2) return true;
    }
  }
  return false;
}

double signed_area_xy(const std::vector<Vec3>& loop) {
  double twice = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3& a = loop[i];
    const Vec3& b = loop[(i + 1) % loop.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

// Counter-clockwise (seen from above), starting at the lexicographically
// smallest vertex.
std::vector<Vec3> canonical_loop(std::vector<Vec3> loop) {
  if (signed_area_xy(loop) < 0.0) std::reverse(loop.begin(), loop.end());
  const auto first = std::min_element(loop.begin(), loop.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  });
  std::rotate(loop.begin(), first, loop.end());
  return loop;
}

// Walks the cluster graph if it is one simple cycle; empty otherwise.
std::vector<std::size_t> cycle_order(const std::vector<std::size_t>& alive,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& links) {
  std::vector<std::vector<std::size_t>> adj(alive.size());
  std::vector<std::size_t> slot(*std::max_element(alive.begin(), alive.end()) + 1, 0);
  for (std::size_t i = 0; i < alive.size(); ++i) slot[alive[i]] = i;
  for (const auto& [a, b] : links) {
    if (a == b) return {};
    adj[slot[a]].push_back(slot[b]);
    adj[slot[b]].push_back(slot[a]);
  }
  for (const auto& n : adj) {
    if (n.size() != 2) return {};
  }
  std::vector<std::size_t> order{0};
  std::size_t prev = 0;
  std::size_t cur = adj[0][0];
  while (cur != 0) {
    if (order.size() > alive.size()) return {};
    order.push_back(cur);
    const std::size_t next = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
    prev = cur;
    cur = next;
  }
  if (order.size() != alive.size()) return {};
  return order;
}

}  // namespace

OrientedBox quad_to_cuboid(const Quad& q, double thickness, double score) {
  if (!(thickness > 0.0)) throw InvalidArgument("cuboid thickness must be positive");
  OrientedBox b;
  b.center = q.center;
  b.size = {thickness, q.width, q.height};
  b.heading = wrap_angle(std::atan2(q.normal.y, q.normal.x));
  b.score = score;
  return b;
}

std::vector<std::size_t> nms_indices(std::span<const OrientedBox> boxes, double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return boxes[a].score > boxes[b].score; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (iou_3d(boxes[i], boxes[k]) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

std::vector<OrientedBox> nms(std::span<const OrientedBox> boxes, double iou_threshold) {
  std::vector<OrientedBox> out;
  for (std::size_t i : nms_indices(boxes, iou_threshold)) out.push_back(boxes[i]);
  return out;
}

std::vector<std::size_t> quad_nms_indices(std::span<const QuadPrediction> quads, double iou_threshold,
                                          double thickness) {
  std::vector<OrientedBox> cuboids;
  cuboids.reserve(quads.size());
  for (const auto& q : quads) cuboids.push_back(quad_to_cuboid(q.quad, thickness, q.score()));
  return nms_indices(cuboids, iou_threshold);
}

std::pair<Vec3, Vec3> upper_edge(const Quad& q) {
  const auto c = quad_corners(q);
  return {c[3], c[2]};
}

std::pair<Vec3, Vec3> lower_edge(const Quad& q) {
  const auto c = quad_corners(q);
  return {c[0], c[1]};
}

LayoutPolygon merge_edges(std::span<const std::pair<Vec3, Vec3>> edges, double radius, PolygonKind kind) {
  std::vector<Vec3> points;
  points.reserve(2 * edges.size());
  for (const auto& [a, b] : edges) {
    points.push_back(a);
    points.push_back(b);
  }
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) clusters.push_back({{i}, points[i], true});

  while (true) {
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      if (!clusters[a].alive) continue;
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        if (!clusters[b].alive) continue;
        const double d = distance(clusters[a].position, clusters[b].position);
        if (d < radius && d < best_d && !share_edge(clusters[a], clusters[b])) {
          best_d = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (!std::isfinite(best_d)) break;
    auto& keep = clusters[best_a];
    auto& gone = clusters[best_b];
    keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
    std::sort(keep.members.begin(), keep.members.end());
    keep.position = mean_of(keep.members, points);
    gone.alive = false;
  }

  std::vector<std::size_t> cluster_of(points.size());
  std::vector<std::size_t> alive;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (!clusters[c].alive) continue;
    alive.push_back(c);
    for (std::size_t m : clusters[c].members) cluster_of[m] = c;
  }
  if (alive.size() < 3) throw TooFewQuads("merged polygon has fewer than 3 vertices");

  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t e = 0; e < edges.size(); ++e) links.emplace_back(cluster_of[2 * e], cluster_of[2 * e + 1]);

  std::vector<Vec3> loop;
  const auto order = cycle_order(alive, links);
  if (!order.empty()) {
    for (std::size_t i : order) loop.push_back(clusters[alive[i]].position);
  } else {
    Vec3 centroid;
    for (std::size_t c : alive) centroid += clusters[c].position;
    centroid = centroid / static_cast<double>(alive.size());
    for (std::size_t c : alive) loop.push_back(clusters[c].position);
    std::stable_sort(loop.begin(), loop.end(), [&](const Vec3& a, const Vec3& b) {
      return std::atan2(a.y - centroid.y, a.x - centroid.x) < std::atan2(b.y - centroid.y, b.x - centroid.x);
    });
  }

  LayoutPolygon poly{canonical_loop(std::move(loop)), kind};
  try {
    validate(poly);
  } catch (const InvalidArgument& e) {
    throw TooFewQuads(std::string("assembled polygon is degenerate: ") + e.what());
  }
  return poly;
}

CeilingFloor assemble_ceiling_floor(std::span<const QuadPrediction> quads, double quadness_min,
                                    double merge_radius) {
  std::vector<std::pair<Vec3, Vec3>> upper;
  std::vector<std::pair<Vec3, Vec3>> lower;
  for (const auto& q : quads) {
    if (!(q.score() > quadness_min)) continue;
    upper.push_back(upper_edge(q.quad));
    lower.push_back(lower_edge(q.quad));
  }
  if (upper.size() < 3) {
    throw TooFewQuads("need at least 3 quads above the quadness threshold, got " + std::to_string(upper.size()));
  }
  return {merge_edges(upper, merge_radius, PolygonKind::ceiling),
          merge_edges(lower, merge_radius, PolygonKind::floor)};
}

LayoutPolygon wall_polygon(const Quad& q) {
  const auto c = quad_corners(q);
  return {{c.begin(), c.end()}, PolygonKind::wall};
}

}  // namespace quadlayout
