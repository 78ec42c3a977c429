#include "quadlayout/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "quadlayout/classes.hpp"
#include "quadlayout/errors.hpp"
#include "quadlayout/random.hpp"

namespace quadlayout {

namespace {

struct Rect {
  double x0, y0, x1, y1;

  bool contains(const Vec2& p, double margin) const {
    return p.x >= x0 + margin && p.x <= x1 - margin && p.y >= y0 + margin && p.y <= y1 - margin;
  }
};

struct Room {
  double width = 0.0;
  double length = 0.0;
  double height = 0.0;
  std::vector<Vec2> footprint;  // counter-clockwise
  std::vector<Rect> parts;      // union covers the footprint
  Vec3 center;
};

Room make_room(const GenConfig& cfg, Rng& rng) {
  Room r;
  r.width = rng.uniform(cfg.width_min, cfg.width_max);
  r.length = rng.uniform(cfg.length_min, cfg.length_max);
  r.height = rng.uniform(cfg.height_min, cfg.height_max);
  const double hx = 0.5 * r.width;
  const double hy = 0.5 * r.length;
  if (cfg.shape == RoomShape::rect) {
    r.footprint = {{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
    r.parts = {{-hx, -hy, hx, hy}};
    r.center = {0.0, 0.0, 0.5 * r.height};
  } else {
    const double nx = rng.uniform(0.3, 0.5) * r.width;
    const double ny = rng.uniform(0.3, 0.5) * r.length;
    r.footprint = {{-hx, -hy}, {hx, -hy}, {hx, hy - ny}, {hx - nx, hy - ny}, {hx - nx, hy}, {-hx, hy}};
    r.parts = {{-hx, -hy, hx, hy - ny}, {-hx, -hy, hx - nx, hy}};
    // Center of the region every wall faces.
    r.center = {0.5 * (-hx + hx - nx), 0.5 * (-hy + hy - ny), 0.5 * r.height};
  }
  return r;
}

std::vector<Quad> room_walls(const Room& r) {
  std::vector<Quad> walls;
  const std::size_t n = r.footprint.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = r.footprint[i];
    const Vec2 b = r.footprint[(i + 1) % n];
    const Vec2 d = b - a;
    const double len = std::hypot(d.x, d.y);
    Quad q;
    q.center = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * r.height};
    q.width = len;
    q.height = r.height;
    q.normal = {-d.y / len, d.x / len, 0.0};  // left of a counter-clockwise edge
    walls.push_back(orient_inward(q, r.center));
  }
  return walls;
}

bool inside_room(const Room& r, const Vec2& p) {
  return std::any_of(r.parts.begin(), r.parts.end(), [&](const Rect& part) { return part.contains(p, 0.0); });
}

bool footprint_fits(const Room& r, const OrientedBox& b, double margin) {
  const auto fp = box_footprint(b);
  return std::any_of(r.parts.begin(), r.parts.end(), [&](const Rect& part) {
    return std::all_of(fp.begin(), fp.end(), [&](const Vec2& v) { return part.contains(v, margin); });
  });
}

double footprint_radius(const OrientedBox& b) { return 0.5 * std::hypot(b.size.x, b.size.y); }

std::vector<OrientedBox> place_objects(const GenConfig& cfg, const Room& room, Rng& rng) {
  std::vector<int> classes = cfg.classes;
  if (classes.empty()) {
    for (int c = 0; c < cls::count; ++c) classes.push_back(c);
  }
  const auto& nominal = default_class_sizes();
  const auto count = static_cast<std::size_t>(cfg.objects_min) +
                     rng.index(static_cast<std::size_t>(cfg.objects_max - cfg.objects_min + 1));
  std::vector<OrientedBox> boxes;
  constexpr int kAttempts = 200;
  for (std::size_t k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      OrientedBox b;
      b.class_id = classes[rng.index(classes.size())];
      const Vec3& s = nominal[static_cast<std::size_t>(b.class_id)];
      b.size = {s.x * rng.uniform(0.8, 1.2), s.y * rng.uniform(0.8, 1.2), s.z * rng.uniform(0.8, 1.2)};
      if (rng.uniform() < 0.5) {
        b.heading = wrap_angle(static_cast<double>(rng.index(4)) * 0.5 * kPi);
      } else {
        b.heading = rng.uniform(-kPi, kPi);
      }
      b.center = {rng.uniform(-0.5 * room.width, 0.5 * room.width), rng.uniform(-0.5 * room.length, 0.5 * room.length),
                  0.5 * b.size.z};
      b.score = 1.0;
      if (b.size.z > room.height - cfg.wall_margin) continue;
      if (!footprint_fits(room, b, cfg.wall_margin)) continue;
      const bool overlaps = std::any_of(boxes.begin(), boxes.end(), [&](const OrientedBox& o) {
        const double dx = o.center.x - b.center.x;
        const double dy = o.center.y - b.center.y;
        return std::hypot(dx, dy) < footprint_radius(o) + footprint_radius(b);
      });
      if (overlaps) continue;
      boxes.push_back(b);
      break;
    }
  }
  return boxes;
}

// Point sampling surfaces.
enum class SurfaceKind { wall, floor, ceiling, box_face };

struct Surface {
  SurfaceKind kind;
  std::size_t index;  // wall or box index
  int face = 0;       // box face 0..5
  double area;
};

Vec3 sample_box_face(const OrientedBox& b, int face, Rng& rng) {
  const double u = rng.uniform(-0.5, 0.5);
  const double v = rng.uniform(-0.5, 0.5);
  Vec3 local;
  switch (face) {
    case 0: local = {0.5 * b.size.x, u * b.size.y, v * b.size.z}; break;
    case 1: local = {-0.5 * b.size.x, u * b.size.y, v * b.size.z}; break;
    case 2: local = {u * b.size.x, 0.5 * b.size.y, v * b.size.z}; break;
    case 3: local = {u * b.size.x, -0.5 * b.size.y, v * b.size.z}; break;
    case 4: local = {u * b.size.x, v * b.size.y, 0.5 * b.size.z}; break;
    default: local = {u * b.size.x, v * b.size.y, -0.5 * b.size.z}; break;
  }
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  return b.center + Vec3{c * local.x - s * local.y, s * local.x + c * local.y, local.z};
}

double face_area(const OrientedBox& b, int face) {
  if (face < 2) return b.size.y * b.size.z;
  if (face < 4) return b.size.x * b.size.z;
  return b.size.x * b.size.y;
}

double footprint_area(const Room& r) {
  std::vector<Vec2> poly = r.footprint;
  return polygon_area(poly);
}

Vec2 sample_footprint(const Room& r, Rng& rng) {
  while (true) {
    const Vec2 p{rng.uniform(-0.5 * r.width, 0.5 * r.width), rng.uniform(-0.5 * r.length, 0.5 * r.length)};
    if (inside_room(r, p)) return p;
  }
}

PointCloud sample_cloud(const GenConfig& cfg, const Room& room, const std::vector<Quad>& walls,
                        const std::vector<OrientedBox>& boxes, Rng& rng) {
  std::vector<Surface> surfaces;
  for (std::size_t i = 0; i < walls.size(); ++i) {
    surfaces.push_back({SurfaceKind::wall, i, 0, walls[i].width * walls[i].height});
  }
  const double floor_area = footprint_area(room);
  surfaces.push_back({SurfaceKind::floor, 0, 0, floor_area});
  surfaces.push_back({SurfaceKind::ceiling, 0, 0, floor_area});
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (int f = 0; f < 6; ++f) surfaces.push_back({SurfaceKind::box_face, i, f, face_area(boxes[i], f)});
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& s : surfaces) {
    total += s.area;
    cumulative.push_back(total);
  }

  PointCloud cloud;
  cloud.positions.reserve(cfg.points);
  cloud.features.resize(static_cast<Eigen::Index>(cfg.points), 1);
  cloud.feature_names = {"instance"};
  for (std::size_t n = 0; n < cfg.points; ++n) {
    const double pick = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const Surface& s = surfaces[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                      surfaces.size() - 1)];
    Vec3 p;
    double instance = -1.0;
    switch (s.kind) {
      case SurfaceKind::wall: {
        const Quad& q = walls[s.index];
        const QuadFrame f = quad_frame(q);
        p = q.center + f.u * (rng.uniform(-0.5, 0.5) * q.width) + f.v * (rng.uniform(-0.5, 0.5) * q.height);
        break;
      }
      case SurfaceKind::floor:
      case SurfaceKind::ceiling: {
        const Vec2 xy = sample_footprint(room, rng);
        p = {xy.x, xy.y, s.kind == SurfaceKind::floor ? 0.0 : room.height};
        break;
      }
      case SurfaceKind::box_face:
        p = sample_box_face(boxes[s.index], s.face, rng);
        instance = static_cast<double>(s.index);
        break;
    }
    if (cfg.noise > 0.0) p += Vec3{rng.normal(0.0, cfg.noise), rng.normal(0.0, cfg.noise), rng.normal(0.0, cfg.noise)};
    cloud.positions.push_back(p);
    cloud.features(static_cast<Eigen::Index>(n), 0) = instance;
  }
  return cloud;
}

LayoutPolygon lift(const std::vector<Vec2>& footprint, double z, PolygonKind kind) {
  LayoutPolygon p;
  p.kind = kind;
  for (const auto& v : footprint) p.vertices.push_back({v.x, v.y, z});
  return p;
}

}  // namespace

int PointCloud::column(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  return it == feature_names.end() ? -1 : static_cast<int>(it - feature_names.begin());
}

const char* to_string(RoomShape s) { return s == RoomShape::rect ? "rect" : "lshape"; }

RoomShape room_shape_from_string(const std::string& s) {
  if (s == "rect") return RoomShape::rect;
  if (s == "lshape") return RoomShape::lshape;
  throw ConfigError("unknown room shape '" + s + "' (expected rect or lshape)");
}

void validate(const GenConfig& cfg) {
  const auto range_ok = [](double lo, double hi) { return lo > 0.0 && hi >= lo && std::isfinite(hi); };
  if (!range_ok(cfg.width_min, cfg.width_max) || !range_ok(cfg.length_min, cfg.length_max) ||
      !range_ok(cfg.height_min, cfg.height_max)) {
    throw ConfigError("room extents must be positive with min <= max");
  }
  if (std::min(cfg.width_min, cfg.length_min) < 1.0) throw ConfigError("room width and length must be at least 1 m");
  if (cfg.objects_min < 0 || cfg.objects_max < cfg.objects_min) throw ConfigError("bad object count range");
  for (int c : cfg.classes) {
    if (c < 0 || c >= cls::count) throw ConfigError("class id " + std::to_string(c) + " out of range");
  }
  if (cfg.points < 1000) throw ConfigError("a scene needs at least 1000 points");
  if (!(cfg.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  if (!(cfg.wall_margin >= 0.0)) throw ConfigError("wall margin must be non-negative");
}

Scene gen_scene(const GenConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const Room room = make_room(cfg, rng);
  Scene s;
  s.id = cfg.id.empty() ? std::string(to_string(cfg.shape)) + "_" + std::to_string(cfg.seed) : cfg.id;
  s.room_center = room.center;
  s.gt_quads = room_walls(room);
  s.gt_boxes = place_objects(cfg, room, rng);
  s.gt_layout = {lift(room.footprint, room.height, PolygonKind::ceiling), lift(room.footprint, 0.0, PolygonKind::floor)};
  s.class_table = default_class_names();
  s.cloud = sample_cloud(cfg, room, s.gt_quads, s.gt_boxes, rng);
  return s;
}

std::vector<LayoutPolygon> layout_polygons(const std::vector<Quad>& walls,
                                           const std::vector<LayoutPolygon>& ceiling_floor) {
  std::vector<LayoutPolygon> out;
  for (const auto& q : walls) {
    const auto c = quad_corners(q);
    out.push_back({{c.begin(), c.end()}, PolygonKind::wall});
  }
  out.insert(out.end(), ceiling_floor.begin(), ceiling_floor.end());
  return out;
}

VoteTargets gt_vote_targets(std::span<const Vec3> points, std::span<const OrientedBox> boxes, double margin) {
  VoteTargets t;
  t.offsets = Matrix::Zero(static_cast<Eigen::Index>(points.size()), 3);
  t.on_object.assign(points.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& b : boxes) {
      const Vec3 d = points[i] - b.center;
      const double c = std::cos(b.heading);
      const double s = std::sin(b.heading);
      const double lx = c * d.x + s * d.y;
      const double ly = -s * d.x + c * d.y;
      if (std::abs(lx) <= 0.5 * b.size.x + margin && std::abs(ly) <= 0.5 * b.size.y + margin &&
          std::abs(d.z) <= 0.5 * b.size.z + margin) {
        const auto r = static_cast<Eigen::Index>(i);
        t.offsets.row(r) << -d.x, -d.y, -d.z;
        t.on_object[i] = true;
        break;
      }
    }
  }
  return t;
}

SyntheticFeatureProvider::SyntheticFeatureProvider(std::size_t width, std::uint64_t seed, double frequency)
    : width_(width), seed_(seed) {
  if (width == 0) throw ConfigError("feature width must be positive");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  directions_.resize(static_cast<Eigen::Index>(width), 3);
  phases_.resize(static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < directions_.rows(); ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) directions_(i, k) = rng.normal(0.0, frequency);
    phases_(i) = rng.uniform(0.0, 2.0 * kPi);
  }
}

Eigen::RowVectorXd SyntheticFeatureProvider::features_at(const Vec3& p) const {
  const Eigen::Vector3d x{p.x, p.y, p.z};
  Eigen::RowVectorXd f = (directions_ * x).transpose() + phases_;
  return f.array().cos() * std::sqrt(2.0 / static_cast<double>(width_));
}

SeedSet SyntheticFeatureProvider::seeds(const PointCloud& cloud, std::size_t num_seeds) const {
  if (cloud.size() == 0) throw BadK("cannot pick seeds from an empty cloud");
  const auto idx = fps(cloud.positions, num_seeds, random_start(cloud.size(), seed_));
  SeedSet s;
  s.features.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(width_));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    s.positions.push_back(cloud.positions[idx[i]]);
    s.features.row(static_cast<Eigen::Index>(i)) = features_at(cloud.positions[idx[i]]);
  }
  return s;
}

int push_through_walls(Scene& scene, const ConstraintConfig& cfg, std::uint64_t seed, double depth_min,
                       double depth_max) {
  Rng rng(seed);
  int moved = 0;
  for (auto& box : scene.gt_boxes) {
    if (cfg.c_pc.count(box.class_id) == 0) continue;
    const double depth = rng.uniform(depth_min, depth_max);
    const auto corners = box_corners(box);
    std::size_t best = scene.gt_quads.size();
    double best_s = 0.0;
    for (std::size_t j = 0; j < scene.gt_quads.size(); ++j) {
      const Quad& q = scene.gt_quads[j];
      if (!project_onto_quad(q, box.center).inside) continue;
      double s = std::numeric_limits<double>::infinity();
      for (const auto& c : corners) s = std::min(s, signed_side(plane_of(q), c));
      if (best == scene.gt_quads.size() || s < best_s) {
        best = j;
        best_s = s;
      }
    }
    if (best == scene.gt_quads.size()) continue;
    const Quad& q = scene.gt_quads[best];
    OrientedBox pushed = box;
    pushed.center -= Vec3{q.normal.x, q.normal.y, 0.0} * (best_s + depth);
    const std::array<Quad, 1> wall{q};
    const std::array<OrientedBox, 1> one{pushed};
    if (count_collisions(one, wall) == 0) continue;
    box = pushed;
    ++moved;
  }
  return moved;
}

DescentResult descend_collisions(std::vector<OrientedBox> boxes, const std::vector<Quad>& quads,
                                 const ConstraintConfig& cfg, int max_steps, double lr) {
  DescentResult r;
  r.collisions_before = count_collisions(boxes, quads);
  r.loss_before = pc_loss_fast(boxes, quads, cfg);
  while (r.steps < max_steps && count_collisions(boxes, quads, &cfg.c_pc) > 0) {
    const LossAndGrad g = pc_loss_grad(boxes, quads, cfg);
    for (std::size_t i = 0; i < boxes.size(); ++i) boxes[i].center -= g.grad.boxes[i].d_center * lr;
    ++r.steps;
  }
  r.collisions_after = count_collisions(boxes, quads);
  r.loss_after = pc_loss_fast(boxes, quads, cfg);
  r.boxes = std::move(boxes);
  return r;
}

std::vector<SceneGeometry> bench_batch(std::size_t batch, std::size_t num_boxes, std::size_t num_quads,
                                       std::uint64_t seed) {
  std::vector<SceneGeometry> out;
  Rng rng(seed);
  const auto& nominal = default_class_sizes();
  const ConstraintConfig pc = default_constraint_config();
  const std::vector<int> constrained(pc.c_pc.begin(), pc.c_pc.end());
  for (std::size_t b = 0; b < batch; ++b) {
    GenConfig gc;
    gc.seed = rng.bits();
    gc.objects_min = gc.objects_max = 0;
    gc.points = 1000;
    Rng room_rng(gc.seed);
    const Room room = make_room(gc, room_rng);
    const auto walls = room_walls(room);

    SceneGeometry g;
    for (std::size_t i = 0; i < num_boxes; ++i) {
      OrientedBox box;
      box.class_id = constrained[rng.index(constrained.size())];
      const Vec3& s = nominal[static_cast<std::size_t>(box.class_id)];
      box.size = {s.x * rng.uniform(0.8, 1.2), s.y * rng.uniform(0.8, 1.2),
                  std::min(s.z * rng.uniform(0.8, 1.2), room.height)};
      box.heading = rng.uniform(-kPi, kPi);
      box.center = {rng.uniform(-0.5 * room.width - 0.3, 0.5 * room.width + 0.3),
                    rng.uniform(-0.5 * room.length - 0.3, 0.5 * room.length + 0.3), 0.5 * box.size.z};
      g.boxes.push_back(box);
    }
    for (std::size_t j = 0; j < num_quads; ++j) {
      Quad q = walls[j % walls.size()];
      if (j >= walls.size()) {
        const QuadFrame f = quad_frame(q);
        q.center += q.normal * rng.uniform(-0.2, 0.2) + f.u * rng.uniform(-0.2, 0.2) * q.width;
        q.width *= rng.uniform(0.5, 1.0);
      }
      g.quads.push_back(q);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace quadlayout
