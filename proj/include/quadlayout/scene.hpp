#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quadlayout/constraint.hpp"
#include "quadlayout/geom.hpp"
#include "quadlayout/proposals.hpp"

namespace quadlayout {

/// Points plus optional named per-point scalar columns.
struct PointCloud {
  std::vector<Vec3> positions;
  Matrix features;  // N x F, F may be 0
  std::vector<std::string> feature_names;

  std::size_t size() const { return positions.size(); }
  /// Column index of `name`, or -1.
  int column(const std::string& name) const;
};

struct Scene {
  std::string id;
  PointCloud cloud;
  std::vector<OrientedBox> gt_boxes;
  std::vector<Quad> gt_quads;
  /// Ceiling and floor polygons (walls are derived from gt_quads).
  std::vector<LayoutPolygon> gt_layout;
  std::vector<std::string> class_table;
  Vec3 room_center;
};

enum class RoomShape { rect, lshape };

const char* to_string(RoomShape s);
RoomShape room_shape_from_string(const std::string& s);

struct GenConfig {
  RoomShape shape = RoomShape::rect;
  double width_min = 4.0;  // along x
  double width_max = 8.0;
  double length_min = 4.0;  // along y
  double length_max = 7.0;
  double height_min = 2.4;
  double height_max = 3.0;
  int objects_min = 4;
  int objects_max = 10;
  /// Classes to draw objects from (uniformly); empty means all classes.
  std::vector<int> classes;
  std::size_t points = 8000;
  double noise = 0.01;
  /// Minimum clearance between any box corner and any wall.
  double wall_margin = 0.05;
  std::uint64_t seed = 0;
  std::string id;
};

void validate(const GenConfig& cfg);

/// Synthetic room: inward wall quads spanning the full height, boxes resting
/// on the floor with at least `wall_margin` clearance and no mutual overlap,
/// and a noisy surface sample of walls, floor, ceiling and boxes. The
/// "instance" feature column holds the box index of each point or -1.
/// L-shaped rooms have a rectangular notch cut from the +x/+y corner.
Scene gen_scene(const GenConfig& cfg);

/// Full layout of a room: one wall polygon per quad followed by the given
/// ceiling and floor polygons.
std::vector<LayoutPolygon> layout_polygons(const std::vector<Quad>& walls, const std::vector<LayoutPolygon>& ceiling_floor);

/// Points count as on an object when they fall inside a box grown by
/// `margin` on every side; the target offset is then the box center minus
/// the point (the first containing box wins).
struct VoteTargets {
  Matrix offsets;  // M x 3
  std::vector<bool> on_object;
};
VoteTargets gt_vote_targets(std::span<const Vec3> points, std::span<const OrientedBox> boxes, double margin = 0.05);

/// Source of per-seed features; stands in for the point backbone.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::size_t width() const = 0;
  /// Picks `num_seeds` seeds from the cloud and returns them with features.
  virtual SeedSet seeds(const PointCloud& cloud, std::size_t num_seeds) const = 0;
};

/// Seeds by farthest point sampling from a seeded random start; features
/// are random Fourier features of the seed position, so they are smooth in
/// space and fully determined by (position, seed).
class SyntheticFeatureProvider : public FeatureProvider {
 public:
  SyntheticFeatureProvider(std::size_t width, std::uint64_t seed, double frequency = 1.0);
  std::size_t width() const override { return width_; }
  SeedSet seeds(const PointCloud& cloud, std::size_t num_seeds) const override;
  Eigen::RowVectorXd features_at(const Vec3& p) const;

 private:
  std::size_t width_;
  std::uint64_t seed_;
  Matrix directions_;  // width x 3
  Eigen::RowVectorXd phases_;
};

/// Pushes each box of a constrained class through its nearest wall so that
/// its deepest corner ends up a depth drawn from [depth_min, depth_max]
/// outside. A push is kept only if the box then collides with that wall.
/// Works in place on gt_boxes and returns the number of boxes moved.
int push_through_walls(Scene& scene, const ConstraintConfig& cfg, std::uint64_t seed, double depth_min = 0.05,
                       double depth_max = 0.3);

struct DescentResult {
  int steps = 0;
  int collisions_before = 0;
  int collisions_after = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::vector<OrientedBox> boxes;
};

/// Plain gradient descent on pc_loss_fast over box centers only. Stops as
/// soon as no constrained box collides or after `max_steps`.
DescentResult descend_collisions(std::vector<OrientedBox> boxes, const std::vector<Quad>& quads,
                                 const ConstraintConfig& cfg, int max_steps = 500, double lr = 0.01);

/// Random benchmark batch: each scene is a generated room with `num_boxes`
/// boxes scattered across (and partly through) it and `num_quads` wall quads
/// made from its walls plus jittered copies.
std::vector<SceneGeometry> bench_batch(std::size_t batch, std::size_t num_boxes, std::size_t num_quads,
                                       std::uint64_t seed);

}  // namespace quadlayout
