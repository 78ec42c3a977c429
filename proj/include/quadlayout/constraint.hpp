#pragma once

#include <array>
#include <set>
#include <span>
#include <vector>

#include "quadlayout/geom.hpp"

namespace quadlayout {

/// Which object classes the wall-penetration penalty applies to.
struct ConstraintConfig {
  std::set<int> c_pc;
  /// Slack (m) added to the half extents in the projection test.
  double eps_inside = 0.0;
};

/// All 18 default classes except door, window, curtain and shower curtain.
ConstraintConfig default_constraint_config();

void validate(const ConstraintConfig& cfg);

struct BoxGrad {
  Vec3 d_center;
  Vec3 d_size;
  double d_heading = 0.0;
};

struct QuadGrad {
  Vec3 d_center;
  /// Derivative w.r.t. the azimuth phi of the horizontal normal (cos phi, sin phi).
  double d_normal_angle = 0.0;
  /// (width, height); the projection gate is not differentiated, so both stay 0.
  std::array<double, 2> d_size{0.0, 0.0};
};

struct ConstraintGrad {
  std::vector<BoxGrad> boxes;
  std::vector<QuadGrad> quads;
};

/// Direct 3D traversal: every constrained box, every quad, every corner.
/// Quads must already point inward.
double pc_loss_naive(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                     const ConstraintConfig& cfg);

/// Top-down form: quads become segments a*x + b*y + d = 0 of length `width`,
/// boxes become rectangles, and the penalty is evaluated with matrix
/// products over all footprint vertices at once. Each footprint vertex
/// stands for the two vertical corners above it, so on scenes whose walls
/// span the full room height the result equals pc_loss_naive.
double pc_loss_fast(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                    const ConstraintConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  ConstraintGrad grad;
};

/// Analytic gradient of pc_loss_fast. The projection gate is held
/// constant and ReLU'(0) = 0.
LossAndGrad pc_loss_grad(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                         const ConstraintConfig& cfg);

/// Number of box corners lying strictly outside at least one quad plane
/// while projecting inside that quad. With `restrict_to` set, only boxes of
/// those classes are audited.
int count_collisions(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                     const std::set<int>* restrict_to = nullptr);

struct SceneGeometry {
  std::vector<OrientedBox> boxes;
  std::vector<Quad> quads;
};

double pc_loss_naive_batch(std::span<const SceneGeometry> batch, const ConstraintConfig& cfg);
double pc_loss_fast_batch(std::span<const SceneGeometry> batch, const ConstraintConfig& cfg);

}  // namespace quadlayout
