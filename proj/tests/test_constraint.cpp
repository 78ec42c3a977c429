#include <cmath>
#include <vector>

#include <doctest.h>

#include "quadlayout/classes.hpp"
#include "quadlayout/constraint.hpp"
#include "quadlayout/gradcheck.hpp"
#include "quadlayout/scene.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace quadlayout;

namespace {

Quad wall_at_x2(double height, double center_z) {
  Quad q;
  q.center = {2, 0, center_z};
  q.width = 2;
  q.height = height;
  q.normal = {-1, 0, 0};
  return q;
}

ConstraintConfig all_classes() {
  ConstraintConfig cfg;
  for (int c = 0; c < cls::count; ++c) cfg.c_pc.insert(c);
  return cfg;
}

}  // namespace

TEST_SUITE("constraint") {

TEST_CASE("naive loss hand cases") {
  const auto cfg = all_classes();
  const std::vector<Quad> low{wall_at_x2(1.0, 0.5)};

  OrientedBox inside;
  inside.center = {0, 0, 0.5};
  CHECK(pc_loss_naive(std::vector{inside}, low, cfg) == 0.0);

  // Rotated box: one bottom corner at x = 2.3; its top corner is above the wall.
  OrientedBox one;
  one.size = {1, 1, 2};
  one.heading = kPi / 4;
  one.center = {2.3 - std::sqrt(0.5), 0, 1};
  CHECK(pc_loss_naive(std::vector{one}, low, cfg) == doctest::Approx(0.3));

  OrientedBox two;
  two.size = {1, 1, 2};
  two.center = {1.8, 0, 1};
  CHECK(pc_loss_naive(std::vector{two}, low, cfg) == doctest::Approx(0.6));

  // Beyond the plane, but beside the quad.
  OrientedBox beside = two;
  beside.center.y = 5;
  CHECK(pc_loss_naive(std::vector{beside}, low, cfg) == 0.0);

  CHECK(pc_loss_naive({}, low, cfg) == 0.0);
  CHECK(pc_loss_fast({}, {}, cfg) == 0.0);
}

TEST_CASE("fast loss matches naive on full-height walls") {
  const auto cfg = all_classes();
  const std::vector<Quad> full{wall_at_x2(3.0, 1.5)};
  OrientedBox one;
  one.size = {1, 1, 2};
  one.heading = kPi / 4;
  one.center = {2.3 - std::sqrt(0.5), 0, 1};
  CHECK(pc_loss_naive(std::vector{one}, full, cfg) == doctest::Approx(0.6));
  CHECK(pc_loss_fast(std::vector{one}, full, cfg) == doctest::Approx(0.6));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GenConfig g;
    g.shape = seed % 2 ? RoomShape::lshape : RoomShape::rect;
    g.points = 1000;
    g.seed = seed;
    Scene s = gen_scene(g);
    push_through_walls(s, cfg, seed);
    const double naive = pc_loss_naive(s.gt_boxes, s.gt_quads, cfg);
    const double fast = pc_loss_fast(s.gt_boxes, s.gt_quads, cfg);
    CHECK(std::abs(naive - fast) <= 1e-9);
  }
}

TEST_CASE("only constrained classes are penalized") {
  ConstraintConfig cfg = default_constraint_config();
  CHECK(cfg.c_pc.count(cls::door) == 0);
  CHECK(cfg.c_pc.count(cls::window) == 0);
  CHECK(cfg.c_pc.count(cls::curtain) == 0);
  CHECK(cfg.c_pc.count(cls::shower_curtain) == 0);
  CHECK(cfg.c_pc.size() == 14);

  const std::vector<Quad> full{wall_at_x2(3.0, 1.5)};
  OrientedBox b;
  b.size = {1, 1, 2};
  b.center = {1.8, 0, 1};
  b.class_id = cls::door;
  CHECK(pc_loss_naive(std::vector{b}, full, cfg) == 0.0);
  b.class_id = cls::chair;
  CHECK(pc_loss_naive(std::vector{b}, full, cfg) > 0.0);
}

TEST_CASE("gradient hand cases") {
  const auto cfg = all_classes();
  const std::vector<Quad> full{wall_at_x2(3.0, 1.5)};

  OrientedBox inside;
  inside.center = {0, 0, 1};
  const auto zero = pc_loss_grad(std::vector{inside}, full, cfg);
  CHECK(zero.loss == 0.0);
  CHECK(zero.grad.boxes[0].d_center == Vec3{});
  CHECK(zero.grad.boxes[0].d_heading == 0.0);
  CHECK(zero.grad.quads[0].d_center == Vec3{});

  // One footprint vertex (two 3D corners) across a wall with a = -1.
  OrientedBox one;
  one.size = {1, 1, 2};
  one.heading = kPi / 4;
  one.center = {2.3 - std::sqrt(0.5), 0, 1};
  const auto g = pc_loss_grad(std::vector{one}, full, cfg);
  CHECK(g.loss == doctest::Approx(0.6));
  CHECK(g.grad.boxes[0].d_center.x == doctest::Approx(2.0));
  CHECK(g.grad.boxes[0].d_center.y == doctest::Approx(0.0));
}

TEST_CASE("gradcheck on a few configurations") {
  GradcheckConfig cfg;
  cfg.trials = 20;
  cfg.seed = 4;
  const GradcheckReport r = gradcheck_pc_loss(cfg);
  CHECK(r.trials == 20);
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("count_collisions matches per-corner enumeration") {
  const std::vector<Quad> low{wall_at_x2(1.0, 0.5)};
  OrientedBox two;
  two.size = {1, 1, 2};
  two.center = {1.8, 0, 1};
  CHECK(count_collisions(std::vector{two}, low) == 2);
  OrientedBox inside;
  inside.center = {0, 0, 0.5};
  CHECK(count_collisions(std::vector{inside}, low) == 0);

  testing::Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_constraint_config(rng.bits());
    CHECK(count_collisions(g.boxes, g.quads) == oracle::collisions(g.boxes, g.quads));
  }
}

}  // TEST_SUITE
