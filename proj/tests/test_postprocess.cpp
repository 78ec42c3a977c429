#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "quadlayout/errors.hpp"
#include "quadlayout/metrics.hpp"
#include "quadlayout/postprocess.hpp"
#include "quadlayout/scene.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace quadlayout;

namespace {

std::vector<QuadPrediction> as_predictions(const std::vector<Quad>& quads) {
  std::vector<QuadPrediction> out;
  for (const auto& q : quads) {
    QuadPrediction p;
    p.quad = q;
    p.quadness = {0.0, 1.0};
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_SUITE("postprocess") {

TEST_CASE("flat cuboid of a wall quad") {
  Quad q;
  q.center = {0, 2, 1.25};
  q.width = 4;
  q.height = 2.5;
  q.normal = {0, -1, 0};
  const OrientedBox b = quad_to_cuboid(q);
  CHECK(b.size.x == doctest::Approx(0.10));
  CHECK(b.size.y == doctest::Approx(4.0));
  CHECK(b.size.z == doctest::Approx(2.5));
  CHECK(b.heading == doctest::Approx(-kPi / 2));
  CHECK(quad_to_cuboid(q, 0.2).size.x == doctest::Approx(0.2));

  // The thin face of the cuboid lies on the quad plane.
  const Plane p = plane_of(q);
  const auto corners = box_corners(b);
  double lo = 1e9;
  for (const auto& c : corners) lo = std::min(lo, std::abs(signed_side(p, c)));
  CHECK(lo == doctest::Approx(0.05));
}

TEST_CASE("nms hand cases") {
  OrientedBox a = testing::unit_box({0, 0, 0});
  a.score = 0.8;
  OrientedBox b = a;
  b.score = 0.9;
  CHECK(nms_indices(std::vector{a, b}) == std::vector<std::size_t>{1});
  OrientedBox far = testing::unit_box({4, 0, 0});
  far.score = 0.1;
  CHECK(nms_indices(std::vector{a, far}) == std::vector<std::size_t>{0, 1});
  CHECK(nms(std::vector{a, b}).front().score == 0.9);
}

TEST_CASE("nms matches the exhaustive reference") {
  testing::Rng rng(14);
  for (int t = 0; t < 200; ++t) {
    std::vector<OrientedBox> boxes;
    const std::size_t n = 1 + rng.index(20);
    for (std::size_t i = 0; i < n; ++i) boxes.push_back(testing::random_box(rng, 1.0));
    if (t % 3 == 0) boxes.push_back(boxes.front());
    CHECK(nms_indices(boxes, 0.25) == oracle::nms(boxes, 0.25, iou_3d));
  }
}

TEST_CASE("endpoints 0.3 m apart merge at their midpoint") {
  const double z = 2.5;
  const std::vector<std::pair<Vec3, Vec3>> edges{
      {{0, 0, z}, {1, 0, z}},
      {{1.3, 0, z}, {0, 1, z}},
      {{0, 1, z}, {0, 0, z}},
  };
  const LayoutPolygon p = merge_edges(edges, 0.4, PolygonKind::ceiling);
  REQUIRE(p.vertices.size() == 3);
  const bool has_mid = std::any_of(p.vertices.begin(), p.vertices.end(),
                                   [](const Vec3& v) { return distance(v, Vec3{1.15, 0, 2.5}) <= 1e-12; });
  CHECK(has_mid);
  CHECK(p.kind == PolygonKind::ceiling);

  CHECK_THROWS_AS(merge_edges(std::vector<std::pair<Vec3, Vec3>>{edges[0]}, 0.4, PolygonKind::ceiling),
                  TooFewQuads);
}

TEST_CASE("rectangular room gives the true ceiling and floor") {
  GenConfig g;
  g.width_min = g.width_max = 6;
  g.length_min = g.length_max = 4;
  g.height_min = g.height_max = 2.5;
  g.points = 1000;
  const Scene s = gen_scene(g);
  const CeilingFloor cf = assemble_ceiling_floor(as_predictions(s.gt_quads));
  REQUIRE(cf.ceiling.vertices.size() == 4);
  for (const auto& v : cf.ceiling.vertices) {
    CHECK(std::abs(std::abs(v.x) - 3.0) <= 1e-9);
    CHECK(std::abs(std::abs(v.y) - 2.0) <= 1e-9);
    CHECK(std::abs(v.z - 2.5) <= 1e-9);
  }
  CHECK(cf.floor.vertices.size() == 4);
  CHECK(cf.floor.kind == PolygonKind::floor);

  auto low = as_predictions(s.gt_quads);
  low[0].quadness = {0.9, 0.1};
  low[1].quadness = {0.9, 0.1};
  CHECK_THROWS_AS(assemble_ceiling_floor(low), TooFewQuads);
}

TEST_CASE("L-shaped room gives six-corner polygons matching the generator") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig g;
    g.shape = RoomShape::lshape;
    g.points = 1000;
    g.seed = seed;
    const Scene s = gen_scene(g);
    REQUIRE(s.gt_quads.size() == 6);
    const CeilingFloor cf = assemble_ceiling_floor(as_predictions(s.gt_quads));
    CHECK(cf.ceiling.vertices.size() == 6);
    CHECK(polygons_match(cf.ceiling, s.gt_layout[0]));
    CHECK(polygons_match(cf.floor, s.gt_layout[1]));
  }
}

TEST_CASE("quad nms drops duplicates") {
  Quad q;
  q.center = {0, 2, 1.25};
  q.width = 4;
  q.height = 2.5;
  q.normal = {0, -1, 0};
  auto preds = as_predictions({q, q});
  preds[0].quadness = {0.3, 0.7};
  CHECK(quad_nms_indices(preds) == std::vector<std::size_t>{1});
}

}  // TEST_SUITE
