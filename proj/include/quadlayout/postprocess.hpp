#pragma once

#include <span>
#include <utility>
#include <vector>

#include "quadlayout/codec.hpp"
#include "quadlayout/geom.hpp"

namespace quadlayout {

/// Flat cuboid around a quad: thickness along the normal, (width, height)
/// in-plane, heading = azimuth of the normal.
OrientedBox quad_to_cuboid(const Quad& q, double thickness = 0.10, double score = 1.0);

/// Greedy suppression in descending score order (ties keep the lower
/// index). A box is dropped when its IoU with a kept box exceeds
/// `iou_threshold`. Returns kept indices in the order they were kept.
std::vector<std::size_t> nms_indices(std::span<const OrientedBox> boxes, double iou_threshold = 0.25);
std::vector<OrientedBox> nms(std::span<const OrientedBox> boxes, double iou_threshold = 0.25);

/// NMS over quads through their flat cuboids; scores come from quadness.
std::vector<std::size_t> quad_nms_indices(std::span<const QuadPrediction> quads, double iou_threshold = 0.25,
                                          double thickness = 0.10);

/// Upper (top) and lower (bottom) horizontal edges of a quad, each as
/// (start, end) following the quad frame's +u direction.
std::pair<Vec3, Vec3> upper_edge(const Quad& q);
std::pair<Vec3, Vec3> lower_edge(const Quad& q);

/// Merges endpoints of different edges that lie closer than `radius`.
/// Pairs are taken in ascending distance order; a merged vertex sits at
/// the mean of its original endpoints and merging repeats until no pair
/// of distinct clusters is closer than `radius`. Endpoints of the same
/// edge never merge. Returns the polygon; vertices follow the edge chain
/// when the merged edges form a single cycle and fall back to azimuth
/// order about the vertex centroid otherwise.
LayoutPolygon merge_edges(std::span<const std::pair<Vec3, Vec3>> edges, double radius, PolygonKind kind);

struct CeilingFloor {
  LayoutPolygon ceiling;
  LayoutPolygon floor;
};

/// Keeps quads with quadness score > quadness_min, then merges their upper
/// edges into the ceiling and lower edges into the floor. Throws
/// TooFewQuads when fewer than three quads survive or a polygon collapses.
CeilingFloor assemble_ceiling_floor(std::span<const QuadPrediction> quads, double quadness_min = 0.5,
                                    double merge_radius = 0.40);

/// Wall polygon of a quad (its four corners).
LayoutPolygon wall_polygon(const Quad& q);

}  // namespace quadlayout
