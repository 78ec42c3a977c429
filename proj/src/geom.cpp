#include "quadlayout/geom.hpp"

#include <algorithm>
#include <string>

#include "quadlayout/errors.hpp"

namespace quadlayout {

namespace {

constexpr Vec3 kUp{0.0, 0.0, 1.0};
constexpr double kUnitTol = 1e-9;
constexpr double kMaxWallTilt = 0.1;

// Local sign pattern shared by box_corners and box_footprint.
constexpr std::array<double, 4> kSx{+1.0, -1.0, -1.0, +1.0};
constexpr std::array<double, 4> kSy{+1.0, +1.0, -1.0, -1.0};

}  // namespace

const char* to_string(PolygonKind kind) {
  switch (kind) {
    case PolygonKind::wall:
      return "wall";
    case PolygonKind::ceiling:
      return "ceiling";
    case PolygonKind::floor:
      return "floor";
  }
  return "unknown";
}

void validate(const Quad& q) {
  if (!is_finite(q.center) || !is_finite(q.normal)) throw InvalidArgument("quad has non-finite components");
  if (!(q.width > 0.0) || !(q.height > 0.0)) throw InvalidArgument("quad extents must be positive");
  if (std::abs(norm(q.normal) - 1.0) > kUnitTol) throw InvalidArgument("quad normal must be unit length");
  if (std::abs(q.normal.z) > kMaxWallTilt) throw InvalidArgument("quad normal must be near-horizontal");
}

void validate(const OrientedBox& b) {
  if (!is_finite(b.center) || !is_finite(b.size) || !std::isfinite(b.heading))
    throw InvalidArgument("box has non-finite components");
  if (!(b.size.x > 0.0) || !(b.size.y > 0.0) || !(b.size.z > 0.0))
    throw InvalidArgument("box size must be positive");
  if (b.heading < -kPi || b.heading > kPi) throw InvalidArgument("box heading must lie in [-pi, pi)");
  if (b.class_id < 0) throw InvalidArgument("box class id must be non-negative");
  if (!(b.score >= 0.0 && b.score <= 1.0)) throw InvalidArgument("box score must lie in [0, 1]");
}

void validate(const LayoutPolygon& p) {
  if (p.vertices.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    const auto& a = p.vertices[i];
    const auto& b = p.vertices[(i + 1) % p.vertices.size()];
    if (!is_finite(a)) throw InvalidArgument("polygon vertex is not finite");
    if (distance(a, b) <= 1e-6) throw InvalidArgument("polygon has coincident consecutive vertices");
  }
}

double wrap_angle(double theta) {
  double r = theta - 2.0 * kPi * std::floor((theta + kPi) / (2.0 * kPi));
  if (r >= kPi) r -= 2.0 * kPi;
  if (r < -kPi) r = -kPi;
  return r;
}

Plane plane_of(const Quad& q) {
  return {q.normal.x, q.normal.y, q.normal.z, -dot(q.normal, q.center)};
}

Quad orient_inward(const Quad& q, const Vec3& room_center) {
  const double s = signed_side(plane_of(q), room_center);
  if (std::abs(s) <= 1e-6) throw DegenerateCenter("room center lies on the quad plane");
  if (s > 0.0) return q;
  Quad flipped = q;
  flipped.normal = -q.normal;
  return flipped;
}

QuadFrame quad_frame(const Quad& q) {
  const Vec3 u = normalized(cross(q.normal, kUp));
  return {u, cross(u, q.normal)};
}

Projection project_onto_quad(const Quad& q, const Vec3& x, double slack) {
  const QuadFrame f = quad_frame(q);
  const Vec3 r = x - q.center;
  Projection p;
  p.u = dot(r, f.u);
  p.v = dot(r, f.v);
  p.inside = std::abs(p.u) <= 0.5 * q.width + slack && std::abs(p.v) <= 0.5 * q.height + slack;
  return p;
}

std::array<Vec3, 4> quad_corners(const Quad& q) {
  const QuadFrame f = quad_frame(q);
  const Vec3 hu = f.u * (0.5 * q.width);
  const Vec3 hv = f.v * (0.5 * q.height);
  return {q.center - hu - hv, q.center + hu - hv, q.center + hu + hv, q.center - hu + hv};
}

std::array<Vec2, 4> box_footprint(const OrientedBox& b) {
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  const double hx = 0.5 * b.size.x;
  const double hy = 0.5 * b.size.y;
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lx = kSx[i] * hx;
    const double ly = kSy[i] * hy;
    out[i] = {b.center.x + (c * lx - s * ly), b.center.y + (s * lx + c * ly)};
  }
  return out;
}

std::array<Vec3, 8> box_corners(const OrientedBox& b) {
  const auto fp = box_footprint(b);
  const double hz = 0.5 * b.size.z;
  std::array<Vec3, 8> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {fp[i].x, fp[i].y, b.center.z - hz};
    out[i + 4] = {fp[i].x, fp[i].y, b.center.z + hz};
  }
  return out;
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * twice;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 edge = clip[(e + 1) % clip.size()] - a;
    in.swap(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2 p = in[i];
      const Vec2 q = in[(i + 1) % in.size()];
      const double dp = cross(edge, p - a);
      const double dq = cross(edge, q - a);
      if (dp >= 0.0) {
        out.push_back(p);
        if (dq < 0.0) out.push_back(p + (q - p) * (dp / (dp - dq)));
      } else if (dq >= 0.0) {
        out.push_back(p + (q - p) * (dp / (dp - dq)));
      }
    }
  }
  return out;
}

double bev_intersection_area(const OrientedBox& a, const OrientedBox& b) {
  const auto fa = box_footprint(a);
  const auto fb = box_footprint(b);
  const auto poly = clip_convex(fa, fb);
  return std::abs(polygon_area(poly));
}

double iou_3d(const OrientedBox& first, const OrientedBox& second) {
  // Canonical argument order makes the result bitwise symmetric.
  const auto key = [](const OrientedBox& b) {
    return std::array<double, 7>{b.center.x, b.center.y, b.center.z, b.size.x, b.size.y, b.size.z, b.heading};
  };
  const bool swap = key(second) < key(first);
  const OrientedBox& a = swap ? second : first;
  const OrientedBox& b = swap ? first : second;
  const double z_lo = std::max(a.center.z - 0.5 * a.size.z, b.center.z - 0.5 * b.size.z);
  const double z_hi = std::min(a.center.z + 0.5 * a.size.z, b.center.z + 0.5 * b.size.z);
  if (z_hi <= z_lo) return 0.0;
  const double area = bev_intersection_area(a, b);
  if (area <= 0.0) return 0.0;
  const double inter = area * (z_hi - z_lo);
  const double va = a.size.x * a.size.y * a.size.z;
  const double vb = b.size.x * b.size.y * b.size.z;
  const double uni = va + vb - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace quadlayout
