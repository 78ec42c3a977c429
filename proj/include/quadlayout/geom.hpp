#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace quadlayout {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGeomEps = 1e-9;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c).
struct Plane {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double d = 0.0;

  Vec3 normal() const { return {a, b, c}; }
};

/// A wall segment. `width` is the horizontal extent, `height` the vertical
/// one; `normal` is unit length and points into the room.
struct Quad {
  Vec3 center;
  double width = 1.0;
  double height = 1.0;
  Vec3 normal{1.0, 0.0, 0.0};
};

/// Gravity-aligned 3D box. `size` is (w, l, h): w along the local x axis,
/// l along local y, h along +z. `heading` rotates local x towards +y.
struct OrientedBox {
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};
  double heading = 0.0;
  int class_id = 0;
  double score = 1.0;
};

enum class PolygonKind { wall, ceiling, floor };

struct LayoutPolygon {
  std::vector<Vec3> vertices;
  PolygonKind kind = PolygonKind::wall;
};

const char* to_string(PolygonKind kind);

/// Throws InvalidArgument when a Quad breaks its invariants
/// (unit normal, |normal.z| <= 0.1, positive extents).
void validate(const Quad& q);
void validate(const OrientedBox& b);
void validate(const LayoutPolygon& p);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);

Plane plane_of(const Quad& q);

/// Positive on the interior side of an inward-oriented plane.
inline double signed_side(const Plane& p, const Vec3& x) {
  return p.a * x.x + p.b * x.y + p.c * x.z + p.d;
}

/// Flips the normal, if needed, so that room_center lies on the positive
/// side. Throws DegenerateCenter when room_center is on the plane.
Quad orient_inward(const Quad& q, const Vec3& room_center);

/// In-plane frame of a quad. u = normalize(normal x +z) is horizontal;
/// v = u x normal, which is +z for a vertical wall. Seen from inside the
/// room (facing the wall), u points to the viewer's left.
struct QuadFrame {
  Vec3 u;
  Vec3 v;
};

QuadFrame quad_frame(const Quad& q);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  bool inside = false;
};

/// Coordinates of the orthogonal projection of x in the quad frame, with the
/// origin at the quad center. `inside` holds when |u| <= width/2 + slack and
/// |v| <= height/2 + slack.
Projection project_onto_quad(const Quad& q, const Vec3& x, double slack = 0.0);

/// The four corners of a quad: (-u,-v), (+u,-v), (+u,+v), (-u,+v).
std::array<Vec3, 4> quad_corners(const Quad& q);

/// Box corners. Index i uses local signs
///   x: + for i in {0,3,4,7}, - otherwise
///   y: + for i in {0,1,4,5}, - otherwise
///   z: - for i < 4 (bottom face), + for i >= 4 (top face)
/// so each face is traversed counter-clockwise seen from above.
std::array<Vec3, 8> box_corners(const OrientedBox& b);

/// The bottom-face corners projected onto the ground plane, same order as
/// box_corners()[0..3] (counter-clockwise).
std::array<Vec2, 4> box_footprint(const OrientedBox& b);

double polygon_area(std::span<const Vec2> poly);

/// Clips a convex polygon against a convex counter-clockwise clip polygon.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Exact top-down intersection area of the two rotated footprints.
double bev_intersection_area(const OrientedBox& a, const OrientedBox& b);

double iou_3d(const OrientedBox& a, const OrientedBox& b);

}  // namespace quadlayout
