#pragma once

#include <cstdint>
#include <vector>

#include "quadlayout/geom.hpp"
#include "quadlayout/random.hpp"

namespace testing {

using quadlayout::OrientedBox;
using quadlayout::Quad;
using quadlayout::Rng;
using quadlayout::Vec3;

inline Vec3 random_vec(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline std::vector<Vec3> random_points(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_vec(rng, lo, hi));
  return out;
}

inline OrientedBox random_box(Rng& rng, double extent = 3.0) {
  OrientedBox b;
  b.center = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(0.0, 1.0)};
  b.size = {rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)};
  b.heading = rng.uniform(-quadlayout::kPi, quadlayout::kPi);
  b.score = rng.uniform();
  return b;
}

// Axis-aligned box whose top-down square is centered on `c`, unit height.
inline OrientedBox unit_box(Vec3 c, double heading = 0.0) {
  OrientedBox b;
  b.center = c;
  b.size = {1.0, 1.0, 1.0};
  b.heading = heading;
  return b;
}

}  // namespace testing
