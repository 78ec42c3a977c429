#pragma once

#include <string>
#include <vector>

#include "quadlayout/geom.hpp"

namespace quadlayout {

/// The 18-category indoor class table used by the generator and the heads.
namespace cls {
inline constexpr int cabinet = 0;
inline constexpr int bed = 1;
inline constexpr int chair = 2;
inline constexpr int sofa = 3;
inline constexpr int table = 4;
inline constexpr int door = 5;
inline constexpr int window = 6;
inline constexpr int bookshelf = 7;
inline constexpr int picture = 8;
inline constexpr int counter = 9;
inline constexpr int desk = 10;
inline constexpr int curtain = 11;
inline constexpr int refrigerator = 12;
inline constexpr int shower_curtain = 13;
inline constexpr int toilet = 14;
inline constexpr int sink = 15;
inline constexpr int bathtub = 16;
inline constexpr int garbage_bin = 17;
inline constexpr int count = 18;
}  // namespace cls

const std::vector<std::string>& default_class_names();

/// Nominal (w, l, h) per class in meters. The generator samples sizes
/// around these and the heads use them as size priors.
const std::vector<Vec3>& default_class_sizes();

/// True for classes that legitimately intersect walls.
bool is_wall_mounted(int class_id);

}  // namespace quadlayout
