#include "quadlayout/classes.hpp"

namespace quadlayout {

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{
      "cabinet", "bed",     "chair",        "sofa",           "table",  "door",
      "window",  "bookshelf", "picture",    "counter",        "desk",   "curtain",
      "refrigerator", "showercurtain", "toilet", "sink", "bathtub", "garbagebin"};
  return names;
}

const std::vector<Vec3>& default_class_sizes() {
  static const std::vector<Vec3> sizes{
      {0.60, 1.00, 0.90},  // cabinet
      {2.00, 1.60, 0.60},  // bed
      {0.55, 0.55, 0.90},  // chair
      {0.90, 2.00, 0.80},  // sofa
      {1.20, 0.80, 0.75},  // table
      {0.20, 0.90, 2.00},  // door
      {0.20, 1.00, 1.00},  // window
      {0.40, 1.00, 1.80},  // bookshelf
      {0.20, 0.70, 0.50},  // picture
      {0.60, 1.80, 0.90},  // counter
      {0.70, 1.40, 0.75},  // desk
      {0.20, 1.50, 2.00},  // curtain
      {0.70, 0.70, 1.80},  // refrigerator
      {0.20, 1.00, 1.80},  // showercurtain
      {0.70, 0.45, 0.75},  // toilet
      {0.50, 0.60, 0.30},  // sink
      {0.75, 1.60, 0.55},  // bathtub
      {0.35, 0.35, 0.50},  // garbagebin
  };
  return sizes;
}

bool is_wall_mounted(int class_id) {
  return class_id == cls::door || class_id == cls::window || class_id == cls::curtain ||
         class_id == cls::shower_curtain;
}

}  // namespace quadlayout
