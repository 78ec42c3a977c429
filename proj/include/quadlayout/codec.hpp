#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "quadlayout/geom.hpp"

namespace quadlayout {

/// Prediction head layout. Defaults: 12 heading bins, 18 size bins and 18
/// classes, with the generator's nominal class sizes as size priors.
struct HeadConfig {
  int heading_bins = 12;
  int size_bins = 18;
  int num_classes = 18;
  std::vector<Vec3> size_priors;
  std::vector<std::string> class_names;

  /// 2 + 3 + H + H + S + 3S + C
  std::size_t object_vector_size() const;

  // Offsets of each field inside the object vector.
  std::size_t objectness_offset() const { return 0; }
  std::size_t center_offset() const { return 2; }
  std::size_t heading_score_offset() const { return 5; }
  std::size_t heading_residual_offset() const { return 5 + heading_bins; }
  std::size_t size_score_offset() const { return 5 + 2 * heading_bins; }
  std::size_t size_residual_offset() const { return 5 + 2 * heading_bins + size_bins; }
  std::size_t class_offset() const { return 5 + 2 * heading_bins + 4 * size_bins; }
};

HeadConfig default_head_config();
void validate(const HeadConfig& cfg);

inline constexpr std::size_t kQuadVectorSize = 10;

struct ObjectPrediction {
  std::array<double, 2> objectness{};
  OrientedBox box;
  std::vector<double> class_scores;  // softmax probabilities
};

struct QuadPrediction {
  std::array<double, 2> quadness{};  // softmax probabilities
  Quad quad;

  double score() const { return quadness[1]; }
};

/// Heading bin b covers angles around b * 2pi / H.
double heading_bin_center(int bin, int heading_bins);

/// Size factor floor for prior * (1 + residual); keeps decoded sizes
/// positive when the residual is at or below -1.
inline constexpr double kMinSizeRatio = 1e-3;

/// Quad log-extents are clamped to this range before exp().
inline constexpr double kMaxLogExtent = 30.0;

ObjectPrediction decode_object(std::span<const double> v, const Vec3& base, const HeadConfig& cfg);
QuadPrediction decode_quad(std::span<const double> v, const Vec3& base);

struct ObjectTarget {
  std::vector<double> vector;  // a head vector that decodes to the target box
  Vec3 center_offset;
  int heading_bin = 0;
  double heading_residual = 0.0;
  int size_bin = 0;
  Vec3 size_residual;
  int class_id = 0;
};

/// Confidence logit magnitude used for one-hot fields of encoded targets.
inline constexpr double kTargetLogit = 20.0;

ObjectTarget encode_object_target(const OrientedBox& gt, const Vec3& base, const HeadConfig& cfg);
std::array<double, kQuadVectorSize> encode_quad_target(const Quad& gt, const Vec3& base);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace quadlayout
