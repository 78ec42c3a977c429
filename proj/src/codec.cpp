#include "quadlayout/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quadlayout/classes.hpp"
#include "quadlayout/errors.hpp"

namespace quadlayout {

namespace {

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

std::size_t HeadConfig::object_vector_size() const {
  return static_cast<std::size_t>(2 + 3 + 2 * heading_bins + 4 * size_bins + num_classes);
}

HeadConfig default_head_config() {
  HeadConfig cfg;
  cfg.size_priors = default_class_sizes();
  cfg.class_names = default_class_names();
  return cfg;
}

void validate(const HeadConfig& cfg) {
  if (cfg.heading_bins < 1 || cfg.size_bins < 1 || cfg.num_classes < 1) {
    throw ConfigError("head config needs H, S, C >= 1");
  }
  if (static_cast<int>(cfg.size_priors.size()) != cfg.size_bins) {
    throw ConfigError("head config needs one size prior per size bin");
  }
  for (const auto& p : cfg.size_priors) {
    if (!(p.x > 0.0 && p.y > 0.0 && p.z > 0.0)) throw ConfigError("size priors must be positive");
  }
  if (!cfg.class_names.empty() && static_cast<int>(cfg.class_names.size()) != cfg.num_classes) {
    throw ConfigError("class name count differs from num_classes");
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& x : out) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : out) x /= sum;
  return out;
}

double heading_bin_center(int bin, int heading_bins) {
  return static_cast<double>(bin) * 2.0 * kPi / static_cast<double>(heading_bins);
}

ObjectPrediction decode_object(std::span<const double> v, const Vec3& base, const HeadConfig& cfg) {
  if (v.size() != cfg.object_vector_size()) {
    throw LengthMismatch("object vector has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(cfg.object_vector_size()));
  }
  const auto H = static_cast<std::size_t>(cfg.heading_bins);
  const auto S = static_cast<std::size_t>(cfg.size_bins);
  const auto C = static_cast<std::size_t>(cfg.num_classes);

  ObjectPrediction out;
  const auto obj = softmax(v.subspan(cfg.objectness_offset(), 2));
  out.objectness = {obj[0], obj[1]};

  const auto c = v.subspan(cfg.center_offset(), 3);
  out.box.center = base + Vec3{c[0], c[1], c[2]};

  const std::size_t hb = argmax(v.subspan(cfg.heading_score_offset(), H));
  out.box.heading = wrap_angle(heading_bin_center(static_cast<int>(hb), cfg.heading_bins) +
                               v[cfg.heading_residual_offset() + hb]);

  const std::size_t sb = argmax(v.subspan(cfg.size_score_offset(), S));
  const auto r = v.subspan(cfg.size_residual_offset() + 3 * sb, 3);
  const Vec3& prior = cfg.size_priors.at(sb);
  out.box.size = {prior.x * std::max(1.0 + r[0], kMinSizeRatio), prior.y * std::max(1.0 + r[1], kMinSizeRatio),
                  prior.z * std::max(1.0 + r[2], kMinSizeRatio)};

  out.class_scores = softmax(v.subspan(cfg.class_offset(), C));
  out.box.class_id = static_cast<int>(argmax(out.class_scores));
  out.box.score = out.objectness[1];
  return out;
}

QuadPrediction decode_quad(std::span<const double> v, const Vec3& base) {
  if (v.size() != kQuadVectorSize) {
    throw LengthMismatch("quad vector has length " + std::to_string(v.size()) + ", expected 10");
  }
  QuadPrediction out;
  const auto q = softmax(v.subspan(0, 2));
  out.quadness = {q[0], q[1]};
  out.quad.center = base + Vec3{v[2], v[3], v[4]};
  out.quad.width = std::exp(std::clamp(v[5], -kMaxLogExtent, kMaxLogExtent));
  out.quad.height = std::exp(std::clamp(v[6], -kMaxLogExtent, kMaxLogExtent));
  const Vec3 raw{v[7], v[8], v[9]};
  const double n = norm(raw);
  if (!(n >= 1e-6)) throw DegenerateNormal("quad normal components are (near) zero");
  out.quad.normal = raw / n;
  return out;
}

ObjectTarget encode_object_target(const OrientedBox& gt, const Vec3& base, const HeadConfig& cfg) {
  validate(cfg);
  if (gt.class_id < 0 || gt.class_id >= cfg.num_classes) throw InvalidArgument("target class id out of range");
  ObjectTarget t;
  t.vector.assign(cfg.object_vector_size(), 0.0);
  t.vector[cfg.objectness_offset() + 1] = kTargetLogit;

  t.center_offset = gt.center - base;
  t.vector[cfg.center_offset() + 0] = t.center_offset.x;
  t.vector[cfg.center_offset() + 1] = t.center_offset.y;
  t.vector[cfg.center_offset() + 2] = t.center_offset.z;

  // Bins are centered on b * width; a heading exactly between two bins goes
  // to the lower one so the residual lies in (-pi/H, pi/H].
  const double width = 2.0 * kPi / cfg.heading_bins;
  double theta = std::fmod(gt.heading, 2.0 * kPi);
  if (theta < 0.0) theta += 2.0 * kPi;
  int bin = static_cast<int>(std::ceil(theta / width - 0.5));
  bin = ((bin % cfg.heading_bins) + cfg.heading_bins) % cfg.heading_bins;
  t.heading_bin = bin;
  t.heading_residual = wrap_angle(gt.heading - heading_bin_center(bin, cfg.heading_bins));
  t.vector[cfg.heading_score_offset() + static_cast<std::size_t>(bin)] = kTargetLogit;
  t.vector[cfg.heading_residual_offset() + static_cast<std::size_t>(bin)] = t.heading_residual;

  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int s = 0; s < cfg.size_bins; ++s) {
    const double d = distance(gt.size, cfg.size_priors[static_cast<std::size_t>(s)]);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  t.size_bin = best;
  const Vec3& prior = cfg.size_priors[static_cast<std::size_t>(best)];
  t.size_residual = {gt.size.x / prior.x - 1.0, gt.size.y / prior.y - 1.0, gt.size.z / prior.z - 1.0};
  t.vector[cfg.size_score_offset() + static_cast<std::size_t>(best)] = kTargetLogit;
  const std::size_t ro = cfg.size_residual_offset() + 3 * static_cast<std::size_t>(best);
  t.vector[ro + 0] = t.size_residual.x;
  t.vector[ro + 1] = t.size_residual.y;
  t.vector[ro + 2] = t.size_residual.z;

  t.class_id = gt.class_id;
  t.vector[cfg.class_offset() + static_cast<std::size_t>(gt.class_id)] = kTargetLogit;
  return t;
}

std::array<double, kQuadVectorSize> encode_quad_target(const Quad& gt, const Vec3& base) {
  if (!(gt.width > 0.0) || !(gt.height > 0.0)) throw InvalidArgument("quad extents must be positive");
  const Vec3 off = gt.center - base;
  const Vec3 n = normalized(gt.normal);
  return {0.0, kTargetLogit, off.x, off.y, off.z, std::log(gt.width), std::log(gt.height), n.x, n.y, n.z};
}

}  // namespace quadlayout
