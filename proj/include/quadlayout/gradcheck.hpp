#pragma once

#include <cstddef>
#include <cstdint>

#include "quadlayout/constraint.hpp"

namespace quadlayout {

/// Denominator floor of the relative error. Components that are exactly zero
/// analytically come back from central differences as rounding noise of
/// about 1e-10, which this floor keeps from reading as a relative error.
inline constexpr double kGradcheckFloor = 1e-4;

struct GradcheckConfig {
  std::size_t trials = 200;
  double h = 1e-5;
  /// Configurations with any |pre-ReLU| or gate margin at or below this are redrawn.
  double kink = 1e-3;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  std::size_t trials = 0;
  std::size_t redrawn = 0;
  std::size_t components = 0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
};

/// Compares pc_loss_grad with central differences of pc_loss_fast over box
/// center (x, y), size (w, l), heading, quad center (x, y) and normal
/// azimuth on random wall/box configurations with at least one active
/// penalty term. Relative error is |a - f| / max(|a|, |f|, kGradcheckFloor).
GradcheckReport gradcheck_pc_loss(const GradcheckConfig& cfg);

/// The random configurations gradcheck_pc_loss draws from, exposed for tests.
SceneGeometry random_constraint_config(std::uint64_t seed);

/// Smallest distance of any (footprint vertex, quad) pair to a kink of
/// pc_loss_fast: the ReLU hinge (S = 0) or the gate edge (|along| = w/2).
double kink_margin(const SceneGeometry& g);

}  // namespace quadlayout
