#include "quadlayout/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "quadlayout/classes.hpp"
#include "quadlayout/random.hpp"

namespace quadlayout {

namespace {

Quad with_azimuth(Quad q, double phi) {
  q.normal = {std::cos(phi), std::sin(phi), 0.0};
  return q;
}

}  // namespace

SceneGeometry random_constraint_config(std::uint64_t seed) {
  Rng rng(seed);
  SceneGeometry g;
  const std::size_t walls = 1 + rng.index(4);
  for (std::size_t j = 0; j < walls; ++j) {
    Quad q;
    q.center = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), 1.5};
    q.width = rng.uniform(2.0, 6.0);
    q.height = 3.0;
    g.quads.push_back(with_azimuth(q, rng.uniform(-kPi, kPi)));
  }
  const std::size_t boxes = 1 + rng.index(4);
  for (std::size_t i = 0; i < boxes; ++i) {
    const Quad& q = g.quads[rng.index(g.quads.size())];
    const QuadFrame f = quad_frame(q);
    OrientedBox b;
    b.class_id = cls::chair;
    b.size = {rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5), rng.uniform(0.3, 2.0)};
    b.heading = rng.uniform(-kPi, kPi);
    const Vec3 c = q.center + f.u * (rng.uniform(-0.5, 0.5) * q.width) + q.normal * rng.uniform(-0.6, 0.4);
    b.center = {c.x, c.y, 0.5 * b.size.z};
    g.boxes.push_back(b);
  }
  return g;
}

double kink_margin(const SceneGeometry& g) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : g.boxes) {
    for (const Vec2& p : box_footprint(b)) {
      for (const auto& q : g.quads) {
        const double h = std::hypot(q.normal.x, q.normal.y);
        const double a = q.normal.x / h;
        const double bb = q.normal.y / h;
        const double s = a * (p.x - q.center.x) + bb * (p.y - q.center.y);
        const double t = bb * (p.x - q.center.x) - a * (p.y - q.center.y);
        m = std::min({m, std::abs(s), std::abs(std::abs(t) - 0.5 * q.width)});
      }
    }
  }
  return m;
}

GradcheckReport gradcheck_pc_loss(const GradcheckConfig& cfg) {
  const ConstraintConfig pc = default_constraint_config();
  GradcheckReport r;
  Rng seeds(cfg.seed);
  while (r.trials < cfg.trials) {
    SceneGeometry g = random_constraint_config(seeds.bits());
    if (kink_margin(g) <= cfg.kink || pc_loss_fast(g.boxes, g.quads, pc) <= 0.0) {
      ++r.redrawn;
      continue;
    }
    ++r.trials;
    const LossAndGrad analytic = pc_loss_grad(g.boxes, g.quads, pc);

    const auto check = [&](double a, const std::function<void(SceneGeometry&, double)>& shift) {
      SceneGeometry plus = g;
      SceneGeometry minus = g;
      shift(plus, cfg.h);
      shift(minus, -cfg.h);
      const double f = (pc_loss_fast(plus.boxes, plus.quads, pc) - pc_loss_fast(minus.boxes, minus.quads, pc)) /
                       (2.0 * cfg.h);
      const double err = std::abs(a - f);
      r.max_abs_err = std::max(r.max_abs_err, err);
      r.max_rel_err = std::max(r.max_rel_err, err / std::max({std::abs(a), std::abs(f), kGradcheckFloor}));
      ++r.components;
    };

    for (std::size_t i = 0; i < g.boxes.size(); ++i) {
      const BoxGrad& bg = analytic.grad.boxes[i];
      check(bg.d_center.x, [i](SceneGeometry& s, double d) { s.boxes[i].center.x += d; });
      check(bg.d_center.y, [i](SceneGeometry& s, double d) { s.boxes[i].center.y += d; });
      check(bg.d_size.x, [i](SceneGeometry& s, double d) { s.boxes[i].size.x += d; });
      check(bg.d_size.y, [i](SceneGeometry& s, double d) { s.boxes[i].size.y += d; });
      check(bg.d_heading, [i](SceneGeometry& s, double d) { s.boxes[i].heading += d; });
    }
    for (std::size_t j = 0; j < g.quads.size(); ++j) {
      const QuadGrad& qg = analytic.grad.quads[j];
      const double phi = std::atan2(g.quads[j].normal.y, g.quads[j].normal.x);
      check(qg.d_center.x, [j](SceneGeometry& s, double d) { s.quads[j].center.x += d; });
      check(qg.d_center.y, [j](SceneGeometry& s, double d) { s.quads[j].center.y += d; });
      check(qg.d_normal_angle,
            [j, phi](SceneGeometry& s, double d) { s.quads[j] = with_azimuth(s.quads[j], phi + d); });
    }
  }
  return r;
}

}  // namespace quadlayout
