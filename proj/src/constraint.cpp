#include "quadlayout/constraint.hpp"

#include <Eigen/Core>

#include "quadlayout/classes.hpp"
#include "quadlayout/errors.hpp"

namespace quadlayout {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Each footprint vertex represents the bottom and top corner above it.
constexpr double kVerticalMultiplicity = 2.0;

bool constrained(const ConstraintConfig& cfg, int class_id) { return cfg.c_pc.count(class_id) > 0; }

// Matrix form of the top-down problem for one scene.
struct TopDown {
  std::vector<std::size_t> box_of_row;  // constrained box index per footprint vertex
  Eigen::MatrixX2d vertices;            // n x 2
  Eigen::Matrix2Xd normals;             // 2 x m, unit (a, b)
  Eigen::Matrix2Xd tangents;            // 2 x m, (b, -a)
  Eigen::RowVectorXd offsets;           // d = -(a cx + b cy)
  Eigen::RowVectorXd tangent_offsets;   // -(t . c)
  Eigen::RowVectorXd half_lengths;      // width / 2 + eps
};

TopDown prepare(std::span<const OrientedBox> boxes, std::span<const Quad> quads, const ConstraintConfig& cfg) {
  TopDown td;
  std::size_t rows = 0;
  for (const auto& b : boxes) rows += constrained(cfg, b.class_id) ? 4 : 0;
  td.vertices.resize(static_cast<Eigen::Index>(rows), 2);
  td.box_of_row.reserve(rows);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!constrained(cfg, boxes[i].class_id)) continue;
    for (const Vec2& v : box_footprint(boxes[i])) {
      td.vertices(r, 0) = v.x;
      td.vertices(r, 1) = v.y;
      td.box_of_row.push_back(i);
      ++r;
    }
  }
  const auto m = static_cast<Eigen::Index>(quads.size());
  td.normals.resize(2, m);
  td.tangents.resize(2, m);
  td.offsets.resize(m);
  td.tangent_offsets.resize(m);
  td.half_lengths.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Quad& q = quads[static_cast<std::size_t>(j)];
    const double h = std::hypot(q.normal.x, q.normal.y);
    const double a = q.normal.x / h;
    const double b = q.normal.y / h;
    td.normals.col(j) << a, b;
    td.tangents.col(j) << b, -a;
    td.offsets(j) = -(a * q.center.x + b * q.center.y);
    td.tangent_offsets(j) = -(b * q.center.x - a * q.center.y);
    td.half_lengths(j) = 0.5 * q.width + cfg.eps_inside;
  }
  return td;
}

struct Evaluated {
  RowMatrix signed_dist;  // n x m, PQ + d
  RowMatrix along;        // n x m, position along each segment
  RowMatrix gate;         // n x m, projection indicator in {0, 1}
};

Evaluated evaluate(const TopDown& td) {
  Evaluated e;
  e.signed_dist = td.vertices * td.normals;
  e.signed_dist.rowwise() += td.offsets;
  e.along = td.vertices * td.tangents;
  e.along.rowwise() += td.tangent_offsets;
  const auto limit = td.half_lengths.replicate(e.along.rows(), 1).array();
  e.gate = (e.along.array().abs() <= limit).cast<double>();
  return e;
}

// Same quantity as summing relu(-S) * gate over the evaluated matrices, but
// one fused pass per quad without materializing them. Four partial sums
// keep the loop free of a serial dependency.
double fast_loss_from(const TopDown& td) {
  const double* x = td.vertices.col(0).data();
  const double* y = td.vertices.col(1).data();
  const Eigen::Index n = td.vertices.rows();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index j = 0; j < td.normals.cols(); ++j) {
    const double a = td.normals(0, j);
    const double b = td.normals(1, j);
    const double d = td.offsets(j);
    const double t0 = td.tangent_offsets(j);
    const double h = td.half_lengths(j);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double s = a * x[r] + b * y[r] + d;
      const double along = b * x[r] - a * y[r] + t0;
      acc[r & 3] += (s < 0.0 && std::abs(along) <= h) ? -s : 0.0;
    }
  }
  return kVerticalMultiplicity * ((acc[0] + acc[1]) + (acc[2] + acc[3]));
}

}  // namespace

ConstraintConfig default_constraint_config() {
  ConstraintConfig cfg;
  for (int c = 0; c < cls::count; ++c) {
    if (!is_wall_mounted(c)) cfg.c_pc.insert(c);
  }
  return cfg;
}

void validate(const ConstraintConfig& cfg) {
  if (cfg.c_pc.empty()) throw ConfigError("constraint class set must not be empty");
  if (!(cfg.eps_inside >= 0.0)) throw ConfigError("eps_inside must be non-negative");
}

double pc_loss_naive(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                     const ConstraintConfig& cfg) {
  double loss = 0.0;
  for (const auto& box : boxes) {
    if (!constrained(cfg, box.class_id)) continue;
    const auto corners = box_corners(box);
    for (const auto& quad : quads) {
      for (const auto& corner : corners) {
        const double s = signed_side(plane_of(quad), corner);
        if (s >= 0.0) continue;
        if (project_onto_quad(quad, corner, cfg.eps_inside).inside) loss += -s;
      }
    }
  }
  return loss;
}

double pc_loss_fast(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                    const ConstraintConfig& cfg) {
  if (boxes.empty() || quads.empty()) return 0.0;
  const TopDown td = prepare(boxes, quads, cfg);
  if (td.vertices.rows() == 0) return 0.0;
  return fast_loss_from(td);
}

LossAndGrad pc_loss_grad(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                         const ConstraintConfig& cfg) {
  LossAndGrad out;
  out.grad.boxes.assign(boxes.size(), BoxGrad{});
  out.grad.quads.assign(quads.size(), QuadGrad{});
  if (boxes.empty() || quads.empty()) return out;
  const TopDown td = prepare(boxes, quads, cfg);
  if (td.vertices.rows() == 0) return out;
  const Evaluated e = evaluate(td);
  out.loss = fast_loss_from(td);

  // Active-set weights: d loss / d(-S) per (vertex, quad).
  const RowMatrix active =
      kVerticalMultiplicity * ((e.signed_dist.array() < 0.0).cast<double>() * e.gate.array()).matrix();

  // d loss / d vertex = -sum_j w_rj (a_j, b_j)
  const Eigen::MatrixX2d d_vertex = -(active * td.normals.transpose());

  for (Eigen::Index j = 0; j < td.normals.cols(); ++j) {
    const double w = active.col(j).sum();
    auto& g = out.grad.quads[static_cast<std::size_t>(j)];
    g.d_center = {w * td.normals(0, j), w * td.normals(1, j), 0.0};
    g.d_normal_angle = active.col(j).dot(e.along.col(j));
  }

  for (Eigen::Index r = 0; r < td.vertices.rows(); ++r) {
    const std::size_t i = td.box_of_row[static_cast<std::size_t>(r)];
    const OrientedBox& box = boxes[i];
    const auto k = static_cast<std::size_t>(r % 4);
    const double sx = (k == 0 || k == 3) ? 1.0 : -1.0;
    const double sy = (k == 0 || k == 1) ? 1.0 : -1.0;
    const double c = std::cos(box.heading);
    const double s = std::sin(box.heading);
    const double lx = sx * 0.5 * box.size.x;
    const double ly = sy * 0.5 * box.size.y;
    const double gx = d_vertex(r, 0);
    const double gy = d_vertex(r, 1);
    auto& g = out.grad.boxes[i];
    g.d_center.x += gx;
    g.d_center.y += gy;
    g.d_size.x += gx * (0.5 * sx * c) + gy * (0.5 * sx * s);
    g.d_size.y += gx * (-0.5 * sy * s) + gy * (0.5 * sy * c);
    g.d_heading += gx * (-s * lx - c * ly) + gy * (c * lx - s * ly);
  }
  return out;
}

int count_collisions(std::span<const OrientedBox> boxes, std::span<const Quad> quads,
                     const std::set<int>* restrict_to) {
  int count = 0;
  for (const auto& box : boxes) {
    if (restrict_to != nullptr && restrict_to->count(box.class_id) == 0) continue;
    for (const auto& corner : box_corners(box)) {
      for (const auto& quad : quads) {
        if (signed_side(plane_of(quad), corner) < 0.0 && project_onto_quad(quad, corner).inside) {
          ++count;
          break;
        }
      }
    }
  }
  return count;
}

double pc_loss_naive_batch(std::span<const SceneGeometry> batch, const ConstraintConfig& cfg) {
  double total = 0.0;
  for (const auto& scene : batch) total += pc_loss_naive(scene.boxes, scene.quads, cfg);
  return total;
}

double pc_loss_fast_batch(std::span<const SceneGeometry> batch, const ConstraintConfig& cfg) {
  double total = 0.0;
  for (const auto& scene : batch) total += pc_loss_fast(scene.boxes, scene.quads, cfg);
  return total;
}

}  // namespace quadlayout
