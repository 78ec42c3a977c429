// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadlayout/classes.hpp"
#include "quadlayout/codec.hpp"
#include "quadlayout/constraint.hpp"
#include "quadlayout/decoder.hpp"
#include "quadlayout/gradcheck.hpp"
#include "quadlayout/io.hpp"
#include "quadlayout/losses.hpp"
#include "quadlayout/metrics.hpp"
#include "quadlayout/postprocess.hpp"
#include "quadlayout/proposals.hpp"
#include "quadlayout/scene.hpp"
#include "oracles.hpp"
#include "support.hpp"

#ifndef QUADLAYOUT_CLI
#define QUADLAYOUT_CLI "quadlayout"
#endif

using namespace quadlayout;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Scene room(std::uint64_t seed, RoomShape shape, std::size_t points = 1000) {
  GenConfig g;
  g.shape = shape;
  g.seed = seed;
  g.points = points;
  return gen_scene(g);
}

// 1 ---------------------------------------------------------------------------

Outcome fast_equals_naive() {
  const auto t0 = Clock::now();
  const ConstraintConfig cfg = default_constraint_config();
  double worst = 0.0;
  int nonzero = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Scene s = room(seed, seed % 2 ? RoomShape::lshape : RoomShape::rect);
    push_through_walls(s, cfg, seed);
    const double naive = pc_loss_naive(s.gt_boxes, s.gt_quads, cfg);
    const double fast = pc_loss_fast(s.gt_boxes, s.gt_quads, cfg);
    worst = std::max(worst, std::abs(naive - fast));
    nonzero += naive > 0.0 ? 1 : 0;
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 60.0, "max |fast - naive| = " + fmt("%.3g", worst) + " over 1000 scenes (" +
                                          std::to_string(nonzero) + " with collisions), " + fmt("%.2f", t) + " s"};
}

// 2 ---------------------------------------------------------------------------

Outcome fast_is_faster() {
  const ConstraintConfig cfg = default_constraint_config();
  const auto batch = bench_batch(8, 256, 256, 2024);
  double naive_t = std::numeric_limits<double>::infinity();
  double fast_t = naive_t;
  double naive = 0.0;
  double fast = 0.0;
  for (int r = 0; r < 5; ++r) {
    auto t0 = Clock::now();
    naive = pc_loss_naive_batch(batch, cfg);
    naive_t = std::min(naive_t, seconds_since(t0));
    t0 = Clock::now();
    fast = pc_loss_fast_batch(batch, cfg);
    fast_t = std::min(fast_t, seconds_since(t0));
  }
  const double speedup = naive_t / fast_t;
  return {speedup >= 3.0 && std::abs(naive - fast) <= 1e-9 * std::max(1.0, naive),
          "naive " + fmt("%.4f", naive_t) + " s, fast " + fmt("%.4f", fast_t) + " s, speedup " +
              fmt("%.2f", speedup) + "x (batch 8, 256 boxes, 256 quads)"};
}

// 3 ---------------------------------------------------------------------------

double margin_to_kinks(const SceneGeometry& g) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : g.boxes) {
    for (const auto& p : oracle::footprint(b)) {
      for (const auto& q : g.quads) {
        const double h = std::hypot(q.normal.x, q.normal.y);
        const double nx = q.normal.x / h;
        const double ny = q.normal.y / h;
        const double side = nx * (p.x - q.center.x) + ny * (p.y - q.center.y);
        const double along = ny * (p.x - q.center.x) - nx * (p.y - q.center.y);
        m = std::min({m, std::abs(side), std::abs(std::abs(along) - 0.5 * q.width)});
      }
    }
  }
  return m;
}

Outcome gradient_check() {
  const ConstraintConfig cfg = default_constraint_config();
  const double h = 1e-5;
  const double floor = 1e-4;
  testing::Rng seeds(77);
  int trials = 0;
  int redrawn = 0;
  double worst_rel = 0.0;
  double worst_abs = 0.0;
  while (trials < 200) {
    const SceneGeometry g = random_constraint_config(seeds.bits());
    if (margin_to_kinks(g) <= 1e-3 || oracle::pc_loss(g.boxes, g.quads, cfg.c_pc) <= 0.0) {
      ++redrawn;
      continue;
    }
    ++trials;
    const LossAndGrad a = pc_loss_grad(g.boxes, g.quads, cfg);
    const auto compare = [&](double analytic, const std::function<void(SceneGeometry&, double)>& shift) {
      SceneGeometry p = g;
      SceneGeometry m = g;
      shift(p, h);
      shift(m, -h);
      const double fd =
          (oracle::pc_loss(p.boxes, p.quads, cfg.c_pc) - oracle::pc_loss(m.boxes, m.quads, cfg.c_pc)) / (2 * h);
      const double err = std::abs(analytic - fd);
      worst_abs = std::max(worst_abs, err);
      worst_rel = std::max(worst_rel, err / std::max({std::abs(analytic), std::abs(fd), floor}));
    };
    for (std::size_t i = 0; i < g.boxes.size(); ++i) {
      const BoxGrad& bg = a.grad.boxes[i];
      compare(bg.d_center.x, [i](SceneGeometry& s, double d) { s.boxes[i].center.x += d; });
      compare(bg.d_center.y, [i](SceneGeometry& s, double d) { s.boxes[i].center.y += d; });
      compare(bg.d_size.x, [i](SceneGeometry& s, double d) { s.boxes[i].size.x += d; });
      compare(bg.d_size.y, [i](SceneGeometry& s, double d) { s.boxes[i].size.y += d; });
      compare(bg.d_heading, [i](SceneGeometry& s, double d) { s.boxes[i].heading += d; });
    }
    for (std::size_t j = 0; j < g.quads.size(); ++j) {
      const QuadGrad& qg = a.grad.quads[j];
      compare(qg.d_center.x, [j](SceneGeometry& s, double d) { s.quads[j].center.x += d; });
      compare(qg.d_center.y, [j](SceneGeometry& s, double d) { s.quads[j].center.y += d; });
      compare(qg.d_normal_angle, [j](SceneGeometry& s, double d) {
        const double phi = std::atan2(s.quads[j].normal.y, s.quads[j].normal.x) + d;
        s.quads[j].normal = {std::cos(phi), std::sin(phi), 0.0};
      });
    }
  }
  return {worst_rel <= 1e-4, "max rel err " + fmt("%.3g", worst_rel) + ", max abs err " + fmt("%.3g", worst_abs) +
                                 " over 200 configurations (" + std::to_string(redrawn) + " redrawn)"};
}

// 4 ---------------------------------------------------------------------------

Outcome collisions_collapse() {
  const ConstraintConfig cfg = default_constraint_config();
  int scenes = 0;
  long before = 0;
  long after = 0;
  int max_steps = 0;
  for (std::uint64_t seed = 0; scenes < 100; ++seed) {
    Scene s = room(seed, seed % 2 ? RoomShape::lshape : RoomShape::rect);
    push_through_walls(s, cfg, seed);
    const int n = oracle::collisions(s.gt_boxes, s.gt_quads);
    if (n == 0) continue;
    ++scenes;
    before += n;
    const DescentResult r = descend_collisions(s.gt_boxes, s.gt_quads, cfg, 500, 0.01);
    after += oracle::collisions(r.boxes, s.gt_quads);
    max_steps = std::max(max_steps, r.steps);
  }
  return {after == 0, std::to_string(before) + " -> " + std::to_string(after) + " collisions over 100 scenes, at most " +
                          std::to_string(max_steps) + " steps"};
}

// 5 ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  testing::Rng rng(55);
  int fps_bad = 0;
  int cluster_bad = 0;
  int nms_bad = 0;
  int match_bad = 0;
  double worst = 0.0;
  const int n = 200;
  for (int t = 0; t < n; ++t) {
    const auto pts = testing::random_points(rng, 20 + rng.index(80), -1, 1);
    const std::size_t first = rng.index(pts.size());
    const std::size_t k = 1 + rng.index(10);
    if (fps(pts, k, first) != oracle::fps(pts, k, first)) ++fps_bad;

    VoteSet v;
    v.positions = pts;
    v.features = Matrix(static_cast<Eigen::Index>(pts.size()), 3);
    for (Eigen::Index i = 0; i < v.features.rows(); ++i) v.features.row(i) << rng.normal(), rng.normal(), rng.normal();
    const VoteClusters c = cluster_votes_detailed(v, k, 0.4);
    const auto centers = oracle::fps(pts, k, oracle::lexicographic_min(pts));
    bool ok = c.centers == centers;
    for (std::size_t j = 0; ok && j < k; ++j) {
      const auto members = oracle::radius_query(pts, pts[centers[j]], 0.4);
      ok = c.members[j] == members;
      Vec3 mean;
      Eigen::RowVectorXd f = Eigen::RowVectorXd::Zero(3);
      for (std::size_t i : members) {
        mean += pts[i];
        f += v.features.row(static_cast<Eigen::Index>(i));
      }
      mean = mean / static_cast<double>(members.size());
      f /= static_cast<double>(members.size());
      const double err = std::max(distance(mean, c.proposals.positions[j]),
                                  (f - c.proposals.features.row(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff());
      worst = std::max(worst, err);
      ok = ok && err <= 1e-9;
    }
    if (!ok) ++cluster_bad;

    std::vector<OrientedBox> boxes;
    for (std::size_t i = 0, m = 1 + rng.index(20); i < m; ++i) boxes.push_back(testing::random_box(rng, 1.0));
    if (nms_indices(boxes, 0.25) != oracle::nms(boxes, 0.25, oracle::iou)) ++nms_bad;

    const auto p = testing::random_points(rng, 1 + rng.index(7), 0, 1);
    const auto g = testing::random_points(rng, 1 + rng.index(7), 0, 1);
    if (match_corners(p, g, 0.4).size() != oracle::max_matching(p, g, 0.4)) ++match_bad;
  }
  const bool pass = fps_bad + cluster_bad + nms_bad + match_bad == 0;
  return {pass, std::to_string(n) + " instances each; mismatches fps " + std::to_string(fps_bad) + ", cluster_votes " +
                    std::to_string(cluster_bad) + ", nms " + std::to_string(nms_bad) + ", corner matching " +
                    std::to_string(match_bad) + "; worst cluster mean error " + fmt("%.2g", worst)};
}

// 6 ---------------------------------------------------------------------------

Outcome iou_cases() {
  const OrientedBox a = testing::unit_box({0, 0, 0});
  const double same = iou_3d(a, a);
  const double half = iou_3d(a, testing::unit_box({0.5, 0, 0}));
  const OrientedBox r = testing::unit_box({0, 0, 0}, kPi / 4);
  const double rot = iou_3d(a, r);
  const double ref = oracle::iou(a, r);
  const bool pass = same == 1.0 && std::abs(half - 1.0 / 3.0) <= 1e-12 && std::abs(rot - ref) <= 1e-9;
  return {pass, "identical " + fmt("%.17g", same) + ", offset |err| " + fmt("%.2g", std::abs(half - 1.0 / 3.0)) +
                    ", rotated " + fmt("%.12f", rot) + " vs oracle " + fmt("%.12f", ref)};
}

// 7 ---------------------------------------------------------------------------

Eigen::PermutationMatrix<Eigen::Dynamic> shuffle(Eigen::Index n, testing::Rng& rng) {
  Eigen::PermutationMatrix<Eigen::Dynamic> p(n);
  p.setIdentity();
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::swap(p.indices()[i], p.indices()[static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(i + 1)))]);
  }
  return p;
}

ProposalSet random_proposals(Eigen::Index k, Eigen::Index d, ProposalKind kind, testing::Rng& rng) {
  ProposalSet p;
  p.kind = kind;
  p.positions = testing::random_points(rng, static_cast<std::size_t>(k), -3, 3);
  p.features = Matrix(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) p.features(i, c) = rng.normal();
  }
  return p;
}

Outcome decoder_invariants() {
  testing::Rng rng(7);
  std::vector<std::string> failed;

  double softmax_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    Matrix m(8, 16);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1e3, 1e3);
    softmax_err = std::max(softmax_err, (softmax_rows(m).rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  if (!(softmax_err <= 1e-6)) failed.push_back("softmax");

  DecoderConfig small;
  small.layers = 2;
  small.d = 16;
  small.heads = 4;
  small.point_dim = 19;
  DecoderParams p = random_params(small, 11);
  DecoderParams z = p;
  for (auto* a : {&z.blocks[0].self_attn, &z.blocks[0].cross_attn}) {
    a->out.weight.setZero();
    a->out.bias.setZero();
    a->out.shift.setZero();
  }
  const Matrix f = Matrix::Random(10, small.d);
  const Matrix pts = Matrix::Random(40, small.point_dim);
  if (!(self_attention_block(f, z.blocks[0].self_attn) == f &&
        cross_attention_block(f, pts, z.blocks[0].cross_attn) == f)) {
    failed.push_back("identity");
  }

  double equi = 0.0;
  double inv = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto obj = random_proposals(12, small.d, ProposalKind::object, rng);
    const auto quad = random_proposals(9, small.d, ProposalKind::quad, rng);
    const auto po = shuffle(12, rng);
    const auto pq = shuffle(9, rng);
    const auto pp = shuffle(40, rng);
    ProposalSet obj2 = obj;
    ProposalSet quad2 = quad;
    obj2.features = po * obj.features;
    quad2.features = pq * quad.features;
    for (Eigen::Index i = 0; i < 12; ++i) obj2.positions[static_cast<std::size_t>(po.indices()[i])] = obj.positions[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < 9; ++i) quad2.positions[static_cast<std::size_t>(pq.indices()[i])] = quad.positions[static_cast<std::size_t>(i)];
    const auto a = decoder_forward(obj, quad, pts, p);
    const auto b = decoder_forward(obj2, quad2, pp * pts, p);
    for (std::size_t l = 0; l < a.size(); ++l) {
      equi = std::max(equi, (po * a[l].features.topRows(12) - b[l].features.topRows(12)).cwiseAbs().maxCoeff());
      equi = std::max(equi, (pq * a[l].features.bottomRows(9) - b[l].features.bottomRows(9)).cwiseAbs().maxCoeff());
      equi = std::max(equi, (po * a[l].geometry.topRows(12) - b[l].geometry.topRows(12)).cwiseAbs().maxCoeff());
    }
    const Matrix x = cross_attention_block(f, pts, p.blocks[1].cross_attn);
    const Matrix y = cross_attention_block(f, pp * pts, p.blocks[1].cross_attn);
    inv = std::max(inv, (x - y).cwiseAbs().maxCoeff());
  }
  if (!(equi <= 1e-9)) failed.push_back("equivariance");
  if (!(inv <= 1e-9)) failed.push_back("invariance");

  const DecoderConfig full;
  const auto params = random_params(full, 3, 0.5);
  const auto obj = random_proposals(256, full.d, ProposalKind::object, rng);
  const auto quad = random_proposals(256, full.d, ProposalKind::quad, rng);
  const auto out = decoder_forward(obj, quad, Matrix::Random(1024, full.point_dim), params);
  bool shapes = full.layers == 6 && full.heads == 8 && out.size() == 6;
  for (const auto& b : out) {
    shapes = shapes && b.features.rows() == 512 && b.features.cols() == full.d &&
             b.geometry.rows() == 512 && b.geometry.cols() == full.geometry_width && b.features.allFinite();
  }
  if (!shapes) failed.push_back("shapes");

  std::string detail = "softmax err " + fmt("%.2g", softmax_err) + ", equivariance " + fmt("%.2g", equi) +
                       ", point invariance " + fmt("%.2g", inv) + ", L=6 heads=8 512x" + std::to_string(full.d);
  for (const auto& s : failed) detail += "; failed " + s;
  return {failed.empty(), detail};
}

// 8 ---------------------------------------------------------------------------

Outcome codec_round_trip() {
  const HeadConfig cfg = default_head_config();
  testing::Rng rng(88);
  double worst = 0.0;
  bool classes = true;
  for (int i = 0; i < 1000; ++i) {
    OrientedBox b;
    b.class_id = static_cast<int>(rng.index(18));
    const Vec3 prior = cfg.size_priors[rng.index(18)];
    b.size = {prior.x * rng.uniform(0.5, 1.5), prior.y * rng.uniform(0.5, 1.5), prior.z * rng.uniform(0.5, 1.5)};
    b.center = testing::random_vec(rng, -5, 5);
    b.heading = rng.uniform(-kPi, kPi);
    const Vec3 base = b.center + testing::random_vec(rng, -0.3, 0.3);
    const ObjectPrediction p = decode_object(encode_object_target(b, base, cfg).vector, base, cfg);
    worst = std::max({worst, distance(p.box.center, b.center), distance(p.box.size, b.size),
                      std::abs(wrap_angle(p.box.heading - b.heading))});
    classes = classes && p.box.class_id == b.class_id;

    Quad q;
    q.center = testing::random_vec(rng, -5, 5);
    q.width = rng.uniform(0.5, 8.0);
    q.height = rng.uniform(2.0, 3.5);
    const double phi = rng.uniform(-kPi, kPi);
    q.normal = normalized(Vec3{std::cos(phi), std::sin(phi), rng.uniform(-0.05, 0.05)});
    const Vec3 qb = q.center + testing::random_vec(rng, -0.3, 0.3);
    const QuadPrediction d = decode_quad(encode_quad_target(q, qb), qb);
    worst = std::max({worst, distance(d.quad.center, q.center), std::abs(d.quad.width - q.width),
                      std::abs(d.quad.height - q.height), distance(d.quad.normal, q.normal)});
  }
  return {worst <= 1e-9 && classes, "max error " + fmt("%.3g", worst) + " over 1000 boxes and 1000 quads (H=" +
                                        std::to_string(cfg.heading_bins) + ", S=" + std::to_string(cfg.size_bins) +
                                        ", C=" + std::to_string(cfg.num_classes) + ")"};
}

// 9 ---------------------------------------------------------------------------

HeadConfig tiny_head() {
  HeadConfig h;
  h.heading_bins = 2;
  h.size_bins = 1;
  h.num_classes = 2;
  h.size_priors = {{1, 1, 1}};
  return h;
}

Outcome loss_assembly() {
  std::vector<std::string> failed;
  const HeadConfig head = tiny_head();

  // Two proposals: a positive 0.1 m off with heading residual 0.2 and size
  // residual 0.1, and a negative with objectness logits (1, 0).
  OrientedBox gt;
  gt.center = {0, 0, 0.5};
  gt.class_id = 1;
  const std::vector<OrientedBox> boxes{gt};
  SetPredictions pred;
  std::vector<double> a(head.object_vector_size(), 0.0);
  a[head.heading_residual_offset()] = 0.2;
  a[head.size_residual_offset()] = 0.1;
  std::vector<double> b(head.object_vector_size(), 0.0);
  b[0] = 1.0;
  pred.object_bases = {{0.1, 0, 0.5}, {5, 5, 0.5}};
  pred.object_vectors = {a, b};
  Quad wall;
  wall.center = {3, 0, 1.5};
  wall.width = 4;
  wall.height = 3;
  wall.normal = {-1, 0, 0};
  Assignment assign;
  assign.objects = {0, std::nullopt};

  const LossWeights w0;
  const SetLoss hand = set_loss(pred, boxes, {}, assign, head, w0);
  const double ln2 = std::log(2.0);
  const double objectness = (ln2 + std::log(1.0 + std::exp(-1.0))) / 2.0;
  const double box = 0.005 + 0.1 * ln2 + 0.02 + 0.005;
  const double expect = 0.5 * objectness + box + 0.1 * ln2;
  const double hand_err = std::abs(hand.total - expect);
  if (!(hand_err <= 1e-9)) failed.push_back("hand example");

  pred.quad_bases = {{2.9, 0.2, 1.4}};
  pred.quad_vectors = {{0.3, 0.1, 0.2, -0.1, 0.0, 1.2, 1.0, -1.0, 0.1, 0.0}};
  assign.quads = {0};
  const std::vector<Quad> quads{wall};
  const SetLoss base = set_loss(pred, boxes, quads, assign, head, w0);
  const std::vector<std::pair<double LossWeights::*, double>> slopes{
      {&LossWeights::objectness, base.objectness},       {&LossWeights::box, base.box},
      {&LossWeights::cls, base.cls},                     {&LossWeights::quadness, base.quadness},
      {&LossWeights::quad_center, base.quad_center},     {&LossWeights::quad_normal, base.quad_normal},
      {&LossWeights::quad_size, base.quad_size},         {&LossWeights::center, w0.box * base.center},
      {&LossWeights::heading_cls, w0.box * base.heading_cls}, {&LossWeights::heading_reg, w0.box * base.heading_reg},
      {&LossWeights::size_cls, w0.box * base.size_cls},  {&LossWeights::size_reg, w0.box * base.size_reg},
  };
  double lin = 0.0;
  for (const auto& [field, slope] : slopes) {
    for (double delta : {0.37, 1.3, 2.5}) {
      LossWeights w = w0;
      w.*field += delta;
      lin = std::max(lin, std::abs(set_loss(pred, boxes, quads, assign, head, w).total - base.total - delta * slope));
    }
  }
  const std::vector<double> totals{1, 2, 3, 4, 5, 6, 7};
  lin = std::max(lin, std::abs(total_loss(totals, 0.3, 0.2) - (4.0 + 0.3 + 0.2)));
  if (!(lin <= 1e-12)) failed.push_back("linearity");

  // Perfect predictions on a generated room.
  const HeadConfig full = default_head_config();
  const Scene s = room(5, RoomShape::lshape);
  SetPredictions perfect;
  for (const auto& gb : s.gt_boxes) {
    const Vec3 base_pt = gb.center + Vec3{0.05, -0.05, 0.0};
    perfect.object_bases.push_back(base_pt);
    perfect.object_vectors.push_back(encode_object_target(gb, base_pt, full).vector);
  }
  for (const auto& q : s.gt_quads) {
    perfect.quad_bases.push_back(q.center);
    perfect.quad_vectors.push_back(encode_quad_target(q, q.center));
  }
  const SetLoss pl = set_loss(perfect, s.gt_boxes, s.gt_quads, assign_targets(perfect, s.gt_boxes, s.gt_quads), full,
                              LossWeights{});
  const double pc = pc_loss_fast(s.gt_boxes, s.gt_quads, default_constraint_config());
  const VoteTargets vt = gt_vote_targets(s.cloud.positions, s.gt_boxes);
  const double vote = vote_loss(vt.offsets, vt.offsets, vt.on_object);
  const double total = total_loss(std::vector<double>(7, pl.total), pc, vote);
  if (!(total <= 1e-6 && pc == 0.0 && vote == 0.0)) failed.push_back("perfect predictions");

  std::string detail = "hand |err| " + fmt("%.2g", hand_err) + ", linearity |err| " + fmt("%.2g", lin) +
                       ", perfect total " + fmt("%.3g", total) + " (pc " + fmt("%g", pc) + ", vote " +
                       fmt("%g", vote) + ")";
  for (const auto& f : failed) detail += "; failed " + f;
  return {failed.empty(), detail};
}

// 10 --------------------------------------------------------------------------

EvalScene predict(const Document& gt_doc, bool corrupt) {
  Document doc = document_from_json(parse_json(dump_stable(to_json(gt_doc))));
  if (corrupt) doc.quads[0].center += doc.quads[0].normal * 1.0;
  Document pred = doc;
  pred.objects.clear();
  for (std::size_t i : nms_indices(doc.objects)) pred.objects.push_back(doc.objects[i]);
  const auto qp = quad_predictions(doc);
  pred.quads.clear();
  pred.quad_scores.clear();
  std::vector<QuadPrediction> kept;
  for (std::size_t i : quad_nms_indices(qp)) {
    pred.quads.push_back(doc.quads[i]);
    if (!doc.quad_scores.empty()) pred.quad_scores.push_back(doc.quad_scores[i]);
    kept.push_back(qp[i]);
  }
  const CeilingFloor cf = assemble_ceiling_floor(kept);
  pred.layout = {cf.ceiling, cf.floor};
  return to_eval_scene(pred);
}

Outcome pipeline() {
  std::vector<EvalScene> gt;
  std::vector<EvalScene> clean;
  std::vector<EvalScene> broken;
  for (int i = 0; i < 100; ++i) {
    const RoomShape shape = i < 50 ? RoomShape::rect : RoomShape::lshape;
    const Scene s = room(static_cast<std::uint64_t>(1000 + i), shape);
    const Document doc = to_document(s, s.id + ".ply");
    gt.push_back({s.id, s.gt_boxes, s.gt_quads, layout_polygons(s.gt_quads, s.gt_layout)});
    clean.push_back(predict(doc, false));
    broken.push_back(predict(doc, true));
  }
  const SceneSetResult a = evaluate_scene_set(clean, gt);
  const SceneSetResult b = evaluate_scene_set(broken, gt);

  // Per rectangle: 3 walls match; the moved wall, ceiling and floor are FP
  // and FN. Per L-shaped room: 5 walls match, the same 3 FP and 3 FN.
  // Pooled: TP 400, FP 300, FN 300, F1 = 800 / 1400 = 4/7.
  const double expect = 4.0 / 7.0;
  const double drop = a.layout.f1_all - b.layout.f1_all;
  const bool pass = a.detection.map == 1.0 && a.layout.f1_all == 1.0 && std::abs(b.layout.f1_all - expect) <= 1e-12;
  return {pass, "clean mAP " + fmt("%.6f", a.detection.map) + ", F1 " + fmt("%.6f", a.layout.f1_all) +
                    "; one wall moved 1 m per scene: F1 " + fmt("%.6f", b.layout.f1_all) + " (drop " +
                    fmt("%.6f", drop) + ", expected 3/7 = " + fmt("%.6f", 3.0 / 7.0) + ")"};
}

// 11 --------------------------------------------------------------------------

Outcome ap_hand_case() {
  const double flags = average_precision_from_flags({true, false, true}, 2);
  std::vector<OrientedBox> gts{testing::unit_box({0, 0, 0}), testing::unit_box({3, 0, 0})};
  std::vector<OrientedBox> preds = gts;
  preds[0].score = 0.9;
  preds[1].score = 0.5;
  OrientedBox miss = testing::unit_box({9, 9, 0});
  miss.score = 0.7;
  preds.push_back(miss);
  const double boxes = average_precision(preds, gts);
  const double expect = 5.0 / 6.0;
  return {std::abs(flags - expect) <= 1e-9 && std::abs(boxes - expect) <= 1e-9,
          "AP " + fmt("%.10f", flags) + " from flags, " + fmt("%.10f", boxes) + " from boxes"};
}

// 12 --------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// Runs the CLI and returns stdout plus every file under `out_dir`, or an
// error marker when it exits nonzero.
std::string run_cli(const std::string& args, unsigned workers, const fs::path& scratch, const fs::path* out_dir) {
  const fs::path stdout_file = scratch / "stdout.txt";
  std::string cmd = std::string("'") + QUADLAYOUT_CLI + "' --quiet --seed 17 --workers " + std::to_string(workers);
  if (out_dir) {
    fs::remove_all(*out_dir);
    cmd += " --out " + quoted(*out_dir);
  }
  cmd += " " + args + " > " + quoted(stdout_file) + " 2> " + quoted(scratch / "stderr.txt");
  const int rc = std::system(cmd.c_str());
  if (rc != 0) return "exit " + std::to_string(rc) + ": " + slurp(scratch / "stderr.txt");
  std::string all = slurp(stdout_file);
  if (out_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(*out_dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += "\n--" + f.filename().string() + "\n" + slurp(f);
  }
  return all;
}

// Wall-clock fields of bench-pcloss legitimately differ between runs.
std::string strip_timings(const std::string& out) {
  nlohmann::json j = nlohmann::json::parse(out);
  for (const char* k : {"fast_s", "naive_s", "speedup"}) j.erase(k);
  return j.dump();
}

Outcome cli_determinism() {
  const fs::path scratch = fs::temp_directory_path() / "quadlayout-acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path rect = scratch / "rect";
  const fs::path lshape = scratch / "lshape";
  const std::string setup_rect = run_cli("gen --rooms 2 --points 2000", 1, scratch, &rect);
  const std::string setup_l = run_cli("gen --shape lshape --rooms 2 --points 2000", 1, scratch, &lshape);
  const fs::path params = scratch / "params.json";
  {
    std::ofstream(params, std::ios::binary) << run_cli("init-params --layers 2 --d 16 --heads 2", 1, scratch, nullptr);
  }
  if (setup_rect.rfind("exit", 0) == 0 || setup_l.rfind("exit", 0) == 0) return {false, "gen failed: " + setup_rect};

  const std::string scene = quoted(lshape / "lshape_0000.json");
  struct Command {
    std::string name;
    std::string args;
    bool writes_dir = false;
    bool timed = false;
  };
  const std::vector<Command> commands{
      {"gen", "gen --shape lshape --rooms 3 --points 1500", true},
      {"propose", "propose --scene " + scene + " --seeds 256 --k1 32 --k2 32 --features"},
      {"init-params", "init-params --layers 2 --d 16 --heads 2"},
      {"decode", "decode --scene " + scene + " --params " + quoted(params) + " --seeds 128 --k1 16 --k2 16"},
      {"nms", "nms --pred " + scene},
      {"assemble", "assemble --pred " + scene},
      {"loss", "loss --scene " + scene + " --pred " + scene},
      {"gradcheck", "gradcheck --trials 20"},
      {"collisions", "collisions --pred " + quoted(rect) + " --descend"},
      {"eval-objects", "eval-objects --pred " + quoted(lshape) + " --gt " + quoted(lshape)},
      {"eval-layout", "eval-layout --pred " + quoted(rect) + " --gt " + quoted(rect)},
      {"bench-pcloss", "bench-pcloss --batch 2 --boxes 32 --quads 32 --repeats 1", false, true},
  };
  std::vector<std::string> bad;
  for (const auto& c : commands) {
    const fs::path dir = scratch / "out";
    const fs::path* out = c.writes_dir ? &dir : nullptr;
    std::string first = run_cli(c.args, 1, scratch, out);
    std::string second = run_cli(c.args, 1, scratch, out);
    std::string parallel = run_cli(c.args, 4, scratch, out);
    const bool failed = first.rfind("exit", 0) == 0;
    if (c.timed && !failed) {
      first = strip_timings(first);
      second = strip_timings(second);
      parallel = strip_timings(parallel);
    }
    if (failed || first != second || first != parallel) bad.push_back(c.name);
  }
  fs::remove_all(scratch);
  std::string detail = std::to_string(commands.size()) + " commands, two runs at --workers 1 and one at --workers 4";
  if (!bad.empty()) {
    detail += "; differing or failing:";
    for (const auto& b : bad) detail += " " + b;
  } else {
    detail += "; all byte-identical (bench-pcloss timings excluded)";
  }
  return {bad.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{
      fast_equals_naive, fast_is_faster,   gradient_check, collisions_collapse, oracle_equivalence, iou_cases,
      decoder_invariants, codec_round_trip, loss_assembly,  pipeline,            ap_hand_case,       cli_determinism,
  };
  const auto t0 = Clock::now();
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "Criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt("%.1f", seconds_since(t0)) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
