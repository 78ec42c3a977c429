#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "quadlayout/codec.hpp"
#include "quadlayout/proposals.hpp"

namespace quadlayout {

/// Loss weights lambda_1 .. lambda_12, named by the term they scale.
struct LossWeights {
  double objectness = 0.5;   // lambda_1
  double box = 1.0;          // lambda_2
  double cls = 0.1;          // lambda_3
  double quadness = 0.5;     // lambda_4
  double quad_center = 1.0;  // lambda_5
  double quad_normal = 1.0;  // lambda_6
  double quad_size = 1.0;    // lambda_7
  double center = 1.0;       // lambda_8
  double heading_cls = 0.1;  // lambda_9
  double heading_reg = 1.0;  // lambda_10
  double size_cls = 0.1;     // lambda_11
  double size_reg = 1.0;     // lambda_12
};

void validate(const LossWeights& w);
LossWeights weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LossWeights& w);

/// 0.5 x^2 / beta for |x| < beta, |x| - 0.5 beta otherwise.
double smooth_l1(double x, double beta = 1.0);
double smooth_l1_grad(double x, double beta = 1.0);

/// -log softmax(logits)[label]
double cross_entropy(std::span<const double> logits, std::size_t label);

/// (1/M) sum_i |dx_i - dx_i*|_1 over seeds on an object. Throws ShapeMismatch.
double vote_loss(const Matrix& offsets, const Matrix& gt_offsets, const std::vector<bool>& on_object);

/// Raw head outputs of one set of detection results.
struct SetPredictions {
  std::vector<Vec3> object_bases;
  std::vector<std::vector<double>> object_vectors;
  std::vector<Vec3> quad_bases;
  std::vector<std::array<double, kQuadVectorSize>> quad_vectors;
};

/// Ground-truth index per proposal; nullopt marks a negative.
struct Assignment {
  std::vector<std::optional<std::size_t>> objects;
  std::vector<std::optional<std::size_t>> quads;
};

/// Object proposals go to the nearest box center, quad proposals to the
/// nearest wall surface; anything farther than `radius` is negative.
Assignment assign_targets(const SetPredictions& pred, std::span<const OrientedBox> gt_boxes,
                          std::span<const Quad> gt_quads, double radius = 0.3);

/// Point-to-rectangle distance from x to the quad surface.
double distance_to_quad(const Quad& q, const Vec3& x);

struct SetLoss {
  double objectness = 0.0;
  double center = 0.0;
  double heading_cls = 0.0;
  double heading_reg = 0.0;
  double size_cls = 0.0;
  double size_reg = 0.0;
  double cls = 0.0;
  double box = 0.0;     // lambda_8..12 weighted
  double object = 0.0;  // lambda_1..3 weighted
  double quadness = 0.0;
  double quad_center = 0.0;
  double quad_normal = 0.0;
  double quad_size = 0.0;
  double quad = 0.0;  // lambda_4..7 weighted
  double total = 0.0;
  std::size_t positive_objects = 0;
  std::size_t positive_quads = 0;
};

/// Loss of one set of results. Classification terms average over all
/// proposals of a kind; regression terms average over positives. Ground
/// truth quads must point inward. Throws MatchError on a malformed
/// assignment.
SetLoss set_loss(const SetPredictions& pred, std::span<const OrientedBox> gt_boxes, std::span<const Quad> gt_quads,
                 const Assignment& assignment, const HeadConfig& head, const LossWeights& w, double beta = 1.0);

/// Which auxiliary sets enter the mean; the last decoder layer always does.
struct SetSelection {
  bool proposal = true;
  bool intermediate = true;
};

/// The four proposal / intermediate combinations of the auxiliary-loss ablation.
std::vector<SetSelection> loss_configurations();

/// Indices into the L + 1 sets (0 = proposal module, L = last block) used by `sel`.
std::vector<std::size_t> selected_sets(std::size_t num_sets, const SetSelection& sel);

/// L_pc + L_vote + mean of the selected set totals.
double total_loss(std::span<const double> set_totals, double pc, double vote, const SetSelection& sel = {});

struct LossReport {
  double total = 0.0;
  double pc = 0.0;
  double vote = 0.0;
  std::vector<SetLoss> sets;
  SetSelection selection;
};

LossReport make_report(std::vector<SetLoss> sets, double pc, double vote, const SetSelection& sel = {});
nlohmann::json to_json(const LossReport& r);

}  // namespace quadlayout
