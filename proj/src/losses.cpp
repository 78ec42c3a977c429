#include "quadlayout/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "quadlayout/errors.hpp"

namespace quadlayout {

namespace {

double logsumexp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double smooth_l1_vec(const Vec3& d, double beta) {
  return smooth_l1(d.x, beta) + smooth_l1(d.y, beta) + smooth_l1(d.z, beta);
}

// Lambda names in declaration order, used for JSON keys.
constexpr std::array<std::pair<const char*, double LossWeights::*>, 12> kWeightFields{{
    {"lambda1_objectness", &LossWeights::objectness},
    {"lambda2_box", &LossWeights::box},
    {"lambda3_cls", &LossWeights::cls},
    {"lambda4_quadness", &LossWeights::quadness},
    {"lambda5_quad_center", &LossWeights::quad_center},
    {"lambda6_quad_normal", &LossWeights::quad_normal},
    {"lambda7_quad_size", &LossWeights::quad_size},
    {"lambda8_center", &LossWeights::center},
    {"lambda9_heading_cls", &LossWeights::heading_cls},
    {"lambda10_heading_reg", &LossWeights::heading_reg},
    {"lambda11_size_cls", &LossWeights::size_cls},
    {"lambda12_size_reg", &LossWeights::size_reg},
}};

}  // namespace

void validate(const LossWeights& w) {
  for (const auto& [name, field] : kWeightFields) {
    if (!(w.*field >= 0.0) || !std::isfinite(w.*field)) throw ConfigError(std::string(name) + " must be non-negative");
  }
}

LossWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("weights", "expected an object");
  LossWeights w;
  for (const auto& [name, field] : kWeightFields) {
    if (!j.contains(name)) continue;
    if (!j[name].is_number()) throw SchemaError(name, "expected a number");
    w.*field = j[name].get<double>();
    if (w.*field < 0.0) throw SchemaError(name, "weights must be non-negative");
  }
  return w;
}

nlohmann::json to_json(const LossWeights& w) {
  nlohmann::json j;
  for (const auto& [name, field] : kWeightFields) j[name] = w.*field;
  return j;
}

double smooth_l1(double x, double beta) {
  const double a = std::abs(x);
  return a < beta ? 0.5 * x * x / beta : a - 0.5 * beta;
}

double smooth_l1_grad(double x, double beta) {
  if (std::abs(x) < beta) return x / beta;
  return x > 0.0 ? 1.0 : -1.0;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw InvalidArgument("cross_entropy: label out of range");
  return logsumexp(logits) - logits[label];
}

double vote_loss(const Matrix& offsets, const Matrix& gt_offsets, const std::vector<bool>& on_object) {
  if (offsets.cols() != 3 || gt_offsets.cols() != 3 || offsets.rows() != gt_offsets.rows() ||
      static_cast<std::size_t>(offsets.rows()) != on_object.size()) {
    throw ShapeMismatch("vote_loss: expected two M x 3 matrices and M flags");
  }
  if (offsets.rows() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < offsets.rows(); ++i) {
    if (on_object[static_cast<std::size_t>(i)]) sum += (offsets.row(i) - gt_offsets.row(i)).lpNorm<1>();
  }
  return sum / static_cast<double>(offsets.rows());
}

double distance_to_quad(const Quad& q, const Vec3& x) {
  const Projection p = project_onto_quad(q, x);
  const double off_plane = signed_side(plane_of(q), x);
  const double du = std::max(0.0, std::abs(p.u) - 0.5 * q.width);
  const double dv = std::max(0.0, std::abs(p.v) - 0.5 * q.height);
  return std::sqrt(off_plane * off_plane + du * du + dv * dv);
}

Assignment assign_targets(const SetPredictions& pred, std::span<const OrientedBox> gt_boxes,
                          std::span<const Quad> gt_quads, double radius) {
  Assignment a;
  for (const Vec3& p : pred.object_bases) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      const double d = distance(p, gt_boxes[g].center);
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    a.objects.push_back(best_d <= radius ? best : std::nullopt);
  }
  for (const Vec3& p : pred.quad_bases) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gt_quads.size(); ++g) {
      const double d = distance_to_quad(gt_quads[g], p);
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    a.quads.push_back(best_d <= radius ? best : std::nullopt);
  }
  return a;
}

SetLoss set_loss(const SetPredictions& pred, std::span<const OrientedBox> gt_boxes, std::span<const Quad> gt_quads,
                 const Assignment& assignment, const HeadConfig& head, const LossWeights& w, double beta) {
  validate(head);
  validate(w);
  if (pred.object_bases.size() != pred.object_vectors.size() || pred.quad_bases.size() != pred.quad_vectors.size()) {
    throw ShapeMismatch("set_loss: bases and vectors differ in count");
  }
  if (assignment.objects.size() != pred.object_vectors.size() || assignment.quads.size() != pred.quad_vectors.size()) {
    throw MatchError("set_loss: assignment is missing proposals");
  }
  for (const auto& g : assignment.objects) {
    if (g && *g >= gt_boxes.size()) throw MatchError("set_loss: object assignment out of range");
  }
  for (const auto& g : assignment.quads) {
    if (g && *g >= gt_quads.size()) throw MatchError("set_loss: quad assignment out of range");
  }

  SetLoss L;
  const auto H = static_cast<std::size_t>(head.heading_bins);
  const auto S = static_cast<std::size_t>(head.size_bins);
  const auto C = static_cast<std::size_t>(head.num_classes);

  const std::size_t n_obj = pred.object_vectors.size();
  for (std::size_t i = 0; i < n_obj; ++i) {
    const auto& v = pred.object_vectors[i];
    if (v.size() != head.object_vector_size()) throw LengthMismatch("set_loss: object vector length");
    const std::span<const double> vs(v);
    const auto& g = assignment.objects[i];
    L.objectness += cross_entropy(vs.subspan(head.objectness_offset(), 2), g ? 1 : 0);
    if (!g) continue;
    ++L.positive_objects;
    const OrientedBox& gt = gt_boxes[*g];
    const ObjectTarget t = encode_object_target(gt, pred.object_bases[i], head);
    const auto hb = static_cast<std::size_t>(t.heading_bin);
    const auto sb = static_cast<std::size_t>(t.size_bin);
    const Vec3 center = pred.object_bases[i] + Vec3{v[head.center_offset()], v[head.center_offset() + 1],
                                                    v[head.center_offset() + 2]};
    L.center += smooth_l1_vec(center - gt.center, beta);
    L.heading_cls += cross_entropy(vs.subspan(head.heading_score_offset(), H), hb);
    L.heading_reg += smooth_l1(v[head.heading_residual_offset() + hb] - t.heading_residual, beta);
    L.size_cls += cross_entropy(vs.subspan(head.size_score_offset(), S), sb);
    const std::size_t ro = head.size_residual_offset() + 3 * sb;
    L.size_reg += smooth_l1_vec(Vec3{v[ro], v[ro + 1], v[ro + 2]} - t.size_residual, beta);
    L.cls += cross_entropy(vs.subspan(head.class_offset(), C), static_cast<std::size_t>(gt.class_id));
  }
  if (n_obj > 0) L.objectness /= static_cast<double>(n_obj);
  if (L.positive_objects > 0) {
    const double inv = 1.0 / static_cast<double>(L.positive_objects);
    L.center *= inv;
    L.heading_cls *= inv;
    L.heading_reg *= inv;
    L.size_cls *= inv;
    L.size_reg *= inv;
    L.cls *= inv;
  }

  const std::size_t n_quad = pred.quad_vectors.size();
  for (std::size_t i = 0; i < n_quad; ++i) {
    const auto& v = pred.quad_vectors[i];
    const auto& g = assignment.quads[i];
    L.quadness += cross_entropy(std::span<const double>(v).subspan(0, 2), g ? 1 : 0);
    if (!g) continue;
    ++L.positive_quads;
    const Quad& gt = gt_quads[*g];
    const Vec3 center = pred.quad_bases[i] + Vec3{v[2], v[3], v[4]};
    L.quad_center += smooth_l1_vec(center - gt.center, beta);
    const Vec3 raw{v[7], v[8], v[9]};
    const double n = norm(raw);
    if (!(n >= 1e-6)) throw DegenerateNormal("set_loss: predicted quad normal is (near) zero");
    L.quad_normal += smooth_l1_vec(raw / n - gt.normal, beta);
    L.quad_size += smooth_l1(v[5] - std::log(gt.width), beta) + smooth_l1(v[6] - std::log(gt.height), beta);
  }
  if (n_quad > 0) L.quadness /= static_cast<double>(n_quad);
  if (L.positive_quads > 0) {
    const double inv = 1.0 / static_cast<double>(L.positive_quads);
    L.quad_center *= inv;
    L.quad_normal *= inv;
    L.quad_size *= inv;
  }

  L.box = w.center * L.center + w.heading_cls * L.heading_cls + w.heading_reg * L.heading_reg +
          w.size_cls * L.size_cls + w.size_reg * L.size_reg;
  L.object = w.objectness * L.objectness + w.box * L.box + w.cls * L.cls;
  L.quad = w.quadness * L.quadness + w.quad_center * L.quad_center + w.quad_normal * L.quad_normal +
           w.quad_size * L.quad_size;
  L.total = L.object + L.quad;
  return L;
}

std::vector<SetSelection> loss_configurations() {
  return {{false, false}, {true, false}, {false, true}, {true, true}};
}

std::vector<std::size_t> selected_sets(std::size_t num_sets, const SetSelection& sel) {
  if (num_sets < 2) throw InvalidArgument("need the proposal set and at least one decoder set");
  std::vector<std::size_t> idx;
  if (sel.proposal) idx.push_back(0);
  if (sel.intermediate) {
    for (std::size_t i = 1; i + 1 < num_sets; ++i) idx.push_back(i);
  }
  idx.push_back(num_sets - 1);
  return idx;
}

double total_loss(std::span<const double> set_totals, double pc, double vote, const SetSelection& sel) {
  const auto idx = selected_sets(set_totals.size(), sel);
  double sum = 0.0;
  for (std::size_t i : idx) sum += set_totals[i];
  return pc + vote + sum / static_cast<double>(idx.size());
}

LossReport make_report(std::vector<SetLoss> sets, double pc, double vote, const SetSelection& sel) {
  LossReport r;
  std::vector<double> totals;
  for (const auto& s : sets) totals.push_back(s.total);
  r.total = total_loss(totals, pc, vote, sel);
  r.pc = pc;
  r.vote = vote;
  r.sets = std::move(sets);
  r.selection = sel;
  return r;
}

nlohmann::json to_json(const LossReport& r) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& s : r.sets) {
    sets.push_back({{"objectness", s.objectness},
                    {"center", s.center},
                    {"heading_cls", s.heading_cls},
                    {"heading_reg", s.heading_reg},
                    {"size_cls", s.size_cls},
                    {"size_reg", s.size_reg},
                    {"cls", s.cls},
                    {"box", s.box},
                    {"object", s.object},
                    {"quadness", s.quadness},
                    {"quad_center", s.quad_center},
                    {"quad_normal", s.quad_normal},
                    {"quad_size", s.quad_size},
                    {"quad", s.quad},
                    {"total", s.total},
                    {"positive_objects", s.positive_objects},
                    {"positive_quads", s.positive_quads}});
  }
  return {{"total", r.total},
          {"pc", r.pc},
          {"vote", r.vote},
          {"sets", std::move(sets)},
          {"selection", {{"proposal", r.selection.proposal}, {"intermediate", r.selection.intermediate}}}};
}

}  // namespace quadlayout
