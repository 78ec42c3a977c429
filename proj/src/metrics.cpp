#include "quadlayout/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "quadlayout/constraint.hpp"
#include "quadlayout/errors.hpp"
#include "quadlayout/parallel.hpp"

namespace quadlayout {

namespace {

// Kuhn's augmenting paths on top of an initial matching. adj[l] lists the
// right vertices of l in preference order.
class BipartiteMatcher {
 public:
  BipartiteMatcher(std::vector<std::vector<std::size_t>> adj, std::size_t n_right)
      : adj_(std::move(adj)), left_(adj_.size()), right_(n_right) {}

  void pair(std::size_t l, std::size_t r) {
    left_[l] = r;
    right_[r] = l;
  }

  void maximize() {
    for (std::size_t l = 0; l < adj_.size(); ++l) {
      if (left_[l]) continue;
      std::vector<bool> seen(right_.size(), false);
      augment(l, seen);
    }
  }

  const std::vector<std::optional<std::size_t>>& left() const { return left_; }

  std::size_t size() const {
    return static_cast<std::size_t>(std::count_if(left_.begin(), left_.end(), [](const auto& x) { return x.has_value(); }));
  }

 private:
  bool augment(std::size_t l, std::vector<bool>& seen) {
    for (std::size_t r : adj_[l]) {
      if (seen[r]) continue;
      seen[r] = true;
      if (!right_[r] || augment(*right_[r], seen)) {
        pair(l, r);
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::optional<std::size_t>> left_;
  std::vector<std::optional<std::size_t>> right_;
};

std::size_t max_matching(const std::vector<std::vector<std::size_t>>& adj, std::size_t n_right) {
  BipartiteMatcher m(adj, n_right);
  m.maximize();
  return m.size();
}

bool endpoints_match(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1, double radius) {
  return (distance(a0, b0) <= radius && distance(a1, b1) <= radius) ||
         (distance(a0, b1) <= radius && distance(a1, b0) <= radius);
}

struct Edge {
  Vec3 a;
  Vec3 b;
  PolygonKind kind;
};

std::vector<Edge> edges_of(std::span<const LayoutPolygon> polys) {
  std::vector<Edge> out;
  for (const auto& p : polys) {
    for (std::size_t i = 0; i < p.vertices.size(); ++i) {
      out.push_back({p.vertices[i], p.vertices[(i + 1) % p.vertices.size()], p.kind});
    }
  }
  return out;
}

std::vector<Vec3> corners_of(std::span<const LayoutPolygon> polys) {
  std::vector<Vec3> out;
  for (const auto& p : polys) out.insert(out.end(), p.vertices.begin(), p.vertices.end());
  return out;
}

PrCounts counts_from(std::size_t tp, std::size_t n_pred, std::size_t n_gt) {
  return {tp, n_pred - tp, n_gt - tp};
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Per-scene, per-class ranked detections.
struct ClassDetections {
  std::vector<double> scores;
  std::vector<bool> is_tp;
  std::size_t num_gt = 0;
};

std::map<int, ClassDetections> scene_detections(const EvalScene& pred, const EvalScene& gt, double iou_min) {
  std::map<int, std::vector<OrientedBox>> pred_by_class;
  std::map<int, std::vector<OrientedBox>> gt_by_class;
  for (const auto& b : pred.boxes) pred_by_class[b.class_id].push_back(b);
  for (const auto& b : gt.boxes) gt_by_class[b.class_id].push_back(b);
  std::map<int, ClassDetections> out;
  for (const auto& [c, boxes] : gt_by_class) out[c].num_gt = boxes.size();
  for (const auto& [c, boxes] : pred_by_class) {
    const auto it = gt_by_class.find(c);
    const std::span<const OrientedBox> gts =
        it == gt_by_class.end() ? std::span<const OrientedBox>{} : std::span<const OrientedBox>{it->second};
    const RankedMatches m = match_detections(boxes, gts, iou_min);
    auto& d = out[c];
    for (std::size_t k = 0; k < m.order.size(); ++k) {
      d.scores.push_back(boxes[m.order[k]].score);
      d.is_tp.push_back(m.is_tp[k]);
    }
  }
  return out;
}

}  // namespace

CornerMatching match_corners(std::span<const Vec3> pred, std::span<const Vec3> gt, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("corner radius must be positive");
  struct Candidate {
    double d;
    std::size_t p;
    std::size_t g;
  };
  std::vector<Candidate> cands;
  std::vector<std::vector<std::size_t>> adj(pred.size());
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double d = distance(pred[p], gt[g]);
      if (d <= radius) cands.push_back({d, p, g});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.d < b.d; });
  for (const auto& c : cands) adj[c.p].push_back(c.g);

  BipartiteMatcher matcher(adj, gt.size());
  std::vector<bool> pred_used(pred.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  for (const auto& c : cands) {
    if (pred_used[c.p] || gt_used[c.g]) continue;
    pred_used[c.p] = gt_used[c.g] = true;
    matcher.pair(c.p, c.g);
  }
  matcher.maximize();

  CornerMatching out;
  out.pred_to_gt = matcher.left();
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (out.pred_to_gt[p]) out.pairs.emplace_back(p, *out.pred_to_gt[p]);
  }
  return out;
}

bool polygons_match(const LayoutPolygon& pred, const LayoutPolygon& gt, double radius) {
  if (pred.kind != gt.kind || pred.vertices.size() != gt.vertices.size()) return false;
  return match_corners(pred.vertices, gt.vertices, radius).size() == gt.vertices.size();
}

double PrCounts::precision() const { return ratio(tp, tp + fp); }
double PrCounts::recall() const { return ratio(tp, tp + fn); }
double PrCounts::f1() const { return f1_of(precision(), recall()); }

PrCounts& PrCounts::operator+=(const PrCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

LayoutCounts& LayoutCounts::operator+=(const LayoutCounts& o) {
  for (const auto& [k, c] : o.polygons) polygons[k] += c;
  corners += o.corners;
  edges += o.edges;
  return *this;
}

LayoutCounts layout_counts(std::span<const LayoutPolygon> pred, std::span<const LayoutPolygon> gt, double radius) {
  LayoutCounts out;
  for (PolygonKind kind : {PolygonKind::wall, PolygonKind::ceiling, PolygonKind::floor}) {
    std::vector<std::size_t> pi;
    std::vector<std::size_t> gi;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i].kind == kind) pi.push_back(i);
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i].kind == kind) gi.push_back(i);
    }
    std::vector<std::vector<std::size_t>> adj(pi.size());
    for (std::size_t a = 0; a < pi.size(); ++a) {
      for (std::size_t b = 0; b < gi.size(); ++b) {
        if (polygons_match(pred[pi[a]], gt[gi[b]], radius)) adj[a].push_back(b);
      }
    }
    out.polygons[kind] = counts_from(max_matching(adj, gi.size()), pi.size(), gi.size());
  }

  const auto pc = corners_of(pred);
  const auto gc = corners_of(gt);
  out.corners = counts_from(match_corners(pc, gc, radius).size(), pc.size(), gc.size());

  const auto pe = edges_of(pred);
  const auto ge = edges_of(gt);
  std::vector<std::vector<std::size_t>> adj(pe.size());
  for (std::size_t a = 0; a < pe.size(); ++a) {
    for (std::size_t b = 0; b < ge.size(); ++b) {
      if (pe[a].kind == ge[b].kind && endpoints_match(pe[a].a, pe[a].b, ge[b].a, ge[b].b, radius)) {
        adj[a].push_back(b);
      }
    }
  }
  out.edges = counts_from(max_matching(adj, ge.size()), pe.size(), ge.size());
  return out;
}

LayoutEvalResult summarize(const LayoutCounts& counts) {
  LayoutEvalResult r;
  r.counts = counts;
  PrCounts all;
  for (const auto& [k, c] : counts.polygons) all += c;
  r.precision_all = all.precision();
  r.recall_all = all.recall();
  r.f1_all = all.f1();
  const auto wall = counts.polygons.find(PolygonKind::wall);
  r.f1_wall_only = wall == counts.polygons.end() ? 0.0 : wall->second.f1();
  return r;
}

LayoutEvalResult layout_f1(std::span<const LayoutPolygon> pred, std::span<const LayoutPolygon> gt, double radius) {
  return summarize(layout_counts(pred, gt, radius));
}

double average_precision_from_flags(const std::vector<bool>& is_tp, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> precision(n);
  std::vector<double> recall(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_tp[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  // Envelope: running maximum of precision from the right.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

RankedMatches match_detections(std::span<const OrientedBox> preds, std::span<const OrientedBox> gts, double iou_min) {
  RankedMatches out;
  out.order.resize(preds.size());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<bool> used(gts.size(), false);
  for (std::size_t i : out.order) {
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = iou_3d(preds[i], gts[g]);
      if (iou > best) {
        best = iou;
        best_g = g;
      }
    }
    const bool tp = best >= iou_min && !used[best_g];
    if (tp) used[best_g] = true;
    out.is_tp.push_back(tp);
  }
  return out;
}

double average_precision(std::span<const OrientedBox> preds, std::span<const OrientedBox> gts, double iou_min) {
  return average_precision_from_flags(match_detections(preds, gts, iou_min).is_tp, gts.size());
}

SceneSetResult evaluate_scene_set(std::span<const EvalScene> pred, std::span<const EvalScene> gt,
                                  const EvalConfig& cfg) {
  if (pred.size() != gt.size()) {
    throw SceneMismatch("prediction set has " + std::to_string(pred.size()) + " scenes, ground truth has " +
                        std::to_string(gt.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].id != gt[i].id) {
      throw SceneMismatch("scene " + std::to_string(i) + ": id '" + pred[i].id + "' vs '" + gt[i].id + "'");
    }
  }

  struct PerScene {
    std::map<int, ClassDetections> detections;
    LayoutCounts layout;
    long collisions = 0;
  };
  const std::set<int>* restrict_to = cfg.collision_classes ? &*cfg.collision_classes : nullptr;
  const auto per_scene = parallel_map(pred.size(), cfg.workers, [&](std::size_t i) {
    PerScene s;
    s.detections = scene_detections(pred[i], gt[i], cfg.iou_min);
    s.layout = layout_counts(pred[i].layout, gt[i].layout, cfg.corner_radius);
    s.collisions = count_collisions(pred[i].boxes, pred[i].quads, restrict_to);
    return s;
  });

  SceneSetResult out;
  LayoutCounts layout;
  std::map<int, ClassDetections> pooled;
  for (const auto& s : per_scene) {
    layout += s.layout;
    out.collisions += s.collisions;
    for (const auto& [c, d] : s.detections) {
      auto& p = pooled[c];
      p.num_gt += d.num_gt;
      p.scores.insert(p.scores.end(), d.scores.begin(), d.scores.end());
      p.is_tp.insert(p.is_tp.end(), d.is_tp.begin(), d.is_tp.end());
    }
  }
  out.layout = summarize(layout);

  double sum = 0.0;
  for (const auto& [c, d] : pooled) {
    if (d.num_gt == 0) continue;
    std::vector<std::size_t> order(d.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d.scores[a] > d.scores[b]; });
    std::vector<bool> flags;
    flags.reserve(order.size());
    for (std::size_t k : order) flags.push_back(d.is_tp[k]);
    const double ap = average_precision_from_flags(flags, d.num_gt);
    out.detection.ap[c] = ap;
    out.detection.num_gt[c] = d.num_gt;
    sum += ap;
  }
  out.detection.map = out.detection.ap.empty() ? 0.0 : sum / static_cast<double>(out.detection.ap.size());
  return out;
}

namespace {

nlohmann::json counts_json(const PrCounts& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"precision", c.precision()},
          {"recall", c.recall()},
          {"f1", c.f1()}};
}

}  // namespace

nlohmann::json to_json(const LayoutEvalResult& r) {
  nlohmann::json per_kind = nlohmann::json::object();
  for (const auto& [k, c] : r.counts.polygons) per_kind[to_string(k)] = counts_json(c);
  return {{"f1_all", r.f1_all},
          {"f1_wall_only", r.f1_wall_only},
          {"precision_all", r.precision_all},
          {"recall_all", r.recall_all},
          {"per_kind", per_kind},
          {"matched_corners", r.matched_corners()},
          {"corners", counts_json(r.counts.corners)},
          {"edges", counts_json(r.counts.edges)}};
}

nlohmann::json to_json(const DetectionEvalResult& r, std::span<const std::string> class_names) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, ap] : r.ap) {
    const std::string name = c >= 0 && static_cast<std::size_t>(c) < class_names.size()
                                 ? class_names[static_cast<std::size_t>(c)]
                                 : std::to_string(c);
    per_class[name] = {{"class", c}, {"ap", ap}, {"num_gt", r.num_gt.at(c)}};
  }
  return {{"map", r.map}, {"per_class", per_class}};
}

}  // namespace quadlayout
