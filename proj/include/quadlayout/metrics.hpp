#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "quadlayout/geom.hpp"

namespace quadlayout {

struct CornerMatching {
  /// (pred index, gt index), sorted by pred index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::optional<std::size_t>> pred_to_gt;
  std::size_t size() const { return pairs.size(); }
};

/// One-to-one matching of corners within `radius` (inclusive). Pairs are
/// first taken greedily in ascending distance order; augmenting paths then
/// extend the greedy result to a maximum-cardinality matching.
CornerMatching match_corners(std::span<const Vec3> pred, std::span<const Vec3> gt, double radius = 0.40);

/// True iff both polygons have the same kind and corner count and every
/// corner of `pred` matches a distinct corner of `gt` within `radius`.
bool polygons_match(const LayoutPolygon& pred, const LayoutPolygon& gt, double radius = 0.40);

struct PrCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
  PrCounts& operator+=(const PrCounts& o);
};

/// Raw counts behind a layout evaluation; add them to aggregate scenes.
struct LayoutCounts {
  std::map<PolygonKind, PrCounts> polygons;
  PrCounts corners;
  PrCounts edges;
  LayoutCounts& operator+=(const LayoutCounts& o);
};

struct LayoutEvalResult {
  double f1_all = 0.0;
  double f1_wall_only = 0.0;
  double precision_all = 0.0;
  double recall_all = 0.0;
  LayoutCounts counts;
  std::size_t matched_corners() const { return counts.corners.tp; }
};

LayoutCounts layout_counts(std::span<const LayoutPolygon> pred, std::span<const LayoutPolygon> gt,
                           double radius = 0.40);
LayoutEvalResult summarize(const LayoutCounts& counts);

/// Polygon-level F1: a prediction is a true positive when it is paired with a
/// GT polygon it matches (maximum one-to-one pairing). Corner- and
/// edge-level counts are reported alongside.
LayoutEvalResult layout_f1(std::span<const LayoutPolygon> pred, std::span<const LayoutPolygon> gt,
                           double radius = 0.40);

/// All-point interpolated AP from detections already ranked by descending
/// score: `is_tp[i]` says whether the i-th ranked detection is a true
/// positive. Returns 0 when num_gt == 0.
double average_precision_from_flags(const std::vector<bool>& is_tp, std::size_t num_gt);

/// Score-descending matching (stable for ties): each prediction goes to the
/// GT with the highest IoU; it is a true positive when that IoU is at least
/// `iou_min` and the GT is still free. Returns per-prediction flags in
/// ranked order together with the ranking.
struct RankedMatches {
  std::vector<std::size_t> order;
  std::vector<bool> is_tp;
};
RankedMatches match_detections(std::span<const OrientedBox> preds, std::span<const OrientedBox> gts,
                               double iou_min = 0.25);

/// AP of one class; class ids are ignored.
double average_precision(std::span<const OrientedBox> preds, std::span<const OrientedBox> gts, double iou_min = 0.25);

struct DetectionEvalResult {
  std::map<int, double> ap;
  std::map<int, std::size_t> num_gt;
  double map = 0.0;
};

/// One scene as seen by the evaluator. `layout` holds walls, ceiling and floor.
struct EvalScene {
  std::string id;
  std::vector<OrientedBox> boxes;
  std::vector<Quad> quads;
  std::vector<LayoutPolygon> layout;
};

struct EvalConfig {
  double iou_min = 0.25;
  double corner_radius = 0.40;
  /// Classes audited for collisions; all classes when unset.
  std::optional<std::set<int>> collision_classes;
  unsigned workers = 1;
};

struct SceneSetResult {
  DetectionEvalResult detection;
  LayoutEvalResult layout;
  /// Collisions of predicted boxes with predicted walls, summed over scenes.
  long collisions = 0;
};

/// Detection AP pooled over scenes per class, layout F1 from micro-averaged
/// counts, total collisions. Scenes are paired by position and must carry
/// the same ids (SceneMismatch otherwise).
SceneSetResult evaluate_scene_set(std::span<const EvalScene> pred, std::span<const EvalScene> gt,
                                  const EvalConfig& cfg = {});

nlohmann::json to_json(const LayoutEvalResult& r);
nlohmann::json to_json(const DetectionEvalResult& r, std::span<const std::string> class_names = {});

}  // namespace quadlayout
