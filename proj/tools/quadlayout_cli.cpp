// Command-line front end. Every command prints one JSON document to stdout
// (or --out); exit codes: 0 ok, 1 invalid input or usage, 2 I/O failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "quadlayout/classes.hpp"
#include "quadlayout/codec.hpp"
#include "quadlayout/constraint.hpp"
#include "quadlayout/decoder.hpp"
#include "quadlayout/errors.hpp"
#include "quadlayout/gradcheck.hpp"
#include "quadlayout/io.hpp"
#include "quadlayout/losses.hpp"
#include "quadlayout/metrics.hpp"
#include "quadlayout/parallel.hpp"
#include "quadlayout/postprocess.hpp"
#include "quadlayout/proposals.hpp"
#include "quadlayout/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace quadlayout;

namespace {

struct Global {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  unsigned workers = 1;
};

void emit(const Global& g, const json& j) {
  const std::string text = dump_stable(j);
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

void note(const Global& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << "\n";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Document> read_documents(const std::string& path) {
  std::vector<Document> docs;
  for (const auto& p : document_paths(path)) docs.push_back(read_document(p));
  return docs;
}

// gen ---------------------------------------------------------------------

struct GenOptions {
  std::string shape = "rect";
  std::size_t rooms = 1;
  std::size_t points = 8000;
  double noise = 0.01;
  int objects_min = 4;
  int objects_max = 10;
  std::optional<double> width;
  std::optional<double> length;
  std::optional<double> height;
};

int run_gen(const Global& g, const GenOptions& o) {
  if (g.out.empty()) throw ConfigError("gen needs --out <directory>");
  GenConfig base;
  base.shape = room_shape_from_string(o.shape);
  base.points = o.points;
  base.noise = o.noise;
  base.objects_min = o.objects_min;
  base.objects_max = o.objects_max;
  if (o.width) base.width_min = base.width_max = *o.width;
  if (o.length) base.length_min = base.length_max = *o.length;
  if (o.height) base.height_min = base.height_max = *o.height;
  validate(base);

  const fs::path dir(g.out);
  const auto entries = parallel_map(o.rooms, g.workers, [&](std::size_t i) {
    GenConfig cfg = base;
    cfg.seed = derive_seed(g.seed, i);
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04zu", to_string(cfg.shape), i);
    cfg.id = id;
    const Scene s = gen_scene(cfg);
    write_ply(dir / (s.id + ".ply"), s.cloud);
    write_document(dir / (s.id + ".json"), to_document(s, s.id + ".ply"));
    return json{{"id", s.id},
                {"scene", s.id + ".json"},
                {"cloud", s.id + ".ply"},
                {"objects", s.gt_boxes.size()},
                {"quads", s.gt_quads.size()},
                {"points", s.cloud.size()}};
  });
  note(g, "wrote " + std::to_string(o.rooms) + " scenes to " + dir.string());
  std::cout << dump_stable({{"scenes", entries}});
  return 0;
}

// propose / decode ------------------------------------------------------------

struct ProposeOptions {
  std::string scene;
  std::size_t seeds = 1024;
  std::size_t k1 = 256;
  std::size_t k2 = 256;
  double radius = 0.3;
  std::string votes = "gt";
  std::size_t feature_dim = 256;
  bool features = false;
};

struct Proposals {
  SeedSet seeds;
  VoteClusters objects;
  ProposalSet quads;
  std::vector<std::size_t> quad_seed_index;
};

Proposals make_proposals(const Global& g, const ProposeOptions& o, const Scene& scene) {
  if (scene.cloud.size() == 0) throw ConfigError("scene '" + scene.id + "' has no point cloud");
  if (o.votes != "gt" && o.votes != "zero") throw ConfigError("--votes must be gt or zero");
  const SyntheticFeatureProvider provider(o.feature_dim, g.seed);
  Proposals p;
  p.seeds = provider.seeds(scene.cloud, o.seeds);
  const auto m = static_cast<Eigen::Index>(p.seeds.positions.size());
  Matrix offsets = Matrix::Zero(m, 3 + static_cast<Eigen::Index>(o.feature_dim));
  if (o.votes == "gt") {
    offsets.leftCols(3) = gt_vote_targets(p.seeds.positions, scene.gt_boxes).offsets;
  }
  p.objects = cluster_votes_detailed(apply_votes(p.seeds, offsets), o.k1, o.radius);
  const std::size_t first = random_start(p.seeds.positions.size(), derive_seed(g.seed, 1));
  p.quad_seed_index = fps(p.seeds.positions, o.k2, first);
  p.quads = quad_proposals(p.seeds, o.k2, first);
  return p;
}

int run_propose(const Global& g, const ProposeOptions& o) {
  const Scene scene = read_scene(o.scene);
  const Proposals p = make_proposals(g, o, scene);
  json objects = json::array();
  for (std::size_t i = 0; i < p.objects.proposals.size(); ++i) {
    json item = {{"position", vec_json(p.objects.proposals.positions[i])}, {"members", p.objects.members[i].size()}};
    if (o.features) item["feature"] = matrix_json(p.objects.proposals.features.row(static_cast<Eigen::Index>(i)))[0];
    objects.push_back(item);
  }
  json quads = json::array();
  for (std::size_t i = 0; i < p.quads.size(); ++i) {
    json item = {{"position", vec_json(p.quads.positions[i])}, {"seed", p.quad_seed_index[i]}};
    if (o.features) item["feature"] = matrix_json(p.quads.features.row(static_cast<Eigen::Index>(i)))[0];
    quads.push_back(item);
  }
  emit(g, {{"id", scene.id},
           {"seeds", p.seeds.positions.size()},
           {"object_proposals", objects},
           {"quad_proposals", quads}});
  return 0;
}

struct DecodeOptions {
  ProposeOptions propose;
  std::string params;
};

int run_decode(const Global& g, DecodeOptions o) {
  const DecoderParams params = params_from_json(parse_json(read_text_file(o.params)));
  const DecoderConfig& cfg = params.config;
  o.propose.feature_dim = static_cast<std::size_t>(cfg.d);
  if (cfg.point_dim != cfg.d + 3) {
    throw ConfigError("decode builds point features as [xyz | seed features]; needs point_dim = d + 3");
  }
  const Scene scene = read_scene(o.propose.scene);
  const Proposals p = make_proposals(g, o.propose, scene);
  Matrix f_p(static_cast<Eigen::Index>(p.seeds.positions.size()), cfg.point_dim);
  for (std::size_t i = 0; i < p.seeds.positions.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Vec3& x = p.seeds.positions[i];
    f_p(r, 0) = x.x;
    f_p(r, 1) = x.y;
    f_p(r, 2) = x.z;
    f_p.row(r).tail(cfg.d) = p.seeds.features.row(r);
  }
  ProposalSet quads = p.quads;
  quads.kind = ProposalKind::quad;
  const auto blocks = decoder_forward(p.objects.proposals, quads, f_p, params);
  json out = json::array();
  for (const auto& b : blocks) {
    json norms = json::array();
    for (Eigen::Index r = 0; r < b.features.rows(); ++r) norms.push_back(b.features.row(r).norm());
    json block = {{"geometry", matrix_json(b.geometry)}, {"feature_norms", norms}};
    if (o.propose.features) block["features"] = matrix_json(b.features);
    out.push_back(block);
  }
  emit(g, {{"id", scene.id},
           {"objects", p.objects.proposals.size()},
           {"quads", quads.size()},
           {"blocks", out}});
  return 0;
}

struct InitParamsOptions {
  int layers = 6;
  int d = 256;
  int heads = 8;
  double scale = 1.0;
  bool zero = false;
  bool split = false;
};

int run_init_params(const Global& g, const InitParamsOptions& o) {
  DecoderConfig cfg;
  cfg.layers = o.layers;
  cfg.d = o.d;
  cfg.heads = o.heads;
  cfg.point_dim = o.d + 3;
  cfg.joint_self_attention = !o.split;
  validate(cfg);
  emit(g, params_to_json(o.zero ? zero_params(cfg) : random_params(cfg, g.seed, o.scale)));
  return 0;
}

// nms / assemble -------------------------------------------------------------

struct NmsOptions {
  std::string pred;
  double iou = 0.25;
  double quad_iou = 0.25;
  double thickness = 0.10;
};

int run_nms(const Global& g, const NmsOptions& o) {
  Document doc = read_document(o.pred);
  std::vector<OrientedBox> objects;
  for (std::size_t i : nms_indices(doc.objects, o.iou)) objects.push_back(doc.objects[i]);
  const auto preds = quad_predictions(doc);
  std::vector<Quad> quads;
  std::vector<double> scores;
  for (std::size_t i : quad_nms_indices(preds, o.quad_iou, o.thickness)) {
    quads.push_back(doc.quads[i]);
    if (!doc.quad_scores.empty()) scores.push_back(doc.quad_scores[i]);
  }
  note(g, "kept " + std::to_string(objects.size()) + "/" + std::to_string(doc.objects.size()) + " objects, " +
              std::to_string(quads.size()) + "/" + std::to_string(doc.quads.size()) + " quads");
  doc.objects = std::move(objects);
  doc.quads = std::move(quads);
  doc.quad_scores = std::move(scores);
  emit(g, to_json(doc));
  return 0;
}

struct AssembleOptions {
  std::string pred;
  double quadness_min = 0.5;
  double merge_radius = 0.40;
};

int run_assemble(const Global& g, const AssembleOptions& o) {
  Document doc = read_document(o.pred);
  const CeilingFloor cf = assemble_ceiling_floor(quad_predictions(doc), o.quadness_min, o.merge_radius);
  doc.layout = {cf.ceiling, cf.floor};
  emit(g, to_json(doc));
  return 0;
}

// loss ------------------------------------------------------------------------

struct LossOptions {
  std::string scene;
  std::string pred;
  std::string weights;
  std::size_t sets = 7;
  bool no_proposal = false;
  bool no_intermediate = false;
  double radius = 0.3;
};

double clamped_logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::clamp(std::log(p / (1.0 - p)), -kTargetLogit, kTargetLogit);
}

// Detections encoded as one set of raw head outputs, each regressed exactly
// from its own position.
SetPredictions set_from_detections(const Document& doc, const HeadConfig& head) {
  SetPredictions s;
  for (const auto& b : doc.objects) {
    auto t = encode_object_target(b, b.center, head);
    t.vector[head.objectness_offset()] = 0.0;
    t.vector[head.objectness_offset() + 1] = clamped_logit(b.score);
    s.object_bases.push_back(b.center);
    s.object_vectors.push_back(std::move(t.vector));
  }
  const auto preds = quad_predictions(doc);
  for (const auto& q : preds) {
    auto v = encode_quad_target(q.quad, q.quad.center);
    v[0] = 0.0;
    v[1] = clamped_logit(q.score());
    s.quad_bases.push_back(q.quad.center);
    s.quad_vectors.push_back(v);
  }
  return s;
}

int run_loss(const Global& g, const LossOptions& o) {
  const Document gt = read_document(o.scene);
  const Document pred = read_document(o.pred);
  const LossWeights w = o.weights.empty() ? LossWeights{} : weights_from_json(parse_json(read_text_file(o.weights)));
  validate(w);
  const HeadConfig head = default_head_config();
  std::vector<SetPredictions> sets = pred.sets;
  if (sets.empty()) {
    if (o.sets < 2) throw ConfigError("--sets must be at least 2");
    sets.assign(o.sets, set_from_detections(pred, head));
  }
  std::vector<SetLoss> losses;
  for (const auto& s : sets) {
    const Assignment a = assign_targets(s, gt.objects, gt.quads, o.radius);
    losses.push_back(set_loss(s, gt.objects, gt.quads, a, head, w));
  }

  const SetPredictions& last = sets.back();
  std::vector<OrientedBox> boxes;
  for (std::size_t i = 0; i < last.object_vectors.size(); ++i) {
    boxes.push_back(decode_object(last.object_vectors[i], last.object_bases[i], head).box);
  }
  std::vector<Quad> quads;
  for (std::size_t i = 0; i < last.quad_vectors.size(); ++i) {
    quads.push_back(decode_quad(last.quad_vectors[i], last.quad_bases[i]).quad);
  }
  const double pc = pc_loss_fast(boxes, quads, default_constraint_config());
  double vote = 0.0;
  if (pred.votes) {
    const VoteTargets t = gt_vote_targets(pred.votes->seeds, gt.objects);
    vote = vote_loss(pred.votes->offsets, t.offsets, t.on_object);
  }
  const SetSelection sel{!o.no_proposal, !o.no_intermediate};
  json report = to_json(make_report(std::move(losses), pc, vote, sel));
  report["id"] = pred.id;
  report["weights"] = to_json(w);
  emit(g, report);
  return 0;
}

// gradcheck / collisions / bench -----------------------------------------------

struct GradcheckOptions {
  std::size_t trials = 200;
  double h = 1e-5;
  double kink = 1e-3;
  double tolerance = 1e-4;
};

int run_gradcheck(const Global& g, const GradcheckOptions& o) {
  GradcheckConfig cfg;
  cfg.trials = o.trials;
  cfg.h = o.h;
  cfg.kink = o.kink;
  cfg.seed = g.seed;
  const GradcheckReport r = gradcheck_pc_loss(cfg);
  const bool pass = r.max_rel_err <= o.tolerance;
  emit(g, {{"trials", r.trials},
           {"redrawn", r.redrawn},
           {"components", r.components},
           {"h", o.h},
           {"kink", o.kink},
           {"max_abs_err", r.max_abs_err},
           {"max_rel_err", r.max_rel_err},
           {"tolerance", o.tolerance},
           {"pass", pass}});
  return pass ? 0 : 1;
}

struct CollisionOptions {
  std::string pred;
  bool constrained_only = false;
  bool descend = false;
  int steps = 500;
  double lr = 0.01;
};

int run_collisions(const Global& g, const CollisionOptions& o) {
  const auto paths = document_paths(o.pred);
  const ConstraintConfig cfg = default_constraint_config();
  const auto results = parallel_map(paths.size(), g.workers, [&](std::size_t i) {
    const Document doc = read_document(paths[i]);
    const int count = count_collisions(doc.objects, doc.quads, o.constrained_only ? &cfg.c_pc : nullptr);
    json item = {{"id", doc.id}, {"collisions", count}};
    if (o.descend) {
      const DescentResult d = descend_collisions(doc.objects, doc.quads, cfg, o.steps, o.lr);
      item["descent"] = {{"steps", d.steps},
                         {"collisions_after", d.collisions_after},
                         {"loss_before", d.loss_before},
                         {"loss_after", d.loss_after}};
    }
    return std::pair{count, item};
  });
  long total = 0;
  json scenes = json::array();
  for (const auto& [count, item] : results) {
    total += count;
    scenes.push_back(item);
  }
  emit(g, {{"total", total}, {"scenes", scenes}, {"constrained_only", o.constrained_only}});
  return 0;
}

struct BenchOptions {
  std::size_t boxes = 256;
  std::size_t quads = 256;
  std::size_t batch = 8;
  std::size_t repeats = 5;
};

int run_bench(const Global& g, const BenchOptions& o) {
  if (o.repeats == 0) throw ConfigError("--repeats must be positive");
  const auto batch = bench_batch(o.batch, o.boxes, o.quads, g.seed);
  const ConstraintConfig cfg = default_constraint_config();
  using Clock = std::chrono::steady_clock;
  double naive_s = std::numeric_limits<double>::infinity();
  double fast_s = std::numeric_limits<double>::infinity();
  double naive = 0.0;
  double fast = 0.0;
  for (std::size_t r = 0; r < o.repeats; ++r) {
    auto t0 = Clock::now();
    naive = pc_loss_naive_batch(batch, cfg);
    auto t1 = Clock::now();
    fast = pc_loss_fast_batch(batch, cfg);
    auto t2 = Clock::now();
    naive_s = std::min(naive_s, std::chrono::duration<double>(t1 - t0).count());
    fast_s = std::min(fast_s, std::chrono::duration<double>(t2 - t1).count());
  }
  emit(g, {{"batch", o.batch},
           {"boxes", o.boxes},
           {"quads", o.quads},
           {"repeats", o.repeats},
           {"naive_s", naive_s},
           {"fast_s", fast_s},
           {"speedup", naive_s / fast_s},
           {"loss_naive", naive},
           {"loss_fast", fast},
           {"abs_diff", std::abs(naive - fast)}});
  return 0;
}

// evaluation ---------------------------------------------------------------------

struct EvalOptions {
  std::string pred;
  std::string gt;
  double iou = 0.25;
  double radius = 0.40;
};

SceneSetResult evaluate(const Global& g, const EvalOptions& o) {
  const auto pred = read_documents(o.pred);
  const auto gt = read_documents(o.gt);
  std::vector<EvalScene> p;
  std::vector<EvalScene> t;
  for (const auto& d : pred) p.push_back(to_eval_scene(d));
  for (const auto& d : gt) t.push_back(to_eval_scene(d));
  EvalConfig cfg;
  cfg.iou_min = o.iou;
  cfg.corner_radius = o.radius;
  cfg.workers = g.workers;
  return evaluate_scene_set(p, t, cfg);
}

int run_eval_objects(const Global& g, const EvalOptions& o) {
  const SceneSetResult r = evaluate(g, o);
  json j = to_json(r.detection, default_class_names());
  j["iou"] = o.iou;
  j["collisions"] = r.collisions;
  emit(g, j);
  return 0;
}

int run_eval_layout(const Global& g, const EvalOptions& o) {
  const SceneSetResult r = evaluate(g, o);
  json j = to_json(r.layout);
  j["radius"] = o.radius;
  emit(g, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quad layout geometry and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file (directory for gen)");
  app.add_flag("--quiet", g.quiet, "No progress messages on stderr");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::Range(1u, 256u));

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic scenes");
  gen_cmd->add_option("--shape", gen.shape, "rect or lshape");
  gen_cmd->add_option("--rooms", gen.rooms, "Number of scenes");
  gen_cmd->add_option("--points", gen.points, "Points per scene");
  gen_cmd->add_option("--noise", gen.noise, "Surface noise sigma (m)");
  gen_cmd->add_option("--objects-min", gen.objects_min);
  gen_cmd->add_option("--objects-max", gen.objects_max);
  gen_cmd->add_option("--width", gen.width, "Fixed room width (m)");
  gen_cmd->add_option("--length", gen.length, "Fixed room length (m)");
  gen_cmd->add_option("--height", gen.height, "Fixed room height (m)");

  const auto add_propose_options = [](CLI::App* cmd, ProposeOptions& p) {
    cmd->add_option("--scene", p.scene, "Scene JSON")->required();
    cmd->add_option("--seeds", p.seeds, "Seeds sampled from the cloud");
    cmd->add_option("--k1", p.k1, "Object proposals");
    cmd->add_option("--k2", p.k2, "Quad proposals");
    cmd->add_option("--radius", p.radius, "Vote cluster radius (m)");
    cmd->add_option("--votes", p.votes, "gt or zero");
    cmd->add_flag("--features", p.features, "Include feature rows");
  };
  ProposeOptions propose;
  auto* propose_cmd = app.add_subcommand("propose", "Sample seeds and build proposals");
  add_propose_options(propose_cmd, propose);
  propose_cmd->add_option("--feature-dim", propose.feature_dim, "Seed feature width");

  DecodeOptions decode;
  auto* decode_cmd = app.add_subcommand("decode", "Run the decoder with a parameter file");
  add_propose_options(decode_cmd, decode.propose);
  decode_cmd->add_option("--params", decode.params, "Decoder parameter JSON")->required();

  InitParamsOptions init;
  auto* init_cmd = app.add_subcommand("init-params", "Write a decoder parameter file");
  init_cmd->add_option("--layers", init.layers);
  init_cmd->add_option("--d", init.d);
  init_cmd->add_option("--heads", init.heads);
  init_cmd->add_option("--scale", init.scale, "Weight scale");
  init_cmd->add_flag("--zero", init.zero, "All projections zero");
  init_cmd->add_flag("--split", init.split, "Separate self-attention per proposal kind");

  NmsOptions nms;
  auto* nms_cmd = app.add_subcommand("nms", "Suppress duplicate boxes and quads");
  nms_cmd->add_option("--pred", nms.pred, "Prediction JSON")->required();
  nms_cmd->add_option("--iou", nms.iou);
  nms_cmd->add_option("--quad-iou", nms.quad_iou);
  nms_cmd->add_option("--thickness", nms.thickness, "Quad cuboid thickness (m)");

  AssembleOptions assemble;
  auto* assemble_cmd = app.add_subcommand("assemble", "Build ceiling and floor from quads");
  assemble_cmd->add_option("--pred", assemble.pred, "Prediction JSON")->required();
  assemble_cmd->add_option("--quadness-min", assemble.quadness_min);
  assemble_cmd->add_option("--merge-radius", assemble.merge_radius);

  LossOptions loss;
  auto* loss_cmd = app.add_subcommand("loss", "Training loss of a prediction");
  loss_cmd->add_option("--scene", loss.scene, "Ground-truth scene JSON")->required();
  loss_cmd->add_option("--pred", loss.pred, "Prediction JSON")->required();
  loss_cmd->add_option("--weights", loss.weights, "Loss weight JSON");
  loss_cmd->add_option("--sets", loss.sets, "Sets to replicate detections into when raw sets are absent");
  loss_cmd->add_flag("--no-proposal-set", loss.no_proposal);
  loss_cmd->add_flag("--no-intermediate-sets", loss.no_intermediate);
  loss_cmd->add_option("--radius", loss.radius, "Target assignment radius (m)");

  GradcheckOptions gradcheck;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Check the constraint gradient numerically");
  gradcheck_cmd->add_option("--trials", gradcheck.trials);
  gradcheck_cmd->add_option("--step", gradcheck.h, "Central difference step");
  gradcheck_cmd->add_option("--kink", gradcheck.kink);
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance);

  CollisionOptions collisions;
  auto* collisions_cmd = app.add_subcommand("collisions", "Count box corners through walls");
  collisions_cmd->add_option("--pred", collisions.pred, "Prediction JSON or directory")->required();
  collisions_cmd->add_flag("--constrained-only", collisions.constrained_only);
  collisions_cmd->add_flag("--descend", collisions.descend, "Also run gradient descent on box centers");
  collisions_cmd->add_option("--steps", collisions.steps);
  collisions_cmd->add_option("--lr", collisions.lr);

  EvalOptions eval_objects;
  auto* eval_objects_cmd = app.add_subcommand("eval-objects", "Object mAP");
  eval_objects_cmd->add_option("--pred", eval_objects.pred)->required();
  eval_objects_cmd->add_option("--gt", eval_objects.gt)->required();
  eval_objects_cmd->add_option("--iou", eval_objects.iou);

  EvalOptions eval_layout;
  auto* eval_layout_cmd = app.add_subcommand("eval-layout", "Layout F1");
  eval_layout_cmd->add_option("--pred", eval_layout.pred)->required();
  eval_layout_cmd->add_option("--gt", eval_layout.gt)->required();
  eval_layout_cmd->add_option("--radius", eval_layout.radius);

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench-pcloss", "Time naive vs fast constraint loss");
  bench_cmd->add_option("--boxes", bench.boxes);
  bench_cmd->add_option("--quads", bench.quads);
  bench_cmd->add_option("--batch", bench.batch);
  bench_cmd->add_option("--repeats", bench.repeats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return run_gen(g, gen);
    if (*propose_cmd) return run_propose(g, propose);
    if (*decode_cmd) return run_decode(g, decode);
    if (*init_cmd) return run_init_params(g, init);
    if (*nms_cmd) return run_nms(g, nms);
    if (*assemble_cmd) return run_assemble(g, assemble);
    if (*loss_cmd) return run_loss(g, loss);
    if (*gradcheck_cmd) return run_gradcheck(g, gradcheck);
    if (*collisions_cmd) return run_collisions(g, collisions);
    if (*eval_objects_cmd) return run_eval_objects(g, eval_objects);
    if (*eval_layout_cmd) return run_eval_layout(g, eval_layout);
    if (*bench_cmd) return run_bench(g, bench);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
