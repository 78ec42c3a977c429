#include "quadlayout/decoder.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "quadlayout/errors.hpp"
#include "quadlayout/random.hpp"

namespace quadlayout {

namespace {

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeMismatch(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void expect_width(const RowVector& v, Eigen::Index cols, const std::string& what) {
  if (v.cols() != cols) {
    throw ShapeMismatch(what + ": expected width " + std::to_string(cols) + ", got " + std::to_string(v.cols()));
  }
}

void validate_attention(const AttentionParams& p, const DecoderConfig& cfg, Eigen::Index key_dim,
                        const std::string& name) {
  if (static_cast<int>(p.heads.size()) != cfg.heads) throw ShapeMismatch(name + ": wrong number of heads");
  const Eigen::Index d = cfg.d;
  const Eigen::Index dh = cfg.head_dim();
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const std::string hn = name + ".head" + std::to_string(h);
    expect_shape(p.heads[h].wq, d, dh, hn + ".wq");
    expect_shape(p.heads[h].wk, key_dim, dh, hn + ".wk");
    expect_shape(p.heads[h].wv, key_dim, dh, hn + ".wv");
  }
  expect_shape(p.out.weight, d, d, name + ".out.weight");
  expect_width(p.out.bias, d, name + ".out.bias");
  expect_width(p.out.scale, d, name + ".out.scale");
  expect_width(p.out.shift, d, name + ".out.shift");
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

AttentionParams zero_attention(const DecoderConfig& cfg, Eigen::Index key_dim) {
  AttentionParams p;
  for (int h = 0; h < cfg.heads; ++h) {
    p.heads.push_back({Matrix::Zero(cfg.d, cfg.head_dim()), Matrix::Zero(key_dim, cfg.head_dim()),
                       Matrix::Zero(key_dim, cfg.head_dim())});
  }
  p.out = {Matrix::Zero(cfg.d, cfg.d), RowVector::Zero(cfg.d), RowVector::Ones(cfg.d), RowVector::Zero(cfg.d)};
  return p;
}

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sigma) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, sigma);
  }
  return m;
}

nlohmann::json tensor_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Matrix tensor_from_json(const nlohmann::json& tensors, const std::string& name) {
  if (!tensors.contains(name)) throw SchemaError(name, "missing tensor");
  const auto& t = tensors.at(name);
  if (!t.contains("shape") || !t.contains("data") || !t["shape"].is_array() || t["shape"].size() != 2) {
    throw SchemaError(name, "tensor needs a 2-element shape and data");
  }
  const auto rows = t["shape"][0].get<Eigen::Index>();
  const auto cols = t["shape"][1].get<Eigen::Index>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(t["data"].size()) != rows * cols) {
    throw SchemaError(name, "data length does not match shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t["data"][static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

RowVector row_from_json(const nlohmann::json& tensors, const std::string& name) {
  const Matrix m = tensor_from_json(tensors, name);
  if (m.rows() != 1) throw SchemaError(name, "expected a 1 x n tensor");
  return m.row(0);
}

void put_attention(nlohmann::json& t, const AttentionParams& p, const std::string& name) {
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const std::string hn = name + ".head" + std::to_string(h);
    t[hn + ".wq"] = tensor_json(p.heads[h].wq);
    t[hn + ".wk"] = tensor_json(p.heads[h].wk);
    t[hn + ".wv"] = tensor_json(p.heads[h].wv);
  }
  t[name + ".out.weight"] = tensor_json(p.out.weight);
  t[name + ".out.bias"] = tensor_json(p.out.bias);
  t[name + ".out.scale"] = tensor_json(p.out.scale);
  t[name + ".out.shift"] = tensor_json(p.out.shift);
}

AttentionParams get_attention(const nlohmann::json& t, int heads, const std::string& name) {
  AttentionParams p;
  for (int h = 0; h < heads; ++h) {
    const std::string hn = name + ".head" + std::to_string(h);
    p.heads.push_back(
        {tensor_from_json(t, hn + ".wq"), tensor_from_json(t, hn + ".wk"), tensor_from_json(t, hn + ".wv")});
  }
  p.out = {tensor_from_json(t, name + ".out.weight"), row_from_json(t, name + ".out.bias"),
           row_from_json(t, name + ".out.scale"), row_from_json(t, name + ".out.shift")};
  return p;
}

}  // namespace

void validate(const DecoderConfig& cfg) {
  if (cfg.layers < 1) throw ConfigError("decoder needs at least one block");
  if (cfg.heads < 1 || cfg.d < 1 || cfg.d % cfg.heads != 0) throw ConfigError("d must be a positive multiple of heads");
  if (cfg.point_dim < 1 || cfg.geometry_width < 3) throw ConfigError("bad point_dim or geometry_width");
}

void validate(const DecoderParams& params) {
  const auto& cfg = params.config;
  validate(cfg);
  if (static_cast<int>(params.blocks.size()) != cfg.layers) throw ShapeMismatch("block count differs from layers");
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    const std::string name = "block" + std::to_string(i);
    validate_attention(b.self_attn, cfg, cfg.d, name + ".self");
    validate_attention(b.cross_attn, cfg, cfg.point_dim, name + ".cross");
    expect_shape(b.position.weight, cfg.geometry_width, cfg.d, name + ".position.weight");
    expect_width(b.position.bias, cfg.d, name + ".position.bias");
    expect_shape(b.geometry.weight, cfg.d, cfg.geometry_width, name + ".geometry.weight");
    expect_width(b.geometry.bias, cfg.geometry_width, name + ".geometry.bias");
  }
}

Matrix Linear::apply(const Matrix& x) const {
  if (x.cols() != weight.rows()) throw ShapeMismatch("linear: input width mismatch");
  Matrix y = x * weight;
  y.rowwise() += bias;
  return y;
}

Matrix FcNormRelu::apply(const Matrix& x) const {
  if (x.cols() != weight.rows()) throw ShapeMismatch("fc: input width mismatch");
  Matrix y = x * weight;
  y.rowwise() += bias;
  y.array().rowwise() *= scale.array();
  y.rowwise() += shift;
  return y.cwiseMax(0.0);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Matrix attention_weights(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols()) throw ShapeMismatch("attention: Q and K widths differ");
  if (q.cols() == 0 || k.rows() == 0) throw ShapeMismatch("attention: empty operands");
  return softmax_rows((q * k.transpose()) / std::sqrt(static_cast<double>(q.cols())));
}

Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (k.rows() != v.rows()) throw ShapeMismatch("attention: K and V row counts differ");
  return attention_weights(q, k) * v;
}

Matrix multi_head(const AttentionParams& p, const Matrix& query_in, const Matrix& key_in) {
  if (p.heads.empty()) throw ShapeMismatch("attention layer has no heads");
  const Eigen::Index dh = p.heads.front().wq.cols();
  Matrix out(query_in.rows(), dh * static_cast<Eigen::Index>(p.heads.size()));
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const auto& head = p.heads[h];
    if (query_in.cols() != head.wq.rows() || key_in.cols() != head.wk.rows() || key_in.cols() != head.wv.rows()) {
      throw ShapeMismatch("attention head " + std::to_string(h) + ": input width mismatch");
    }
    const Matrix k = key_in * head.wk;
    out.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = attention(query_in * head.wq, k, key_in * head.wv);
  }
  return out;
}

Matrix self_attention_block(const Matrix& f_c, const AttentionParams& p, const Matrix* position) {
  Matrix query = f_c;
  if (position != nullptr) {
    expect_shape(*position, f_c.rows(), f_c.cols(), "self-attention position encoding");
    query += *position;
  }
  const Matrix fused = p.out.apply(multi_head(p, query, f_c));
  expect_shape(fused, f_c.rows(), f_c.cols(), "self-attention output");
  return fused + f_c;
}

Matrix cross_attention_block(const Matrix& f_sa, const Matrix& f_p, const AttentionParams& p,
                             const Matrix* position) {
  Matrix query = f_sa;
  if (position != nullptr) {
    expect_shape(*position, f_sa.rows(), f_sa.cols(), "cross-attention position encoding");
    query += *position;
  }
  const Matrix fused = p.out.apply(multi_head(p, query, f_p));
  expect_shape(fused, f_sa.rows(), f_sa.cols(), "cross-attention output");
  return fused + f_sa;
}

std::vector<BlockOutput> decoder_forward(const ProposalSet& objects, const ProposalSet& quads,
                                         const Matrix& point_features, const DecoderParams& params) {
  validate(params);
  const auto& cfg = params.config;
  const auto k1 = static_cast<Eigen::Index>(objects.size());
  const auto k2 = static_cast<Eigen::Index>(quads.size());
  if (objects.features.rows() != k1 || quads.features.rows() != k2) {
    throw ShapeMismatch("decoder: proposal positions and features disagree");
  }
  if (k1 + k2 == 0) throw ShapeMismatch("decoder: no proposals");
  if ((k1 > 0 && objects.features.cols() != cfg.d) || (k2 > 0 && quads.features.cols() != cfg.d)) {
    throw ShapeMismatch("decoder: proposal features must be d wide");
  }
  if (point_features.cols() != cfg.point_dim || point_features.rows() == 0) {
    throw ShapeMismatch("decoder: point features must be non-empty and point_dim wide");
  }

  Matrix features(k1 + k2, cfg.d);
  if (k1 > 0) features.topRows(k1) = objects.features;
  if (k2 > 0) features.bottomRows(k2) = quads.features;

  Matrix base = Matrix::Zero(k1 + k2, cfg.geometry_width);
  for (Eigen::Index i = 0; i < k1 + k2; ++i) {
    const Vec3& p = i < k1 ? objects.positions[static_cast<std::size_t>(i)]
                           : quads.positions[static_cast<std::size_t>(i - k1)];
    base(i, 0) = p.x;
    base(i, 1) = p.y;
    base(i, 2) = p.z;
  }

  std::vector<BlockOutput> out;
  out.reserve(params.blocks.size());
  Matrix geometry = base;
  for (const auto& block : params.blocks) {
    const Matrix position = block.position.apply(geometry);
    Matrix f_sa;
    if (cfg.joint_self_attention || k1 == 0 || k2 == 0) {
      f_sa = self_attention_block(features, block.self_attn, &position);
    } else {
      const Matrix obj_pos = position.topRows(k1);
      const Matrix quad_pos = position.bottomRows(k2);
      f_sa = stack_rows(self_attention_block(features.topRows(k1), block.self_attn, &obj_pos),
                        self_attention_block(features.bottomRows(k2), block.self_attn, &quad_pos));
    }
    features = cross_attention_block(f_sa, point_features, block.cross_attn, &position);
    geometry = base + block.geometry.apply(features);
    out.push_back({features, geometry});
  }
  return out;
}

DecoderParams zero_params(const DecoderConfig& cfg) {
  validate(cfg);
  DecoderParams p;
  p.config = cfg;
  for (int i = 0; i < cfg.layers; ++i) {
    DecoderBlock b;
    b.self_attn = zero_attention(cfg, cfg.d);
    b.cross_attn = zero_attention(cfg, cfg.point_dim);
    b.position = {Matrix::Zero(cfg.geometry_width, cfg.d), RowVector::Zero(cfg.d)};
    b.geometry = {Matrix::Zero(cfg.d, cfg.geometry_width), RowVector::Zero(cfg.geometry_width)};
    p.blocks.push_back(std::move(b));
  }
  return p;
}

DecoderParams random_params(const DecoderConfig& cfg, std::uint64_t seed, double scale) {
  DecoderParams p = zero_params(cfg);
  Rng rng(seed);
  const auto fill = [&](Matrix& m) { m = gaussian(rng, m.rows(), m.cols(), scale / std::sqrt(double(m.rows()))); };
  const auto fill_row = [&](RowVector& v, double sigma) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) v(c) = rng.normal(0.0, sigma);
  };
  for (auto& b : p.blocks) {
    for (AttentionParams* a : {&b.self_attn, &b.cross_attn}) {
      for (auto& h : a->heads) {
        fill(h.wq);
        fill(h.wk);
        fill(h.wv);
      }
      fill(a->out.weight);
      fill_row(a->out.bias, 0.1 * scale);
      for (Eigen::Index c = 0; c < a->out.scale.cols(); ++c) a->out.scale(c) = 1.0 + rng.normal(0.0, 0.1 * scale);
      fill_row(a->out.shift, 0.1 * scale);
    }
    fill(b.position.weight);
    fill_row(b.position.bias, 0.1 * scale);
    fill(b.geometry.weight);
    fill_row(b.geometry.bias, 0.1 * scale);
  }
  return p;
}

nlohmann::json params_to_json(const DecoderParams& params) {
  validate(params);
  const auto& c = params.config;
  nlohmann::json j;
  j["format"] = "quadlayout-decoder-params";
  j["version"] = 1;
  j["config"] = {{"layers", c.layers},         {"d", c.d},
                 {"heads", c.heads},           {"point_dim", c.point_dim},
                 {"geometry_width", c.geometry_width}, {"joint_self_attention", c.joint_self_attention}};
  nlohmann::json t = nlohmann::json::object();
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    const std::string name = "block" + std::to_string(i);
    put_attention(t, b.self_attn, name + ".self");
    put_attention(t, b.cross_attn, name + ".cross");
    t[name + ".position.weight"] = tensor_json(b.position.weight);
    t[name + ".position.bias"] = tensor_json(b.position.bias);
    t[name + ".geometry.weight"] = tensor_json(b.geometry.weight);
    t[name + ".geometry.bias"] = tensor_json(b.geometry.bias);
  }
  j["tensors"] = std::move(t);
  return j;
}

DecoderParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "quadlayout-decoder-params") {
    throw SchemaError("format", "not a quadlayout decoder parameter file");
  }
  if (j.value("version", 0) != 1) throw SchemaError("version", "unsupported version");
  if (!j.contains("config") || !j.contains("tensors")) throw SchemaError("config", "missing config or tensors");
  const auto& jc = j["config"];
  DecoderParams p;
  try {
    p.config.layers = jc.at("layers").get<int>();
    p.config.d = jc.at("d").get<int>();
    p.config.heads = jc.at("heads").get<int>();
    p.config.point_dim = jc.at("point_dim").get<int>();
    p.config.geometry_width = jc.at("geometry_width").get<int>();
    p.config.joint_self_attention = jc.value("joint_self_attention", true);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("config", e.what());
  }
  validate(p.config);
  const auto& t = j["tensors"];
  for (int i = 0; i < p.config.layers; ++i) {
    const std::string name = "block" + std::to_string(i);
    DecoderBlock b;
    b.self_attn = get_attention(t, p.config.heads, name + ".self");
    b.cross_attn = get_attention(t, p.config.heads, name + ".cross");
    b.position = {tensor_from_json(t, name + ".position.weight"), row_from_json(t, name + ".position.bias")};
    b.geometry = {tensor_from_json(t, name + ".geometry.weight"), row_from_json(t, name + ".geometry.bias")};
    p.blocks.push_back(std::move(b));
  }
  validate(p);
  return p;
}

}  // namespace quadlayout
