#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "quadlayout/proposals.hpp"

namespace quadlayout {

using RowVector = Eigen::RowVectorXd;

struct DecoderConfig {
  int layers = 6;
  int d = 256;
  int heads = 8;
  /// Width of the point features used as cross-attention keys and values.
  int point_dim = 259;
  /// Width of the per-proposal geometry vector (center xyz, extent xyz)
  /// that each block hands to the next as position encoding.
  int geometry_width = 6;
  /// Self-attention over objects and quads jointly; false attends within
  /// each proposal kind separately.
  bool joint_self_attention = true;

  int head_dim() const { return d / heads; }
};

void validate(const DecoderConfig& cfg);

/// y = x W + b, row-vector convention (W is in x out).
struct Linear {
  Matrix weight;
  RowVector bias;

  Matrix apply(const Matrix& x) const;
};

/// Fully connected layer followed by inference-mode normalization
/// (per-channel scale and shift) and ReLU.
struct FcNormRelu {
  Matrix weight;
  RowVector bias;
  RowVector scale;
  RowVector shift;

  Matrix apply(const Matrix& x) const;
};

struct AttentionHead {
  Matrix wq;
  Matrix wk;
  Matrix wv;
};

/// Multi-head attention with its output projection (P_sa or P_ca).
struct AttentionParams {
  std::vector<AttentionHead> heads;
  FcNormRelu out;
};

struct DecoderBlock {
  AttentionParams self_attn;
  AttentionParams cross_attn;
  Linear position;  // geometry_width -> d
  Linear geometry;  // d -> geometry_width
};

struct DecoderParams {
  DecoderConfig config;
  std::vector<DecoderBlock> blocks;
};

/// Throws ShapeMismatch if any tensor disagrees with params.config.
void validate(const DecoderParams& params);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// softmax(Q K^T / sqrt(Q.cols())).
Matrix attention_weights(const Matrix& q, const Matrix& k);

/// softmax(Q K^T / sqrt(Q.cols())) V. Throws ShapeMismatch.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v);

/// Concatenated per-head attention outputs (before the output projection).
Matrix multi_head(const AttentionParams& p, const Matrix& query_in, const Matrix& key_in);

/// f_sa = P_sa(A V) + f_c with Q = f_c + position, K = V = f_c.
Matrix self_attention_block(const Matrix& f_c, const AttentionParams& p, const Matrix* position = nullptr);

/// f_ca = P_ca(A V) + f_sa with Q = f_sa + position, K = V = f_p.
Matrix cross_attention_block(const Matrix& f_sa, const Matrix& f_p, const AttentionParams& p,
                             const Matrix* position = nullptr);

struct BlockOutput {
  Matrix features;  // (K1 + K2) x d, objects first
  Matrix geometry;  // (K1 + K2) x geometry_width
};

/// Runs all blocks over the concatenated proposals. Block i adds
/// position.apply(geometry_{i-1}) to its queries; geometry_0 holds the
/// proposal positions padded with zeros, and each block predicts
/// geometry_i = [position, 0] + geometry.apply(features_i).
std::vector<BlockOutput> decoder_forward(const ProposalSet& objects, const ProposalSet& quads,
                                         const Matrix& point_features, const DecoderParams& params);

/// All weights, biases and shifts zero, scales one.
DecoderParams zero_params(const DecoderConfig& cfg);

/// Gaussian weights with standard deviation `scale / sqrt(fan_in)`.
DecoderParams random_params(const DecoderConfig& cfg, std::uint64_t seed, double scale = 1.0);

nlohmann::json params_to_json(const DecoderParams& params);
DecoderParams params_from_json(const nlohmann::json& j);

}  // namespace quadlayout
