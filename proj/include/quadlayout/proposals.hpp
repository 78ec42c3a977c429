#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "quadlayout/geom.hpp"

namespace quadlayout {

using Matrix = Eigen::MatrixXd;

/// Backbone output: one position and one C-wide feature row per seed.
struct SeedSet {
  std::vector<Vec3> positions;
  Matrix features;
};

/// Seeds after voting: y = x + dx, g = f + df.
struct VoteSet {
  std::vector<Vec3> positions;
  Matrix features;
};

enum class ProposalKind { object, quad };

struct ProposalSet {
  std::vector<Vec3> positions;
  Matrix features;
  ProposalKind kind = ProposalKind::object;

  std::size_t size() const { return positions.size(); }
};

/// Index of a uniformly drawn start point for fps().
std::size_t random_start(std::size_t n, std::uint64_t seed);

/// Greedy farthest point sampling. result[0] == first; each next index
/// maximizes the distance to the selected set, ties going to the lowest
/// index. Throws BadK unless 1 <= k <= points.size().
std::vector<std::size_t> fps(std::span<const Vec3> points, std::size_t k, std::size_t first = 0);

/// Adds the first three offset columns to the positions and the rest to the
/// features. Throws ShapeMismatch on disagreeing shapes.
VoteSet apply_votes(const SeedSet& seeds, const Matrix& offsets);

struct VoteClusters {
  ProposalSet proposals;
  std::vector<std::size_t> centers;               // vote index of each FPS center
  std::vector<std::vector<std::size_t>> members;  // ascending vote indices
};

/// FPS over vote positions picks k1 centers; each cluster holds the votes
/// within `radius` of its center and yields the mean position and feature.
/// FPS starts at the lexicographically smallest vote position so that the
/// result does not depend on vote order.
VoteClusters cluster_votes_detailed(const VoteSet& votes, std::size_t k1, double radius = 0.3);
ProposalSet cluster_votes(const VoteSet& votes, std::size_t k1, double radius = 0.3);

ProposalSet quad_proposals(const SeedSet& seeds, std::size_t k2, std::size_t first = 0);

}  // namespace quadlayout
