#include "quadlayout/proposals.hpp"

#include <limits>
#include <string>
#include <tuple>

#include "quadlayout/errors.hpp"
#include "quadlayout/random.hpp"

namespace quadlayout {

namespace {

double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}

void check_rows(std::size_t positions, const Matrix& features, const char* what) {
  if (static_cast<Eigen::Index>(positions) != features.rows()) {
    throw ShapeMismatch(std::string(what) + ": position count does not match feature rows");
  }
}

}  // namespace

std::size_t random_start(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw BadK("cannot sample a start index from an empty set");
  Rng rng(seed);
  return rng.index(n);
}

std::vector<std::size_t> fps(std::span<const Vec3> points, std::size_t k, std::size_t first) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) {
    throw BadK("fps: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
  if (first >= n) throw BadK("fps: start index out of range");

  std::vector<std::size_t> picked;
  picked.reserve(k);
  picked.push_back(first);
  // Squared distance to the selected set; sqrt is monotone so argmax agrees.
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::size_t last = first;
  while (picked.size() < k) {
    std::size_t arg = n;
    double arg_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_distance(points[i], points[last]);
      if (d < best[i]) best[i] = d;
      if (!taken[i] && best[i] > arg_d) {
        arg_d = best[i];
        arg = i;
      }
    }
    picked.push_back(arg);
    taken[arg] = true;
    last = arg;
  }
  return picked;
}

VoteSet apply_votes(const SeedSet& seeds, const Matrix& offsets) {
  check_rows(seeds.positions.size(), seeds.features, "apply_votes seeds");
  if (offsets.rows() != seeds.features.rows() || offsets.cols() != 3 + seeds.features.cols()) {
    throw ShapeMismatch("apply_votes: offsets must be M x (3 + C)");
  }
  VoteSet votes;
  votes.positions.reserve(seeds.positions.size());
  for (std::size_t i = 0; i < seeds.positions.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    votes.positions.push_back(seeds.positions[i] + Vec3{offsets(r, 0), offsets(r, 1), offsets(r, 2)});
  }
  votes.features = seeds.features + offsets.rightCols(seeds.features.cols());
  return votes;
}

VoteClusters cluster_votes_detailed(const VoteSet& votes, std::size_t k1, double radius) {
  check_rows(votes.positions.size(), votes.features, "cluster_votes");
  if (!(radius > 0.0)) throw InvalidArgument("cluster_votes: radius must be positive");
  const std::size_t m = votes.positions.size();
  if (k1 < 1 || k1 > m) throw BadK("cluster_votes: k1 must lie in [1, M]");

  std::size_t start = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const auto& p = votes.positions[i];
    const auto& s = votes.positions[start];
    if (std::tie(p.x, p.y, p.z) < std::tie(s.x, s.y, s.z)) start = i;
  }

  VoteClusters out;
  out.centers = fps(votes.positions, k1, start);
  out.proposals.kind = ProposalKind::object;
  out.proposals.features.resize(static_cast<Eigen::Index>(k1), votes.features.cols());
  out.proposals.positions.reserve(k1);
  const double r2 = radius * radius;
  for (std::size_t c = 0; c < k1; ++c) {
    const Vec3 center = votes.positions[out.centers[c]];
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < m; ++i) {
      if (squared_distance(votes.positions[i], center) <= r2) members.push_back(i);
    }
    Vec3 mean;
    Eigen::RowVectorXd feat = Eigen::RowVectorXd::Zero(votes.features.cols());
    for (std::size_t i : members) {
      mean += votes.positions[i];
      feat += votes.features.row(static_cast<Eigen::Index>(i));
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    out.proposals.positions.push_back(mean * inv);
    out.proposals.features.row(static_cast<Eigen::Index>(c)) = feat * inv;
    out.members.push_back(std::move(members));
  }
  return out;
}

ProposalSet cluster_votes(const VoteSet& votes, std::size_t k1, double radius) {
  return cluster_votes_detailed(votes, k1, radius).proposals;
}

ProposalSet quad_proposals(const SeedSet& seeds, std::size_t k2, std::size_t first) {
  check_rows(seeds.positions.size(), seeds.features, "quad_proposals");
  const auto idx = fps(seeds.positions, k2, first);
  ProposalSet out;
  out.kind = ProposalKind::quad;
  out.features.resize(static_cast<Eigen::Index>(k2), seeds.features.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.positions.push_back(seeds.positions[idx[i]]);
    out.features.row(static_cast<Eigen::Index>(i)) = seeds.features.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

}  // namespace quadlayout
