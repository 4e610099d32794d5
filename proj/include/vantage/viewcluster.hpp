// K-medoids clustering of camera poses under the SE(3) log distance.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "vantage/geomcore.hpp"

namespace vantage {

struct ClusterAssignment {
  /// Input index of each cluster's medoid; cluster c is medoids[c].
  std::vector<int> medoids;
  /// Cluster id per input, in [0, K).
  std::vector<int> labels;
  /// Sum of member-to-medoid distances (+inf when some member is only
  /// reachable through a degenerate pair).
  double cost = 0.0;
  std::vector<std::string> warnings;

  std::vector<int> cluster_sizes() const;
};

/// Symmetric matrix of viewpoint_distance values. Pairs whose relative
/// rotation is too close to pi get +inf and a warning.
Eigen::MatrixXd pose_distance_matrix(const std::vector<ModelViewMatrix>& poses,
                                     std::vector<std::string>* warnings = nullptr);

/// PAM (BUILD then best-improvement SWAP) on a precomputed symmetric
/// distance matrix. Exact cost ties are broken by a permutation drawn from
/// `seed`, so results are invariant to input order only up to such ties.
/// Throws InvalidArgument when k < 1 or k > n.
ClusterAssignment kmedoids_distances(const Eigen::MatrixXd& dist, int k, std::uint64_t seed);

ClusterAssignment kmedoids(const std::vector<ModelViewMatrix>& poses, int k = 9,
                           std::uint64_t seed = 0);

/// Photo ids of the medoids, largest cluster first (ties: lower medoid
/// index first).
std::vector<std::string> representative_views(const std::vector<ModelViewMatrix>& poses,
                                              const std::vector<std::string>& ids, int k = 9,
                                              std::uint64_t seed = 0);

/// "id,cluster,medoid,distance" rows, one per input.
std::string clusters_to_csv(const ClusterAssignment& a, const std::vector<std::string>& ids,
                            const Eigen::MatrixXd& dist);

}  // namespace vantage
