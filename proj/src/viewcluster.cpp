#include "vantage/viewcluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cost ordered first by the number of members stuck at +inf, then by the
// finite sum, so the search still makes progress around degenerate pairs.
struct Cost {
  int infinite = 0;
  double sum = 0.0;

  bool better_than(const Cost& o) const {
    if (infinite != o.infinite) return infinite < o.infinite;
    return sum < o.sum - 1e-12 * (1.0 + std::abs(o.sum));
  }
};

Cost total_cost(const Eigen::MatrixXd& d, const std::vector<int>& medoids) {
  Cost c;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    double best = kInf;
    for (int m : medoids) best = std::min(best, d(i, m));
    if (std::isinf(best))
      ++c.infinite;
    else
      c.sum += best;
  }
  return c;
}

}  // namespace

std::vector<int> ClusterAssignment::cluster_sizes() const {
  std::vector<int> sizes(medoids.size(), 0);
  for (int l : labels) sizes[l]++;
  return sizes;
}

Eigen::MatrixXd pose_distance_matrix(const std::vector<ModelViewMatrix>& poses,
                                     std::vector<std::string>* warnings) {
  const auto n = static_cast<Eigen::Index>(poses.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v;
      try {
        v = viewpoint_distance(poses[i], poses[j]);
      } catch (const DegenerateLogarithm&) {
        v = kInf;
        if (warnings)
          warnings->push_back("poses " + std::to_string(i) + " and " + std::to_string(j) +
                              " differ by a half-turn; distance set to infinity");
      }
      d(i, j) = d(j, i) = v;
    }
  return d;
}

ClusterAssignment kmedoids_distances(const Eigen::MatrixXd& dist, int k, std::uint64_t seed) {
  const int n = static_cast<int>(dist.rows());
  if (dist.cols() != n) throw InvalidArgument("kmedoids: distance matrix must be square");
  if (k < 1) throw InvalidArgument("kmedoids: K must be positive");
  if (k > n)
    throw InvalidArgument("kmedoids: K = " + std::to_string(k) + " exceeds the " +
                          std::to_string(n) + " inputs");

  std::vector<int> rank(n);
  {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (int r = 0; r < n; ++r) rank[order[r]] = r;
  }
  auto preferred = [&](const Cost& c, int cand, const Cost& best, int best_cand) {
    if (best_cand < 0 || c.better_than(best)) return true;
    if (best.better_than(c)) return false;
    return rank[cand] < rank[best_cand];
  };

  // BUILD: greedy additions.
  std::vector<int> medoids;
  std::vector<bool> is_medoid(n, false);
  while (static_cast<int>(medoids.size()) < k) {
    int best_cand = -1;
    Cost best;
    for (int c = 0; c < n; ++c) {
      if (is_medoid[c]) continue;
      medoids.push_back(c);
      const Cost cost = total_cost(dist, medoids);
      medoids.pop_back();
      if (preferred(cost, c, best, best_cand)) {
        best = cost;
        best_cand = c;
      }
    }
    medoids.push_back(best_cand);
    is_medoid[best_cand] = true;
  }

  // SWAP: apply the best improving (medoid, non-medoid) exchange until none.
  Cost current = total_cost(dist, medoids);
  while (true) {
    int best_slot = -1, best_cand = -1;
    Cost best = current;
    for (int slot = 0; slot < k; ++slot) {
      const int old = medoids[slot];
      for (int c = 0; c < n; ++c) {
        if (is_medoid[c]) continue;
        medoids[slot] = c;
        const Cost cost = total_cost(dist, medoids);
        if (cost.better_than(current) &&
            (best_cand < 0 || cost.better_than(best) ||
             (!best.better_than(cost) && rank[c] < rank[best_cand]))) {
          best = cost;
          best_slot = slot;
          best_cand = c;
        }
      }
      medoids[slot] = old;
    }
    if (best_cand < 0) break;
    is_medoid[medoids[best_slot]] = false;
    medoids[best_slot] = best_cand;
    is_medoid[best_cand] = true;
    current = best;
  }

  ClusterAssignment out;
  out.medoids = medoids;
  out.labels.assign(n, 0);
  out.cost = 0.0;
  for (int i = 0; i < n; ++i) {
    int label = 0;
    for (int c = 0; c < k; ++c) {
      if (medoids[c] == i) {
        label = c;
        break;
      }
      if (dist(i, medoids[c]) < dist(i, medoids[label])) label = c;
    }
    out.labels[i] = label;
    out.cost += dist(i, medoids[label]);
  }
  return out;
}

ClusterAssignment kmedoids(const std::vector<ModelViewMatrix>& poses, int k,
                           std::uint64_t seed) {
  std::vector<std::string> warnings;
  const Eigen::MatrixXd d = pose_distance_matrix(poses, &warnings);
  ClusterAssignment a = kmedoids_distances(d, k, seed);
  a.warnings = std::move(warnings);
  return a;
}

std::vector<std::string> representative_views(const std::vector<ModelViewMatrix>& poses,
                                              const std::vector<std::string>& ids, int k,
                                              std::uint64_t seed) {
  if (ids.size() != poses.size())
    throw InvalidArgument("representative_views: one id per pose is required");
  const ClusterAssignment a = kmedoids(poses, k, seed);
  const std::vector<int> sizes = a.cluster_sizes();
  std::vector<int> order(a.medoids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (sizes[x] != sizes[y]) return sizes[x] > sizes[y];
    return a.medoids[x] < a.medoids[y];
  });
  std::vector<std::string> out;
  for (int c : order) out.push_back(ids[a.medoids[c]]);
  return out;
}

std::string clusters_to_csv(const ClusterAssignment& a, const std::vector<std::string>& ids,
                            const Eigen::MatrixXd& dist) {
  std::ostringstream os;
  os.precision(17);
  os << "id,cluster,medoid,distance\n";
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const int m = a.medoids[a.labels[i]];
    os << ids[i] << ',' << a.labels[i] << ',' << ids[m] << ','
       << dist(static_cast<Eigen::Index>(i), m) << '\n';
  }
  return os.str();
}

}  // namespace vantage
