// Random instances shared by unit and acceptance tests.
#pragma once

#include <random>
#include <vector>

#include "vantage/geomcore.hpp"
#include "vantage/learn.hpp"

namespace vantage::testing {

Mat3 random_rotation(std::mt19937_64& rng);
/// Rotation whose angle stays below `max_angle`.
Mat3 random_small_rotation(std::mt19937_64& rng, double max_angle);
RigidTransform random_rigid(std::mt19937_64& rng, double translation_scale = 2.0);
Vec3 random_point(std::mt19937_64& rng, double half_extent = 1.0);

/// n samples, dim_v / dim_g feature columns, labels +-1 balanced.
Dataset random_two_view(std::mt19937_64& rng, int n, int dim_v, int dim_g);

/// Overlapping Gaussian classes; each view draws its own noise, so the two
/// views err on different samples.
Dataset complementary_noise(std::uint64_t seed, int n);

/// Linearly separable in both views with a wide margin.
Dataset separable(std::uint64_t seed, int n);

struct ClusteredViews {
  std::vector<Camera> cameras;
  std::vector<int> labels;
};

/// `clusters` random rigid centers; members perturbed by rotations below
/// 0.05 rad and translations below 0.01.
ClusteredViews clustered_views(std::uint64_t seed, int clusters,
                               const std::vector<int>& sizes);

}  // namespace vantage::testing
