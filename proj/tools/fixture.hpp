// Synthetic project: a small building mesh, rendered "photos" posed in a
// separate point-cloud frame, correspondences and labels.
#pragma once

#include <filesystem>

#include "vantage/geomcore.hpp"

namespace vantage::fixture {

/// Mesh frame -> point-cloud frame used by the generated scene.
SimilarityTransform ground_truth();

struct Options {
  int photos = 40;
  int width = 320;
  int height = 240;
  std::uint64_t seed = 7;
};

/// Writes mesh.obj, photos/, sfm.json, correspondences.txt, labels.csv and
/// project.ini into `dir` (created if missing).
void write(const std::filesystem::path& dir, const Options& options = {});

}  // namespace vantage::fixture
