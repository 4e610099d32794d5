// Mesh to point-cloud similarity registration, camera transfer, and the
// structure-from-motion scene format.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vantage/errors.hpp"
#include "vantage/geomcore.hpp"
#include "vantage/mesh.hpp"

namespace vantage {

/// Matched points: p on the mesh, q on the point cloud.
class CorrespondenceSet {
 public:
  /// Throws UnderdeterminedInput with fewer than 3 pairs or collinear p,
  /// InvalidArgument on a size mismatch.
  CorrespondenceSet(std::vector<Vec3> mesh_points, std::vector<Vec3> cloud_points);

  std::size_t size() const { return p_.size(); }
  const std::vector<Vec3>& mesh_points() const { return p_; }
  const std::vector<Vec3>& cloud_points() const { return q_; }

 private:
  std::vector<Vec3> p_;
  std::vector<Vec3> q_;
};

struct RegistrationResult {
  SimilarityTransform transform;
  /// sum_k |c R p_k + t - q_k|
  double residual = 0.0;
  std::vector<double> pair_residuals;
  std::size_t iterations = 0;
};

class RegistrationConvergenceError : public ConvergenceError {
 public:
  RegistrationConvergenceError(const std::string& what, RegistrationResult best)
      : ConvergenceError(what), best_(std::move(best)) {}
  const RegistrationResult& best() const noexcept { return best_; }

 private:
  RegistrationResult best_;
};

struct RegistrationOptions {
  std::size_t max_iterations = 500;
};

/// Closed-form least-squares start followed by Levenberg-Marquardt on the
/// sum of (softened) Euclidean residuals.
RegistrationResult estimate_similarity(const CorrespondenceSet& corr,
                                       const RegistrationOptions& options = {});

/// Camera posed in the point-cloud frame -> same view in the mesh frame.
/// Rotation R'R, translation (R't + t') / c, intrinsics unchanged.
Camera transfer_camera(const SimilarityTransform& sim, const Camera& cloud_camera);

/// Reads "mesh_vertex_index x y z" lines ('#' starts a comment) and pairs
/// each mesh vertex with its point-cloud position. Throws ParseError.
CorrespondenceSet load_correspondences(const std::filesystem::path& path, const Mesh& mesh);

// ---------------------------------------------------------------------------
// SfM scenes

struct SfmView {
  std::string id;
  Camera camera;
};

struct SfmScene {
  std::vector<SfmView> views;
  std::vector<Vec3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;
  /// Ids of images that carry no pose.
  std::vector<std::string> skipped;
  std::vector<std::string> warnings;
};

/// JSON scene ("format": "vantage-sfm", "version": 1). Throws ParseError
/// carrying the line of the offending value.
SfmScene parse_sfm(const std::string& text, const std::string& source = "<string>");
SfmScene ingest_sfm(const std::filesystem::path& path);
std::string sfm_to_json(const SfmScene& scene);
void export_sfm(const SfmScene& scene, const std::filesystem::path& path);

/// Bundler v0.3 ".out" file. Bundler cameras look down -z with +y up; they
/// are flipped to the +z forward / +y down convention. Width and height are
/// not stored in the format and must be supplied. Cameras with zero focal
/// length are reported as skipped.
SfmScene read_bundler(const std::filesystem::path& path, int width, int height);

/// Every registered view transferred into the mesh frame.
std::vector<SfmView> transfer_views(const SimilarityTransform& sim, const SfmScene& scene);

}  // namespace vantage
