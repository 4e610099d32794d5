// Geometric viewpoint features computed from a mesh, a camera and the
// rasterized frame.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vantage/geomcore.hpp"
#include "vantage/mesh.hpp"
#include "vantage/render.hpp"

namespace vantage {

/// Per-vertex discrete curvature. Boundary vertices carry zero curvature.
struct CurvatureField {
  std::vector<double> mean;
  std::vector<double> gaussian;
  /// Mixed Voronoi area; sums to the total surface area.
  std::vector<double> area;
  std::vector<bool> boundary;
};

/// Cotangent-Laplacian mean curvature and angle-defect Gaussian curvature.
/// Throws InvalidMesh when an edge is shared by more than two triangles.
CurvatureField curvature_field(const Mesh& mesh);

struct Feature3D {
  static constexpr std::size_t kSize = 24;
  static constexpr std::size_t kMeanCurv = 0;
  static constexpr std::size_t kGaussCurv = 1;
  static constexpr std::size_t kMaxDepth = 2;
  static constexpr std::size_t kDepthDist = 3;
  static constexpr std::size_t kArea = 4;
  static constexpr std::size_t kSurface = 5;
  static constexpr std::size_t kEntropy = 6;
  static constexpr std::size_t kOuter = 7;
  static constexpr std::size_t kSilLength = 8;
  static constexpr std::size_t kSilCurv = 9;
  static constexpr std::size_t kSilExtrema = 10;
  static constexpr std::size_t kPos = 11;
  static constexpr std::size_t kUp = 13;
  static constexpr std::size_t kAngles = 14;
  static constexpr std::size_t kAbove = 23;

  std::array<double, kSize> values{};
  /// Nothing of the model was drawn.
  bool degenerate = false;

  static const std::vector<std::string>& column_names();
};

/// exp(-(phi - 3pi/8)^2 / (2 (pi/4)^2))
double above_horizon_score(double phi);

/// Features for a frame rasterized from (mesh, camera). Faces are grouped
/// by Mesh::face_groups for the viewpoint entropy.
Feature3D geometric_features(const Mesh& mesh, const Camera& camera,
                             const FrameData& frame, const CurvatureField& curv,
                             const Vec3& model_up = Vec3::UnitY());

/// Rasterizes at `frame_size` x `frame_size` (the camera's intrinsics are
/// rescaled) and evaluates geometric_features.
Feature3D extract_3d(const Mesh& mesh, const Camera& camera, const CurvatureField& curv,
                     const Vec3& model_up = Vec3::UnitY(), int frame_size = 512);
Feature3D extract_3d(const Mesh& mesh, const Camera& camera,
                     const Vec3& model_up = Vec3::UnitY(), int frame_size = 512);

}  // namespace vantage
