// Software rasterizer: depth, face-id and coverage buffers, flat shading,
// and silhouette tracing of the coverage mask.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vantage/geomcore.hpp"
#include "vantage/image.hpp"
#include "vantage/mesh.hpp"

namespace vantage {

struct FrameData {
  int width = 0;
  int height = 0;
  /// Camera-frame z of the visible surface; +inf where nothing is drawn.
  std::vector<double> depth;
  /// Triangle index into Mesh::faces, -1 for background.
  std::vector<std::int32_t> face_id;
  Mask mask;
  std::optional<Image> rgb;

  FrameData() = default;
  FrameData(int w, int h);

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool covered(int x, int y) const { return face_id[index(x, y)] >= 0; }
  std::size_t covered_count() const { return mask.count(); }
};

/// Closed boundary through pixel centers, positively oriented in (x, y)
/// pixel coordinates (shoelace area > 0).
struct SilhouettePolygon {
  std::vector<Vec2> points;

  /// Sum of edge lengths including the closing edge.
  double length() const;
  /// Signed exterior angle at each vertex in (-pi, pi]; a full reversal
  /// counts as +pi.
  std::vector<double> turning_angles() const;
  double total_turning() const;
  double signed_area() const;
};

/// Z-buffered rasterization sampled at pixel centers. Faces are clipped
/// against a near plane at 1e-4 times the mesh bounding radius. Exact depth
/// ties go to the lower face index. Throws InvalidArgument on an empty mesh.
FrameData rasterize(const Mesh& mesh, const Camera& camera);

/// rasterize() plus flat Lambertian shading: each face is lit by
/// ambient + (1 - ambient) * max(0, n . l) with its normal turned towards
/// the camera, times the face's mean vertex color (white without colors).
/// `light` points from the surface towards the light. Background is black.
FrameData render_shaded(const Mesh& mesh, const Camera& camera,
                        const Vec3& light, double ambient = 0.2);

/// Outer boundary of every 8-connected component of the mask, traced with
/// Moore-neighbour tracing. Components are ordered by their first pixel in
/// raster order.
std::vector<SilhouettePolygon> extract_silhouette(const Mask& mask);
inline std::vector<SilhouettePolygon> extract_silhouette(const FrameData& frame) {
  return extract_silhouette(frame.mask);
}

/// Depth normalized to [0,1] over the covered range, background white.
GrayImage depth_image(const FrameData& frame);

void save_depth_pgm(const FrameData& frame, const std::filesystem::path& path);
/// Throws InvalidArgument when the frame carries no rgb buffer.
void save_rgb_png(const FrameData& frame, const std::filesystem::path& path);

}  // namespace vantage
