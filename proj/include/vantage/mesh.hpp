#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

#include "vantage/geomcore.hpp"

namespace vantage {

/// Triangle mesh. Every triangle remembers the source polygon it came from
/// (`face_groups`), so a quad in an OBJ file stays one "face" for
/// per-face statistics even though it is rasterized as two triangles.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;
  /// Per-vertex RGB in [0,1]; empty when the mesh carries no color.
  std::vector<Vec3> colors;
  /// Source polygon id per triangle, in [0, group_count()).
  std::vector<int> face_groups;

  bool empty() const { return vertices.empty() || faces.empty(); }
  bool has_colors() const { return !colors.empty(); }
  int group_count() const;

  double face_area(std::size_t f) const;
  /// Unit normal following the face winding.
  Vec3 face_normal(std::size_t f) const;
  double total_area() const;
  /// Area-weighted surface centroid.
  Vec3 centroid() const;
  /// Max distance from the centroid to any vertex.
  double bounding_radius() const;

  void append(const Mesh& other);
  void transform(const SimilarityTransform& t);
};

/// Checks index ranges and attribute sizes; throws InvalidArgument.
void validate_mesh(const Mesh& mesh);

/// Drops triangles with repeated indices or zero area and renumbers face
/// groups densely. Returns the number of removed triangles.
std::size_t clean_mesh(Mesh& mesh, double area_eps = 0.0);

/// OBJ (v/f, optional per-vertex color after xyz) or ASCII PLY, chosen by
/// extension. The result is validated and cleaned.
Mesh load_mesh(const std::filesystem::path& path);
Mesh load_obj(const std::filesystem::path& path);
Mesh load_ply(const std::filesystem::path& path);

/// Writes triangles grouped back into polygons only when a group forms a
/// simple fan; otherwise writes triangles.
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// Procedural shapes used by tests, fixtures and diagnostics.
namespace shapes {

/// Axis-aligned box, 6 quad faces (12 triangles), outward winding.
Mesh box(const Vec3& min_corner, const Vec3& max_corner);
Mesh unit_cube();
/// Subdivided icosahedron projected to a sphere of the given radius.
Mesh icosphere(double radius, int subdivisions);
/// Planar n x n cell grid in the z = 0 plane spanning [0, size]^2.
Mesh grid(int cells, double size);
/// Axis-aligned square of side `side` in the plane z = depth, centered on
/// the z axis, as a single quad.
Mesh square(double side, double depth);
/// Small colored building: walls, gabled roof, door and windows. Up is +y.
Mesh building();

}  // namespace shapes

}  // namespace vantage
