#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "vantage/errors.hpp"
#include "vantage/mesh.hpp"

using namespace vantage;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("unit cube geometry") {
  const Mesh c = shapes::unit_cube();
  CHECK(c.faces.size() == 12);
  CHECK(c.group_count() == 6);
  CHECK(c.total_area() == doctest::Approx(6.0));
  CHECK(c.centroid().norm() < 1e-12);
  CHECK(c.bounding_radius() == doctest::Approx(std::sqrt(3.0) / 2));
  for (std::size_t f = 0; f < c.faces.size(); ++f) {
    // Outward winding: normal points away from the center.
    const Vec3 mid = (c.vertices[c.faces[f][0]] + c.vertices[c.faces[f][1]] +
                      c.vertices[c.faces[f][2]]) / 3.0;
    CHECK(c.face_normal(f).dot(mid) > 0.0);
  }
}

TEST_CASE("icosphere approaches the sphere area") {
  const Mesh s = shapes::icosphere(2.0, 4);
  CHECK(s.total_area() == doctest::Approx(4 * kPi * 4.0).epsilon(0.01));
  CHECK(s.bounding_radius() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("OBJ round trip keeps polygons and colors") {
  const Mesh b = shapes::building();
  const fs::path p = fs::temp_directory_path() / "vantage_building.obj";
  save_obj(b, p);
  const Mesh r = load_mesh(p);
  fs::remove(p);
  CHECK(r.vertices.size() == b.vertices.size());
  CHECK(r.faces.size() == b.faces.size());
  CHECK(r.group_count() == b.group_count());
  REQUIRE(r.has_colors());
  for (std::size_t i = 0; i < b.vertices.size(); ++i) {
    CHECK((r.vertices[i] - b.vertices[i]).norm() == 0.0);
    CHECK((r.colors[i] - b.colors[i]).norm() == 0.0);
  }
}

TEST_CASE("OBJ parsing") {
  const auto p = write_temp("vantage_quad.obj",
                            "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 -1/1\n");
  const Mesh m = load_mesh(p);
  CHECK(m.faces.size() == 2);
  CHECK(m.group_count() == 1);
  CHECK_FALSE(m.has_colors());
  const auto bad = write_temp("vantage_bad.obj", "v 0 0 0\nv 1 0 0\nf 1 2 7\n");
  try {
    load_mesh(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  fs::remove(p);
  fs::remove(bad);
}

TEST_CASE("ASCII PLY parsing") {
  const auto p = write_temp("vantage_tri.ply",
                            "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n"
                            "property float y\nproperty float z\nproperty uchar red\n"
                            "property uchar green\nproperty uchar blue\nelement face 1\n"
                            "property list uchar int vertex_indices\nend_header\n"
                            "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0 0 0 255\n3 0 1 2\n");
  const Mesh m = load_mesh(p);
  CHECK(m.faces.size() == 1);
  REQUIRE(m.has_colors());
  CHECK(m.colors[0].x() == 1.0);
  CHECK(m.face_area(0) == doctest::Approx(0.5));
  const auto bin = write_temp("vantage_bin.ply", "ply\nformat binary_little_endian 1.0\nend_header\n");
  CHECK_THROWS_AS(load_mesh(bin), ParseError);
  fs::remove(p);
  fs::remove(bin);
}

TEST_CASE("cleaning drops degenerate triangles") {
  Mesh m = shapes::unit_cube();
  m.faces.push_back({0, 0, 1});
  m.face_groups.push_back(6);
  m.faces.push_back({0, 1, 1});
  m.face_groups.push_back(7);
  CHECK(clean_mesh(m) == 2);
  CHECK(m.faces.size() == 12);
  CHECK(m.group_count() == 6);
  Mesh bad = shapes::unit_cube();
  bad.faces.push_back({0, 1, 99});
  bad.face_groups.push_back(6);
  CHECK_THROWS_AS(validate_mesh(bad), InvalidArgument);
}

TEST_CASE("similarity transform of a mesh") {
  Mesh m = shapes::unit_cube();
  m.transform(SimilarityTransform(2.0, rotation_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)));
  CHECK(m.total_area() == doctest::Approx(24.0));
  CHECK((m.centroid() - Vec3(1, 2, 3)).norm() < 1e-12);
}
