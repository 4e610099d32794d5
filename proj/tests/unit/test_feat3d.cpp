#include <cmath>
#include <numeric>

#include "doctest.h"
#include "vantage/errors.hpp"
#include "vantage/feat3d.hpp"

using namespace vantage;

namespace {

Intrinsics square_intrinsics(int size = 256) {
  return Intrinsics::from_vertical_fov(size, size, kPi / 3);
}

Camera look(const Vec3& eye, const Vec3& target = Vec3::Zero(), int size = 256) {
  return Camera::look_at(square_intrinsics(size), eye, target, Vec3::UnitY());
}

Feature3D features(const Mesh& m, const Camera& cam) {
  return geometric_features(m, cam, rasterize(m, cam), curvature_field(m));
}

double visible_groups(const Mesh& m, const FrameData& f) {
  std::vector<bool> seen(m.group_count(), false);
  for (auto id : f.face_id)
    if (id >= 0) seen[m.face_groups[id]] = true;
  return static_cast<double>(std::count(seen.begin(), seen.end(), true));
}

void check_ranges(const Mesh& m, const Camera& cam) {
  const FrameData frame = rasterize(m, cam);
  const auto g = geometric_features(m, cam, frame, curvature_field(m)).values;
  for (std::size_t i : {Feature3D::kArea, Feature3D::kSurface, Feature3D::kOuter,
                        Feature3D::kDepthDist}) {
    CHECK(g[i] >= 0.0);
    CHECK(g[i] <= 1.0);
  }
  CHECK(g[Feature3D::kEntropy] >= 0.0);
  CHECK(g[Feature3D::kEntropy] <= std::log(visible_groups(m, frame) + 1.0) + 1e-12);
  CHECK(g[Feature3D::kUp] >= -1.0);
  CHECK(g[Feature3D::kUp] <= 1.0);
  for (int k = 0; k < 9; ++k) {
    CHECK(g[Feature3D::kAngles + k] >= 0.0);
    CHECK(g[Feature3D::kAngles + k] <= kPi);
  }
  CHECK(g[Feature3D::kAbove] > 0.0);
  CHECK(g[Feature3D::kAbove] <= 1.0);
}

}  // namespace

TEST_CASE("curvature of a sphere") {
  for (double r : {0.5, 1.0, 3.0}) {
    const Mesh s = shapes::icosphere(r, 4);
    const CurvatureField cf = curvature_field(s);
    for (std::size_t v = 0; v < s.vertices.size(); ++v) {
      CHECK(cf.mean[v] == doctest::Approx(1.0 / r).epsilon(0.05));
      CHECK(cf.gaussian[v] == doctest::Approx(1.0 / (r * r)).epsilon(0.05));
      CHECK(cf.area[v] > 0.0);
    }
  }
}

TEST_CASE("curvature of a plane") {
  const Mesh g = shapes::grid(8, 2.0);
  const CurvatureField cf = curvature_field(g);
  int interior = 0;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    if (cf.boundary[v]) continue;
    ++interior;
    CHECK(std::abs(cf.mean[v]) < 1e-6);
    CHECK(std::abs(cf.gaussian[v]) < 1e-6);
  }
  CHECK(interior == 49);
}

TEST_CASE("Gauss-Bonnet and Voronoi areas") {
  for (const Mesh& m : {shapes::icosphere(1.0, 3), shapes::icosphere(2.5, 2), shapes::unit_cube(),
                        shapes::box(Vec3(-1, 0, -2), Vec3(3, 0.5, 1))}) {
    const CurvatureField cf = curvature_field(m);
    double total = 0.0, area = 0.0;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
      total += cf.gaussian[v] * cf.area[v];
      area += cf.area[v];
    }
    CHECK(std::abs(total - 4 * kPi) < 1e-3);
    CHECK(area == doctest::Approx(m.total_area()).epsilon(0.01));
  }
}

TEST_CASE("non-manifold edges are reported") {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}};
  m.faces = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
  m.face_groups = {0, 1, 2};
  try {
    curvature_field(m);
    FAIL("expected InvalidMesh");
  } catch (const InvalidMesh& e) {
    REQUIRE(e.offending_edges().size() == 1);
    CHECK(e.offending_edges()[0] == std::pair<int, int>(0, 1));
  }
}

TEST_CASE("orientation features") {
  // Identity extrinsics: camera axes coincide with the world axes.
  const Camera aligned(square_intrinsics(), RigidTransform(Mat3::Identity(), Vec3(0, 0, 4)));
  Mesh cube = shapes::unit_cube();
  const auto a = features(cube, aligned).values;
  const double expected[9] = {0, kPi / 2, kPi / 2, kPi / 2, 0, kPi / 2, kPi / 2, kPi / 2, 0};
  for (int k = 0; k < 9; ++k) CHECK(a[Feature3D::kAngles + k] == doctest::Approx(expected[k]));
  // Image up is -y in the camera frame.
  CHECK(a[Feature3D::kUp] == doctest::Approx(-1.0));

  const auto b = features(cube, look(Vec3(1, 2, 5))).values;
  CHECK(b[Feature3D::kUp] == doctest::Approx(std::cos(std::asin(2 / std::sqrt(30.0)))));
  const auto c = features(cube, look(Vec3(0, 0, 5))).values;
  CHECK(c[Feature3D::kUp] == doctest::Approx(1.0));
  CHECK(c[Feature3D::kPos + 1] == doctest::Approx(0.0));
  CHECK(c[Feature3D::kAbove] == doctest::Approx(std::exp(-9.0 / 8.0)));
  CHECK(above_horizon_score(3 * kPi / 8) == 1.0);
  CHECK(above_horizon_score(0.0) == doctest::Approx(0.3247).epsilon(1e-4));
}

TEST_CASE("viewpoint entropy of a single face") {
  const Mesh cube = shapes::unit_cube();
  for (double d : {1.5, 2.5, 4.0}) {
    const Camera cam = look(Vec3(0, 0, 0.5 + d));
    const FrameData f = rasterize(cube, cam);
    REQUIRE(visible_groups(cube, f) == 1.0);
    const auto g = geometric_features(cube, cam, f, curvature_field(cube)).values;
    const double p = static_cast<double>(f.covered_count()) / (f.width * f.height);
    CHECK(g[Feature3D::kArea] == p);
    CHECK(g[Feature3D::kEntropy] == doctest::Approx(-(p * std::log(p) + (1 - p) * std::log(1 - p))));
    CHECK(g[Feature3D::kSurface] == doctest::Approx(1.0 / 6.0));
  }
}

TEST_CASE("corner view against face-on view") {
  const Mesh cube = shapes::unit_cube();
  const auto face = features(cube, look(Vec3(0, 0, 3))).values;
  const auto corner = features(cube, look(Vec3(1, 1, 1).normalized() * 3)).values;
  CHECK(corner[Feature3D::kSurface] == doctest::Approx(0.5));
  CHECK(face[Feature3D::kSurface] == doctest::Approx(1.0 / 6.0));
  CHECK(corner[Feature3D::kEntropy] > face[Feature3D::kEntropy]);
}

TEST_CASE("outer vertex ratio") {
  const Mesh cube = shapes::unit_cube();
  CHECK(features(cube, look(Vec3(0, 0, 5))).values[Feature3D::kOuter] == 0.0);
  const auto away = features(cube, look(Vec3(0, 0, 5), Vec3(0, 0, 10)));
  CHECK(away.values[Feature3D::kOuter] == 1.0);
  CHECK(away.degenerate);
  CHECK(away.values[Feature3D::kArea] == 0.0);
  CHECK(away.values[Feature3D::kSurface] == 0.0);
  CHECK(away.values[Feature3D::kEntropy] == 0.0);
  CHECK(away.values[Feature3D::kSilLength] == 0.0);
  CHECK(away.values[Feature3D::kSilCurv] == 0.0);
  CHECK(away.values[Feature3D::kSilExtrema] == 0.0);
}

TEST_CASE("extract_3d is deterministic and scale free") {
  const Mesh b = shapes::building();
  const Vec3 c = b.centroid();
  const Camera cam = look(c + Vec3(6, 3, 8), c);
  const Feature3D f1 = extract_3d(b, cam);
  const Feature3D f2 = extract_3d(b, cam);
  CHECK(f1.values == f2.values);
  CHECK(f1.values.size() == 24);
  CHECK(Feature3D::column_names().size() == 24);
  for (double s : {0.5, 2.0, 3.0, 0.1}) {
    Mesh scaled = b;
    scaled.transform(SimilarityTransform(s, Mat3::Identity(), Vec3::Zero()));
    const Camera scam = look(s * (c + Vec3(6, 3, 8)), s * c);
    const Feature3D fs = extract_3d(scaled, scam);
    for (std::size_t i = 0; i < Feature3D::kSize; ++i) {
      CAPTURE(s);
      CAPTURE(Feature3D::column_names()[i]);
      CHECK(std::abs(fs.values[i] - f1.values[i]) < 1e-6);
    }
  }
}

TEST_CASE("joint rotation about the up axis") {
  const Mesh b = shapes::building();
  const Camera cam = look(Vec3(5, 3, 7), b.centroid());
  const auto ref = extract_3d(b, cam).values;
  // Quarter and half turns about +y are exact in floating point.
  const Mat3 quarter = (Mat3() << 0, 0, 1, 0, 1, 0, -1, 0, 0).finished();
  for (const Mat3& r : {quarter, Mat3(quarter * quarter), Mat3(quarter.transpose())}) {
    Mesh m = b;
    m.transform(SimilarityTransform(1.0, r, Vec3::Zero()));
    const RigidTransform e = cam.extrinsics();
    const Camera rc = cam.with_extrinsics(RigidTransform(e.rotation() * r.transpose(), e.translation()));
    const auto got = extract_3d(m, rc).values;
    for (std::size_t i = 0; i < Feature3D::kSize; ++i) {
      if (i == Feature3D::kPos || i == Feature3D::kPos + 1 || i == Feature3D::kUp ||
          (i >= Feature3D::kAngles && i < Feature3D::kAngles + 9))
        continue;
      CAPTURE(Feature3D::column_names()[i]);
      CHECK(std::abs(got[i] - ref[i]) < 1e-6);
    }
  }
}

TEST_CASE("removing an occluder never hides surface") {
  const Mesh cube = shapes::unit_cube();
  Mesh scene = cube;
  scene.append(shapes::box(Vec3(-0.3, -0.3, 1.0), Vec3(0.3, 0.3, 1.2)));
  for (const Vec3& eye : {Vec3(0, 0, 4), Vec3(1, 1, 4), Vec3(2, 0.5, 3)}) {
    const Camera cam = look(eye);
    const FrameData f = rasterize(scene, cam);
    std::vector<bool> seen(cube.faces.size(), false);
    for (auto id : f.face_id)
      if (id >= 0 && id < static_cast<std::int32_t>(cube.faces.size())) seen[id] = true;
    double visible = 0.0;
    for (std::size_t k = 0; k < cube.faces.size(); ++k)
      if (seen[k]) visible += cube.face_area(k);
    CHECK(features(cube, cam).values[Feature3D::kSurface] >= visible / cube.total_area());
  }
}

TEST_CASE("range invariants") {
  const Mesh b = shapes::building();
  for (int i = 0; i < 12; ++i) {
    const double t = i * 0.55;
    check_ranges(b, look(b.centroid() + Vec3(8 * std::sin(t), 1 + i * 0.5, 8 * std::cos(t)),
                         b.centroid()));
  }
  check_ranges(shapes::icosphere(1.0, 2), look(Vec3(0.2, 0.1, 2.5)));
}
