#include <algorithm>
#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "vantage/errors.hpp"
#include "vantage/recommend.hpp"

using namespace vantage;
using namespace vantage::testing;

namespace {

ViewpointGrid scored_grid(std::uint64_t seed) {
  ViewpointGrid g = sample_viewpoints(shapes::unit_cube());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(g.size());
  for (auto& v : s) v = u(rng);
  g.scores = s;
  g.degenerate.assign(g.size(), false);
  return g;
}

Svm2kModel small_model() {
  std::mt19937_64 rng(1);
  return train_svm2k(random_two_view(rng, 24, Feature2D::kSize, Feature3D::kSize));
}

}  // namespace

TEST_CASE("viewpoint sampling") {
  const Mesh b = shapes::building();
  const ViewpointGrid g = sample_viewpoints(b);
  REQUIRE(g.size() == 1024);
  CHECK(g.radius == doctest::Approx(2.5 * b.bounding_radius()));
  CHECK(g.radius > b.bounding_radius());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Camera& c = g.cameras[i];
    CHECK(c.width() == 512);
    CHECK(c.height() == 512);
    const SphericalCoord sc = to_spherical(c.center(), g.center, Vec3::UnitY());
    CHECK(sc.phi >= -1e-12);
    CHECK(sc.phi <= kPi / 4 + 1e-12);
    CHECK(sc.phi == doctest::Approx(g.phi_of(i)));
    // Optical axis through the centroid.
    const Vec3 to_center = g.center - c.center();
    CHECK(to_center.cross(c.forward()).norm() < 1e-9 * to_center.norm());
    CHECK(to_center.dot(c.forward()) > 0.0);
    // Image up is the model up made orthogonal to the view axis.
    CHECK(c.up().dot(Vec3::UnitY()) > 0.0);
    CHECK(std::abs(c.up().dot(c.forward())) < 1e-12);
    CHECK(std::abs(c.up().cross(c.forward()).dot(Vec3::UnitY())) < 1e-12);
  }
  CHECK(g.thetas.front() == 0.0);
  CHECK(g.thetas.back() < 2 * kPi);

  Mesh flat;
  flat.vertices = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  flat.faces = {{0, 1, 2}};
  flat.face_groups = {0};
  CHECK_THROWS_AS(sample_viewpoints(flat), DegenerateInput);
  GridSpec bad;
  bad.radius_factor = 0.5;
  CHECK_THROWS_AS(sample_viewpoints(b, bad), InvalidArgument);
}

TEST_CASE("heat map interpolation") {
  const ViewpointGrid g = scored_grid(2);
  const HeatMap h = interpolate_heatmap(g, 512, 121);
  const auto& s = *g.scores;
  for (int it = 0; it < 64; ++it)
    for (int ip = 0; ip < 16; ++ip) {
      const int x = it * 8;
      const int y = (15 - ip) * 8;
      CHECK(h.at(x, y) == s[g.index(it, ip)]);
    }
  // Every raster value stays inside its cell's corner range.
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x) {
      const int it = x / 8, ip = std::min(14, (120 - y) / 8);
      const double c[4] = {s[g.index(it, ip)], s[g.index((it + 1) % 64, ip)],
                           s[g.index(it, ip + 1)], s[g.index((it + 1) % 64, ip + 1)]};
      CHECK(h.at(x, y) >= *std::min_element(c, c + 4) - 1e-15);
      CHECK(h.at(x, y) <= *std::max_element(c, c + 4) + 1e-15);
    }
}

TEST_CASE("bilinear arithmetic") {
  ViewpointGrid g = sample_viewpoints(shapes::unit_cube());
  std::vector<double> s(g.size(), 0.0);
  for (int it = 0; it < 64; ++it) s[g.index(it, 1)] = 1.0;
  g.scores = s;
  const double dt = g.thetas[1] - g.thetas[0];
  const double dp = g.phis[1] - g.phis[0];
  CHECK(interpolate_score(g, g.thetas[5] + dt / 2, g.phis[0] + dp / 2) == doctest::Approx(0.5));
  // Wrap-around cell between the last and first longitude.
  std::vector<double> w(g.size(), 0.0);
  for (int ip = 0; ip < 16; ++ip) w[g.index(63, ip)] = 1.0;
  g.scores = w;
  CHECK(interpolate_score(g, g.thetas[63] + dt / 2, g.phis[3]) == doctest::Approx(0.5));
  CHECK(interpolate_score(g, g.thetas[63] + dt / 2 - 2 * kPi, g.phis[3]) == doctest::Approx(0.5));

  g.scores = std::vector<double>(g.size(), 0.37);
  const HeatMap h = interpolate_heatmap(g, 200, 77);
  for (double v : h.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
  const Image img = h.colorize();
  CHECK(img.width() == 200);

  g.scores.reset();
  CHECK_THROWS_AS(interpolate_heatmap(g, 10, 10), InvalidArgument);
  CHECK_THROWS_AS(interpolate_score(g, 0.0, 0.0), InvalidArgument);
}

TEST_CASE("top-k ordering") {
  ViewpointGrid g = scored_grid(3);
  const auto all = top_k(g, 1024);
  REQUIRE(all.size() == 1024);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].score >= all[i].score);
  CHECK_THROWS_AS(top_k(g, 1025), InvalidArgument);

  for (auto& v : *g.scores) v = std::min(v, 0.99);
  (*g.scores)[700] = 0.999;
  CHECK(top_k(g, 1)[0].index == 700);

  // Ties resolve by (theta, phi).
  g.scores = std::vector<double>(g.size(), 0.5);
  const auto tied = top_k(g, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(tied[i].index == i);
  const std::string csv = grid_to_csv(g);
  CHECK(csv.rfind("theta,phi,score,degenerate\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1025);
}

TEST_CASE("scoring is deterministic and bounded") {
  const Mesh b = shapes::building();
  const Svm2kModel model = small_model();
  GridSpec spec;
  spec.n_theta = 6;
  spec.n_phi = 3;
  spec.frame_size = 128;
  ViewpointGrid g1 = sample_viewpoints(b, spec);
  ViewpointGrid g2 = sample_viewpoints(b, spec);
  score_viewpoints(b, model, g1, {1, 0});
  score_viewpoints(b, model, g2, {3, 0});
  REQUIRE(g1.scores.has_value());
  CHECK(*g1.scores == *g2.scores);
  for (double s : *g1.scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  for (bool d : g1.degenerate) CHECK_FALSE(d);

  // Duplicate a viewpoint: identical score.
  ViewpointGrid dup = g1;
  dup.cameras[4] = dup.cameras[2];
  score_viewpoints(b, model, dup, {2, 0});
  CHECK((*dup.scores)[4] == (*g1.scores)[2]);
}

TEST_CASE("a view that sees nothing is flagged") {
  const Mesh b = shapes::building();
  const CurvatureField cf = curvature_field(b);
  const Svm2kModel model = small_model();
  const Vec3 c = b.centroid();
  const Camera away = Camera::look_at(Intrinsics::from_vertical_fov(128, 128, kPi / 3),
                                      c + Vec3(0, 0, 20), c + Vec3(0, 0, 40), Vec3::UnitY());
  const ViewEvaluation e = score_view(b, cf, model, away, Vec3::UnitY());
  CHECK(e.degenerate);
  CHECK(e.f3.degenerate);
  CHECK(e.f2.mask_fallback);
  CHECK(e.score > 0.0);
  CHECK(e.score < 1.0);
  const Camera toward = Camera::look_at(Intrinsics::from_vertical_fov(128, 128, kPi / 3),
                                        c + Vec3(0, 2, 12), c, Vec3::UnitY());
  CHECK_FALSE(score_view(b, cf, model, toward, Vec3::UnitY()).degenerate);
}
