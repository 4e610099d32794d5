#include "fixture.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "vantage/image.hpp"
#include "vantage/io.hpp"
#include "vantage/mesh.hpp"
#include "vantage/recommend.hpp"
#include "vantage/registration.hpp"
#include "vantage/render.hpp"

namespace vantage::fixture {

namespace fs = std::filesystem;

SimilarityTransform ground_truth() {
  return SimilarityTransform(1.7, rotation_exp(Vec3(0.3, -0.5, 0.2)), Vec3(2.0, -1.0, 0.5));
}

namespace {

// Sky above the horizon row, ground below, light per-pixel noise.
Image compose_photo(const FrameData& frame, const Camera& cam, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.01);
  Image img(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      Vec3 c;
      if (frame.covered(x, y)) {
        c = frame.rgb->at(x, y);
      } else {
        // Elevation of the pixel ray decides sky or ground.
        const Vec3 ray_cam((x + 0.5 - cam.intrinsics().cx) / cam.intrinsics().fx,
                           (y + 0.5 - cam.intrinsics().cy) / cam.intrinsics().fy, 1.0);
        const Vec3 ray = cam.extrinsics().rotation().transpose() * ray_cam;
        const double s = ray.normalized().y();
        if (s > 0.0)
          c = Vec3(0.55, 0.7, 0.92) * (1.0 - 0.3 * s);
        else
          c = Vec3(0.32, 0.45, 0.22) * (1.0 + 0.3 * s);
      }
      img.set(x, y, c + Vec3(noise(rng), noise(rng), noise(rng)));
    }
  return img;
}

}  // namespace

void write(const fs::path& dir, const Options& opt) {
  fs::create_directories(dir / "photos");
  const Mesh mesh = shapes::building();
  save_obj(mesh, dir / "mesh.obj");
  const Mesh saved = load_mesh(dir / "mesh.obj");
  const Vec3 center = saved.centroid();
  const double r = saved.bounding_radius();
  const Vec3 up = Vec3::UnitY();
  const SimilarityTransform sim = ground_truth();
  const Intrinsics k = Intrinsics::from_vertical_fov(opt.width, opt.height, 50.0 * kPi / 180.0);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SfmScene scene;
  std::ostringstream labels;
  labels << "id,label\n";
  const int hotspots = 5;
  for (int i = 0; i < opt.photos; ++i) {
    const int spot = i % hotspots;
    const bool good = (i / hotspots) % 2 == 0;
    const double theta = 2.0 * kPi * spot / hotspots + 0.25 + 0.15 * (u(rng) - 0.5);
    double phi, dist;
    Vec3 target = center;
    if (good) {
      phi = 0.2 + 0.35 * u(rng);
      dist = (2.2 + 0.6 * u(rng)) * r;
    } else {
      phi = -0.05 + 0.1 * u(rng);
      dist = (1.35 + 0.25 * u(rng)) * r;
      const auto [e1, e2] = horizontal_basis(up);
      target += 0.6 * r * ((u(rng) - 0.5) * e1 + (u(rng) - 0.5) * e2) + 0.3 * r * up;
    }
    const Vec3 eye = from_spherical({dist, theta, phi}, center, up);
    const Camera cam_mesh = Camera::look_at(k, eye, target, up);

    char id[32];
    std::snprintf(id, sizeof id, "photo_%02d", i + 1);
    const FrameData frame = render_shaded(saved, cam_mesh, default_light(up));
    save_image(compose_photo(frame, cam_mesh, rng), dir / "photos" / (std::string(id) + ".png"));
    labels << id << ',' << (good ? 1 : -1) << '\n';

    // Same view expressed in the point-cloud frame.
    const Mat3 rc = cam_mesh.extrinsics().rotation() * sim.rotation().transpose();
    const Vec3 tc = sim.scale() * cam_mesh.extrinsics().translation() - rc * sim.translation();
    scene.views.push_back({id, cam_mesh.with_extrinsics(RigidTransform(rc, tc))});
  }
  scene.skipped.push_back("photo_unposed");
  for (std::size_t v = 0; v < saved.vertices.size(); ++v) {
    scene.points.push_back(sim.apply(saved.vertices[v]));
    const Vec3 c = saved.has_colors() ? saved.colors[v] : Vec3(1, 1, 1);
    scene.colors.push_back({static_cast<std::uint8_t>(std::lround(255 * c.x())),
                            static_cast<std::uint8_t>(std::lround(255 * c.y())),
                            static_cast<std::uint8_t>(std::lround(255 * c.z()))});
  }
  export_sfm(scene, dir / "sfm.json");

  std::ostringstream corr;
  corr.precision(17);
  corr << "# mesh_vertex_index x y z (point-cloud frame)\n";
  const std::size_t nv = saved.vertices.size();
  for (int j = 0; j < 10; ++j) {
    const std::size_t v = (j * nv) / 10;
    const Vec3 q = sim.apply(saved.vertices[v]);
    corr << v << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << '\n';
  }
  write_file_atomic(dir / "correspondences.txt", corr.str());
  write_file_atomic(dir / "labels.csv", labels.str());
  write_file_atomic(dir / "project.ini",
                    "# Paths are relative to the directory vantage is run from.\n"
                    "mesh = mesh.obj\n"
                    "images = photos\n"
                    "sfm = sfm.json\n"
                    "correspondences = correspondences.txt\n"
                    "labels = labels.csv\n"
                    "cameras = out/cameras.json\n"
                    "features = out/features.csv\n"
                    "model = out/model.json\n"
                    "k = 5\n"
                    "folds = 10\n"
                    "seed = 0\n");
}

}  // namespace vantage::fixture
