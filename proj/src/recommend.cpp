#include "vantage/recommend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "vantage/errors.hpp"
#include "vantage/render.hpp"

namespace vantage {

ViewpointGrid sample_viewpoints(const Mesh& mesh, const GridSpec& spec) {
  if (mesh.empty()) throw DegenerateInput("sample_viewpoints: empty mesh");
  if (spec.n_theta < 1 || spec.n_phi < 2 || !(spec.phi_max > spec.phi_min) ||
      spec.phi_min <= -kPi / 2 || spec.phi_max >= kPi / 2 || !(spec.radius_factor > 1.0) ||
      spec.frame_size < 1)
    throw InvalidArgument("sample_viewpoints: invalid grid specification");
  const double r = mesh.bounding_radius();
  if (!(r > 0.0)) throw DegenerateInput("sample_viewpoints: mesh has zero extent");

  ViewpointGrid g;
  g.spec = spec;
  g.center = mesh.centroid();
  g.radius = spec.radius_factor * r;
  for (int i = 0; i < spec.n_theta; ++i) g.thetas.push_back(2.0 * kPi * i / spec.n_theta);
  for (int j = 0; j < spec.n_phi; ++j)
    g.phis.push_back(spec.phi_min + (spec.phi_max - spec.phi_min) * j / (spec.n_phi - 1));
  const Intrinsics k =
      Intrinsics::from_vertical_fov(spec.frame_size, spec.frame_size, spec.vertical_fov);
  const Vec3 up = spec.up.normalized();
  for (double th : g.thetas)
    for (double ph : g.phis) {
      const Vec3 eye = from_spherical({g.radius, th, ph}, g.center, up);
      g.cameras.push_back(Camera::look_at(k, eye, g.center, up));
    }
  g.degenerate.assign(g.cameras.size(), false);
  return g;
}

Vec3 default_light(const Vec3& up) {
  const auto [e1, e2] = horizontal_basis(up);
  return (0.4 * e1 + 1.0 * up.normalized() + 0.3 * e2).normalized();
}

ViewEvaluation evaluate_view(const Mesh& mesh, const CurvatureField& curv,
                             const Camera& camera, const Vec3& up, std::uint64_t seed) {
  ViewEvaluation ev;
  const FrameData frame = render_shaded(mesh, camera, default_light(up));
  ev.degenerate = frame.covered_count() == 0;
  Mask mask = frame.mask;
  if (ev.degenerate) std::fill(mask.data.begin(), mask.data.end(), std::uint8_t{1});
  ev.f2 = extract_2d(*frame.rgb, mask, seed);
  ev.f2.mask_fallback = ev.degenerate;
  ev.f3 = geometric_features(mesh, camera, frame, curv, up);
  return ev;
}

ViewEvaluation score_view(const Mesh& mesh, const CurvatureField& curv,
                          const Svm2kModel& model, const Camera& camera, const Vec3& up,
                          std::uint64_t seed) {
  ViewEvaluation ev = evaluate_view(mesh, curv, camera, up, seed);
  const VectorXd v = Eigen::Map<const VectorXd>(ev.f2.values.data(), Feature2D::kSize);
  const VectorXd g = Eigen::Map<const VectorXd>(ev.f3.values.data(), Feature3D::kSize);
  ev.f = model.outputs(v, g).f();
  ev.score = score(ev.f);
  return ev;
}

void score_viewpoints(const Mesh& mesh, const Svm2kModel& model, ViewpointGrid& grid,
                      const ScoreOptions& options) {
  const CurvatureField curv = curvature_field(mesh);
  std::vector<double> scores(grid.size(), 0.0);
  std::vector<char> degenerate(grid.size(), 0);
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max<std::size_t>(grid.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        const ViewEvaluation ev =
            score_view(mesh, curv, model, grid.cameras[i], grid.spec.up, options.seed);
        scores[i] = ev.score;
        degenerate[i] = ev.degenerate;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = grid.size();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  grid.scores = std::move(scores);
  grid.degenerate.assign(degenerate.begin(), degenerate.end());
}

namespace {

// Bilinear value at fractional grid coordinates (u along theta, v along
// phi); exact at integer coordinates.
double bilinear(const ViewpointGrid& grid, double u, double v) {
  const auto& s = *grid.scores;
  const int nt = grid.spec.n_theta, np = grid.spec.n_phi;
  const int i0 = std::min(static_cast<int>(u), nt - 1);
  const int j0 = std::min(static_cast<int>(v), np - 2);
  const double fu = u - i0, fv = v - j0;
  const int i1 = (i0 + 1) % nt;
  const double s00 = s[grid.index(i0, j0)];
  if (fu == 0.0 && fv == 0.0) return s00;
  const double s10 = s[grid.index(i1, j0)];
  const double s01 = s[grid.index(i0, j0 + 1)], s11 = s[grid.index(i1, j0 + 1)];
  return (1.0 - fv) * ((1.0 - fu) * s00 + fu * s10) + fv * ((1.0 - fu) * s01 + fu * s11);
}

}  // namespace

double interpolate_score(const ViewpointGrid& grid, double theta, double phi) {
  if (!grid.scores) throw InvalidArgument("heat map: grid has no scores");
  const int nt = grid.spec.n_theta, np = grid.spec.n_phi;
  double u = theta / (2.0 * kPi) * nt;
  u -= nt * std::floor(u / nt);
  const double v = (phi - grid.spec.phi_min) / (grid.spec.phi_max - grid.spec.phi_min) * (np - 1);
  return bilinear(grid, u, std::clamp(v, 0.0, static_cast<double>(np - 1)));
}

HeatMap interpolate_heatmap(const ViewpointGrid& grid, int width, int height) {
  if (!grid.scores) throw InvalidArgument("heat map: grid has no scores");
  if (width < 1 || height < 2) throw InvalidArgument("heat map: invalid resolution");
  HeatMap h;
  h.width = width;
  h.height = height;
  h.values.resize(static_cast<std::size_t>(width) * height);
  const int nt = grid.spec.n_theta, np = grid.spec.n_phi;
  for (int y = 0; y < height; ++y) {
    // Computed from integers so that nodes are hit exactly.
    const double v = static_cast<double>(height - 1 - y) * (np - 1) / (height - 1);
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) * nt / width;
      h.values[static_cast<std::size_t>(y) * width + x] = bilinear(grid, u, v);
    }
  }
  return h;
}

Image HeatMap::colorize() const {
  Image img(width, height);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  // Blue -> cyan -> green -> yellow -> red.
  static const Vec3 stops[] = {{0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double t = span > 0.0 ? (at(x, y) - lo) / span : 0.5;
      const double pos = std::clamp(t, 0.0, 1.0) * 4.0;
      const int k = std::min(static_cast<int>(pos), 3);
      const double f = pos - k;
      img.set(x, y, (1.0 - f) * stops[k] + f * stops[k + 1]);
    }
  return img;
}

std::vector<RankedView> top_k(const ViewpointGrid& grid, std::size_t k) {
  if (!grid.scores) throw InvalidArgument("top_k: grid has no scores");
  if (k > grid.size())
    throw InvalidArgument("top_k: k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(grid.size()) + " viewpoints");
  std::vector<RankedView> all;
  all.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    all.push_back({i, grid.theta_of(i), grid.phi_of(i), (*grid.scores)[i]});
  std::stable_sort(all.begin(), all.end(), [](const RankedView& a, const RankedView& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.phi < b.phi;
  });
  all.resize(k);
  return all;
}

std::string grid_to_csv(const ViewpointGrid& grid) {
  if (!grid.scores) throw InvalidArgument("grid_to_csv: grid has no scores");
  std::ostringstream os;
  os.precision(17);
  os << "theta,phi,score,degenerate\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    os << grid.theta_of(i) << ',' << grid.phi_of(i) << ',' << (*grid.scores)[i] << ','
       << (grid.degenerate[i] ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace vantage
