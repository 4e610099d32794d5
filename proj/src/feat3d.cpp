#include "vantage/feat3d.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

double corner_angle(const Vec3& at, const Vec3& a, const Vec3& b) {
  const Vec3 u = a - at;
  const Vec3 v = b - at;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double cot_at(const Vec3& at, const Vec3& a, const Vec3& b) {
  const Vec3 u = a - at;
  const Vec3 v = b - at;
  return u.dot(v) / u.cross(v).norm();
}

}  // namespace

CurvatureField curvature_field(const Mesh& mesh) {
  const std::size_t nv = mesh.vertices.size();
  std::map<std::pair<int, int>, int> edge_faces;
  for (const auto& t : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      edge_faces[{std::min(a, b), std::max(a, b)}]++;
    }
  std::vector<std::pair<int, int>> bad;
  CurvatureField cf;
  cf.boundary.assign(nv, false);
  for (const auto& [e, count] : edge_faces) {
    if (count > 2) bad.push_back(e);
    if (count == 1) cf.boundary[e.first] = cf.boundary[e.second] = true;
  }
  if (!bad.empty())
    throw InvalidMesh("mesh has " + std::to_string(bad.size()) + " non-manifold edge(s)",
                      bad);

  std::vector<Vec3> lap(nv, Vec3::Zero());
  std::vector<double> angle_sum(nv, 0.0);
  cf.area.assign(nv, 0.0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const std::array<Vec3, 3> p{mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
    const double area = mesh.face_area(f);
    std::array<double, 3> ang{}, cot{};
    for (int k = 0; k < 3; ++k) {
      ang[k] = corner_angle(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
      cot[k] = cot_at(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
      angle_sum[t[k]] += ang[k];
    }
    for (int k = 0; k < 3; ++k) {
      // Corner k faces edge (i, j).
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      lap[t[i]] += cot[k] * (p[i] - p[j]);
      lap[t[j]] += cot[k] * (p[j] - p[i]);
    }
    const bool obtuse = ang[0] > kPi / 2 || ang[1] > kPi / 2 || ang[2] > kPi / 2;
    for (int k = 0; k < 3; ++k) {
      double a;
      if (!obtuse) {
        const int i = (k + 1) % 3, j = (k + 2) % 3;
        a = ((p[k] - p[i]).squaredNorm() * cot[j] + (p[k] - p[j]).squaredNorm() * cot[i]) /
            8.0;
      } else {
        a = ang[k] > kPi / 2 ? area / 2.0 : area / 4.0;
      }
      cf.area[t[k]] += a;
    }
  }

  cf.mean.assign(nv, 0.0);
  cf.gaussian.assign(nv, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (cf.boundary[v] || cf.area[v] <= 0.0) continue;
    cf.mean[v] = lap[v].norm() / (4.0 * cf.area[v]);
    cf.gaussian[v] = (2.0 * kPi - angle_sum[v]) / cf.area[v];
  }
  return cf;
}

double above_horizon_score(double phi) {
  const double d = phi - 3.0 * kPi / 8.0;
  const double s = kPi / 4.0;
  return std::exp(-d * d / (2.0 * s * s));
}

const std::vector<std::string>& Feature3D::column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"g_mc",  "g_gc",  "g_md",  "g_dd",        "g_area",
                               "g_surface", "g_ve", "g_outer", "g_sl", "g_sc",
                               "g_sce", "g_pos_theta", "g_pos_phi", "g_ut"};
    const char* axes[] = {"x", "y", "z"};
    for (const char* m : axes)
      for (const char* c : axes) n.push_back(std::string("g_angle_") + m + "m_" + c + "c");
    n.emplace_back("g_ap");
    return n;
  }();
  return names;
}

Feature3D geometric_features(const Mesh& mesh, const Camera& camera,
                             const FrameData& frame, const CurvatureField& curv,
                             const Vec3& model_up) {
  Feature3D out;
  auto& g = out.values;
  const double radius = mesh.bounding_radius();
  const Vec3 center = mesh.centroid();
  const Vec3 eye = camera.center();
  const double total_pixels = static_cast<double>(frame.width) * frame.height;

  std::vector<std::size_t> face_pixels(mesh.faces.size(), 0);
  std::vector<double> depths;
  depths.reserve(frame.covered_count());
  for (std::size_t i = 0; i < frame.face_id.size(); ++i)
    if (frame.face_id[i] >= 0) {
      face_pixels[frame.face_id[i]]++;
      depths.push_back(frame.depth[i]);
    }
  out.degenerate = depths.empty();

  if (!depths.empty()) {
    // Curvature over vertices of visible faces, Voronoi-area weighted.
    std::vector<bool> seen(mesh.vertices.size(), false);
    double wsum = 0.0, hsum = 0.0, ksum = 0.0;
    double visible_area = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      if (face_pixels[f] == 0) continue;
      visible_area += mesh.face_area(f);
      for (int k = 0; k < 3; ++k) {
        const int v = mesh.faces[f][k];
        if (seen[v]) continue;
        seen[v] = true;
        wsum += curv.area[v];
        hsum += curv.area[v] * std::abs(curv.mean[v]);
        ksum += curv.area[v] * std::abs(curv.gaussian[v]);
      }
    }
    if (wsum > 0.0) {
      g[Feature3D::kMeanCurv] = hsum / wsum * radius;
      g[Feature3D::kGaussCurv] = ksum / wsum * radius * radius;
    }

    const auto [dmin_it, dmax_it] = std::minmax_element(depths.begin(), depths.end());
    const double dmin = *dmin_it, dmax = *dmax_it;
    g[Feature3D::kMaxDepth] = dmax / ((eye - center).norm() + radius);
    std::array<double, 16> hist{};
    for (double d : depths) {
      int b = dmax > dmin ? static_cast<int>((d - dmin) / (dmax - dmin) * 16.0) : 0;
      hist[std::clamp(b, 0, 15)] += 1.0;
    }
    double e = 0.0;
    for (double c : hist)
      if (c > 0.0) {
        const double p = c / depths.size();
        e -= p * std::log(p);
      }
    g[Feature3D::kDepthDist] = e / std::log(16.0);

    g[Feature3D::kArea] = depths.size() / total_pixels;
    const double total_area = mesh.total_area();
    g[Feature3D::kSurface] = total_area > 0.0 ? visible_area / total_area : 0.0;

    std::vector<double> group_pixels(std::max(mesh.group_count(), 1), 0.0);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      const int grp = mesh.face_groups.empty() ? static_cast<int>(f) : mesh.face_groups[f];
      if (grp >= static_cast<int>(group_pixels.size())) group_pixels.resize(grp + 1, 0.0);
      group_pixels[grp] += static_cast<double>(face_pixels[f]);
    }
    double ve = 0.0;
    const double background = total_pixels - static_cast<double>(depths.size());
    for (double a : group_pixels)
      if (a > 0.0) ve -= a / total_pixels * std::log(a / total_pixels);
    if (background > 0.0) ve -= background / total_pixels * std::log(background / total_pixels);
    g[Feature3D::kEntropy] = ve;

    double length = 0.0, turning = 0.0;
    std::size_t extrema = 0, vertices = 0;
    for (const auto& poly : extract_silhouette(frame.mask)) {
      length += poly.length();
      const auto tau = poly.turning_angles();
      const std::size_t n = tau.size();
      vertices += n;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(tau[i]);
        turning += a;
        if (n < 3) continue;
        const double prev = std::abs(tau[(i + n - 1) % n]);
        const double next = std::abs(tau[(i + 1) % n]);
        if (a > 0.2 && a > prev && a >= next) ++extrema;
      }
    }
    g[Feature3D::kSilLength] = length / (2.0 * (frame.width + frame.height));
    g[Feature3D::kSilCurv] = length > 0.0 ? turning / length : 0.0;
    g[Feature3D::kSilExtrema] = vertices > 0 ? static_cast<double>(extrema) / vertices : 0.0;
  }

  std::size_t outside = 0;
  for (const auto& v : mesh.vertices) {
    const Vec3 pc = camera.to_camera(v);
    if (pc.z() <= 0.0) {
      ++outside;
      continue;
    }
    const Vec2 px = camera.project_camera_point(pc);
    if (!(px.x() >= 0.0 && px.x() < frame.width && px.y() >= 0.0 && px.y() < frame.height))
      ++outside;
  }
  g[Feature3D::kOuter] = mesh.vertices.empty()
                             ? 0.0
                             : static_cast<double>(outside) / mesh.vertices.size();

  const Vec3 up = model_up.normalized();
  const SphericalCoord sc = to_spherical(eye, center, up);
  g[Feature3D::kPos] = sc.theta;
  g[Feature3D::kPos + 1] = sc.phi;
  g[Feature3D::kUp] = std::clamp(camera.up().dot(up), -1.0, 1.0);
  const Mat3& r = camera.extrinsics().rotation();
  for (int m = 0; m < 3; ++m)
    for (int c = 0; c < 3; ++c)
      g[Feature3D::kAngles + 3 * m + c] = std::acos(std::clamp(r(c, m), -1.0, 1.0));
  g[Feature3D::kAbove] = above_horizon_score(sc.phi);
  return out;
}

Feature3D extract_3d(const Mesh& mesh, const Camera& camera, const CurvatureField& curv,
                     const Vec3& model_up, int frame_size) {
  const Camera cam = camera.with_resolution(frame_size, frame_size);
  const FrameData frame = rasterize(mesh, cam);
  return geometric_features(mesh, cam, frame, curv, model_up);
}

Feature3D extract_3d(const Mesh& mesh, const Camera& camera, const Vec3& model_up,
                     int frame_size) {
  return extract_3d(mesh, camera, curvature_field(mesh), model_up, frame_size);
}

}  // namespace vantage
