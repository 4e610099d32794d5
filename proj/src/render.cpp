#include "vantage/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScreenVertex {
  Vec2 p;
  double inv_z;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

bool lex_less(const Vec2& a, const Vec2& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

// Exactly antisymmetric in (a, b), so a shared edge splits pixels cleanly.
double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
  return lex_less(a, b) ? orient(a, b, p) : -orient(b, a, p);
}

bool edge_owns_zero(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return dy > 0.0 || (dy == 0.0 && dx > 0.0);
}

bool inside(double w, const Vec2& a, const Vec2& b) {
  return w > 0.0 || (w == 0.0 && edge_owns_zero(a, b));
}

// Sutherland-Hodgman against z >= z_near.
std::vector<Vec3> clip_near(const std::array<Vec3, 3>& tri, double z_near) {
  std::vector<Vec3> out;
  out.reserve(4);
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = tri[i];
    const Vec3& b = tri[(i + 1) % 3];
    const bool ain = a.z() >= z_near;
    const bool bin = b.z() >= z_near;
    if (ain) out.push_back(a);
    if (ain != bin) {
      const double s = (z_near - a.z()) / (b.z() - a.z());
      Vec3 q = a + s * (b - a);
      q.z() = z_near;
      out.push_back(q);
    }
  }
  return out;
}

void draw_triangle(FrameData& frame, std::int32_t face, ScreenVertex v0,
                   ScreenVertex v1, ScreenVertex v2) {
  double area = orient(v0.p, v1.p, v2.p);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) std::swap(v1, v2);

  const double min_x = std::min({v0.p.x(), v1.p.x(), v2.p.x()});
  const double max_x = std::max({v0.p.x(), v1.p.x(), v2.p.x()});
  const double min_y = std::min({v0.p.y(), v1.p.y(), v2.p.y()});
  const double max_y = std::max({v0.p.y(), v1.p.y(), v2.p.y()});
  const int x0 = static_cast<int>(std::max(0.0, std::floor(min_x - 0.5)));
  const int x1 = static_cast<int>(
      std::min(frame.width - 1.0, std::ceil(max_x - 0.5)));
  const int y0 = static_cast<int>(std::max(0.0, std::floor(min_y - 0.5)));
  const int y1 = static_cast<int>(
      std::min(frame.height - 1.0, std::ceil(max_y - 0.5)));

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x + 0.5, y + 0.5);
      const double w0 = edge(v1.p, v2.p, p);
      const double w1 = edge(v2.p, v0.p, p);
      const double w2 = edge(v0.p, v1.p, p);
      if (!inside(w0, v1.p, v2.p) || !inside(w1, v2.p, v0.p) ||
          !inside(w2, v0.p, v1.p))
        continue;
      const double sum = w0 + w1 + w2;
      if (!(sum > 0.0)) continue;
      const double inv_z = (w0 * v0.inv_z + w1 * v1.inv_z + w2 * v2.inv_z) / sum;
      const double z = 1.0 / inv_z;
      const std::size_t i = frame.index(x, y);
      if (z < frame.depth[i] || (z == frame.depth[i] && face < frame.face_id[i])) {
        frame.depth[i] = z;
        frame.face_id[i] = face;
      }
    }
  }
}

}  // namespace

FrameData::FrameData(int w, int h)
    : width(w),
      height(h),
      depth(static_cast<std::size_t>(w) * h, kInf),
      face_id(static_cast<std::size_t>(w) * h, -1),
      mask(w, h) {}

double SilhouettePolygon::length() const {
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  double len = 0.0;
  for (std::size_t i = 0; i < n; ++i) len += (points[(i + 1) % n] - points[i]).norm();
  return len;
}

std::vector<double> SilhouettePolygon::turning_angles() const {
  const std::size_t n = points.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = points[i] - points[(i + n - 1) % n];
    const Vec2 e2 = points[(i + 1) % n] - points[i];
    const double cross = e1.x() * e2.y() - e1.y() * e2.x();
    const double dot = e1.dot(e2);
    out[i] = (cross == 0.0 && dot < 0.0) ? kPi : std::atan2(cross, dot);
  }
  return out;
}

double SilhouettePolygon::total_turning() const {
  double s = 0.0;
  for (double a : turning_angles()) s += a;
  return s;
}

double SilhouettePolygon::signed_area() const {
  const std::size_t n = points.size();
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = points[i];
    const Vec2& q = points[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

FrameData rasterize(const Mesh& mesh, const Camera& camera) {
  if (mesh.empty()) throw InvalidArgument("rasterize: empty mesh");
  FrameData frame(camera.width(), camera.height());
  const double z_near = 1e-4 * std::max(mesh.bounding_radius(), 1e-12);

  std::vector<Vec3> pc(mesh.vertices.size());
  for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = camera.to_camera(mesh.vertices[i]);

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const std::array<Vec3, 3> tri{pc[t[0]], pc[t[1]], pc[t[2]]};
    if (tri[0].z() < z_near && tri[1].z() < z_near && tri[2].z() < z_near) continue;
    const std::vector<Vec3> poly = clip_near(tri, z_near);
    if (poly.size() < 3) continue;
    std::vector<ScreenVertex> sv(poly.size());
    for (std::size_t k = 0; k < poly.size(); ++k)
      sv[k] = {camera.project_camera_point(poly[k]), 1.0 / poly[k].z()};
    for (std::size_t k = 1; k + 1 < sv.size(); ++k)
      draw_triangle(frame, static_cast<std::int32_t>(f), sv[0], sv[k], sv[k + 1]);
  }
  for (std::size_t i = 0; i < frame.face_id.size(); ++i)
    frame.mask.data[i] = frame.face_id[i] >= 0 ? 1 : 0;
  return frame;
}

FrameData render_shaded(const Mesh& mesh, const Camera& camera,
                        const Vec3& light, double ambient) {
  FrameData frame = rasterize(mesh, camera);
  const Vec3 l = light.normalized();
  const Vec3 eye = camera.center();

  std::vector<Vec3> shade(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    Vec3 n = mesh.face_normal(f);
    const Vec3 c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    if (n.dot(eye - c) < 0.0) n = -n;
    const double intensity = ambient + (1.0 - ambient) * std::max(0.0, n.dot(l));
    Vec3 base(1.0, 1.0, 1.0);
    if (mesh.has_colors())
      base = (mesh.colors[t[0]] + mesh.colors[t[1]] + mesh.colors[t[2]]) / 3.0;
    shade[f] = intensity * base;
  }

  Image rgb(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      const std::int32_t f = frame.face_id[frame.index(x, y)];
      if (f >= 0) rgb.set(x, y, shade[f]);
    }
  frame.rgb = std::move(rgb);
  return frame;
}

std::vector<SilhouettePolygon> extract_silhouette(const Mask& mask) {
  static constexpr std::array<int, 8> dx{1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr std::array<int, 8> dy{0, 1, 1, 1, 0, -1, -1, -1};
  const int w = mask.width;
  const int h = mask.height;

  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<std::pair<int, int>> starts;
  std::vector<int> sizes;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
      const int id = static_cast<int>(starts.size());
      starts.emplace_back(x, y);
      int size = 0;
      stack.assign(1, {x, y});
      label[static_cast<std::size_t>(y) * w + x] = id;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++size;
        for (int d = 0; d < 8; ++d) {
          const int nx = cx + dx[d];
          const int ny = cy + dy[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask.at(nx, ny)) continue;
          int& l = label[static_cast<std::size_t>(ny) * w + nx];
          if (l >= 0) continue;
          l = id;
          stack.emplace_back(nx, ny);
        }
      }
      sizes.push_back(size);
    }

  auto dir_index = [](int ddx, int ddy) {
    for (int d = 0; d < 8; ++d)
      if (dx[d] == ddx && dy[d] == ddy) return d;
    return -1;
  };

  std::vector<SilhouettePolygon> out;
  for (std::size_t id = 0; id < starts.size(); ++id) {
    auto member = [&](int x, int y) {
      return x >= 0 && y >= 0 && x < w && y < h &&
             label[static_cast<std::size_t>(y) * w + x] == static_cast<int>(id);
    };
    const auto [sx, sy] = starts[id];
    SilhouettePolygon poly;
    poly.points.emplace_back(sx + 0.5, sy + 0.5);
    int cx = sx, cy = sy, back = 4;
    bool have_first = false;
    int fx = 0, fy = 0;
    const std::size_t cap = 4 * static_cast<std::size_t>(sizes[id]) + 8;
    for (std::size_t step = 0; step < cap; ++step) {
      int found = -1;
      for (int k = 1; k <= 8; ++k) {
        const int d = (back + k) % 8;
        if (member(cx + dx[d], cy + dy[d])) {
          found = d;
          break;
        }
      }
      if (found < 0) break;
      const int nx = cx + dx[found];
      const int ny = cy + dy[found];
      if (have_first && cx == sx && cy == sy && nx == fx && ny == fy) break;
      if (!have_first) {
        have_first = true;
        fx = nx;
        fy = ny;
      }
      const int prev = (found + 7) % 8;
      back = dir_index(dx[prev] - dx[found], dy[prev] - dy[found]);
      cx = nx;
      cy = ny;
      poly.points.emplace_back(cx + 0.5, cy + 0.5);
    }
    if (poly.points.size() > 1 && poly.points.back() == poly.points.front())
      poly.points.pop_back();
    if (poly.signed_area() < 0.0) std::reverse(poly.points.begin(), poly.points.end());
    out.push_back(std::move(poly));
  }
  return out;
}

GrayImage depth_image(const FrameData& frame) {
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < frame.depth.size(); ++i)
    if (frame.face_id[i] >= 0) {
      lo = std::min(lo, frame.depth[i]);
      hi = std::max(hi, frame.depth[i]);
    }
  GrayImage g(frame.width, frame.height, 1.0);
  for (std::size_t i = 0; i < frame.depth.size(); ++i)
    if (frame.face_id[i] >= 0) g.data[i] = hi > lo ? (frame.depth[i] - lo) / (hi - lo) : 0.0;
  return g;
}

void save_depth_pgm(const FrameData& frame, const std::filesystem::path& path) {
  save_pgm(depth_image(frame), path);
}

void save_rgb_png(const FrameData& frame, const std::filesystem::path& path) {
  if (!frame.rgb) throw InvalidArgument("frame has no rgb buffer");
  save_image(*frame.rgb, path);
}

}  // namespace vantage
