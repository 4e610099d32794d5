#include "vantage/feat2d.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

std::mutex fftw_planner_mutex;

double entropy(const std::vector<double>& p) {
  double e = 0.0;
  for (double v : p)
    if (v > 0.0) e -= v * std::log(v);
  return e;
}

void normalize_histogram(std::vector<double>& h) {
  const double total = std::accumulate(h.begin(), h.end(), 0.0);
  if (total > 0.0)
    for (auto& v : h) v /= total;
}

struct Hsv {
  double h;  // degrees in [0, 360)
  double s;
  double v;
};

Hsv to_hsv(const Eigen::Vector3d& rgb) {
  const double mx = rgb.maxCoeff();
  const double mn = rgb.minCoeff();
  const double c = mx - mn;
  Hsv out{0.0, mx > 0.0 ? c / mx : 0.0, mx};
  if (c > 0.0) {
    double h;
    if (mx == rgb[0])
      h = std::fmod((rgb[1] - rgb[2]) / c, 6.0);
    else if (mx == rgb[1])
      h = (rgb[2] - rgb[0]) / c + 2.0;
    else
      h = (rgb[0] - rgb[1]) / c + 4.0;
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

int bin_of(double v, int bins) {
  return std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
}

struct Gradient {
  GrayImage gx;
  GrayImage gy;
};

Gradient sobel(const GrayImage& g) {
  Gradient out{GrayImage(g.width, g.height), GrayImage(g.width, g.height)};
  auto px = [&](int x, int y) {
    return g.at(std::clamp(x, 0, g.width - 1), std::clamp(y, 0, g.height - 1));
  };
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      out.gx.at(x, y) = ((px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                         (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1))) /
                        8.0;
      out.gy.at(x, y) = ((px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                         (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1))) /
                        8.0;
    }
  return out;
}

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

}  // namespace

std::array<double, 5> color_features(const Image& img) {
  std::vector<double> hist(512, 0.0);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Vector3d c = img.at(x, y);
      hist[64 * bin_of(c[0], 8) + 8 * bin_of(c[1], 8) + bin_of(c[2], 8)] += 1.0;
      mean += c;
    }
  normalize_histogram(hist);
  mean /= static_cast<double>(img.pixel_count());
  double sq = 0.0;
  for (double p : hist) sq += p * p;
  return {entropy(hist), 1.0 - sq, mean[0], mean[1], mean[2]};
}

std::array<double, 2> brightness_contrast(const Image& img) {
  const GrayImage lum = img.luminance();
  std::vector<std::size_t> hist(256, 0);
  double sum = 0.0;
  for (double l : lum.data) {
    sum += l;
    hist[std::clamp(static_cast<int>(std::lround(l * 255.0)), 0, 255)]++;
  }
  const double n = static_cast<double>(lum.size());
  const double need = 0.98 * n - 1e-9;
  int best = 255;
  std::size_t acc = 0;
  for (int lo = 0, hi = 0; hi < 256; ++hi) {
    acc += hist[hi];
    while (lo < hi && static_cast<double>(acc - hist[lo]) >= need) acc -= hist[lo++];
    if (static_cast<double>(acc) >= need) best = std::min(best, hi - lo);
  }
  return {sum / n, best / 255.0};
}

double blur_degree(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  const int wc = w / 2 + 1;
  const GrayImage lum = img.luminance();
  double* in = fftw_alloc_real(static_cast<std::size_t>(w) * h);
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(wc) * h);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    plan = fftw_plan_dft_r2c_2d(h, w, in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < lum.size(); ++i) in[i] = 255.0 * lum.data[i];
  fftw_execute(plan);

  const double norm = std::sqrt(static_cast<double>(w) * h);
  const double threshold = 5.0;
  std::size_t count = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < wc; ++u) {
      const fftw_complex& c = out[static_cast<std::size_t>(v) * wc + u];
      if (std::hypot(c[0], c[1]) / norm <= threshold) continue;
      // Columns other than 0 and w/2 stand for a conjugate pair.
      const bool self_conjugate = u == 0 || (w % 2 == 0 && u == w / 2);
      count += self_conjugate ? 1 : 2;
    }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return 1.0 - static_cast<double>(count) / (static_cast<double>(w) * h);
}

std::vector<double> hsv_features(const Image& img) {
  std::vector<double> hue(20, 0.0), sat(20, 0.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Hsv c = to_hsv(img.at(x, y));
      sat[bin_of(c.s, 20)] += 1.0;
      if (c.s > 0.2 && c.v >= 0.15 && c.v <= 0.95) hue[bin_of(c.h / 360.0, 20)] += 1.0;
    }
  normalize_histogram(hue);
  normalize_histogram(sat);
  const double peak = *std::max_element(hue.begin(), hue.end());
  double count = 0.0;
  if (peak > 0.0)
    for (double v : hue)
      if (v >= 0.05 * peak) count += 1.0;

  std::vector<double> out;
  out.reserve(43);
  out.push_back(count);
  out.insert(out.end(), hue.begin(), hue.end());
  out.push_back(entropy(hue));
  out.insert(out.end(), sat.begin(), sat.end());
  out.push_back(entropy(sat));
  return out;
}

std::vector<double> hog_features(const Image& img) {
  constexpr int kSide = 128;
  constexpr int kBins = 9;
  const GrayImage g = resample(img.luminance(), kSide, kSide);
  std::vector<double> out(4 * kBins, 0.0);
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x) {
      double gx, gy;
      if (x == 0)
        gx = g.at(1, y) - g.at(0, y);
      else if (x == kSide - 1)
        gx = g.at(x, y) - g.at(x - 1, y);
      else
        gx = 0.5 * (g.at(x + 1, y) - g.at(x - 1, y));
      if (y == 0)
        gy = g.at(x, 1) - g.at(x, 0);
      else if (y == kSide - 1)
        gy = g.at(x, y) - g.at(x, y - 1);
      else
        gy = 0.5 * (g.at(x, y + 1) - g.at(x, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += kPi;
      if (theta >= kPi) theta -= kPi;
      const double t = theta / (kPi / kBins);
      const int k0 = static_cast<int>(std::floor(t));
      const double frac = t - k0;
      const int q = (y >= kSide / 2 ? 2 : 0) + (x >= kSide / 2 ? 1 : 0);
      out[q * kBins + k0 % kBins] += (1.0 - frac) * mag;
      out[q * kBins + (k0 + 1) % kBins] += frac * mag;
    }
  for (int q = 0; q < 4; ++q) {
    double sq = 0.0;
    for (int k = 0; k < kBins; ++k) sq += out[q * kBins + k] * out[q * kBins + k];
    const double d = std::sqrt(sq + 1e-12);
    for (int k = 0; k < kBins; ++k) out[q * kBins + k] /= d;
  }
  return out;
}

std::vector<LineSegment> detect_line_segments(const Image& img) {
  const GrayImage lum = img.luminance();
  const int w = lum.width;
  const int h = lum.height;
  const Gradient grad = sobel(lum);
  const std::size_t n = lum.size();
  constexpr double kMagThreshold = 0.02;
  constexpr double kTolerance = kPi / 8.0;
  const double min_length = std::max(10.0, 0.025 * std::min(w, h));

  std::vector<double> mag(n), angle(n);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    mag[i] = std::hypot(grad.gx.data[i], grad.gy.data[i]);
    angle[i] = std::atan2(grad.gx.data[i], -grad.gy.data[i]);
    if (mag[i] > kMagThreshold) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });

  std::vector<std::uint8_t> used(n, 0);
  std::vector<std::size_t> region;
  std::vector<LineSegment> segments;
  for (std::size_t seed : order) {
    if (used[seed]) continue;
    used[seed] = 1;
    region.assign(1, seed);
    double sc = std::cos(angle[seed]), ss = std::sin(angle[seed]);
    double region_angle = angle[seed];
    for (std::size_t k = 0; k < region.size(); ++k) {
      const int x = static_cast<int>(region[k] % w);
      const int y = static_cast<int>(region[k] / w);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (used[j] || mag[j] <= kMagThreshold) continue;
          if (angle_diff(angle[j], region_angle) > kTolerance) continue;
          used[j] = 1;
          region.push_back(j);
          sc += std::cos(angle[j]);
          ss += std::sin(angle[j]);
          region_angle = std::atan2(ss, sc);
        }
    }
    if (region.size() < 8) continue;

    double wsum = 0.0;
    Vec2 c = Vec2::Zero();
    for (std::size_t j : region) {
      c += mag[j] * Vec2(j % w + 0.5, j / w + 0.5);
      wsum += mag[j];
    }
    c /= wsum;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t j : region) {
      const Vec2 d = Vec2(j % w + 0.5, j / w + 0.5) - c;
      cov += mag[j] * d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Vec2 axis = eig.eigenvectors().col(1);
    const Vec2 normal(-axis.y(), axis.x());
    double lo = 0.0, hi = 0.0, nlo = 0.0, nhi = 0.0;
    for (std::size_t j : region) {
      const Vec2 d = Vec2(j % w + 0.5, j / w + 0.5) - c;
      lo = std::min(lo, d.dot(axis));
      hi = std::max(hi, d.dot(axis));
      nlo = std::min(nlo, d.dot(normal));
      nhi = std::max(nhi, d.dot(normal));
    }
    const double length = hi - lo;
    const double width = nhi - nlo + 1.0;
    if (length < min_length || length < 3.0 * width) continue;
    segments.push_back({c + lo * axis, c + hi * axis});
  }
  return segments;
}

VanishingResult vanishing_line_angles(const Image& img, std::uint64_t seed) {
  VanishingResult result;
  const std::vector<LineSegment> segs = detect_line_segments(img);
  const double cx = 0.5 * img.width();
  const double cy = 0.5 * img.height();
  const double s = 0.5 * std::max(img.width(), img.height());

  struct Seg {
    Vec2 mid;
    Vec2 dir;
    Eigen::Vector3d line;
    double length;
  };
  std::vector<Seg> pool;
  for (const auto& sg : segs) {
    const Vec2 a((sg.a.x() - cx) / s, (sg.a.y() - cy) / s);
    const Vec2 b((sg.b.x() - cx) / s, (sg.b.y() - cy) / s);
    Eigen::Vector3d l = Eigen::Vector3d(a.x(), a.y(), 1.0).cross(Eigen::Vector3d(b.x(), b.y(), 1.0));
    const double ln = std::hypot(l[0], l[1]);
    if (ln == 0.0) continue;
    pool.push_back({0.5 * (a + b), (b - a).normalized(), l / ln, sg.length()});
  }

  const double cos_tol = std::cos(2.0 * kPi / 180.0);
  auto is_inlier = [&](const Seg& sg, const Eigen::Vector3d& v) {
    const Vec2 d(v[0] - sg.mid.x() * v[2], v[1] - sg.mid.y() * v[2]);
    const double dn = d.norm();
    if (dn < 1e-12) return false;
    return std::abs(d.dot(sg.dir)) / dn >= cos_tol;
  };
  auto inliers_of = [&](const Eigen::Vector3d& v) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (is_inlier(pool[i], v)) in.push_back(i);
    return in;
  };
  auto weight_of = [&](const std::vector<std::size_t>& in) {
    double t = 0.0;
    for (std::size_t i : in) t += pool[i].length;
    return t;
  };

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector3d> vps;
  while (vps.size() < 3 && pool.size() >= 5) {
    const std::size_t m = pool.size();
    const std::size_t pairs = m * (m - 1) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> hyps;
    if (pairs <= 500) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) hyps.emplace_back(i, j);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      while (hyps.size() < 500) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (i != j) hyps.emplace_back(i, j);
      }
    }
    Eigen::Vector3d best_v = Eigen::Vector3d::Zero();
    std::vector<std::size_t> best_in;
    double best_w = 0.0;
    for (const auto& [i, j] : hyps) {
      Eigen::Vector3d v = pool[i].line.cross(pool[j].line);
      const double vn = v.norm();
      if (vn < 1e-12) continue;
      v /= vn;
      auto in = inliers_of(v);
      const double wgt = weight_of(in);
      if (wgt > best_w) {
        best_w = wgt;
        best_v = v;
        best_in = std::move(in);
      }
    }
    if (best_in.size() < 5) break;

    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    for (std::size_t i : best_in) a += pool[i].length * pool[i].line * pool[i].line.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
    const Eigen::Vector3d refined = eig.eigenvectors().col(0);
    auto refined_in = inliers_of(refined);
    if (refined_in.size() >= best_in.size()) {
      best_v = refined;
      best_in = std::move(refined_in);
    }

    vps.push_back(best_v);
    result.cluster_sizes.push_back(best_in.size());
    std::vector<Seg> rest;
    std::size_t k = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (k < best_in.size() && best_in[k] == i) {
        ++k;
        continue;
      }
      rest.push_back(pool[i]);
    }
    pool = std::move(rest);
  }

  for (const auto& v : vps)
    result.points.emplace_back(s * v[0] + cx * v[2], s * v[1] + cy * v[2], v[2]);
  if (vps.size() < 3) return result;

  result.degenerate = false;
  std::array<Vec2, 3> dirs;
  for (int i = 0; i < 3; ++i) {
    const Vec2 d(vps[i][0], vps[i][1]);
    dirs[i] = d.norm() > 1e-12 ? Vec2(d.normalized()) : Vec2::Zero();
  }
  int k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      result.angles[k++] = std::acos(std::clamp(std::abs(dirs[i].dot(dirs[j])), 0.0, 1.0));
  std::sort(result.angles.begin(), result.angles.end());
  return result;
}

double composition_thirds(int width, int height, const Mask& mask) {
  if (mask.width != width || mask.height != height)
    throw InvalidArgument("composition_thirds: mask size differs from image");
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (mask.at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  if (n == 0) throw InvalidArgument("composition_thirds: empty foreground mask");
  const Vec2 c(sx / n, sy / n);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j)
      best = std::min(best, (c - Vec2(width * i / 3.0, height * j / 3.0)).norm());
  const double half_diag = 0.5 * std::hypot(width, height);
  return std::clamp(1.0 - best / half_diag, 0.0, 1.0);
}

Mask saliency_mask(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  const double shrink = std::max(1.0, std::max(w, h) / 128.0);
  const int sw = std::max(1, static_cast<int>(std::lround(w / shrink)));
  const int sh = std::max(1, static_cast<int>(std::lround(h / shrink)));
  const GrayImage small = resample(img.luminance(), sw, sh);
  const GrayImage center = gaussian_blur(small, 1.0);
  const GrayImage surround = gaussian_blur(small, 0.25 * std::min(sw, sh));

  GrayImage diff(sw, sh);
  double peak = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff.data[i] = std::abs(center.data[i] - surround.data[i]);
    peak = std::max(peak, diff.data[i]);
  }
  Mask small_mask(sw, sh);
  if (peak > 1e-9) {
    std::vector<int> bins(diff.size());
    std::vector<double> hist(256, 0.0);
    for (std::size_t i = 0; i < diff.size(); ++i) {
      bins[i] = std::min(255, static_cast<int>(diff.data[i] / peak * 255.0));
      hist[bins[i]] += 1.0;
    }
    const double total = static_cast<double>(diff.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int threshold = 0;
    for (int t = 0; t < 256; ++t) {
      w0 += hist[t];
      sum0 += t * hist[t];
      const double w1 = total - w0;
      if (w0 == 0.0 || w1 == 0.0) continue;
      const double m0 = sum0 / w0;
      const double m1 = (sum_all - sum0) / w1;
      const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
      if (between > best) {
        best = between;
        threshold = t;
      }
    }
    for (std::size_t i = 0; i < diff.size(); ++i) small_mask.data[i] = bins[i] > threshold ? 1 : 0;
  }
  return resample(small_mask, w, h);
}

const std::vector<std::string>& Feature2D::column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"c_e", "c_d", "r_m", "g_m", "b_m",
                               "v_bright", "v_contrast", "v_blur", "h_c"};
    char buf[32];
    for (int i = 0; i < 20; ++i) {
      std::snprintf(buf, sizeof buf, "h_h%02d", i);
      n.emplace_back(buf);
    }
    n.emplace_back("h_e");
    for (int i = 0; i < 20; ++i) {
      std::snprintf(buf, sizeof buf, "s_h%02d", i);
      n.emplace_back(buf);
    }
    n.emplace_back("s_e");
    for (int q = 0; q < 4; ++q)
      for (int b = 0; b < 9; ++b) {
        std::snprintf(buf, sizeof buf, "hog_q%d_b%d", q, b);
        n.emplace_back(buf);
      }
    n.insert(n.end(), {"v_vl0", "v_vl1", "v_vl2", "v_pc"});
    return n;
  }();
  return names;
}

Feature2D extract_2d(const Image& img, const std::optional<Mask>& mask,
                     std::uint64_t seed) {
  if (img.pixel_count() == 0) throw InvalidArgument("extract_2d: empty image");
  Feature2D f;
  auto put = [&](std::size_t offset, const auto& block) {
    std::copy(block.begin(), block.end(), f.values.begin() + offset);
  };
  put(Feature2D::kColor, color_features(img));
  const auto bc = brightness_contrast(img);
  f.values[Feature2D::kBright] = bc[0];
  f.values[Feature2D::kContrast] = bc[1];
  f.values[Feature2D::kBlur] = blur_degree(img);
  put(Feature2D::kHsv, hsv_features(img));
  put(Feature2D::kHog, hog_features(img));

  const VanishingResult vl = vanishing_line_angles(img, seed);
  put(Feature2D::kVanishing, vl.angles);
  f.vanishing_degenerate = vl.degenerate;
  f.vanishing_clusters = vl.cluster_sizes.size();

  if (mask) {
    f.values[Feature2D::kThirds] = composition_thirds(img.width(), img.height(), *mask);
  } else {
    Mask fg = saliency_mask(img);
    if (fg.count() == 0) {
      fg = Mask(img.width(), img.height(), true);
      f.mask_fallback = true;
    }
    f.values[Feature2D::kThirds] = composition_thirds(img.width(), img.height(), fg);
  }
  return f;
}

}  // namespace vantage
