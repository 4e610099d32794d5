// Image features: color statistics, brightness/contrast, blur, hue and
// saturation histograms, HOG, vanishing-line angles and rule of thirds.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vantage/geomcore.hpp"
#include "vantage/image.hpp"

namespace vantage {

/// (c_e, c_d, r_m, g_m, b_m) from a 8x8x8 RGB histogram.
std::array<double, 5> color_features(const Image& img);

/// (mean luminance, width of the narrowest 98%-mass luminance interval).
std::array<double, 2> brightness_contrast(const Image& img);

/// Fraction of DFT coefficients of the 0..255 luminance whose unitary
/// magnitude |F| / sqrt(W H) is at most 5.
double blur_degree(const Image& img);

/// h_c, h_h[20], h_e, s_h[20], s_e.
std::vector<double> hsv_features(const Image& img);

/// 9 unsigned orientation bins x 4 quadrants on a 128x128 luminance copy.
/// Quadrant order: top-left, top-right, bottom-left, bottom-right.
std::vector<double> hog_features(const Image& img);

struct LineSegment {
  Vec2 a;
  Vec2 b;
  double length() const { return (b - a).norm(); }
};

/// Region-growing line segment detector on the luminance gradient.
std::vector<LineSegment> detect_line_segments(const Image& img);

struct VanishingResult {
  /// Pairwise angles in [0, pi/2] between the lines joining the image
  /// center to each vanishing point, ascending; zeros when degenerate.
  std::array<double, 3> angles{0.0, 0.0, 0.0};
  /// Homogeneous vanishing points in pixel coordinates, one per cluster.
  std::vector<Eigen::Vector3d> points;
  std::vector<std::size_t> cluster_sizes;
  /// Fewer than three clusters with at least five segments each.
  bool degenerate = true;
};

VanishingResult vanishing_line_angles(const Image& img, std::uint64_t seed = 0);

/// 1 - (distance from mask centroid to the nearest third-line
/// intersection) / (half image diagonal). Throws InvalidArgument on an
/// empty mask or size mismatch.
double composition_thirds(int width, int height, const Mask& mask);

/// Center-surround luminance saliency thresholded with Otsu's method.
Mask saliency_mask(const Image& img);

struct Feature2D {
  static constexpr std::size_t kSize = 91;
  static constexpr std::size_t kColor = 0;
  static constexpr std::size_t kBright = 5;
  static constexpr std::size_t kContrast = 6;
  static constexpr std::size_t kBlur = 7;
  static constexpr std::size_t kHsv = 8;
  static constexpr std::size_t kHog = 51;
  static constexpr std::size_t kVanishing = 87;
  static constexpr std::size_t kThirds = 90;

  std::array<double, kSize> values{};
  bool vanishing_degenerate = true;
  std::size_t vanishing_clusters = 0;
  /// The saliency mask came out empty and the whole frame was used.
  bool mask_fallback = false;

  static const std::vector<std::string>& column_names();
};

/// Full image feature block. Without a mask the foreground comes from
/// saliency_mask(), falling back to the full frame when that is empty. A
/// supplied mask must match the image size and be nonempty.
Feature2D extract_2d(const Image& img, const std::optional<Mask>& mask = std::nullopt,
                     std::uint64_t seed = 0);

}  // namespace vantage
