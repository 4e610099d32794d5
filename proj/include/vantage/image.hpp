#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace vantage {

/// Single-channel raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return data.size(); }
};

/// Boolean raster, row-major.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
};

/// RGB raster with channels in [0,1]; writes clamp.
class Image {
 public:
  Image() = default;
  /// Throws InvalidArgument for non-positive dimensions.
  Image(int width, int height, const Eigen::Vector3d& fill = Eigen::Vector3d::Zero());

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  Eigen::Vector3d at(int x, int y) const {
    const double* p = &data_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, const Eigen::Vector3d& rgb);

  const std::vector<double>& data() const { return data_; }

  /// 0.299 R + 0.587 G + 0.114 B
  GrayImage luminance() const;

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int x, int y) const {
    return 3 * (static_cast<std::size_t>(y) * width_ + x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// PNG or JPEG (8/16-bit, gray or color).
Image load_image(const std::filesystem::path& path);
/// Format chosen by extension (.png, .jpg). Channels are quantized to 8 bits.
void save_image(const Image& image, const std::filesystem::path& path);
/// 8-bit binary PGM.
void save_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Separable area/bilinear resampling: area averaging when shrinking,
/// linear interpolation between pixel centers when enlarging.
GrayImage resample(const GrayImage& src, int width, int height);
Image resample(const Image& src, int width, int height);

/// Nearest-neighbour mask resampling.
Mask resample(const Mask& src, int width, int height);

/// Separable Gaussian blur with edge clamping.
GrayImage gaussian_blur(const GrayImage& src, double sigma);
Image gaussian_blur(const Image& src, double sigma);

}  // namespace vantage
