#include "vantage/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

struct Tap {
  int index;
  double weight;
};

// Per-output-sample source taps along one axis.
std::vector<std::vector<Tap>> axis_taps(int n_in, int n_out) {
  std::vector<std::vector<Tap>> taps(n_out);
  const double s = static_cast<double>(n_in) / n_out;
  for (int o = 0; o < n_out; ++o) {
    if (n_out <= n_in) {
      const double lo = o * s;
      const double hi = (o + 1) * s;
      for (int i = static_cast<int>(std::floor(lo));
           i < std::min(n_in, static_cast<int>(std::ceil(hi))); ++i) {
        const double w = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
        if (w > 0.0) taps[o].push_back({i, w / s});
      }
    } else {
      const double x = std::clamp((o + 0.5) * s - 0.5, 0.0, n_in - 1.0);
      const int i0 = static_cast<int>(std::floor(x));
      const double f = x - i0;
      if (i0 + 1 < n_in && f > 0.0) {
        taps[o].push_back({i0, 1.0 - f});
        taps[o].push_back({i0 + 1, f});
      } else {
        taps[o].push_back({i0, 1.0});
      }
    }
  }
  return taps;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable filter over `channels` interleaved planes. Taps sum to one;
// accumulating offsets from the first tap keeps constant regions exact.
std::vector<double> separable(const std::vector<double>& src, int w, int h,
                              int channels,
                              const std::vector<std::vector<Tap>>& tx,
                              const std::vector<std::vector<Tap>>& ty,
                              int out_w, int out_h) {
  auto apply = [channels](const std::vector<Tap>& taps, auto&& sample, double* dst) {
    for (int c = 0; c < channels; ++c) {
      const double base = sample(taps[0].index, c);
      double acc = 0.0;
      for (std::size_t k = 1; k < taps.size(); ++k)
        acc += taps[k].weight * (sample(taps[k].index, c) - base);
      dst[c] = base + acc;
    }
  };
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * h * channels, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < out_w; ++x)
      apply(tx[x],
            [&](int i, int c) {
              return src[(static_cast<std::size_t>(y) * w + i) * channels + c];
            },
            &tmp[(static_cast<std::size_t>(y) * out_w + x) * channels]);
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h * channels, 0.0);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      apply(ty[y],
            [&](int i, int c) {
              return tmp[(static_cast<std::size_t>(i) * out_w + x) * channels + c];
            },
            &out[(static_cast<std::size_t>(y) * out_w + x) * channels]);
  return out;
}

std::vector<std::vector<Tap>> blur_taps(int n, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<std::vector<Tap>> taps(n);
  for (int o = 0; o < n; ++o)
    for (int i = -radius; i <= radius; ++i)
      taps[o].push_back({std::clamp(o + i, 0, n - 1), k[i + radius]});
  return taps;
}

}  // namespace

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1));
}

Image::Image(int width, int height, const Eigen::Vector3d& fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0)
    throw InvalidArgument("Image: dimensions must be positive");
  data_.resize(3 * pixel_count());
  for (std::size_t i = 0; i < pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) data_[3 * i + c] = std::clamp(fill[c], 0.0, 1.0);
}

void Image::set(int x, int y, const Eigen::Vector3d& rgb) {
  double* p = &data_[index(x, y)];
  for (int c = 0; c < 3; ++c) p[c] = std::clamp(rgb[c], 0.0, 1.0);
}

GrayImage Image::luminance() const {
  GrayImage g(width_, height_);
  for (std::size_t i = 0; i < pixel_count(); ++i)
    g.data[i] = 0.299 * data_[3 * i] + 0.587 * data_[3 * i + 1] +
                0.114 * data_[3 * i + 2];
  return g;
}

Image load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR | cv::IMREAD_ANYDEPTH);
  if (m.empty()) throw IoError("cannot read image " + path.string());
  double scale = 1.0 / 255.0;
  if (m.depth() == CV_16U) scale = 1.0 / 65535.0;
  cv::Mat f;
  m.convertTo(f, CV_64FC3, scale);
  Image img(f.cols, f.rows);
  for (int y = 0; y < f.rows; ++y) {
    const cv::Vec3d* row = f.ptr<cv::Vec3d>(y);
    for (int x = 0; x < f.cols; ++x)
      img.set(x, y, Eigen::Vector3d(row[x][2], row[x][1], row[x][0]));
  }
  return img;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  cv::Mat m(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Eigen::Vector3d c = image.at(x, y);
      for (int k = 0; k < 3; ++k)
        row[x][2 - k] = static_cast<unsigned char>(std::lround(255.0 * c[k]));
    }
  }
  if (!cv::imwrite(path.string(), m))
    throw IoError("cannot write image " + path.string());
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.data)
    out.put(static_cast<char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
  if (!out) throw IoError("failed writing " + path.string());
}

GrayImage resample(const GrayImage& src, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resample: bad size");
  if (width == src.width && height == src.height) return src;
  GrayImage out(width, height);
  out.data = separable(src.data, src.width, src.height, 1,
                       axis_taps(src.width, width), axis_taps(src.height, height),
                       width, height);
  return out;
}

Image resample(const Image& src, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resample: bad size");
  if (width == src.width() && height == src.height()) return src;
  const auto data = separable(src.data(), src.width(), src.height(), 3,
                              axis_taps(src.width(), width),
                              axis_taps(src.height(), height), width, height);
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
      out.set(x, y, Eigen::Vector3d(data[i], data[i + 1], data[i + 2]));
    }
  return out;
}

Mask resample(const Mask& src, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resample: bad size");
  if (width == src.width && height == src.height) return src;
  Mask out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(src.height - 1, static_cast<int>((y + 0.5) * src.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(src.width - 1, static_cast<int>((x + 0.5) * src.width / width));
      out.set(x, y, src.at(sx, sy));
    }
  }
  return out;
}

GrayImage gaussian_blur(const GrayImage& src, double sigma) {
  if (!(sigma > 0.0)) return src;
  const auto k = gaussian_kernel(sigma);
  GrayImage out(src.width, src.height);
  out.data = separable(src.data, src.width, src.height, 1,
                       blur_taps(src.width, k), blur_taps(src.height, k),
                       src.width, src.height);
  return out;
}

Image gaussian_blur(const Image& src, double sigma) {
  if (!(sigma > 0.0)) return src;
  const auto k = gaussian_kernel(sigma);
  const auto data = separable(src.data(), src.width(), src.height(), 3,
                              blur_taps(src.width(), k), blur_taps(src.height(), k),
                              src.width(), src.height());
  Image out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * src.width() + x);
      out.set(x, y, Eigen::Vector3d(data[i], data[i + 1], data[i + 2]));
    }
  return out;
}

}  // namespace vantage
