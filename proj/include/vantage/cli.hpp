// Command-line front end: project configuration and the pipeline commands.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vantage/learn.hpp"
#include "vantage/recommend.hpp"

namespace vantage {

/// Every setting a command can read. Fields map one-to-one onto long
/// command-line flags and config-file keys (underscores become dashes on
/// the command line).
struct ProjectConfig {
  std::filesystem::path mesh;
  std::filesystem::path images;
  std::filesystem::path sfm;
  std::filesystem::path correspondences;
  std::filesystem::path labels;
  std::filesystem::path cameras;
  std::filesystem::path features;
  std::filesystem::path model;
  std::filesystem::path out;

  double epsilon = 0.01;
  double c_v = 4.0;
  double c_g = 4.0;
  double d = 0.1;
  /// "median" or "fixed" (then gamma_v and gamma_g are used).
  std::string gamma_mode = "median";
  double gamma_v = 1.0;
  double gamma_g = 1.0;
  int folds = 10;
  /// svm2k, image or geometry.
  std::string learner = "svm2k";

  int k = 9;

  int grid_theta = 64;
  int grid_phi = 16;
  double phi_min = 0.0;
  double phi_max = kPi / 4.0;
  double radius_factor = 2.5;
  int frame_size = 512;
  int heatmap_width = 512;
  int heatmap_height = 121;
  std::size_t top_k = 5;
  /// Model up axis in mesh coordinates.
  std::vector<double> up{0.0, 1.0, 0.0};

  /// Image size for Bundler input, which does not store it.
  int bundler_width = 0;
  int bundler_height = 0;

  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Throws InvalidArgument naming the first out-of-range field.
  void validate() const;
  Svm2kParams svm2k_params() const;
  Vec3 up_axis() const;
  GridSpec grid_spec() const;
};

/// Runs `vantage <command> ...`. Returns 0 on success, 1 on a runtime or
/// convergence failure, 2 on a usage or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vantage
