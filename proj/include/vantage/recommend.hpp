// Viewpoint sampling around a model, batch scoring with a trained model,
// heat maps and top-k recommendation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vantage/feat2d.hpp"
#include "vantage/feat3d.hpp"
#include "vantage/geomcore.hpp"
#include "vantage/image.hpp"
#include "vantage/learn.hpp"
#include "vantage/mesh.hpp"

namespace vantage {

struct GridSpec {
  int n_theta = 64;
  int n_phi = 16;
  double phi_min = 0.0;
  double phi_max = kPi / 4.0;
  /// Camera distance as a multiple of the bounding radius (must exceed 1).
  double radius_factor = 2.5;
  int frame_size = 512;
  double vertical_fov = kPi / 3.0;
  Vec3 up = Vec3::UnitY();
};

/// Samples indexed theta-major: index = i_theta * n_phi + i_phi.
struct ViewpointGrid {
  GridSpec spec;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  std::vector<double> thetas;  ///< i * 2pi / n_theta
  std::vector<double> phis;    ///< phi_min + j (phi_max - phi_min) / (n_phi - 1)
  std::vector<Camera> cameras;
  std::optional<std::vector<double>> scores;
  std::vector<bool> degenerate;

  std::size_t size() const { return cameras.size(); }
  std::size_t index(int i_theta, int i_phi) const {
    return static_cast<std::size_t>(i_theta) * spec.n_phi + i_phi;
  }
  double theta_of(std::size_t idx) const { return thetas[idx / spec.n_phi]; }
  double phi_of(std::size_t idx) const { return phis[idx % spec.n_phi]; }
};

/// Cameras on a sphere around the mesh centroid, each aimed at it with
/// image up following `spec.up`. Throws DegenerateInput for a mesh with
/// zero extent and InvalidArgument for an invalid spec.
ViewpointGrid sample_viewpoints(const Mesh& mesh, const GridSpec& spec = {});

/// Fixed world-space light used for every rendered view.
Vec3 default_light(const Vec3& up);

struct ViewEvaluation {
  Feature2D f2;
  Feature3D f3;
  double f = 0.0;
  double score = 0.5;
  /// The model covers no pixel of the view.
  bool degenerate = false;
};

/// Image and geometric features of one rendered view. An empty coverage
/// mask falls back to the whole frame for the image block and sets
/// `degenerate`.
ViewEvaluation evaluate_view(const Mesh& mesh, const CurvatureField& curv,
                             const Camera& camera, const Vec3& up, std::uint64_t seed = 0);

/// evaluate_view followed by the model's score.
ViewEvaluation score_view(const Mesh& mesh, const CurvatureField& curv,
                          const Svm2kModel& model, const Camera& camera, const Vec3& up,
                          std::uint64_t seed = 0);

struct ScoreOptions {
  /// 0 uses the hardware concurrency.
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

/// Fills grid.scores and grid.degenerate. Results do not depend on the
/// thread count.
void score_viewpoints(const Mesh& mesh, const Svm2kModel& model, ViewpointGrid& grid,
                      const ScoreOptions& options = {});

struct HeatMap {
  int width = 0;
  int height = 0;
  /// Row-major; row 0 is phi_max, column 0 is theta = 0.
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  /// Color-mapped over the map's own min..max range.
  Image colorize() const;
};

/// Bilinear interpolation of the grid scores at (theta, phi), wrapping in
/// theta. Throws InvalidArgument when scores are unset.
double interpolate_score(const ViewpointGrid& grid, double theta, double phi);

/// Column x samples theta = 2pi x / width, row y samples
/// phi = phi_max - y (phi_max - phi_min) / (height - 1). With width a
/// multiple of n_theta and height - 1 a multiple of n_phi - 1, grid nodes
/// land exactly on pixels.
HeatMap interpolate_heatmap(const ViewpointGrid& grid, int width, int height);

struct RankedView {
  std::size_t index = 0;
  double theta = 0.0;
  double phi = 0.0;
  double score = 0.0;
};

/// Highest scores first; ties by (theta, phi). Throws InvalidArgument when
/// k exceeds the grid size or scores are unset.
std::vector<RankedView> top_k(const ViewpointGrid& grid, std::size_t k);

/// "theta,phi,score,degenerate" per sample in grid order.
std::string grid_to_csv(const ViewpointGrid& grid);

}  // namespace vantage
