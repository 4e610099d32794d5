#include "vantage/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vantage/errors.hpp"
#include "vantage/feat2d.hpp"
#include "vantage/feat3d.hpp"
#include "vantage/io.hpp"
#include "vantage/mesh.hpp"
#include "vantage/registration.hpp"
#include "vantage/render.hpp"
#include "vantage/viewcluster.hpp"

namespace vantage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad invocation or unusable input; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Small helpers

void require(const fs::path& p, const char* flag, const char* command) {
  if (p.empty()) throw UsageError(std::string(command) + " requires --" + flag);
}

void require_file(const fs::path& p, const char* flag, const char* command) {
  require(p, flag, command);
  if (!fs::is_regular_file(p))
    throw UsageError(std::string(command) + ": --" + flag + " " + p.string() + " does not exist");
}

void require_dir(const fs::path& p, const char* flag, const char* command) {
  require(p, flag, command);
  if (!fs::is_directory(p))
    throw UsageError(std::string(command) + ": --" + flag + " " + p.string() +
                     " is not a directory");
}

void ensure_out_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string());
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void save_png_atomic(const Image& img, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp.png";
  save_image(img, tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(t.header.size()) + " columns, found " +
                           std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path.string(), 0, "empty CSV file");
  return t;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError(path.string(), line, "not a finite number: \"" + s + "\"");
  return v;
}

std::vector<std::string> feature_columns() {
  std::vector<std::string> cols{"id"};
  for (const auto& n : Feature2D::column_names()) cols.push_back(n);
  for (const auto& n : Feature3D::column_names()) cols.push_back(n);
  return cols;
}

// Lists what differs between two headers.
std::string header_diagnostics(const std::vector<std::string>& expected,
                               const std::vector<std::string>& found) {
  const std::set<std::string> e(expected.begin(), expected.end());
  const std::set<std::string> f(found.begin(), found.end());
  std::ostringstream os;
  std::vector<std::string> missing, extra;
  for (const auto& c : expected)
    if (!f.count(c)) missing.push_back(c);
  for (const auto& c : found)
    if (!e.count(c)) extra.push_back(c);
  auto list = [&](const char* what, const std::vector<std::string>& v) {
    os << "; " << v.size() << ' ' << what << ':';
    for (std::size_t i = 0; i < v.size() && i < 10; ++i) os << ' ' << v[i];
    if (v.size() > 10) os << " ...";
  };
  os << "expected " << expected.size() << " columns, found " << found.size();
  if (!missing.empty()) list("missing", missing);
  if (!extra.empty()) list("unexpected", extra);
  if (missing.empty() && extra.empty()) {
    for (std::size_t i = 0; i < expected.size() && i < found.size(); ++i)
      if (expected[i] != found[i]) {
        os << "; column " << i + 1 << " is " << found[i] << ", expected " << expected[i];
        break;
      }
  }
  return os.str();
}

struct FeatureTable {
  std::vector<std::string> ids;
  MatrixXd v;
  MatrixXd g;
};

FeatureTable read_features(const fs::path& path) {
  CsvTable t;
  try {
    t = read_csv(path);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  const auto expected = feature_columns();
  if (t.header != expected)
    throw UsageError(path.string() + ": feature columns do not match (" +
                     header_diagnostics(expected, t.header) + ")");
  FeatureTable f;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  f.v.resize(n, Feature2D::kSize);
  f.g.resize(n, Feature3D::kSize);
  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[i];
    if (!seen.insert(r[0]).second)
      throw UsageError(path.string() + ":" + std::to_string(t.lines[i]) + ": duplicate id " + r[0]);
    f.ids.push_back(r[0]);
    for (std::size_t c = 0; c < Feature2D::kSize; ++c)
      f.v(i, c) = parse_number(r[1 + c], path, t.lines[i]);
    for (std::size_t c = 0; c < Feature3D::kSize; ++c)
      f.g(i, c) = parse_number(r[1 + Feature2D::kSize + c], path, t.lines[i]);
  }
  return f;
}

std::map<std::string, double> read_labels(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 2 || t.header[0] != "id" || t.header[1] != "label")
    throw UsageError(path.string() + ": label columns do not match (" +
                     header_diagnostics({"id", "label"}, t.header) + ")");
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string& s = t.rows[i][1];
    double y;
    if (s == "1" || s == "+1" || s == "good")
      y = 1.0;
    else if (s == "-1" || s == "0" || s == "bad")
      y = -1.0;
    else
      throw ParseError(path.string(), t.lines[i], "label must be 1, -1, good or bad");
    if (!out.emplace(t.rows[i][0], y).second)
      throw ParseError(path.string(), t.lines[i], "duplicate id " + t.rows[i][0]);
  }
  return out;
}

SfmScene read_scene(const ProjectConfig& cfg, const fs::path& path) {
  if (path.extension() == ".out") {
    if (cfg.bundler_width <= 0 || cfg.bundler_height <= 0)
      throw UsageError("Bundler input needs --bundler-width and --bundler-height");
    return read_bundler(path, cfg.bundler_width, cfg.bundler_height);
  }
  return ingest_sfm(path);
}

fs::path find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".png", ".jpg", ".jpeg", ".PNG", ".JPG", ".JPEG"}) {
    const fs::path p = dir / (id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_register(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.sfm, "sfm", "register");
  require_file(cfg.correspondences, "correspondences", "register");
  require_file(cfg.mesh, "mesh", "register");
  require(cfg.out, "out", "register");

  const Mesh mesh = load_mesh(cfg.mesh);
  const SfmScene scene = read_scene(cfg, cfg.sfm);
  const CorrespondenceSet corr = load_correspondences(cfg.correspondences, mesh);
  const RegistrationResult reg = estimate_similarity(corr);

  // The cloud frame maps to the mesh frame through the inverse transform.
  SfmScene mesh_scene;
  mesh_scene.views = transfer_views(reg.transform, scene);
  mesh_scene.skipped = scene.skipped;
  const SimilarityTransform inv = reg.transform.inverse();
  for (const auto& p : scene.points) mesh_scene.points.push_back(inv.apply(p));
  mesh_scene.colors = scene.colors;

  json t;
  t["format"] = "vantage-transform";
  t["version"] = 1;
  t["scale"] = reg.transform.scale();
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot.push_back(reg.transform.rotation()(i, j));
  t["rotation"] = rot;
  const Vec3& tr = reg.transform.translation();
  t["translation"] = {tr.x(), tr.y(), tr.z()};
  t["residual"] = reg.residual;
  t["pair_residuals"] = reg.pair_residuals;

  ensure_out_dir(cfg.out);
  write_file_atomic(cfg.out / "transform.json", t.dump(1) + "\n");
  export_sfm(mesh_scene, cfg.out / "cameras.json");
  for (const auto& w : scene.warnings) out << "warning: " << w << '\n';
  out << "registered " << mesh_scene.views.size() << " cameras, skipped " << scene.skipped.size()
      << '\n';
  out << "scale " << fmt(reg.transform.scale()) << '\n';
  out << "residual " << fmt(reg.residual) << '\n';
  return 0;
}

int cmd_cluster(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.cameras, "cameras", "cluster");
  require(cfg.out, "out", "cluster");
  const SfmScene scene = ingest_sfm(cfg.cameras);
  if (cfg.k > static_cast<int>(scene.views.size()))
    throw UsageError("cluster: --k " + std::to_string(cfg.k) + " exceeds the " +
                     std::to_string(scene.views.size()) + " registered cameras");
  std::vector<ModelViewMatrix> poses;
  std::vector<std::string> ids;
  for (const auto& v : scene.views) {
    poses.push_back(v.camera.model_view());
    ids.push_back(v.id);
  }
  std::vector<std::string> warnings;
  const Eigen::MatrixXd dist = pose_distance_matrix(poses, &warnings);
  const ClusterAssignment a = kmedoids_distances(dist, cfg.k, cfg.seed);
  const std::vector<int> sizes = a.cluster_sizes();
  std::vector<int> order(a.medoids.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = static_cast<int>(c);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (sizes[x] != sizes[y]) return sizes[x] > sizes[y];
    return a.medoids[x] < a.medoids[y];
  });
  std::ostringstream reps;
  reps << "id,cluster,size\n";
  for (int c : order) reps << ids[a.medoids[c]] << ',' << c << ',' << sizes[c] << '\n';

  ensure_out_dir(cfg.out);
  write_file_atomic(cfg.out / "clusters.csv", clusters_to_csv(a, ids, dist));
  write_file_atomic(cfg.out / "representatives.csv", reps.str());
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  out << "cost " << fmt(a.cost) << '\n';
  for (int c : order) out << "representative " << ids[a.medoids[c]] << " (" << sizes[c] << ")\n";
  return 0;
}

int cmd_features(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.mesh, "mesh", "features");
  require_file(cfg.cameras, "cameras", "features");
  require_dir(cfg.images, "images", "features");
  require(cfg.out, "out", "features");
  const SfmScene scene = ingest_sfm(cfg.cameras);
  std::vector<fs::path> paths;
  for (const auto& v : scene.views) {
    fs::path p = find_image(cfg.images, v.id);
    if (p.empty()) throw UsageError("features: no image for camera " + v.id + " in " +
                                    cfg.images.string());
    paths.push_back(p);
  }
  const Mesh mesh = load_mesh(cfg.mesh);
  const CurvatureField curv = curvature_field(mesh);

  std::ostringstream csv;
  csv << std::setprecision(17);
  const auto cols = feature_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) csv << (c ? "," : "") << cols[c];
  csv << '\n';
  std::size_t fallbacks = 0;
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    const Image img = load_image(paths[i]);
    const Camera cam = scene.views[i].camera.with_resolution(img.width(), img.height());
    // The registered model's coverage marks the subject; saliency otherwise.
    const FrameData frame = rasterize(mesh, cam);
    std::optional<Mask> mask;
    if (frame.covered_count() > 0) mask = frame.mask;
    const Feature2D f2 = extract_2d(img, mask, cfg.seed);
    if (!mask) ++fallbacks;
    const Feature3D f3 = extract_3d(mesh, cam, curv, cfg.up_axis(), cfg.frame_size);
    csv << scene.views[i].id;
    for (double v : f2.values) csv << ',' << v;
    for (double v : f3.values) csv << ',' << v;
    csv << '\n';
  }
  if (cfg.out.has_parent_path()) ensure_out_dir(cfg.out.parent_path());
  write_file_atomic(cfg.out, csv.str());
  out << "features for " << scene.views.size() << " images";
  if (fallbacks) out << " (" << fallbacks << " without model coverage, saliency used)";
  out << '\n';
  return 0;
}

int cmd_train(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.features, "features", "train");
  require_file(cfg.labels, "labels", "train");
  require(cfg.model, "model", "train");
  const FeatureTable ft = read_features(cfg.features);
  const auto labels = read_labels(cfg.labels);

  std::vector<std::size_t> rows;
  std::vector<std::string> missing;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ft.ids.size(); ++i) row_of[ft.ids[i]] = i;
  Dataset data;
  for (const auto& [id, y] : labels) {
    const auto it = row_of.find(id);
    if (it == row_of.end()) {
      missing.push_back(id);
      continue;
    }
    rows.push_back(it->second);
  }
  if (!missing.empty())
    throw UsageError("train: " + std::to_string(missing.size()) +
                     " labeled ids have no feature row, first: " + missing.front());
  // Keep feature-file order.
  std::sort(rows.begin(), rows.end());
  data.view_v.resize(static_cast<Eigen::Index>(rows.size()), Feature2D::kSize);
  data.view_g.resize(static_cast<Eigen::Index>(rows.size()), Feature3D::kSize);
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    data.ids.push_back(ft.ids[rows[k]]);
    data.view_v.row(k) = ft.v.row(i);
    data.view_g.row(k) = ft.g.row(i);
    data.y[k] = labels.at(ft.ids[rows[k]]);
  }
  const bool has_pos = (data.y.array() > 0).any(), has_neg = (data.y.array() < 0).any();
  if (!has_pos || !has_neg) throw UsageError("train: labels must contain both classes");

  const Svm2kParams params = cfg.svm2k_params();
  json report;
  if (cfg.folds >= 2) {
    const Learner learner = cfg.learner == "image"      ? Learner::ImageOnly
                            : cfg.learner == "geometry" ? Learner::GeometryOnly
                                                        : Learner::Svm2k;
    const CvReport cv = crossvalidate(data, cfg.folds, params, cfg.seed, learner);
    report["folds"] = cfg.folds;
    report["learner"] = cfg.learner;
    json errs = json::array();
    for (double e : cv.fold_errors) errs.push_back(std::isnan(e) ? json(nullptr) : json(e));
    report["fold_errors"] = errs;
    report["mean_error"] = cv.mean_error;
    report["warnings"] = cv.warnings;
    for (const auto& w : cv.warnings) out << "warning: " << w << '\n';
    out << cfg.folds << "-fold cross-validation mean error " << fmt(cv.mean_error) << '\n';
  }
  const Svm2kModel model = train_svm2k(data, params);
  const auto& d = model.diagnostics;
  report["training"] = {{"samples", data.size()},
                        {"primal_objective", d.primal_objective},
                        {"relative_gap", d.relative_gap},
                        {"slack_v", d.slack_v},
                        {"slack_g", d.slack_g},
                        {"slack_eta", d.slack_eta},
                        {"iterations", d.iterations}};
  if (cfg.model.has_parent_path()) ensure_out_dir(cfg.model.parent_path());
  save_model(model, cfg.model);
  if (!cfg.out.empty()) {
    if (cfg.out.has_parent_path()) ensure_out_dir(cfg.out.parent_path());
    write_file_atomic(cfg.out, report.dump(1) + "\n");
  }
  out << "trained on " << data.size() << " samples, objective " << fmt(d.primal_objective)
      << ", gap " << fmt(d.relative_gap) << '\n';
  return 0;
}

int cmd_score(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.model, "model", "score");
  require_file(cfg.features, "features", "score");
  require(cfg.out, "out", "score");
  Svm2kModel model;
  try {
    model = load_model(cfg.model);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  const FeatureTable ft = read_features(cfg.features);
  std::ostringstream csv;
  csv << std::setprecision(17) << "id,f_v,f_g,f,score,label\n";
  std::size_t good = 0;
  for (std::size_t i = 0; i < ft.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const ViewOutputs o = model.outputs(ft.v.row(r).transpose(), ft.g.row(r).transpose());
    const int label = decide(o.f());
    good += label > 0;
    csv << ft.ids[i] << ',' << o.f_v << ',' << o.f_g << ',' << o.f() << ',' << score(o.f()) << ','
        << label << '\n';
  }
  if (cfg.out.has_parent_path()) ensure_out_dir(cfg.out.parent_path());
  write_file_atomic(cfg.out, csv.str());
  out << "scored " << ft.ids.size() << " views, " << good << " good\n";
  return 0;
}

int cmd_recommend(const ProjectConfig& cfg, std::ostream& out) {
  require_file(cfg.mesh, "mesh", "recommend");
  require_file(cfg.model, "model", "recommend");
  require(cfg.out, "out", "recommend");
  Svm2kModel model;
  try {
    model = load_model(cfg.model);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  if (model.standardizer_v.input_dim() != Feature2D::kSize ||
      model.standardizer_g.input_dim() != Feature3D::kSize)
    throw UsageError("recommend: model was trained on " +
                     std::to_string(model.standardizer_v.input_dim()) + "+" +
                     std::to_string(model.standardizer_g.input_dim()) +
                     " features, expected " + std::to_string(Feature2D::kSize) + "+" +
                     std::to_string(Feature3D::kSize));
  const Mesh mesh = load_mesh(cfg.mesh);
  ViewpointGrid grid = sample_viewpoints(mesh, cfg.grid_spec());
  if (cfg.top_k > grid.size())
    throw UsageError("recommend: --top-k exceeds the " + std::to_string(grid.size()) +
                     " viewpoints");
  score_viewpoints(mesh, model, grid, {cfg.threads, cfg.seed});
  const HeatMap heat = interpolate_heatmap(grid, cfg.heatmap_width, cfg.heatmap_height);
  const auto best = top_k(grid, cfg.top_k);

  ensure_out_dir(cfg.out);
  write_file_atomic(cfg.out / "viewpoints.csv", grid_to_csv(grid));
  std::ostringstream hcsv;
  hcsv << std::setprecision(17) << "x,y,theta,phi,score\n";
  for (int y = 0; y < heat.height; ++y)
    for (int x = 0; x < heat.width; ++x) {
      const double th = 2.0 * kPi * x / heat.width;
      const double ph = cfg.phi_max - (cfg.phi_max - cfg.phi_min) * y / (heat.height - 1);
      hcsv << x << ',' << y << ',' << th << ',' << ph << ',' << heat.at(x, y) << '\n';
    }
  write_file_atomic(cfg.out / "heatmap.csv", hcsv.str());
  save_png_atomic(heat.colorize(), cfg.out / "heatmap.png");
  std::ostringstream tcsv;
  tcsv << std::setprecision(17) << "rank,theta,phi,score,render\n";
  for (std::size_t r = 0; r < best.size(); ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "top_%02zu.png", r + 1);
    const FrameData frame =
        render_shaded(mesh, grid.cameras[best[r].index], default_light(grid.spec.up));
    save_png_atomic(*frame.rgb, cfg.out / name);
    tcsv << r + 1 << ',' << best[r].theta << ',' << best[r].phi << ',' << best[r].score << ','
         << name << '\n';
  }
  write_file_atomic(cfg.out / "topk.csv", tcsv.str());
  std::size_t degenerate = 0;
  for (bool b : grid.degenerate) degenerate += b;
  out << "scored " << grid.size() << " viewpoints";
  if (degenerate) out << " (" << degenerate << " see nothing)";
  out << '\n';
  for (std::size_t r = 0; r < best.size(); ++r)
    out << "#" << r + 1 << " theta " << fmt(best[r].theta) << " phi " << fmt(best[r].phi)
        << " score " << fmt(best[r].score) << '\n';
  return 0;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

}  // namespace

void ProjectConfig::validate() const {
  auto bad = [](const std::string& what) { throw InvalidArgument(what); };
  if (!(epsilon >= 0.0)) bad("epsilon must be >= 0");
  if (!(c_v > 0.0) || !(c_g > 0.0)) bad("c_v and c_g must be > 0");
  if (!(d >= 0.0)) bad("d must be >= 0");
  if (gamma_mode != "median" && gamma_mode != "fixed") bad("gamma_mode must be median or fixed");
  if (gamma_mode == "fixed" && (!(gamma_v > 0.0) || !(gamma_g > 0.0)))
    bad("gamma_v and gamma_g must be > 0");
  if (folds == 1 || folds < 0) bad("folds must be 0 (no cross-validation) or >= 2");
  if (learner != "svm2k" && learner != "image" && learner != "geometry")
    bad("learner must be svm2k, image or geometry");
  if (k < 1) bad("k must be >= 1");
  if (grid_theta < 1 || grid_phi < 2) bad("grid needs grid_theta >= 1 and grid_phi >= 2");
  if (!(phi_min < phi_max) || phi_min <= -kPi / 2 || phi_max >= kPi / 2)
    bad("need -pi/2 < phi_min < phi_max < pi/2");
  if (!(radius_factor > 1.0)) bad("radius_factor must be > 1");
  if (frame_size < 16) bad("frame_size must be >= 16");
  if (heatmap_width < 1 || heatmap_height < 2) bad("heat map needs width >= 1 and height >= 2");
  if (top_k < 1) bad("top_k must be >= 1");
  if (up.size() != 3 || !(up_axis().norm() > 0.0) || !up_axis().allFinite())
    bad("up must be three numbers, not all zero");
}

Vec3 ProjectConfig::up_axis() const {
  return up.size() == 3 ? Vec3(up[0], up[1], up[2]) : Vec3::Zero();
}

Svm2kParams ProjectConfig::svm2k_params() const {
  Svm2kParams p;
  p.epsilon = epsilon;
  p.c_v = c_v;
  p.c_g = c_g;
  p.d = d;
  if (gamma_mode == "fixed") {
    p.gamma_v = gamma_v;
    p.gamma_g = gamma_g;
  }
  return p;
}

GridSpec ProjectConfig::grid_spec() const {
  GridSpec g;
  g.n_theta = grid_theta;
  g.n_phi = grid_phi;
  g.phi_min = phi_min;
  g.phi_max = phi_max;
  g.radius_factor = radius_factor;
  g.frame_size = frame_size;
  g.up = up_axis();
  return g;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  ProjectConfig cfg;
  CLI::App app{"Viewpoint registration, clustering, learning and recommendation", "vantage"};
  app.set_config("--config", "", "Config file (key = value, keys as the long flags)");
  app.require_subcommand(1);
  app.fallthrough();

  std::string seed_text, threads_text;
  app.add_option("--mesh", cfg.mesh, "Mesh (OBJ or ASCII PLY)");
  app.add_option("--images", cfg.images, "Directory of photos named <camera id>.png/.jpg");
  app.add_option("--sfm", cfg.sfm, "SfM scene (vantage-sfm JSON, or Bundler .out)");
  app.add_option("--correspondences", cfg.correspondences, "Lines of: vertex_index x y z");
  app.add_option("--labels", cfg.labels, "CSV with columns id,label");
  app.add_option("--cameras", cfg.cameras, "Cameras in the mesh frame (from register)");
  app.add_option("--features", cfg.features, "Features CSV (from features)");
  app.add_option("--model", cfg.model, "Model JSON");
  app.add_option("--out", cfg.out, "Output file or directory, depending on the command");
  app.add_option("--epsilon", cfg.epsilon, "Coupling tolerance")->capture_default_str();
  app.add_option("--c-v,--c_v", cfg.c_v, "Image-view penalty")->capture_default_str();
  app.add_option("--c-g,--c_g", cfg.c_g, "Geometry-view penalty")->capture_default_str();
  app.add_option("--d", cfg.d, "Coupling penalty")->capture_default_str();
  app.add_option("--gamma-mode,--gamma_mode", cfg.gamma_mode, "median or fixed")
      ->capture_default_str();
  app.add_option("--gamma-v,--gamma_v", cfg.gamma_v, "RBF width, image view (fixed mode)");
  app.add_option("--gamma-g,--gamma_g", cfg.gamma_g, "RBF width, geometry view (fixed mode)");
  app.add_option("--folds", cfg.folds, "Cross-validation folds, 0 to skip")
      ->capture_default_str();
  app.add_option("--learner", cfg.learner, "Learner for cross-validation: svm2k, image, geometry")
      ->capture_default_str();
  app.add_option("--k", cfg.k, "Number of viewpoint clusters")->capture_default_str();
  app.add_option("--grid-theta,--grid_theta", cfg.grid_theta)->capture_default_str();
  app.add_option("--grid-phi,--grid_phi", cfg.grid_phi)->capture_default_str();
  app.add_option("--phi-min,--phi_min", cfg.phi_min)->capture_default_str();
  app.add_option("--phi-max,--phi_max", cfg.phi_max)->capture_default_str();
  app.add_option("--radius-factor,--radius_factor", cfg.radius_factor)->capture_default_str();
  app.add_option("--frame-size,--frame_size", cfg.frame_size)->capture_default_str();
  app.add_option("--heatmap-width,--heatmap_width", cfg.heatmap_width)->capture_default_str();
  app.add_option("--heatmap-height,--heatmap_height", cfg.heatmap_height)->capture_default_str();
  app.add_option("--top-k,--top_k", cfg.top_k)->capture_default_str();
  app.add_option("--up", cfg.up, "Model up axis (x y z)")->expected(3)->capture_default_str();
  app.add_option("--bundler-width,--bundler_width", cfg.bundler_width);
  app.add_option("--bundler-height,--bundler_height", cfg.bundler_height);
  app.add_option("--seed", seed_text, "Random seed (env VANTAGE_SEED)");
  app.add_option("--threads", threads_text, "Worker threads (env VANTAGE_THREADS)");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const ProjectConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"register", "Align the mesh to the SfM scene and transfer the cameras", cmd_register},
      {"cluster", "K-medoids clustering of the registered cameras", cmd_cluster},
      {"features", "Image and geometric features per registered photo", cmd_features},
      {"train", "Train the two-view model, with cross-validation", cmd_train},
      {"score", "Score feature rows with a trained model", cmd_score},
      {"recommend", "Score sampled viewpoints; heat map and top-k renders", cmd_recommend},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) subs.push_back(app.add_subcommand(c.name, c.help));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  // Environment overrides the config file; an explicit flag overrides both.
  auto env_or = [&](const char* flag, const char* env, std::string& text) {
    if (!given_on_command_line(args, flag))
      if (const char* v = std::getenv(env); v && *v) text = v;
  };
  env_or("--seed", "VANTAGE_SEED", seed_text);
  env_or("--threads", "VANTAGE_THREADS", threads_text);
  try {
    if (!seed_text.empty()) {
      std::size_t pos = 0;
      cfg.seed = std::stoull(seed_text, &pos);
      if (pos != seed_text.size()) throw std::invalid_argument(seed_text);
    }
    if (!threads_text.empty()) {
      std::size_t pos = 0;
      const unsigned long t = std::stoul(threads_text, &pos);
      if (pos != threads_text.size()) throw std::invalid_argument(threads_text);
      cfg.threads = static_cast<unsigned>(t);
    }
  } catch (const std::exception&) {
    err << "error: seed and threads must be non-negative integers\n";
    return 2;
  }

  try {
    cfg.validate();
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].run(cfg, out);
    err << "error: no command\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnderdeterminedInput& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidMesh& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace vantage
