#include "vantage/registration.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_io.hpp"
#include "vantage/io.hpp"

namespace vantage {

namespace {

constexpr double kSoften = 1e-12;

double scene_diameter(const std::vector<Vec3>& pts) {
  Vec3 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

Mat3 nearest_rotation(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

struct Eval {
  double smooth = 0.0;
  double plain = 0.0;
  std::vector<double> pairs;
};

Eval evaluate(const CorrespondenceSet& corr, double c, const Mat3& r, const Vec3& t) {
  Eval e;
  e.pairs.resize(corr.size());
  for (std::size_t k = 0; k < corr.size(); ++k) {
    const double sq = (c * (r * corr.mesh_points()[k]) + t - corr.cloud_points()[k]).squaredNorm();
    e.smooth += std::sqrt(sq + kSoften);
    e.pairs[k] = std::sqrt(sq);
  }
  for (double v : e.pairs) e.plain += v;
  return e;
}

RegistrationResult make_result(double c, const Mat3& r, const Vec3& t, const Eval& e,
                               std::size_t iterations) {
  RegistrationResult out;
  out.transform = SimilarityTransform(c, r, t);
  out.residual = e.plain;
  out.pair_residuals = e.pairs;
  out.iterations = iterations;
  return out;
}

}  // namespace

CorrespondenceSet::CorrespondenceSet(std::vector<Vec3> mesh_points,
                                     std::vector<Vec3> cloud_points)
    : p_(std::move(mesh_points)), q_(std::move(cloud_points)) {
  if (p_.size() != q_.size())
    throw InvalidArgument("correspondences: mesh and cloud point counts differ");
  if (p_.size() < 3)
    throw UnderdeterminedInput("correspondences: at least 3 pairs are required, got " +
                               std::to_string(p_.size()));
  for (std::size_t k = 0; k < p_.size(); ++k)
    if (!p_[k].allFinite() || !q_[k].allFinite())
      throw InvalidArgument("correspondences: non-finite coordinate in pair " +
                            std::to_string(k));
  Vec3 mean = Vec3::Zero();
  for (const auto& p : p_) mean += p;
  mean /= static_cast<double>(p_.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : p_) cov += (p - mean) * (p - mean).transpose();
  const Vec3 sv = Eigen::JacobiSVD<Mat3>(cov).singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-14 * sv[0])
    throw UnderdeterminedInput("correspondences: mesh points are collinear or coincident");
}

RegistrationResult estimate_similarity(const CorrespondenceSet& corr,
                                       const RegistrationOptions& options) {
  const auto n = static_cast<Eigen::Index>(corr.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    src.col(k) = corr.mesh_points()[k];
    dst.col(k) = corr.cloud_points()[k];
  }
  const Mat4 init = Eigen::umeyama(src, dst, true);
  double c = init.block<3, 1>(0, 0).norm();
  Mat3 r = nearest_rotation(init.topLeftCorner<3, 3>() / c);
  Vec3 t = init.topRightCorner<3, 1>();

  const double diameter = std::max(scene_diameter(corr.mesh_points()),
                                   scene_diameter(corr.cloud_points()));
  Eval cur = evaluate(corr, c, r, t);
  double lambda = 1e-3;
  std::size_t it = 0;
  bool converged = false;
  using Vec7 = Eigen::Matrix<double, 7, 1>;
  using Mat7 = Eigen::Matrix<double, 7, 7>;
  for (; it < options.max_iterations; ++it) {
    // Reweighted normal equations in (log c, omega, t); R <- exp(omega) R.
    Mat7 jtj = Mat7::Zero();
    Vec7 jte = Vec7::Zero();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vec3 rp = c * (r * src.col(k));
      const Vec3 e = rp + t - dst.col(k);
      const double w = 1.0 / std::sqrt(e.squaredNorm() + kSoften);
      Eigen::Matrix<double, 3, 7> j;
      j.col(0) = rp;
      j.block<3, 3>(0, 1) = -skew(rp);
      j.block<3, 3>(0, 4) = Mat3::Identity();
      // Exact curvature of the softened norm: w I - w^3 e e^T.
      const Mat3 h = w * Mat3::Identity() - w * w * w * e * e.transpose();
      jtj += j.transpose() * h * j;
      jte += w * j.transpose() * e;
    }
    // Gradient of the softened objective is exactly jte.
    if (jte.norm() <= 1e-12 * (1.0 + diameter) * static_cast<double>(n)) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (lambda < 1e16) {
      Mat7 a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Vec7 step = a.ldlt().solve(-jte);
      const double c2 = c * std::exp(step[0]);
      const Mat3 r2 = nearest_rotation(rotation_exp(step.segment<3>(1)) * r);
      const Vec3 t2 = t + step.segment<3>(4);
      const Eval trial = evaluate(corr, c2, r2, t2);
      if (trial.smooth < cur.smooth) {
        const double gain = cur.smooth - trial.smooth;
        c = c2;
        r = r2;
        t = t2;
        cur = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (gain <= 1e-15 * cur.smooth || step.norm() <= 1e-15 * (1.0 + diameter))
          converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted || converged) {
      // No descent direction left at machine precision.
      converged = true;
      break;
    }
  }
  RegistrationResult result = make_result(c, r, t, cur, it);
  if (!converged)
    throw RegistrationConvergenceError(
        "registration did not converge after " + std::to_string(it) + " iterations",
        std::move(result));
  return result;
}

Camera transfer_camera(const SimilarityTransform& sim, const Camera& cloud_camera) {
  if (!(sim.scale() > 0.0)) throw InvalidArgument("transfer_camera: scale must be positive");
  const Mat3& rc = cloud_camera.extrinsics().rotation();
  const Vec3& tc = cloud_camera.extrinsics().translation();
  const Mat3 r = nearest_rotation(rc * sim.rotation());
  const Vec3 t = (rc * sim.translation() + tc) / sim.scale();
  return cloud_camera.with_extrinsics(RigidTransform(r, t));
}

std::vector<SfmView> transfer_views(const SimilarityTransform& sim, const SfmScene& scene) {
  std::vector<SfmView> out;
  out.reserve(scene.views.size());
  for (const auto& v : scene.views) out.push_back({v.id, transfer_camera(sim, v.camera)});
  return out;
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path, const Mesh& mesh) {
  std::istringstream in(read_text_file(path));
  std::vector<Vec3> p, q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long idx;
    if (!(ls >> idx)) {
      std::string rest;
      if (std::istringstream(line) >> rest)
        throw ParseError(path.string(), lineno, "expected a vertex index");
      continue;
    }
    Vec3 x;
    if (!(ls >> x[0] >> x[1] >> x[2]))
      throw ParseError(path.string(), lineno, "expected three coordinates after the index");
    std::string extra;
    if (ls >> extra) throw ParseError(path.string(), lineno, "unexpected trailing token");
    if (idx < 0 || idx >= static_cast<long long>(mesh.vertices.size()))
      throw ParseError(path.string(), lineno,
                       "vertex index " + std::to_string(idx) + " out of range");
    p.push_back(mesh.vertices[static_cast<std::size_t>(idx)]);
    q.push_back(x);
  }
  return CorrespondenceSet(std::move(p), std::move(q));
}

// ---------------------------------------------------------------------------
// SfM scenes

namespace {

using nlohmann::json;

class SchemaReader {
 public:
  SchemaReader(const detail::LocatedJson& j, std::string source)
      : j_(j), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& what) const {
    throw ParseError(source_, j_.line_of(ptr), what + " at " + (ptr.empty() ? "/" : ptr));
  }

  const json& at(const json& obj, const std::string& ptr, const std::string& key) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(ptr, "missing field \"" + key + "\"");
    return *it;
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "non-finite number");
    return d;
  }

  int integer(const json& v, const std::string& ptr) const {
    if (!v.is_number_integer()) fail(ptr, "expected an integer");
    return v.get<int>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const json& v, const std::string& ptr) const {
    if (!v.is_array() || v.size() != N) fail(ptr, "expected an array of " + std::to_string(N));
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = number(v[i], ptr + "/" + std::to_string(i));
    return out;
  }

 private:
  const detail::LocatedJson& j_;
  std::string source_;
};

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

SfmScene parse_sfm(const std::string& text, const std::string& source) {
  const detail::LocatedJson located = detail::parse_located(text, source);
  const json& root = located.doc;
  const SchemaReader rd(located, source);
  if (!root.is_object()) rd.fail("", "expected an object");
  const json& fmt = rd.at(root, "", "format");
  if (fmt != "vantage-sfm") rd.fail("/format", "unknown format");
  if (rd.integer(rd.at(root, "", "version"), "/version") != 1)
    rd.fail("/version", "unsupported version");

  SfmScene scene;
  const json& cams = rd.at(root, "", "cameras");
  if (!cams.is_array()) rd.fail("/cameras", "expected an array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string ptr = "/cameras/" + std::to_string(i);
    const json& c = cams[i];
    const json& idj = rd.at(c, ptr, "id");
    if (!idj.is_string()) rd.fail(ptr + "/id", "expected a string");
    const std::string id = idj.get<std::string>();
    bool registered = true;
    if (const auto it = c.find("registered"); it != c.end()) {
      if (!it->is_boolean()) rd.fail(ptr + "/registered", "expected a boolean");
      registered = it->get<bool>();
    }
    if (!registered || !c.contains("rotation")) {
      scene.skipped.push_back(id);
      scene.warnings.push_back("camera " + id + " has no pose; skipped");
      continue;
    }
    Intrinsics k;
    k.width = rd.integer(rd.at(c, ptr, "width"), ptr + "/width");
    k.height = rd.integer(rd.at(c, ptr, "height"), ptr + "/height");
    k.fx = rd.number(rd.at(c, ptr, "fx"), ptr + "/fx");
    k.fy = rd.number(rd.at(c, ptr, "fy"), ptr + "/fy");
    k.cx = rd.number(rd.at(c, ptr, "cx"), ptr + "/cx");
    k.cy = rd.number(rd.at(c, ptr, "cy"), ptr + "/cy");
    k.skew = c.contains("skew") ? rd.number(c["skew"], ptr + "/skew") : 0.0;
    const auto rv = rd.vec<9>(rd.at(c, ptr, "rotation"), ptr + "/rotation");
    const Vec3 t = rd.vec<3>(rd.at(c, ptr, "translation"), ptr + "/translation");
    Mat3 r;
    r << rv[0], rv[1], rv[2], rv[3], rv[4], rv[5], rv[6], rv[7], rv[8];
    if (!is_rotation(r, 1e-6)) rd.fail(ptr + "/rotation", "not a rotation matrix");
    if (!is_rotation(r)) r = nearest_rotation(r);
    try {
      scene.views.push_back({id, Camera(k, RigidTransform(r, t))});
    } catch (const InvalidArgument& e) {
      rd.fail(ptr, e.what());
    }
  }

  if (root.contains("points")) {
    const json& pts = root["points"];
    if (!pts.is_array()) rd.fail("/points", "expected an array");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string ptr = "/points/" + std::to_string(i);
      scene.points.push_back(rd.vec<3>(rd.at(pts[i], ptr, "xyz"), ptr + "/xyz"));
      std::array<std::uint8_t, 3> rgb{0, 0, 0};
      if (pts[i].contains("rgb")) {
        const Vec3 c = rd.vec<3>(pts[i]["rgb"], ptr + "/rgb");
        for (int k = 0; k < 3; ++k) {
          if (c[k] < 0.0 || c[k] > 255.0 || c[k] != std::floor(c[k]))
            rd.fail(ptr + "/rgb", "color components must be integers in 0..255");
          rgb[k] = static_cast<std::uint8_t>(c[k]);
        }
      }
      scene.colors.push_back(rgb);
    }
  }
  return scene;
}

SfmScene ingest_sfm(const std::filesystem::path& path) {
  return parse_sfm(read_text_file(path), path.string());
}

std::string sfm_to_json(const SfmScene& scene) {
  json root;
  root["format"] = "vantage-sfm";
  root["version"] = 1;
  json cams = json::array();
  for (const auto& v : scene.views) {
    const Intrinsics& k = v.camera.intrinsics();
    const Mat3& r = v.camera.extrinsics().rotation();
    json rot = json::array();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rot.push_back(r(i, j));
    cams.push_back({{"id", v.id},
                    {"registered", true},
                    {"width", k.width},
                    {"height", k.height},
                    {"fx", k.fx},
                    {"fy", k.fy},
                    {"cx", k.cx},
                    {"cy", k.cy},
                    {"skew", k.skew},
                    {"rotation", rot},
                    {"translation", vec_json(v.camera.extrinsics().translation())}});
  }
  for (const auto& id : scene.skipped) cams.push_back({{"id", id}, {"registered", false}});
  root["cameras"] = cams;
  json pts = json::array();
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    json p{{"xyz", vec_json(scene.points[i])}};
    if (i < scene.colors.size())
      p["rgb"] = json::array({scene.colors[i][0], scene.colors[i][1], scene.colors[i][2]});
    pts.push_back(p);
  }
  root["points"] = pts;
  return root.dump(1);
}

void export_sfm(const SfmScene& scene, const std::filesystem::path& path) {
  write_file_atomic(path, sfm_to_json(scene) + "\n");
}

SfmScene read_bundler(const std::filesystem::path& path, int width, int height) {
  const std::string src = path.string();
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t lineno = 0;
  // Next non-comment line as a token stream.
  auto next = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      return std::istringstream(line);
    }
    throw ParseError(src, lineno, "unexpected end of file");
  };
  auto read_n = [&](int count) {
    std::istringstream ls = next();
    std::vector<double> v(count);
    for (auto& x : v)
      if (!(ls >> x)) throw ParseError(src, lineno, "expected " + std::to_string(count) +
                                                          " numbers");
    return v;
  };

  std::istringstream header = next();
  long long ncam = 0, npts = 0;
  if (!(header >> ncam >> npts) || ncam < 0 || npts < 0)
    throw ParseError(src, lineno, "expected camera and point counts");

  SfmScene scene;
  const Mat3 flip = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  for (long long i = 0; i < ncam; ++i) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "cam%04lld", i);
    const auto fk = read_n(3);
    Mat3 r;
    for (int row = 0; row < 3; ++row) {
      const auto v = read_n(3);
      r.row(row) << v[0], v[1], v[2];
    }
    const auto tv = read_n(3);
    const std::size_t cam_line = lineno;
    if (fk[0] == 0.0) {
      scene.skipped.emplace_back(idbuf);
      scene.warnings.push_back(std::string("camera ") + idbuf + " has no pose; skipped");
      continue;
    }
    if (!is_rotation(r, 1e-3)) throw ParseError(src, cam_line, "camera rotation is not a rotation");
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = k.fy = fk[0];
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    const Mat3 rc = nearest_rotation(flip * r);
    const Vec3 tc = flip * Vec3(tv[0], tv[1], tv[2]);
    scene.views.push_back({idbuf, Camera(k, RigidTransform(rc, tc))});
  }
  for (long long i = 0; i < npts; ++i) {
    const auto xyz = read_n(3);
    const auto rgb = read_n(3);
    next();  // view list
    scene.points.emplace_back(xyz[0], xyz[1], xyz[2]);
    std::array<std::uint8_t, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::clamp(rgb[k], 0.0, 255.0));
    scene.colors.push_back(c);
  }
  return scene;
}

}  // namespace vantage
