#include "vantage/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

const Vec3 kDefaultColor(0.8, 0.8, 0.8);

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void add_polygon(Mesh& mesh, const std::vector<int>& poly) {
  const int group = mesh.group_count();
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    mesh.faces.emplace_back(poly[0], poly[k], poly[k + 1]);
    mesh.face_groups.push_back(group);
  }
}

}  // namespace

int Mesh::group_count() const {
  if (face_groups.empty()) return 0;
  return *std::max_element(face_groups.begin(), face_groups.end()) + 1;
}

double Mesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]])
                   .cross(vertices[t[2]] - vertices[t[0]])
                   .norm();
}

Vec3 Mesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  const Vec3 n =
      (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
  return a;
}

Vec3 Mesh::centroid() const {
  Vec3 acc = Vec3::Zero();
  double area = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    const double a = face_area(f);
    acc += a * (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
    area += a;
  }
  if (area > 0.0) return acc / area;
  if (vertices.empty()) return Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  for (const auto& v : vertices) mean += v;
  return mean / static_cast<double>(vertices.size());
}

double Mesh::bounding_radius() const {
  const Vec3 c = centroid();
  double r = 0.0;
  for (const auto& v : vertices) r = std::max(r, (v - c).norm());
  return r;
}

void Mesh::append(const Mesh& other) {
  const int vbase = static_cast<int>(vertices.size());
  const int gbase = group_count();
  if (has_colors() || other.has_colors()) {
    colors.resize(vertices.size(), kDefaultColor);
    if (other.has_colors())
      colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    else
      colors.insert(colors.end(), other.vertices.size(), kDefaultColor);
  }
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (std::size_t f = 0; f < other.faces.size(); ++f) {
    faces.push_back(other.faces[f] + Eigen::Vector3i::Constant(vbase));
    face_groups.push_back(gbase + other.face_groups[f]);
  }
}

void Mesh::transform(const SimilarityTransform& t) {
  for (auto& v : vertices) v = t.apply(v);
}

void validate_mesh(const Mesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  if (!mesh.colors.empty() && mesh.colors.size() != mesh.vertices.size())
    throw InvalidArgument("mesh: color count does not match vertex count");
  if (mesh.face_groups.size() != mesh.faces.size())
    throw InvalidArgument("mesh: face group count does not match face count");
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k)
      if (f[k] < 0 || f[k] >= nv)
        throw InvalidArgument("mesh: face index out of range");
  for (int g : mesh.face_groups)
    if (g < 0) throw InvalidArgument("mesh: negative face group");
  for (const auto& v : mesh.vertices)
    if (!v.allFinite()) throw InvalidArgument("mesh: non-finite vertex");
}

std::size_t clean_mesh(Mesh& mesh, double area_eps) {
  std::vector<Eigen::Vector3i> faces;
  std::vector<int> groups;
  faces.reserve(mesh.faces.size());
  groups.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (!(mesh.face_area(f) > area_eps)) continue;
    faces.push_back(t);
    groups.push_back(mesh.face_groups[f]);
  }
  const std::size_t removed = mesh.faces.size() - faces.size();
  std::map<int, int> renumber;
  for (int g : groups) renumber.emplace(g, 0);
  int next = 0;
  for (auto& [g, id] : renumber) id = next++;
  for (int& g : groups) g = renumber[g];
  mesh.faces = std::move(faces);
  mesh.face_groups = std::move(groups);
  return removed;
}

Mesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  throw IoError("unsupported mesh format: " + path.string());
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  Mesh mesh;
  bool any_color = false;
  std::vector<bool> has_color;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::vector<double> vals;
      double x;
      while (ls >> x) vals.push_back(x);
      if (vals.size() != 3 && vals.size() != 6 && vals.size() != 4 &&
          vals.size() != 7)
        throw ParseError(path.string(), lineno, "vertex needs 3 or 6 numbers");
      mesh.vertices.emplace_back(vals[0], vals[1], vals[2]);
      if (vals.size() >= 6) {
        const std::size_t o = vals.size() == 7 ? 4 : 3;
        mesh.colors.emplace_back(vals[o], vals[o + 1], vals[o + 2]);
        has_color.push_back(true);
        any_color = true;
      } else {
        mesh.colors.push_back(kDefaultColor);
        has_color.push_back(false);
      }
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        const std::string first = tok.substr(0, tok.find('/'));
        int idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoi(first, &used);
          if (used != first.size()) throw std::invalid_argument(first);
        } catch (const std::exception&) {
          throw ParseError(path.string(), lineno, "bad face index '" + tok + "'");
        }
        const int nv = static_cast<int>(mesh.vertices.size());
        if (idx < 0) idx = nv + idx + 1;
        if (idx < 1 || idx > nv)
          throw ParseError(path.string(), lineno, "face index out of range");
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3)
        throw ParseError(path.string(), lineno, "face needs at least 3 vertices");
      add_polygon(mesh, poly);
    }
  }
  if (!any_color) mesh.colors.clear();
  validate_mesh(mesh);
  clean_mesh(mesh);
  return mesh;
}

Mesh load_ply(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw ParseError(path.string(), lineno, std::string("unexpected end of file, ") + what);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line("expected 'ply'");
  if (line != "ply") throw ParseError(path.string(), lineno, "missing 'ply' magic");

  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> props;
    std::vector<std::string> types;
    bool list = false;
  };
  std::vector<Element> elements;
  for (;;) {
    next_line("in header");
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii")
        throw ParseError(path.string(), lineno, "only ASCII PLY is supported");
    } else if (kw == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty())
        throw ParseError(path.string(), lineno, "property before element");
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, it, name;
        ls >> ct >> it >> name;
        elements.back().list = true;
        elements.back().props.push_back(name);
        elements.back().types.push_back(it);
      } else {
        std::string name;
        ls >> name;
        elements.back().props.push_back(name);
        elements.back().types.push_back(type);
      }
    }
  }

  Mesh mesh;
  bool colored = false;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      auto find = [&](const std::string& n) {
        auto it = std::find(e.props.begin(), e.props.end(), n);
        return it == e.props.end() ? -1 : static_cast<int>(it - e.props.begin());
      };
      const int ix = find("x"), iy = find("y"), iz = find("z");
      const int ir = find("red"), ig = find("green"), ib = find("blue");
      if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError(path.string(), lineno, "vertex element lacks x/y/z");
      colored = ir >= 0 && ig >= 0 && ib >= 0;
      const bool byte_color =
          colored && (e.types[ir] == "uchar" || e.types[ir] == "uint8");
      for (std::size_t i = 0; i < e.count; ++i) {
        next_line("in vertex list");
        std::istringstream ls(line);
        std::vector<double> vals(e.props.size());
        for (auto& v : vals)
          if (!(ls >> v)) throw ParseError(path.string(), lineno, "short vertex line");
        mesh.vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
        if (colored) {
          const double s = byte_color ? 1.0 / 255.0 : 1.0;
          mesh.colors.emplace_back(vals[ir] * s, vals[ig] * s, vals[ib] * s);
        }
      }
    } else if (e.name == "face") {
      for (std::size_t i = 0; i < e.count; ++i) {
        next_line("in face list");
        std::istringstream ls(line);
        int n = 0;
        if (!(ls >> n) || n < 3)
          throw ParseError(path.string(), lineno, "face needs at least 3 vertices");
        std::vector<int> poly(n);
        for (auto& v : poly) {
          if (!(ls >> v)) throw ParseError(path.string(), lineno, "short face line");
          if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
            throw ParseError(path.string(), lineno, "face index out of range");
        }
        add_polygon(mesh, poly);
      }
    } else {
      for (std::size_t i = 0; i < e.count; ++i) next_line("in element body");
    }
  }
  validate_mesh(mesh);
  clean_mesh(mesh);
  return mesh;
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
    if (mesh.has_colors()) {
      const auto& c = mesh.colors[i];
      out << ' ' << c.x() << ' ' << c.y() << ' ' << c.z();
    }
    out << '\n';
  }
  // Consecutive triangles of one group sharing the first vertex are a fan
  // and go back out as a single polygon.
  std::size_t f = 0;
  while (f < mesh.faces.size()) {
    std::vector<int> poly{mesh.faces[f][0], mesh.faces[f][1], mesh.faces[f][2]};
    std::size_t g = f + 1;
    while (g < mesh.faces.size() && mesh.face_groups[g] == mesh.face_groups[f] &&
           mesh.faces[g][0] == poly.front() && mesh.faces[g][1] == poly.back()) {
      poly.push_back(mesh.faces[g][2]);
      ++g;
    }
    const bool whole_group =
        g == mesh.faces.size() || mesh.face_groups[g] != mesh.face_groups[f];
    if (!whole_group) {
      poly.resize(3);
      g = f + 1;
    }
    out << 'f';
    for (int idx : poly) out << ' ' << idx + 1;
    out << '\n';
    f = g;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace shapes {

Mesh box(const Vec3& lo, const Vec3& hi) {
  Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(),
                            i & 4 ? hi.z() : lo.z());
  // Quads listed counter-clockwise seen from outside.
  const std::array<std::array<int, 4>, 6> quads{{{0, 4, 6, 2},   // -x
                                                 {1, 3, 7, 5},   // +x
                                                 {0, 1, 5, 4},   // -y
                                                 {2, 6, 7, 3},   // +y
                                                 {0, 2, 3, 1},   // -z
                                                 {4, 5, 7, 6}}}; // +z
  for (const auto& q : quads) add_polygon(m, {q[0], q[1], q[2], q[3]});
  return m;
}

Mesh unit_cube() { return box(Vec3::Constant(-0.5), Vec3::Constant(0.5)); }

Mesh icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Eigen::Vector3i> f{
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.emplace_back(tri[0], a, c);
      next.emplace_back(tri[1], b, a);
      next.emplace_back(tri[2], c, b);
      next.emplace_back(a, b, c);
    }
    f = std::move(next);
  }
  Mesh m;
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(radius * p);
  m.faces = std::move(f);
  m.face_groups.resize(m.faces.size());
  for (std::size_t i = 0; i < m.face_groups.size(); ++i)
    m.face_groups[i] = static_cast<int>(i);
  return m;
}

Mesh grid(int cells, double size) {
  if (cells < 1) throw InvalidArgument("grid: need at least one cell");
  Mesh m;
  const int n = cells + 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m.vertices.emplace_back(size * i / cells, size * j / cells, 0.0);
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      const int a = j * n + i;
      add_polygon(m, {a, a + 1, a + n + 1, a + n});
    }
  return m;
}

Mesh square(double side, double depth) {
  Mesh m;
  const double h = 0.5 * side;
  m.vertices = {{-h, -h, depth}, {h, -h, depth}, {h, h, depth}, {-h, h, depth}};
  add_polygon(m, {0, 1, 2, 3});
  return m;
}

namespace {

Mesh colored(Mesh m, const Vec3& rgb) {
  m.colors.assign(m.vertices.size(), rgb);
  return m;
}

}  // namespace

Mesh building() {
  const Vec3 wall(0.85, 0.78, 0.62);
  const Vec3 roof(0.55, 0.18, 0.12);
  const Vec3 door(0.35, 0.22, 0.10);
  const Vec3 glass(0.30, 0.50, 0.80);
  const Vec3 stone(0.45, 0.45, 0.45);

  Mesh m = colored(box({-2.0, 0.0, -1.5}, {2.0, 3.0, 1.5}), wall);

  // Gabled roof: ridge along x at height 4.5, eaves overhanging the walls.
  Mesh r;
  r.vertices = {{-2.2, 2.9, -1.7}, {2.2, 2.9, -1.7}, {2.2, 2.9, 1.7},
                {-2.2, 2.9, 1.7},  {-2.2, 4.5, 0.0}, {2.2, 4.5, 0.0}};
  add_polygon(r, {3, 2, 5, 4});  // front slope (+z)
  add_polygon(r, {1, 0, 4, 5});  // back slope (-z)
  add_polygon(r, {0, 3, 4});     // gable -x
  add_polygon(r, {2, 1, 5});     // gable +x
  add_polygon(r, {0, 1, 2, 3});  // soffit
  m.append(colored(r, roof));

  m.append(colored(box({-0.45, 0.0, 1.5}, {0.45, 1.8, 1.62}), door));
  for (double x : {-1.4, 1.4}) {
    m.append(colored(box({x - 0.4, 1.0, 1.5}, {x + 0.4, 1.9, 1.58}), glass));
    m.append(colored(box({x - 0.4, 1.0, -1.58}, {x + 0.4, 1.9, -1.5}), glass));
  }
  m.append(colored(box({1.0, 3.4, -0.9}, {1.5, 5.0, -0.4}), stone));
  return m;
}

}  // namespace shapes

}  // namespace vantage
