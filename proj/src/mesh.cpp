#include "hdgeig/mesh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "hdgeig/error.hpp"

namespace hdgeig {

std::string_view to_string(Domain d) { return d == Domain::square ? "square" : "lshape"; }

Domain parse_domain(std::string_view s) {
  if (s == "square") return Domain::square;
  if (s == "lshape" || s == "l-shape" || s == "L") return Domain::lshape;
  throw ConfigError("unknown domain '" + std::string(s) + "' (expected square|lshape)");
}

int Mesh::num_boundary_edges() const {
  return static_cast<int>(std::count(boundary.begin(), boundary.end(), std::uint8_t{1}));
}

double Mesh::signed_area(int element) const {
  const Point a = vertex(element, 0), b = vertex(element, 1), c = vertex(element, 2);
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Point Mesh::centroid(int element) const {
  return (vertex(element, 0) + vertex(element, 1) + vertex(element, 2)) / 3.0;
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int e = 0; e < num_elements(); ++e) sum += signed_area(e);
  return sum;
}

bool Mesh::face_flipped(int element, int face) const {
  const int from = triangles[element][face];
  return from != edges[element_edges[element][face]][0];
}

int Mesh::locate(const Point& p) const {
  for (int e = 0; e < num_elements(); ++e) {
    const Point a = vertex(e, 0), b = vertex(e, 1), c = vertex(e, 2);
    Eigen::Matrix2d jac;
    jac.col(0) = b - a;
    jac.col(1) = c - a;
    const Eigen::Vector2d xi = jac.inverse() * (p - a);
    constexpr double tol = 1e-12;
    if (xi.x() >= -tol && xi.y() >= -tol && xi.sum() <= 1.0 + tol) return e;
  }
  return -1;
}

Mesh make_mesh(Domain domain, int level, std::vector<Point> vertices,
               std::vector<std::array<int, 3>> triangles) {
  Mesh m;
  m.domain = domain;
  m.level = level;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);

  const int nt = m.num_elements();
  std::map<std::pair<int, int>, int> edge_index;
  m.element_edges.resize(nt);
  for (int t = 0; t < nt; ++t) {
    if (m.signed_area(t) <= 0.0) throw ConfigError("triangle " + std::to_string(t) + " is not CCW");
    for (int f = 0; f < 3; ++f) {
      int a = m.triangles[t][f], b = m.triangles[t][(f + 1) % 3];
      auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, m.num_edges());
      if (inserted) {
        m.edges.push_back({key.first, key.second});
        m.edge_to_elements.push_back({EdgeIncidence{t, f}, EdgeIncidence{}});
      } else {
        auto& inc = m.edge_to_elements[it->second];
        if (inc[1].element >= 0) throw ConfigError("non-manifold edge in triangulation");
        inc[1] = EdgeIncidence{t, f};
      }
      m.element_edges[t][f] = it->second;
    }
  }

  m.boundary.resize(m.edges.size());
  for (std::size_t e = 0; e < m.edges.size(); ++e)
    m.boundary[e] = m.edge_to_elements[e][1].element < 0 ? 1 : 0;

  m.diameters.resize(nt);
  m.h = 0.0;
  m.spacing = std::numeric_limits<double>::infinity();
  for (int t = 0; t < nt; ++t) {
    double d = 0.0;
    for (int f = 0; f < 3; ++f) {
      const double len = (m.vertex(t, (f + 1) % 3) - m.vertex(t, f)).norm();
      d = std::max(d, len);
      m.spacing = std::min(m.spacing, len);
    }
    m.diameters[t] = d;
    m.h = std::max(m.h, d);
  }
  return m;
}

namespace {

// 4x4 grid of squares over [x0,x0+len]^2, each split along its positively
// sloped diagonal; `keep(i, j)` selects grid cells.
template <typename Keep>
Mesh grid_mesh(Domain domain, double len, Keep keep) {
  constexpr int n = 4;
  const double step = len / n;
  std::vector<int> id((n + 1) * (n + 1), -1);
  std::vector<Point> verts;
  std::vector<std::array<int, 3>> tris;
  auto vid = [&](int i, int j) {
    int& slot = id[j * (n + 1) + i];
    if (slot < 0) {
      slot = static_cast<int>(verts.size());
      verts.emplace_back(i * step, j * step);
    }
    return slot;
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!keep(i, j)) continue;
      const int p00 = vid(i, j), p10 = vid(i + 1, j), p11 = vid(i + 1, j + 1), p01 = vid(i, j + 1);
      tris.push_back({p00, p10, p11});
      tris.push_back({p00, p11, p01});
    }
  }
  return make_mesh(domain, 0, std::move(verts), std::move(tris));
}

}  // namespace

Mesh build_square_mesh(int level) {
  if (level < 0) throw ConfigError("mesh level must be nonnegative");
  Mesh m = grid_mesh(Domain::square, std::numbers::pi, [](int, int) { return true; });
  for (int l = 0; l < level; ++l) m = refine(m);
  return m;
}

Mesh build_lshape_mesh(int level) {
  if (level < 0) throw ConfigError("mesh level must be nonnegative");
  Mesh m = grid_mesh(Domain::lshape, 2.0, [](int i, int j) { return !(i >= 2 && j >= 2); });
  for (int l = 0; l < level; ++l) m = refine(m);
  return m;
}

Mesh build_mesh(Domain domain, int level) {
  return domain == Domain::square ? build_square_mesh(level) : build_lshape_mesh(level);
}

Mesh refine(const Mesh& mesh) {
  std::vector<Point> verts = mesh.vertices;
  verts.reserve(mesh.vertices.size() + mesh.edges.size());
  const int nv = mesh.num_vertices();
  for (const auto& e : mesh.edges) verts.push_back(0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]));

  std::vector<std::array<int, 3>> tris;
  tris.reserve(4 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& v = mesh.triangles[t];
    const auto& ed = mesh.element_edges[t];
    // midpoint of face f (between local vertices f and f+1)
    const int m0 = nv + ed[0], m1 = nv + ed[1], m2 = nv + ed[2];
    tris.push_back({v[0], m0, m2});
    tris.push_back({m0, v[1], m1});
    tris.push_back({m2, m1, v[2]});
    tris.push_back({m0, m1, m2});
  }
  return make_mesh(mesh.domain, mesh.level + 1, std::move(verts), std::move(tris));
}

Mesh renumbered(const Mesh& mesh, std::uint32_t seed, bool permute_vertices) {
  std::mt19937 rng(seed);
  std::vector<int> vperm(mesh.vertices.size());
  std::iota(vperm.begin(), vperm.end(), 0);
  if (permute_vertices) std::shuffle(vperm.begin(), vperm.end(), rng);
  std::vector<Point> verts(mesh.vertices.size());
  for (std::size_t i = 0; i < vperm.size(); ++i) verts[vperm[i]] = mesh.vertices[i];

  std::vector<int> tperm(mesh.triangles.size());
  std::iota(tperm.begin(), tperm.end(), 0);
  std::shuffle(tperm.begin(), tperm.end(), rng);
  std::vector<std::array<int, 3>> tris(mesh.triangles.size());
  std::uniform_int_distribution<int> rot(0, 2);
  for (std::size_t t = 0; t < tperm.size(); ++t) {
    const auto& old = mesh.triangles[tperm[t]];
    const int r = rot(rng);
    tris[t] = {vperm[old[r]], vperm[old[(r + 1) % 3]], vperm[old[(r + 2) % 3]]};
  }
  return make_mesh(mesh.domain, mesh.level, std::move(verts), std::move(tris));
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  const auto old = os.precision(17);
  for (const auto& p : mesh.vertices) os << "v " << p.x() << ' ' << p.y() << '\n';
  for (const auto& t : mesh.triangles) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int e = 0; e < mesh.num_edges(); ++e)
    os << "e " << mesh.edges[e][0] << ' ' << mesh.edges[e][1] << ' ' << int(mesh.boundary[e]) << '\n';
  os.precision(old);
}

}  // namespace hdgeig
