#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hdgeig {

using Point = Eigen::Vector2d;

enum class Domain { square, lshape };

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

struct EdgeIncidence {
  int element = -1;
  int local_face = -1;
};

/// Conforming triangulation with edge connectivity.
///
/// Local face f of triangle t runs from local vertex f to local vertex (f+1)%3.
/// Edges are stored with their endpoints sorted by global vertex index; that
/// direction fixes the parametrisation (and therefore the sign) of trace bases.
struct Mesh {
  Domain domain = Domain::square;
  int level = 0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<EdgeIncidence, 2>> edge_to_elements;
  std::vector<std::uint8_t> boundary;  // per edge
  std::vector<std::array<int, 3>> element_edges;
  std::vector<double> diameters;  // longest edge per element
  double h = 0.0;        // largest element diameter
  double spacing = 0.0;  // shortest edge (the grid spacing on the model meshes)

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_boundary_edges() const;
  int num_interior_edges() const { return num_edges() - num_boundary_edges(); }

  Point vertex(int element, int local) const { return vertices[triangles[element][local]]; }
  double signed_area(int element) const;
  Point centroid(int element) const;
  double total_area() const;

  /// True when the local face runs against the stored edge direction.
  bool face_flipped(int element, int face) const;

  /// Element containing p (first match), or -1.
  int locate(const Point& p) const;
};

/// Build connectivity, boundary flags and diameters from vertices + CCW triangles.
Mesh make_mesh(Domain domain, int level, std::vector<Point> vertices,
               std::vector<std::array<int, 3>> triangles);

Mesh build_square_mesh(int level);
Mesh build_lshape_mesh(int level);
Mesh build_mesh(Domain domain, int level);

/// Red refinement: every triangle is split into four congruent children.
Mesh refine(const Mesh& mesh);

/// Same mesh with vertices and elements randomly renumbered and each
/// triangle's local vertex order cyclically rotated.
Mesh renumbered(const Mesh& mesh, std::uint32_t seed, bool permute_vertices = true);

/// Plain-text dump: `v x y`, `t i j k`, `e i j flag` lines.
void write_mesh(std::ostream& os, const Mesh& mesh);

}  // namespace hdgeig
