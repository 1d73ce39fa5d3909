#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hdgeig/error.hpp"
#include "hdgeig/mesh.hpp"

using namespace hdgeig;

namespace {

void check_invariants(const Mesh& m, double area) {
  const int T = m.num_elements(), E = m.num_edges(), V = m.num_vertices();
  CHECK(3 * T == 2 * m.num_interior_edges() + m.num_boundary_edges());
  CHECK(V - E + T == 1);
  CHECK(std::abs(m.total_area() - area) <= 1e-12 * area);
  double hmax = 0.0;
  for (int t = 0; t < T; ++t) {
    CHECK(m.signed_area(t) > 0.0);
    hmax = std::max(hmax, m.diameters[t]);
    for (int f = 0; f < 3; ++f) {
      const int e = m.element_edges[t][f];
      int hits = 0;
      for (const auto& inc : m.edge_to_elements[e])
        if (inc.element == t && inc.local_face == f) ++hits;
      CHECK(hits == 1);
      // the face endpoints are the edge endpoints
      const int a = m.triangles[t][f], b = m.triangles[t][(f + 1) % 3];
      CHECK(std::min(a, b) == m.edges[e][0]);
      CHECK(std::max(a, b) == m.edges[e][1]);
    }
  }
  CHECK(hmax == m.h);
  for (int e = 0; e < E; ++e) {
    const auto& inc = m.edge_to_elements[e];
    if (m.boundary[e]) {
      CHECK(inc[0].element >= 0);
      CHECK(inc[1].element == -1);
    } else {
      CHECK(inc[0].element >= 0);
      CHECK(inc[1].element >= 0);
      CHECK(inc[0].element < inc[1].element);
    }
    for (const auto& i : inc)
      if (i.element >= 0) CHECK(m.element_edges[i.element][i.local_face] == e);
  }
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("square level 0 counts") {
    const Mesh m = build_square_mesh(0);
    CHECK(m.num_elements() == 32);
    CHECK(m.num_vertices() == 25);
    CHECK(m.num_edges() == 56);
    CHECK(m.num_boundary_edges() == 16);
    CHECK(m.num_interior_edges() == 40);
    CHECK(std::abs(m.total_area() - std::numbers::pi * std::numbers::pi) < 1e-12 * 10);
  }

  TEST_CASE("square level 2 has 512 triangles") { CHECK(build_square_mesh(2).num_elements() == 512); }

  TEST_CASE("lshape level 0 counts") {
    const Mesh m = build_lshape_mesh(0);
    CHECK(m.num_elements() == 24);
    CHECK(m.num_vertices() == 21);
    CHECK(m.num_edges() == 44);
    CHECK(m.num_boundary_edges() == 16);
    CHECK(m.num_interior_edges() == 28);
    CHECK(std::abs(m.total_area() - 3.0) < 1e-12 * 3.0);
    CHECK(build_lshape_mesh(1).num_elements() == 96);
  }

  TEST_CASE("invariants on every level") {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int level = 0; level <= 3; ++level) {
      CAPTURE(level);
      check_invariants(build_square_mesh(level), pi2);
      check_invariants(build_lshape_mesh(level), 3.0);
    }
  }

  TEST_CASE("reentrant corner stays a vertex") {
    for (int level = 0; level <= 3; ++level) {
      const Mesh m = build_lshape_mesh(level);
      bool found = false;
      for (const auto& v : m.vertices) found |= (v - Point(1.0, 1.0)).norm() < 1e-14;
      CHECK(found);
      // nothing inside the removed quadrant
      for (int t = 0; t < m.num_elements(); ++t) {
        const Point c = m.centroid(t);
        CHECK_FALSE((c.x() > 1.0 && c.y() > 1.0));
      }
    }
  }

  TEST_CASE("refinement halves h and quadruples elements") {
    for (Domain d : {Domain::square, Domain::lshape}) {
      const Mesh m0 = build_mesh(d, 0);
      for (int level = 1; level <= 3; ++level) {
        const Mesh m = build_mesh(d, level);
        CHECK(m.level == level);
        CHECK(m.num_elements() == m0.num_elements() << (2 * level));
        CHECK(std::abs(m.h - m0.h / std::pow(2.0, level)) < 1e-14 * m0.h);
        CHECK(std::abs(m.spacing - m0.spacing / std::pow(2.0, level)) < 1e-14 * m0.h);
      }
    }
  }

  TEST_CASE("refine(level 0) equals level 1") {
    const Mesh a = refine(build_square_mesh(0));
    const Mesh b = build_square_mesh(1);
    REQUIRE(a.num_vertices() == b.num_vertices());
    REQUIRE(a.num_elements() == b.num_elements());
    for (int i = 0; i < a.num_vertices(); ++i) CHECK((a.vertices[i] - b.vertices[i]).norm() == 0.0);
    CHECK(a.triangles == b.triangles);
  }

  TEST_CASE("boundary flags sit on the domain boundary") {
    const Mesh m = build_lshape_mesh(2);
    auto on_boundary = [](const Point& p) {
      const double eps = 1e-12;
      return std::abs(p.x()) < eps || std::abs(p.y()) < eps || std::abs(p.x() - 2) < eps ||
             std::abs(p.y() - 2) < eps || (std::abs(p.x() - 1) < eps && p.y() >= 1 - eps) ||
             (std::abs(p.y() - 1) < eps && p.x() >= 1 - eps);
    };
    for (int e = 0; e < m.num_edges(); ++e) {
      const Point mid = 0.5 * (m.vertices[m.edges[e][0]] + m.vertices[m.edges[e][1]]);
      CHECK(static_cast<bool>(m.boundary[e]) == on_boundary(mid));
    }
  }

  TEST_CASE("renumbered mesh stays valid") {
    const Mesh m = renumbered(build_lshape_mesh(1), 7u);
    check_invariants(m, 3.0);
    CHECK(m.num_elements() == 96);
  }

  TEST_CASE("locate finds the containing element") {
    const Mesh m = build_square_mesh(1);
    for (int t = 0; t < m.num_elements(); t += 7) CHECK(m.locate(m.centroid(t)) == t);
    CHECK(m.locate(Point(-1.0, 0.5)) == -1);
  }

  TEST_CASE("mesh dump format") {
    const Mesh m = build_square_mesh(0);
    std::ostringstream os;
    write_mesh(os, m);
    std::istringstream is(os.str());
    std::string tag;
    int nv = 0, nt = 0, ne = 0, nb = 0;
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      ls >> tag;
      if (tag == "v") ++nv;
      if (tag == "t") ++nt;
      if (tag == "e") {
        int i, j, flag;
        ls >> i >> j >> flag;
        ++ne;
        nb += flag;
      }
    }
    CHECK(nv == 25);
    CHECK(nt == 32);
    CHECK(ne == 56);
    CHECK(nb == 16);
  }

  TEST_CASE("negative level rejected") { CHECK_THROWS_AS(build_square_mesh(-1), ConfigError); }
}
