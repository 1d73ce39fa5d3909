#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hdgeig/error.hpp"
#include "hdgeig/quadrature.hpp"
#include "hdgeig/study.hpp"

using namespace hdgeig;

namespace {

Eigen::MatrixXd interpolate(const Mesh& m, int degree, const ExactMode& mode) {
  const ScalarBasis<> b(degree);
  const auto rule = triangle_quadrature(12);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.size(), m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto map = AffineMap<double>::from_vertices(m.vertex(e, 0), m.vertex(e, 1), m.vertex(e, 2));
    for (Eigen::Index q = 0; q < rule.size(); ++q)
      out.col(e) += rule.weights(q) * mode.eigenfunction(map.to_physical(rule.point(q))) * b.values(rule.point(q));
  }
  return out;
}

ConvergenceReport small_report() {
  StudyConfig c;
  c.k = 1;
  c.level_min = 0;
  c.level_max = 1;
  c.modes = {1, 2, 4};
  return run_convergence_study(c);
}

}  // namespace

TEST_SUITE("study") {
  TEST_CASE("square spectrum") {
    const auto s = exact_square_spectrum(6);
    const double expect[] = {2, 5, 5, 8, 10, 10};
    for (int i = 0; i < 6; ++i) {
      CHECK(s[i].value == expect[i]);
      CHECK(s[i].index == i + 1);
      CHECK(s[i].value == s[i].m * s[i].m + s[i].n * s[i].n);
    }
    CHECK(s[0].multiplicity == 1);
    CHECK(s[1].multiplicity == 2);
    CHECK(s[3].multiplicity == 1);
    CHECK(exact_square_spectrum(11)[10].value == 18.0);
    CHECK(std::abs(s[0].eigenfunction(Point(std::numbers::pi / 2, std::numbers::pi / 2)) * std::numbers::pi / 2 -
                   1.0) < 1e-15);
    CHECK_THROWS_AS(exact_square_spectrum(0), ConfigError);
  }

  TEST_CASE("L-shape reference values") {
    const auto v = exact_lshape_values();
    CHECK(v.mode1 == 9.63972384464540);
    CHECK(std::abs(v.mode3 - 19.739208802178716) < 1e-13);
    CHECK(v.mode1 < v.mode3);
    CHECK(exact_mode(Domain::lshape, 1)->singular);
    CHECK_FALSE(exact_mode(Domain::lshape, 2).has_value());
    CHECK(exact_mode(Domain::lshape, 3)->value == v.mode3);
  }

  TEST_CASE("eigenfunction normalisation") {
    // ||sin x sin y|| = pi/2, so the normalised function has unit norm
    const Mesh m = build_square_mesh(2);
    const ExactMode mode = exact_square_spectrum(1)[0];
    const auto rule = triangle_quadrature(12);
    double n2 = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const auto map = AffineMap<double>::from_vertices(m.vertex(e, 0), m.vertex(e, 1), m.vertex(e, 2));
      for (Eigen::Index q = 0; q < rule.size(); ++q) {
        const double v = mode.eigenfunction(map.to_physical(rule.point(q)));
        n2 += rule.weights(q) * std::abs(map.det) * v * v;
      }
    }
    CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-12);
  }

  TEST_CASE("eigenfunction error") {
    const Mesh m = build_square_mesh(1);
    const ExactMode mode = exact_square_spectrum(4)[3];
    // projections of the exact function converge fast; the sign does not matter
    const Eigen::MatrixXd u = interpolate(m, 4, mode);
    const double e = eigenfunction_error(m, 4, u, mode);
    CHECK(e < 2e-3);
    CHECK(std::abs(eigenfunction_error(m, 4, -3.0 * u, mode) - e) < 1e-14);
    const Mesh fine = build_square_mesh(3);
    CHECK(eigenfunction_error(fine, 6, interpolate(fine, 6, mode), mode) < 1e-10);
    // clustered modes have no eigenfunction
    CHECK_THROWS_AS(eigenfunction_error(m, 4, u, exact_square_spectrum(2)[1]), ConfigError);
  }

  TEST_CASE("order estimation") {
    const auto a = estimate_order(std::vector<double>{4e-2, 1e-2});
    CHECK_FALSE(a[0].has_value());
    CHECK(*a[1] == doctest::Approx(2.0));
    CHECK(*estimate_order(std::vector<double>{1e-3, 1e-3})[1] == doctest::Approx(0.0));
    CHECK(*estimate_order(std::vector<double>{5.97e-3, 8.44e-4})[1] == doctest::Approx(2.82).epsilon(0.002));
    CHECK_FALSE(estimate_order(std::vector<double>{1e-3, 0.0})[1].has_value());
    CHECK_FALSE(estimate_order(std::vector<double>{-1.0, 1e-3})[1].has_value());
  }

  TEST_CASE("config validation") {
    StudyConfig c;
    CHECK_NOTHROW(c.validate());
    c.level_min = 2;
    c.level_max = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StudyConfig{};
    c.k = 0;
    c.tau = "zero";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.space_case = SpaceCase::case1;
    c.k = 1;
    CHECK_NOTHROW(c.validate());
    c = StudyConfig{};
    c.modes = {0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("study run: k = 2 rows") {
    StudyConfig c;
    c.k = 2;
    c.level_min = 0;
    c.level_max = 2;
    c.modes = {1};
    c.postprocess = false;
    const ConvergenceReport r = run_convergence_study(c);
    const auto e = r.errors(1, Quantity::lambda);
    const auto o = r.orders(1, Quantity::lambda);
    CHECK(*e[0] == doctest::Approx(1.38e-4).epsilon(0.2));
    CHECK(*e[1] == doctest::Approx(4.53e-6).epsilon(0.2));
    CHECK(*e[2] == doctest::Approx(1.43e-7).epsilon(0.2));
    CHECK(*o[1] == doctest::Approx(4.93).epsilon(0.05));
    CHECK(*o[2] == doctest::Approx(4.98).epsilon(0.05));
    CHECK(r.cell(1, 2)->iterations <= 10);
    CHECK(r.levels.size() == 3);
    CHECK(r.levels[2].elements == 512);
  }

  TEST_CASE("mode matching is stable") {
    StudyConfig c;
    c.k = 1;
    c.level_min = 1;
    c.level_max = 2;
    c.modes = {1, 2, 3, 4, 5, 6};
    c.postprocess = false;
    const ConvergenceReport r = run_convergence_study(c);
    const auto exact = exact_square_spectrum(6);
    for (const auto& cell : r.cells) {
      REQUIRE(cell.lambda.has_value());
      CHECK(std::abs(*cell.lambda - exact[cell.mode - 1].value) < 0.5 * exact[cell.mode - 1].value);
      // clustered modes get eigenvalue errors only
      CHECK(cell.u_error.has_value() == exact[cell.mode - 1].has_eigenfunction());
    }
  }

  TEST_CASE("failures are recorded per cell") {
    StudyConfig c;
    c.k = 1;
    c.level_min = 0;
    c.level_max = 0;
    c.modes = {1};
    c.solver.max_iter = 1;
    c.solver.rel_tol = 1e-300;
    const ConvergenceReport r = run_convergence_study(c);
    REQUIRE(r.cells.size() == 1);
    CHECK_FALSE(r.cells[0].failure.empty());
    CHECK_FALSE(r.cells[0].lambda_error.has_value());
    const std::string md = emit_table(r, TableFormat::markdown);
    CHECK(md.find("fail") != std::string::npos);
    CHECK(md.find("## Failures") != std::string::npos);
  }

  TEST_CASE("report rendering") {
    const ConvergenceReport r = small_report();
    const std::string md = emit_table(r, TableFormat::markdown);
    CHECK(md.find("| level | mode 1 error | order | mode 2 error | order | mode 4 error | order |") !=
          std::string::npos);
    CHECK(md.find("## |lambda - lambda*_h|") != std::string::npos);

    const std::string csv = emit_table(r, TableFormat::csv);
    std::istringstream is(csv);
    std::string header, row;
    std::getline(is, header);
    CHECK(header.rfind("k,level,elements,trace_dofs,mode1_lambda_error,mode1_lambda_order", 0) == 0);
    int rows = 0;
    while (std::getline(is, row)) ++rows;
    CHECK(rows == 2);

    // deterministic output
    CHECK(emit_table(small_report(), TableFormat::csv) == csv);
  }

  TEST_CASE("json round trip") {
    const ConvergenceReport r = small_report();
    const ConvergenceReport back = parse_report_json(emit_table(r, TableFormat::json));
    CHECK(back == r);
    CHECK_THROWS_AS(parse_report_json("{\"config\": 1}"), ConfigError);
  }

  TEST_CASE("empty report renders headers only") {
    ConvergenceReport r;
    const std::string csv = emit_table(r, TableFormat::csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
    const std::string md = emit_table(r, TableFormat::markdown);
    CHECK(md.find("# HDG eigenvalue convergence") == 0);
    CHECK(md.find("| 0 |") == std::string::npos);
    CHECK(parse_report_json(emit_table(r, TableFormat::json)) == r);
  }

  TEST_CASE("format names") {
    CHECK(parse_format("markdown") == TableFormat::markdown);
    CHECK(parse_format("csv") == TableFormat::csv);
    CHECK(parse_format("json") == TableFormat::json);
    CHECK_THROWS_AS(parse_format("xml"), ConfigError);
  }
}
