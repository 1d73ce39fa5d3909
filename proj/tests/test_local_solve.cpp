#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "hdgeig/basis.hpp"
#include "hdgeig/error.hpp"
#include "hdgeig/local_solve.hpp"
#include "hdgeig/quadrature.hpp"
#include "support.hpp"

using namespace hdgeig;

namespace {

Mesh single_triangle(const Point& a, const Point& b, const Point& c) {
  return make_mesh(Domain::square, 0, {a, b, c}, {{0, 1, 2}});
}

Mesh reference_triangle() { return single_triangle(Point(0, 0), Point(1, 0), Point(0, 1)); }

struct LocalResidual {
  double flux = 0.0;
  double state = 0.0;
};

// Both local equations tested against the full V and W bases, assembled from
// scratch: (c q, r) - (u, div r) + <mu, r.n> = 0 and
// (div q, w) + <tau (u - mu), w> - (f, w) = 0, relative to the largest term.
LocalResidual lift_residual(const ElementGeometry& g, const SpaceConfig& sp, const std::array<double, 3>& tau,
                            const MaterialSpec& mat, const Eigen::VectorXd& mu, const Eigen::VectorXd& f,
                            const Eigen::VectorXd& q, const Eigen::VectorXd& u) {
  const ScalarBasis<> wb(sp.kw);
  const VectorBasis<> vb(sp.kv);
  const EdgeBasis<> eb(sp.k);
  const int nk = eb.size();
  const auto vol = triangle_quadrature(12);
  const auto edge = edge_quadrature(12);
  Eigen::VectorXd t1 = Eigen::VectorXd::Zero(vb.size()), t2 = t1, t3 = t1;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(wb.size()), s2 = s1, s3 = s1;
  for (Eigen::Index i = 0; i < vol.size(); ++i) {
    const Eigen::Vector2d xi = vol.point(i);
    const double w = vol.weights(i) * std::abs(g.map.det);
    const auto psi = vb.values(xi);
    const Eigen::VectorXd div = vb.divergences(xi, g.map);
    const Eigen::VectorXd phi = wb.values(xi);
    const Eigen::Vector2d qv = psi.transpose() * q;
    const double qdiv = div.dot(q);
    t1 += w * psi * (mat.c * qv);
    t2 -= w * phi.dot(u) * div;
    s1 += w * qdiv * phi;
    s3 -= w * phi.dot(f) * phi;
  }
  for (int fc = 0; fc < 3; ++fc)
    for (Eigen::Index i = 0; i < edge.size(); ++i) {
      const double s = edge.points(i, 0);
      const double w = edge.weights(i) * g.lengths[fc];
      const Eigen::Vector2d xi = face_point(fc, s);
      const double m = eb.values(g.flipped[fc] ? 1 - s : s).dot(mu.segment(fc * nk, nk));
      const Eigen::VectorXd phi = wb.values(xi);
      t3 += w * m * (vb.values(xi) * g.normals[fc]);
      s2 += w * tau[fc] * (phi.dot(u) - m) * phi;
    }
  // terms can all vanish (k = 0), so the inputs set a floor for the scale
  const double floor = mu.norm() + std::sqrt(g.area) * f.norm();
  LocalResidual r;
  r.flux = (t1 + t2 + t3).norm() / std::max({t1.norm(), t2.norm(), t3.norm(), floor});
  r.state = (s1 + s2 + s3).norm() / std::max({s1.norm(), s2.norm(), s3.norm(), floor});
  return r;
}

void check_lifts(const Mesh& mesh, int e, const SpaceConfig& sp, const TauSpec& tau, std::mt19937& rng) {
  const MaterialSpec mat = MaterialSpec::isotropic();
  const LocalLift lift = element_lift(mesh, e, sp, tau, mat);
  const ElementGeometry g = element_geometry(mesh, e);
  const auto tv = tau.face_values(mesh, e);
  const Eigen::VectorXd mu = testing::random_matrix(sp.local_trace_dim(), 1, rng);
  const Eigen::VectorXd f = testing::random_matrix(sp.w_dim(), 1, rng);
  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(sp.w_dim());
  const Eigen::VectorXd zero_mu = Eigen::VectorXd::Zero(sp.local_trace_dim());
  // trace lift
  auto r = lift_residual(g, sp, tv, mat, mu, zero_f, lift->q_trace * mu, lift->u_trace * mu);
  CHECK(r.flux < 1e-11);
  CHECK(r.state < 1e-11);
  // load lift
  r = lift_residual(g, sp, tv, mat, zero_mu, f, lift->q_load * f, lift->u_load * f);
  CHECK(r.flux < 1e-11);
  CHECK(r.state < 1e-11);
}

}  // namespace

TEST_SUITE("localsolve") {
  TEST_CASE("space configurations") {
    const auto eq = SpaceConfig::make(2);
    CHECK(eq.kw == 2);
    CHECK(eq.kv == 2);
    const auto c1 = SpaceConfig::make(2, SpaceCase::case1);
    CHECK(c1.kw == 1);
    CHECK(c1.kv == 2);
    const auto c2 = SpaceConfig::make(2, SpaceCase::case2);
    CHECK(c2.kw == 2);
    CHECK(c2.kv == 1);
    CHECK_THROWS_AS(SpaceConfig::make(0, SpaceCase::case1), ConfigError);
    CHECK_THROWS_AS(SpaceConfig::make(0, SpaceCase::case2), ConfigError);
    CHECK_THROWS_AS(SpaceConfig::make(-1), ConfigError);
  }

  TEST_CASE("tau parsing and solvability") {
    CHECK(parse_tau("one").value == 1.0);
    CHECK(parse_tau("h").variant == TauVariant::global_h);
    CHECK(parse_tau("invh").variant == TauVariant::inverse_global_h);
    CHECK(parse_tau("zero").variant == TauVariant::zero);
    CHECK(parse_tau("const:2.5").value == 2.5);
    CHECK_THROWS_AS(parse_tau("bogus"), ConfigError);
    CHECK_THROWS_AS(parse_tau("const:-1"), ConfigError);
    try {
      validate(SpaceConfig::make(0), TauSpec::zero());
      FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("positive on at least one face") != std::string::npos);
    }
    CHECK_THROWS_AS(validate(SpaceConfig::make(1, SpaceCase::case2), TauSpec::zero()), ConfigError);
    CHECK_NOTHROW(validate(SpaceConfig::make(1, SpaceCase::case1), TauSpec::zero()));
  }

  TEST_CASE("tau h uses the grid spacing") {
    const Mesh m = build_square_mesh(1);
    const double spacing = std::numbers::pi / 8;
    CHECK(std::abs(TauSpec::h().face_values(m, 0)[0] - spacing) < 1e-14);
    CHECK(std::abs(TauSpec::inverse_h().face_values(m, 3)[2] - 1 / spacing) < 1e-13);
    TauSpec local = TauSpec::h();
    local.use_local_h = true;
    CHECK(std::abs(local.face_values(m, 0)[1] - m.diameters[0]) < 1e-14);
  }

  TEST_CASE("material") {
    Eigen::Matrix2d a;
    a << 2.0, 0.5, 0.5, 1.0;
    const MaterialSpec m = MaterialSpec::from_alpha(a);
    CHECK((m.c * m.alpha - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::Matrix2d bad;
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(MaterialSpec::from_alpha(bad), ConfigError);
    Eigen::Matrix2d nonsym;
    nonsym << 1.0, 0.1, 0.0, 1.0;
    CHECK_THROWS_AS(MaterialSpec::from_alpha(nonsym), ConfigError);
  }

  TEST_CASE("lift residuals on the reference triangle") {
    std::mt19937 rng(1);
    check_lifts(reference_triangle(), 0, SpaceConfig::make(1), TauSpec::one(), rng);
  }

  TEST_CASE("lift residuals on every level-0 element") {
    std::mt19937 rng(2);
    const Mesh m = build_square_mesh(0);
    for (int k = 0; k <= 2; ++k)
      for (int e = 0; e < m.num_elements(); ++e) check_lifts(m, e, SpaceConfig::make(k), TauSpec::one(), rng);
  }

  TEST_CASE("lift residuals for mixed cases, anisotropic tau and BDM") {
    std::mt19937 rng(4);
    const Mesh m = build_lshape_mesh(0);
    for (int e = 0; e < m.num_elements(); e += 5) {
      check_lifts(m, e, SpaceConfig::make(2, SpaceCase::case1), TauSpec::one(), rng);
      check_lifts(m, e, SpaceConfig::make(2, SpaceCase::case2), TauSpec::inverse_h(), rng);
      check_lifts(m, e, SpaceConfig::make(1, SpaceCase::case1), TauSpec::zero(), rng);
      check_lifts(m, e, SpaceConfig::make(3), TauSpec::h(), rng);
    }
  }

  TEST_CASE("constants are reproduced for k = 0") {
    const Mesh m = reference_triangle();
    const LocalLift lift = element_lift(m, 0, SpaceConfig::make(0), TauSpec::one(), MaterialSpec::isotropic());
    const double c = 1.7;
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(3, c);  // the edge basis constant is 1
    const Eigen::VectorXd u = lift->u_trace * mu;
    const double value = ScalarBasis<>(0).values(Eigen::Vector2d(0.3, 0.3)).dot(u);
    CHECK(std::abs(value - c) < 1e-13);
    CHECK((lift->q_trace * mu).norm() < 1e-13);
  }

  TEST_CASE("U^W is self-adjoint in L2") {
    for (int k = 0; k <= 3; ++k) {
      const LocalLift lift = element_lift(reference_triangle(), 0, SpaceConfig::make(k), TauSpec::one(),
                                          MaterialSpec::isotropic());
      CHECK(testing::symmetry_defect(lift->mass_w * lift->u_load) < 1e-12);
    }
    const Mesh m = build_lshape_mesh(1);
    const LocalLift lift = element_lift(m, 17, SpaceConfig::make(2, SpaceCase::case2), TauSpec::h(),
                                        MaterialSpec::isotropic());
    CHECK(testing::symmetry_defect(lift->mass_w * lift->u_load) < 1e-12);
  }

  TEST_CASE("local stiffness is symmetric positive semidefinite") {
    const LocalLift lift = element_lift(reference_triangle(), 0, SpaceConfig::make(2), TauSpec::one(),
                                        MaterialSpec::isotropic());
    CHECK(testing::symmetry_defect(lift->a_local) < 1e-13);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lift->a_local);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12 * eig.eigenvalues().maxCoeff());
  }

  TEST_CASE("resolvent") {
    std::mt19937 rng(9);
    const Mesh m = reference_triangle();
    for (int k : {1, 2}) {
      const LocalLift lift = element_lift(m, 0, SpaceConfig::make(k), TauSpec::one(), MaterialSpec::isotropic());
      const int n = lift->u_load.rows();
      const Eigen::VectorXd w = testing::random_matrix(n, 1, rng);
      CHECK((apply_uw_inverse(lift, 0.0, w) - w).norm() == 0.0);
      const Eigen::MatrixXd i_minus = Eigen::MatrixXd::Identity(n, n) - 1.0 * lift->u_load;
      const Eigen::VectorXd x = apply_uw_inverse(lift, 1.0, w);
      CHECK((i_minus * x - w).norm() <= 1e-12 * w.norm());
      if (k == 2) {
        const Eigen::MatrixXd dense = (Eigen::MatrixXd::Identity(n, n) - 2.0 * lift->u_load).inverse();
        CHECK((uw_resolvent(lift, 2.0) - dense).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((apply_uw_inverse(lift, 2.0, w) - dense * w).cwiseAbs().maxCoeff() < 1e-11);
      }
    }
  }

  TEST_CASE("resolvent near a pole is reported") {
    const LocalLift lift = element_lift(reference_triangle(), 0, SpaceConfig::make(1), TauSpec::one(),
                                        MaterialSpec::isotropic());
    Eigen::EigenSolver<Eigen::MatrixXd> es(lift->u_load);
    const double top = es.eigenvalues().real().maxCoeff();
    REQUIRE(top > 0.0);
    CHECK_THROWS_AS(uw_resolvent(lift, 1.0 / top), NumericalError);
  }

  TEST_CASE("translated elements give identical lifts") {
    const SpaceConfig sp = SpaceConfig::make(2);
    const MaterialSpec mat = MaterialSpec::isotropic();
    const Point a(0.1, 0.2), b(0.9, 0.3), c(0.4, 1.1), shift(3.25, -1.5);
    const Mesh m1 = single_triangle(a, b, c);
    const Mesh m2 = single_triangle(a + shift, b + shift, c + shift);
    const LocalLift l1 = element_lift(m1, 0, sp, TauSpec::one(), mat);
    const LocalLift l2 = element_lift(m2, 0, sp, TauSpec::one(), mat);
    CHECK((l1->u_trace - l2->u_trace).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((l1->q_trace - l2->q_trace).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((l1->u_load - l2->u_load).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((l1->a_local - l2->a_local).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("lift cache groups congruent elements") {
    const Mesh m = build_square_mesh(2);
    LiftCache cache(SpaceConfig::make(1), TauSpec::one(), MaterialSpec::isotropic());
    for (int e = 0; e < m.num_elements(); ++e) cache.get(m, e);
    CHECK(cache.classes() < 20);
    const LocalLift cached = cache.get(m, 100);
    const LocalLift direct = element_lift(m, 100, SpaceConfig::make(1), TauSpec::one(), MaterialSpec::isotropic());
    CHECK((cached->u_trace - direct->u_trace).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("U^W shrinks like h^2 when tau h is fixed") {
    auto radius = [](const Mesh& m) {
      const LocalLift l = element_lift(m, 0, SpaceConfig::make(1), TauSpec::inverse_h(), MaterialSpec::isotropic());
      Eigen::EigenSolver<Eigen::MatrixXd> es(l->u_load);
      return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    for (int level = 0; level < 3; ++level) {
      const double ratio = radius(build_square_mesh(level)) / radius(build_square_mesh(level + 1));
      CAPTURE(level);
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
    }
  }

  TEST_CASE("singular local system names the element") {
    const Mesh m = reference_triangle();
    try {
      compute_lift(element_geometry(m, 0), SpaceConfig::make(1), {0.0, 0.0, 0.0}, MaterialSpec::isotropic(), 42);
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("element 42") != std::string::npos);
    }
  }
}
