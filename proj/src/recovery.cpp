#include "hdgeig/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/LU>

#include "hdgeig/error.hpp"
#include "hdgeig/parallel.hpp"
#include "hdgeig/quadrature.hpp"

namespace hdgeig {

namespace {

int rule_order(const CondensedSystem& sys) { return std::min(20, 2 * sys.spaces().max_degree() + 6); }

// Element-local data shared by the quadrature loops below.
struct ElementData {
  ElementGeometry geom;
  std::array<double, 3> tau;
  Eigen::VectorXd eta;  // local trace, face-major
};

ElementData element_data(const CondensedSystem& sys, int e, const Eigen::VectorXd& eta) {
  return {element_geometry(sys.mesh(), e), sys.tau().face_values(sys.mesh(), e), sys.local_trace(e, eta)};
}

double element_integral(const ScalarBasis<>& basis, const AffineMap<double>& map, const Eigen::VectorXd& coeffs) {
  const auto rule = triangle_quadrature(std::min(20, 2 * basis.degree() + 2));
  double s = 0.0;
  for (Eigen::Index q = 0; q < rule.size(); ++q)
    s += rule.weights(q) * std::abs(map.det) * basis.values(rule.point(q)).dot(coeffs);
  return s;
}

}  // namespace

Point sign_anchor(Domain domain) {
  constexpr double eps = 1e-2;
  if (domain == Domain::square) return Point(std::numbers::pi / 2 - eps, std::numbers::pi / 2 - eps);
  return Point(0.5, 0.5);
}

Eigen::MatrixXd qhat_moments(const CondensedSystem& sys, const Eigen::VectorXd& eta, const Eigen::MatrixXd& u,
                             const Eigen::MatrixXd& q) {
  const ScalarBasis<> wbasis(sys.spaces().kw);
  const VectorBasis<> vbasis(sys.spaces().kv);
  const EdgeBasis<> ebasis(sys.spaces().k);
  const int nk = ebasis.size();
  const auto edge = edge_quadrature(rule_order(sys));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * nk, sys.mesh().num_elements());
  parallel_for(sys.mesh().num_elements(), [&](int e) {
    const ElementData d = element_data(sys, e, eta);
    for (int f = 0; f < 3; ++f) {
      for (Eigen::Index i = 0; i < edge.size(); ++i) {
        const double s = edge.points(i, 0);
        const double w = edge.weights(i) * d.geom.lengths[f];
        const Eigen::Vector2d xi = face_point(f, s);
        const Eigen::VectorXd mu = ebasis.values(d.geom.flipped[f] ? 1.0 - s : s);
        const Eigen::Vector2d qv = vbasis.values(xi).transpose() * q.col(e);
        const double uv = wbasis.values(xi).dot(u.col(e));
        const double ev = mu.dot(d.eta.segment(f * nk, nk));
        const double qn = qv.dot(d.geom.normals[f]) + d.tau[f] * (uv - ev);
        out.col(e).segment(f * nk, nk) += w * qn * mu;
      }
    }
  });
  return out;
}

RecoveredFields recover_fields(const CondensedSystem& sys, double lambda, const Eigen::VectorXd& eta,
                               bool normalize) {
  if (eta.size() != sys.size()) throw ConfigError("trace vector has the wrong length");
  const int ne = sys.mesh().num_elements();
  RecoveredFields out;
  out.lambda = lambda;
  out.eta = eta;
  out.u.resize(sys.spaces().w_dim(), ne);
  out.q.resize(sys.spaces().v_dim(), ne);
  parallel_for(ne, [&](int e) {
    const auto& lift = sys.lift(e);
    const Eigen::VectorXd loc = sys.local_trace(e, eta);
    out.u.col(e) = apply_uw_inverse(lift, lambda, lift->u_trace * loc);
    out.q.col(e) = lift->q_trace * loc + lambda * (lift->q_load * out.u.col(e));
  });

  if (normalize) {
    double norm2 = 0.0;
    for (int e = 0; e < ne; ++e) norm2 += out.u.col(e).dot(sys.lift(e)->mass_w * out.u.col(e));
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw NumericalError("degenerate eigenfunction: u_h vanishes and cannot be normalised");
    double sign = 1.0;
    const int anchor = sys.mesh().locate(sign_anchor(sys.mesh().domain));
    if (anchor >= 0) {
      const ScalarBasis<> wbasis(sys.spaces().kw);
      const auto map = element_geometry(sys.mesh(), anchor).map;
      if (element_integral(wbasis, map, out.u.col(anchor)) < 0.0) sign = -1.0;
    }
    out.scale = sign / std::sqrt(norm2);
    out.u *= out.scale;
    out.q *= out.scale;
    out.eta *= out.scale;
  }
  out.qhat_moments = qhat_moments(sys, out.eta, out.u, out.q);
  return out;
}

RecoveredFields recover_fields(const CondensedSystem& sys, const EigenPair& pair) {
  RecoveredFields out = recover_fields(sys, pair.lambda, pair.eta, true);
  out.mode = pair.mode;
  return out;
}

HdgResiduals hdg_residuals(const CondensedSystem& sys, const Eigen::VectorXd& eta, const Eigen::MatrixXd& u,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& source) {
  const ScalarBasis<> wbasis(sys.spaces().kw);
  const VectorBasis<> vbasis(sys.spaces().kv);
  const EdgeBasis<> ebasis(sys.spaces().k);
  const int nk = ebasis.size(), nw = wbasis.size(), nv = vbasis.size();
  const int ne = sys.mesh().num_elements();
  const auto vol = triangle_quadrature(rule_order(sys));
  const auto edge = edge_quadrature(rule_order(sys));
  const Eigen::Matrix2d c = sys.material().c;

  // Per element: residual and the size of its largest term, squared.
  std::vector<double> flux_res(ne), flux_ref(ne), state_res(ne), state_ref(ne);
  Eigen::MatrixXd trace_loc(3 * nk, ne);
  parallel_for(ne, [&](int e) {
    const ElementData d = element_data(sys, e, eta);
    const double jac = std::abs(d.geom.map.det);
    Eigen::VectorXd cq = Eigen::VectorXd::Zero(nv), udiv = Eigen::VectorXd::Zero(nv),
                    eflux = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd qgrad = Eigen::VectorXd::Zero(nw), qhat = Eigen::VectorXd::Zero(nw),
                    fw = Eigen::VectorXd::Zero(nw);
    for (Eigen::Index i = 0; i < vol.size(); ++i) {
      const Eigen::Vector2d xi = vol.point(i);
      const double w = vol.weights(i) * jac;
      const auto psi = vbasis.values(xi);
      const Eigen::VectorXd div = vbasis.divergences(xi, d.geom.map);
      const Eigen::VectorXd phi = wbasis.values(xi);
      const auto grad = wbasis.gradients(xi, d.geom.map);
      const Eigen::Vector2d qv = psi.transpose() * q.col(e);
      const double uv = phi.dot(u.col(e));
      const double fv = phi.dot(source.col(e));
      cq += w * psi * (c * qv);
      udiv += w * uv * div;
      qgrad += w * grad * qv;
      fw += w * fv * phi;
    }
    trace_loc.col(e).setZero();
    for (int f = 0; f < 3; ++f) {
      for (Eigen::Index i = 0; i < edge.size(); ++i) {
        const double s = edge.points(i, 0);
        const double w = edge.weights(i) * d.geom.lengths[f];
        const Eigen::Vector2d xi = face_point(f, s);
        const Eigen::VectorXd mu = ebasis.values(d.geom.flipped[f] ? 1.0 - s : s);
        const Eigen::VectorXd phi = wbasis.values(xi);
        const Eigen::VectorXd psin = vbasis.values(xi) * d.geom.normals[f];
        const Eigen::Vector2d qv = vbasis.values(xi).transpose() * q.col(e);
        const double uv = phi.dot(u.col(e));
        const double ev = mu.dot(d.eta.segment(f * nk, nk));
        const double qn = qv.dot(d.geom.normals[f]) + d.tau[f] * (uv - ev);
        eflux += w * ev * psin;
        qhat += w * qn * phi;
        trace_loc.col(e).segment(f * nk, nk) += w * qn * mu;
      }
    }
    flux_res[e] = (cq - udiv + eflux).squaredNorm();
    flux_ref[e] = std::max({cq.squaredNorm(), udiv.squaredNorm(), eflux.squaredNorm()});
    state_res[e] = (-qgrad + qhat - fw).squaredNorm();
    state_ref[e] = std::max({qgrad.squaredNorm(), qhat.squaredNorm(), fw.squaredNorm()});
  });

  Eigen::VectorXd trace = Eigen::VectorXd::Zero(sys.size());
  double trace_ref = 0.0;
  for (int e = 0; e < ne; ++e) {
    const auto& dofs = sys.element_dofs(e);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (dofs[i] < 0) continue;
      const double v = trace_loc(static_cast<Eigen::Index>(i), e);
      trace(dofs[i]) += v;
      trace_ref += v * v;
    }
  }

  auto ratio = [](double num, double den) { return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num); };
  auto sum = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  HdgResiduals r;
  r.flux = ratio(sum(flux_res), sum(flux_ref));
  r.state = ratio(sum(state_res), sum(state_ref));
  r.trace = ratio(trace.squaredNorm(), trace_ref);
  return r;
}

HdgResiduals hdg_residuals(const CondensedSystem& sys, const RecoveredFields& fields) {
  return hdg_residuals(sys, fields.eta, fields.u, fields.q, fields.lambda * fields.u);
}

Eigen::MatrixXd postprocess_u(const CondensedSystem& sys, const RecoveredFields& fields) {
  const int k = sys.spaces().k;
  const ScalarBasis<> pbasis(k + 1);
  const ScalarBasis<> wbasis(sys.spaces().kw);
  const VectorBasis<> vbasis(sys.spaces().kv);
  const int np = pbasis.size();
  const auto vol = triangle_quadrature(rule_order(sys));
  const Eigen::Matrix2d c = sys.material().c;
  Eigen::MatrixXd out(np, sys.mesh().num_elements());
  parallel_for(sys.mesh().num_elements(), [&](int e) {
    const auto map = element_geometry(sys.mesh(), e).map;
    const double jac = std::abs(map.det);
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(np + 1, np + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np + 1);
    for (Eigen::Index i = 0; i < vol.size(); ++i) {
      const Eigen::Vector2d xi = vol.point(i);
      const double w = vol.weights(i) * jac;
      const auto grad = pbasis.gradients(xi, map);
      const Eigen::Vector2d qv = vbasis.values(xi).transpose() * fields.q.col(e);
      system.topLeftCorner(np, np) += w * grad * grad.transpose();
      system.col(np).head(np) += w * pbasis.values(xi);
      rhs.head(np) -= w * grad * (c * qv);
      rhs(np) += w * wbasis.values(xi).dot(fields.u.col(e));
    }
    system.row(np).head(np) = system.col(np).head(np).transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw NumericalError("local Neumann system for u* is singular on element " +
                                                 std::to_string(e));
    out.col(e) = lu.solve(rhs).head(np);
  });
  return out;
}

Eigen::MatrixXd postprocess_q(const CondensedSystem& sys, const RecoveredFields& fields) {
  const int k = sys.spaces().k;
  const RtBasis<> rt(k);
  const VectorBasis<> vbasis(sys.spaces().kv);
  const EdgeBasis<> ebasis(k);
  const int nr = rt.size(), nk = ebasis.size();
  const int ni = k >= 1 ? vector_dim(k - 1) : 0;
  const auto vol = triangle_quadrature(rule_order(sys));
  const auto edge = edge_quadrature(rule_order(sys));
  Eigen::MatrixXd out(nr, sys.mesh().num_elements());
  parallel_for(sys.mesh().num_elements(), [&](int e) {
    const ElementGeometry geom = element_geometry(sys.mesh(), e);
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(nr, nr);
    Eigen::VectorXd rhs(nr);
    RtBasis<>::Values vals;
    RtBasis<>::Vector div;
    for (int f = 0; f < 3; ++f) {
      for (Eigen::Index i = 0; i < edge.size(); ++i) {
        const double s = edge.points(i, 0);
        const double w = edge.weights(i) * geom.lengths[f];
        const Eigen::VectorXd mu = ebasis.values(geom.flipped[f] ? 1.0 - s : s);
        rt.evaluate(face_point(f, s), geom.map, vals, div, geom.diameter);
        system.middleRows(f * nk, nk) += w * mu * (vals * geom.normals[f]).transpose();
      }
    }
    rhs.head(3 * nk) = fields.qhat_moments.col(e);
    if (ni > 0) {
      const VectorBasis<> lower(k - 1);
      Eigen::VectorXd qmom = Eigen::VectorXd::Zero(ni);
      for (Eigen::Index i = 0; i < vol.size(); ++i) {
        const Eigen::Vector2d xi = vol.point(i);
        const double w = vol.weights(i) * std::abs(geom.map.det);
        rt.evaluate(xi, geom.map, vals, div, geom.diameter);
        const auto v = lower.values(xi);
        system.bottomRows(ni) += w * v * vals.transpose();
        qmom += w * v * (vbasis.values(xi).transpose() * fields.q.col(e));
      }
      rhs.tail(ni) = qmom;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw NumericalError("local system for q* is singular on element " +
                                                 std::to_string(e));
    out.col(e) = lu.solve(rhs);
  });
  return out;
}

double rayleigh_eigenvalue(const CondensedSystem& sys, const Eigen::MatrixXd& u_star,
                           const Eigen::MatrixXd& q_star) {
  const int k = sys.spaces().k;
  const ScalarBasis<> pbasis(k + 1);
  const RtBasis<> rt(k);
  const auto vol = triangle_quadrature(rule_order(sys));
  const auto edge = edge_quadrature(rule_order(sys));
  const Eigen::Matrix2d alpha = sys.material().alpha;
  const int ne = sys.mesh().num_elements();
  std::vector<double> num(ne), den(ne);
  parallel_for(ne, [&](int e) {
    const ElementGeometry geom = element_geometry(sys.mesh(), e);
    const double jac = std::abs(geom.map.det);
    double n = 0.0, d = 0.0;
    for (Eigen::Index i = 0; i < vol.size(); ++i) {
      const Eigen::Vector2d xi = vol.point(i);
      const double w = vol.weights(i) * jac;
      const Eigen::Vector2d g = pbasis.gradients(xi, geom.map).transpose() * u_star.col(e);
      const double uv = pbasis.values(xi).dot(u_star.col(e));
      n += w * g.dot(alpha * g);
      d += w * uv * uv;
    }
    RtBasis<>::Values vals;
    RtBasis<>::Vector div;
    for (int f = 0; f < 3; ++f) {
      for (Eigen::Index i = 0; i < edge.size(); ++i) {
        const double s = edge.points(i, 0);
        const double w = edge.weights(i) * geom.lengths[f];
        const Eigen::Vector2d xi = face_point(f, s);
        rt.evaluate(xi, geom.map, vals, div, geom.diameter);
        const Eigen::Vector2d qv = vals.transpose() * q_star.col(e);
        n += w * qv.dot(geom.normals[f]) * pbasis.values(xi).dot(u_star.col(e));
      }
    }
    num[e] = n;
    den[e] = d;
  });
  const double d = std::accumulate(den.begin(), den.end(), 0.0);
  if (!(d > 0.0)) throw NumericalError("Rayleigh quotient: u* vanishes");
  return std::accumulate(num.begin(), num.end(), 0.0) / d;
}

double normal_jump(const CondensedSystem& sys, const Eigen::MatrixXd& q_star) {
  const Mesh& mesh = sys.mesh();
  const int k = sys.spaces().k;
  const RtBasis<> rt(k);
  const EdgeBasis<> ebasis(k);
  const int nk = ebasis.size();
  const auto edge = edge_quadrature(rule_order(sys));
  auto moments = [&](int e, int f) {
    const ElementGeometry geom = element_geometry(mesh, e);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nk);
    RtBasis<>::Values vals;
    RtBasis<>::Vector div;
    for (Eigen::Index i = 0; i < edge.size(); ++i) {
      const double s = edge.points(i, 0);
      const double w = edge.weights(i) * geom.lengths[f];
      rt.evaluate(face_point(f, s), geom.map, vals, div, geom.diameter);
      const Eigen::Vector2d qv = vals.transpose() * q_star.col(e);
      m += w * qv.dot(geom.normals[f]) * ebasis.values(geom.flipped[f] ? 1.0 - s : s);
    }
    return m;
  };
  double jump = 0.0, ref = 0.0;
  for (int ed = 0; ed < mesh.num_edges(); ++ed) {
    if (mesh.boundary[ed]) continue;
    const auto& inc = mesh.edge_to_elements[ed];
    const Eigen::VectorXd a = moments(inc[0].element, inc[0].local_face);
    const Eigen::VectorXd b = moments(inc[1].element, inc[1].local_face);
    const double len = (mesh.vertices[mesh.edges[ed][1]] - mesh.vertices[mesh.edges[ed][0]]).norm();
    jump = std::max(jump, (a + b).cwiseAbs().maxCoeff() / std::sqrt(len));
    ref = std::max(ref, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()) / std::sqrt(len));
  }
  return ref > 0.0 ? jump / ref : jump;
}

double mean_defect(const CondensedSystem& sys, const RecoveredFields& fields, const Eigen::MatrixXd& u_star) {
  const ScalarBasis<> pbasis(sys.spaces().k + 1);
  const ScalarBasis<> wbasis(sys.spaces().kw);
  double worst = 0.0;
  for (int e = 0; e < sys.mesh().num_elements(); ++e) {
    const auto map = element_geometry(sys.mesh(), e).map;
    const double diff = element_integral(pbasis, map, u_star.col(e)) - element_integral(wbasis, map, fields.u.col(e));
    worst = std::max(worst, std::abs(diff) / std::sqrt(map.area()));
  }
  return worst;
}

PostprocessedFields postprocess(const CondensedSystem& sys, const RecoveredFields& fields) {
  PostprocessedFields out;
  out.u_star = postprocess_u(sys, fields);
  out.q_star = postprocess_q(sys, fields);
  out.lambda_star = rayleigh_eigenvalue(sys, out.u_star, out.q_star);
  return out;
}

}  // namespace hdgeig
