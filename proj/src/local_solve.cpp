#include "hdgeig/local_solve.hpp"

#include <cmath>
#include <sstream>

#include "hdgeig/error.hpp"
#include "hdgeig/quadrature.hpp"

namespace hdgeig {

std::string_view to_string(SpaceCase c) {
  switch (c) {
    case SpaceCase::equal: return "equal";
    case SpaceCase::case1: return "case1";
    case SpaceCase::case2: return "case2";
  }
  return "?";
}

SpaceCase parse_space_case(std::string_view s) {
  if (s == "equal") return SpaceCase::equal;
  if (s == "case1") return SpaceCase::case1;
  if (s == "case2") return SpaceCase::case2;
  throw ConfigError("unknown space case '" + std::string(s) + "' (expected equal|case1|case2)");
}

SpaceConfig SpaceConfig::make(int k, SpaceCase kind) {
  if (k < 0 || k > 4) throw ConfigError("trace degree k must be in 0..4");
  SpaceConfig s;
  s.k = k;
  s.kind = kind;
  switch (kind) {
    case SpaceCase::equal:
      s.kw = s.kv = k;
      break;
    case SpaceCase::case1:
      if (k < 1) throw ConfigError("case1 requires k >= 1");
      s.kw = k - 1;
      s.kv = k;
      break;
    case SpaceCase::case2:
      if (k < 1) throw ConfigError("case2 requires k >= 1");
      s.kw = k;
      s.kv = k - 1;
      break;
  }
  return s;
}

std::array<double, 3> TauSpec::face_values(const Mesh& mesh, int element) const {
  const double h = use_local_h ? mesh.diameters[element] : mesh.spacing;
  double t = 0.0;
  switch (variant) {
    case TauVariant::constant: t = value; break;
    case TauVariant::global_h: t = h; break;
    case TauVariant::inverse_global_h: t = 1.0 / h; break;
    case TauVariant::zero: t = 0.0; break;
  }
  return {t, t, t};
}

TauSpec TauSpec::scaled(double s) const {
  // Only constant values can be scaled without changing the variant.
  if (variant != TauVariant::constant && variant != TauVariant::zero)
    throw ConfigError("only constant tau can be scaled");
  TauSpec t = *this;
  t.value *= s;
  return t;
}

std::string TauSpec::label() const {
  switch (variant) {
    case TauVariant::constant: {
      if (value == 1.0) return "one";
      std::ostringstream os;
      os << "const:" << value;
      return os.str();
    }
    case TauVariant::global_h: return use_local_h ? "hK" : "h";
    case TauVariant::inverse_global_h: return use_local_h ? "invhK" : "invh";
    case TauVariant::zero: return "zero";
  }
  return "?";
}

TauSpec parse_tau(std::string_view s) {
  if (s == "one" || s == "1") return TauSpec::one();
  if (s == "h") return TauSpec::h();
  if (s == "invh" || s == "1/h") return TauSpec::inverse_h();
  if (s == "zero" || s == "0") return TauSpec::zero();
  if (s.starts_with("const:")) {
    const std::string num(s.substr(6));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || !(v >= 0.0)) throw ConfigError("bad tau constant '" + num + "'");
    return v == 0.0 ? TauSpec::zero() : TauSpec::constant(v);
  }
  throw ConfigError("unknown tau '" + std::string(s) + "' (expected one|h|invh|zero|const:<x>)");
}

MaterialSpec MaterialSpec::isotropic(double a) { return from_alpha(a * Eigen::Matrix2d::Identity()); }

MaterialSpec MaterialSpec::from_alpha(const Eigen::Matrix2d& alpha) {
  if (std::abs(alpha(0, 1) - alpha(1, 0)) > 1e-14 * alpha.norm())
    throw ConfigError("alpha must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(alpha);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw ConfigError("alpha must be positive definite");
  MaterialSpec m;
  m.alpha = alpha;
  m.c = alpha.inverse();
  return m;
}

void validate(const SpaceConfig& spaces, const TauSpec& tau) {
  const bool positive = tau.variant != TauVariant::zero &&
                        !(tau.variant == TauVariant::constant && tau.value <= 0.0);
  if (tau.variant == TauVariant::constant && tau.value < 0.0)
    throw ConfigError("tau must be non-negative");
  if (positive) return;
  switch (spaces.kind) {
    case SpaceCase::equal:
      throw ConfigError("equal-degree spaces need tau positive on at least one face of every element");
    case SpaceCase::case2:
      throw ConfigError("case2 needs tau positive on every face");
    case SpaceCase::case1:
      return;
  }
}

Eigen::Vector2d face_point(int face, double s) {
  static const std::array<Eigen::Vector2d, 3> ref{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0),
                                                  Eigen::Vector2d(0, 1)};
  return ref[face] + s * (ref[(face + 1) % 3] - ref[face]);
}

ElementGeometry element_geometry(const Mesh& mesh, int element) {
  ElementGeometry g;
  const Point a = mesh.vertex(element, 0), b = mesh.vertex(element, 1), c = mesh.vertex(element, 2);
  g.map = AffineMap<double>::from_vertices(a, b, c);
  g.area = g.map.area();
  g.diameter = mesh.diameters[element];
  for (int f = 0; f < 3; ++f) {
    const Eigen::Vector2d t = mesh.vertex(element, (f + 1) % 3) - mesh.vertex(element, f);
    g.lengths[f] = t.norm();
    g.normals[f] = Eigen::Vector2d(t.y(), -t.x()) / g.lengths[f];
    g.flipped[f] = mesh.face_flipped(element, f);
  }
  return g;
}

LiftOperators compute_lift(const ElementGeometry& geom, const SpaceConfig& spaces,
                           const std::array<double, 3>& tau, const MaterialSpec& mat,
                           int element_id) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const ScalarBasis<> wbasis(spaces.kw);
  const VectorBasis<> vbasis(spaces.kv);
  const EdgeBasis<> ebasis(spaces.k);
  const int nw = wbasis.size(), nv = vbasis.size(), nk = ebasis.size(), nt = 3 * nk;
  const int order = 2 * spaces.max_degree() + 4;

  MatrixXd mc = MatrixXd::Zero(nv, nv);
  MatrixXd bdiv = MatrixXd::Zero(nw, nv);  // (phi_i, div psi_j)
  MatrixXd mw = MatrixXd::Zero(nw, nw);
  const auto vol = triangle_quadrature(std::min(order, 20));
  for (Eigen::Index q = 0; q < vol.size(); ++q) {
    const Eigen::Vector2d xi = vol.point(q);
    const double w = vol.weights(q) * std::abs(geom.map.det);
    const VectorXd phi = wbasis.values(xi);
    const auto psi = vbasis.values(xi);
    const VectorXd div = vbasis.divergences(xi, geom.map);
    mc.noalias() += w * psi * mat.c * psi.transpose();
    bdiv.noalias() += w * phi * div.transpose();
    mw.noalias() += w * phi * phi.transpose();
  }

  std::array<MatrixXd, 3> sface, cface, dface, eface;
  const auto edge = edge_quadrature(order);
  for (int f = 0; f < 3; ++f) {
    sface[f] = MatrixXd::Zero(nw, nw);
    cface[f] = MatrixXd::Zero(nw, nk);
    dface[f] = MatrixXd::Zero(nv, nk);
    eface[f] = MatrixXd::Zero(nk, nk);
    for (Eigen::Index q = 0; q < edge.size(); ++q) {
      const double s = edge.points(q, 0);
      const double w = edge.weights(q) * geom.lengths[f];
      const Eigen::Vector2d xi = face_point(f, s);
      const VectorXd phi = wbasis.values(xi);
      const VectorXd psin = vbasis.values(xi) * geom.normals[f];
      const VectorXd mu = ebasis.values(geom.flipped[f] ? 1.0 - s : s);
      sface[f].noalias() += w * phi * phi.transpose();
      cface[f].noalias() += w * phi * mu.transpose();
      dface[f].noalias() += w * psin * mu.transpose();
      eface[f].noalias() += w * mu * mu.transpose();
    }
  }

  MatrixXd system = MatrixXd::Zero(nv + nw, nv + nw);
  system.topLeftCorner(nv, nv) = mc;
  system.topRightCorner(nv, nw) = -bdiv.transpose();
  system.bottomLeftCorner(nw, nv) = bdiv;
  for (int f = 0; f < 3; ++f) system.bottomRightCorner(nw, nw) += tau[f] * sface[f];

  MatrixXd rhs = MatrixXd::Zero(nv + nw, nt + nw);
  for (int f = 0; f < 3; ++f) {
    rhs.block(0, f * nk, nv, nk) = -dface[f];
    rhs.block(nv, f * nk, nw, nk) = tau[f] * cface[f];
  }
  rhs.bottomRightCorner(nw, nw).setIdentity();

  LiftOperators ops;
  ops.saddle.compute(system);
  ops.saddle.setThreshold(1e-13);
  if (!ops.saddle.isInvertible()) {
    std::ostringstream os;
    os << "local HDG system singular on element " << element_id << " (tau = " << tau[0] << ", "
       << tau[1] << ", " << tau[2] << "); case " << to_string(spaces.kind)
       << " needs tau positive on "
       << (spaces.kind == SpaceCase::case2 ? "every face" : "at least one face");
    throw NumericalError(os.str());
  }
  const MatrixXd sol = ops.saddle.solve(rhs);
  ops.q_trace = sol.topLeftCorner(nv, nt);
  ops.u_trace = sol.bottomLeftCorner(nw, nt);
  ops.q_moment = sol.topRightCorner(nv, nw);
  ops.u_moment = sol.bottomRightCorner(nw, nw);
  ops.mass_w = mw;
  ops.q_load = ops.q_moment * mw;
  ops.u_load = ops.u_moment * mw;

  MatrixXd a = ops.q_trace.transpose() * mc * ops.q_trace;
  for (int f = 0; f < 3; ++f) {
    if (tau[f] == 0.0) continue;
    // tau <(U eta - eta), (U mu - mu)>_F
    MatrixXd cf = MatrixXd::Zero(nw, nt);
    cf.middleCols(f * nk, nk) = cface[f];
    MatrixXd ef = MatrixXd::Zero(nt, nt);
    ef.block(f * nk, f * nk, nk, nk) = eface[f];
    const MatrixXd uc = ops.u_trace.transpose() * cf;
    a += tau[f] * (ops.u_trace.transpose() * sface[f] * ops.u_trace - uc - uc.transpose() + ef);
  }
  ops.a_local = 0.5 * (a + a.transpose());
  const MatrixXd g = ops.u_trace.transpose() * mw * ops.u_trace;
  ops.g_local = 0.5 * (g + g.transpose());
  return ops;
}

LocalLift element_lift(const Mesh& mesh, int element, const SpaceConfig& spaces, const TauSpec& tau,
                       const MaterialSpec& mat) {
  validate(spaces, tau);
  auto ops = std::make_shared<const LiftOperators>(
      compute_lift(element_geometry(mesh, element), spaces, tau.face_values(mesh, element), mat, element));
  return LocalLift{element, std::move(ops)};
}

LocalLift LiftCache::get(const Mesh& mesh, int element) {
  const ElementGeometry geom = element_geometry(mesh, element);
  const auto tau = tau_.face_values(mesh, element);
  // Key: shape relative to the first vertex, face orientations, tau values.
  std::vector<long long> key;
  key.reserve(10);
  const double scale = (1 << 24) / mesh.h;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) key.push_back(std::llround(geom.map.jac(i, j) * scale));
  for (int f = 0; f < 3; ++f) key.push_back(geom.flipped[f] ? 1 : 0);
  for (int f = 0; f < 3; ++f) key.push_back(std::llround(tau[f] * (1 << 24)));

  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return LocalLift{element, it->second};
  }
  auto ops = std::make_shared<const LiftOperators>(compute_lift(geom, spaces_, tau, mat_, element));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.try_emplace(std::move(key), std::move(ops));
  return LocalLift{element, it->second};
}

Eigen::MatrixXd uw_resolvent(const LocalLift& lift, double lambda) {
  const auto& uw = lift->u_load;
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(uw.rows(), uw.cols()) - lambda * uw;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    std::ostringstream os;
    os << "I - lambda U^W is (near) singular on element " << lift.element << " for lambda = " << lambda
       << " (rcond " << rcond << "); lambda is outside the regime lambda < C/h where the "
       << "condensed eigenproblem is valid";
    throw NumericalError(os.str());
  }
  return lu.inverse();
}

Eigen::VectorXd apply_uw_inverse(const LocalLift& lift, double lambda, const Eigen::VectorXd& w) {
  const auto& uw = lift->u_load;
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(uw.rows(), uw.cols()) - lambda * uw;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  if (!(lu.rcond() > 1e-12)) return uw_resolvent(lift, lambda) * w;  // throws with context
  return lu.solve(w);
}

}  // namespace hdgeig
