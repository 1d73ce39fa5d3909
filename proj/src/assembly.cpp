#include "hdgeig/assembly.hpp"

#include <unordered_map>

#include "hdgeig/error.hpp"
#include "hdgeig/parallel.hpp"
#include "hdgeig/quadrature.hpp"

namespace hdgeig {

TraceDofMap TraceDofMap::build(const Mesh& mesh, int k) {
  TraceDofMap m;
  m.degree = k;
  m.edge_offset.assign(mesh.num_edges(), -1);
  int next = 0;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.boundary[e]) continue;
    m.edge_offset[e] = next;
    next += k + 1;
  }
  m.size = next;
  return m;
}

std::vector<int> TraceDofMap::element_dofs(const Mesh& mesh, int element) const {
  std::vector<int> d(3 * (degree + 1), -1);
  for (int f = 0; f < 3; ++f) {
    const int off = edge_offset[mesh.element_edges[element][f]];
    if (off < 0) continue;
    for (int a = 0; a <= degree; ++a) d[f * (degree + 1) + a] = off + a;
  }
  return d;
}

namespace {

// Scatter per-element dense blocks into a sparse matrix in element order.
template <typename BlockOf>
SparseMatrix scatter(const CondensedSystem& sys, BlockOf block_of) {
  std::vector<Eigen::Triplet<double>> trip;
  const int nt = sys.spaces().local_trace_dim();
  trip.reserve(static_cast<std::size_t>(sys.mesh().num_elements()) * nt * nt);
  for (int e = 0; e < sys.mesh().num_elements(); ++e) {
    const auto& dofs = sys.element_dofs(e);
    const Eigen::MatrixXd& blk = block_of(e);
    for (int j = 0; j < nt; ++j) {
      if (dofs[j] < 0) continue;
      for (int i = 0; i < nt; ++i) {
        if (dofs[i] < 0) continue;
        trip.emplace_back(dofs[i], dofs[j], blk(i, j));
      }
    }
  }
  SparseMatrix m(sys.size(), sys.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

CondensedSystem::CondensedSystem(Mesh mesh, const SpaceConfig& spaces, const TauSpec& tau,
                                 const MaterialSpec& mat)
    : mesh_(std::make_shared<const Mesh>(std::move(mesh))), spaces_(spaces), tau_(tau), mat_(mat) {
  validate(spaces_, tau_);
  const Mesh& m = *mesh_;
  dofs_ = TraceDofMap::build(m, spaces_.k);
  element_dofs_.resize(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) element_dofs_[e] = dofs_.element_dofs(m, e);

  LiftCache cache(spaces_, tau_, mat_);
  lifts_.resize(m.num_elements());
  parallel_for(m.num_elements(), [&](int e) { lifts_[e] = cache.get(m, e); });
  lift_classes_ = cache.classes();

  a_ = scatter(*this, [&](int e) -> const Eigen::MatrixXd& { return lifts_[e]->a_local; });
  g_ = scatter(*this, [&](int e) -> const Eigen::MatrixXd& { return lifts_[e]->g_local; });

  factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
  if (dofs_.size > 0) {
    factor_->compute(a_);
    if (factor_->info() != Eigen::Success || factor_->vectorD().minCoeff() <= 0.0)
      throw NumericalError("condensed stiffness matrix A is not positive definite");
  }
}

Eigen::VectorXd CondensedSystem::solve(const Eigen::VectorXd& b) const {
  if (size() == 0) return Eigen::VectorXd(0);
  return factor_->solve(b);
}

Eigen::MatrixXd CondensedSystem::solve(const Eigen::MatrixXd& b) const {
  if (size() == 0) return Eigen::MatrixXd(0, b.cols());
  return factor_->solve(b);
}

Eigen::VectorXd CondensedSystem::local_trace(int element, const Eigen::VectorXd& eta) const {
  const auto& dofs = element_dofs_[element];
  Eigen::VectorXd loc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i)
    if (dofs[i] >= 0) loc(static_cast<Eigen::Index>(i)) = eta(dofs[i]);
  return loc;
}

CondensedSystem assemble_condensed(const Mesh& mesh, const SpaceConfig& spaces, const TauSpec& tau,
                                   const MaterialSpec& mat) {
  return CondensedSystem(mesh, spaces, tau, mat);
}

SparseMatrix assemble_m_of_lambda(const CondensedSystem& sys, double lambda) {
  // One local block per lift class: congruent elements share operators.
  const int ne = sys.mesh().num_elements();
  std::unordered_map<const LiftOperators*, int> class_of;
  std::vector<int> representative;
  std::vector<int> element_class(ne);
  for (int e = 0; e < ne; ++e) {
    auto [it, inserted] = class_of.try_emplace(sys.lift(e).ops.get(), static_cast<int>(representative.size()));
    if (inserted) representative.push_back(e);
    element_class[e] = it->second;
  }
  std::vector<Eigen::MatrixXd> blocks(representative.size());
  parallel_for(static_cast<int>(representative.size()), [&](int c) {
    const LocalLift& lift = sys.lift(representative[c]);
    const Eigen::MatrixXd res = uw_resolvent(lift, lambda);
    const Eigen::MatrixXd blk = lift->u_trace.transpose() * lift->mass_w * res * lift->u_trace;
    blocks[c] = 0.5 * (blk + blk.transpose());
  });
  return scatter(sys, [&](int e) -> const Eigen::MatrixXd& { return blocks[element_class[e]]; });
}

Eigen::MatrixXd load_moments(const CondensedSystem& sys, const ScalarField& f) {
  const Mesh& mesh = sys.mesh();
  const ScalarBasis<> wbasis(sys.spaces().kw);
  const auto rule = triangle_quadrature(std::min(20, std::max(12, 2 * sys.spaces().kw + 4)));
  Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(wbasis.size(), mesh.num_elements());
  std::vector<Eigen::VectorXd> phis(rule.size());
  for (Eigen::Index q = 0; q < rule.size(); ++q) phis[q] = wbasis.values(rule.point(q));
  parallel_for(mesh.num_elements(), [&](int e) {
    const auto map = AffineMap<double>::from_vertices(mesh.vertex(e, 0), mesh.vertex(e, 1), mesh.vertex(e, 2));
    for (Eigen::Index q = 0; q < rule.size(); ++q)
      mom.col(e) += rule.weights(q) * std::abs(map.det) * f(map.to_physical(rule.point(q))) * phis[q];
  });
  return mom;
}

Eigen::VectorXd assemble_source_rhs_moments(const CondensedSystem& sys, const Eigen::MatrixXd& moments) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(sys.size());
  for (int e = 0; e < sys.mesh().num_elements(); ++e) {
    const Eigen::VectorXd loc = sys.lift(e)->u_trace.transpose() * moments.col(e);
    const auto& dofs = sys.element_dofs(e);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0) b(dofs[i]) += loc(static_cast<Eigen::Index>(i));
  }
  return b;
}

Eigen::VectorXd assemble_source_rhs(const CondensedSystem& sys, const ScalarField& f) {
  return assemble_source_rhs_moments(sys, load_moments(sys, f));
}

HdgFields solve_source_moments(const CondensedSystem& sys, const Eigen::MatrixXd& moments) {
  HdgFields out;
  out.eta = sys.solve(assemble_source_rhs_moments(sys, moments));
  const int ne = sys.mesh().num_elements();
  out.u.resize(sys.spaces().w_dim(), ne);
  out.q.resize(sys.spaces().v_dim(), ne);
  for (int e = 0; e < ne; ++e) {
    const auto& lift = sys.lift(e);
    const Eigen::VectorXd eta = sys.local_trace(e, out.eta);
    out.u.col(e) = lift->u_trace * eta + lift->u_moment * moments.col(e);
    out.q.col(e) = lift->q_trace * eta + lift->q_moment * moments.col(e);
  }
  return out;
}

HdgFields solve_source(const CondensedSystem& sys, const ScalarField& f) {
  return solve_source_moments(sys, load_moments(sys, f));
}

}  // namespace hdgeig
