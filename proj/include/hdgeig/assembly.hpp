#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "hdgeig/local_solve.hpp"
#include "hdgeig/mesh.hpp"

namespace hdgeig {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ScalarField = std::function<double(const Point&)>;

/// Global numbering of trace unknowns: k+1 per interior edge, none on the
/// boundary (traces vanish there).
struct TraceDofMap {
  int degree = 0;
  std::vector<int> edge_offset;  // -1 on boundary edges
  int size = 0;

  static TraceDofMap build(const Mesh& mesh, int k);

  /// Global index of every local trace dof of `element` (face-major), -1 on the boundary.
  std::vector<int> element_dofs(const Mesh& mesh, int element) const;
};

/// The condensed trace problem on one mesh: the stiffness form a_h (A), the
/// Gram form (U eta, U mu) (G), the per-element lifts and a factorisation of A.
class CondensedSystem {
 public:
  CondensedSystem(Mesh mesh, const SpaceConfig& spaces, const TauSpec& tau, const MaterialSpec& mat);

  const Mesh& mesh() const { return *mesh_; }
  const SpaceConfig& spaces() const { return spaces_; }
  const TauSpec& tau() const { return tau_; }
  const MaterialSpec& material() const { return mat_; }
  const TraceDofMap& dofs() const { return dofs_; }
  int size() const { return dofs_.size; }

  const SparseMatrix& stiffness() const { return a_; }
  const SparseMatrix& gram() const { return g_; }
  const LocalLift& lift(int element) const { return lifts_[element]; }
  std::size_t lift_classes() const { return lift_classes_; }

  /// A^{-1} b using the cached sparse LDL^T factorisation.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

  /// Local trace coefficients of a global trace vector (zeros on the boundary).
  Eigen::VectorXd local_trace(int element, const Eigen::VectorXd& eta) const;
  const std::vector<int>& element_dofs(int element) const { return element_dofs_[element]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  SpaceConfig spaces_;
  TauSpec tau_;
  MaterialSpec mat_;
  TraceDofMap dofs_;
  std::vector<std::vector<int>> element_dofs_;
  std::vector<LocalLift> lifts_;
  std::size_t lift_classes_ = 0;
  SparseMatrix a_;
  SparseMatrix g_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

CondensedSystem assemble_condensed(const Mesh& mesh, const SpaceConfig& spaces, const TauSpec& tau,
                                   const MaterialSpec& mat);

/// M(lambda)_ij = ((I - lambda U^W)^{-1} U eta_j, U eta_i).
SparseMatrix assemble_m_of_lambda(const CondensedSystem& sys, double lambda);

/// Per-element moments (f, phi_i)_K, one column per element.
Eigen::MatrixXd load_moments(const CondensedSystem& sys, const ScalarField& f);

/// b_i = (f, U eta_i).
Eigen::VectorXd assemble_source_rhs(const CondensedSystem& sys, const ScalarField& f);
Eigen::VectorXd assemble_source_rhs_moments(const CondensedSystem& sys, const Eigen::MatrixXd& moments);

/// Discrete HDG fields: eta (global trace), u (W_h coefficients, one column
/// per element), q (V_h coefficients, one column per element).
struct HdgFields {
  Eigen::VectorXd eta;
  Eigen::MatrixXd u;
  Eigen::MatrixXd q;
};

HdgFields solve_source(const CondensedSystem& sys, const ScalarField& f);
HdgFields solve_source_moments(const CondensedSystem& sys, const Eigen::MatrixXd& moments);

}  // namespace hdgeig
