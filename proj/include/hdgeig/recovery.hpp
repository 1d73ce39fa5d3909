#pragma once

#include <Eigen/Core>

#include "hdgeig/assembly.hpp"
#include "hdgeig/eigensolve.hpp"

namespace hdgeig {

/// Interior fields of a trace eigenpair. u is normalised to unit L2 norm with
/// a positive element mean at the domain's sign anchor; q and eta carry the
/// same factor.
struct RecoveredFields {
  int mode = 1;
  double lambda = 0.0;
  Eigen::VectorXd eta;
  Eigen::MatrixXd u;  // W_h coefficients, one column per element
  Eigen::MatrixXd q;  // V_h coefficients, one column per element
  // <qhat . n_K, mu_a>_F on every face (face-major, edge basis in the global
  // edge direction), qhat . n = q . n + tau (u - eta).
  Eigen::MatrixXd qhat_moments;
  double scale = 1.0;  // factor applied by the normalisation (sign included)
};

/// Sign anchor point of the domain.
Point sign_anchor(Domain domain);

/// u = (I - lambda U^W)^{-1} U eta, q = Q eta + lambda Q^W u.
RecoveredFields recover_fields(const CondensedSystem& sys, double lambda, const Eigen::VectorXd& eta,
                               bool normalize = true);
RecoveredFields recover_fields(const CondensedSystem& sys, const EigenPair& pair);

/// <qhat . n_K, mu>_F moments for arbitrary fields.
Eigen::MatrixXd qhat_moments(const CondensedSystem& sys, const Eigen::VectorXd& eta, const Eigen::MatrixXd& u,
                             const Eigen::MatrixXd& q);

/// Relative residuals of the three HDG equations, evaluated by quadrature
/// independently of the lift operators:
///   flux:  (c q, r) - (u, div r) + <eta, r . n>
///   state: -(q, grad w) + <qhat . n, w> - (f, w)
///   trace: sum over both sides of <qhat . n, mu> on interior edges
struct HdgResiduals {
  double flux = 0.0;
  double state = 0.0;
  double trace = 0.0;
  double max() const { return std::max({flux, state, trace}); }
};

/// `source` holds W_h coefficients of f, one column per element.
HdgResiduals hdg_residuals(const CondensedSystem& sys, const Eigen::VectorXd& eta, const Eigen::MatrixXd& u,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& source);
/// Eigen form: f = lambda u.
HdgResiduals hdg_residuals(const CondensedSystem& sys, const RecoveredFields& fields);

/// u* in P_{k+1}(K), one column per element (hierarchical ScalarBasis of degree k+1).
Eigen::MatrixXd postprocess_u(const CondensedSystem& sys, const RecoveredFields& fields);

/// q* in P_k^2 + x P_k, one column per element, in RtBasis(k) with the element
/// diameter as length scale.
Eigen::MatrixXd postprocess_q(const CondensedSystem& sys, const RecoveredFields& fields);

/// lambda* = [(alpha grad u*, grad u*) + sum_K <q* . n_K, u*>_dK] / (u*, u*).
double rayleigh_eigenvalue(const CondensedSystem& sys, const Eigen::MatrixXd& u_star, const Eigen::MatrixXd& q_star);

/// Normal-moment jump of q* across interior edges, max over edges and edge
/// basis functions, scaled by sqrt(edge length) and the largest moment.
double normal_jump(const CondensedSystem& sys, const Eigen::MatrixXd& q_star);

/// Largest |(u*, 1)_K - (u_h, 1)_K| / |K|^{1/2}.
double mean_defect(const CondensedSystem& sys, const RecoveredFields& fields, const Eigen::MatrixXd& u_star);

struct PostprocessedFields {
  Eigen::MatrixXd u_star;
  Eigen::MatrixXd q_star;
  double lambda_star = 0.0;
};

PostprocessedFields postprocess(const CondensedSystem& sys, const RecoveredFields& fields);

}  // namespace hdgeig
