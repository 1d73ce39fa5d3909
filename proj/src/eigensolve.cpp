#include "hdgeig/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hdgeig/error.hpp"
#include "hdgeig/parallel.hpp"

namespace hdgeig {

EigenPairs sym_gen_eig_lowest(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int m) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ConfigError("sym_gen_eig_lowest: dimension mismatch");
  if (m < 1 || m > a.rows()) throw ConfigError("sym_gen_eig_lowest: bad eigenpair count");
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) throw NumericalError("sym_gen_eig_lowest: B is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b);
  if (es.info() != Eigen::Success) throw NumericalError("sym_gen_eig_lowest: eigensolver failed");
  return {es.eigenvalues().head(m), es.eigenvectors().leftCols(m)};
}

namespace {

// Lowest m pairs of A x = theta B x from the largest mu of B x = mu A x; A SPD.
// `solve_a` applies A^{-1}. On return `block` holds the converged subspace.
template <typename SolveA>
EigenPairs subspace_lowest(const SparseMatrix& a, const SparseMatrix& b, const SolveA& solve_a, int m,
                           const SubspaceOptions& opts, Eigen::MatrixXd& block) {
  const Eigen::Index n = a.rows();
  if (m < 1 || m > n) throw ConfigError("subspace iteration: bad eigenpair count");
  const int p = static_cast<int>(std::min<Eigen::Index>(n, opts.block > 0 ? opts.block : std::max(2 * m, m + 8)));

  Eigen::MatrixXd x(n, p);
  {
    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = dist(rng);
    const int warm = static_cast<int>(std::min<Eigen::Index>(block.cols(), p));
    if (block.rows() == n && warm > 0) x.leftCols(warm) = block.leftCols(warm);
  }

  EigenPairs out;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::MatrixXd bx = b * x;
    const Eigen::MatrixXd y = solve_a(bx);
    Eigen::MatrixXd ha = y.transpose() * bx;  // = Y^T A Y
    Eigen::MatrixXd hb = y.transpose() * (b * y);
    ha = 0.5 * (ha + ha.transpose()).eval();
    hb = 0.5 * (hb + hb.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(hb, ha);
    if (es.info() != Eigen::Success) throw NumericalError("subspace iteration: Rayleigh-Ritz step failed");
    // mu ascending -> reverse for theta ascending
    const Eigen::VectorXd mu = es.eigenvalues().reverse();
    const Eigen::MatrixXd z = es.eigenvectors().rowwise().reverse();
    x = y * z;  // A-orthonormal

    const double mu_max = mu(0);
    for (int i = 0; i < m; ++i)
      if (!(mu(i) > 1e-13 * mu_max))
        throw NumericalError("B is singular on the requested eigenspace (spaces admit a kernel of U)");

    out.values = mu.head(m).cwiseInverse();
    out.vectors = x.leftCols(m);
    bool converged = true;
    for (int i = 0; i < m && converged; ++i) {
      const Eigen::VectorXd ax = a * out.vectors.col(i);
      const Eigen::VectorXd r = ax - out.values(i) * (b * out.vectors.col(i));
      converged = r.norm() <= opts.tol * ax.norm();
    }
    if (converged) {
      for (int i = 0; i < m; ++i) out.vectors.col(i) /= std::sqrt(mu(i));
      block = x;
      return out;
    }
  }
  throw NumericalError("subspace iteration did not converge within " + std::to_string(opts.max_iter) +
                       " iterations");
}

// Lowest m pairs of (A, B) on a condensed system (A factorised once).
EigenPairs lowest_pencil(const CondensedSystem& sys, const SparseMatrix& b, int m, Eigen::MatrixXd& block) {
  const int n = sys.size();
  if (m > n) throw ConfigError("requested " + std::to_string(m) + " modes but only " + std::to_string(n) +
                               " trace unknowns");
  if (n <= kDenseLimit) {
    const Eigen::MatrixXd ad(sys.stiffness()), bd(b);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(bd, ad);
    if (es.info() != Eigen::Success) throw NumericalError("dense pencil solve failed");
    const Eigen::VectorXd mu = es.eigenvalues().reverse();
    const Eigen::MatrixXd z = es.eigenvectors().rowwise().reverse();
    for (int i = 0; i < m; ++i)
      if (!(mu(i) > 1e-13 * mu(0)))
        throw NumericalError("B is singular on the requested eigenspace (spaces admit a kernel of U)");
    EigenPairs out;
    out.values = mu.head(m).cwiseInverse();
    out.vectors = z.leftCols(m);
    for (int i = 0; i < m; ++i) out.vectors.col(i) /= std::sqrt(mu(i));
    return out;
  }
  SubspaceOptions opts;
  return subspace_lowest(sys.stiffness(), b, [&](const Eigen::MatrixXd& r) { return sys.solve(r); }, m, opts,
                         block);
}

double pencil_residual(const SparseMatrix& a, const SparseMatrix& b, double lambda, const Eigen::VectorXd& x) {
  const Eigen::VectorXd ax = a * x;
  return (ax - lambda * (b * x)).norm() / ax.norm();
}

}  // namespace

EigenPairs sym_gen_eig_lowest(const SparseMatrix& a, const SparseMatrix& b, int m, const SubspaceOptions& opts) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ConfigError("sym_gen_eig_lowest: dimension mismatch");
  Eigen::SimplicialLDLT<SparseMatrix> fa(a);
  if (fa.info() != Eigen::Success || fa.vectorD().minCoeff() <= 0.0)
    throw NumericalError("sym_gen_eig_lowest: sparse path needs A positive definite");
  Eigen::SimplicialLDLT<SparseMatrix> fb(b);
  if (fb.info() != Eigen::Success || fb.vectorD().minCoeff() <= 0.0)
    throw NumericalError("sym_gen_eig_lowest: B is not positive definite");
  Eigen::MatrixXd block;
  return subspace_lowest(a, b, [&](const Eigen::MatrixXd& r) { return Eigen::MatrixXd(fa.solve(r)); }, m, opts,
                         block);
}

std::vector<SurrogatePair> solve_linear_surrogate(const CondensedSystem& sys, int m) {
  if (m < 1) throw ConfigError("mode count must be positive");
  Eigen::MatrixXd block;
  const EigenPairs pairs = lowest_pencil(sys, sys.gram(), m, block);
  std::vector<SurrogatePair> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    if (!(pairs.values(i) > 0.0)) throw NumericalError("non-positive surrogate eigenvalue");
    const double res = pencil_residual(sys.stiffness(), sys.gram(), pairs.values(i), pairs.vectors.col(i));
    if (res > 1e-9) {
      std::ostringstream os;
      os << "surrogate eigenpair " << i + 1 << " residual " << res << " exceeds 1e-9";
      throw NumericalError(os.str());
    }
    out.push_back({pairs.values(i), pairs.vectors.col(i)});
  }
  return out;
}

double resolvent_pole(const CondensedSystem& sys) {
  std::unordered_set<const LiftOperators*> seen;
  double rho = 0.0;
  for (int e = 0; e < sys.mesh().num_elements(); ++e) {
    const LiftOperators* ops = sys.lift(e).ops.get();
    if (!seen.insert(ops).second) continue;
    // U^W is self-adjoint and semidefinite in the W_h(K) mass inner product.
    Eigen::MatrixXd mu = ops->mass_w * ops->u_load;
    mu = 0.5 * (mu + mu.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(mu, ops->mass_w, Eigen::EigenvaluesOnly);
    rho = std::max(rho, es.eigenvalues().maxCoeff());
  }
  return rho > 0.0 ? 1.0 / rho : std::numeric_limits<double>::infinity();
}

EigenPair solve_condensed_nonlinear(const CondensedSystem& sys, const SurrogatePair& seed, int mode,
                                    const NonlinearOptions& opts) {
  if (mode < 1) throw ConfigError("mode index is 1-based");
  if (!(seed.lambda > 0.0)) throw ConfigError("seed eigenvalue must be positive");
  EigenPair out;
  out.mode = mode;
  Eigen::MatrixXd block;
  if (seed.eta.size() == sys.size()) block = seed.eta;

  // theta(lambda) - lambda is decreasing on (0, pole): positive at 0, so the
  // root lies in (lo, hi).
  const double pole = resolvent_pole(sys);
  double lo = 0.0, hi = pole;
  double lambda = std::min(seed.lambda, 0.95 * pole);
  double prev_lambda = 0.0, prev_gap = 0.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const SparseMatrix m_of_lambda = assemble_m_of_lambda(sys, lambda);
    const EigenPairs pairs = lowest_pencil(sys, m_of_lambda, mode, block);
    const double theta = pairs.values(mode - 1);
    out.history.push_back(theta);
    out.iterations = it;
    out.defect = std::abs(theta - lambda) / theta;
    out.eta = pairs.vectors.col(mode - 1);
    if (out.defect <= opts.rel_tol) {
      out.lambda = theta;
      out.residual = pencil_residual(sys.stiffness(), assemble_m_of_lambda(sys, theta), theta, out.eta);
      return out;
    }
    const double gap = theta - lambda;
    (gap > 0.0 ? lo : hi) = lambda;
    double next = theta;
    if (it > 1 && gap != prev_gap) next = lambda - gap * (lambda - prev_lambda) / (gap - prev_gap);
    if (!(next > lo && next < hi)) next = (theta > lo && theta < hi) ? theta : 0.5 * (lo + hi);
    prev_lambda = lambda;
    prev_gap = gap;
    lambda = next;
  }
  std::ostringstream os;
  os << "nonlinear eigen iteration for mode " << mode << " did not converge in " << opts.max_iter
     << " iterations; history:";
  for (double v : out.history) os << ' ' << v;
  throw NumericalError(os.str());
}

std::vector<EigenPair> solve_condensed_modes(const CondensedSystem& sys, int m, const NonlinearOptions& opts) {
  const auto seeds = solve_linear_surrogate(sys, m);
  std::vector<EigenPair> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) out.push_back(solve_condensed_nonlinear(sys, seeds[i], i + 1, opts));
  return out;
}

OracleSpectrum oracle_full_eig(const CondensedSystem& sys, int m) {
  const int ne = sys.mesh().num_elements();
  const int nw = sys.spaces().w_dim();
  const int total = ne * nw;
  if (total > kOracleLimit)
    throw ConfigError("oracle needs " + std::to_string(total) + " source solves; limit is " +
                      std::to_string(kOracleLimit));

  // Right-hand sides for f = phi_j on element e: column e*nw + j.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(sys.size(), total);
  for (int e = 0; e < ne; ++e) {
    const auto& lift = sys.lift(e);
    const Eigen::MatrixXd loc = lift->u_trace.transpose() * lift->mass_w;
    const auto& dofs = sys.element_dofs(e);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0) rhs.block(dofs[i], e * nw, 1, nw) += loc.row(static_cast<Eigen::Index>(i));
  }
  const Eigen::MatrixXd eta = sys.solve(rhs);

  OracleSpectrum out;
  out.solution_operator.resize(total, total);
  out.mass = Eigen::MatrixXd::Zero(total, total);
  parallel_for(ne, [&](int e) {
    const auto& lift = sys.lift(e);
    const auto& dofs = sys.element_dofs(e);
    Eigen::MatrixXd loc_eta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dofs.size()), total);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      if (dofs[i] >= 0) loc_eta.row(static_cast<Eigen::Index>(i)) = eta.row(dofs[i]);
    out.solution_operator.middleRows(e * nw, nw) = lift->u_trace * loc_eta;
    out.solution_operator.block(e * nw, e * nw, nw, nw) += lift->u_load;
    out.mass.block(e * nw, e * nw, nw, nw) = lift->mass_w;
  });

  const Eigen::MatrixXd mr = out.mass * out.solution_operator;
  out.symmetry_defect = (mr - mr.transpose()).cwiseAbs().maxCoeff() / mr.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd sym = 0.5 * (mr + mr.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, out.mass, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("oracle eigensolver failed");
  const Eigen::VectorXd mu = es.eigenvalues().reverse();
  if (!(mu.minCoeff() > 0.0)) throw NumericalError("T_h has a non-positive eigenvalue");
  const int count = (m > 0 && m < total) ? m : total;
  out.eigenvalues = mu.head(count).cwiseInverse();
  return out;
}

OracleSpectrum oracle_full_eig(const Mesh& mesh, const SpaceConfig& spaces, const TauSpec& tau,
                               const MaterialSpec& mat, int m) {
  return oracle_full_eig(CondensedSystem(mesh, spaces, tau, mat), m);
}

}  // namespace hdgeig
