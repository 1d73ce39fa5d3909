#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hdgeig/assembly.hpp"

namespace hdgeig {

/// Ascending eigenvalues and B-orthonormal eigenvectors (one per column).
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Lowest m eigenpairs of A x = theta B x, A symmetric, B SPD (dense).
EigenPairs sym_gen_eig_lowest(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int m);

struct SubspaceOptions {
  int block = 0;  // 0: max(2m, m + 8)
  double tol = 1e-11;
  int max_iter = 1000;
  std::uint32_t seed = 20240229u;
};

/// Lowest m eigenpairs of A x = theta B x for sparse A SPD and B symmetric
/// positive semidefinite, by block inverse (shift 0) subspace iteration with
/// Rayleigh-Ritz. Vectors are B-orthonormal.
EigenPairs sym_gen_eig_lowest(const SparseMatrix& a, const SparseMatrix& b, int m,
                              const SubspaceOptions& opts = {});

/// Dense problems up to this size go through the dense generalized solver.
inline constexpr int kDenseLimit = 160;

struct SurrogatePair {
  double lambda = 0.0;
  Eigen::VectorXd eta;  // G-normalised
};

/// The m smallest eigenpairs of A eta = lambda~ G eta.
std::vector<SurrogatePair> solve_linear_surrogate(const CondensedSystem& sys, int m);

struct NonlinearOptions {
  double rel_tol = 1e-12;
  int max_iter = 50;
};

struct EigenPair {
  int mode = 1;  // 1-based index into the ascending discrete spectrum
  double lambda = 0.0;
  Eigen::VectorXd eta;
  int iterations = 0;
  double defect = 0.0;  // final |lambda^(m+1) - lambda^(m)| / lambda^(m+1)
  double residual = 0.0;  // ||A eta - lambda M(lambda) eta|| / ||A eta||
  std::vector<double> history;
};

/// Smallest lambda > 0 at which I - lambda U^W is singular on some element.
/// M(lambda) is SPD and increasing on (0, pole).
double resolvent_pole(const CondensedSystem& sys);

/// Solves A eta = lambda M(lambda) eta. With M frozen at the current iterate,
/// theta(lambda) is the `mode`-th eigenvalue of the linear pencil; the root of
/// theta(lambda) - lambda on (0, pole) is found by fixed-point and secant steps
/// kept inside a bracket.
EigenPair solve_condensed_nonlinear(const CondensedSystem& sys, const SurrogatePair& seed, int mode,
                                    const NonlinearOptions& opts = {});

/// Surrogate seeds followed by the nonlinear solve for modes 1..m.
std::vector<EigenPair> solve_condensed_modes(const CondensedSystem& sys, int m,
                                             const NonlinearOptions& opts = {});

/// Spectrum of the full HDG eigenproblem computed from the discrete solution
/// operator T_h (f -> u_h^f), built column by column.
struct OracleSpectrum {
  Eigen::VectorXd eigenvalues;        // ascending
  Eigen::MatrixXd solution_operator;  // T_h in the W_h basis
  Eigen::MatrixXd mass;               // block-diagonal W_h mass matrix
  double symmetry_defect = 0.0;       // ||M R - (M R)^T||_max / ||M R||_max
};

inline constexpr int kOracleLimit = 2000;

OracleSpectrum oracle_full_eig(const CondensedSystem& sys, int m);
OracleSpectrum oracle_full_eig(const Mesh& mesh, const SpaceConfig& spaces, const TauSpec& tau,
                               const MaterialSpec& mat, int m);

}  // namespace hdgeig
