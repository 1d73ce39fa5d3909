#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace testing {

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// max |A - A^T| / max |A|
inline double symmetry_defect(const Eigen::MatrixXd& a) {
  const double ref = max_abs(a);
  return ref > 0.0 ? max_abs(a - a.transpose()) / ref : 0.0;
}

inline double symmetry_defect(const Eigen::SparseMatrix<double>& a) {
  return symmetry_defect(Eigen::MatrixXd(a));
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937& rng) {
  const Eigen::MatrixXd x = random_matrix(n, n, rng);
  return x * x.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace testing
