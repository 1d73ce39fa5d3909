#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "hdgeig/error.hpp"

namespace hdgeig {

/// Dimension of P_k on a triangle.
constexpr int scalar_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }
/// Dimension of P_k^2.
constexpr int vector_dim(int k) { return 2 * scalar_dim(k); }
/// Dimension of P_k^2 + x P_k.
constexpr int rt_dim(int k) { return (k + 1) * (k + 3); }

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
inline double reference_monomial_integral(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}

/// Exponents (a, b) of x^a y^b ordered by total degree, so P_{k-1} is a prefix of P_k.
inline std::vector<std::pair<int, int>> monomial_exponents(int k) {
  std::vector<std::pair<int, int>> e;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) e.emplace_back(d - b, b);
  return e;
}

/// Affine map from the reference triangle: x = origin + jac * xi.
template <typename Scalar = double>
struct AffineMap {
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

  Vec2 origin = Vec2::Zero();
  Mat2 jac = Mat2::Identity();
  Mat2 jac_inv = Mat2::Identity();
  Scalar det = 1;

  static AffineMap identity() { return {}; }

  static AffineMap from_vertices(const Vec2& a, const Vec2& b, const Vec2& c) {
    AffineMap m;
    m.origin = a;
    m.jac.col(0) = b - a;
    m.jac.col(1) = c - a;
    m.det = m.jac.determinant();
    m.jac_inv = m.jac.inverse();
    return m;
  }

  Vec2 to_physical(const Vec2& xi) const { return origin + jac * xi; }
  Vec2 to_reference(const Vec2& x) const { return jac_inv * (x - origin); }
  Scalar area() const { return std::abs(det) / 2; }
};

/// L2(reference)-orthonormal basis of P_k(triangle), built by Cholesky
/// orthonormalisation of the monomials against their exact Gram matrix.
template <typename Scalar = double>
class ScalarBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

  explicit ScalarBasis(int degree) : degree_(degree), exps_(monomial_exponents(degree)) {
    if (degree < 0 || degree > 6)
      throw ConfigError("scalar basis degree " + std::to_string(degree) + " unsupported (0..6)");
    const int n = size();
    Matrix gram(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        gram(i, j) = Scalar(reference_monomial_integral(exps_[i].first + exps_[j].first,
                                                        exps_[i].second + exps_[j].second));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    gram_condition_ = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("monomial Gram matrix not SPD");
    // phi = L^{-1} m
    coeffs_ = llt.matrixL().solve(Matrix::Identity(n, n));
  }

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exps_.size()); }
  double gram_condition() const { return gram_condition_; }
  const Matrix& coefficients() const { return coeffs_; }

  Vector monomials(const Vec2& xi) const {
    Vector m(size());
    for (int i = 0; i < size(); ++i) m(i) = ipow(xi.x(), exps_[i].first) * ipow(xi.y(), exps_[i].second);
    return m;
  }

  Vector values(const Vec2& xi) const { return coeffs_ * monomials(xi); }

  /// Reference gradients, one row per basis function.
  Grad gradients(const Vec2& xi) const {
    Grad dm(size(), 2);
    for (int i = 0; i < size(); ++i) {
      const auto [a, b] = exps_[i];
      dm(i, 0) = a == 0 ? Scalar(0) : a * ipow(xi.x(), a - 1) * ipow(xi.y(), b);
      dm(i, 1) = b == 0 ? Scalar(0) : b * ipow(xi.x(), a) * ipow(xi.y(), b - 1);
    }
    return coeffs_ * dm;
  }

  /// Physical gradients under an affine map.
  Grad gradients(const Vec2& xi, const AffineMap<Scalar>& map) const {
    return gradients(xi) * map.jac_inv;
  }

  static Scalar ipow(Scalar x, int p) {
    Scalar r = 1;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
  }

 private:
  int degree_;
  std::vector<std::pair<int, int>> exps_;
  Matrix coeffs_;
  double gram_condition_ = 1.0;
};

/// P_k^2 built componentwise from a ScalarBasis: function i < n is (phi_i, 0),
/// function n + i is (0, phi_i).
template <typename Scalar = double>
class VectorBasis {
 public:
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

  explicit VectorBasis(int degree) : scalar_(degree) {}

  int degree() const { return scalar_.degree(); }
  int size() const { return 2 * scalar_.size(); }
  const ScalarBasis<Scalar>& scalar() const { return scalar_; }

  Values values(const Vec2& xi) const {
    const int n = scalar_.size();
    const auto phi = scalar_.values(xi);
    Values v = Values::Zero(2 * n, 2);
    v.col(0).head(n) = phi;
    v.col(1).tail(n) = phi;
    return v;
  }

  Vector divergences(const Vec2& xi, const AffineMap<Scalar>& map) const {
    const int n = scalar_.size();
    const auto g = scalar_.gradients(xi, map);
    Vector d(2 * n);
    d.head(n) = g.col(0);
    d.tail(n) = g.col(1);
    return d;
  }

 private:
  ScalarBasis<Scalar> scalar_;
};

/// Basis of P_k^2 + x P_k: the P_k^2 basis followed by
/// (x - x_c)/s * xi^(k-a) eta^a, a = 0..k, with x_c the centroid and s a
/// length scale of the element.
template <typename Scalar = double>
class RtBasis {
 public:
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

  explicit RtBasis(int degree) : vec_(degree) {
    if (degree < 0 || degree > 4)
      throw ConfigError("RT basis degree " + std::to_string(degree) + " unsupported (0..4)");
    if (size() != rt_dim(degree)) throw NumericalError("RT basis dimension mismatch");
  }

  int degree() const { return vec_.degree(); }
  int size() const { return vec_.size() + degree() + 1; }

  /// Values and divergences on the element described by `map`; the
  /// identity map gives the reference-element basis.
  void evaluate(const Vec2& xi, const AffineMap<Scalar>& map, Values& values, Vector& div,
                Scalar scale = 1) const {
    const int k = degree();
    const int nv = vec_.size();
    values.resize(size(), 2);
    div.resize(size());
    values.topRows(nv) = vec_.values(xi);
    div.head(nv) = vec_.divergences(xi, map);
    const Vec2 centroid = map.to_physical(Vec2(Scalar(1) / 3, Scalar(1) / 3));
    const Vec2 r = (map.to_physical(xi) - centroid) / scale;
    for (int a = 0; a <= k; ++a) {
      const int p = k - a;
      const Scalar h = ScalarBasis<Scalar>::ipow(xi.x(), p) * ScalarBasis<Scalar>::ipow(xi.y(), a);
      Vec2 dh_ref(p == 0 ? Scalar(0) : p * ScalarBasis<Scalar>::ipow(xi.x(), p - 1) *
                                           ScalarBasis<Scalar>::ipow(xi.y(), a),
                  a == 0 ? Scalar(0) : a * ScalarBasis<Scalar>::ipow(xi.x(), p) *
                                           ScalarBasis<Scalar>::ipow(xi.y(), a - 1));
      const Vec2 dh = map.jac_inv.transpose() * dh_ref;
      values.row(nv + a) = (r * h).transpose();
      div(nv + a) = (2 * h) / scale + r.dot(dh);
    }
  }

 private:
  VectorBasis<Scalar> vec_;
};

/// L2([0,1])-orthonormal Legendre basis of P_k on an edge.
template <typename Scalar = double>
class EdgeBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit EdgeBasis(int degree) : degree_(degree) {
    if (degree < 0 || degree > 8)
      throw ConfigError("edge basis degree " + std::to_string(degree) + " unsupported");
  }

  int degree() const { return degree_; }
  int size() const { return degree_ + 1; }

  Vector values(Scalar t) const {
    Vector v(size());
    const Scalar x = 2 * t - 1;
    Scalar p0 = 1, p1 = x;
    for (int a = 0; a <= degree_; ++a) {
      Scalar p;
      if (a == 0) {
        p = 1;
      } else if (a == 1) {
        p = x;
      } else {
        p = ((2 * a - 1) * x * p1 - (a - 1) * p0) / a;
        p0 = p1;
        p1 = p;
      }
      v(a) = std::sqrt(Scalar(2 * a + 1)) * p;
    }
    return v;
  }

 private:
  int degree_;
};

}  // namespace hdgeig
