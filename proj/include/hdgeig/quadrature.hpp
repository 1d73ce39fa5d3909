#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "hdgeig/error.hpp"

namespace hdgeig {

/// Points (one per row) and positive weights on a reference cell.
/// Triangle rules live on {x, y >= 0, x + y <= 1}; edge rules on [0, 1]
/// (column 0 only).
template <typename Scalar = double>
struct QuadratureRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> points;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
  int order = 0;

  Eigen::Index size() const { return weights.size(); }
  Eigen::Matrix<Scalar, 2, 1> point(Eigen::Index i) const { return points.row(i).transpose(); }
};

/// n-point Gauss-Legendre nodes/weights on [0, 1] (Newton on P_n).
template <typename Scalar = double>
void gauss_legendre(int n, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nodes,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    {
      // refresh derivative at the converged node
      Scalar p0 = 1, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    nodes(i) = (1 - x) / 2;
    nodes(n - 1 - i) = (1 + x) / 2;
    weights(i) = weights(n - 1 - i) = w / 2;
  }
  if (n % 2 == 1) nodes(n / 2) = Scalar(0.5);
}

/// Gauss-Legendre rule on [0, 1] exact for polynomials of degree <= order.
template <typename Scalar = double>
QuadratureRule<Scalar> edge_quadrature(int order) {
  if (order < 0 || order > 60)
    throw ConfigError("edge quadrature order " + std::to_string(order) + " unsupported (0..60)");
  const int n = order / 2 + 1;
  QuadratureRule<Scalar> rule;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  gauss_legendre<Scalar>(n, x, rule.weights);
  rule.points.setZero(n, 2);
  rule.points.col(0) = x;
  rule.order = order;
  return rule;
}

/// Collapsed (Duffy) Gauss product rule on the reference triangle, exact for
/// bivariate polynomials of total degree <= order. All weights are positive.
template <typename Scalar = double>
QuadratureRule<Scalar> triangle_quadrature(int order) {
  if (order < 0 || order > 20)
    throw ConfigError("triangle quadrature order " + std::to_string(order) + " unsupported (0..20)");
  // The Jacobian (1-s) raises the degree in s by one.
  const int n = (order + 1) / 2 + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x, w;
  gauss_legendre<Scalar>(n, x, w);
  QuadratureRule<Scalar> rule;
  rule.points.resize(n * n, 2);
  rule.weights.resize(n * n);
  int q = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j, ++q) {
      const Scalar s = x(i), t = x(j);
      rule.points(q, 0) = s;
      rule.points(q, 1) = (1 - s) * t;
      rule.weights(q) = w(i) * w(j) * (1 - s);
    }
  }
  rule.order = order;
  return rule;
}

}  // namespace hdgeig
