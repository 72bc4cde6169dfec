/**
 * @file quadrature.hpp
 * @brief Gauss-Legendre rules on [0,1] and [0,1]^2, Gauss-Lobatto nodes, and
 * 1D Lagrange polynomials used to build tensor-product bases.
 */
#pragma once

#include "ldgplate/types.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ldgplate {

/// Legendre polynomial P_n and its derivative at t in [-1,1].
inline std::pair<double, double> legendre(int n, double t) {
  double p0 = 1.0, p1 = t;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  // derivative from the standard recurrence; t = +-1 handled separately
  double dp;
  if (std::abs(std::abs(t) - 1.0) < 1e-15) {
    dp = 0.5 * n * (n + 1.0) * (t > 0 ? 1.0 : (n % 2 == 0 ? -1.0 : 1.0));
  } else {
    dp = n * (t * p1 - p0) / (t * t - 1.0);
  }
  return {p1, dp};
}

struct Rule1D {
  std::vector<double> points;  // in [0,1]
  std::vector<double> weights; // sum to 1
};

/// n-point Gauss-Legendre rule on [0,1]; exact for degree 2n-1.
inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::invalid_parameter, "gauss_legendre: n must be >= 1");
  Rule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, t);
      double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    auto [p, dp] = legendre(n, t);
    (void)p;
    double w = 2.0 / ((1.0 - t * t) * dp * dp);
    // map to [0,1], ascending order
    r.points[n - 1 - i] = 0.5 * (t + 1.0);
    r.weights[n - 1 - i] = 0.5 * w;
  }
  return r;
}

/// Gauss-Lobatto nodes on [0,1] for polynomial degree p (p+1 nodes, endpoints included).
inline std::vector<double> gauss_lobatto_nodes(int p) {
  if (p < 1) throw Error(ErrorKind::invalid_parameter, "gauss_lobatto_nodes: degree must be >= 1");
  std::vector<double> x(p + 1);
  x[0] = 0.0;
  x[p] = 1.0;
  // interior nodes are roots of P'_p
  for (int i = 1; i < p; ++i) {
    double t = -std::cos(std::numbers::pi * i / p);
    for (int it = 0; it < 100; ++it) {
      // P'_p(t) and P''_p(t) via the Legendre ODE
      auto [pp, dp] = legendre(p, t);
      double d2p = (2.0 * t * dp - p * (p + 1.0) * pp) / (1.0 - t * t);
      double dt = dp / d2p;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = 0.5 * (t + 1.0);
  }
  return x;
}

/// Lagrange polynomials on a set of nodes: values and first two derivatives.
class Lagrange1D {
public:
  explicit Lagrange1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {}

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double> &nodes() const { return nodes_; }

  /// value, first and second derivative of basis i at t
  void eval(int i, double t, double &v, double &d1, double &d2) const {
    const int n = size();
    v = 1.0;
    d1 = 0.0;
    d2 = 0.0;
    // product rule over factors (t - x_j)/(x_i - x_j)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double den = nodes_[i] - nodes_[j];
      const double f = (t - nodes_[j]) / den;
      const double df = 1.0 / den;
      d2 = d2 * f + 2.0 * d1 * df;
      d1 = d1 * f + v * df;
      v = v * f;
    }
  }

private:
  std::vector<double> nodes_;
};

} // namespace ldgplate
