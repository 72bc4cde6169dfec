/**
 * @file metrics.hpp
 * @brief Target metrics, reference immersions and the differential-geometry
 * helpers used to check them.
 *
 * Metrics that come from a known immersion y derive g = dy^T dy and its
 * derivatives from y's analytic first and second derivatives. Radial metrics
 * g~ = diag(1, eta(r)^2) in polar coordinates are pulled back in closed form.
 */
#pragma once

#include "ldgplate/types.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ldgplate {

using MetricFunction = std::function<Mat2(const Vec2 &)>;
/// dg[i] = d g / d x_i
using MetricDerivative = std::function<std::array<Mat2, 2>(const Vec2 &)>;

/// A map y: R^2 -> R^3 with analytic first and second derivatives.
struct Immersion {
  VectorFunction y;
  GradientFunction dy;
  std::function<Hessian3(const Vec2 &)> d2y;
};

/// Dirichlet data: phi on Gamma_D and, when gradients are clamped, Phi.
struct BoundaryData {
  VectorFunction phi;
  GradientFunction Phi; // may be empty for value-only anchoring
};

struct TargetMetric {
  std::string name;
  MetricFunction g;
  MetricDerivative dg;
  std::optional<Immersion> immersion;
};

/// Closed-form inverse square root of a 2x2 SPD matrix.
inline Mat2 inv_sqrt_spd(const Mat2 &g) {
  const double t = g.trace();
  const double d = g.determinant();
  if (!(d > 0.0) || !(t > 0.0) || !std::isfinite(t + d))
    throw Error(ErrorKind::invalid_metric, "matrix is not symmetric positive definite");
  const double s = std::sqrt(d);
  const Mat2 root = (g + s * Mat2::Identity()) / std::sqrt(t + 2.0 * s);
  const double dr = root.determinant();
  Mat2 inv;
  inv << root(1, 1), -root(0, 1), -root(1, 0), root(0, 0);
  return inv / dr;
}

inline bool is_spd(const Mat2 &g) {
  return std::abs(g(0, 1) - g(1, 0)) <= 1e-12 * (1.0 + g.norm()) && g(0, 0) > 0 && g.determinant() > 0;
}

/// Central-difference derivative of a metric, used for user-supplied metrics.
inline MetricDerivative finite_difference_derivative(MetricFunction g, double step = 1e-6) {
  return [g, step](const Vec2 &x) {
    std::array<Mat2, 2> out;
    for (int i = 0; i < 2; ++i) {
      Vec2 e = Vec2::Zero();
      e[i] = step;
      out[i] = (g(x + e) - g(x - e)) / (2 * step);
    }
    return out;
  };
}

inline Mat2 first_fundamental_form(const Mat32 &dy) { return dy.transpose() * dy; }

/// Metric induced by an immersion, with analytic derivatives
/// d_i g_ab = d_ai y . d_b y + d_a y . d_bi y.
inline TargetMetric metric_from_immersion(std::string name, Immersion imm) {
  TargetMetric m;
  m.name = std::move(name);
  m.g = [dy = imm.dy](const Vec2 &x) { return first_fundamental_form(dy(x)); };
  m.dg = [dy = imm.dy, d2y = imm.d2y](const Vec2 &x) {
    const Mat32 j = dy(x);
    const Hessian3 h = d2y(x);
    std::array<Mat2, 2> out;
    for (int i = 0; i < 2; ++i) {
      // column a of d_i(dy) is d_ai y
      Mat32 di;
      for (int k = 0; k < 3; ++k)
        for (int a = 0; a < 2; ++a) di(k, a) = h.comp[k](a, i);
      out[i] = di.transpose() * j + j.transpose() * di;
    }
    return out;
  };
  m.immersion = std::move(imm);
  return m;
}

/// Graph y = (x1, x2, f(x)) from f, grad f and Hess f.
inline Immersion graph_immersion(ScalarFunction f, std::function<Vec2(const Vec2 &)> df,
                                 std::function<Mat2(const Vec2 &)> d2f) {
  Immersion imm;
  imm.y = [f](const Vec2 &x) { return Vec3(x.x(), x.y(), f(x)); };
  imm.dy = [df](const Vec2 &x) {
    Mat32 j;
    j.topRows<2>().setIdentity();
    j.row(2) = df(x).transpose();
    return j;
  };
  imm.d2y = [d2f](const Vec2 &x) {
    Hessian3 h;
    h.comp[0].setZero();
    h.comp[1].setZero();
    h.comp[2] = d2f(x);
    return h;
  };
  return imm;
}

/// Cartesian gradient and Hessian of a function given through its polar
/// partial derivatives (f_r, f_t, f_rr, f_rt, f_tt).
struct PolarDerivatives {
  double fr = 0, ft = 0, frr = 0, frt = 0, ftt = 0;
};

inline std::pair<Vec2, Mat2> polar_to_cartesian_derivatives(const Vec2 &x, const PolarDerivatives &p) {
  const double r = x.norm();
  const Vec2 er = x / r;
  const Vec2 et(-er.y(), er.x());
  const Vec2 grad = p.fr * er + (p.ft / r) * et;
  const double mixed = p.frt / r - p.ft / (r * r);
  const Mat2 hess = p.frr * er * er.transpose() + (p.fr / r + p.ftt / (r * r)) * et * et.transpose() +
                    mixed * (er * et.transpose() + et * er.transpose());
  return {grad, hess};
}

inline Immersion radial_graph_immersion(std::function<std::array<double, 3>(double)> profile) {
  // profile(r) = {f, f', f''}; smooth at the origin requires f'(0) = 0
  auto f = [profile](const Vec2 &x) { return profile(x.norm())[0]; };
  auto df = [profile](const Vec2 &x) -> Vec2 {
    const double r = x.norm();
    if (r < 1e-12) return Vec2::Zero();
    return profile(r)[1] * x / r;
  };
  auto d2f = [profile](const Vec2 &x) -> Mat2 {
    const double r = x.norm();
    const auto p = profile(r);
    if (r < 1e-12) return p[2] * Mat2::Identity();
    const Vec2 er = x / r;
    return p[2] * er * er.transpose() + (p[1] / r) * (Mat2::Identity() - er * er.transpose());
  };
  return graph_immersion(f, df, d2f);
}

/// eta and its first two derivatives.
struct RadialProfile {
  std::function<double(double)> eta, deta, d2eta;
};

inline RadialProfile gel_profile(double K) {
  if (K == 0.0 || !std::isfinite(K)) throw Error(ErrorKind::invalid_parameter, "gel profile needs K != 0");
  RadialProfile p;
  if (K > 0) {
    const double s = std::sqrt(K);
    p.eta = [s](double r) { return std::sin(s * r) / s; };
    p.deta = [s](double r) { return std::cos(s * r); };
    p.d2eta = [s](double r) { return -s * std::sin(s * r); };
  } else {
    const double s = std::sqrt(-K);
    p.eta = [s](double r) { return std::sinh(s * r) / s; };
    p.deta = [s](double r) { return std::cosh(s * r); };
    p.d2eta = [s](double r) { return s * std::sinh(s * r); };
  }
  return p;
}

inline RadialProfile euclidean_profile() {
  return {[](double r) { return r; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

/// kappa = -eta''/eta.
inline double gauss_curvature(const RadialProfile &p, double r) {
  const double e = p.eta(r);
  if (e == 0.0) throw Error(ErrorKind::invalid_parameter, "gauss_curvature: eta(r) = 0");
  return -p.d2eta(r) / e;
}

/// Cartesian pullback of diag(1, eta(r)^2): g = q I + (1-q) e_r e_r^T with q = (eta/r)^2.
inline TargetMetric radial_metric(std::string name, RadialProfile p) {
  TargetMetric m;
  m.name = std::move(name);
  m.g = [p](const Vec2 &x) -> Mat2 {
    const double r = x.norm();
    if (r < 1e-10) return Mat2::Identity();
    const double q = std::pow(p.eta(r) / r, 2);
    const Vec2 er = x / r;
    return q * Mat2::Identity() + (1 - q) * er * er.transpose();
  };
  m.dg = [p](const Vec2 &x) -> std::array<Mat2, 2> {
    const double r = x.norm();
    if (r < 1e-10) return {Mat2::Zero(), Mat2::Zero()};
    const double e = p.eta(r);
    const double q = std::pow(e / r, 2);
    const double dq = 2 * (e / r) * (p.deta(r) * r - e) / (r * r);
    const Mat2 P = x * x.transpose() / (r * r);
    std::array<Mat2, 2> out;
    for (int i = 0; i < 2; ++i) {
      Mat2 dP;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          dP(a, b) = ((a == i ? x[b] : 0.0) + (b == i ? x[a] : 0.0)) / (r * r) - 2 * x[a] * x[b] * x[i] / (r * r * r * r);
      out[i] = dq * (x[i] / r) * (Mat2::Identity() - P) + (1 - q) * dP;
    }
    return out;
  };
  return m;
}

/// Pullback of a metric given in polar coordinates (r, theta): g = J^{-T} g~ J^{-1}.
inline MetricFunction polar_pullback(std::function<Mat2(double, double)> g_polar) {
  return [g_polar](const Vec2 &x) -> Mat2 {
    const double r = x.norm();
    if (r < 1e-10) return g_polar(0.0, 0.0);
    const double th = std::atan2(x.y(), x.x());
    Mat2 jinv; // rows: e_r^T, e_theta^T / r
    jinv << x.x() / r, x.y() / r, -x.y() / (r * r), x.x() / (r * r);
    return jinv.transpose() * g_polar(r, th) * jinv;
  };
}

// Catalog entries ---------------------------------------------------------

inline TargetMetric identity_metric() {
  return metric_from_immersion(
      "identity", graph_immersion([](const Vec2 &) { return 0.0; }, [](const Vec2 &) { return Vec2::Zero(); },
                                  [](const Vec2 &) { return Mat2::Zero(); }));
}

/// Cylinder-type graph y3 = sum_m A_m sin(w_m (x1 + 2)).
inline TargetMetric cylinder_metric(std::string name, std::vector<std::pair<double, double>> modes) {
  auto f = [modes](const Vec2 &x) {
    double s = 0;
    for (auto [a, w] : modes) s += a * std::sin(w * (x.x() + 2));
    return s;
  };
  auto df = [modes](const Vec2 &x) {
    double s = 0;
    for (auto [a, w] : modes) s += a * w * std::cos(w * (x.x() + 2));
    return Vec2(s, 0.0);
  };
  auto d2f = [modes](const Vec2 &x) {
    double s = 0;
    for (auto [a, w] : modes) s -= a * w * w * std::sin(w * (x.x() + 2));
    Mat2 h = Mat2::Zero();
    h(0, 0) = s;
    return h;
  };
  return metric_from_immersion(std::move(name), graph_immersion(f, df, d2f));
}

inline TargetMetric one_mode_metric() {
  return cylinder_metric("one_mode", {{2.0, std::numbers::pi / 4}});
}

inline TargetMetric two_modes_metric() {
  return cylinder_metric("two_modes", {{2.0, std::numbers::pi / 4}, {0.5, 5 * std::numbers::pi / 4}});
}

/// y^alpha = cos(alpha) ybar + sin(alpha) ytilde; alpha = 0 helicoid, pi/2 catenoid.
inline Immersion catenoid_helicoid_immersion(double alpha) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  Immersion imm;
  imm.y = [=](const Vec2 &x) {
    const double s1 = std::sin(x.x()), c1 = std::cos(x.x()), sh = std::sinh(x.y()), ch = std::cosh(x.y());
    return Vec3(ca * sh * s1 + sa * ch * c1, -ca * sh * c1 + sa * ch * s1, ca * x.x() + sa * x.y());
  };
  imm.dy = [=](const Vec2 &x) {
    const double s1 = std::sin(x.x()), c1 = std::cos(x.x()), sh = std::sinh(x.y()), ch = std::cosh(x.y());
    Mat32 j;
    j << ca * sh * c1 - sa * ch * s1, ca * ch * s1 + sa * sh * c1,
        ca * sh * s1 + sa * ch * c1, -ca * ch * c1 + sa * sh * s1,
        ca, sa;
    return j;
  };
  imm.d2y = [=](const Vec2 &x) {
    const double s1 = std::sin(x.x()), c1 = std::cos(x.x()), sh = std::sinh(x.y()), ch = std::cosh(x.y());
    Hessian3 h;
    h.comp[0] << -ca * sh * s1 - sa * ch * c1, ca * ch * c1 - sa * sh * s1,
        ca * ch * c1 - sa * sh * s1, ca * sh * s1 + sa * ch * c1;
    h.comp[1] << ca * sh * c1 - sa * ch * s1, ca * ch * s1 + sa * sh * c1,
        ca * ch * s1 + sa * sh * c1, -ca * sh * c1 + sa * ch * s1;
    h.comp[2].setZero();
    return h;
  };
  return imm;
}

inline TargetMetric catenoid_helicoid_metric(double alpha = 0.0) {
  TargetMetric m = metric_from_immersion("catenoid_helicoid", catenoid_helicoid_immersion(alpha));
  // every member of the family shares g = cosh^2(x2) I; use the closed form
  m.g = [](const Vec2 &x) { return std::pow(std::cosh(x.y()), 2) * Mat2::Identity(); };
  m.dg = [](const Vec2 &x) -> std::array<Mat2, 2> {
    return {Mat2::Zero(), 2 * std::cosh(x.y()) * std::sinh(x.y()) * Mat2::Identity()};
  };
  return m;
}

inline TargetMetric bubble_metric(double alpha) {
  if (!(alpha > 0)) throw Error(ErrorKind::invalid_parameter, "bubble metric needs alpha > 0");
  const double a = std::sqrt(alpha), w = std::numbers::pi / 2;
  // y3 = sqrt(alpha) sin(pi/2 (1 - r)); f'(0) = -a w cos(pi/2) = 0 to rounding
  auto profile = [a, w](double r) -> std::array<double, 3> {
    const double th = w * (1 - r);
    return {a * std::sin(th), -a * w * std::cos(th), -a * w * w * std::sin(th)};
  };
  return metric_from_immersion("bubble", radial_graph_immersion(profile));
}

inline TargetMetric hyperbolic_paraboloid_metric() {
  return metric_from_immersion(
      "hyperbolic_paraboloid",
      graph_immersion([](const Vec2 &x) { return x.x() * x.y(); }, [](const Vec2 &x) { return Vec2(x.y(), x.x()); },
                      [](const Vec2 &) {
                        Mat2 h;
                        h << 0, 1, 1, 0;
                        return h;
                      }));
}

/// Graph of 0.2 r^4 sin(6 theta) over the disc.
inline Immersion oscillating_boundary_immersion(double amplitude = 0.2, int waves = 6) {
  const double A = amplitude, n = waves;
  auto polar = [A, n](const Vec2 &x) {
    const double r = x.norm(), t = std::atan2(x.y(), x.x());
    const double s = std::sin(n * t), c = std::cos(n * t);
    PolarDerivatives p;
    p.fr = 4 * A * r * r * r * s;
    p.ft = n * A * std::pow(r, 4) * c;
    p.frr = 12 * A * r * r * s;
    p.frt = 4 * n * A * r * r * r * c;
    p.ftt = -n * n * A * std::pow(r, 4) * s;
    return p;
  };
  auto f = [A, n](const Vec2 &x) { return A * std::pow(x.norm(), 4) * std::sin(n * std::atan2(x.y(), x.x())); };
  auto df = [polar](const Vec2 &x) -> Vec2 {
    if (x.norm() < 1e-12) return Vec2::Zero();
    return polar_to_cartesian_derivatives(x, polar(x)).first;
  };
  auto d2f = [polar](const Vec2 &x) -> Mat2 {
    if (x.norm() < 1e-12) return Mat2::Zero();
    return polar_to_cartesian_derivatives(x, polar(x)).second;
  };
  return graph_immersion(f, df, d2f);
}

inline TargetMetric oscillating_boundary_metric() {
  return metric_from_immersion("oscillating_boundary", oscillating_boundary_immersion());
}

/// First fundamental form of the oscillating surface in polar coordinates.
inline Mat2 oscillating_boundary_polar_metric(double r, double t, double amplitude = 0.2, int waves = 6) {
  // ytilde(r,t) = (r cos t, r sin t, A r^4 sin(n t))
  const double A = amplitude, n = waves;
  const Vec3 yr(std::cos(t), std::sin(t), 4 * A * r * r * r * std::sin(n * t));
  const Vec3 yt(-r * std::sin(t), r * std::cos(t), n * A * std::pow(r, 4) * std::cos(n * t));
  Mat2 g;
  g << yr.dot(yr), yr.dot(yt), yt.dot(yr), yt.dot(yt);
  return g;
}

inline TargetMetric gel_disc_metric(double K) {
  return radial_metric("gel_disc", gel_profile(K));
}

/// Looks up a catalog entry. Recognised parameters: alpha (bubble,
/// catenoid_helicoid), K (gel_disc).
inline TargetMetric catalog(const std::string &name, const std::map<std::string, double> &params = {}) {
  auto get = [&](const std::string &k, double def) {
    auto it = params.find(k);
    return it == params.end() ? def : it->second;
  };
  if (name == "identity") return identity_metric();
  if (name == "one_mode") return one_mode_metric();
  if (name == "two_modes") return two_modes_metric();
  if (name == "catenoid_helicoid") return catenoid_helicoid_metric(get("alpha", 0.0));
  if (name == "bubble") return bubble_metric(get("alpha", 0.2));
  if (name == "hyperbolic_paraboloid") return hyperbolic_paraboloid_metric();
  if (name == "oscillating_boundary") return oscillating_boundary_metric();
  if (name == "gel_disc") return gel_disc_metric(get("K", 2.0));
  throw Error(ErrorKind::invalid_parameter, "unknown metric '" + name + "'");
}

inline BoundaryData boundary_data_from(const Immersion &imm) { return {imm.y, imm.dy}; }

/// Flat identity data: phi = (x, 0), Phi = [I; 0].
inline BoundaryData identity_boundary_data() {
  BoundaryData d;
  d.phi = [](const Vec2 &x) { return Vec3(x.x(), x.y(), 0.0); };
  d.Phi = [](const Vec2 &) {
    Mat32 j = Mat32::Zero();
    j.topRows<2>().setIdentity();
    return j;
  };
  return d;
}

// Christoffel symbols and the Hessian/second-fundamental-form comparison ---

/// Gamma[l](i,j) = 1/2 g^{lm} (d_i g_jm + d_j g_im - d_m g_ij).
inline std::array<Mat2, 2> christoffel(const Mat2 &g, const std::array<Mat2, 2> &dg) {
  const Mat2 ginv = g.inverse();
  std::array<Mat2, 2> G{Mat2::Zero(), Mat2::Zero()};
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double s = 0;
        for (int m = 0; m < 2; ++m) s += ginv(l, m) * (dg[i](j, m) + dg[j](i, m) - dg[m](i, j));
        G[l](i, j) = 0.5 * s;
      }
  return G;
}

struct AlternativeEnergyTerms {
  double hess_frob = 0;  // |a D^2y a|^2
  double hess_trace = 0; // |tr(a D^2y a)|^2
  double sff_frob = 0;   // |a II a|^2
  double sff_trace = 0;  // tr(a II a)^2
  double f1 = 0, f2 = 0;
};

inline AlternativeEnergyTerms alternative_energy_terms(const TargetMetric &metric, const Vec2 &x) {
  if (!metric.immersion) throw Error(ErrorKind::missing_data, "metric has no immersion");
  const auto &imm = *metric.immersion;
  const Mat32 dy = imm.dy(x);
  const Hessian3 h = imm.d2y(x);
  const Mat2 g = metric.g(x);
  const Mat2 a = inv_sqrt_spd(g);
  const auto Gam = christoffel(g, metric.dg(x));
  Vec3 nu = Vec3(dy.col(0)).cross(Vec3(dy.col(1)));
  nu.normalize();

  AlternativeEnergyTerms t;
  Mat2 II;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) II(i, j) = h.comp[0](i, j) * nu[0] + h.comp[1](i, j) * nu[1] + h.comp[2](i, j) * nu[2];
  const Mat2 aIIa = a * II * a;
  t.sff_frob = frob(aIIa, aIIa);
  t.sff_trace = aIIa.trace() * aIIa.trace();
  for (int k = 0; k < 3; ++k) {
    const Mat2 m = a * h.comp[k] * a;
    t.hess_frob += frob(m, m);
    t.hess_trace += m.trace() * m.trace();
  }
  const Mat2 C0 = a * Gam[0] * a, C1 = a * Gam[1] * a;
  const Mat2 C[2] = {C0, C1};
  for (int l1 = 0; l1 < 2; ++l1)
    for (int l2 = 0; l2 < 2; ++l2) {
      t.f1 += g(l1, l2) * frob(C[l1], C[l2]);
      t.f2 += g(l1, l2) * C[l1].trace() * C[l2].trace();
    }
  return t;
}

/// Max residuals of |aD^2ya|^2 = |aIIa|^2 + f1 and |tr aD^2ya|^2 = tr(aIIa)^2 + f2.
inline std::pair<double, double> verify_alternative_energy(const TargetMetric &metric, const std::vector<Vec2> &points) {
  double r1 = 0, r2 = 0;
  for (const auto &x : points) {
    const auto t = alternative_energy_terms(metric, x);
    r1 = std::max(r1, std::abs(t.hess_frob - t.sff_frob - t.f1));
    r2 = std::max(r2, std::abs(t.hess_trace - t.sff_trace - t.f2));
  }
  return {r1, r2};
}

/// Pointwise integrand mu/12 (|aD^2ya|^2 + lambda/(2mu+lambda) |tr aD^2ya|^2) of the smooth energy.
inline double smooth_energy_density(const TargetMetric &metric, const Vec2 &x, double mu, double lambda) {
  if (!metric.immersion) throw Error(ErrorKind::missing_data, "metric has no immersion");
  const Mat2 a = inv_sqrt_spd(metric.g(x));
  const Hessian3 h = metric.immersion->d2y(x);
  double fr = 0, tr = 0;
  for (int k = 0; k < 3; ++k) {
    const Mat2 m = a * h.comp[k] * a;
    fr += frob(m, m);
    tr += m.trace() * m.trace();
  }
  return mu / 12.0 * (fr + lambda / (2 * mu + lambda) * tr);
}

inline std::vector<Vec2> sample_grid(std::pair<double, double> xr, std::pair<double, double> yr, int n) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      pts.emplace_back(xr.first + (xr.second - xr.first) * (i + 0.5) / n,
                       yr.first + (yr.second - yr.first) * (j + 0.5) / n);
  return pts;
}

/// Length of the image of the circle of radius r under any isometric immersion of a radial metric.
inline double circle_image_length(const MetricFunction &g, double r, int n = 2000) {
  // the arc-length integrand sqrt(x'^T g x') is smooth and periodic, so the
  // trapezoidal rule converges spectrally
  double len = 0;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    const Vec2 x(r * std::cos(t), r * std::sin(t));
    const Vec2 dx(-r * std::sin(t), r * std::cos(t));
    len += std::sqrt(dx.dot(g(x) * dx));
  }
  return len * 2 * std::numbers::pi / n;
}

} // namespace ldgplate
