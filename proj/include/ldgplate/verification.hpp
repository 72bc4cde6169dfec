/**
 * @file verification.hpp
 * @brief Property checks shared by `ldgplate verify` and the acceptance suite.
 *
 * Each check computes a residual through a second route (direct quadrature,
 * dense linear algebra, closed forms) and compares it with a pinned tolerance.
 */
#pragma once

#include "ldgplate/presets.hpp"

#include <random>

namespace ldgplate {

struct CheckResult {
  std::string name;
  double residual = 0;
  double tolerance = 0;
  bool passed = false;
  std::string note;
};

inline CheckResult make_check(std::string name, double residual, double tolerance, std::string note = {}) {
  return {std::move(name), residual, tolerance, std::isfinite(residual) && residual <= tolerance, std::move(note)};
}

using LiftR = std::function<EdgeLifting(const BrokenSpace &, int, const Eigen::Matrix<double, Eigen::Dynamic, 2> &)>;
using LiftB = std::function<EdgeLifting(const BrokenSpace &, int, const Eigen::VectorXd &)>;

struct AdjointResiduals {
  double r = 0, b = 0;
};

/// Max relative residual of the defining identities
///   int_Omega r_e(j) : tau = int_e {tau}_ab n_b j_a,
///   int_Omega b_e(j) : tau = int_e {d_b tau_ab} n_a j
/// over all edges, for random jumps and random tau in the lifting space.
inline AdjointResiduals lifting_adjoint_residuals(const BrokenSpace &L, unsigned seed, const LiftR &lr = lift_r,
                                                  const LiftB &lb = lift_b) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Mesh &mesh = L.mesh();
  const int n = L.n_local(), nq = L.n_edge_points();
  AdjointResiduals res;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const auto &ed = mesh.edge(e);
    const auto &et = L.edge(e);
    const double w = ed.n_sides == 2 ? 0.5 : 1.0;
    std::map<int, Eigen::MatrixXd> tau; // cell -> n x 4
    for (int k = 0; k < ed.n_sides; ++k) {
      Eigen::MatrixXd t(n, 4);
      for (int i = 0; i < t.size(); ++i) t.data()[i] = U(rng);
      tau[ed.sides[k].cell] = t;
    }
    Eigen::Matrix<double, Eigen::Dynamic, 2> jr(nq, 2);
    Eigen::VectorXd jb(nq);
    for (int q = 0; q < nq; ++q) {
      jr.row(q) << U(rng), U(rng);
      jb[q] = U(rng);
    }
    auto volume = [&](const EdgeLifting &l) {
      double s = 0;
      for (std::size_t i = 0; i < l.cells.size(); ++i) {
        const auto &ct = L.cell(l.cells[i]);
        const Eigen::MatrixXd lv = ct.basis.val.transpose() * l.coeffs[i];
        const Eigen::MatrixXd tv = ct.basis.val.transpose() * tau.at(l.cells[i]);
        for (int p = 0; p < lv.rows(); ++p) s += ct.weights[p] * lv.row(p).dot(tv.row(p));
      }
      return s;
    };
    double edge_r = 0, edge_b = 0, scale_r = 0, scale_b = 0;
    for (int k = 0; k < ed.n_sides; ++k) {
      const Eigen::MatrixXd &t = tau.at(ed.sides[k].cell);
      const Eigen::MatrixXd tv = et.side[k].val.transpose() * t;
      const Eigen::MatrixXd tx = et.side[k].dx.transpose() * t, ty = et.side[k].dy.transpose() * t;
      for (int q = 0; q < nq; ++q)
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            const double tr = w * et.weights[q] * tv(q, 2 * a + b) * ed.normal[b] * jr(q, a);
            edge_r += tr;
            scale_r += std::abs(tr);
          }
          const double div = tx(q, 2 * a) + ty(q, 2 * a + 1);
          const double tb = w * et.weights[q] * div * ed.normal[a] * jb[q];
          edge_b += tb;
          scale_b += std::abs(tb);
        }
    }
    res.r = std::max(res.r, std::abs(volume(lr(L, e, jr)) - edge_r) / std::max(1.0, scale_r));
    res.b = std::max(res.b, std::abs(volume(lb(L, e, jb)) - edge_b) / std::max(1.0, scale_b));
  }
  return res;
}

/// Max |H_h[y] - D^2 y| at the quadrature points for a global quadratic y,
/// with the Dirichlet data taken from y itself so that all jumps vanish.
inline double zero_jump_hessian_error(const Mesh &mesh) {
  auto y = [](const Vec2 &x) {
    return Vec3(0.3 * x.x() * x.x() - 0.7 * x.x() * x.y() + 0.2 * x.y() + 1.0,
                -0.5 * x.y() * x.y() + 1.1 * x.x() * x.y() - 0.4 * x.x(),
                0.9 * x.x() * x.x() + 0.6 * x.y() * x.y() - 0.3 * x.x() * x.y() + 0.1 * x.x());
  };
  auto dy = [](const Vec2 &x) {
    Mat32 j;
    j << 0.6 * x.x() - 0.7 * x.y(), -0.7 * x.x() + 0.2,
        1.1 * x.y() - 0.4, -x.y() + 1.1 * x.x(),
        1.8 * x.x() - 0.3 * x.y() + 0.1, 1.2 * x.y() - 0.3 * x.x();
    return j;
  };
  Hessian3 exact;
  exact.comp[0] << 0.6, -0.7, -0.7, 0.0;
  exact.comp[1] << 0.0, 1.1, 1.1, -1.0;
  exact.comp[2] << 1.8, -0.3, -0.3, 1.2;
  const BrokenSpace V(mesh);
  const JumpSet J = JumpSet::standard(mesh, mesh.has_dirichlet() ? std::optional(BoundaryData{y, dy}) : std::nullopt);
  const HessianCache cache(V, V, J);
  const FieldCoeffs Y = interpolate(V, y);
  double err = 0;
  for (int K = 0; K < V.n_cells(); ++K) {
    const auto H = cache.hessian(Y, K);
    for (const auto &h : H)
      for (int c = 0; c < 3; ++c) err = std::max(err, (h.comp[c] - exact.comp[c]).cwiseAbs().maxCoeff());
  }
  return err;
}

/// Relative residual of E_h[y+v] = E_h[y] + (v^T A Y - L.v - F.v) + 1/2 v^T A v,
/// with every E_h evaluated directly from H_h and the jumps.
inline double quadratic_expansion_residual(const PlateProblem &P, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const BrokenSpace &V = P.space();
  FieldCoeffs y = identity_field(V), v(V.n_scalar(), 3);
  for (int i = 0; i < y.rows(); ++i)
    for (int c = 0; c < 3; ++c) {
      y(i, c) += 0.1 * U(rng);
      v(i, c) = 0.1 * U(rng);
    }
  const QuadraticSystem &Q = P.bending();
  double linear = 0, quad = 0;
  for (int c = 0; c < 3; ++c) {
    linear += v.col(c).dot(Q.A * y.col(c)) - v.col(c).dot(Q.L.col(c) + P.load().col(c));
    quad += v.col(c).dot(Q.A * v.col(c));
  }
  const double lhs = P.energy(y + v);
  const double rhs = P.energy(y) + linear + 0.5 * quad;
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

/// Max over sample points of |E_alpha - E_0| for the smooth energy density of
/// the catenoid-helicoid family.
inline double alpha_independence_residual(int n_alpha = 9) {
  const auto pts = sample_grid({0.0, 6.25}, {-1.0, 1.0}, 12);
  const TargetMetric base = metric_from_immersion("alpha0", catenoid_helicoid_immersion(0.0));
  double res = 0;
  for (int k = 1; k < n_alpha; ++k) {
    const double alpha = std::numbers::pi / 2 * k / (n_alpha - 1);
    const TargetMetric m = metric_from_immersion("alpha", catenoid_helicoid_immersion(alpha));
    for (const auto &x : pts)
      res = std::max(res, std::abs(smooth_energy_density(m, x, 6, 8) - smooth_energy_density(base, x, 6, 8)));
  }
  return res;
}

/// Max |kappa(r) - K| on (0, 1].
inline double curvature_residual(const RadialProfile &p, double K) {
  double res = 0;
  for (int i = 1; i <= 50; ++i) res = std::max(res, std::abs(gauss_curvature(p, i / 50.0) - K));
  return res;
}

/// Relative difference between the Schur CG saddle solve and the dense KKT
/// oracle on a small clamped problem with a random linearization point.
inline double saddle_vs_dense_residual(int cells_per_side, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mesh mesh = build_rectangle({0, 1}, {0, 1}, cells_per_side, cells_per_side,
                              [](const Vec2 &x) { return x.x() < 1e-12; });
  PlateProblem P(std::move(mesh), identity_metric(), identity_boundary_data(), MaterialParams{});
  const BrokenSpace &V = P.space();
  FieldCoeffs y = identity_field(V), F(V.n_scalar(), 3);
  for (int i = 0; i < y.rows(); ++i)
    for (int c = 0; c < 3; ++c) {
      y(i, c) += 0.2 * U(rng);
      F(i, c) = U(rng);
    }
  const SparseMatrix A = P.bending().A + 10.0 * P.h2_product();
  const ConstraintMatrix B(V, y);
  const SpdFactorization fact(A);
  SchurOptions opt;
  opt.cg_tol = 1e-13;
  const SaddleSolution s = saddle_solve(fact, B, F, opt);
  const auto [dY, lam] = dense_kkt_solve(A, B, F);
  return (s.dY - dY).norm() / std::max(1e-300, dY.norm());
}

struct FlowAudit {
  double max_energy_increase = 0; ///< relative to max(1, |E|)
  int steps = 0;
};

/// Largest per-step energy increase recorded in a flow history.
inline FlowAudit audit_history(const std::vector<StepRecord> &h) {
  FlowAudit a;
  for (std::size_t k = 1; k < h.size(); ++k)
    a.max_energy_increase = std::max(a.max_energy_increase, (h[k].E - h[k - 1].E) / std::max(1.0, std::abs(h[k - 1].E)));
  a.steps = h.empty() ? 0 : static_cast<int>(h.size()) - 1;
  return a;
}

/// Max over steps of D_h[y^{n+1}] - (D_h[y^n] + expansion terms), relative,
/// recomputed from a stored trajectory. Negative means the bound holds.
inline double defect_bound_excess(const PlateProblem &P, const std::vector<FieldCoeffs> &traj) {
  const BrokenSpace &V = P.space();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const FieldCoeffs dy = traj[k] - traj[k - 1];
    const double bound =
        P.defect(traj[k - 1]) + detail::cellwise_gram(V, dy, dy, false) + detail::cellwise_gram(V, dy, traj[k - 1], true);
    worst = std::max(worst, (P.defect(traj[k]) - bound) / std::max(1.0, bound));
  }
  return worst;
}

/// The fast property suite. Flows run on a clamped 4x4 square under load so
/// that energy decay and the defect bound are exercised on real steps.
inline std::vector<CheckResult> run_property_suite() {
  std::vector<CheckResult> out;

  {
    const Mesh rect = build_rectangle({0, 2}, {0, 1}, 4, 3, [](const Vec2 &x) { return x.x() < 1e-12; });
    const Mesh disc = build_disc(1.0, 80);
    const auto a = lifting_adjoint_residuals(BrokenSpace(rect), 7);
    const auto b = lifting_adjoint_residuals(BrokenSpace(disc), 11);
    out.push_back(make_check("lifting adjoint r_e", std::max(a.r, b.r), 1e-11));
    out.push_back(make_check("lifting adjoint b_e", std::max(a.b, b.b), 1e-11));
  }
  {
    const Mesh clamped = build_rectangle({0, 1}, {0, 1}, 4, 4, [](const Vec2 &) { return true; });
    const Mesh free = build_rectangle({-1, 1}, {0, 1}, 4, 2);
    out.push_back(make_check("zero-jump Hessian exactness",
                             std::max(zero_jump_hessian_error(clamped), zero_jump_hessian_error(free)), 1e-12));
  }
  {
    PlateProblem clamped(build_rectangle({0, 1}, {0, 1}, 3, 3, [](const Vec2 &x) { return x.x() < 1e-12; }),
                         one_mode_metric(), identity_boundary_data(), MaterialParams{8, 6, 3, 2},
                         [](const Vec2 &x) { return Vec3(0.1, -0.2, std::sin(x.x())); });
    PlateProblem free(build_disc(1.0, 20), gel_disc_metric(2.0), std::nullopt, MaterialParams{});
    out.push_back(make_check("quadratic energy expansion",
                             std::max(quadratic_expansion_residual(clamped, 3), quadratic_expansion_residual(free, 5)),
                             1e-10));
  }
  {
    const auto cyl = verify_alternative_energy(one_mode_metric(), sample_grid({-2, 2}, {-1, 1}, 12));
    const auto cyl2 = verify_alternative_energy(two_modes_metric(), sample_grid({-2, 2}, {-1, 1}, 12));
    const auto cat = verify_alternative_energy(catenoid_helicoid_metric(std::numbers::pi / 2),
                                               sample_grid({0, 6.25}, {-1, 1}, 12));
    const auto hel = verify_alternative_energy(catenoid_helicoid_metric(0.0), sample_grid({0, 6.25}, {-1, 1}, 12));
    out.push_back(make_check("alternative energy rho1", std::max({cyl.first, cyl2.first, cat.first, hel.first}), 1e-9));
    out.push_back(make_check("alternative energy rho2", std::max({cyl.second, cyl2.second, cat.second, hel.second}), 1e-9));
  }
  out.push_back(make_check("alpha-independence of the energy density", alpha_independence_residual(), 1e-9));
  {
    const double kp = curvature_residual(gel_profile(2.0), 2.0);
    const double km = curvature_residual(gel_profile(-2.0), -2.0);
    const double k0 = curvature_residual(euclidean_profile(), 0.0);
    std::ostringstream note;
    note << std::setprecision(12) << "kappa = " << gauss_curvature(gel_profile(2.0), 0.5) << ", "
         << gauss_curvature(gel_profile(-2.0), 0.5) << ", " << gauss_curvature(euclidean_profile(), 0.5);
    out.push_back(make_check("Gaussian curvature of gel profiles", std::max({kp, km, k0}), 1e-10, note.str()));
  }
  out.push_back(make_check("saddle solve vs dense KKT (1 cell)", saddle_vs_dense_residual(1, 1), 1e-8));
  out.push_back(make_check("saddle solve vs dense KKT (4 cells)", saddle_vs_dense_residual(2, 2), 1e-8));
  {
    // single-step flows on a clamped 4x4 square under a large load
    PlateProblem P(build_rectangle({0, 4}, {0, 4}, 4, 4, [](const Vec2 &x) { return x.x() < 1e-12 || x.y() < 1e-12; }),
                   identity_metric(), identity_boundary_data(), MaterialParams{0, 6, 1, 1},
                   [](const Vec2 &) { return Vec3(0, 0, 0.5); });
    FlowParams fp;
    fp.tau = 0.5;
    fp.max_steps = 1;
    fp.tol = std::numeric_limits<double>::max();
    fp.decay_slack = std::numeric_limits<double>::infinity();
    fp.defect_slack = std::numeric_limits<double>::infinity();
    std::vector<FieldCoeffs> traj{identity_field(P.space())};
    std::vector<StepRecord> hist{{0, P.energy(traj[0]), P.defect(traj[0]), 0, 0, 0}};
    for (int k = 1; k <= 8; ++k) {
      traj.push_back(gradient_flow(P, traj.back(), fp).y);
      hist.push_back({k, P.energy(traj.back()), P.defect(traj.back()), 0, 0, 0});
    }
    const FlowAudit a = audit_history(hist);
    out.push_back(make_check("per-step energy decay", std::max(0.0, a.max_energy_increase), 1e-10,
                             std::to_string(a.steps) + " steps"));
    out.push_back(make_check("per-step defect expansion bound", std::max(0.0, defect_bound_excess(P, traj)), 1e-10));
  }
  return out;
}

} // namespace ldgplate
