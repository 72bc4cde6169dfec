/**
 * @file forms.hpp
 * @brief Energies, bilinear forms and constraint operators.
 *
 * All bilinear forms here are block diagonal over the three deformation
 * components with identical blocks, so assembly returns the scalar block
 * only. Linear terms are N_s x 3 coefficient arrays.
 */
#pragma once

#include "ldgplate/lifting.hpp"

#include <sstream>

namespace ldgplate {

/// Target metric sampled at the cell quadrature points, with g^{-1/2}.
struct MetricField {
  std::vector<std::vector<Mat2>> g, G;

  MetricField() = default;

  MetricField(const BrokenSpace &V, const TargetMetric &metric) {
    g.resize(V.n_cells());
    G.resize(V.n_cells());
    for (int c = 0; c < V.n_cells(); ++c) {
      const auto &pts = V.cell(c).points;
      for (const auto &x : pts) {
        const Mat2 m = metric.g(x);
        if (!is_spd(m) || !m.allFinite()) {
          std::ostringstream os;
          os << "metric '" << metric.name << "' is not SPD at (" << x.x() << ", " << x.y() << ") in cell " << c;
          throw Error(ErrorKind::invalid_metric, os.str());
        }
        g[c].push_back(m);
        G[c].push_back(inv_sqrt_spd(m));
      }
    }
  }

  static MetricField identity(const BrokenSpace &V) {
    MetricField f;
    f.g.assign(V.n_cells(), std::vector<Mat2>(V.n_cell_points(), Mat2::Identity()));
    f.G = f.g;
    return f;
  }
};

struct MaterialParams {
  double lambda = 8.0;
  double mu = 6.0;
  double gamma0 = 1.0;
  double gamma1 = 1.0;

  void validate() const {
    if (!(mu > 0) || !(lambda >= 0) || !(gamma0 > 0) || !(gamma1 > 0))
      throw Error(ErrorKind::invalid_parameter, "need mu > 0, lambda >= 0, gamma0 > 0, gamma1 > 0");
  }
};

/// Coefficients of a bending-type form:
/// frob int (GHG):(GHG) + trace int tr(GHG) tr(GHG) + gamma1 h^-1 grad-jumps + gamma0 h^-3 value-jumps.
struct FormCoefficients {
  double frob = 1.0;
  double trace = 0.0;
  double gamma0 = 1.0;
  double gamma1 = 1.0;

  /// Coefficients of a_h.
  static FormCoefficients bending(const MaterialParams &m) {
    m.validate();
    return {m.mu / 6.0, m.mu * m.lambda / (6.0 * (2 * m.mu + m.lambda)), m.gamma0, m.gamma1};
  }
};

/// Linear system pieces of a quadratic form Q with boundary data: for the
/// data-carrying field y with coefficients Y,
/// Q(y, y) = Y^T A Y - 2 L . Y + q0 and Q(y, v) = v^T A Y - L . v for
/// increments v. L_i = -Q(0bar, phi_i).
struct QuadraticSystem {
  SparseMatrix A;
  FieldCoeffs L;
  double q0 = 0.0;

  /// 1/2 Q(y, y).
  double half_quadratic(const FieldCoeffs &Y) const {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += Y.col(c).dot(A * Y.col(c));
    return 0.5 * s - (L.array() * Y.array()).sum() + 0.5 * q0;
  }
};

/// Signed traces of the basis functions of both sides of an edge.
struct EdgeJumpBasis {
  std::vector<int> dofs;
  Eigen::MatrixXd val, gx, gy; // ndofs x nq
};

inline EdgeJumpBasis edge_jump_basis(const BrokenSpace &V, int e) {
  const auto &ed = V.mesh().edge(e);
  const auto &et = V.edge(e);
  const int n = V.n_local(), nq = V.n_edge_points();
  EdgeJumpBasis b;
  b.val.resize(n * ed.n_sides, nq);
  b.gx.resize(n * ed.n_sides, nq);
  b.gy.resize(n * ed.n_sides, nq);
  for (int k = 0; k < ed.n_sides; ++k) {
    const double sgn = k == 0 ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) b.dofs.push_back(V.dof(ed.sides[k].cell, i));
    b.val.middleRows(k * n, n) = sgn * et.side[k].val;
    b.gx.middleRows(k * n, n) = sgn * et.side[k].dx;
    b.gy.middleRows(k * n, n) = sgn * et.side[k].dy;
  }
  return b;
}

namespace detail {

/// Jump penalties gamma1/h int [grad u].[grad v] + gamma0/h^3 int [u][v]
/// on the active edges, plus data terms when the jump set carries data.
inline void assemble_penalties(const BrokenSpace &V, const JumpSet &J, double gamma0, double gamma1,
                               std::vector<Triplet> &trip, FieldCoeffs *L, double *q0) {
  const Mesh &mesh = V.mesh();
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const EdgeFlags fl = J.flags[e];
    if (!fl.active()) continue;
    const double h = mesh.edge(e).h;
    const auto &w = V.edge(e).weights;
    const EdgeJumpBasis b = edge_jump_basis(V, e);
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(b.dofs.size(), b.dofs.size());
    const double c0 = gamma0 / (h * h * h), c1 = gamma1 / h;
    if (fl.value) loc += c0 * b.val * w.asDiagonal() * b.val.transpose();
    if (fl.grad) loc += c1 * (b.gx * w.asDiagonal() * b.gx.transpose() + b.gy * w.asDiagonal() * b.gy.transpose());
    for (std::size_t i = 0; i < b.dofs.size(); ++i)
      for (std::size_t j = 0; j < b.dofs.size(); ++j) trip.emplace_back(b.dofs[i], b.dofs[j], loc(i, j));

    if (L && mesh.edge(e).is_boundary() && !J.homogeneous) {
      const EdgeData d = sample_edge_data(V, J, e);
      // jumps of 0bar are -phi and -Phi
      Eigen::MatrixXd contrib = Eigen::MatrixXd::Zero(b.dofs.size(), 3);
      if (fl.value) {
        contrib += c0 * b.val * w.asDiagonal() * d.phi;
        for (int q = 0; q < w.size(); ++q) *q0 += c0 * w[q] * d.phi.row(q).squaredNorm();
      }
      if (fl.grad) {
        Eigen::MatrixXd Px(w.size(), 3), Py(w.size(), 3);
        for (int q = 0; q < w.size(); ++q) {
          Px.row(q) = d.Phi[q].col(0).transpose();
          Py.row(q) = d.Phi[q].col(1).transpose();
          *q0 += c1 * w[q] * d.Phi[q].squaredNorm();
        }
        contrib += c1 * (b.gx * w.asDiagonal() * Px + b.gy * w.asDiagonal() * Py);
      }
      for (std::size_t i = 0; i < b.dofs.size(); ++i) L->row(b.dofs[i]) += contrib.row(i);
    }
  }
}

/// Linear map from the flattened Hessian (4 entries) to the weighted
/// transformed entries sqrt(w frob) GHG (4) and sqrt(w trace) tr(GHG) (1).
inline Eigen::Matrix<double, 4, 5> hessian_transform(const Mat2 &G, double w, const FormCoefficients &fc) {
  Eigen::Matrix<double, 4, 5> T;
  const double sf = std::sqrt(w * fc.frob), st = std::sqrt(w * fc.trace);
  const Mat2 G2 = G * G;
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) T(2 * c + d, 2 * a + b) = sf * G(a, c) * G(d, b);
      T(2 * c + d, 4) = st * G2(d, c);
    }
  return T;
}

} // namespace detail

/// Bending-type form assembled from the Hessian cache: a_h (with
/// FormCoefficients::bending) or c_h (frob = 1, trace = 0, G = I).
inline QuadraticSystem assemble_bending(const HessianCache &cache, const JumpSet &J, const MetricField &metric,
                                        const FormCoefficients &fc) {
  const BrokenSpace &V = cache.space();
  const int N = V.n_scalar(), nq = V.n_cell_points();
  QuadraticSystem sys;
  sys.L = FieldCoeffs::Zero(N, 3);
  std::vector<Triplet> trip;
  for (int K = 0; K < V.n_cells(); ++K) {
    const auto &blk = cache.block(K);
    const auto &w = V.cell(K).weights;
    const int nc = static_cast<int>(blk.dofs.size());
    Eigen::MatrixXd Z(nc, 5 * nq);
    Eigen::Matrix<double, 3, Eigen::Dynamic> ZD(3, 5 * nq);
    for (int p = 0; p < nq; ++p) {
      const auto T = detail::hessian_transform(metric.G[K][p], w[p], fc);
      Z.middleCols(5 * p, 5) = blk.H.middleCols(4 * p, 4) * T;
      ZD.middleCols(5 * p, 5) = blk.HD.middleCols(4 * p, 4) * T;
    }
    const Eigen::MatrixXd AK = Z * Z.transpose();
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) trip.emplace_back(blk.dofs[i], blk.dofs[j], AK(i, j));
    if (cache.has_data()) {
      const Eigen::MatrixXd LK = -Z * ZD.transpose();
      for (int i = 0; i < nc; ++i) sys.L.row(blk.dofs[i]) += LK.row(i);
      sys.q0 += ZD.squaredNorm();
    }
  }
  detail::assemble_penalties(V, J, fc.gamma0, fc.gamma1, trip, &sys.L, &sys.q0);
  sys.A.resize(N, N);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

/// Discrete H^2 inner product on increments (homogeneous jumps):
/// sigma (u,v) + (D_h^2 u, D_h^2 v) + (h^-1 [grad u],[grad v]) + (h^-3 [u],[v]).
inline SparseMatrix assemble_h2_product(const BrokenSpace &V, const JumpSet &J, double sigma) {
  const int n = V.n_local();
  std::vector<Triplet> trip;
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto &ct = V.cell(c);
    const auto &b = ct.basis;
    const auto W = ct.weights.asDiagonal();
    Eigen::MatrixXd m = b.dxx * W * b.dxx.transpose() + 2.0 * b.dxy * W * b.dxy.transpose() + b.dyy * W * b.dyy.transpose();
    if (sigma != 0.0) m += sigma * b.val * W * b.val.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) trip.emplace_back(V.dof(c, i), V.dof(c, j), m(i, j));
  }
  detail::assemble_penalties(V, J.homogeneous_copy(), 1.0, 1.0, trip, nullptr, nullptr);
  SparseMatrix M(V.n_scalar(), V.n_scalar());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// Terms of E_h evaluated directly (not through the assembled matrix).
struct EnergyParts {
  double bending = 0, value_penalty = 0, grad_penalty = 0, forcing = 0;
  double total() const { return bending + value_penalty + grad_penalty - forcing; }
};

inline EnergyParts energy_parts(const HessianCache &cache, const JumpSet &J, const MetricField &metric,
                                const MaterialParams &mat, const FieldCoeffs &y, const FieldCoeffs *load = nullptr) {
  const BrokenSpace &V = cache.space();
  mat.validate();
  const double cf = mat.mu / 12.0, ct = mat.mu * mat.lambda / (12.0 * (2 * mat.mu + mat.lambda));
  EnergyParts e;
  for (int K = 0; K < V.n_cells(); ++K) {
    const auto H = cache.hessian(y, K);
    const auto &w = V.cell(K).weights;
    for (std::size_t p = 0; p < H.size(); ++p) {
      const Mat2 &G = metric.G[K][p];
      for (int c = 0; c < 3; ++c) {
        const Mat2 X = G * H[p].comp[c] * G;
        e.bending += w[p] * (cf * frob(X, X) + ct * X.trace() * X.trace());
      }
    }
  }
  for (int ed = 0; ed < V.mesh().n_edges(); ++ed) {
    const EdgeFlags fl = J.flags[ed];
    if (!fl.active()) continue;
    const double h = V.mesh().edge(ed).h;
    const auto &w = V.edge(ed).weights;
    const EdgeTrace tr = edge_traces(V, y, J, ed);
    for (int q = 0; q < w.size(); ++q) {
      if (fl.value) e.value_penalty += 0.5 * mat.gamma0 / (h * h * h) * w[q] * tr.value_jump.row(q).squaredNorm();
      if (fl.grad) e.grad_penalty += 0.5 * mat.gamma1 / h * w[q] * tr.grad_jump[q].squaredNorm();
    }
  }
  if (load) e.forcing = (load->array() * y.array()).sum();
  return e;
}

/// E_h[y] evaluated directly; load = load_vector(V, f) or null for f = 0.
inline double energy(const HessianCache &cache, const JumpSet &J, const MetricField &metric,
                     const MaterialParams &mat, const FieldCoeffs &y, const FieldCoeffs *load = nullptr) {
  return energy_parts(cache, J, metric, mat, y, load).total();
}

/// Per-cell Frobenius norm of int_K (grad y^T grad y - g).
inline Eigen::VectorXd metric_defect_per_cell(const BrokenSpace &V, const FieldCoeffs &y, const MetricField &metric) {
  Eigen::VectorXd d(V.n_cells());
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto grads = cell_gradients(V, y, c);
    const auto &w = V.cell(c).weights;
    Mat2 s = Mat2::Zero();
    for (std::size_t p = 0; p < grads.size(); ++p) s += w[p] * (grads[p].transpose() * grads[p] - metric.g[c][p]);
    d[c] = s.norm();
  }
  return d;
}

inline double metric_defect(const BrokenSpace &V, const FieldCoeffs &y, const MetricField &metric) {
  return metric_defect_per_cell(V, y, metric).sum();
}

/// Linearized metric constraint b_h^n with piecewise-constant symmetric
/// multipliers. Row (K, m), m in {11, 22, 12}, holds int_K S_m where
/// S = grad v^T grad y^n + (grad y^n)^T grad v.
class ConstraintMatrix {
public:
  ConstraintMatrix(const BrokenSpace &V, const FieldCoeffs &yn) : n_local_(V.n_local()), n_scalar_(V.n_scalar()) {
    const int n = n_local_;
    blocks_.resize(V.n_cells());
    for (int K = 0; K < V.n_cells(); ++K) {
      const auto &ct = V.cell(K);
      const auto grads = cell_gradients(V, yn, K);
      Eigen::Matrix<double, 3, Eigen::Dynamic> B = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 3 * n);
      for (std::size_t p = 0; p < grads.size(); ++p) {
        const double w = ct.weights[p];
        for (int c = 0; c < 3; ++c) {
          const double y1 = grads[p](c, 0), y2 = grads[p](c, 1);
          for (int i = 0; i < n; ++i) {
            const double p1 = ct.basis.dx(i, p), p2 = ct.basis.dy(i, p);
            B(0, c * n + i) += w * 2 * p1 * y1;
            B(1, c * n + i) += w * 2 * p2 * y2;
            B(2, c * n + i) += w * (p1 * y2 + p2 * y1);
          }
        }
      }
      blocks_[K] = B;
    }
  }

  int rows() const { return 3 * static_cast<int>(blocks_.size()); }

  Eigen::VectorXd apply(const FieldCoeffs &X) const {
    const int n = n_local_;
    Eigen::VectorXd out(rows());
    for (std::size_t K = 0; K < blocks_.size(); ++K) {
      Eigen::VectorXd x(3 * n);
      for (int c = 0; c < 3; ++c) x.segment(c * n, n) = X.col(c).segment(K * n, n);
      out.segment<3>(3 * K) = blocks_[K] * x;
    }
    return out;
  }

  FieldCoeffs apply_transpose(const Eigen::VectorXd &lam) const {
    const int n = n_local_;
    FieldCoeffs out(n_scalar_, 3);
    for (std::size_t K = 0; K < blocks_.size(); ++K) {
      const Eigen::VectorXd x = blocks_[K].transpose() * lam.segment<3>(3 * K);
      for (int c = 0; c < 3; ++c) out.col(c).segment(K * n, n) = x.segment(c * n, n);
    }
    return out;
  }

  /// Explicit matrix; column index c * N_s + dof.
  SparseMatrix to_sparse() const {
    const int n = n_local_;
    std::vector<Triplet> trip;
    for (std::size_t K = 0; K < blocks_.size(); ++K)
      for (int m = 0; m < 3; ++m)
        for (int c = 0; c < 3; ++c)
          for (int i = 0; i < n; ++i)
            trip.emplace_back(3 * K + m, c * n_scalar_ + K * n + i, blocks_[K](m, c * n + i));
    SparseMatrix B(rows(), 3 * n_scalar_);
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
  }

  const Eigen::Matrix<double, 3, Eigen::Dynamic> &block(int K) const { return blocks_[K]; }

private:
  int n_local_, n_scalar_;
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> blocks_;
};

/// Stretching energy 1/2 int |grad y^T grad y - g|^2.
inline double stretching_energy(const BrokenSpace &V, const FieldCoeffs &y, const MetricField &metric) {
  double s = 0;
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto grads = cell_gradients(V, y, c);
    const auto &w = V.cell(c).weights;
    for (std::size_t p = 0; p < grads.size(); ++p)
      s += 0.5 * w[p] * (grads[p].transpose() * grads[p] - metric.g[c][p]).squaredNorm();
  }
  return s;
}

/// Scalar block of s_h(y; w, v) = 2 sum_c int grad v_c^T P grad w_c, P = grad y^T grad y - g.
/// The right-hand side -s_h(y; y, .) is -S Y.
inline SparseMatrix assemble_stretch(const BrokenSpace &V, const FieldCoeffs &y, const MetricField &metric) {
  const int n = V.n_local();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(V.n_cells()) * n * n);
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto &ct = V.cell(c);
    const auto grads = cell_gradients(V, y, c);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t p = 0; p < grads.size(); ++p) {
      const Mat2 P = grads[p].transpose() * grads[p] - metric.g[c][p];
      const double w = 2 * ct.weights[p];
      const Eigen::VectorXd gx = ct.basis.dx.col(p), gy = ct.basis.dy.col(p);
      m += w * (P(0, 0) * gx * gx.transpose() + P(1, 1) * gy * gy.transpose() +
                P(0, 1) * (gx * gy.transpose() + gy * gx.transpose()));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) trip.emplace_back(V.dof(c, i), V.dof(c, j), m(i, j));
  }
  SparseMatrix S(V.n_scalar(), V.n_scalar());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

/// Bi-Laplacian c_h with boundary data and forcing fhat: C Yhat = rhs.
struct BilaplacianSystem {
  SparseMatrix C;
  FieldCoeffs rhs;
};

inline BilaplacianSystem assemble_bilaplacian(const HessianCache &cache, const JumpSet &J, double gamma0_hat,
                                              double gamma1_hat, const VectorFunction &fhat) {
  const BrokenSpace &V = cache.space();
  const QuadraticSystem q =
      assemble_bending(cache, J, MetricField::identity(V), FormCoefficients{1.0, 0.0, gamma0_hat, gamma1_hat});
  BilaplacianSystem s;
  s.C = q.A;
  s.rhs = q.L;
  if (fhat) s.rhs += load_vector(V, fhat);
  return s;
}

} // namespace ldgplate
