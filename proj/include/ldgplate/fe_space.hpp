/**
 * @file fe_space.hpp
 * @brief Broken Q_k spaces, tabulated basis derivatives and edge traces.
 *
 * Scalar DoF j of cell c has global index c * n_local + j. A three-component
 * field stores its coefficients as an N_s x 3 matrix (column = component).
 *
 * Jumps follow [v] = v^- - v^+ with the minus side being sides[0] of the
 * edge. On active boundary edges carrying data the jump is v - phi and
 * grad v - Phi.
 */
#pragma once

#include "ldgplate/mesh.hpp"
#include "ldgplate/metrics.hpp"
#include "ldgplate/quadrature.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace ldgplate {

/// Basis derivatives at a set of points, one row per basis function.
struct BasisTable {
  Eigen::MatrixXd val, dx, dy, dxx, dxy, dyy;
};

struct CellTable {
  std::vector<Vec2> points;  // physical
  Eigen::VectorXd weights;   // physical (reference weight * det J)
  BasisTable basis;          // n_local x nq
};

struct EdgeSideTable {
  Eigen::MatrixXd val, dx, dy; // n_local x nq_edge
};

struct EdgeTable {
  std::vector<Vec2> points;      // physical, ordered by the edge parameter
  Eigen::VectorXd weights;       // physical (reference weight * |e|)
  std::array<EdgeSideTable, 2> side;
};

class BrokenSpace {
public:
  // the space keeps a pointer to the mesh
  BrokenSpace(Mesh &&, int = 2, int = 5, int = 5) = delete;
  BrokenSpace(const Mesh &mesh, int degree = 2, int q_cell = 5, int q_edge = 5)
      : mesh_(&mesh), degree_(degree), lagrange_(gauss_lobatto_nodes(degree)),
        cell_rule_(gauss_legendre(q_cell)), edge_rule_(gauss_legendre(q_edge)) {
    if (degree < 1) throw Error(ErrorKind::invalid_parameter, "polynomial degree must be >= 1");
    n_local_ = (degree + 1) * (degree + 1);
    for (double t : cell_rule_.points)
      for (double s : cell_rule_.points) ref_points_.emplace_back(s, t);
    ref_weights_.resize(ref_points_.size());
    for (std::size_t iy = 0, p = 0; iy < cell_rule_.points.size(); ++iy)
      for (std::size_t ix = 0; ix < cell_rule_.points.size(); ++ix, ++p)
        ref_weights_[p] = cell_rule_.weights[ix] * cell_rule_.weights[iy];

    cells_.resize(mesh.n_cells());
    mass_inv_.resize(mesh.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) {
      auto &ct = cells_[c];
      ct.basis = eval_basis(c, ref_points_);
      ct.weights.resize(ref_points_.size());
      for (std::size_t p = 0; p < ref_points_.size(); ++p) {
        ct.points.push_back(mesh.map(c, ref_points_[p]));
        ct.weights[p] = ref_weights_[p] * mesh.jacobian(c, ref_points_[p]).determinant();
      }
      const Eigen::MatrixXd m = ct.basis.val * ct.weights.asDiagonal() * ct.basis.val.transpose();
      mass_inv_[c] = m.llt().solve(Eigen::MatrixXd::Identity(n_local_, n_local_));
    }

    edges_.resize(mesh.n_edges());
    for (int e = 0; e < mesh.n_edges(); ++e) {
      const auto &ed = mesh.edge(e);
      auto &et = edges_[e];
      const int nq = static_cast<int>(edge_rule_.points.size());
      et.weights.resize(nq);
      for (int q = 0; q < nq; ++q) {
        et.points.push_back(mesh.edge_point(e, edge_rule_.points[q]));
        et.weights[q] = edge_rule_.weights[q] * ed.h;
      }
      for (int k = 0; k < ed.n_sides; ++k) {
        std::vector<Vec2> ref;
        for (int q = 0; q < nq; ++q) ref.push_back(mesh.edge_reference_point(e, k, edge_rule_.points[q]));
        BasisTable b = eval_basis(ed.sides[k].cell, ref, false);
        et.side[k] = {std::move(b.val), std::move(b.dx), std::move(b.dy)};
      }
    }
  }

  const Mesh &mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int n_local() const { return n_local_; }
  int n_cells() const { return mesh_->n_cells(); }
  int n_scalar() const { return n_cells() * n_local_; }
  int dof(int cell, int i) const { return cell * n_local_ + i; }
  int n_cell_points() const { return static_cast<int>(ref_points_.size()); }
  int n_edge_points() const { return static_cast<int>(edge_rule_.points.size()); }

  const CellTable &cell(int c) const { return cells_[c]; }
  const EdgeTable &edge(int e) const { return edges_[e]; }
  const Eigen::MatrixXd &mass_inverse(int c) const { return mass_inv_[c]; }
  const std::vector<Vec2> &reference_points() const { return ref_points_; }
  const Rule1D &edge_rule() const { return edge_rule_; }

  /// Reference coordinates of the local nodes (Gauss-Lobatto tensor grid).
  std::vector<Vec2> reference_nodes() const {
    std::vector<Vec2> out;
    const auto &x = lagrange_.nodes();
    for (int iy = 0; iy <= degree_; ++iy)
      for (int ix = 0; ix <= degree_; ++ix) out.emplace_back(x[ix], x[iy]);
    return out;
  }

  /// Physical-frame values, gradients and (optionally) Hessians of all local
  /// basis functions of a cell at reference points.
  BasisTable eval_basis(int c, const std::vector<Vec2> &ref, bool hessians = true) const {
    const int n = static_cast<int>(ref.size());
    const int m = degree_ + 1;
    BasisTable t;
    t.val.resize(n_local_, n);
    t.dx.resize(n_local_, n);
    t.dy.resize(n_local_, n);
    if (hessians) {
      t.dxx.resize(n_local_, n);
      t.dxy.resize(n_local_, n);
      t.dyy.resize(n_local_, n);
    }
    const Vec2 tw = mesh_->twist(c);
    std::vector<double> vx(m), dx(m), ddx(m), vy(m), dy(m), ddy(m);
    for (int p = 0; p < n; ++p) {
      const Vec2 &xi = ref[p];
      if (xi.x() < -1e-12 || xi.x() > 1 + 1e-12 || xi.y() < -1e-12 || xi.y() > 1 + 1e-12)
        throw Error(ErrorKind::invalid_parameter, "eval_basis: reference point outside [0,1]^2");
      const Mat2 J = mesh_->jacobian(c, xi);
      const double det = J.determinant();
      if (!(det > 0)) throw Error(ErrorKind::degenerate_cell, "cell " + std::to_string(c) + " has singular Jacobian");
      const Mat2 Jinv = J.inverse();
      for (int i = 0; i < m; ++i) {
        lagrange_.eval(i, xi.x(), vx[i], dx[i], ddx[i]);
        lagrange_.eval(i, xi.y(), vy[i], dy[i], ddy[i]);
      }
      for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix) {
          const int i = ix + m * iy;
          const Vec2 gref(dx[ix] * vy[iy], vx[ix] * dy[iy]);
          const Vec2 g = Jinv.transpose() * gref;
          t.val(i, p) = vx[ix] * vy[iy];
          t.dx(i, p) = g.x();
          t.dy(i, p) = g.y();
          if (hessians) {
            Mat2 href;
            href << ddx[ix] * vy[iy], dx[ix] * dy[iy], dx[ix] * dy[iy], vx[ix] * ddy[iy];
            // D^2_xi phi = J^T D^2_x phi J + sum_k (grad_x phi)_k D^2_xi F_k,
            // and D^2_xi F_k has only the off-diagonal entry tw_k
            const double corr = g.dot(tw);
            href(0, 1) -= corr;
            href(1, 0) -= corr;
            const Mat2 h = Jinv.transpose() * href * Jinv;
            t.dxx(i, p) = h(0, 0);
            t.dxy(i, p) = 0.5 * (h(0, 1) + h(1, 0));
            t.dyy(i, p) = h(1, 1);
          }
        }
    }
    return t;
  }

  /// Coefficient block of one cell (n_local x 3).
  auto cell_block(const FieldCoeffs &y, int c) const { return y.middleRows(c * n_local_, n_local_); }
  auto cell_block(FieldCoeffs &y, int c) const { return y.middleRows(c * n_local_, n_local_); }

private:
  const Mesh *mesh_;
  int degree_;
  int n_local_ = 0;
  Lagrange1D lagrange_;
  Rule1D cell_rule_, edge_rule_;
  std::vector<Vec2> ref_points_;
  std::vector<double> ref_weights_;
  std::vector<CellTable> cells_;
  std::vector<EdgeTable> edges_;
  std::vector<Eigen::MatrixXd> mass_inv_;
};

/// Which jumps an edge carries in the discrete Hessian and the penalties.
struct EdgeFlags {
  bool value = false;
  bool grad = false;
  bool active() const { return value || grad; }
};

/// Per-edge jump activity plus the boundary data that enters boundary jumps.
/// With homogeneous = true boundary jumps are one-sided traces (increments).
struct JumpSet {
  std::vector<EdgeFlags> flags;
  std::optional<BoundaryData> data;
  bool homogeneous = false;

  /// Interior edges and Dirichlet edges, both jumps.
  static JumpSet standard(const Mesh &mesh, std::optional<BoundaryData> data) {
    JumpSet j;
    j.flags.resize(mesh.n_edges());
    for (int e = 0; e < mesh.n_edges(); ++e) {
      const auto cls = mesh.edge(e).cls;
      if (cls != EdgeClass::free_boundary) j.flags[e] = {true, true};
    }
    j.data = std::move(data);
    j.homogeneous = !j.data.has_value();
    return j;
  }

  /// Value-only anchoring on the whole boundary (free-boundary bi-Laplacian).
  static JumpSet value_anchor(const Mesh &mesh, VectorFunction phi) {
    JumpSet j;
    j.flags.resize(mesh.n_edges());
    for (int e = 0; e < mesh.n_edges(); ++e)
      j.flags[e] = mesh.edge(e).is_boundary() ? EdgeFlags{true, false} : EdgeFlags{true, true};
    j.data = BoundaryData{std::move(phi), {}};
    return j;
  }

  JumpSet homogeneous_copy() const {
    JumpSet j = *this;
    j.data.reset();
    j.homogeneous = true;
    return j;
  }

  bool has_boundary_edges(const Mesh &mesh) const {
    for (int e = 0; e < mesh.n_edges(); ++e)
      if (flags[e].active() && mesh.edge(e).is_boundary()) return true;
    return false;
  }
};

/// Boundary data sampled at an edge's quadrature points.
struct EdgeData {
  Eigen::Matrix<double, Eigen::Dynamic, 3> phi; // nq x 3
  std::vector<Mat32> Phi;                       // empty when value-only
};

inline EdgeData sample_edge_data(const BrokenSpace &V, const JumpSet &J, int e) {
  const auto &et = V.edge(e);
  const int nq = V.n_edge_points();
  EdgeData d;
  d.phi.setZero(nq, 3);
  if (J.homogeneous) {
    if (J.flags[e].grad) d.Phi.assign(nq, Mat32::Zero());
    return d;
  }
  if (!J.data || (J.flags[e].value && !J.data->phi))
    throw Error(ErrorKind::missing_data, "boundary edge " + std::to_string(e) + " needs value data");
  for (int q = 0; q < nq; ++q) d.phi.row(q) = J.data->phi(et.points[q]).transpose();
  if (J.flags[e].grad) {
    if (!J.data->Phi) throw Error(ErrorKind::missing_data, "boundary edge " + std::to_string(e) + " needs gradient data");
    for (int q = 0; q < nq; ++q) d.Phi.push_back(J.data->Phi(et.points[q]));
  }
  return d;
}

/// Jumps of a field on one edge at its quadrature points.
struct EdgeTrace {
  Eigen::Matrix<double, Eigen::Dynamic, 3> value_jump; // nq x 3
  std::vector<Mat32> grad_jump;                        // row c = jump of grad y_c
  Eigen::Matrix<double, Eigen::Dynamic, 3> value_avg;
};

inline EdgeTrace edge_traces(const BrokenSpace &V, const FieldCoeffs &y, const JumpSet &J, int e) {
  const auto &ed = V.mesh().edge(e);
  const auto &et = V.edge(e);
  const int nq = V.n_edge_points();
  EdgeTrace tr;
  tr.value_jump.setZero(nq, 3);
  tr.value_avg.setZero(nq, 3);
  tr.grad_jump.assign(nq, Mat32::Zero());
  for (int k = 0; k < ed.n_sides; ++k) {
    const double sgn = k == 0 ? 1.0 : -1.0;
    const auto blk = V.cell_block(y, ed.sides[k].cell);
    const auto &s = et.side[k];
    const Eigen::MatrixXd v = s.val.transpose() * blk; // nq x 3
    const Eigen::MatrixXd gx = s.dx.transpose() * blk;
    const Eigen::MatrixXd gy = s.dy.transpose() * blk;
    tr.value_jump += sgn * v;
    tr.value_avg += (ed.n_sides == 2 ? 0.5 : 1.0) * v;
    for (int q = 0; q < nq; ++q) {
      tr.grad_jump[q].col(0) += sgn * gx.row(q).transpose();
      tr.grad_jump[q].col(1) += sgn * gy.row(q).transpose();
    }
  }
  if (ed.is_boundary() && J.flags[e].active() && !J.homogeneous) {
    const EdgeData d = sample_edge_data(V, J, e);
    if (J.flags[e].value) tr.value_jump -= d.phi;
    if (J.flags[e].grad)
      for (int q = 0; q < nq; ++q) tr.grad_jump[q] -= d.Phi[q];
  }
  return tr;
}

/// Nodal interpolation at the mapped Gauss-Lobatto nodes of each cell.
inline FieldCoeffs interpolate(const BrokenSpace &V, const VectorFunction &f) {
  FieldCoeffs y(V.n_scalar(), 3);
  const auto nodes = V.reference_nodes();
  for (int c = 0; c < V.n_cells(); ++c)
    for (int i = 0; i < V.n_local(); ++i) y.row(V.dof(c, i)) = f(V.mesh().map(c, nodes[i])).transpose();
  return y;
}

inline FieldCoeffs identity_field(const BrokenSpace &V) {
  return interpolate(V, [](const Vec2 &x) { return Vec3(x.x(), x.y(), 0.0); });
}

/// Field gradients at the cell quadrature points: grad[p] is 3x2.
inline std::vector<Mat32> cell_gradients(const BrokenSpace &V, const FieldCoeffs &y, int c) {
  const auto &ct = V.cell(c);
  const auto blk = V.cell_block(y, c);
  const Eigen::MatrixXd gx = ct.basis.dx.transpose() * blk, gy = ct.basis.dy.transpose() * blk;
  std::vector<Mat32> out(ct.points.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p].col(0) = gx.row(p).transpose();
    out[p].col(1) = gy.row(p).transpose();
  }
  return out;
}

/// Broken Hessians of a field at the cell quadrature points.
inline std::vector<Hessian3> cell_hessians(const BrokenSpace &V, const FieldCoeffs &y, int c) {
  const auto &ct = V.cell(c);
  const auto blk = V.cell_block(y, c);
  const Eigen::MatrixXd hxx = ct.basis.dxx.transpose() * blk, hxy = ct.basis.dxy.transpose() * blk,
                        hyy = ct.basis.dyy.transpose() * blk;
  std::vector<Hessian3> out(ct.points.size());
  for (std::size_t p = 0; p < out.size(); ++p)
    for (int k = 0; k < 3; ++k) out[p].comp[k] << hxx(p, k), hxy(p, k), hxy(p, k), hyy(p, k);
  return out;
}

/// Evaluate a field at a reference point of a cell.
inline Vec3 evaluate(const BrokenSpace &V, const FieldCoeffs &y, int c, const Vec2 &xi) {
  const BasisTable b = V.eval_basis(c, {xi}, false);
  return (b.val.transpose() * V.cell_block(y, c)).transpose();
}

/// Integral of f . v over the domain for every scalar basis function.
inline FieldCoeffs load_vector(const BrokenSpace &V, const VectorFunction &f) {
  FieldCoeffs F = FieldCoeffs::Zero(V.n_scalar(), 3);
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto &ct = V.cell(c);
    Eigen::Matrix<double, Eigen::Dynamic, 3> fw(ct.points.size(), 3);
    for (std::size_t p = 0; p < ct.points.size(); ++p) fw.row(p) = ct.weights[p] * f(ct.points[p]).transpose();
    V.cell_block(F, c) = ct.basis.val * fw;
  }
  return F;
}

/// L2 inner-product mass matrix of the scalar space.
inline SparseMatrix mass_matrix(const BrokenSpace &V) {
  std::vector<Triplet> trip;
  const int n = V.n_local();
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto &ct = V.cell(c);
    const Eigen::MatrixXd m = ct.basis.val * ct.weights.asDiagonal() * ct.basis.val.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) trip.emplace_back(V.dof(c, i), V.dof(c, j), m(i, j));
  }
  SparseMatrix M(V.n_scalar(), V.n_scalar());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

} // namespace ldgplate
