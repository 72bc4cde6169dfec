/**
 * @file lifting.hpp
 * @brief Lifting operators r_e, b_e and the reconstructed Hessian
 * H_h[v] = D_h^2 v - R_h([grad v]) + B_h([v]).
 *
 * The lifting space is broken, so the patch mass matrix of an edge splits
 * into one small block per adjacent cell. Restricted to a cell K of the
 * patch, the test-function average on the edge is w * tau|_K with w = 1/2 on
 * interior edges and w = 1 on boundary edges. Hence on K
 *
 *   r_e(j)_ab = w n_b M_K^{-1} int_e psi j_a,
 *   b_e(j)_ab = w n_a M_K^{-1} int_e d_b psi j.
 *
 * Matrix entries are flattened as (a,b) -> 2a+b.
 */
#pragma once

#include "ldgplate/fe_space.hpp"

#include <unordered_map>

namespace ldgplate {

/// Coefficients of a lifting on each cell of the patch (n_local x 4 per cell).
struct EdgeLifting {
  std::vector<int> cells;
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 4>> coeffs;

  /// Values at the cell quadrature points of patch cell i (nq x 4).
  Eigen::Matrix<double, Eigen::Dynamic, 4> at_quadrature(const BrokenSpace &L, int i) const {
    return L.cell(cells[i]).basis.val.transpose() * coeffs[i];
  }
};

namespace detail {

inline double side_weight(const Edge &e) { return e.n_sides == 2 ? 0.5 : 1.0; }

inline int side_of(const Edge &e, int cell) {
  for (int k = 0; k < e.n_sides; ++k)
    if (e.sides[k].cell == cell) return k;
  throw Error(ErrorKind::internal, "cell is not adjacent to edge");
}

} // namespace detail

/// r_e applied to R^2-valued jump data given at the edge quadrature points (nq x 2).
inline EdgeLifting lift_r(const BrokenSpace &L, int e, const Eigen::Matrix<double, Eigen::Dynamic, 2> &jump) {
  const auto &ed = L.mesh().edge(e);
  const auto &et = L.edge(e);
  const double w = detail::side_weight(ed);
  EdgeLifting out;
  for (int k = 0; k < ed.n_sides; ++k) {
    const int c = ed.sides[k].cell;
    const Eigen::MatrixXd mj = L.mass_inverse(c) * et.side[k].val * et.weights.asDiagonal() * jump; // n x 2
    Eigen::Matrix<double, Eigen::Dynamic, 4> coef(L.n_local(), 4);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) coef.col(2 * a + b) = w * ed.normal[b] * mj.col(a);
    out.cells.push_back(c);
    out.coeffs.push_back(coef);
  }
  return out;
}

/// b_e applied to scalar jump data given at the edge quadrature points.
inline EdgeLifting lift_b(const BrokenSpace &L, int e, const Eigen::VectorXd &jump) {
  const auto &ed = L.mesh().edge(e);
  const auto &et = L.edge(e);
  const double w = detail::side_weight(ed);
  EdgeLifting out;
  for (int k = 0; k < ed.n_sides; ++k) {
    const int c = ed.sides[k].cell;
    const Eigen::VectorXd wj = et.weights.asDiagonal() * jump;
    const Eigen::VectorXd g[2] = {L.mass_inverse(c) * (et.side[k].dx * wj), L.mass_inverse(c) * (et.side[k].dy * wj)};
    Eigen::Matrix<double, Eigen::Dynamic, 4> coef(L.n_local(), 4);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) coef.col(2 * a + b) = w * ed.normal[a] * g[b];
    out.cells.push_back(c);
    out.coeffs.push_back(coef);
  }
  return out;
}

/// Global liftings R_h([grad y]) and B_h([y]) of a field, per cell and
/// quadrature point, computed edge by edge.
struct GlobalLiftings {
  std::vector<std::vector<Hessian3>> R, B;
};

inline GlobalLiftings global_liftings(const BrokenSpace &V, const BrokenSpace &L, const JumpSet &J,
                                      const FieldCoeffs &y) {
  const int nq = V.n_cell_points();
  GlobalLiftings g;
  Hessian3 zero;
  for (auto &m : zero.comp) m.setZero();
  g.R.assign(V.n_cells(), std::vector<Hessian3>(nq, zero));
  g.B = g.R;
  for (int e = 0; e < V.mesh().n_edges(); ++e) {
    if (!J.flags[e].active()) continue;
    const EdgeTrace tr = edge_traces(V, y, J, e);
    const int nqe = V.n_edge_points();
    for (int c = 0; c < 3; ++c) {
      if (J.flags[e].grad) {
        Eigen::Matrix<double, Eigen::Dynamic, 2> j(nqe, 2);
        for (int q = 0; q < nqe; ++q) j.row(q) = tr.grad_jump[q].row(c);
        const EdgeLifting r = lift_r(L, e, j);
        for (std::size_t i = 0; i < r.cells.size(); ++i) {
          const auto vals = r.at_quadrature(L, static_cast<int>(i));
          for (int p = 0; p < nq; ++p)
            for (int ab = 0; ab < 4; ++ab) g.R[r.cells[i]][p].comp[c](ab / 2, ab % 2) += vals(p, ab);
        }
      }
      if (J.flags[e].value) {
        const EdgeLifting b = lift_b(L, e, tr.value_jump.col(c));
        for (std::size_t i = 0; i < b.cells.size(); ++i) {
          const auto vals = b.at_quadrature(L, static_cast<int>(i));
          for (int p = 0; p < nq; ++p)
            for (int ab = 0; ab < 4; ++ab) g.B[b.cells[i]][p].comp[c](ab / 2, ab % 2) += vals(p, ab);
        }
      }
    }
  }
  return g;
}

/// Discrete Hessian of a field assembled term by term from its jumps.
inline std::vector<std::vector<Hessian3>> discrete_hessian_direct(const BrokenSpace &V, const BrokenSpace &L,
                                                                  const JumpSet &J, const FieldCoeffs &y) {
  const GlobalLiftings g = global_liftings(V, L, J, y);
  std::vector<std::vector<Hessian3>> out(V.n_cells());
  for (int c = 0; c < V.n_cells(); ++c) {
    out[c] = cell_hessians(V, y, c);
    for (std::size_t p = 0; p < out[c].size(); ++p)
      for (int k = 0; k < 3; ++k) out[c][p].comp[k] += g.B[c][p].comp[k] - g.R[c][p].comp[k];
  }
  return out;
}

/// Discrete Hessians of all basis functions, tabulated per cell.
///
/// For cell K, `dofs` lists the scalar DoFs whose H_h is nonzero on K (its
/// own DoFs first, then those of edge neighbours); row i of `H` holds that
/// function's Hessian at every quadrature point, column 4p + 2a + b. The
/// data field H_D (3 x 4nq) carries R_h(Phi) - B_h(phi) from boundary data.
class HessianCache {
public:
  struct CellBlock {
    std::vector<int> dofs;
    Eigen::MatrixXd H;
    Eigen::Matrix<double, 3, Eigen::Dynamic> HD;
  };

  HessianCache(const BrokenSpace &V, const BrokenSpace &L, const JumpSet &J) : V_(&V) {
    const Mesh &mesh = V.mesh();
    const int nq = V.n_cell_points();
    const int n = V.n_local();
    if (L.n_cell_points() != nq || L.n_edge_points() != V.n_edge_points() || &L.mesh() != &mesh)
      throw Error(ErrorKind::invalid_parameter, "lifting space must share mesh and quadrature");
    blocks_.resize(mesh.n_cells());
    has_data_ = false;
    for (int K = 0; K < mesh.n_cells(); ++K) {
      CellBlock &blk = blocks_[K];
      std::unordered_map<int, int> offset; // cell -> row offset
      offset[K] = 0;
      for (int i = 0; i < n; ++i) blk.dofs.push_back(V.dof(K, i));
      for (int e : mesh.cell_edges(K)) {
        if (!J.flags[e].active()) continue;
        for (int k = 0; k < mesh.edge(e).n_sides; ++k) {
          const int c = mesh.edge(e).sides[k].cell;
          if (offset.count(c)) continue;
          offset[c] = static_cast<int>(blk.dofs.size());
          for (int i = 0; i < n; ++i) blk.dofs.push_back(V.dof(c, i));
        }
      }
      blk.H.setZero(blk.dofs.size(), 4 * nq);
      blk.HD.setZero(3, 4 * nq);
      const auto &b = V.cell(K).basis;
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < nq; ++p) {
          blk.H(i, 4 * p + 0) = b.dxx(i, p);
          blk.H(i, 4 * p + 1) = b.dxy(i, p);
          blk.H(i, 4 * p + 2) = b.dxy(i, p);
          blk.H(i, 4 * p + 3) = b.dyy(i, p);
        }

      for (int e : mesh.cell_edges(K)) {
        const EdgeFlags fl = J.flags[e];
        if (!fl.active()) continue;
        const Edge &ed = mesh.edge(e);
        const int k = detail::side_of(ed, K);
        const double w = detail::side_weight(ed);
        const Vec2 nrm = ed.normal;
        const auto &lt = L.edge(e).side[k];
        const Eigen::MatrixXd left = L.cell(K).basis.val.transpose() * L.mass_inverse(K); // nq x nL
        const Eigen::VectorXd ew = w * L.edge(e).weights;
        const Eigen::MatrixXd Tval = left * lt.val * ew.asDiagonal(); // nq x nqe
        const Eigen::MatrixXd Tg[2] = {left * lt.dx * ew.asDiagonal(), left * lt.dy * ew.asDiagonal()};

        for (int m = 0; m < ed.n_sides; ++m) {
          const double sgn = m == 0 ? 1.0 : -1.0;
          const int off = offset.at(ed.sides[m].cell);
          const auto &vs = V.edge(e).side[m];
          if (fl.grad) {
            const Eigen::MatrixXd Rg[2] = {sgn * vs.dx * Tval.transpose(), sgn * vs.dy * Tval.transpose()};
            for (int a = 0; a < 2; ++a)
              for (int bb = 0; bb < 2; ++bb)
                for (int p = 0; p < nq; ++p)
                  blk.H.block(off, 4 * p + 2 * a + bb, n, 1) -= nrm[bb] * Rg[a].col(p);
          }
          if (fl.value) {
            const Eigen::MatrixXd Bv[2] = {sgn * vs.val * Tg[0].transpose(), sgn * vs.val * Tg[1].transpose()};
            for (int a = 0; a < 2; ++a)
              for (int bb = 0; bb < 2; ++bb)
                for (int p = 0; p < nq; ++p)
                  blk.H.block(off, 4 * p + 2 * a + bb, n, 1) += nrm[a] * Bv[bb].col(p);
          }
        }

        if (ed.is_boundary() && !J.homogeneous) {
          const EdgeData d = sample_edge_data(V, J, e);
          has_data_ = true;
          for (int c = 0; c < 3; ++c) {
            if (fl.grad) {
              Eigen::VectorXd Px(d.Phi.size()), Py(d.Phi.size());
              for (std::size_t q = 0; q < d.Phi.size(); ++q) {
                Px[q] = d.Phi[q](c, 0);
                Py[q] = d.Phi[q](c, 1);
              }
              const Eigen::VectorXd r[2] = {Tval * Px, Tval * Py};
              for (int a = 0; a < 2; ++a)
                for (int bb = 0; bb < 2; ++bb)
                  for (int p = 0; p < nq; ++p) blk.HD(c, 4 * p + 2 * a + bb) += nrm[bb] * r[a][p];
            }
            if (fl.value) {
              const Eigen::VectorXd phic = d.phi.col(c);
              const Eigen::VectorXd bv[2] = {Tg[0] * phic, Tg[1] * phic};
              for (int a = 0; a < 2; ++a)
                for (int bb = 0; bb < 2; ++bb)
                  for (int p = 0; p < nq; ++p) blk.HD(c, 4 * p + 2 * a + bb) -= nrm[a] * bv[bb][p];
            }
          }
        }
      }
    }
  }

  const BrokenSpace &space() const { return *V_; }
  const CellBlock &block(int K) const { return blocks_[K]; }
  bool has_data() const { return has_data_; }

  /// H_h of a field on cell K as a 3 x 4nq matrix (row = component).
  Eigen::Matrix<double, 3, Eigen::Dynamic> hessian_rows(const FieldCoeffs &y, int K, bool with_data = true) const {
    const CellBlock &b = blocks_[K];
    Eigen::Matrix<double, Eigen::Dynamic, 3> yl(b.dofs.size(), 3);
    for (std::size_t i = 0; i < b.dofs.size(); ++i) yl.row(i) = y.row(b.dofs[i]);
    Eigen::Matrix<double, 3, Eigen::Dynamic> h = yl.transpose() * b.H;
    if (with_data) h += b.HD;
    return h;
  }

  std::vector<Hessian3> hessian(const FieldCoeffs &y, int K, bool with_data = true) const {
    const auto rows = hessian_rows(y, K, with_data);
    std::vector<Hessian3> out(rows.cols() / 4);
    for (std::size_t p = 0; p < out.size(); ++p)
      for (int c = 0; c < 3; ++c)
        out[p].comp[c] << rows(c, 4 * p), rows(c, 4 * p + 1), rows(c, 4 * p + 2), rows(c, 4 * p + 3);
    return out;
  }

private:
  const BrokenSpace *V_;
  std::vector<CellBlock> blocks_;
  bool has_data_ = false;
};

} // namespace ldgplate
