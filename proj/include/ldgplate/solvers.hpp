/**
 * @file solvers.hpp
 * @brief Sparse SPD factorization and the Schur complement solve of the
 * per-step saddle system
 *
 *   [ A   B^T ] [dY ]   [F]
 *   [ B   0   ] [Lam] = [0].
 *
 * A acts blockwise on the three components with one shared scalar block, so
 * each application of A^{-1} is a single factorized solve with three
 * right-hand sides.
 */
#pragma once

#include "ldgplate/forms.hpp"

#include <Eigen/CholmodSupport>

#include <functional>
#include <memory>

namespace ldgplate {

/// Supernodal Cholesky factorization (CHOLMOD) of the scalar block of A.
/// The symbolic analysis is kept so that matrices with the same pattern can
/// be refactorized numerically.
class SpdFactorization {
public:
  SpdFactorization() : llt_(std::make_unique<Eigen::CholmodSupernodalLLT<SparseMatrix>>()) {}

  explicit SpdFactorization(const SparseMatrix &A) : SpdFactorization() { factorize(A); }

  void factorize(const SparseMatrix &A) {
    if (A.rows() != A.cols()) throw Error(ErrorKind::invalid_parameter, "matrix is not square");
    if (!analyzed_ || A.rows() != n_ || A.nonZeros() != nnz_) {
      llt_->analyzePattern(A);
      n_ = static_cast<int>(A.rows());
      nnz_ = A.nonZeros();
      analyzed_ = true;
    }
    llt_->factorize(A);
    if (llt_->info() != Eigen::Success)
      throw Error(ErrorKind::ill_posed_system, "sparse Cholesky factorization failed (matrix not positive definite)");
  }

  int size() const { return n_; }

  template <class Rhs> Eigen::MatrixXd solve(const Eigen::MatrixBase<Rhs> &b) const {
    Eigen::MatrixXd x = llt_->solve(b.derived());
    if (llt_->info() != Eigen::Success) throw Error(ErrorKind::ill_posed_system, "sparse Cholesky solve failed");
    return x;
  }

private:
  std::unique_ptr<Eigen::CholmodSupernodalLLT<SparseMatrix>> llt_;
  bool analyzed_ = false;
  int n_ = 0;
  Eigen::Index nnz_ = 0;
};

struct SchurOptions {
  double cg_tol = 1e-10;
  int max_iter = 0; ///< 0 means 10 * (number of multipliers)
  std::function<void(const std::string &)> warn;
};

struct SaddleSolution {
  FieldCoeffs dY;
  Eigen::VectorXd lambda;
  int iterations = 0;
  double residual = 0.0; ///< final relative CG residual
  double min_curvature = 0.0;
  bool truncated = false;
};

/// Preconditioner for the Schur complement built from an exact S = B A^{-1} B^T
/// at a reference state and kept until CG needs more than `refresh_after`
/// iterations. Along a gradient flow B changes slowly, so the stale S stays
/// an accurate preconditioner for many steps.
class ReferenceSchurPreconditioner {
public:
  explicit ReferenceSchurPreconditioner(int refresh_after = 30, int batch = 64)
      : refresh_after_(refresh_after), batch_(batch) {}

  /// Rebuilds the reference if there is none or the last solve was slow.
  void prepare(const SpdFactorization &A, const ConstraintMatrix &B) {
    if (built_ && B.rows() == size_ && last_iterations_ <= refresh_after_) return;
    const int M = B.rows();
    Eigen::MatrixXd S(M, M);
    for (int j0 = 0; j0 < M; j0 += batch_) {
      const int nj = std::min(batch_, M - j0);
      Eigen::MatrixXd R(A.size(), 3 * nj);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(M);
      for (int j = 0; j < nj; ++j) {
        e[j0 + j] = 1.0;
        R.middleCols(3 * j, 3) = B.apply_transpose(e);
        e[j0 + j] = 0.0;
      }
      const Eigen::MatrixXd X = A.solve(R);
      for (int j = 0; j < nj; ++j) S.col(j0 + j) = B.apply(X.middleCols(3 * j, 3));
    }
    // S is only semidefinite when constraints are redundant
    const double shift = 1e-12 * S.diagonal().cwiseAbs().maxCoeff();
    S.diagonal().array() += shift;
    llt_.compute(0.5 * (S + S.transpose()));
    if (llt_.info() != Eigen::Success) throw Error(ErrorKind::ill_posed_system, "reference Schur complement is singular");
    built_ = true;
    size_ = M;
    ++refreshes_;
    last_iterations_ = 0;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd &v) const { return llt_.solve(v); }
  void record(int iterations) { last_iterations_ = iterations; }
  int refreshes() const { return refreshes_; }

private:
  int refresh_after_, batch_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool built_ = false;
  int size_ = 0, refreshes_ = 0, last_iterations_ = 0;
};

/// Solves the saddle system by (optionally preconditioned) CG on the Schur
/// complement, starting from Lam = 0 and stopping on the unpreconditioned
/// relative residual. Alongside Lam the iteration carries u = A^{-1} B^T Lam,
/// so the primal increment dY = A^{-1} F - u needs no extra solve.
inline SaddleSolution saddle_solve(const SpdFactorization &A, const ConstraintMatrix &B, const FieldCoeffs &F,
                                   const SchurOptions &opt = {}, ReferenceSchurPreconditioner *pc = nullptr) {
  const int M = B.rows();
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * M;
  SaddleSolution s;
  s.lambda = Eigen::VectorXd::Zero(M);
  const FieldCoeffs x0 = A.solve(F);
  FieldCoeffs u = FieldCoeffs::Zero(F.rows(), 3);

  Eigen::VectorXd r = B.apply(x0);
  const double bnorm = r.norm();
  if (bnorm == 0.0) {
    s.dY = x0;
    return s;
  }
  if (pc) pc->prepare(A, B);
  auto precond = [&](const Eigen::VectorXd &v) -> Eigen::VectorXd { return pc ? pc->apply(v) : v; };
  Eigen::VectorXd z = precond(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  s.min_curvature = std::numeric_limits<double>::infinity();
  int k = 0;
  while (r.norm() > opt.cg_tol * bnorm) {
    if (k >= max_iter) {
      throw Error(ErrorKind::nonconvergence, "Schur CG did not converge in " + std::to_string(max_iter) +
                                                 " iterations, relative residual " +
                                                 std::to_string(r.norm() / bnorm));
    }
    const FieldCoeffs up = A.solve(B.apply_transpose(p));
    const Eigen::VectorXd Sp = B.apply(up);
    const double pSp = p.dot(Sp);
    s.min_curvature = std::min(s.min_curvature, pSp / p.squaredNorm());
    if (pSp <= 1e-14 * p.norm() * Sp.norm()) {
      s.truncated = true;
      if (opt.warn) opt.warn("Schur CG: near-zero curvature direction, returning current iterate");
      break;
    }
    const double alpha = rz / pSp;
    s.lambda += alpha * p;
    u += alpha * up;
    r -= alpha * Sp;
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++k;
  }
  if (pc) pc->record(k);
  s.iterations = k;
  s.residual = r.norm() / bnorm;
  s.dY = x0 - u;
  return s;
}

/// Multipliers only.
inline SaddleSolution schur_solve(const ConstraintMatrix &B, const SpdFactorization &A, const FieldCoeffs &F,
                                  double cg_tol = 1e-10, int max_iter = 0) {
  SchurOptions opt;
  opt.cg_tol = cg_tol;
  opt.max_iter = max_iter;
  return saddle_solve(A, B, F, opt);
}

/// Dense KKT solve used as a reference on small problems. Columns of the
/// primal block are ordered c * N_s + dof as in ConstraintMatrix::to_sparse.
inline std::pair<FieldCoeffs, Eigen::VectorXd> dense_kkt_solve(const SparseMatrix &A, const ConstraintMatrix &B,
                                                               const FieldCoeffs &F) {
  const int N = static_cast<int>(A.rows()), M = B.rows();
  const Eigen::MatrixXd Ad(A), Bd(B.to_sparse());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3 * N + M, 3 * N + M);
  for (int c = 0; c < 3; ++c) K.block(c * N, c * N, N, N) = Ad;
  K.block(0, 3 * N, 3 * N, M) = Bd.transpose();
  K.block(3 * N, 0, M, 3 * N) = Bd;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(3 * N + M);
  for (int c = 0; c < 3; ++c) rhs.segment(c * N, N) = F.col(c);
  // least-squares solve tolerates redundant constraints
  const Eigen::VectorXd x = K.completeOrthogonalDecomposition().solve(rhs);
  FieldCoeffs dY(N, 3);
  for (int c = 0; c < 3; ++c) dY.col(c) = x.segment(c * N, N);
  return {dY, x.tail(M)};
}

} // namespace ldgplate
