#include "ldgplate/verification.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ldgplate;

namespace {

struct SmallSaddle {
  std::unique_ptr<PlateProblem> P;
  SparseMatrix A;
  FieldCoeffs y, F;
};

SmallSaddle small_saddle(int n, unsigned seed, bool clamped) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  SmallSaddle s;
  Mesh m = clamped ? build_rectangle({0, 1}, {0, 1}, n, n, [](const Vec2 &x) { return x.x() < 1e-12; })
                   : build_rectangle({0, 1}, {0, 1}, n, n);
  s.P = std::make_unique<PlateProblem>(std::move(m), identity_metric(),
                                       clamped ? std::optional(identity_boundary_data()) : std::nullopt, MaterialParams{});
  const BrokenSpace &V = s.P->space();
  s.A = s.P->bending().A + 10.0 * s.P->h2_product();
  s.y = identity_field(V);
  s.F.resize(V.n_scalar(), 3);
  for (int i = 0; i < s.y.size(); ++i) {
    s.y.data()[i] += 0.2 * U(rng);
    s.F.data()[i] = U(rng);
  }
  return s;
}

} // namespace

TEST(Solvers, CholmodSolvesSpdSystem) {
  const auto s = small_saddle(2, 1, true);
  const SpdFactorization f(s.A);
  const FieldCoeffs x = f.solve(s.F);
  FieldCoeffs r(s.F.rows(), 3);
  for (int c = 0; c < 3; ++c) r.col(c) = s.A * x.col(c) - s.F.col(c);
  EXPECT_LE(r.norm(), 1e-10 * s.F.norm());
}

TEST(Solvers, IndefiniteMatrixIsIllPosed) {
  const auto s = small_saddle(2, 1, true);
  try {
    SpdFactorization f(SparseMatrix(-s.A));
    FAIL() << "expected ill-posed-system";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::ill_posed_system);
  }
}

TEST(Solvers, SaddleMatchesDenseKktOnSmallMeshes) {
  for (int n : {1, 2})
    for (bool clamped : {true, false}) {
      const auto s = small_saddle(n, 10 + n, clamped);
      const ConstraintMatrix B(s.P->space(), s.y);
      const SpdFactorization fact(s.A);
      SchurOptions opt;
      opt.cg_tol = 1e-13;
      const SaddleSolution sol = saddle_solve(fact, B, s.F, opt);
      const auto [dY, lam] = dense_kkt_solve(s.A, B, s.F);
      EXPECT_LE((sol.dY - dY).norm(), 1e-8 * dY.norm()) << n << " " << clamped;
      EXPECT_LE(B.apply(sol.dY).norm(), 1e-9 * s.F.norm());
    }
}

TEST(Solvers, ResidualIsInRangeOfConstraintTranspose) {
  // A dY - F = -B^T Lam
  const auto s = small_saddle(2, 3, true);
  const ConstraintMatrix B(s.P->space(), s.y);
  const SpdFactorization fact(s.A);
  SchurOptions opt;
  opt.cg_tol = 1e-13;
  const SaddleSolution sol = saddle_solve(fact, B, s.F, opt);
  const FieldCoeffs BtL = B.apply_transpose(sol.lambda);
  FieldCoeffs r(s.F.rows(), 3);
  for (int c = 0; c < 3; ++c) r.col(c) = s.A * sol.dY.col(c) - s.F.col(c) + BtL.col(c);
  EXPECT_LE(r.norm(), 1e-8 * s.F.norm());
}

TEST(Solvers, ReferencePreconditionerGivesSameSolutionFaster) {
  const auto s = small_saddle(2, 4, true);
  const ConstraintMatrix B(s.P->space(), s.y);
  const SpdFactorization fact(s.A);
  SchurOptions opt;
  opt.cg_tol = 1e-12;
  const SaddleSolution plain = saddle_solve(fact, B, s.F, opt);
  ReferenceSchurPreconditioner pc(30);
  const SaddleSolution pre = saddle_solve(fact, B, s.F, opt, &pc);
  EXPECT_LE((plain.dY - pre.dY).norm(), 1e-8 * plain.dY.norm());
  EXPECT_LE(pre.iterations, 2);
  EXPECT_EQ(pc.refreshes(), 1);
}

TEST(Solvers, ZeroRightHandSideNeedsNoIterations) {
  const auto s = small_saddle(1, 5, true);
  const ConstraintMatrix B(s.P->space(), s.y);
  const SpdFactorization fact(s.A);
  const SaddleSolution sol = saddle_solve(fact, B, FieldCoeffs::Zero(s.F.rows(), 3));
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_EQ(sol.dY.norm(), 0.0);
}

TEST(Solvers, IterationCapRaisesNonconvergence) {
  const auto s = small_saddle(2, 6, true);
  const ConstraintMatrix B(s.P->space(), s.y);
  const SpdFactorization fact(s.A);
  SchurOptions opt;
  opt.cg_tol = 1e-14;
  opt.max_iter = 1;
  try {
    saddle_solve(fact, B, s.F, opt);
    FAIL() << "expected nonconvergence";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::nonconvergence);
  }
}
