#include "ldgplate/verification.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ldgplate;

namespace {

FieldCoeffs perturbed_identity(const BrokenSpace &V, unsigned seed, double amp) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-amp, amp);
  FieldCoeffs y = identity_field(V);
  for (int i = 0; i < y.size(); ++i) y.data()[i] += U(rng);
  return y;
}

PlateProblem clamped_problem() {
  return PlateProblem(build_rectangle({-2, 2}, {-1, 1}, 4, 2, [](const Vec2 &x) { return std::abs(x.x()) > 2 - 1e-12; }),
                      one_mode_metric(), boundary_data_from(*one_mode_metric().immersion), MaterialParams{8, 6, 2, 3},
                      [](const Vec2 &x) { return Vec3(0.0, 0.1, x.y()); });
}

} // namespace

TEST(Forms, BendingCoefficients) {
  const auto fc = FormCoefficients::bending(MaterialParams{8, 6, 1, 1});
  EXPECT_DOUBLE_EQ(fc.frob, 1.0);
  EXPECT_DOUBLE_EQ(fc.trace, 48.0 / (6 * 20));
}

TEST(Forms, MaterialValidation) {
  EXPECT_THROW((MaterialParams{8, 0, 1, 1}.validate()), Error);
  EXPECT_THROW((MaterialParams{8, 6, 0, 1}.validate()), Error);
  EXPECT_NO_THROW((MaterialParams{0, 6, 1, 1}.validate()));
}

TEST(Forms, IdentityHasZeroEnergyAndDefect) {
  PlateProblem P(build_rectangle({0, 1}, {0, 1}, 3, 3), identity_metric(), std::nullopt, MaterialParams{});
  const FieldCoeffs y = identity_field(P.space());
  EXPECT_NEAR(P.energy(y), 0.0, 1e-20);
  EXPECT_NEAR(P.defect(y), 0.0, 1e-13);
  EXPECT_NEAR(P.stretching(y), 0.0, 1e-20);
}

TEST(Forms, SmoothImmersionDefectVanishesAtQuadratureScale) {
  // the interpolated cylinder satisfies the metric up to interpolation error
  const TargetMetric m = one_mode_metric();
  PlateProblem P(build_rectangle({-2, 2}, {-1, 1}, 16, 8), m, std::nullopt, MaterialParams{});
  const FieldCoeffs y = interpolate(P.space(), m.immersion->y);
  const FieldCoeffs flat = identity_field(P.space());
  EXPECT_LT(P.defect(y), 1e-2 * P.defect(flat));
}

TEST(Forms, DirectEnergyMatchesQuadraticFormula) {
  const PlateProblem P = clamped_problem();
  const FieldCoeffs y = perturbed_identity(P.space(), 5, 0.3);
  double Fy = (P.load().array() * y.array()).sum();
  EXPECT_NEAR(P.energy(y), P.bending().half_quadratic(y) - Fy, 1e-9 * std::max(1.0, std::abs(P.energy(y))));
}

TEST(Forms, QuadraticExpansionIsExact) {
  const PlateProblem P = clamped_problem();
  EXPECT_LE(quadratic_expansion_residual(P, 1), 1e-10);
  PlateProblem free(build_disc(1.0, 20), bubble_metric(0.2), std::nullopt, MaterialParams{});
  EXPECT_LE(quadratic_expansion_residual(free, 2), 1e-10);
}

TEST(Forms, GradientMatchesCentralDifferences) {
  const PlateProblem P = clamped_problem();
  const BrokenSpace &V = P.space();
  const FieldCoeffs y = perturbed_identity(V, 7, 0.2);
  const QuadraticSystem &Q = P.bending();
  FieldCoeffs grad(V.n_scalar(), 3);
  for (int c = 0; c < 3; ++c) grad.col(c) = Q.A * y.col(c) - Q.L.col(c) - P.load().col(c);
  const double h = 1e-5;
  for (int i : {0, 13, 40, V.n_scalar() - 1})
    for (int c = 0; c < 3; ++c) {
      FieldCoeffs yp = y, ym = y;
      yp(i, c) += h;
      ym(i, c) -= h;
      const double fd = (P.energy(yp) - P.energy(ym)) / (2 * h);
      EXPECT_NEAR(fd, grad(i, c), 1e-6 * std::max(1.0, std::abs(grad(i, c))));
    }
}

TEST(Forms, BendingMatrixIsSymmetricPositiveSemidefinite) {
  const PlateProblem P = clamped_problem();
  const Eigen::MatrixXd A(P.bending().A);
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-10 * A.cwiseAbs().maxCoeff());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff());
}

TEST(Forms, H2ProductIsPositiveDefinite) {
  for (double sigma : {0.0, 1.0}) {
    const Mesh m = sigma == 0 ? build_rectangle({0, 1}, {0, 1}, 2, 2, [](const Vec2 &x) { return x.x() < 1e-12; })
                              : build_rectangle({0, 1}, {0, 1}, 2, 2);
    const BrokenSpace V(m);
    const SparseMatrix M = assemble_h2_product(V, JumpSet::standard(m, std::nullopt), sigma);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(M)};
    EXPECT_GT(es.eigenvalues().minCoeff(), 1e-10);
  }
}

TEST(Forms, ConstraintRowsLinearizeTheCellMetric) {
  // B(y) v = d/dt int_K (grad y^T grad y) along v, entries (11, 22, 12)
  const Mesh m = build_disc(1.0, 5);
  const BrokenSpace V(m);
  const FieldCoeffs y = perturbed_identity(V, 3, 0.2), v = perturbed_identity(V, 4, 0.3) - identity_field(V);
  const ConstraintMatrix B(V, y);
  const Eigen::VectorXd Bv = B.apply(v);
  auto cell_gram = [&](const FieldCoeffs &z, int K) {
    Mat2 s = Mat2::Zero();
    const auto g = cell_gradients(V, z, K);
    for (std::size_t p = 0; p < g.size(); ++p) s += V.cell(K).weights[p] * g[p].transpose() * g[p];
    return s;
  };
  const double t = 1e-6;
  for (int K = 0; K < V.n_cells(); ++K) {
    const Mat2 d = (cell_gram(y + t * v, K) - cell_gram(y - t * v, K)) / (2 * t);
    EXPECT_NEAR(Bv[3 * K + 0], d(0, 0), 1e-7);
    EXPECT_NEAR(Bv[3 * K + 1], d(1, 1), 1e-7);
    EXPECT_NEAR(Bv[3 * K + 2], d(0, 1), 1e-7);
  }
}

TEST(Forms, ConstraintTransposeIsAdjoint) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 2);
  const BrokenSpace V(m);
  const FieldCoeffs y = perturbed_identity(V, 1, 0.2), v = perturbed_identity(V, 2, 0.5);
  const ConstraintMatrix B(V, y);
  const Eigen::VectorXd lam = Eigen::VectorXd::LinSpaced(B.rows(), -1, 2);
  EXPECT_NEAR(lam.dot(B.apply(v)), (B.apply_transpose(lam).array() * v.array()).sum(), 1e-11);
  const SparseMatrix S = B.to_sparse();
  Eigen::VectorXd flat(3 * V.n_scalar());
  for (int c = 0; c < 3; ++c) flat.segment(c * V.n_scalar(), V.n_scalar()) = v.col(c);
  EXPECT_LE((S * flat - B.apply(v)).norm(), 1e-12);
}

TEST(Forms, StretchGradientMatchesFiniteDifferences) {
  PlateProblem P(build_disc(1.0, 5), gel_disc_metric(2.0), std::nullopt, MaterialParams{});
  const BrokenSpace &V = P.space();
  const FieldCoeffs y = perturbed_identity(V, 8, 0.1);
  const SparseMatrix S = assemble_stretch(V, y, P.metric_field());
  const double h = 1e-6;
  for (int i : {0, 7, 30})
    for (int c = 0; c < 3; ++c) {
      FieldCoeffs yp = y, ym = y;
      yp(i, c) += h;
      ym(i, c) -= h;
      const double fd = (P.stretching(yp) - P.stretching(ym)) / (2 * h);
      const double an = (S * y.col(c))[i];
      EXPECT_NEAR(fd, an, 1e-6);
    }
}

TEST(Forms, MetricFieldRejectsIndefiniteMetric) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 1, 1);
  const BrokenSpace V(m);
  TargetMetric bad;
  bad.name = "bad";
  bad.g = [](const Vec2 &) { return Mat2(Eigen::Vector2d(1, -1).asDiagonal()); };
  EXPECT_THROW(MetricField(V, bad), Error);
}
