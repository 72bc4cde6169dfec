#include "ldgplate/fe_space.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace ldgplate;

TEST(Quadrature, GaussLegendreExactness) {
  const Rule1D r = gauss_legendre(5);
  // exact for degree 9 on [0, 1]
  for (int k = 0; k <= 9; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < r.points.size(); ++i) s += r.weights[i] * std::pow(r.points[i], k);
    EXPECT_NEAR(s, 1.0 / (k + 1), 1e-15);
  }
  double s = 0;
  for (std::size_t i = 0; i < r.points.size(); ++i) s += r.weights[i] * std::pow(r.points[i], 10);
  EXPECT_GT(std::abs(s - 1.0 / 11), 1e-10);
}

TEST(Quadrature, GaussLobattoNodes) {
  const auto x = gauss_lobatto_nodes(2);
  ASSERT_EQ(x.size(), 3u);
  EXPECT_NEAR(x[0], 0.0, 1e-15);
  EXPECT_NEAR(x[1], 0.5, 1e-15);
  EXPECT_NEAR(x[2], 1.0, 1e-15);
}

class SpaceTest : public ::testing::Test {
protected:
  Mesh mesh = build_disc(1.0, 20);
  BrokenSpace V{mesh};
};

TEST_F(SpaceTest, Dimensions) {
  EXPECT_EQ(V.n_local(), 9);
  EXPECT_EQ(V.n_scalar(), 180);
  EXPECT_EQ(V.n_cell_points(), 25);
  EXPECT_EQ(V.n_edge_points(), 5);
}

TEST_F(SpaceTest, InterpolationReproducesBilinearMaps) {
  // x itself is in the mapped Q2 space on every bilinear cell
  const FieldCoeffs y = identity_field(V);
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto g = cell_gradients(V, y, c);
    for (const auto &m : g) {
      EXPECT_NEAR((m.topRows<2>() - Mat2::Identity()).norm(), 0.0, 1e-12);
      EXPECT_NEAR(m.row(2).norm(), 0.0, 1e-14);
    }
    for (const auto &h : cell_hessians(V, y, c))
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(h.comp[k].norm(), 0.0, 1e-11);
  }
}

TEST_F(SpaceTest, MassMatrixIntegratesConstants) {
  const SparseMatrix M = mass_matrix(V);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(V.n_scalar());
  EXPECT_NEAR(one.dot(M * one), mesh.area(), 1e-12);
  const FieldCoeffs F = load_vector(V, [](const Vec2 &) { return Vec3(1, 2, 3); });
  EXPECT_NEAR(F.col(2).sum(), 3 * mesh.area(), 1e-12);
}

TEST_F(SpaceTest, EdgeTracesOfSmoothFieldHaveNoJumps) {
  const FieldCoeffs y = identity_field(V);
  const JumpSet J = JumpSet::standard(mesh, std::nullopt);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (mesh.edge(e).is_boundary()) continue;
    const EdgeTrace tr = edge_traces(V, y, J, e);
    EXPECT_NEAR(tr.value_jump.norm(), 0.0, 1e-13);
    for (const auto &g : tr.grad_jump) EXPECT_NEAR(g.norm(), 0.0, 1e-12);
  }
}

TEST_F(SpaceTest, EvaluateMatchesInterpolant) {
  auto f = [](const Vec2 &x) { return Vec3(x.x() * x.x(), x.x() * x.y(), 1.0); };
  const FieldCoeffs y = interpolate(V, f);
  // exact at the Gauss-Lobatto nodes
  const auto nodes = V.reference_nodes();
  for (int c = 0; c < V.n_cells(); ++c)
    for (const auto &xi : nodes) EXPECT_NEAR((evaluate(V, y, c, xi) - f(mesh.map(c, xi))).norm(), 0.0, 1e-13);
}

TEST(JumpSet, StandardSkipsFreeBoundary) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 2, [](const Vec2 &x) { return x.x() < 1e-12; });
  const JumpSet J = JumpSet::standard(m, identity_boundary_data());
  int active = 0;
  for (int e = 0; e < m.n_edges(); ++e) {
    EXPECT_EQ(J.flags[e].active(), m.edge(e).cls != EdgeClass::free_boundary);
    active += J.flags[e].active();
  }
  EXPECT_EQ(active, 4 + 2);
}

TEST(JumpSet, MissingDataIsReported) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 1, 1, [](const Vec2 &) { return true; });
  const BrokenSpace V(m);
  JumpSet J = JumpSet::standard(m, std::nullopt);
  J.homogeneous = false;
  EXPECT_THROW(sample_edge_data(V, J, 0), Error);
}
