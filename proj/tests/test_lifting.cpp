#include "ldgplate/verification.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ldgplate;

namespace {

FieldCoeffs random_field(const BrokenSpace &V, unsigned seed, double amp = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-amp, amp);
  FieldCoeffs y(V.n_scalar(), 3);
  for (int i = 0; i < y.size(); ++i) y.data()[i] = U(rng);
  return y;
}

double max_diff(const std::vector<Hessian3> &a, const std::vector<Hessian3> &b) {
  double d = 0;
  for (std::size_t p = 0; p < a.size(); ++p)
    for (int k = 0; k < 3; ++k) d = std::max(d, (a[p].comp[k] - b[p].comp[k]).cwiseAbs().maxCoeff());
  return d;
}

} // namespace

TEST(Lifting, AdjointIdentitiesOnRectangleAndDisc) {
  for (const Mesh &m : {build_rectangle({0, 2}, {0, 1}, 3, 2, [](const Vec2 &x) { return x.x() < 1e-12; }),
                        build_disc(1.0, 20)}) {
    const BrokenSpace L(m);
    const auto r = lifting_adjoint_residuals(L, 42);
    EXPECT_LE(r.r, 1e-11);
    EXPECT_LE(r.b, 1e-11);
  }
}

TEST(Lifting, AdjointCheckCatchesSignFlipInB) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 2);
  const BrokenSpace L(m);
  const LiftB flipped = [](const BrokenSpace &S, int e, const Eigen::VectorXd &j) {
    EdgeLifting out = lift_b(S, e, j);
    for (auto &c : out.coeffs) c = -c;
    return out;
  };
  const auto r = lifting_adjoint_residuals(L, 42, lift_r, flipped);
  EXPECT_GT(r.b, 1e-3);
  EXPECT_LE(r.r, 1e-11);
}

TEST(Lifting, AdjointCheckCatchesTransposedR) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 2);
  const BrokenSpace L(m);
  const LiftR transposed = [](const BrokenSpace &S, int e, const Eigen::Matrix<double, Eigen::Dynamic, 2> &j) {
    EdgeLifting out = lift_r(S, e, j);
    for (auto &c : out.coeffs) c.col(1).swap(c.col(2));
    return out;
  };
  EXPECT_GT(lifting_adjoint_residuals(L, 3, transposed).r, 1e-3);
}

TEST(Lifting, RIsSupportedOnTheEdgePatch) {
  const Mesh m = build_rectangle({0, 3}, {0, 1}, 3, 1);
  const BrokenSpace L(m);
  for (int e = 0; e < m.n_edges(); ++e) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> j = Eigen::MatrixXd::Ones(L.n_edge_points(), 2);
    const EdgeLifting r = lift_r(L, e, j);
    EXPECT_EQ(static_cast<int>(r.cells.size()), m.edge(e).n_sides);
  }
}

TEST(Lifting, CacheMatchesDirectAssemblyWithData) {
  // two routes: tabulated per-basis Hessians vs edge-by-edge liftings of a field
  const Mesh m = build_rectangle({0, 2}, {0, 1}, 3, 2, [](const Vec2 &x) { return x.x() < 1e-12 || x.y() > 1 - 1e-12; });
  const BrokenSpace V(m);
  const TargetMetric cyl = one_mode_metric();
  const JumpSet J = JumpSet::standard(m, boundary_data_from(*cyl.immersion));
  const HessianCache cache(V, V, J);
  const FieldCoeffs y = random_field(V, 9);
  const auto direct = discrete_hessian_direct(V, V, J, y);
  for (int K = 0; K < V.n_cells(); ++K) EXPECT_LE(max_diff(cache.hessian(y, K), direct[K]), 1e-10);
}

TEST(Lifting, CacheMatchesDirectAssemblyOnFreeDisc) {
  const Mesh m = build_disc(1.0, 20);
  const BrokenSpace V(m);
  const JumpSet J = JumpSet::standard(m, std::nullopt);
  const HessianCache cache(V, V, J);
  EXPECT_FALSE(cache.has_data());
  const FieldCoeffs y = random_field(V, 4);
  const auto direct = discrete_hessian_direct(V, V, J, y);
  for (int K = 0; K < V.n_cells(); ++K) EXPECT_LE(max_diff(cache.hessian(y, K), direct[K]), 1e-10);
}

TEST(Lifting, ZeroJumpExactnessOnQuadratics) {
  EXPECT_LE(zero_jump_hessian_error(build_rectangle({0, 1}, {0, 2}, 3, 3, [](const Vec2 &) { return true; })), 1e-12);
  EXPECT_LE(zero_jump_hessian_error(build_rectangle({-1, 1}, {0, 1}, 2, 2)), 1e-12);
}

TEST(Lifting, HessianIsAffineInTheField) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 2, [](const Vec2 &x) { return x.x() < 1e-12; });
  const BrokenSpace V(m);
  const JumpSet J = JumpSet::standard(m, identity_boundary_data());
  const HessianCache cache(V, V, J);
  const FieldCoeffs a = random_field(V, 1), b = random_field(V, 2);
  for (int K = 0; K < V.n_cells(); ++K) {
    // H(a + b) = H(a) + H_0(b) where H_0 omits the boundary data
    const auto sum = cache.hessian(a + b, K), ha = cache.hessian(a, K), hb = cache.hessian(b, K, false);
    for (std::size_t p = 0; p < sum.size(); ++p)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR((sum[p].comp[c] - ha[p].comp[c] - hb[p].comp[c]).norm(), 0.0, 1e-10);
  }
}
