#include "heisen/mra.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace heisen;

namespace {

const IfsSystem& sys() {
  static const IfsSystem s = build_ifs(0.5);
  return s;
}

const ScalingFunction& tile_phi() {
  static const ScalingFunction phi(
      attractor_fixed_point(sys(), unit_cube_seed(attractor_grid(sys(), 32)), 40, 0.0, 1).voxels, 2.0, 1);
  return phi;
}

double bump(const Eigen::Vector3d& x) {
  const Eigen::Vector3d c(0.4, 0.6, 0.9);
  return std::exp(-(x - c).squaredNorm() / (2 * 0.25 * 0.25));
}

}  // namespace

TEST(Mra, GeneratorLiesInV0) {
  const TestFunction g = generator_test(tile_phi());
  const LevelProjection p = project_onto_level(SampledFunction::sample(g.grid, g.f, 1), 0, tile_phi(), 1);
  EXPECT_LT(p.l2_error, 1e-6);
  EXPECT_NEAR(p.coefficient(LatticePoint{0, 0, 0}), 1.0, 1e-9);
  EXPECT_NEAR(p.projection_norm, p.f_norm, 1e-9);
}

TEST(Mra, LevelZeroCoefficientsAreCellAverages) {
  // With Q = [0,1]^3 the translates gamma Q tile, so c_gamma is the mean of
  // f over gamma Q. Oracle: midpoint rule on u in [0,1]^3, x = gamma * u.
  const VoxelGrid grid{Box3{{0, 0, 0}, {1, 1, 1}}, {32, 32, 32}, Model::polarized};
  const ScalingFunction cube(VoxelSet::full(grid), 2.0, 1);
  const VoxelGrid fgrid{Box3{{-1, -1, -1}, {2, 2, 3}}, {48, 48, 64}, Model::polarized};
  const LevelProjection p = project_onto_level(SampledFunction::sample(fgrid, bump, 1), 0, cube, 1);
  for (const LatticePoint g : {LatticePoint{0, 0, 0}, LatticePoint{0, 0, 1}, LatticePoint{-1, 0, 1}}) {
    const int n = 40;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          const GroupPoint u = GroupPoint::polarized((i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n);
          sum += bump((g.to_point() * u).coords());
        }
      }
    }
    const double expected = sum / (n * n * n);
    EXPECT_NEAR(p.coefficient(g), expected, 0.03 * std::max(expected, 0.05)) << g.m << " " << g.n << " " << g.k;
  }
}

TEST(Mra, ProjectionErrorFallsWithLevel) {
  const TestFunction t = gaussian_test({0.5, 0.5, 0.6}, 0.3, 32);
  const SampledFunction f = SampledFunction::sample(t.grid, t.f, 1);
  const double e0 = project_onto_level(f, 0, tile_phi(), 1).l2_error;
  const double e1 = project_onto_level(f, 1, tile_phi(), 1).l2_error;
  EXPECT_LT(e1, e0);
  EXPECT_GT(e0, 0.0);
  const double n1 = project_onto_level(f, -1, tile_phi(), 1).projection_norm;
  const double n2 = project_onto_level(f, -2, tile_phi(), 1).projection_norm;
  EXPECT_LT(n2, n1);
}

TEST(Mra, RieszBoundsOfTileAndOfOverlappingBox) {
  const GramReport tile = gram_riesz_bounds(tile_phi(), 1);
  EXPECT_NEAR(tile.alpha1, 1.0, 0.05);
  EXPECT_NEAR(tile.alpha2, 1.0, 0.05);
  EXPECT_LT(tile.off_diagonal_mass, 0.02);
  // [0, 1] x [0, 1.5] x [0, 1] overlaps its y-translates
  const VoxelGrid grid{Box3{{0, 0, 0}, {1, 1.5, 1}}, {16, 24, 16}, Model::polarized};
  const ScalingFunction wide(VoxelSet::full(grid), 2.0, 1);
  const GramReport r = gram_riesz_bounds(wide, 1);
  EXPECT_GT(r.alpha2, r.alpha1 + 0.5);
  EXPECT_GT(r.off_diagonal_mass, 0.1);
  EXPECT_NEAR(wide.overlap(LatticePoint{0, 1, 0}), 0.5, 1e-9);
}

TEST(Mra, TwoScaleResidualSeparatesTileFromCube) {
  EXPECT_LT(two_scale_residual(sys(), tile_phi().tile(), 1), 0.05);
  EXPECT_GT(two_scale_residual(sys(), unit_cube_seed(attractor_grid(sys(), 32)), 1), 0.1);
}

TEST(Mra, WaveletBank) {
  const WaveletBank bank = build_wavelet_bank();
  EXPECT_LT(bank.orthogonality_residual(), 1e-14);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(bank.matrix(0, i), 0.25, 1e-15);
  const ParsevalReport r = parseval_check(sys(), tile_phi(), 5);
  EXPECT_LT(r.parseval_residual, 1e-10);
  EXPECT_LT(r.reconstruction_residual, 1e-10);
}

TEST(Mra, NestingHoldsForTileOnly) {
  const TestFunction g = generator_test(tile_phi());
  EXPECT_LT(nesting_residual(SampledFunction::sample(g.grid, g.f, 1), 0, tile_phi(), 1), 1e-6);
  const ScalingFunction cube(unit_cube_seed(attractor_grid(sys(), 32)), 2.0, 1);
  const TestFunction c = generator_test(cube);
  EXPECT_GT(nesting_residual(SampledFunction::sample(c.grid, c.f, 1), 0, cube, 1), 0.02);
  EXPECT_THROW(nesting_residual(SampledFunction::sample(c.grid, c.f, 1), -1, cube, 1), std::invalid_argument);
}

TEST(Mra, InvarianceUnderLatticeShift) {
  const auto r = invariance_check(gaussian_test({0.5, 0.5, 0.6}, 0.3, 32), LatticePoint{1, -1, 2}, tile_phi(), 1);
  EXPECT_LT(r.residual, 0.05);
  EXPECT_TRUE(r.argmax_maps);
}

TEST(Mra, EmptyTileIsRejected) {
  const VoxelGrid grid{Box3{}, {8, 8, 8}, Model::polarized};
  EXPECT_THROW(ScalingFunction(VoxelSet(grid)), std::invalid_argument);
}
