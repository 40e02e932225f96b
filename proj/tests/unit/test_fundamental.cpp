#include "heisen/fundamental.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace heisen;

TEST(Fundamental, OrbitEnumerationMatchesBruteForce) {
  const GroupPoint p0 = GroupPoint::polarized(0.5, 0.5, 0.5);
  for (const Metric metric : {Metric::contraction, Metric::cc}) {
    const double eps = 2.2;
    const auto e = enumerate_orbit_images(p0, eps, metric);
    std::set<LatticePoint> found;
    for (const auto& img : e.images) found.insert(img.gamma);
    EXPECT_TRUE(std::is_sorted(e.images.begin(), e.images.end(),
                               [](const OrbitImage& a, const OrbitImage& b) { return a.distance < b.distance; }));

    std::set<LatticePoint> brute;
    for (std::int64_t m = -4; m <= 4; ++m) {
      for (std::int64_t n = -4; n <= 4; ++n) {
        for (std::int64_t k = -12; k <= 12; ++k) {
          const LatticePoint g{m, n, k};
          if (g.is_identity()) continue;
          if (distance(metric, p0, g.to_point() * p0) < eps) brute.insert(g);
        }
      }
    }
    EXPECT_EQ(found, brute) << to_string(metric);
    EXPECT_TRUE(found.count(LatticePoint{1, 0, 0}));
  }
}

TEST(Fundamental, LatticePullbackInvertsTranslation) {
  const LatticePoint g{2, -1, 3};
  const Eigen::Vector3d x(0.2, 0.4, 0.6);
  const Eigen::Vector3d moved = (g.to_point() * GroupPoint::from_coords(Model::polarized, x)).coords();
  EXPECT_LT((lattice_pullback(g, moved) - x).norm(), 1e-14);
}

TEST(Fundamental, UnitCubeIsExactlyFundamental) {
  const VoxelGrid grid{Box3{}, {32, 32, 32}, Model::polarized};
  const Box3 window{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}};
  const auto r = verify_fundamental_set(VoxelSet::full(grid), window, 4, 24, {}, 1);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.covering_fraction, 1.0);
  EXPECT_EQ(r.overlap_fraction, 0.0);
  EXPECT_NEAR(r.measure, 1.0, 1e-12);
}

TEST(Fundamental, BrokenSetsFail) {
  const Box3 window{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}};
  const VoxelGrid half{Box3{{0, 0, 0}, {1, 1, 0.5}}, {32, 32, 16}, Model::polarized};
  const auto gap = verify_fundamental_set(VoxelSet::full(half), window, 4, 24, {}, 1);
  EXPECT_FALSE(gap.covering_ok);
  const VoxelGrid big{Box3{{0, 0, 0}, {1.25, 1, 1}}, {40, 32, 32}, Model::polarized};
  const auto overlap = verify_fundamental_set(VoxelSet::full(big), window, 4, 24, {}, 1);
  EXPECT_FALSE(overlap.overlap_ok);
  // scattered voxels: not the closure of an interior
  const VoxelGrid grid{Box3{}, {32, 32, 32}, Model::polarized};
  VoxelSet dust(grid);
  for (std::size_t i = 0; i < grid.size(); i += 2) dust.set(i);
  EXPECT_FALSE(verify_fundamental_set(dust, window, 4, 24, {}, 1).closure_ok);
}

TEST(Fundamental, DirichletCellIsFundamental) {
  const DirichletSpec spec;
  const DirichletResult d = dirichlet_cell(spec, dirichlet_grid(spec.base_point, 40, spec.metric), 1);
  EXPECT_FALSE(d.touches_boundary);
  EXPECT_NEAR(d.cell.measure(), 1.0, 0.05);
  EXPECT_LE(d.inradius, d.circumradius);
  EXPECT_TRUE(d.cell.contains(spec.base_point));
  const Box3 window{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}};
  const auto r = verify_fundamental_set(d.cell, window, 4, 24, {}, 1);
  EXPECT_GE(r.covering_fraction, 0.98);
  EXPECT_LE(r.overlap_fraction, 0.02);
}

TEST(Fundamental, LocatorCountsTranslates) {
  const VoxelGrid grid{Box3{}, {16, 16, 16}, Model::polarized};
  const VoxelSet cube = VoxelSet::full(grid);
  const LatticeLocator locator(cube);
  std::vector<LatticePoint> hits;
  locator.translates_containing(Eigen::Vector3d(2.3, -0.6, 5.1), hits);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(locator.multiplicity(Eigen::Vector3d(0.5, 0.5, 0.5)), 1);
}
