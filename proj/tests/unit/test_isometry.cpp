#include "heisen/isometry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace heisen;

namespace {

bool in_dilated_lattice(const LatticePoint& g, int s) {
  return g.m % s == 0 && g.n % s == 0 && g.k % (static_cast<std::int64_t>(s) * s) == 0;
}

}  // namespace

TEST(Isometry, QuarterTurnAboutOriginByHand) {
  const Isometry r = Isometry::rotation(GroupPoint::identity(Model::symmetric), std::numbers::pi / 2);
  const GroupPoint p = r(GroupPoint::symmetric(1.0, 2.0, 3.0));
  EXPECT_NEAR(p.x, -2.0, 1e-15);
  EXPECT_NEAR(p.y, 1.0, 1e-15);
  EXPECT_NEAR(p.z, 3.0, 1e-15);
  EXPECT_THROW(Isometry::rotation(GroupPoint::identity(Model::polarized), 1.0), ModelMismatch);
}

TEST(Isometry, RotationsPreserveDistance) {
  const Isometry r = Isometry::rotation(GroupPoint::symmetric(0.3, -0.1, 0.2), 0.9);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const GroupPoint p = GroupPoint::symmetric(u(rng), u(rng), u(rng));
    const GroupPoint q = GroupPoint::symmetric(u(rng), u(rng), u(rng));
    EXPECT_NEAR(cc_distance(r(p), r(q)), cc_distance(p, q), 1e-9);
    const GroupPoint back = r.inverse()(r(p));
    EXPECT_LT((back.coords() - p.coords()).norm(), 1e-12);
  }
}

TEST(Isometry, InfinitesimalIdentity) {
  EXPECT_TRUE(check_infinitesimal_isometry(Isometry::translation(LatticePoint{2, -1, 5}), Model::polarized, 50, 1e-6)
                  .passed);
  EXPECT_TRUE(check_infinitesimal_isometry(Isometry::rotation(GroupPoint::symmetric(1, 1, 0), 2.0), Model::symmetric,
                                           50, 1e-6)
                  .passed);
  const PointMap stretch = [](const GroupPoint& p) { return GroupPoint{p.model, 2.0 * p.x, p.y, 2.0 * p.z}; };
  const auto bad = check_infinitesimal_isometry(stretch, Model::polarized, 50, 1e-6);
  EXPECT_FALSE(bad.passed);
  EXPECT_GE(bad.max_residual, 0.1);
  // the dilation scales the cometric by t^2, so it is not an isometry either
  const PointMap half = [](const GroupPoint& p) { return dilate(0.5, p); };
  EXPECT_FALSE(check_infinitesimal_isometry(half, Model::polarized, 20, 1e-6).passed);
}

TEST(Isometry, ConjugatedTranslationIsDilatedTranslation) {
  const LatticePoint g{1, -2, 3};
  const Isometry a = conjugate_isometry(0.5, Isometry::translation(g));
  const GroupPoint shift = dilate(2.0, g.to_point());
  const GroupPoint p = GroupPoint::polarized(0.3, 0.7, -0.4);
  EXPECT_LT((a(p).coords() - (shift * p).coords()).norm(), 1e-12);
}

TEST(Isometry, CosetRepresentativesExhaustive) {
  for (const int s : {2, 3}) {
    const auto reps = coset_representatives(1.0 / s);
    ASSERT_EQ(reps.size(), static_cast<std::size_t>(s * s * s * s));
    EXPECT_TRUE(is_transversal(reps, s));
    const int span = 2 * s * s;
    for (std::int64_t m = 0; m < span; ++m) {
      for (std::int64_t n = 0; n < span; ++n) {
        for (std::int64_t k = 0; k < span; ++k) {
          const LatticePoint g{m, n, k};
          const auto hits = std::count_if(reps.begin(), reps.end(), [&](const LatticePoint& r) {
            return in_dilated_lattice(lattice_inv(r) * g, s);
          });
          ASSERT_EQ(hits, 1);
          const auto d = decompose_coset(g, s);
          EXPECT_EQ(d.rep * dilate_lattice(s, d.quotient), g);
          EXPECT_TRUE(in_dilated_lattice(lattice_inv(d.rep) * g, s));
        }
      }
    }
  }
  auto dup = coset_representatives(0.5);
  dup.back() = dup.front();
  EXPECT_FALSE(is_transversal(dup, 2));
  EXPECT_THROW(dilation_factor(0.4), std::invalid_argument);
}

TEST(Isometry, FixedPointLiesOnRotationAxis) {
  const GroupPoint center = GroupPoint::symmetric(0.3, -0.2, 0.1);
  const auto h = FiniteGroupAction::cyclic_rotations(center, 4);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_TRUE(h.verify_closure(Model::symmetric));
  for (const Metric metric : {Metric::contraction, Metric::cc}) {
    const auto r = fixed_point_center(h, GroupPoint::symmetric(0.8, 0.4, 0.5), metric, 4.0, 1e-6);
    // the rotations fix exactly the vertical line through the center
    EXPECT_NEAR(r.point.x, 0.3, 1e-6);
    EXPECT_NEAR(r.point.y, -0.2, 1e-6);
    EXPECT_LE(r.max_displacement_contraction, 1e-6);
  }
}

TEST(Isometry, FixedPointRejectsTranslations) {
  const FiniteGroupAction h({Isometry::identity(Model::symmetric),
                             Isometry::translation(GroupPoint::symmetric(1, 0, 0))});
  EXPECT_THROW(fixed_point_center(h, GroupPoint::symmetric(0, 0, 0), Metric::contraction, 4.0, 1e-6),
               std::invalid_argument);
}
