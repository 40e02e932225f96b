#include "heisen/group.hpp"

#include <gtest/gtest.h>

#include <array>
#include <random>

using namespace heisen;

namespace {

void expect_near(const GroupPoint& a, double x, double y, double z, double tol = 1e-14) {
  EXPECT_NEAR(a.x, x, tol);
  EXPECT_NEAR(a.y, y, tol);
  EXPECT_NEAR(a.z, z, tol);
}

}  // namespace

TEST(Group, PolarizedLawByHand) {
  const GroupPoint p = GroupPoint::polarized(1, 2, 3);
  const GroupPoint q = GroupPoint::polarized(4, 5, 6);
  expect_near(p * q, 5, 7, 3 + 6 + 1 * 5);
  expect_near(q * p, 5, 7, 3 + 6 + 4 * 2);
}

TEST(Group, SymmetricLawByHand) {
  const GroupPoint p = GroupPoint::symmetric(1, 2, 3);
  const GroupPoint q = GroupPoint::symmetric(4, 5, 6);
  expect_near(p * q, 5, 7, 9 + (1.0 * 5 - 2.0 * 4) / 2);
}

TEST(Group, MixedModelsThrow) {
  EXPECT_THROW(group_mul(GroupPoint::polarized(0, 0, 0), GroupPoint::symmetric(0, 0, 0)), ModelMismatch);
}

TEST(Group, ConvertRoundTripAndShear) {
  const GroupPoint p = GroupPoint::polarized(0.5, -2.0, 1.25);
  const GroupPoint s = convert_model(p, Model::symmetric);
  expect_near(s, 0.5, -2.0, 1.25 - 0.5 * -2.0 / 2);
  expect_near(convert_model(s, Model::polarized), 0.5, -2.0, 1.25);
}

TEST(Group, InverseAndDilation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 200; ++i) {
    for (const Model m : {Model::polarized, Model::symmetric}) {
      const GroupPoint p{m, u(rng), u(rng), u(rng)};
      const GroupPoint q{m, u(rng), u(rng), u(rng)};
      expect_near(p * group_inv(p), 0, 0, 0, 1e-12);
      const GroupPoint d = dilate(0.3, p * q);
      const GroupPoint e = dilate(0.3, p) * dilate(0.3, q);
      expect_near(d, e.x, e.y, e.z, 1e-12);
    }
  }
  EXPECT_THROW(dilate(0.0, GroupPoint::polarized(1, 1, 1)), std::invalid_argument);
}

TEST(Group, LatticeIsClosedInPolarizedModel) {
  const LatticePoint a{1, 2, 3};
  const LatticePoint b{-4, 5, 7};
  const LatticePoint ab = a * b;
  EXPECT_EQ(ab, (LatticePoint{-3, 7, 3 + 7 + 1 * 5}));
  EXPECT_TRUE((a * lattice_inv(a)).is_identity());
}

TEST(Group, ExpLogRoundTrip) {
  for (const Model m : {Model::polarized, Model::symmetric}) {
    const Eigen::Vector3d c(0.7, -1.1, 0.4);
    const Eigen::Vector3d back = log_algebra(exp_algebra(m, c));
    EXPECT_LT((back - c).cwiseAbs().maxCoeff(), 1e-13);
  }
  // exp(a X1 + b X2) in the symmetric model has no vertical part
  expect_near(exp_algebra(Model::symmetric, {1.0, 2.0, 0.0}), 1, 2, 0);
}

TEST(Group, FrameFieldsByHand) {
  // polarized: X1 = d/dx, X2 = d/dy + x d/dz, X3 = d/dz
  const Eigen::Vector3d p(0.4, -0.3, 2.0);
  EXPECT_LT((frame_field(Model::polarized, 1)(p) - Eigen::Vector3d(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((frame_field(Model::polarized, 2)(p) - Eigen::Vector3d(0, 1, 0.4)).norm(), 1e-15);
  EXPECT_LT((frame_field(Model::polarized, 3)(p) - Eigen::Vector3d(0, 0, 1)).norm(), 1e-15);
}

TEST(Group, BracketOfHorizontalFieldsIsVertical) {
  for (const Model m : {Model::polarized, Model::symmetric}) {
    const Eigen::Vector3d p(0.2, 0.9, -1.0);
    const Eigen::Vector3d b = lie_bracket(frame_field(m, 1), frame_field(m, 2), p);
    EXPECT_LT((b - Eigen::Vector3d(0, 0, 1)).norm(), 1e-8);
  }
}

TEST(Group, RanksAtRandomPoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 20; ++i) {
    const GroupPoint p = GroupPoint::polarized(u(rng), u(rng), u(rng));
    EXPECT_EQ(horizontal_rank(p), 2);
    EXPECT_EQ(hormander_rank(p), 3);
  }
}

TEST(Group, SquareLoopEndsAtTSquared) {
  for (const double t : {0.2, 0.1, 0.05}) {
    // oracle: the same square loop as a product of group translations
    const GroupPoint ex = GroupPoint::polarized(t, 0, 0);
    const GroupPoint ey = GroupPoint::polarized(0, t, 0);
    const GroupPoint loop = ex * ey * group_inv(ex) * group_inv(ey);
    expect_near(loop, 0, 0, t * t, 1e-16);
    const auto r = commutator_flow_residual(t, true);
    EXPECT_NEAR(r.endpoint.z(), t * t, 1e-14);
    EXPECT_LT(r.residual.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Group, PerturbedCommutatorIsThirdOrder) {
  const std::array<double, 3> ts{0.2, 0.1, 0.05};
  EXPECT_GE(commutator_order_slope(ts), 2.9);
  EXPECT_GT(commutator_flow_residual(0.1, false).residual.norm(), 0.0);
}
