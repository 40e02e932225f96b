#include "heisen/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace heisen;

namespace {

const GroupPoint kOrigin = GroupPoint::identity(Model::polarized);

// Closed horizontal loop over a regular N-gon of unit area.
ControlPath polygon_loop(int n) {
  const double side = std::sqrt(4.0 * std::tan(std::numbers::pi / n) / n);
  ControlPath path;
  path.start = kOrigin;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    path.controls.push_back({Eigen::Vector3d(std::cos(a), std::sin(a), 0.0), side});
  }
  return path;
}

}  // namespace

TEST(Metrics, PolygonLoopsLiftToUnitHeight) {
  for (const int n : {3, 4, 6, 12, 64}) {
    const PathResult r = integrate_path(polygon_loop(n));
    EXPECT_NEAR(r.endpoint.x, 0.0, 1e-12);
    EXPECT_NEAR(r.endpoint.y, 0.0, 1e-12);
    EXPECT_NEAR(std::abs(r.endpoint.z), 1.0, 1e-12) << n;
    EXPECT_NEAR(r.length, std::sqrt(4.0 * n * std::tan(std::numbers::pi / n)), 1e-12);
  }
}

TEST(Metrics, VerticalDistanceIsIsoperimetric) {
  // the shortest loop of area |z| is a circle, so d(0, (0,0,z)) = 2 sqrt(pi |z|)
  for (const double z : {0.25, 1.0, 3.0}) {
    EXPECT_NEAR(cc_distance(kOrigin, GroupPoint::polarized(0, 0, z)), 2.0 * std::sqrt(std::numbers::pi * z), 1e-9);
  }
  const double d = cc_distance(kOrigin, GroupPoint::polarized(0, 0, 1));
  for (const int n : {3, 4, 6, 12, 64}) EXPECT_LT(d, integrate_path(polygon_loop(n)).length);
}

TEST(Metrics, HorizontalSegments) {
  EXPECT_NEAR(cc_distance(kOrigin, GroupPoint::polarized(1, 0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(cc_distance(GroupPoint::identity(Model::symmetric), GroupPoint::symmetric(0.6, -0.8, 0)), 1.0, 1e-12);
  EXPECT_NEAR(cc_distance_shoot(kOrigin, GroupPoint::polarized(1, 0, 0)).distance, 1.0, 1e-6);
}

TEST(Metrics, SymmetryLeftInvarianceAndHomogeneity) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 30; ++i) {
    const GroupPoint p = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const GroupPoint q = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const GroupPoint g = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const double d = cc_distance(p, q);
    EXPECT_NEAR(cc_distance(q, p), d, 1e-9);
    EXPECT_NEAR(cc_distance(g * p, g * q), d, 1e-9);
    EXPECT_NEAR(cc_distance(dilate(0.5, p), dilate(0.5, q)), 0.5 * d, 1e-9);
    EXPECT_NEAR(cc_distance(convert_model(p, Model::symmetric), convert_model(q, Model::symmetric)), d, 1e-9);
    EXPECT_LE(contraction_distance_exact(p, q), d + 1e-9);
  }
}

TEST(Metrics, ShootingMatchesClosedForm) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    const GroupPoint p = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const GroupPoint q = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const ShootResult s = cc_distance_shoot(p, q);
    EXPECT_FALSE(s.fell_back);
    EXPECT_NEAR(s.distance, cc_distance(p, q), 1e-6);
  }
}

TEST(Metrics, ControlOraclesBoundFromAbove) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 5; ++i) {
    const GroupPoint p = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const GroupPoint q = GroupPoint::polarized(u(rng), u(rng), u(rng));
    const double d = cc_distance(p, q);
    const OracleResult upper = cc_distance_upper(p, q);
    EXPECT_LT(upper.endpoint_error, 1e-6);
    EXPECT_GE(upper.distance, d * (1 - 1e-6));
    EXPECT_LE(upper.distance, d * 1.01);
    const double dr = contraction_distance_exact(p, q);
    const OracleResult r = contraction_distance(p, q);
    EXPECT_GE(r.distance, dr * (1 - 1e-6));
    EXPECT_LE(r.distance, dr * 1.01);
  }
}

TEST(Metrics, ClosedFormGeodesicMatchesIntegration) {
  for (const Metric metric : {Metric::cc, Metric::contraction}) {
    const GeodesicParams params{Eigen::Vector3d(0.6, -0.3, 2.5)};
    const GroupPoint exact = geodesic_endpoint(kOrigin, params, metric);
    const GeodesicTrace traced = integrate_geodesic(kOrigin, params, metric, 4000);
    EXPECT_LT((exact.coords() - traced.endpoint.coords()).norm(), 1e-9);
    EXPECT_LT(traced.max_hamiltonian_drift, 1e-9);
  }
}

TEST(Metrics, EstimateHasNoViolations) {
  const auto r = estimate_constant(Box3{}, 200, 4);
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.ordering_violations, 0);
  EXPECT_GT(r.c_fit, 0.0);
  EXPECT_EQ(r.ratios.size(), static_cast<std::size_t>(r.samples - r.skipped));
}

TEST(Metrics, MetricNames) {
  EXPECT_EQ(metric_from_string("cc"), Metric::cc);
  EXPECT_EQ(metric_from_string(to_string(Metric::contraction)), Metric::contraction);
  EXPECT_THROW(metric_from_string("euclid"), std::invalid_argument);
}
