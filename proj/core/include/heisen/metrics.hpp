#pragma once

// Lengths of horizontal curves, the Carnot-Caratheodory distance d and the
// distance d_R of the Riemannian contraction in which X1, X2, X3 are
// orthonormal.
//
// Every distance is left-invariant, so each routine reduces (p, q) to
// (identity, p^{-1} q). Three independent routes are provided per metric
// where possible:
//
//   * closed form: the normal geodesics are circles lifted to the group; the
//     boundary problem reduces to one monotone scalar equation,
//   * shooting: Levenberg-Marquardt on the covector of the geodesic flow,
//   * control oracle: direct minimization over piecewise-constant controls.

#include "heisen/group.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace heisen {

enum class Metric : std::uint8_t { cc, contraction };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One piece of a piecewise-constant control: velocity u (frame
/// coefficients) held for `duration`.
struct ControlSegment {
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  double duration = 1.0;
};

/// dimension 2: horizontal (lengthy) curve, u(2) must be zero.
/// dimension 3: curve of the Riemannian contraction.
struct ControlPath {
  GroupPoint start;
  int dimension = 2;
  std::vector<ControlSegment> controls;
};

struct PathResult {
  GroupPoint endpoint;
  double length = 0.0;
};

/// Exact endpoint and length of a piecewise-constant control path.
PathResult integrate_path(const ControlPath& path);

/// Covector (h1, h2, h3) = (lambda(X1), lambda(X2), lambda(X3)) at the start.
struct GeodesicParams {
  Eigen::Vector3d covector = Eigen::Vector3d::Zero();
};

/// Closed-form endpoint of the normal geodesic after unit time.
GroupPoint geodesic_endpoint(const GroupPoint& start, const GeodesicParams& params, Metric metric);

/// Length of the unit-time normal geodesic with the given covector.
double geodesic_length(const GeodesicParams& params, Metric metric);

struct GeodesicTrace {
  GroupPoint endpoint;
  double max_hamiltonian_drift = 0.0;  // relative
};

/// RK4 integration of the Hamiltonian geodesic equations (unit time).
GeodesicTrace integrate_geodesic(const GroupPoint& start, const GeodesicParams& params, Metric metric,
                                 int steps = 2000);

/// Exact distances from the closed-form geodesic family.
double cc_distance(const GroupPoint& p, const GroupPoint& q);
double contraction_distance_exact(const GroupPoint& p, const GroupPoint& q);
double distance(Metric metric, const GroupPoint& p, const GroupPoint& q);

struct ShootResult {
  double distance = 0.0;
  GeodesicParams params;
  int converged_starts = 0;
  bool fell_back = false;  // no shooting solution; value from the control oracle
};

/// Geodesic shooting for d(p, q) from a grid of initial covectors.
ShootResult cc_distance_shoot(const GroupPoint& p, const GroupPoint& q);

struct OracleResult {
  double distance = 0.0;
  double endpoint_error = 0.0;
  ControlPath path;
  int converged_starts = 0;
};

/// Feasible upper bound on d(p, q) from optimized horizontal controls.
OracleResult cc_distance_upper(const GroupPoint& p, const GroupPoint& q, int segments = 64);

/// d_R(p, q) from optimized 3-dimensional controls.
OracleResult contraction_distance(const GroupPoint& p, const GroupPoint& q, int segments = 32);

struct Box3 {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
};

enum class DistanceBackend : std::uint8_t { closed_form, control_oracle };

struct DistanceEstimateReport {
  double c_fit = 0.0;
  int violations = 0;          // d > c_fit * sqrt(d_R)
  int ordering_violations = 0; // d_R > d (beyond solver tolerance)
  int samples = 0;
  int skipped = 0;             // p == q pairs
  Box3 box;
  std::vector<double> ratios;  // d / sqrt(d_R) per evaluated pair
};

/// Empirical constant c in d <= c * d_R^{1/2} over random pairs in a box.
DistanceEstimateReport estimate_constant(const Box3& box, int samples, std::uint64_t seed,
                                         DistanceBackend backend = DistanceBackend::closed_form,
                                         unsigned threads = 0);

}  // namespace heisen
