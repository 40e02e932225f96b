#pragma once

// Exact arithmetic on the 3-dimensional Heisenberg group.
//
// Two coordinate models are supported:
//
//   polarized:  (x,y,z)(x',y',z') = (x+x', y+y', z+z' + x y')
//   symmetric:  (x,y,z)(x',y',z') = (x+x', y+y', z+z' + (x y' - y x')/2)
//
// The integer lattice Z^3 is a subgroup only in the polarized model, while
// rotations about the vertical axis are automorphisms only in the symmetric
// model. The two are related by z_sym = z_pol - x y / 2.

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <string_view>

namespace heisen {

enum class Model : std::uint8_t { polarized = 0, symmetric = 1 };

std::string_view to_string(Model model);
Model model_from_string(std::string_view name);

struct GroupPoint {
  Model model = Model::polarized;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static GroupPoint polarized(double x, double y, double z) { return {Model::polarized, x, y, z}; }
  static GroupPoint symmetric(double x, double y, double z) { return {Model::symmetric, x, y, z}; }
  static GroupPoint identity(Model model) { return {model, 0.0, 0.0, 0.0}; }
  static GroupPoint from_coords(Model model, const Eigen::Vector3d& c) { return {model, c.x(), c.y(), c.z()}; }

  [[nodiscard]] Eigen::Vector3d coords() const { return {x, y, z}; }
  [[nodiscard]] bool is_finite() const;

  friend bool operator==(const GroupPoint&, const GroupPoint&) = default;
};

/// Element (m, n, k) of the integer lattice, composed with the polarized law.
struct LatticePoint {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t k = 0;

  [[nodiscard]] GroupPoint to_point() const {
    return GroupPoint::polarized(static_cast<double>(m), static_cast<double>(n), static_cast<double>(k));
  }
  [[nodiscard]] bool is_identity() const { return m == 0 && n == 0 && k == 0; }

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

LatticePoint operator*(const LatticePoint& a, const LatticePoint& b);
LatticePoint lattice_inv(const LatticePoint& a);

/// Coordinate components of X1, X2, X3 (as columns) at a point.
struct FrameMatrix {
  Eigen::Matrix3d columns = Eigen::Matrix3d::Identity();

  [[nodiscard]] Eigen::Vector3d x1() const { return columns.col(0); }
  [[nodiscard]] Eigen::Vector3d x2() const { return columns.col(1); }
  [[nodiscard]] Eigen::Vector3d x3() const { return columns.col(2); }
  /// Columns spanning the horizontal distribution S.
  [[nodiscard]] Eigen::Matrix<double, 3, 2> horizontal() const { return columns.leftCols<2>(); }
};

/// Coordinate matrix of the sub-Riemannian cometric g_p = B_S B_S^T.
struct Cometric {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

class ModelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q);
GroupPoint group_inv(const GroupPoint& p);
GroupPoint convert_model(const GroupPoint& p, Model target);

inline GroupPoint operator*(const GroupPoint& p, const GroupPoint& q) { return group_mul(p, q); }

/// Homogeneous dilation (x,y,z) -> (t x, t y, t^2 z); throws for t <= 0.
GroupPoint dilate(double t, const GroupPoint& p);

/// exp(a X1 + b X2 + c X3) in the given model.
GroupPoint exp_algebra(Model model, const Eigen::Vector3d& coeffs);
/// Inverse of exp_algebra.
Eigen::Vector3d log_algebra(const GroupPoint& p);

FrameMatrix left_invariant_frame(const GroupPoint& p);
Cometric cometric(const GroupPoint& p);

// ---------------------------------------------------------------------------
// Vector fields, brackets and the Hormander flag.

using VectorField = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

/// Left-invariant frame field X_index (index in {1,2,3}) in the given model.
VectorField frame_field(Model model, int index);

/// [X,Y](p) = DY(p) X(p) - DX(p) Y(p) with central-difference Jacobians.
Eigen::Vector3d lie_bracket(const VectorField& X, const VectorField& Y, const Eigen::Vector3d& p,
                            double step = 1e-5);

/// Classical RK4 flow of X for time t from p.
Eigen::Vector3d flow_rk4(const VectorField& X, const Eigen::Vector3d& p, double t, int steps);

/// Numerical rank of span(D_p + [D_p, D_p]) for a distribution D.
int hormander_rank(std::span<const VectorField> distribution, const Eigen::Vector3d& p);
/// Same, for the horizontal distribution span{X1, X2} of the group at p.
int hormander_rank(const GroupPoint& p);
/// Numerical rank of the horizontal distribution alone at p.
int horizontal_rank(const GroupPoint& p);

struct CommutatorResult {
  Eigen::Vector3d endpoint = Eigen::Vector3d::Zero();
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
};

/// Composes e^{tX}, e^{tY}, e^{-tX}, e^{-tY} from the origin and compares with
/// the flow of [X,Y] for time t^2. With horizontal = true the pair is (X1, X2)
/// with exact group flows; otherwise a smooth perturbation of that pair,
/// integrated with RK4.
CommutatorResult commutator_flow_residual(double t, bool horizontal);

/// The perturbed (non-nilpotent) field pair used by commutator_flow_residual.
std::pair<VectorField, VectorField> perturbed_field_pair();

/// Least-squares slope of log|residual| against log t.
double commutator_order_slope(std::span<const double> ts);

}  // namespace heisen
