#pragma once

// Isometries of the Heisenberg group, their conjugation by dilations, coset
// representatives of K / a(K) for the integer lattice K, and the circumcenter
// construction of a fixed point for a finite isometry group.

#include "heisen/group.hpp"
#include "heisen/metrics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace heisen {

class Isometry {
 public:
  enum class Kind : std::uint8_t { translation, rotation, composition };

  /// p -> gamma * p.
  static Isometry translation(const GroupPoint& gamma);
  static Isometry translation(const LatticePoint& gamma) { return translation(gamma.to_point()); }
  /// p -> c * R_theta(c^{-1} * p), R_theta rotating (x, y) and fixing z.
  /// Symmetric model only.
  static Isometry rotation(const GroupPoint& center, double theta);
  /// parts[0] o parts[1] o ... (the last part is applied first).
  static Isometry compose(std::vector<Isometry> parts);
  static Isometry identity(Model model) { return translation(GroupPoint::identity(model)); }

  [[nodiscard]] Kind kind() const;
  [[nodiscard]] GroupPoint apply(const GroupPoint& p) const;
  [[nodiscard]] GroupPoint operator()(const GroupPoint& p) const { return apply(p); }
  [[nodiscard]] Isometry inverse() const;
  [[nodiscard]] std::string describe() const;

  /// Translation vector, rotation center/angle, or the composed parts.
  [[nodiscard]] const GroupPoint& gamma() const;
  [[nodiscard]] const GroupPoint& center() const;
  [[nodiscard]] double angle() const;
  [[nodiscard]] const std::vector<Isometry>& parts() const;

 private:
  struct Translation {
    GroupPoint gamma;
  };
  struct Rotation {
    GroupPoint center;
    double theta = 0.0;
  };
  struct Composition {
    std::vector<Isometry> parts;
  };
  std::variant<Translation, Rotation, Composition> rep_;

  explicit Isometry(std::variant<Translation, Rotation, Composition> rep) : rep_(std::move(rep)) {}
};

inline GroupPoint apply_isometry(const Isometry& j, const GroupPoint& p) { return j.apply(p); }

/// A smooth self-map in coordinates, used to test maps that are not isometries.
using PointMap = std::function<GroupPoint(const GroupPoint&)>;

struct InfinitesimalCheck {
  bool passed = false;
  double max_residual = 0.0;
  int samples = 0;
};

/// max over sampled p of || dPsi(p) [g_p] dPsi(p)^T - [g_{Psi(p)}] ||_max, with a
/// central-difference Jacobian. Sample points are drawn from [-2, 2]^3.
InfinitesimalCheck check_infinitesimal_isometry(const PointMap& psi, Model model, int samples, double tol,
                                                std::uint64_t seed = 1);
InfinitesimalCheck check_infinitesimal_isometry(const Isometry& j, Model model, int samples, double tol,
                                                std::uint64_t seed = 1);

/// a(J) = A o J o A^{-1} with A = delta_{1/t}.
Isometry conjugate_isometry(double t, const Isometry& j);

/// The integer s = 1/t; throws unless 1/t is a positive integer.
int dilation_factor(double t);

/// Canonical transversal of K / a(K): eps1, eps2 in [0, s), eps3 in [0, s^2).
std::vector<LatticePoint> coset_representatives(double t);

struct CosetDecomposition {
  LatticePoint rep;      // canonical representative
  LatticePoint quotient; // gamma = rep * delta_s(quotient)
};

/// Unique decomposition gamma = rep * delta_s(quotient).
CosetDecomposition decompose_coset(const LatticePoint& gamma, int s);

/// delta_s on lattice points.
LatticePoint dilate_lattice(int s, const LatticePoint& gamma);

/// Whether reps contain exactly one element of every class of K / a(K).
bool is_transversal(const std::vector<LatticePoint>& reps, int s);

class FiniteGroupAction {
 public:
  FiniteGroupAction() = default;
  explicit FiniteGroupAction(std::vector<Isometry> elements) : elements_(std::move(elements)) {}

  /// n rotations by multiples of 2 pi / n about the vertical axis through center.
  static FiniteGroupAction cyclic_rotations(const GroupPoint& center, int n);

  [[nodiscard]] const std::vector<Isometry>& elements() const { return elements_; }
  [[nodiscard]] std::size_t size() const { return elements_.size(); }

  /// Closure under composition and inverses, checked pointwise on samples
  /// (composition table lookup). Returns false on the first failure.
  [[nodiscard]] bool verify_closure(Model model, int samples = 16, double tol = 1e-9, std::uint64_t seed = 7) const;

 private:
  std::vector<Isometry> elements_;
};

struct OrbitReport {
  std::vector<GroupPoint> points;
  double diameter = 0.0;
  Metric metric = Metric::contraction;
};

OrbitReport orbit(const FiniteGroupAction& h, const GroupPoint& p, Metric metric);

struct FixedPointResult {
  GroupPoint point;
  double max_displacement_contraction = 0.0;  // max over Psi of d_R(Psi x, x)
  double max_displacement_cc = 0.0;           // max over Psi of d(Psi x, x)
  double orbit_diameter = 0.0;
  double radius = 0.0;                        // minimax radius at x
  int iterations = 0;
  bool near_radius_bound = false;             // orbit diameter above 0.4 radius_bound
};

/// Circumcenter of the orbit H.p for the chosen metric, found by Nelder-Mead
/// from the coordinate centroid of the orbit. Throws std::invalid_argument if
/// H is not closed (e.g. contains a nontrivial translation) or the orbit
/// diameter exceeds radius_bound / 2, and ConvergenceError if the returned
/// point is displaced by more than tol.
FixedPointResult fixed_point_center(const FiniteGroupAction& h, const GroupPoint& p, Metric metric,
                                    double radius_bound, double tol);

}  // namespace heisen
