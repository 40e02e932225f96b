#pragma once

// Lattice orbits, Dirichlet cells and checks of the fundamental-set axioms:
//
//   (a) F is the closure of its interior,
//   (b) the lattice translates of F cover the group,
//   (c) translates of the interior of F are pairwise disjoint.
//
// The lattice K = Z^3 acts by left translation in polarized coordinates.

#include "heisen/group.hpp"
#include "heisen/metrics.hpp"
#include "heisen/voxel.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace heisen {

struct OrbitImage {
  LatticePoint gamma;
  double distance = 0.0;
};

struct OrbitEnumeration {
  std::vector<OrbitImage> images;  // sorted by distance, identity excluded
  double epsilon = 0.0;
  Metric metric = Metric::contraction;
  // Every gamma with d(p0, gamma p0) < epsilon satisfies |m|, |n| <= planar_bound
  // and |z_sym(p0^{-1} gamma p0)| <= height_bound; all such gamma were tested.
  std::int64_t planar_bound = 0;
  double height_bound = 0.0;
  std::size_t candidates = 0;
};

/// All nontrivial gamma with d(p0, gamma * p0) < epsilon. The search box comes
/// from two lower bounds on lengths: the planar displacement, and the height
/// bound |z| <= L^2 / (2 pi) (plus L for the contraction metric).
OrbitEnumeration enumerate_orbit_images(const GroupPoint& p0, double epsilon, Metric metric,
                                        double safety_bound = 16.0);

/// Finds every lattice translate of a voxel set that contains a point.
/// Requires a polarized grid.
class LatticeLocator {
 public:
  explicit LatticeLocator(const VoxelSet& set,
                          std::int64_t range = std::numeric_limits<std::int32_t>::max());

  /// Appends every gamma (|m|, |n|, |k| <= range) with gamma^{-1} * x in the set.
  void translates_containing(const Eigen::Vector3d& x, std::vector<LatticePoint>& out) const;
  [[nodiscard]] int multiplicity(const Eigen::Vector3d& x) const;
  [[nodiscard]] const VoxelSet& set() const { return *set_; }

 private:
  const VoxelSet* set_;
  Box3 bounds_;
  bool empty_ = true;
  std::int64_t range_;
};

/// gamma^{-1} * x in polarized coordinates.
Eigen::Vector3d lattice_pullback(const LatticePoint& gamma, const Eigen::Vector3d& x);

struct DirichletSpec {
  GroupPoint base_point = GroupPoint::polarized(0.5, 0.5, 0.5);
  Metric metric = Metric::contraction;
  double enumeration_radius = 0.5;  // metric ball that must fit in the grid
  bool trivial_group = false;       // K = {Id}
};

struct DirichletResult {
  VoxelSet cell;
  OrbitEnumeration images;
  double circumradius = 0.0;  // max distance from p0 to a voxel center
  double inradius = 0.0;      // min distance from p0 to a boundary voxel center
  bool touches_boundary = false;
};

/// Voxels whose center q satisfies d(q, p0) <= d(q, gamma p0) for every
/// lattice image with d(p0, gamma p0) < 2 * circumradius. Ties stay in the
/// cell, so the result is closed.
DirichletResult dirichlet_cell(const DirichletSpec& spec, const VoxelGrid& grid, unsigned threads = 0);

/// Default grid for dirichlet_cell: the box of half-widths (1, 1, 1) around p0,
/// (1.5, 1.5, 1.25) for the CC metric.
VoxelGrid dirichlet_grid(const GroupPoint& p0, int resolution, Metric metric = Metric::contraction);

struct FundamentalReport {
  double closure_residual = 0.0;  // measure(F xor open(F)) / measure(F)
  double covering_fraction = 0.0;
  double overlap_fraction = 0.0;
  std::size_t samples = 0;
  double measure = 0.0;
  bool closure_ok = false;
  bool covering_ok = false;
  bool overlap_ok = false;
  [[nodiscard]] bool passed() const { return closure_ok && covering_ok && overlap_ok; }
};

struct FundamentalTolerances {
  double closure = 0.1;
  double covering = 0.99;
  double overlap = 0.01;
};

/// Checks (a)-(c) on a regular sample of the window. The closure of F is its
/// one-voxel dilation and the interior its one-voxel erosion.
FundamentalReport verify_fundamental_set(const VoxelSet& f, const Box3& window, int lattice_range,
                                         int samples_per_axis = 64, const FundamentalTolerances& tol = {},
                                         unsigned threads = 0);

/// Centers of a samples^3 regular grid over the window.
std::vector<Eigen::Vector3d> window_samples(const Box3& window, int samples_per_axis);

}  // namespace heisen
