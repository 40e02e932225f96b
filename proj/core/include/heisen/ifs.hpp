#pragma once

// The iterated function system F_i = delta_t o L_{gamma_i}, gamma_i running
// over a transversal of K / delta_{1/t}(K), its attractor Q on voxel grids, and
// the self-similarity and tiling checks for Q.
//
// In polarized coordinates, with s = 1/t and gamma = (m, n, k):
//
//   F(x, y, z) = ((m + x) / s, (n + y) / s, (k + z + m y) / s^2).

#include "heisen/group.hpp"
#include "heisen/voxel.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace heisen {

struct IfsSystem {
  double t = 0.5;
  int s = 2;
  std::vector<LatticePoint> reps;

  [[nodiscard]] std::size_t size() const { return reps.size(); }
  /// F_i and its inverse on polarized coordinates.
  [[nodiscard]] Eigen::Vector3d map(std::size_t i, const Eigen::Vector3d& p) const;
  [[nodiscard]] Eigen::Vector3d inverse_map(std::size_t i, const Eigen::Vector3d& p) const;
  [[nodiscard]] GroupPoint map(std::size_t i, const GroupPoint& p) const;
};

struct ContractionCheck {
  double max_cc_error = 0.0;            // max |d(F p, F q) / (t d(p, q)) - 1|
  double max_contraction_ratio = 0.0;   // max d_R(F p, F q) / d_R(p, q)
  int pairs = 0;
};

/// Builds the system from the canonical transversal (or the given one) and
/// checks the contraction ratios on sampled pairs; throws std::invalid_argument
/// if reps is not a transversal or a ratio check fails.
IfsSystem build_ifs(double t, std::vector<LatticePoint> reps = {});
ContractionCheck check_contraction(const IfsSystem& sys, int pairs, std::uint64_t seed = 11);

struct AttractorBounds {
  double radius = 0.0;  // CC radius about the origin: t / (1 - t) * max |gamma_i|
  Box3 a_priori;        // coordinate box containing that ball
  Box3 invariant;       // least fixed point of B -> hull(U F_i(B)) below a_priori
  int iterations = 0;
};

AttractorBounds attractor_bounds(const IfsSystem& sys);
/// Grid with cell size (invariant extent) / cells, shifted off the invariant
/// box by a fraction of a cell and one cell wider per axis so it still covers it.
VoxelGrid attractor_grid(const IfsSystem& sys, int cells);

/// Seeds on an attractor grid: cells with centers in [0, 1]^3, or the single
/// cell containing the origin.
VoxelSet unit_cube_seed(const VoxelGrid& grid);
VoxelSet single_cell_seed(const VoxelGrid& grid, const Eigen::Vector3d& point = Eigen::Vector3d::Zero());

/// One step T(Q) = U_i F_i(Q): a cell is set when the preimage of its center
/// under some F_i lies in Q. While that loses more than half of the forward
/// images of set centers (a set too thin for the grid), those images are
/// added as well.
VoxelSet apply_ifs(const IfsSystem& sys, const VoxelSet& q, unsigned threads = 0);

struct TileResult {
  VoxelSet voxels;
  int iterations = 0;
  std::vector<double> symdiff_history;  // measure(T(Q_k) xor Q_k)
  double final_symdiff = 0.0;
  double measure = 0.0;
  double tolerance = 0.0;
  double decay_ratio = 0.0;  // geometric mean ratio of consecutive sym-diffs
  bool converged = false;
};

/// Iterates T from the seed until measure(T(Q) xor Q) < tol. tol <= 0 selects
/// one cell volume, i.e. an exact fixed point on the grid. Throws
/// ConvergenceError when max_iter is exhausted, std::invalid_argument for an
/// empty seed or one that leaves the grid.
TileResult attractor_fixed_point(const IfsSystem& sys, const VoxelSet& seed, int max_iter, double tol = 0.0,
                                 unsigned threads = 0);

/// Ratio estimate from a sym-diff history, skipping the first two steps and
/// values below `floor`.
double decay_ratio(const std::vector<double>& history, double floor);

inline double tile_measure(const VoxelSet& q) { return q.measure(); }

struct SelfSimilarityReport {
  double residual = 0.0;            // measure(A(Q) xor U L_gamma_i(Q)) / measure(A(Q))
  double two_scale_residual = 0.0;  // ||chi_Q o A^{-1} - sum chi_Q o L_gamma_i^{-1}||^2 / ||chi_Q o A^{-1}||^2
  double dilated_measure = 0.0;     // ||chi_Q o A^{-1}||^2 = measure(A(Q))
  double measure_ratio = 0.0;       // dilated_measure / (s^4 measure(Q))
};

/// Both residuals on a grid over A(Q) and the pieces L_gamma_i(Q), with the
/// resolution of Q's grid.
SelfSimilarityReport self_similarity(const IfsSystem& sys, const VoxelSet& q, unsigned threads = 0);
inline double verify_self_similarity(const IfsSystem& sys, const VoxelSet& q, unsigned threads = 0) {
  return self_similarity(sys, q, threads).residual;
}

struct TilingReport {
  std::map<int, std::size_t> histogram;  // multiplicity -> sample count
  double mean = 0.0;
  double fraction_one = 0.0;
  std::size_t samples = 0;
};

/// Multiplicity #{gamma : x in L_gamma(Q)} over a regular sample of the window.
TilingReport verify_tiling(const VoxelSet& q, const Box3& window, int lattice_range, int samples_per_axis = 64,
                           unsigned threads = 0);

/// Chaos-game point cloud on the attractor (for plots only).
std::vector<Eigen::Vector3d> chaos_game(const IfsSystem& sys, std::size_t points, std::uint64_t seed,
                                        std::size_t burn_in = 64);

}  // namespace heisen
