#pragma once

// Multiresolution analysis generated by the Haar function phi = chi_Q of a
// lattice tile Q, with dilation A = delta_s (s = 1/t) and lattice K = Z^3.
//
// Level j is spanned by phi_{j,gamma}(x) = chi_Q(gamma^{-1} A^j x), so V_j
// consists of the f with f o A^{-j} in V_0 and grows with j. Inner products
// use the left-Haar (Lebesgue) measure, which A^j scales by s^{4j}.

#include "heisen/fundamental.hpp"
#include "heisen/ifs.hpp"
#include "heisen/voxel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace heisen {

class SingularGram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values at the cell centers of a grid, integrated with the midpoint rule.
struct SampledFunction {
  VoxelGrid grid;
  std::vector<double> values;

  static SampledFunction sample(const VoxelGrid& grid, const std::function<double(const Eigen::Vector3d&)>& f,
                                unsigned threads = 0);
  [[nodiscard]] double norm_sq() const;
};

/// phi = chi_Q together with the overlap table a(eta) = mu(Q cap eta Q).
class ScalingFunction {
 public:
  /// Throws std::invalid_argument for an empty Q, ModelMismatch for a
  /// symmetric grid.
  explicit ScalingFunction(VoxelSet q, double s = 2.0, unsigned threads = 0);

  [[nodiscard]] const VoxelSet& tile() const { return *q_; }
  [[nodiscard]] double norm_sq() const { return norm_sq_; }
  [[nodiscard]] double scale() const { return s_; }
  /// Nonzero overlaps, symmetrized as (a(eta) + a(eta^{-1})) / 2.
  [[nodiscard]] const std::map<LatticePoint, double>& overlaps() const { return overlaps_; }
  [[nodiscard]] double overlap(const LatticePoint& eta) const;
  [[nodiscard]] const LatticeLocator& locator() const { return locator_; }
  /// Smallest Gram eigenvalue over the 3x3x3 lattice window.
  [[nodiscard]] double riesz_floor() const { return riesz_floor_; }

 private:
  std::shared_ptr<const VoxelSet> q_;
  double s_;
  double norm_sq_ = 0.0;
  LatticeLocator locator_;
  std::map<LatticePoint, double> overlaps_;
  double riesz_floor_ = 0.0;
};

/// ||chi_Q o A^{-1} - sum_i chi_Q o L_gamma_i^{-1}||^2 / ||chi_Q o A^{-1}||^2.
double two_scale_residual(const IfsSystem& sys, const VoxelSet& q, unsigned threads = 0);

struct GramReport {
  std::vector<LatticePoint> window;  // |m|, |n|, |k| <= range
  Eigen::MatrixXd matrix;            // <phi o L_a^{-1}, phi o L_b^{-1}>
  double alpha1 = 0.0;               // smallest eigenvalue
  double alpha2 = 0.0;               // largest eigenvalue
  double off_diagonal_mass = 0.0;    // sum |G_ab|, a != b, over the trace
};

GramReport gram_riesz_bounds(const ScalingFunction& phi, int lattice_range);

struct LevelProjection {
  int level = 0;
  std::vector<LatticePoint> gammas;  // sorted
  std::vector<double> coefficients;
  VoxelGrid grid;                // samples the projection was computed on
  double f_norm = 0.0;           // ||f||
  double projection_norm = 0.0;  // ||P_j f||
  double l2_error = 0.0;         // ||f - P_j f|| / ||f||

  [[nodiscard]] double coefficient(const LatticePoint& gamma) const;
};

/// Orthogonal projection onto V_j. For j >= 0 the inner products and the Gram
/// matrix come from the same samples, with f extended by zero over the tiles it
/// meets; coarser tiles dwarf the grid and use the overlap table of Q. Throws
/// SingularGram when the Riesz floor of phi is below 1e-8 * mu(Q).
LevelProjection project_onto_level(const SampledFunction& f, int level, const ScalingFunction& phi,
                                   unsigned threads = 0);

/// sum_gamma c_gamma phi_{j,gamma} at the cell centers of a grid.
SampledFunction evaluate_projection(const LevelProjection& p, const ScalingFunction& phi, const VoxelGrid& grid,
                                    unsigned threads = 0);

/// f extended by zero, on the same cell lattice, over the level-j tiles that
/// meet its grid.
SampledFunction pad_to_tiles(const SampledFunction& f, int level, const ScalingFunction& phi, unsigned threads = 0);

/// ||P_j(P_{j+1} f) - P_j f|| / ||f|| for j >= 0.
double nesting_residual(const SampledFunction& f, int level, const ScalingFunction& phi, unsigned threads = 0);

struct TestFunction {
  std::string name;
  std::function<double(const Eigen::Vector3d&)> f;
  VoxelGrid grid;  // covers the support of f
  bool density = false;     // errors over levels j >= 0
  bool triviality = false;  // norms over levels j < 0
};

/// exp(-|p - c|^2 / (2 sigma^2)) in coordinates, on the box c +- 4 sigma.
TestFunction gaussian_test(const Eigen::Vector3d& center, double sigma, int resolution);
/// Indicator of [0, 1]^3.
TestFunction unit_box_test(int resolution);
/// phi itself, sampled on the grid of Q.
TestFunction generator_test(const ScalingFunction& phi);

struct InvarianceReport {
  LatticePoint shift;
  double residual = 0.0;  // || c'(gamma) - c(shift^{-1} gamma) || / ||c||
  bool argmax_maps = false;
};

/// Level-0 coefficients of f and of f o L_shift^{-1}, the latter sampled on a
/// fresh grid over the translated support.
InvarianceReport invariance_check(const TestFunction& test, const LatticePoint& shift, const ScalingFunction& phi,
                                  unsigned threads = 0);

struct WaveletBank {
  Eigen::Matrix<double, 16, 16> matrix;
  /// max |H H^T - I|
  [[nodiscard]] double orthogonality_residual() const;
};

/// H2 (x) H2 (x) H4 over the digit index (e1 * 2 + e2) * 4 + e3, first row
/// constant.
WaveletBank build_wavelet_bank();

struct ParsevalReport {
  double parseval_residual = 0.0;        // |sum piece masses - sum w^2|
  double reconstruction_residual = 0.0;  // max |H^T w - c|
  std::size_t unassigned_voxels = 0;     // voxels of Q in no piece F_i(Q)
};

/// A random element of V_1 restricted to Q, constant on each piece F_i(Q),
/// through the wavelet bank and back. Needs s = 2.
ParsevalReport parseval_check(const IfsSystem& sys, const ScalingFunction& phi, std::uint64_t seed);

struct MraTolerances {
  double two_scale = 0.03;
  double riesz_band = 0.05;
  double off_diagonal = 0.02;
  double nesting = 0.02;
  double invariance = 0.02;
  double parseval = 1e-10;
};

struct CurvePoint {
  std::string function;
  int level = 0;
  double value = 0.0;
};

struct MraReport {
  double refinement_residual = 0.0;
  GramReport riesz;
  double nesting_residual = 0.0;  // max over test functions and listed pairs j, j + 1 >= 0
  std::vector<CurvePoint> density_curve;
  std::vector<CurvePoint> triviality_curve;
  InvarianceReport invariance;
  ParsevalReport parseval;
  bool density_decreasing = false;
  bool triviality_decreasing = false;
  bool verdict = false;
};

struct MraOptions {
  int riesz_range = 2;
  LatticePoint shift{1, -1, 2};
  std::uint64_t seed = 5;
  MraTolerances tol;
};

/// Runs every check above. Throws std::invalid_argument for an empty level list.
MraReport mra_diagnostics(const IfsSystem& sys, const ScalingFunction& phi, const std::vector<int>& levels,
                          const std::vector<TestFunction>& tests, const MraOptions& options = {},
                          unsigned threads = 0);

}  // namespace heisen
