#include "heisen/ifs.hpp"

#include "heisen/fundamental.hpp"
#include "heisen/isometry.hpp"
#include "heisen/metrics.hpp"
#include "heisen/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace heisen {

Eigen::Vector3d IfsSystem::map(std::size_t i, const Eigen::Vector3d& p) const {
  const LatticePoint& g = reps[i];
  const double inv = 1.0 / s;
  const auto m = static_cast<double>(g.m);
  return {(m + p.x()) * inv, (static_cast<double>(g.n) + p.y()) * inv,
          (static_cast<double>(g.k) + p.z() + m * p.y()) * inv * inv};
}

Eigen::Vector3d IfsSystem::inverse_map(std::size_t i, const Eigen::Vector3d& p) const {
  const Eigen::Vector3d scaled(s * p.x(), s * p.y(), static_cast<double>(s) * s * p.z());
  return lattice_pullback(reps[i], scaled);
}

GroupPoint IfsSystem::map(std::size_t i, const GroupPoint& p) const {
  const GroupPoint image = dilate(t, group_mul(reps[i].to_point(), convert_model(p, Model::polarized)));
  return convert_model(image, p.model);
}

ContractionCheck check_contraction(const IfsSystem& sys, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 2.0);
  ContractionCheck check;
  check.pairs = pairs;
  const auto sample = [&] { return GroupPoint::polarized(coord(rng), coord(rng), coord(rng)); };
  for (int k = 0; k < pairs; ++k) {
    const GroupPoint p = sample();
    const GroupPoint q = sample();
    const std::size_t i = static_cast<std::size_t>(k) % sys.size();
    const GroupPoint fp = sys.map(i, p);
    const GroupPoint fq = sys.map(i, q);
    const double d = cc_distance(p, q);
    if (d > 0.0) check.max_cc_error = std::max(check.max_cc_error, std::abs(cc_distance(fp, fq) / (sys.t * d) - 1.0));
    const double dr = contraction_distance_exact(p, q);
    if (dr > 0.0) {
      check.max_contraction_ratio = std::max(check.max_contraction_ratio, contraction_distance_exact(fp, fq) / dr);
    }
  }
  return check;
}

IfsSystem build_ifs(double t, std::vector<LatticePoint> reps) {
  IfsSystem sys;
  sys.s = dilation_factor(t);
  if (sys.s < 2) throw std::invalid_argument("the IFS needs t < 1");
  sys.t = 1.0 / sys.s;
  sys.reps = reps.empty() ? coset_representatives(sys.t) : std::move(reps);
  if (!is_transversal(sys.reps, sys.s)) {
    throw std::invalid_argument("representatives are not a transversal of K / delta_s(K)");
  }
  const ContractionCheck check = check_contraction(sys, 64);
  if (check.max_cc_error > 1e-6 || check.max_contraction_ratio > sys.t * (1.0 + 1e-9)) {
    throw std::invalid_argument("IFS maps fail the contraction check");
  }
  return sys;
}

// ---------------------------------------------------------------------------

AttractorBounds attractor_bounds(const IfsSystem& sys) {
  AttractorBounds b;
  double largest = 0.0;
  for (const auto& g : sys.reps) largest = std::max(largest, cc_distance(GroupPoint::identity(Model::polarized), g.to_point()));
  b.radius = sys.t / (1.0 - sys.t) * largest;
  // |x|, |y| <= r and |z_sym| <= r^2 / (2 pi); z_pol = z_sym + x y / 2.
  const double r = b.radius;
  const double zr = r * r / (2.0 * std::numbers::pi) + 0.5 * r * r;
  b.a_priori.lo = {-r, -r, -zr};
  b.a_priori.hi = {r, r, zr};

  // Each F_i is affine and separable enough that the image hull of a box is
  // exact: x and y scale independently, z adds m * y.
  Box3 box = b.a_priori;
  const double inv = sys.t;
  for (b.iterations = 1; b.iterations <= 400; ++b.iterations) {
    Box3 next;
    next.lo = {INFINITY, INFINITY, INFINITY};
    next.hi = {-INFINITY, -INFINITY, -INFINITY};
    for (const auto& g : sys.reps) {
      const auto m = static_cast<double>(g.m);
      const double y_lo = std::min(m * box.lo[1], m * box.hi[1]);
      const double y_hi = std::max(m * box.lo[1], m * box.hi[1]);
      const std::array<double, 3> lo{(m + box.lo[0]) * inv, (static_cast<double>(g.n) + box.lo[1]) * inv,
                                     (static_cast<double>(g.k) + box.lo[2] + y_lo) * inv * inv};
      const std::array<double, 3> hi{(m + box.hi[0]) * inv, (static_cast<double>(g.n) + box.hi[1]) * inv,
                                     (static_cast<double>(g.k) + box.hi[2] + y_hi) * inv * inv};
      for (int a = 0; a < 3; ++a) {
        next.lo[a] = std::min(next.lo[a], lo[a]);
        next.hi[a] = std::max(next.hi[a], hi[a]);
      }
    }
    const bool settled = next.lo == box.lo && next.hi == box.hi;
    box = next;
    if (settled) break;
  }
  // The iteration approaches its limit geometrically from outside; snap the
  // limit to the nearby rational with denominator 2^20 (s^2 - 1) so grids on
  // the box stay aligned with the lattice (e.g. exactly [0,1]^2 x [0,4/3]).
  const double denom = 1048576.0 * (static_cast<double>(sys.s) * sys.s - 1.0);
  for (int a = 0; a < 3; ++a) {
    for (double* v : {&box.lo[a], &box.hi[a]}) {
      const double snapped = std::round(*v * denom) / denom;
      if (std::abs(snapped - *v) < 1e-9) *v = snapped;
    }
  }
  b.invariant = box;
  for (int a = 0; a < 3; ++a) {
    if (box.lo[a] < b.a_priori.lo[a] - 1e-12 || box.hi[a] > b.a_priori.hi[a] + 1e-12) {
      throw std::logic_error("invariant box escapes the a-priori attractor bound");
    }
  }
  return b;
}

VoxelGrid attractor_grid(const IfsSystem& sys, int cells) {
  if (cells <= 0) throw std::invalid_argument("need a positive cell count");
  // Cell faces aligned with the invariant box put preimages of centers exactly
  // on faces and on tile boundaries; shifting by a generic fraction of a cell
  // keeps every preimage strictly inside a cell.
  constexpr std::array<double, 3> kShift{0.37, 0.37, 0.29};
  const Box3 inv = attractor_bounds(sys).invariant;
  VoxelGrid grid;
  grid.model = Model::polarized;
  for (int a = 0; a < 3; ++a) {
    const double h = (inv.hi[a] - inv.lo[a]) / cells;
    grid.box.lo[a] = inv.lo[a] - kShift[a] * h;
    grid.box.hi[a] = grid.box.lo[a] + (cells + 1) * h;
    grid.resolution[a] = cells + 1;
  }
  return grid;
}

VoxelSet unit_cube_seed(const VoxelGrid& grid) {
  return VoxelSet::from_predicate(grid, [](const Eigen::Vector3d& c) {
    return c.x() >= 0.0 && c.x() <= 1.0 && c.y() >= 0.0 && c.y() <= 1.0 && c.z() >= 0.0 && c.z() <= 1.0;
  });
}

VoxelSet single_cell_seed(const VoxelGrid& grid, const Eigen::Vector3d& point) {
  VoxelSet set(grid);
  const auto idx = grid.locate(point);
  if (!idx) throw std::invalid_argument("seed point lies outside the grid");
  set.set(*idx);
  return set;
}

VoxelSet apply_ifs(const IfsSystem& sys, const VoxelSet& q, unsigned threads) {
  const VoxelGrid& grid = q.grid();
  VoxelSet pulled(grid);
  auto pulled_cells = pulled.cells();
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
          const Eigen::Vector3d center = grid.center(c);
          for (std::size_t i = 0; i < sys.size(); ++i) {
            if (q.contains(sys.inverse_map(i, center))) {
              pulled_cells[c] = 1;
              break;
            }
          }
        }
      },
      threads);

  VoxelSet pushed(grid);
  auto pushed_cells = pushed.cells();
  const auto source = q.cells();
  for (std::size_t c = 0; c < source.size(); ++c) {
    if (!source[c]) continue;
    const Eigen::Vector3d center = grid.center(c);
    for (std::size_t i = 0; i < sys.size(); ++i) {
      if (const auto idx = grid.locate(sys.map(i, center))) pushed_cells[*idx] = 1;
    }
  }
  if (2 * pulled.count() >= pushed.count()) return pulled;
  return set_union(pulled, pushed);
}

double decay_ratio(const std::vector<double>& history, double floor) {
  double log_sum = 0.0;
  int n = 0;
  for (std::size_t k = 2; k + 1 < history.size(); ++k) {
    if (history[k] <= floor || history[k + 1] <= floor) break;
    log_sum += std::log(history[k + 1] / history[k]);
    ++n;
  }
  return n > 0 ? std::exp(log_sum / n) : 0.0;
}

TileResult attractor_fixed_point(const IfsSystem& sys, const VoxelSet& seed, int max_iter, double tol,
                                 unsigned threads) {
  if (seed.empty()) throw std::invalid_argument("attractor seed is empty");
  if (max_iter < 0) throw std::invalid_argument("iteration count must be nonnegative");
  const VoxelGrid& grid = seed.grid();
  if (grid.model != Model::polarized) throw ModelMismatch("attractor grids use polarized coordinates");
  const Box3 bound = attractor_bounds(sys).invariant;
  for (int a = 0; a < 3; ++a) {
    if (grid.box.lo[a] > bound.lo[a] + 1e-12 || grid.box.hi[a] < bound.hi[a] - 1e-12) {
      throw std::invalid_argument("grid box does not contain the invariant box of the attractor");
    }
  }

  TileResult result;
  result.tolerance = tol > 0.0 ? tol : grid.cell_volume();
  result.voxels = seed;
  for (int k = 0; k < max_iter; ++k) {
    VoxelSet next = apply_ifs(sys, result.voxels, threads);
    const double change = symmetric_difference_measure(next, result.voxels);
    result.symdiff_history.push_back(change);
    result.voxels = std::move(next);
    result.iterations = k + 1;
    if (result.voxels.empty()) throw std::invalid_argument("attractor iteration lost every cell");
    if (change < result.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.final_symdiff = result.symdiff_history.empty() ? 0.0 : result.symdiff_history.back();
  result.measure = result.voxels.measure();
  result.decay_ratio = decay_ratio(result.symdiff_history, 8.0 * grid.cell_volume() * grid.resolution[0]);
  if (max_iter > 0 && !result.converged) {
    throw ConvergenceError("attractor iteration did not reach the sym-diff tolerance within " +
                           std::to_string(max_iter) + " iterations");
  }
  return result;
}

// ---------------------------------------------------------------------------

SelfSimilarityReport self_similarity(const IfsSystem& sys, const VoxelSet& q, unsigned threads) {
  const auto bounds = q.occupied_bounds();
  if (!bounds) throw std::invalid_argument("self-similarity of an empty set");
  if (q.grid().model != Model::polarized) throw ModelMismatch("self-similarity needs a polarized grid");
  const double s = sys.s;
  // The grid covers A(Q) and every piece L_gamma_i(Q), so both sides of the
  // symmetric difference are seen in full.
  Box3 box;
  for (int a = 0; a < 3; ++a) {
    const double scale = a == 2 ? s * s : s;
    box.lo[a] = bounds->lo[a] * scale;
    box.hi[a] = bounds->hi[a] * scale;
  }
  for (const auto& g : sys.reps) {
    for (int corner = 0; corner < 8; ++corner) {
      const Eigen::Vector3d p((corner & 1) ? bounds->hi[0] : bounds->lo[0], (corner & 2) ? bounds->hi[1] : bounds->lo[1],
                              (corner & 4) ? bounds->hi[2] : bounds->lo[2]);
      const Eigen::Vector3d img = group_mul(g.to_point(), GroupPoint::polarized(p.x(), p.y(), p.z())).coords();
      for (int a = 0; a < 3; ++a) {
        box.lo[a] = std::min(box.lo[a], img[a]);
        box.hi[a] = std::max(box.hi[a], img[a]);
      }
    }
  }
  const VoxelGrid grid{box, q.grid().resolution, Model::polarized};

  constexpr std::size_t kChunk = 8192;
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  struct Tally {
    std::size_t dilated = 0;
    std::size_t mismatch = 0;
    double squared = 0.0;
  };
  std::vector<Tally> tallies(chunks);
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        Tally& tally = tallies[begin / kChunk];
        for (std::size_t c = begin; c < end; ++c) {
          const Eigen::Vector3d x = grid.center(c);
          const bool dilated = q.contains(Eigen::Vector3d(x.x() / s, x.y() / s, x.z() / (s * s)));
          int pieces = 0;
          for (const auto& g : sys.reps) pieces += q.contains(lattice_pullback(g, x)) ? 1 : 0;
          tally.dilated += dilated ? 1 : 0;
          tally.mismatch += dilated != (pieces > 0) ? 1 : 0;
          const double diff = (dilated ? 1.0 : 0.0) - pieces;
          tally.squared += diff * diff;
        }
      },
      threads, kChunk);

  Tally total;
  for (const auto& t : tallies) {
    total.dilated += t.dilated;
    total.mismatch += t.mismatch;
    total.squared += t.squared;
  }
  SelfSimilarityReport report;
  if (total.dilated == 0) throw std::invalid_argument("dilated set is empty on the grid");
  const auto n = static_cast<double>(total.dilated);
  report.residual = static_cast<double>(total.mismatch) / n;
  report.two_scale_residual = total.squared / n;
  report.dilated_measure = n * grid.cell_volume();
  report.measure_ratio = report.dilated_measure / (s * s * s * s * q.measure());
  return report;
}

TilingReport verify_tiling(const VoxelSet& q, const Box3& window, int lattice_range, int samples_per_axis,
                           unsigned threads) {
  const LatticeLocator locator(q, lattice_range);
  const auto points = window_samples(window, samples_per_axis);
  std::vector<int> multiplicity(points.size());
  parallel_for(
      points.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) multiplicity[i] = locator.multiplicity(points[i]);
      },
      threads);
  TilingReport report;
  report.samples = points.size();
  double sum = 0.0;
  for (int m : multiplicity) {
    ++report.histogram[m];
    sum += m;
  }
  report.mean = sum / static_cast<double>(points.size());
  report.fraction_one = static_cast<double>(report.histogram[1]) / static_cast<double>(points.size());
  return report;
}

std::vector<Eigen::Vector3d> chaos_game(const IfsSystem& sys, std::size_t points, std::uint64_t seed,
                                        std::size_t burn_in) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sys.size() - 1);
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> cloud;
  cloud.reserve(points);
  for (std::size_t k = 0; k < burn_in + points; ++k) {
    p = sys.map(pick(rng), p);
    if (k >= burn_in) cloud.push_back(p);
  }
  return cloud;
}

}  // namespace heisen
