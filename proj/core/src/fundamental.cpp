#include "heisen/fundamental.hpp"

#include "heisen/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heisen {

OrbitEnumeration enumerate_orbit_images(const GroupPoint& p0, double epsilon, Metric metric, double safety_bound) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("enumeration radius must be positive");
  if (epsilon > safety_bound) throw std::invalid_argument("enumeration radius exceeds the safety bound");
  const GroupPoint base = convert_model(p0, Model::polarized);

  OrbitEnumeration result;
  result.epsilon = epsilon;
  result.metric = metric;
  result.planar_bound = static_cast<std::int64_t>(std::floor(epsilon));
  result.height_bound = epsilon * epsilon / (2.0 * std::numbers::pi) + (metric == Metric::contraction ? epsilon : 0.0);

  const GroupPoint base_inv = group_inv(base);
  for (std::int64_t m = -result.planar_bound; m <= result.planar_bound; ++m) {
    for (std::int64_t n = -result.planar_bound; n <= result.planar_bound; ++n) {
      // z_sym(p0^{-1} gamma p0) is k plus a constant depending on (m, n)
      const GroupPoint g0 = group_mul(group_mul(base_inv, LatticePoint{m, n, 0}.to_point()), base);
      const double offset = convert_model(g0, Model::symmetric).z;
      const auto k_lo = static_cast<std::int64_t>(std::ceil(-result.height_bound - offset));
      const auto k_hi = static_cast<std::int64_t>(std::floor(result.height_bound - offset));
      for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        const LatticePoint gamma{m, n, k};
        if (gamma.is_identity()) continue;
        ++result.candidates;
        const double d = distance(metric, base, group_mul(gamma.to_point(), base));
        if (d < epsilon) result.images.push_back({gamma, d});
      }
    }
  }
  std::sort(result.images.begin(), result.images.end(), [](const OrbitImage& a, const OrbitImage& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.gamma < b.gamma;
  });
  return result;
}

Eigen::Vector3d lattice_pullback(const LatticePoint& gamma, const Eigen::Vector3d& x) {
  const auto m = static_cast<double>(gamma.m);
  const auto n = static_cast<double>(gamma.n);
  const auto k = static_cast<double>(gamma.k);
  return {x.x() - m, x.y() - n, x.z() - k + m * n - m * x.y()};
}

LatticeLocator::LatticeLocator(const VoxelSet& set, std::int64_t range) : set_(&set), range_(range) {
  if (set.grid().model != Model::polarized) {
    throw ModelMismatch("lattice translates need a polarized voxel grid");
  }
  if (const auto b = set.occupied_bounds()) {
    bounds_ = *b;
    empty_ = false;
  }
}

void LatticeLocator::translates_containing(const Eigen::Vector3d& x, std::vector<LatticePoint>& out) const {
  if (empty_) return;
  const auto clamp = [this](double v, bool upper) {
    const double r = static_cast<double>(range_);
    return static_cast<std::int64_t>(upper ? std::min(std::floor(v), r) : std::max(std::ceil(v), -r));
  };
  const std::int64_t m_lo = clamp(x.x() - bounds_.hi[0], false);
  const std::int64_t m_hi = clamp(x.x() - bounds_.lo[0], true);
  const std::int64_t n_lo = clamp(x.y() - bounds_.hi[1], false);
  const std::int64_t n_hi = clamp(x.y() - bounds_.lo[1], true);
  for (std::int64_t m = m_lo; m <= m_hi; ++m) {
    for (std::int64_t n = n_lo; n <= n_hi; ++n) {
      // pulled-back height is z - k + m n - m y
      const double shifted = x.z() + static_cast<double>(m * n) - static_cast<double>(m) * x.y();
      const std::int64_t k_lo = clamp(shifted - bounds_.hi[2], false);
      const std::int64_t k_hi = clamp(shifted - bounds_.lo[2], true);
      for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        const LatticePoint gamma{m, n, k};
        if (set_->contains(lattice_pullback(gamma, x))) out.push_back(gamma);
      }
    }
  }
}

int LatticeLocator::multiplicity(const Eigen::Vector3d& x) const {
  std::vector<LatticePoint> hits;
  translates_containing(x, hits);
  return static_cast<int>(hits.size());
}

// ---------------------------------------------------------------------------

VoxelGrid dirichlet_grid(const GroupPoint& p0, int resolution, Metric metric) {
  const GroupPoint b = convert_model(p0, Model::polarized);
  // CC cells are wider: vertical distances grow like sqrt(|z|), so points far
  // out in the plane can still be closest to p0.
  const double h = metric == Metric::cc ? 1.25 : 1.0;
  const double w = metric == Metric::cc ? 1.5 : 1.0;
  Box3 box;
  box.lo = {b.x - w, b.y - w, b.z - h};
  box.hi = {b.x + w, b.y + w, b.z + h};
  return VoxelGrid::uniform(box, resolution, Model::polarized);
}

DirichletResult dirichlet_cell(const DirichletSpec& spec, const VoxelGrid& grid, unsigned threads) {
  grid.validate();
  if (*std::min_element(grid.resolution.begin(), grid.resolution.end()) < 32) {
    throw std::invalid_argument("Dirichlet grid too coarse (need at least 32 cells per axis)");
  }
  if (grid.model != Model::polarized) throw ModelMismatch("Dirichlet cells are built on a polarized grid");
  const GroupPoint p0 = convert_model(spec.base_point, Model::polarized);
  if (!grid.locate(p0.coords())) throw std::invalid_argument("grid box does not contain the base point");

  DirichletResult result{VoxelSet(grid), {}, 0.0, std::numeric_limits<double>::infinity(), false};
  const std::size_t total = grid.size();
  std::vector<double> to_base(total);
  parallel_for(
      total,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) to_base[i] = distance(spec.metric, grid.center_point(i), p0);
      },
      threads);

  for (std::size_t i = 0; i < total; ++i) {
    result.circumradius = std::max(result.circumradius, to_base[i]);
    const auto c = grid.cell(i);
    bool boundary = false;
    for (int a = 0; a < 3; ++a) boundary = boundary || c[a] == 0 || c[a] == grid.resolution[a] - 1;
    if (boundary) result.inradius = std::min(result.inradius, to_base[i]);
  }
  if (result.inradius < spec.enumeration_radius) {
    throw std::invalid_argument("grid box does not contain the metric ball of the enumeration radius");
  }

  auto cells = result.cell.cells();
  if (spec.trivial_group) {
    std::fill(cells.begin(), cells.end(), 1);
    result.touches_boundary = true;
    return result;
  }

  // A voxel can only be claimed by gamma p0 if d(p0, gamma p0) <= 2 d(q, p0).
  result.images = enumerate_orbit_images(p0, 2.0 * result.circumradius * (1.0 + 1e-9), spec.metric,
                                         std::max(16.0, 2.0 * result.circumradius * (1.0 + 1e-9)));
  std::vector<GroupPoint> image_points;
  for (const auto& img : result.images.images) image_points.push_back(group_mul(img.gamma.to_point(), p0));

  parallel_for(
      total,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const GroupPoint q = grid.center_point(i);
          const double own = to_base[i];
          bool inside = true;
          for (std::size_t j = 0; j < image_points.size() && inside; ++j) {
            if (result.images.images[j].distance > 2.0 * own * (1.0 + 1e-12)) break;
            inside = !(distance(spec.metric, q, image_points[j]) < own);
          }
          cells[i] = inside ? 1 : 0;
        }
      },
      threads, 1024);

  for (std::size_t i = 0; i < total && !result.touches_boundary; ++i) {
    if (!cells[i]) continue;
    const auto c = grid.cell(i);
    for (int a = 0; a < 3; ++a) {
      result.touches_boundary = result.touches_boundary || c[a] == 0 || c[a] == grid.resolution[a] - 1;
    }
  }
  return result;
}

std::vector<Eigen::Vector3d> window_samples(const Box3& window, int samples_per_axis) {
  if (samples_per_axis <= 0) throw std::invalid_argument("need a positive sample count");
  std::vector<Eigen::Vector3d> points;
  points.reserve(static_cast<std::size_t>(samples_per_axis) * samples_per_axis * samples_per_axis);
  const auto coord = [&](int axis, int i) {
    return window.lo[axis] + (i + 0.5) * (window.hi[axis] - window.lo[axis]) / samples_per_axis;
  };
  for (int iz = 0; iz < samples_per_axis; ++iz) {
    for (int iy = 0; iy < samples_per_axis; ++iy) {
      for (int ix = 0; ix < samples_per_axis; ++ix) points.emplace_back(coord(0, ix), coord(1, iy), coord(2, iz));
    }
  }
  return points;
}

FundamentalReport verify_fundamental_set(const VoxelSet& f, const Box3& window, int lattice_range,
                                         int samples_per_axis, const FundamentalTolerances& tol, unsigned threads) {
  FundamentalReport report;
  report.measure = f.measure();
  if (f.empty()) return report;

  const VoxelSet interior = erode(f);
  const VoxelSet closure = dilate(f);
  report.closure_residual = symmetric_difference_measure(f, dilate(interior)) / report.measure;

  const LatticeLocator cover(closure, lattice_range);
  const LatticeLocator open(interior, lattice_range);
  const auto points = window_samples(window, samples_per_axis);
  report.samples = points.size();

  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (points.size() + kChunk - 1) / kChunk;
  std::vector<std::size_t> covered(chunks, 0);
  std::vector<std::size_t> overlapping(chunks, 0);
  parallel_for(
      points.size(),
      [&](std::size_t begin, std::size_t end) {
        std::vector<LatticePoint> hits;
        for (std::size_t i = begin; i < end; ++i) {
          hits.clear();
          cover.translates_containing(points[i], hits);
          covered[begin / kChunk] += hits.empty() ? 0 : 1;
          hits.clear();
          open.translates_containing(points[i], hits);
          overlapping[begin / kChunk] += hits.size() > 1 ? 1 : 0;
        }
      },
      threads, kChunk);

  std::size_t n_cov = 0;
  std::size_t n_over = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    n_cov += covered[c];
    n_over += overlapping[c];
  }
  report.covering_fraction = static_cast<double>(n_cov) / static_cast<double>(points.size());
  report.overlap_fraction = static_cast<double>(n_over) / static_cast<double>(points.size());
  report.closure_ok = report.closure_residual <= tol.closure;
  report.covering_ok = report.covering_fraction >= tol.covering;
  report.overlap_ok = report.overlap_fraction <= tol.overlap;
  return report;
}

}  // namespace heisen
