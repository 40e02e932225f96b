#include "heisen/mra.hpp"

#include "heisen/metrics.hpp"
#include "heisen/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace heisen {

namespace {

constexpr std::size_t kChunk = 8192;

Eigen::Vector3d dilate_coords(const Eigen::Vector3d& x, double s_level) {
  return {s_level * x.x(), s_level * x.y(), s_level * s_level * x.z()};
}

double level_scale(double s, int level) { return std::pow(s, level); }

std::ptrdiff_t find_gamma(const std::vector<LatticePoint>& sorted, const LatticePoint& g) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), g);
  return it != sorted.end() && *it == g ? it - sorted.begin() : -1;
}

double weighted_l2(const std::vector<double>& a, const std::vector<double>& b, double weight) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum * weight);
}

}  // namespace

SampledFunction SampledFunction::sample(const VoxelGrid& grid, const std::function<double(const Eigen::Vector3d&)>& f,
                                        unsigned threads) {
  grid.validate();
  SampledFunction out{grid, std::vector<double>(grid.size())};
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out.values[i] = f(grid.center(i));
      },
      threads, kChunk);
  return out;
}

double SampledFunction::norm_sq() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return sum * grid.cell_volume();
}

ScalingFunction::ScalingFunction(VoxelSet q, double s, unsigned threads)
    : q_(std::make_shared<const VoxelSet>(std::move(q))), s_(s), locator_(*q_) {
  if (q_->empty()) throw std::invalid_argument("the generator needs a nonempty tile");
  if (!(s_ > 1.0)) throw std::invalid_argument("dilation factor must exceed 1");
  norm_sq_ = q_->measure();

  const VoxelGrid& grid = q_->grid();
  const auto cells = q_->cells();
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  std::vector<std::map<LatticePoint, std::size_t>> partial(chunks);
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        auto& counts = partial[begin / kChunk];
        std::vector<LatticePoint> hits;
        for (std::size_t i = begin; i < end; ++i) {
          if (!cells[i]) continue;
          hits.clear();
          locator_.translates_containing(grid.center(i), hits);
          for (const auto& g : hits) ++counts[g];
        }
      },
      threads, kChunk);

  std::map<LatticePoint, double> raw;
  for (const auto& counts : partial) {
    for (const auto& [g, c] : counts) raw[g] += static_cast<double>(c) * grid.cell_volume();
  }
  for (const auto& [g, a] : raw) {
    const auto inv = raw.find(lattice_inv(g));
    overlaps_[g] = 0.5 * (a + (inv == raw.end() ? 0.0 : inv->second));
    overlaps_[lattice_inv(g)] = overlaps_[g];
  }
  riesz_floor_ = gram_riesz_bounds(*this, 1).alpha1;
}

double ScalingFunction::overlap(const LatticePoint& eta) const {
  const auto it = overlaps_.find(eta);
  return it == overlaps_.end() ? 0.0 : it->second;
}

double two_scale_residual(const IfsSystem& sys, const VoxelSet& q, unsigned threads) {
  return self_similarity(sys, q, threads).two_scale_residual;
}

GramReport gram_riesz_bounds(const ScalingFunction& phi, int lattice_range) {
  if (lattice_range < 1) throw std::invalid_argument("lattice range must be at least 1");
  GramReport report;
  for (int m = -lattice_range; m <= lattice_range; ++m) {
    for (int n = -lattice_range; n <= lattice_range; ++n) {
      for (int k = -lattice_range; k <= lattice_range; ++k) report.window.push_back({m, n, k});
    }
  }
  const auto size = static_cast<Eigen::Index>(report.window.size());
  report.matrix.resize(size, size);
  double off = 0.0;
  for (Eigen::Index a = 0; a < size; ++a) {
    for (Eigen::Index b = 0; b < size; ++b) {
      const double v = phi.overlap(lattice_inv(report.window[a]) * report.window[b]);
      report.matrix(a, b) = v;
      if (a != b) off += std::abs(v);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.matrix, Eigen::EigenvaluesOnly);
  report.alpha1 = eig.eigenvalues().minCoeff();
  report.alpha2 = eig.eigenvalues().maxCoeff();
  report.off_diagonal_mass = off / report.matrix.trace();
  return report;
}

double LevelProjection::coefficient(const LatticePoint& gamma) const {
  const auto i = find_gamma(gammas, gamma);
  return i < 0 ? 0.0 : coefficients[static_cast<std::size_t>(i)];
}

namespace {

using Pair = std::pair<LatticePoint, LatticePoint>;

struct Moments {
  std::map<LatticePoint, double> b;  // <f, phi_{j,gamma}>
  std::map<Pair, double> gram;       // sample Gram, when requested
};

Moments collect(const SampledFunction& f, double sl, const ScalingFunction& phi, bool with_gram, unsigned threads) {
  const VoxelGrid& grid = f.grid;
  const double w = grid.cell_volume();
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  std::vector<Moments> partial(chunks);
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        Moments& m = partial[begin / kChunk];
        std::vector<LatticePoint> hits;
        for (std::size_t i = begin; i < end; ++i) {
          hits.clear();
          phi.locator().translates_containing(dilate_coords(grid.center(i), sl), hits);
          for (const auto& a : hits) {
            m.b[a] += f.values[i] * w;
            if (!with_gram) continue;
            for (const auto& c : hits) m.gram[{a, c}] += w;
          }
        }
      },
      threads, kChunk);
  Moments total;
  for (const auto& m : partial) {
    for (const auto& [g, v] : m.b) total.b[g] += v;
    for (const auto& [key, v] : m.gram) total.gram[key] += v;
  }
  return total;
}

}  // namespace

SampledFunction pad_to_tiles(const SampledFunction& f, int level, const ScalingFunction& phi, unsigned threads) {
  if (f.values.size() != f.grid.size()) throw std::invalid_argument("sample count does not match the grid");
  const double sl = level_scale(phi.scale(), level);
  const Moments m = collect(f, sl, phi, false, threads);
  const auto q = phi.tile().occupied_bounds();
  Box3 cover = f.grid.box;
  for (const auto& [g, unused] : m.b) {
    for (int corner = 0; corner < 8; ++corner) {
      const GroupPoint c = GroupPoint::polarized((corner & 1) ? q->hi[0] : q->lo[0], (corner & 2) ? q->hi[1] : q->lo[1],
                                                 (corner & 4) ? q->hi[2] : q->lo[2]);
      const Eigen::Vector3d img = dilate_coords(group_mul(g.to_point(), c).coords(), 1.0 / sl);
      for (int a = 0; a < 3; ++a) {
        cover.lo[a] = std::min(cover.lo[a], img[a]);
        cover.hi[a] = std::max(cover.hi[a], img[a]);
      }
    }
  }
  // whole cells on the same lattice, so the original samples are kept as they are
  VoxelGrid grid = f.grid;
  std::array<int, 3> before{};
  for (int a = 0; a < 3; ++a) {
    const double h = f.grid.cell_size(a);
    before[a] = static_cast<int>(std::ceil((f.grid.box.lo[a] - cover.lo[a]) / h - 1e-9));
    const int after = static_cast<int>(std::ceil((cover.hi[a] - f.grid.box.hi[a]) / h - 1e-9));
    grid.box.lo[a] = f.grid.box.lo[a] - before[a] * h;
    grid.resolution[a] = f.grid.resolution[a] + before[a] + after;
    grid.box.hi[a] = grid.box.lo[a] + grid.resolution[a] * h;
  }
  SampledFunction out{grid, std::vector<double>(grid.size(), 0.0)};
  for (int iz = 0; iz < f.grid.resolution[2]; ++iz) {
    for (int iy = 0; iy < f.grid.resolution[1]; ++iy) {
      for (int ix = 0; ix < f.grid.resolution[0]; ++ix) {
        out.values[grid.index(ix + before[0], iy + before[1], iz + before[2])] = f.values[f.grid.index(ix, iy, iz)];
      }
    }
  }
  return out;
}

LevelProjection project_onto_level(const SampledFunction& f, int level, const ScalingFunction& phi,
                                   unsigned threads) {
  if (f.values.size() != f.grid.size()) throw std::invalid_argument("sample count does not match the grid");
  if (phi.riesz_floor() < 1e-8 * phi.norm_sq()) {
    throw SingularGram("Gram matrix of the generator is numerically singular");
  }
  const double sl = level_scale(phi.scale(), level);
  const bool sampled_gram = level >= 0;

  LevelProjection p;
  p.level = level;
  p.f_norm = std::sqrt(f.norm_sq());
  p.grid = f.grid;
  Moments m;
  if (sampled_gram) {
    const SampledFunction padded = pad_to_tiles(f, level, phi, threads);
    p.grid = padded.grid;
    m = collect(padded, sl, phi, true, threads);
  } else {
    m = collect(f, sl, phi, false, threads);
  }
  if (m.b.empty()) {
    p.l2_error = p.f_norm > 0.0 ? 1.0 : 0.0;
    return p;
  }

  Eigen::VectorXd b(static_cast<Eigen::Index>(m.b.size()));
  for (const auto& [g, v] : m.b) {
    b(static_cast<Eigen::Index>(p.gammas.size())) = v;
    p.gammas.push_back(g);
  }
  std::vector<Eigen::Triplet<double>> entries;
  if (sampled_gram) {
    for (const auto& [key, v] : m.gram) {
      entries.emplace_back(static_cast<int>(find_gamma(p.gammas, key.first)),
                           static_cast<int>(find_gamma(p.gammas, key.second)), v);
    }
  } else {
    // <phi_{j,a}, phi_{j,b}> = s^{-4j} a(a^{-1} b)
    const double gram_scale = 1.0 / std::pow(sl, 4);
    for (std::size_t i = 0; i < p.gammas.size(); ++i) {
      for (const auto& [eta, a] : phi.overlaps()) {
        const auto j = find_gamma(p.gammas, p.gammas[i] * eta);
        if (j >= 0) entries.emplace_back(static_cast<int>(i), static_cast<int>(j), a * gram_scale);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(p.gammas.size());
  Eigen::SparseMatrix<double> gram(n, n);
  gram.setFromTriplets(entries.begin(), entries.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-14);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 4 * n));
  cg.compute(gram);
  const Eigen::VectorXd c = cg.solve(b);
  if (cg.info() != Eigen::Success && cg.error() > 1e-10) {
    throw ConvergenceError("Gram system did not converge");
  }
  p.coefficients.assign(c.data(), c.data() + c.size());
  const double projected = std::max(0.0, b.dot(c));
  p.projection_norm = std::sqrt(projected);
  // ||f - P f||^2 = ||f||^2 - <f, P f>
  const double f_sq = p.f_norm * p.f_norm;
  p.l2_error = f_sq > 0.0 ? std::sqrt(std::max(0.0, f_sq - projected) / f_sq) : 0.0;
  return p;
}

SampledFunction evaluate_projection(const LevelProjection& p, const ScalingFunction& phi, const VoxelGrid& grid,
                                    unsigned threads) {
  const double sl = level_scale(phi.scale(), p.level);
  SampledFunction out{grid, std::vector<double>(grid.size(), 0.0)};
  parallel_for(
      grid.size(),
      [&](std::size_t begin, std::size_t end) {
        std::vector<LatticePoint> hits;
        for (std::size_t i = begin; i < end; ++i) {
          hits.clear();
          phi.locator().translates_containing(dilate_coords(grid.center(i), sl), hits);
          double v = 0.0;
          for (const auto& g : hits) v += p.coefficient(g);
          out.values[i] = v;
        }
      },
      threads, kChunk);
  return out;
}

double nesting_residual(const SampledFunction& f, int level, const ScalingFunction& phi, unsigned threads) {
  if (level < 0) throw std::invalid_argument("nesting is checked on levels j >= 0");
  const double norm = std::sqrt(f.norm_sq());
  if (norm == 0.0) return 0.0;
  const LevelProjection fine = project_onto_level(f, level + 1, phi, threads);
  const LevelProjection twice =
      project_onto_level(evaluate_projection(fine, phi, fine.grid, threads), level, phi, threads);
  const LevelProjection once = project_onto_level(f, level, phi, threads);
  // twice.grid extends once.grid by whole cells
  const SampledFunction a = evaluate_projection(twice, phi, twice.grid, threads);
  const SampledFunction b = evaluate_projection(once, phi, twice.grid, threads);
  return weighted_l2(a.values, b.values, twice.grid.cell_volume()) / norm;
}

TestFunction gaussian_test(const Eigen::Vector3d& center, double sigma, int resolution) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  Box3 box;
  for (int a = 0; a < 3; ++a) {
    box.lo[a] = center[a] - 4.0 * sigma;
    box.hi[a] = center[a] + 4.0 * sigma;
  }
  TestFunction t;
  t.name = "gaussian";
  t.f = [center, sigma](const Eigen::Vector3d& x) {
    return std::exp(-(x - center).squaredNorm() / (2.0 * sigma * sigma));
  };
  t.grid = VoxelGrid::uniform(box, resolution, Model::polarized);
  t.density = true;
  return t;
}

TestFunction unit_box_test(int resolution) {
  TestFunction t;
  t.name = "unit_box";
  t.f = [](const Eigen::Vector3d& x) {
    const bool in = x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0;
    return in ? 1.0 : 0.0;
  };
  t.grid = VoxelGrid::uniform(Box3{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, resolution, Model::polarized);
  t.triviality = true;
  return t;
}

TestFunction generator_test(const ScalingFunction& phi) {
  TestFunction t;
  t.name = "generator";
  const VoxelSet* q = &phi.tile();
  t.f = [q](const Eigen::Vector3d& x) { return q->contains(x) ? 1.0 : 0.0; };
  t.grid = phi.tile().grid();
  return t;
}

InvarianceReport invariance_check(const TestFunction& test, const LatticePoint& shift, const ScalingFunction& phi,
                                  unsigned threads) {
  InvarianceReport report;
  report.shift = shift;
  const LevelProjection base = project_onto_level(SampledFunction::sample(test.grid, test.f, threads), 0, phi, threads);

  Box3 box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()}};
  const Box3& src = test.grid.box;
  for (int corner = 0; corner < 8; ++corner) {
    const GroupPoint p = GroupPoint::polarized((corner & 1) ? src.hi[0] : src.lo[0], (corner & 2) ? src.hi[1] : src.lo[1],
                                               (corner & 4) ? src.hi[2] : src.lo[2]);
    const Eigen::Vector3d img = group_mul(shift.to_point(), p).coords();
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], img[a]);
      box.hi[a] = std::max(box.hi[a], img[a]);
    }
  }
  const VoxelGrid moved{box, test.grid.resolution, Model::polarized};
  const auto& f = test.f;
  const SampledFunction shifted = SampledFunction::sample(
      moved, [&f, &shift](const Eigen::Vector3d& x) { return f(lattice_pullback(shift, x)); }, threads);
  const LevelProjection moved_proj = project_onto_level(shifted, 0, phi, threads);

  std::map<LatticePoint, double> diff;
  for (std::size_t i = 0; i < base.gammas.size(); ++i) diff[shift * base.gammas[i]] -= base.coefficients[i];
  for (std::size_t i = 0; i < moved_proj.gammas.size(); ++i) diff[moved_proj.gammas[i]] += moved_proj.coefficients[i];
  double num = 0.0;
  for (const auto& [g, d] : diff) num += d * d;
  double den = 0.0;
  for (double c : base.coefficients) den += c * c;
  report.residual = den > 0.0 ? std::sqrt(num / den) : 0.0;

  const auto argmax = [](const LevelProjection& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.coefficients.size(); ++i) {
      if (std::abs(p.coefficients[i]) > std::abs(p.coefficients[best])) best = i;
    }
    return p.gammas.at(best);
  };
  report.argmax_maps = !base.gammas.empty() && !moved_proj.gammas.empty() &&
                       argmax(moved_proj) == shift * argmax(base);
  return report;
}

double WaveletBank::orthogonality_residual() const {
  return (matrix * matrix.transpose() - Eigen::Matrix<double, 16, 16>::Identity()).cwiseAbs().maxCoeff();
}

WaveletBank build_wavelet_bank() {
  const double r2 = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2d h2;
  h2 << r2, r2, r2, -r2;
  Eigen::Matrix4d h4;
  h4 << 0.5, 0.5, 0.5, 0.5,
        0.5, 0.5, -0.5, -0.5,
        r2, -r2, 0.0, 0.0,
        0.0, 0.0, r2, -r2;
  WaveletBank bank;
  for (int r1 = 0; r1 < 2; ++r1) {
    for (int r2i = 0; r2i < 2; ++r2i) {
      for (int r3 = 0; r3 < 4; ++r3) {
        for (int e1 = 0; e1 < 2; ++e1) {
          for (int e2 = 0; e2 < 2; ++e2) {
            for (int e3 = 0; e3 < 4; ++e3) {
              bank.matrix((r1 * 2 + r2i) * 4 + r3, (e1 * 2 + e2) * 4 + e3) = h2(r1, e1) * h2(r2i, e2) * h4(r3, e3);
            }
          }
        }
      }
    }
  }
  return bank;
}

ParsevalReport parseval_check(const IfsSystem& sys, const ScalingFunction& phi, std::uint64_t seed) {
  if (sys.s != 2 || sys.size() != 16) throw std::invalid_argument("the wavelet bank needs 16 pieces (t = 1/2)");
  const VoxelSet& q = phi.tile();
  const VoxelGrid& grid = q.grid();
  const auto cells = q.cells();
  ParsevalReport report;
  std::array<std::size_t, 16> counts{};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!cells[c]) continue;
    const Eigen::Vector3d x = grid.center(c);
    bool assigned = false;
    for (std::size_t i = 0; i < 16 && !assigned; ++i) {
      if (q.contains(sys.inverse_map(i, x))) {
        ++counts[i];
        assigned = true;
      }
    }
    report.unassigned_voxels += assigned ? 0 : 1;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::Matrix<double, 16, 1> coeff;
  double mass = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double value = uni(rng);
    const double piece = static_cast<double>(counts[static_cast<std::size_t>(i)]) * grid.cell_volume();
    coeff(i) = value * std::sqrt(piece);
    mass += value * value * piece;
  }
  const WaveletBank bank = build_wavelet_bank();
  const Eigen::Matrix<double, 16, 1> w = bank.matrix * coeff;
  report.parseval_residual = std::abs(mass - w.squaredNorm());
  report.reconstruction_residual = (bank.matrix.transpose() * w - coeff).cwiseAbs().maxCoeff();
  return report;
}

MraReport mra_diagnostics(const IfsSystem& sys, const ScalingFunction& phi, const std::vector<int>& levels,
                          const std::vector<TestFunction>& tests, const MraOptions& options, unsigned threads) {
  if (levels.empty()) throw std::invalid_argument("MRA diagnostics need at least one level");
  std::vector<int> fine;
  std::vector<int> coarse;
  for (int j : levels) (j >= 0 ? fine : coarse).push_back(j);
  std::sort(fine.begin(), fine.end());
  std::sort(coarse.begin(), coarse.end(), std::greater<>());

  MraReport report;
  report.refinement_residual = two_scale_residual(sys, phi.tile(), threads);
  report.riesz = gram_riesz_bounds(phi, options.riesz_range);
  report.density_decreasing = true;
  report.triviality_decreasing = true;

  const TestFunction* invariance_test = nullptr;
  for (const auto& test : tests) {
    const SampledFunction f = SampledFunction::sample(test.grid, test.f, threads);
    if (test.density) {
      if (!invariance_test) invariance_test = &test;
      double previous = std::numeric_limits<double>::infinity();
      for (int j : fine) {
        const double e = project_onto_level(f, j, phi, threads).l2_error;
        report.density_curve.push_back({test.name, j, e});
        report.density_decreasing = report.density_decreasing && e < previous;
        previous = e;
      }
    }
    if (test.triviality) {
      double previous = std::numeric_limits<double>::infinity();
      for (int j : coarse) {
        const double norm = project_onto_level(f, j, phi, threads).projection_norm;
        report.triviality_curve.push_back({test.name, j, norm});
        report.triviality_decreasing = report.triviality_decreasing && norm < previous;
        previous = norm;
      }
    }
    for (int j : fine) {
      if (std::find(fine.begin(), fine.end(), j + 1) == fine.end()) continue;
      report.nesting_residual = std::max(report.nesting_residual, nesting_residual(f, j, phi, threads));
    }
  }
  if (!invariance_test && !tests.empty()) invariance_test = &tests.front();
  if (invariance_test) report.invariance = invariance_check(*invariance_test, options.shift, phi, threads);
  if (sys.size() == 16) report.parseval = parseval_check(sys, phi, options.seed);

  const MraTolerances& tol = options.tol;
  const double mu = phi.norm_sq();
  report.verdict = report.refinement_residual <= tol.two_scale &&
                   std::abs(report.riesz.alpha1 / mu - 1.0) <= tol.riesz_band &&
                   std::abs(report.riesz.alpha2 / mu - 1.0) <= tol.riesz_band &&
                   report.riesz.off_diagonal_mass <= tol.off_diagonal && report.nesting_residual <= tol.nesting &&
                   report.invariance.residual <= tol.invariance && report.invariance.argmax_maps &&
                   report.parseval.parseval_residual <= tol.parseval &&
                   report.parseval.reconstruction_residual <= tol.parseval && report.density_decreasing &&
                   report.triviality_decreasing;
  return report;
}

}  // namespace heisen
