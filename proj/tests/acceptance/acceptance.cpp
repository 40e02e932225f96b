// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runtime limits are part of each criterion.

#include "heisen/fundamental.hpp"
#include "heisen/group.hpp"
#include "heisen/ifs.hpp"
#include "heisen/isometry.hpp"
#include "heisen/metrics.hpp"
#include "heisen/mra.hpp"
#include "heisen/voxel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>

using namespace heisen;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_seconds, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = seconds <= budget_seconds;
  const bool pass = v.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", id, name, v.detail.c_str(),
              seconds, budget_seconds, in_time ? "" : ", over time");
  std::fflush(stdout);
}

double max_abs(const GroupPoint& a, const GroupPoint& b) { return (a.coords() - b.coords()).cwiseAbs().maxCoeff(); }

// Shared between criteria 7, 8, 9 and 10.
struct TileCache {
  IfsSystem sys = build_ifs(0.5);
  std::optional<TileResult> cube128, single128, cube64;
};

}  // namespace

int main() {
  TileCache tiles;

  criterion(1, "group algebra", 5.0, [] {
    std::mt19937_64 rng(20261017);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> scale(0.1, 3.0);
    double assoc = 0, inverse = 0, automorphism = 0, homomorphism = 0;
    for (int i = 0; i < 100000; ++i) {
      for (const Model m : {Model::polarized, Model::symmetric}) {
        const GroupPoint a{m, coord(rng), coord(rng), coord(rng)};
        const GroupPoint b{m, coord(rng), coord(rng), coord(rng)};
        const GroupPoint c{m, coord(rng), coord(rng), coord(rng)};
        assoc = std::max(assoc, max_abs((a * b) * c, a * (b * c)));
        inverse = std::max({inverse, max_abs(a * group_inv(a), GroupPoint::identity(m)),
                            max_abs(group_inv(a) * a, GroupPoint::identity(m))});
        const double t = scale(rng);
        automorphism = std::max(automorphism, max_abs(dilate(t, a * b), dilate(t, a) * dilate(t, b)));
        const Model other = m == Model::polarized ? Model::symmetric : Model::polarized;
        homomorphism =
            std::max(homomorphism, max_abs(convert_model(a * b, other), convert_model(a, other) * convert_model(b, other)));
      }
    }
    const bool pass = assoc <= 1e-12 && inverse <= 1e-12 && automorphism <= 1e-12 && homomorphism <= 1e-12;
    return Verdict{pass, fmt("assoc %.2e inverse %.2e automorphism %.2e convert %.2e", assoc, inverse, automorphism,
                             homomorphism)};
  });

  criterion(2, "commutator identity", 10.0, [] {
    double worst = 0.0;
    for (const double t : {0.2, 0.1, 0.05}) {
      const Eigen::Vector3d end = commutator_flow_residual(t, true).endpoint;
      worst = std::max(worst, (end - Eigen::Vector3d(0.0, 0.0, t * t)).cwiseAbs().maxCoeff());
    }
    const std::array<double, 3> ts{0.2, 0.1, 0.05};
    const double slope = commutator_order_slope(ts);
    return Verdict{worst <= 1e-12 && slope >= 2.9, fmt("endpoint error %.2e, perturbed slope %.3f", worst, slope)};
  });

  criterion(3, "distance solvers", 300.0, [] {
    const GroupPoint o = GroupPoint::identity(Model::polarized);
    const ShootResult unit = cc_distance_shoot(o, GroupPoint::polarized(1, 0, 0));
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double agreement = 0.0, homogeneity = 0.0;
    int fell_back = unit.fell_back ? 1 : 0;
    for (int i = 0; i < 100; ++i) {
      const GroupPoint p = GroupPoint::polarized(u(rng), u(rng), u(rng));
      const GroupPoint q = GroupPoint::polarized(u(rng), u(rng), u(rng));
      const ShootResult shoot = cc_distance_shoot(p, q);
      const OracleResult oracle = cc_distance_upper(p, q);
      const ShootResult half = cc_distance_shoot(dilate(0.5, p), dilate(0.5, q));
      fell_back += (shoot.fell_back ? 1 : 0) + (half.fell_back ? 1 : 0);
      agreement = std::max(agreement, std::abs(oracle.distance - shoot.distance) / shoot.distance);
      homogeneity = std::max(homogeneity, std::abs(half.distance - 0.5 * shoot.distance));
    }
    const double unit_error = std::abs(unit.distance - 1.0);
    const bool pass = unit_error <= 1e-6 && agreement <= 0.01 && homogeneity <= 1e-3 && fell_back == 0;
    return Verdict{pass, fmt("|d(0,e1)-1| %.2e, shoot/oracle %.2e, homogeneity %.2e, fallbacks %d", unit_error,
                             agreement, homogeneity, fell_back)};
  });

  criterion(4, "estimate d <= c d_R^(1/2)", 600.0, [] {
    const auto first = estimate_constant(Box3{}, 1000, 41);
    const auto second = estimate_constant(Box3{}, 1000, 42);
    const double change = std::abs(second.c_fit - first.c_fit) / first.c_fit;
    const bool pass = first.violations == 0 && first.ordering_violations == 0 && second.violations == 0 &&
                      second.ordering_violations == 0 && change <= 0.2;
    return Verdict{pass, fmt("c_fit %.4f / %.4f (change %.1f%%), violations %d, d_R > d on %d pairs", first.c_fit,
                             second.c_fit, 100.0 * change, first.violations + second.violations,
                             first.ordering_violations + second.ordering_violations)};
  });

  criterion(5, "fixed point of C4", 60.0, [] {
    const auto h = FiniteGroupAction::cyclic_rotations(GroupPoint::symmetric(0.3, -0.2, 0.1), 4);
    const auto r = fixed_point_center(h, GroupPoint::symmetric(0.8, 0.4, 0.5), Metric::contraction, 4.0, 1e-6);
    const bool pass = r.max_displacement_contraction <= 1e-6 && r.max_displacement_cc <= 1e-4;
    return Verdict{pass, fmt("max d_R(Psi x, x) %.2e, max d(Psi x, x) %.2e", r.max_displacement_contraction,
                             r.max_displacement_cc)};
  });

  criterion(6, "coset representatives", 1.0, [] {
    const auto reps = coset_representatives(0.5);
    // gamma in delta_2(K) iff m, n even and k divisible by 4
    const auto in_sublattice = [](const LatticePoint& g) { return g.m % 2 == 0 && g.n % 2 == 0 && g.k % 4 == 0; };
    int bad = 0;
    for (std::int64_t m = 0; m < 4; ++m) {
      for (std::int64_t n = 0; n < 4; ++n) {
        for (std::int64_t k = 0; k < 4; ++k) {
          const LatticePoint g{m, n, k};
          int hits = 0;
          for (const auto& r : reps) hits += in_sublattice(lattice_inv(r) * g) ? 1 : 0;
          const auto d = decompose_coset(g, 2);
          const bool consistent = d.rep * dilate_lattice(2, d.quotient) == g &&
                                  std::find(reps.begin(), reps.end(), d.rep) != reps.end();
          if (hits != 1 || !consistent) ++bad;
        }
      }
    }
    return Verdict{reps.size() == 16 && bad == 0, fmt("%zu representatives, %d of 64 points not uniquely decomposed",
                                                      reps.size(), bad)};
  });

  criterion(7, "IFS attractor at 128^3", 120.0, [&tiles] {
    const VoxelGrid grid = attractor_grid(tiles.sys, 128);
    tiles.cube128 = attractor_fixed_point(tiles.sys, unit_cube_seed(grid), 40);
    tiles.single128 = attractor_fixed_point(tiles.sys, single_cell_seed(grid), 40);
    const auto& a = *tiles.cube128;
    const auto& b = *tiles.single128;
    const bool agree = agree_within_layers(a.voxels, b.voxels, 2);
    const auto in_band = [](double r) { return r >= 0.4 && r <= 0.6; };
    const bool pass = a.iterations <= 12 && b.iterations <= 12 && agree && in_band(a.decay_ratio) &&
                      in_band(b.decay_ratio);
    return Verdict{pass, fmt("iterations %d (cube) / %d (single cell), agree within 2 layers %s, decay ratio %.3f / "
                             "%.3f",
                             a.iterations, b.iterations, agree ? "yes" : "no", a.decay_ratio, b.decay_ratio)};
  });

  criterion(8, "tile measure", 120.0, [&tiles] {
    if (!tiles.cube128) throw std::runtime_error("no 128^3 attractor");
    tiles.cube64 = attractor_fixed_point(tiles.sys, unit_cube_seed(attractor_grid(tiles.sys, 64)), 40);
    const double e64 = std::abs(tiles.cube64->measure - 1.0);
    const double e128 = std::abs(tiles.cube128->measure - 1.0);
    // Both errors at round-off level leave nothing to shrink.
    const bool shrinks = e128 * 1.5 <= e64 || (e64 <= 1e-9 && e128 <= 1e-9);
    return Verdict{e128 <= 0.02 && shrinks, fmt("measure %.6f at 128^3, |error| %.2e (64^3) -> %.2e (128^3)",
                                               tiles.cube128->measure, e64, e128)};
  });

  criterion(9, "tiling and fundamental axioms", 180.0, [&tiles] {
    if (!tiles.cube128) throw std::runtime_error("no 128^3 attractor");
    const Box3 window{{-0.5, -0.5, -0.5}, {1.5, 1.5, 2.0}};
    const auto tiling = verify_tiling(tiles.cube128->voxels, window, 8, 48);
    const DirichletSpec spec;
    const DirichletResult cell = dirichlet_cell(spec, dirichlet_grid(spec.base_point, 64, spec.metric));
    const Box3 fd_window{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}};
    const auto dirichlet = verify_fundamental_set(cell.cell, fd_window, 4, 48);
    const VoxelGrid unit{Box3{}, {64, 64, 64}, Model::polarized};
    const auto cube = verify_fundamental_set(VoxelSet::full(unit), fd_window, 4, 48);
    const bool cube_exact = cube.passed() && cube.covering_fraction == 1.0 && cube.overlap_fraction == 0.0;
    const bool pass = tiling.fraction_one >= 0.99 && dirichlet.covering_fraction >= 0.99 &&
                      dirichlet.overlap_fraction <= 0.01 && dirichlet.passed() && cube_exact;
    return Verdict{pass, fmt("tile multiplicity-1 %.4f, Dirichlet covering %.4f overlap %.4f closure %.3f, unit cube "
                             "covering %.4f overlap %.4f",
                             tiling.fraction_one, dirichlet.covering_fraction, dirichlet.overlap_fraction,
                             dirichlet.closure_residual, cube.covering_fraction, cube.overlap_fraction)};
  });

  criterion(10, "Haar MRA", 180.0, [&tiles] {
    if (!tiles.cube128 || !tiles.cube64) throw std::runtime_error("no attractor");
    const double r64 = two_scale_residual(tiles.sys, tiles.cube64->voxels);
    const ScalingFunction phi(tiles.cube128->voxels);
    const std::vector<TestFunction> tests{gaussian_test({0.5, 0.5, 0.6}, 0.3, 64), unit_box_test(64)};
    const MraReport r = mra_diagnostics(tiles.sys, phi, {0, 1, 2, -1, -2, -3}, tests);
    const double r128 = r.refinement_residual;
    const bool riesz = std::abs(r.riesz.alpha1 - 1.0) <= 0.05 && std::abs(r.riesz.alpha2 - 1.0) <= 0.05 &&
                       r.riesz.off_diagonal_mass <= 0.02;
    const bool pass = r128 <= 0.03 && r128 < r64 && riesz && r.density_decreasing && r.triviality_decreasing &&
                      r.parseval.parseval_residual <= 1e-10;
    std::string density, norms;
    for (const auto& p : r.density_curve) density += fmt(" %.4f", p.value);
    for (const auto& p : r.triviality_curve) norms += fmt(" %.4f", p.value);
    return Verdict{pass, fmt("two-scale %.4f (64^3) -> %.4f (128^3), alpha %.4f..%.4f off-diagonal %.2e, gaussian "
                             "errors%s, coarse norms%s, Parseval %.1e",
                             r64, r128, r.riesz.alpha1, r.riesz.alpha2, r.riesz.off_diagonal_mass, density.c_str(),
                             norms.c_str(), r.parseval.parseval_residual)};
  });

  criterion(11, "negative controls", 120.0, [&tiles] {
    const VoxelSet cube = unit_cube_seed(attractor_grid(tiles.sys, 64));
    const double self_sim = self_similarity(tiles.sys, cube).residual;
    const ScalingFunction phi(cube);
    const TestFunction generator = generator_test(phi);
    const double nesting = nesting_residual(SampledFunction::sample(generator.grid, generator.f), 0, phi);
    const PointMap stretch = [](const GroupPoint& p) { return GroupPoint{p.model, 2.0 * p.x, p.y, 2.0 * p.z}; };
    const auto aniso = check_infinitesimal_isometry(stretch, Model::polarized, 200, 1e-6);
    const bool pass = self_sim > 0.1 && nesting > 0.02 && !aniso.passed && aniso.max_residual >= 0.1;
    return Verdict{pass, fmt("cube self-similarity %.4f, cube nesting %.4f, anisotropic isometry residual %.3f",
                             self_sim, nesting, aniso.max_residual)};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
