#include "heisen/isometry.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace heisen {

Isometry Isometry::translation(const GroupPoint& gamma) { return Isometry(Translation{gamma}); }

Isometry Isometry::rotation(const GroupPoint& center, double theta) {
  if (center.model != Model::symmetric) {
    throw ModelMismatch("rotations about a vertical axis are isometries only in the symmetric model");
  }
  return Isometry(Rotation{center, theta});
}

Isometry Isometry::compose(std::vector<Isometry> parts) {
  if (parts.empty()) throw std::invalid_argument("composition needs at least one isometry");
  return Isometry(Composition{std::move(parts)});
}

Isometry::Kind Isometry::kind() const { return static_cast<Kind>(rep_.index()); }

GroupPoint Isometry::apply(const GroupPoint& p) const {
  if (const auto* t = std::get_if<Translation>(&rep_)) return group_mul(t->gamma, p);
  if (const auto* r = std::get_if<Rotation>(&rep_)) {
    const GroupPoint local = group_mul(group_inv(r->center), p);  // throws on model mismatch
    const double c = std::cos(r->theta);
    const double s = std::sin(r->theta);
    const GroupPoint turned = GroupPoint::symmetric(c * local.x - s * local.y, s * local.x + c * local.y, local.z);
    return group_mul(r->center, turned);
  }
  const auto& parts = std::get<Composition>(rep_).parts;
  GroupPoint q = p;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) q = it->apply(q);
  return q;
}

Isometry Isometry::inverse() const {
  if (const auto* t = std::get_if<Translation>(&rep_)) return translation(group_inv(t->gamma));
  if (const auto* r = std::get_if<Rotation>(&rep_)) return rotation(r->center, -r->theta);
  const auto& parts = std::get<Composition>(rep_).parts;
  std::vector<Isometry> inverted;
  inverted.reserve(parts.size());
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) inverted.push_back(it->inverse());
  return compose(std::move(inverted));
}

std::string Isometry::describe() const {
  std::ostringstream out;
  const auto point = [&](const GroupPoint& p) { out << '(' << p.x << ',' << p.y << ',' << p.z << ')'; };
  if (const auto* t = std::get_if<Translation>(&rep_)) {
    out << "L";
    point(t->gamma);
  } else if (const auto* r = std::get_if<Rotation>(&rep_)) {
    out << "R[";
    point(r->center);
    out << ", " << r->theta << ']';
  } else {
    const auto& parts = std::get<Composition>(rep_).parts;
    out << '{';
    for (std::size_t i = 0; i < parts.size(); ++i) out << (i ? " o " : "") << parts[i].describe();
    out << '}';
  }
  return out.str();
}

const GroupPoint& Isometry::gamma() const {
  if (const auto* t = std::get_if<Translation>(&rep_)) return t->gamma;
  throw std::logic_error("isometry is not a translation");
}

const GroupPoint& Isometry::center() const {
  if (const auto* r = std::get_if<Rotation>(&rep_)) return r->center;
  throw std::logic_error("isometry is not a rotation");
}

double Isometry::angle() const {
  if (const auto* r = std::get_if<Rotation>(&rep_)) return r->theta;
  throw std::logic_error("isometry is not a rotation");
}

const std::vector<Isometry>& Isometry::parts() const {
  if (const auto* c = std::get_if<Composition>(&rep_)) return c->parts;
  throw std::logic_error("isometry is not a composition");
}

// ---------------------------------------------------------------------------

InfinitesimalCheck check_infinitesimal_isometry(const PointMap& psi, Model model, int samples, double tol,
                                                std::uint64_t seed) {
  if (samples <= 0) throw std::invalid_argument("need at least one sample point");
  constexpr double kStep = 1e-4;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  InfinitesimalCheck result;
  result.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Eigen::Vector3d c(coord(rng), coord(rng), coord(rng));
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d forward = c;
      Eigen::Vector3d backward = c;
      forward(j) += kStep;
      backward(j) -= kStep;
      jac.col(j) = (psi(GroupPoint::from_coords(model, forward)).coords() -
                    psi(GroupPoint::from_coords(model, backward)).coords()) /
                   (2.0 * kStep);
    }
    const GroupPoint p = GroupPoint::from_coords(model, c);
    const Eigen::Matrix3d pushed = jac * cometric(p).matrix * jac.transpose();
    const double residual = (pushed - cometric(psi(p)).matrix).cwiseAbs().maxCoeff();
    result.max_residual = std::max(result.max_residual, residual);
  }
  result.passed = result.max_residual <= tol;
  return result;
}

InfinitesimalCheck check_infinitesimal_isometry(const Isometry& j, Model model, int samples, double tol,
                                                std::uint64_t seed) {
  return check_infinitesimal_isometry([&j](const GroupPoint& p) { return j.apply(p); }, model, samples, tol, seed);
}

Isometry conjugate_isometry(double t, const Isometry& j) {
  if (!(t > 0.0)) throw std::invalid_argument("conjugation needs a positive dilation parameter");
  const double s = 1.0 / t;
  switch (j.kind()) {
    case Isometry::Kind::translation:
      return Isometry::translation(dilate(s, j.gamma()));
    case Isometry::Kind::rotation:
      // delta_s commutes with R_theta, so the conjugate rotates about delta_s(c).
      return Isometry::rotation(dilate(s, j.center()), j.angle());
    case Isometry::Kind::composition: {
      std::vector<Isometry> parts;
      for (const auto& part : j.parts()) parts.push_back(conjugate_isometry(t, part));
      return Isometry::compose(std::move(parts));
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Cosets of K / delta_s(K).

int dilation_factor(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("dilation parameter must be positive");
  const double inv = 1.0 / t;
  const double s = std::round(inv);
  if (s < 1.0 || std::abs(inv - s) > 1e-9 * inv) {
    throw std::invalid_argument("1/t must be a positive integer");
  }
  return static_cast<int>(s);
}

LatticePoint dilate_lattice(int s, const LatticePoint& gamma) {
  return {s * gamma.m, s * gamma.n, static_cast<std::int64_t>(s) * s * gamma.k};
}

std::vector<LatticePoint> coset_representatives(double t) {
  const int s = dilation_factor(t);
  std::vector<LatticePoint> reps;
  reps.reserve(static_cast<std::size_t>(s) * s * s * s);
  for (int e1 = 0; e1 < s; ++e1) {
    for (int e2 = 0; e2 < s; ++e2) {
      for (int e3 = 0; e3 < s * s; ++e3) reps.push_back({e1, e2, e3});
    }
  }
  return reps;
}

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  const std::int64_t r = a % b;
  return r < 0 ? r + b : r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return (a - floor_mod(a, b)) / b; }

}  // namespace

CosetDecomposition decompose_coset(const LatticePoint& gamma, int s) {
  if (s < 1) throw std::invalid_argument("dilation factor must be positive");
  // rep * delta_s(q) = (e1 + s q_m, e2 + s q_n, e3 + s^2 q_k + e1 s q_n)
  const std::int64_t s2 = static_cast<std::int64_t>(s) * s;
  CosetDecomposition d;
  d.rep.m = floor_mod(gamma.m, s);
  d.quotient.m = floor_div(gamma.m, s);
  d.rep.n = floor_mod(gamma.n, s);
  d.quotient.n = floor_div(gamma.n, s);
  const std::int64_t rest = gamma.k - d.rep.m * s * d.quotient.n;
  d.rep.k = floor_mod(rest, s2);
  d.quotient.k = floor_div(rest, s2);
  return d;
}

bool is_transversal(const std::vector<LatticePoint>& reps, int s) {
  const auto expected = static_cast<std::size_t>(s) * s * s * s;
  if (reps.size() != expected) return false;
  std::set<LatticePoint> classes;
  for (const auto& r : reps) classes.insert(decompose_coset(r, s).rep);
  return classes.size() == expected;
}

// ---------------------------------------------------------------------------

FiniteGroupAction FiniteGroupAction::cyclic_rotations(const GroupPoint& center, int n) {
  if (n < 1) throw std::invalid_argument("cyclic group order must be positive");
  std::vector<Isometry> elements;
  for (int i = 0; i < n; ++i) elements.push_back(Isometry::rotation(center, 2.0 * std::numbers::pi * i / n));
  return FiniteGroupAction(std::move(elements));
}

bool FiniteGroupAction::verify_closure(Model model, int samples, double tol, std::uint64_t seed) const {
  if (elements_.empty()) return false;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::vector<GroupPoint> points;
  for (int s = 0; s < samples; ++s) points.push_back(GroupPoint{model, coord(rng), coord(rng), coord(rng)});

  const auto matches = [&](const auto& f) {
    return std::any_of(elements_.begin(), elements_.end(), [&](const Isometry& e) {
      return std::all_of(points.begin(), points.end(), [&](const GroupPoint& p) {
        return (f(p).coords() - e.apply(p).coords()).cwiseAbs().maxCoeff() <= tol * (1.0 + p.coords().norm());
      });
    });
  };
  for (const auto& a : elements_) {
    if (!matches([&](const GroupPoint& p) { return a.inverse().apply(p); })) return false;
    for (const auto& b : elements_) {
      if (!matches([&](const GroupPoint& p) { return a.apply(b.apply(p)); })) return false;
    }
  }
  return true;
}

OrbitReport orbit(const FiniteGroupAction& h, const GroupPoint& p, Metric metric) {
  OrbitReport report;
  report.metric = metric;
  for (const auto& e : h.elements()) report.points.push_back(e.apply(p));
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    for (std::size_t j = i + 1; j < report.points.size(); ++j) {
      report.diameter = std::max(report.diameter, distance(metric, report.points[i], report.points[j]));
    }
  }
  return report;
}

namespace {

struct MinimaxObjective {
  const std::vector<GroupPoint>* orbit;
  Metric metric;
  Model model;
};

double minimax_value(const gsl_vector* v, void* params) {
  const auto* obj = static_cast<const MinimaxObjective*>(params);
  const GroupPoint x{obj->model, gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2)};
  double worst = 0.0;
  for (const auto& q : *obj->orbit) worst = std::max(worst, distance(obj->metric, x, q));
  return worst;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

// One Nelder-Mead run; returns the iteration count and updates x in place.
int nelder_mead(MinimaxObjective& objective, Eigen::Vector3d& x, double step) {
  gsl_set_error_handler_off();
  gsl_multimin_function fn{&minimax_value, 3, &objective};
  std::unique_ptr<gsl_vector, VectorDeleter> start(gsl_vector_alloc(3));
  std::unique_ptr<gsl_vector, VectorDeleter> steps(gsl_vector_alloc(3));
  for (int i = 0; i < 3; ++i) {
    gsl_vector_set(start.get(), static_cast<std::size_t>(i), x(i));
    gsl_vector_set(steps.get(), static_cast<std::size_t>(i), step);
  }
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3));
  gsl_multimin_fminimizer_set(m.get(), &fn, start.get(), steps.get());
  int iter = 0;
  for (; iter < 4000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(m.get()) < 1e-13) break;
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
  for (int i = 0; i < 3; ++i) x(i) = gsl_vector_get(best, static_cast<std::size_t>(i));
  return iter + 1;
}

}  // namespace

FixedPointResult fixed_point_center(const FiniteGroupAction& h, const GroupPoint& p, Metric metric,
                                    double radius_bound, double tol) {
  if (!(radius_bound > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("radius bound and tolerance must be positive");
  }
  if (h.size() == 0) throw std::invalid_argument("group action has no elements");
  if (!h.verify_closure(p.model)) {
    throw std::invalid_argument("isometries are not a finite group (not closed under composition and inverse)");
  }
  const OrbitReport orb = orbit(h, p, metric);
  if (orb.diameter > 0.5 * radius_bound) {
    throw std::invalid_argument("orbit diameter exceeds half the configured radius bound");
  }

  FixedPointResult result;
  result.orbit_diameter = orb.diameter;
  result.near_radius_bound = orb.diameter > 0.4 * radius_bound;

  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (const auto& q : orb.points) x += q.coords();
  x /= static_cast<double>(orb.points.size());

  if (orb.diameter > 0.0) {
    MinimaxObjective objective{&orb.points, metric, p.model};
    double step = 0.5 * orb.diameter;
    // restarts shrink the initial simplex so a collapsed simplex cannot stall
    for (int restart = 0; restart < 6; ++restart) {
      result.iterations += nelder_mead(objective, x, step);
      step = std::max(1e-9, step * 0.05);
    }
  }

  result.point = GroupPoint::from_coords(p.model, x);
  for (const auto& e : h.elements()) {
    const GroupPoint moved = e.apply(result.point);
    result.max_displacement_contraction =
        std::max(result.max_displacement_contraction, contraction_distance_exact(moved, result.point));
    result.max_displacement_cc = std::max(result.max_displacement_cc, cc_distance(moved, result.point));
  }
  for (const auto& q : orb.points) result.radius = std::max(result.radius, distance(metric, result.point, q));
  if (result.max_displacement_contraction > tol) {
    throw ConvergenceError("fixed point search stalled: displacement " +
                           std::to_string(result.max_displacement_contraction) + " above tolerance");
  }
  return result;
}

}  // namespace heisen
