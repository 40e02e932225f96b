#include "heisen/metrics.hpp"

#include "heisen/parallel.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>

namespace heisen {

namespace {

constexpr double kPi = std::numbers::pi;

// sin(u)/u, (1 - cos u)/u and (u - sin u)/u^3 without cancellation near 0.
double sinc1(double u) {
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
  }
  return std::sin(u) / u;
}

double cosc1(double u) {
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return u / 2.0 - u * u2 / 24.0 + u * u2 * u2 / 720.0;
  }
  return (1.0 - std::cos(u)) / u;
}

double sinc3(double u) {
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return 1.0 / 6.0 - u2 / 120.0 + u2 * u2 / 5040.0 - u2 * u2 * u2 / 362880.0;
  }
  return (u - std::sin(u)) / (u * u * u);
}

// Area-to-chord ratio of a circular arc of half-angle psi in (0, pi/2]:
// (2 psi - sin 2 psi) / (8 sin^2 psi).
double arc_ratio_small(double psi) {
  if (psi == 0.0) return 0.0;
  const double s = std::sin(psi);
  if (psi < 1e-2) {
    const double p2 = psi * psi;
    const double num = psi * p2 * (4.0 / 3.0 - p2 * (4.0 / 15.0 - p2 * (8.0 / 315.0 - p2 * 4.0 / 2835.0)));
    return num / (8.0 * s * s);
  }
  return (2.0 * psi - std::sin(2.0 * psi)) / (8.0 * s * s);
}

// Same ratio written in delta = pi - psi, delta in (0, pi/2].
double arc_ratio_large(double delta) {
  const double s = std::sin(delta);
  return (2.0 * kPi - 2.0 * delta + std::sin(2.0 * delta)) / (8.0 * s * s);
}

// Generic form for psi away from multiples of pi.
double arc_ratio(double psi) {
  const double s = std::sin(psi);
  return (2.0 * psi - std::sin(2.0 * psi)) / (8.0 * s * s);
}

template <typename F>
double solve_bracketed(F f, double a, double b) {
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t max_iter = 200;
  const double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
  return 0.5 * (lo + hi);
}

// Planar chord length and |vertical symmetric coordinate| of g = p^{-1} q.
struct Reduced {
  double chord = 0.0;
  double height = 0.0;
};

Reduced reduce(const GroupPoint& p, const GroupPoint& q) {
  const GroupPoint g = convert_model(group_mul(group_inv(p), q), Model::symmetric);
  return {std::hypot(g.x, g.y), std::abs(g.z)};
}

// d(0, g) for chord rp > 0 and height Z >= 0.
double cc_norm(double rp, double height) {
  if (height == 0.0) return rp;
  if (rp == 0.0) return std::sqrt(4.0 * kPi * height);
  const double ratio = height / (rp * rp);
  if (!std::isfinite(ratio)) return std::sqrt(4.0 * kPi * height);
  if (ratio <= kPi / 8.0) {
    const double psi = solve_bracketed([&](double s) { return arc_ratio_small(s) - ratio; }, 0.0, kPi / 2.0);
    return psi == 0.0 ? rp : rp * psi / std::sin(psi);
  }
  double lo = 0.5 * std::sqrt(kPi / (4.0 * ratio));
  while (arc_ratio_large(lo) < ratio) lo *= 0.5;
  const double delta = solve_bracketed([&](double d) { return arc_ratio_large(d) - ratio; }, lo, kPi / 2.0);
  return rp * (kPi - delta) / std::sin(delta);
}

// d_R(0, g). Geodesics sweep an angle phi = 2 psi; the vertical coordinate is
// rp^2 * arc_ratio(psi) + 2 psi and the squared length (rp psi / sin psi)^2 + 4 psi^2.
double contraction_norm(double rp, double height) {
  if (height == 0.0) return rp;
  if (rp == 0.0) {
    double best = height;
    for (int k = 1; 2.0 * kPi * k < height; ++k) {
      best = std::min(best, std::sqrt(4.0 * kPi * k * height - 4.0 * kPi * kPi * k * k));
    }
    return best;
  }
  const double rp2 = rp * rp;
  double best;
  const double z_mid = rp2 * kPi / 8.0 + kPi;
  if (height <= z_mid) {
    const double psi = solve_bracketed(
        [&](double s) { return rp2 * arc_ratio_small(s) + 2.0 * s - height; }, 0.0, kPi / 2.0);
    const double r = psi == 0.0 ? rp : rp * psi / std::sin(psi);
    best = std::hypot(r, 2.0 * psi);
  } else {
    auto z_of = [&](double d) { return rp2 * arc_ratio_large(d) + 2.0 * kPi - 2.0 * d - height; };
    double lo = 0.5 * rp * std::sqrt(kPi / (4.0 * height));
    while (z_of(lo) < 0.0) lo *= 0.5;
    const double delta = solve_bracketed(z_of, lo, kPi / 2.0);
    const double r = rp * (kPi - delta) / std::sin(delta);
    best = std::hypot(r, 2.0 * (kPi - delta));
  }

  // Geodesics that wind k >= 1 times have length >= 2 pi k.
  for (int k = 1; 2.0 * kPi * k < best; ++k) {
    const double a = kPi * k;
    const double b = kPi * (k + 1);
    auto z_of = [&](double s) { return rp2 * arc_ratio(s) + 2.0 * s - height; };
    auto len_of = [&](double s) { return std::hypot(rp * s / std::abs(std::sin(s)), 2.0 * s); };
    // z is convex-like on (a, b) and blows up at both ends; locate its minimum.
    double l = a + 1e-9, r = b - 1e-9;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = r - g * (r - l), m2 = l + g * (r - l);
    for (int it = 0; it < 200 && r - l > 1e-12; ++it) {
      if (z_of(m1) < z_of(m2)) {
        r = m2;
      } else {
        l = m1;
      }
      m1 = r - g * (r - l);
      m2 = l + g * (r - l);
    }
    const double s_min = 0.5 * (l + r);
    if (z_of(s_min) > 0.0) continue;
    double left = 1e-3;
    while (z_of(a + left) <= 0.0) left *= 0.5;
    double right = 1e-3;
    while (z_of(b - right) <= 0.0) right *= 0.5;
    const double s1 = solve_bracketed(z_of, a + left, s_min);
    const double s2 = solve_bracketed(z_of, s_min, b - right);
    best = std::min({best, len_of(s1), len_of(s2)});
  }
  return best;
}

}  // namespace

std::string_view to_string(Metric metric) { return metric == Metric::cc ? "cc" : "contraction"; }

Metric metric_from_string(std::string_view name) {
  if (name == "cc") return Metric::cc;
  if (name == "contraction") return Metric::contraction;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "' (expected cc or contraction)");
}

PathResult integrate_path(const ControlPath& path) {
  if (path.dimension != 2 && path.dimension != 3) {
    throw std::invalid_argument("control dimension must be 2 or 3");
  }
  PathResult result{path.start, 0.0};
  for (const auto& seg : path.controls) {
    if (!(seg.duration > 0.0)) throw std::invalid_argument("control segment duration must be positive");
    if (path.dimension == 2 && seg.u(2) != 0.0) {
      throw std::invalid_argument("horizontal control path has a vertical component");
    }
    result.endpoint = group_mul(result.endpoint, exp_algebra(path.start.model, seg.duration * seg.u));
    result.length += seg.duration * seg.u.norm();
  }
  return result;
}

GroupPoint geodesic_endpoint(const GroupPoint& start, const GeodesicParams& params, Metric metric) {
  const double h1 = params.covector(0);
  const double h2 = params.covector(1);
  const double w = params.covector(2);
  const double f1 = sinc1(w);
  const double f2 = cosc1(w);
  GroupPoint end = GroupPoint::symmetric(h1 * f1 - h2 * f2, h2 * f1 + h1 * f2,
                                         0.5 * (h1 * h1 + h2 * h2) * w * sinc3(w));
  if (metric == Metric::contraction) end.z += w;
  return group_mul(start, convert_model(end, start.model));
}

double geodesic_length(const GeodesicParams& params, Metric metric) {
  const double horizontal = std::hypot(params.covector(0), params.covector(1));
  return metric == Metric::cc ? horizontal : std::hypot(horizontal, params.covector(2));
}

GeodesicTrace integrate_geodesic(const GroupPoint& start, const GeodesicParams& params, Metric metric,
                                 int steps) {
  if (steps <= 0) throw std::invalid_argument("geodesic integration needs a positive step count");
  // Polarized coordinates from the identity; state (x, y, z, lx, ly, lz) with
  // h1 = lx, h2 = ly + x lz, h3 = lz.
  using State = Eigen::Matrix<double, 6, 1>;
  const bool riemannian = metric == Metric::contraction;
  auto rhs = [riemannian](const State& s) {
    const double h1 = s(3);
    const double h2 = s(4) + s(0) * s(5);
    State d;
    d << h1, h2, s(0) * h2 + (riemannian ? s(5) : 0.0), -h2 * s(5), 0.0, 0.0;
    return d;
  };
  auto hamiltonian = [riemannian](const State& s) {
    const double h1 = s(3);
    const double h2 = s(4) + s(0) * s(5);
    return 0.5 * (h1 * h1 + h2 * h2 + (riemannian ? s(5) * s(5) : 0.0));
  };
  State s;
  s << 0.0, 0.0, 0.0, params.covector(0), params.covector(1), params.covector(2);
  const double h0 = hamiltonian(s);
  const double dt = 1.0 / steps;
  double drift = 0.0;
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(s);
    const State k2 = rhs(s + 0.5 * dt * k1);
    const State k3 = rhs(s + 0.5 * dt * k2);
    const State k4 = rhs(s + dt * k3);
    s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (h0 > 0.0) drift = std::max(drift, std::abs(hamiltonian(s) - h0) / h0);
  }
  const GroupPoint end = GroupPoint::polarized(s(0), s(1), s(2));
  return {group_mul(start, convert_model(end, start.model)), drift};
}

double cc_distance(const GroupPoint& p, const GroupPoint& q) {
  const auto [chord, height] = reduce(p, q);
  if (chord == 0.0 && height == 0.0) return 0.0;
  return cc_norm(chord, height);
}

double contraction_distance_exact(const GroupPoint& p, const GroupPoint& q) {
  const auto [chord, height] = reduce(p, q);
  if (chord == 0.0 && height == 0.0) return 0.0;
  return contraction_norm(chord, height);
}

double distance(Metric metric, const GroupPoint& p, const GroupPoint& q) {
  return metric == Metric::cc ? cc_distance(p, q) : contraction_distance_exact(p, q);
}

// ---------------------------------------------------------------------------
// Shooting

namespace {

template <typename Residual>
std::optional<Eigen::Vector3d> levenberg_marquardt(Residual residual, Eigen::Vector3d x, double tol,
                                                   int max_iter) {
  Eigen::Vector3d r = residual(x);
  double cost = r.squaredNorm();
  double damping = 1e-3;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(cost) <= tol) return x;
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x(j)));
      Eigen::Vector3d xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += damping * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector3d step = a.ldlt().solve(-grad);
      const Eigen::Vector3d candidate = x + step;
      const Eigen::Vector3d rc = residual(candidate);
      if (rc.allFinite() && rc.squaredNorm() < cost) {
        x = candidate;
        r = rc;
        cost = rc.squaredNorm();
        damping = std::max(damping * 0.2, 1e-12);
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }
  if (std::sqrt(cost) <= tol) return x;
  return std::nullopt;
}

}  // namespace

ShootResult cc_distance_shoot(const GroupPoint& p, const GroupPoint& q) {
  ShootResult result;
  const GroupPoint target = convert_model(group_mul(group_inv(p), q), Model::symmetric);
  const Eigen::Vector3d goal = target.coords();
  if (goal.squaredNorm() == 0.0) return result;

  const GroupPoint origin = GroupPoint::identity(Model::symmetric);
  auto residual = [&](const Eigen::Vector3d& h) {
    return (geodesic_endpoint(origin, GeodesicParams{h}, Metric::cc).coords() - goal).eval();
  };
  const double tol = 1e-11 * (1.0 + goal.norm());
  const double chord = std::hypot(goal.x(), goal.y());
  const double scale = std::max(chord, std::sqrt(4.0 * kPi * std::abs(goal.z())));

  double best = std::numeric_limits<double>::infinity();
  constexpr std::array<double, 7> sweeps{-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5};
  for (double sweep : sweeps) {
    const double w = sweep * kPi;
    for (int a = 0; a < 8; ++a) {
      const double angle = a * kPi / 4.0;
      const Eigen::Vector3d start(scale * std::cos(angle), scale * std::sin(angle), w);
      const auto solution = levenberg_marquardt(residual, start, tol, 100);
      if (!solution) continue;
      ++result.converged_starts;
      const double length = std::hypot((*solution)(0), (*solution)(1));
      if (length < best) {
        best = length;
        result.params.covector = *solution;
      }
    }
  }
  if (result.converged_starts == 0) {
    result.fell_back = true;
    result.distance = cc_distance_upper(p, q).distance;
    return result;
  }
  result.distance = best;
  return result;
}

// ---------------------------------------------------------------------------
// Control oracle

namespace {

// Minimizes N * |v|^2 over per-segment displacements v subject to reaching
// the target. The endpoint map is quadratic in v, so the constraint Hessian
// is a constant matrix.
class ControlProblem {
 public:
  ControlProblem(int dimension, int segments, const Eigen::Vector3d& target)
      : dim_(dimension), segments_(segments), n_(dimension * segments), target_(target) {
    hz_ = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < segments_; ++i) {
      for (int j = i; j < segments_; ++j) {
        const double w = (i == j) ? 0.5 : 1.0;
        hz_(a_index(i), b_index(j)) = w;
        hz_(b_index(j), a_index(i)) = w;
      }
    }
  }

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] int a_index(int i) const { return dim_ * i; }
  [[nodiscard]] int b_index(int i) const { return dim_ * i + 1; }

  void evaluate(const Eigen::VectorXd& v, Eigen::Vector3d& residual, Eigen::Matrix<double, 3, Eigen::Dynamic>& jac) const {
    jac.setZero(3, n_);
    double x = 0.0, y = 0.0, z = 0.0;
    for (int i = 0; i < segments_; ++i) {
      const double a = v(a_index(i));
      const double b = v(b_index(i));
      const double c = dim_ == 3 ? v(dim_ * i + 2) : 0.0;
      z += x * b + 0.5 * a * b + c;
      x += a;
      y += b;
    }
    residual = Eigen::Vector3d(x, y, z) - target_;
    // dz/da_i = b_i/2 + sum_{j>i} b_j ; dz/db_i = x_i + a_i/2 ; dz/dc_i = 1
    double prefix_x = 0.0;
    std::vector<double> xs(static_cast<std::size_t>(segments_));
    for (int i = 0; i < segments_; ++i) {
      xs[static_cast<std::size_t>(i)] = prefix_x;
      prefix_x += v(a_index(i));
    }
    double b_after = 0.0;
    for (int i = segments_ - 1; i >= 0; --i) {
      const double a = v(a_index(i));
      const double b = v(b_index(i));
      jac(0, a_index(i)) = 1.0;
      jac(1, b_index(i)) = 1.0;
      jac(2, a_index(i)) = 0.5 * b + b_after;
      jac(2, b_index(i)) = xs[static_cast<std::size_t>(i)] + 0.5 * a;
      if (dim_ == 3) jac(2, dim_ * i + 2) = 1.0;
      b_after += b;
    }
  }

  [[nodiscard]] double length(const Eigen::VectorXd& v) const {
    double total = 0.0;
    for (int i = 0; i < segments_; ++i) total += v.segment(dim_ * i, dim_).norm();
    return total;
  }

  // Augmented-Lagrangian penalty phase (weight grows x10 while the endpoint
  // error stalls) followed by Newton on the KKT system. Returns a point
  // within `tol` of the target or nothing.
  std::optional<Eigen::VectorXd> solve(Eigen::VectorXd v, double tol) const {
    Eigen::Vector3d r;
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac;
    const double weight = 2.0 * segments_;
    Eigen::Vector3d lambda = Eigen::Vector3d::Zero();
    double mu = 10.0;
    evaluate(v, r, jac);
    double previous = r.norm();
    for (int outer = 0; outer < 25; ++outer) {
      auto merit = [&](const Eigen::VectorXd& w, Eigen::Vector3d& rr) {
        Eigen::Matrix<double, 3, Eigen::Dynamic> jj;
        evaluate(w, rr, jj);
        return 0.5 * weight * w.squaredNorm() - lambda.dot(rr) + 0.5 * mu * rr.squaredNorm();
      };
      double damping = 1e-8;
      Eigen::Vector3d rr;
      double phi = merit(v, rr);
      for (int it = 0; it < 80; ++it) {
        evaluate(v, r, jac);
        const Eigen::VectorXd grad = weight * v + jac.transpose() * (mu * r - lambda);
        if (grad.norm() < 1e-11 * (1.0 + weight * v.norm())) break;
        Eigen::MatrixXd hess = mu * jac.transpose() * jac + (mu * r(2) - lambda(2)) * hz_;
        hess.diagonal().array() += weight;
        bool moved = false;
        for (int tries = 0; tries < 30; ++tries) {
          Eigen::MatrixXd a = hess;
          a.diagonal().array() += damping;
          const Eigen::VectorXd step = a.ldlt().solve(-grad);
          if (step.allFinite() && grad.dot(step) < 0.0) {
            const Eigen::VectorXd candidate = v + step;
            const double phi_new = merit(candidate, rr);
            if (phi_new < phi) {
              v = candidate;
              phi = phi_new;
              damping = std::max(1e-10, damping * 0.1);
              moved = true;
              break;
            }
          }
          damping = std::max(1e-6, damping * 10.0);
        }
        if (!moved) break;
      }
      evaluate(v, r, jac);
      const double violation = r.norm();
      if (violation <= 1e-3) {
        if (auto polished = polish(v, lambda - mu * r, tol)) return polished;
      }
      if (violation <= tol) return v;
      lambda -= mu * r;
      if (violation > 0.25 * previous) mu *= 10.0;
      previous = violation;
      if (mu > 1e14) break;
    }
    return std::nullopt;
  }

 private:
  std::optional<Eigen::VectorXd> polish(Eigen::VectorXd v, Eigen::Vector3d lambda, double tol) const {
    Eigen::Vector3d r;
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac;
    const double weight = 2.0 * segments_;
    Eigen::MatrixXd kkt(n_ + 3, n_ + 3);
    Eigen::VectorXd rhs(n_ + 3);
    for (int it = 0; it < 40; ++it) {
      evaluate(v, r, jac);
      const Eigen::VectorXd stationarity = weight * v - jac.transpose() * lambda;
      if (r.norm() <= 1e-13 * (1.0 + target_.norm()) && stationarity.norm() <= 1e-10 * (1.0 + v.norm())) {
        break;
      }
      kkt.setZero();
      kkt.topLeftCorner(n_, n_) = -lambda(2) * hz_;
      kkt.topLeftCorner(n_, n_).diagonal().array() += weight;
      kkt.topRightCorner(n_, 3) = -jac.transpose();
      kkt.bottomLeftCorner(3, n_) = jac;
      rhs << -stationarity, -r;
      const Eigen::VectorXd step = kkt.partialPivLu().solve(rhs);
      if (!step.allFinite()) return std::nullopt;
      v += step.head(n_);
      lambda += step.tail<3>();
    }
    evaluate(v, r, jac);
    if (!v.allFinite() || r.norm() > tol) return std::nullopt;
    return v;
  }

  int dim_;
  int segments_;
  int n_;
  Eigen::Vector3d target_;
  Eigen::MatrixXd hz_;
};

// Signed symmetric-model height reached by a displacement sequence.
double path_height(const std::vector<Eigen::Vector2d>& steps) {
  double x = 0.0, y = 0.0, z = 0.0;
  for (const auto& d : steps) {
    z += 0.5 * (x * d.y() - y * d.x());
    x += d.x();
    y += d.y();
  }
  return z;
}

// Deterministic feasible initial guesses: a discretized circular arc through
// the target's planar projection for several swept angles, preceded by a
// closed polygonal loop whose enclosed area makes up the height deficit.
// In dimension 3 the deficit is instead spread over the vertical control,
// and the one-parameter subgroup through the target is added.
std::vector<Eigen::VectorXd> initial_guesses(int dim, int segments, const GroupPoint& target_pol) {
  const GroupPoint sym = convert_model(target_pol, Model::symmetric);
  const double chord = std::hypot(sym.x, sym.y);
  const double heading = chord > 0.0 ? std::atan2(sym.y, sym.x) : 0.0;
  constexpr std::array<double, 7> sweeps{0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5};

  std::vector<Eigen::VectorXd> guesses;
  auto pack = [&](const std::vector<Eigen::Vector2d>& steps, const std::vector<double>& vertical) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim * segments);
    for (int i = 0; i < segments; ++i) {
      v(dim * i) = steps[static_cast<std::size_t>(i)].x();
      v(dim * i + 1) = steps[static_cast<std::size_t>(i)].y();
      if (dim == 3) v(dim * i + 2) = vertical[static_cast<std::size_t>(i)];
    }
    guesses.push_back(std::move(v));
  };

  for (double sweep : sweeps) {
    const double phi = sweep * kPi;
    const double len = chord / sinc1(phi / 2.0);
    const double theta0 = heading - phi / 2.0;
    const bool with_loop = dim == 2;
    const int loop_segments = with_loop ? segments / 2 : 0;
    const int arc_segments = segments - loop_segments;
    std::vector<Eigen::Vector2d> arc;
    for (int i = 0; i < arc_segments; ++i) {
      const double theta = theta0 + phi * (i + 0.5) / arc_segments;
      arc.emplace_back(len / arc_segments * std::cos(theta), len / arc_segments * std::sin(theta));
    }
    const double deficit = sym.z - path_height(arc);
    std::vector<Eigen::Vector2d> steps;
    std::vector<double> vertical(static_cast<std::size_t>(segments), 0.0);
    if (with_loop) {
      // Regular polygon through the origin enclosing |deficit|.
      const double m = loop_segments;
      const double radius = std::sqrt(std::abs(deficit) / (0.5 * m * std::sin(2.0 * kPi / m)));
      const double orientation = deficit >= 0.0 ? 1.0 : -1.0;
      Eigen::Vector2d prev(0.0, 0.0);
      for (int i = 1; i <= loop_segments; ++i) {
        const double angle = orientation * 2.0 * kPi * i / m - kPi / 2.0;
        const Eigen::Vector2d point(radius * std::cos(angle), radius * (std::sin(angle) + 1.0));
        steps.push_back(point - prev);
        prev = point;
      }
      steps.back() -= prev;  // close exactly
    } else {
      std::fill(vertical.begin(), vertical.end(), deficit / segments);
    }
    steps.insert(steps.end(), arc.begin(), arc.end());
    pack(steps, vertical);
  }
  if (dim == 3) {
    const Eigen::Vector3d log = log_algebra(target_pol);
    Eigen::VectorXd v(dim * segments);
    for (int i = 0; i < segments; ++i) v.segment<3>(3 * i) = log / segments;
    guesses.push_back(std::move(v));
  }
  return guesses;
}

OracleResult control_oracle(const GroupPoint& p, const GroupPoint& q, int dim, int segments) {
  if (segments < 4) throw std::invalid_argument("control oracle needs at least 4 segments");
  OracleResult result;
  result.path.start = p;
  result.path.dimension = dim;
  const GroupPoint target = convert_model(group_mul(group_inv(p), q), Model::polarized);
  if (target.coords().squaredNorm() == 0.0) return result;

  constexpr double kEndpointTol = 1e-6;
  ControlProblem problem(dim, segments, target.coords());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v;
  for (auto& guess : initial_guesses(dim, segments, target)) {
    const auto solution = problem.solve(guess, kEndpointTol);
    if (!solution) continue;
    ++result.converged_starts;
    const double length = problem.length(*solution);
    if (length < best) {
      best = length;
      best_v = *solution;
    }
  }
  if (result.converged_starts == 0) {
    throw ConvergenceError("control optimizer did not reach the endpoint tolerance");
  }
  result.distance = best;
  for (int i = 0; i < segments; ++i) {
    ControlSegment seg;
    seg.duration = 1.0 / segments;
    seg.u.head(dim) = best_v.segment(dim * i, dim) * segments;
    result.path.controls.push_back(seg);
  }
  // Report the endpoint error of the path as a group path from p.
  ControlPath unit = result.path;
  unit.start = convert_model(p, Model::polarized);
  const GroupPoint reached = integrate_path(unit).endpoint;
  result.endpoint_error = (reached.coords() - convert_model(q, Model::polarized).coords()).norm();
  return result;
}

}  // namespace

OracleResult cc_distance_upper(const GroupPoint& p, const GroupPoint& q, int segments) {
  return control_oracle(p, q, 2, segments);
}

OracleResult contraction_distance(const GroupPoint& p, const GroupPoint& q, int segments) {
  return control_oracle(p, q, 3, segments);
}

// ---------------------------------------------------------------------------

DistanceEstimateReport estimate_constant(const Box3& box, int samples, std::uint64_t seed,
                                         DistanceBackend backend, unsigned threads) {
  if (samples < 100) throw std::invalid_argument("estimate_constant needs at least 100 samples");
  DistanceEstimateReport report;
  report.box = box;
  report.samples = samples;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    return GroupPoint::polarized(box.lo[0] + (box.hi[0] - box.lo[0]) * unit(rng),
                                 box.lo[1] + (box.hi[1] - box.lo[1]) * unit(rng),
                                 box.lo[2] + (box.hi[2] - box.lo[2]) * unit(rng));
  };
  std::vector<std::pair<GroupPoint, GroupPoint>> pairs;
  pairs.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    GroupPoint a = draw();
    GroupPoint b = draw();
    pairs.emplace_back(a, b);
  }

  std::vector<double> d_cc(pairs.size()), d_r(pairs.size());
  parallel_for(
      pairs.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const auto& [a, b] = pairs[i];
          if (a == b) continue;
          if (backend == DistanceBackend::closed_form) {
            d_cc[i] = cc_distance(a, b);
            d_r[i] = contraction_distance_exact(a, b);
          } else {
            d_cc[i] = cc_distance_upper(a, b, 32).distance;
            d_r[i] = contraction_distance(a, b, 32).distance;
          }
        }
      },
      threads, 8);

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i].second) {
      ++report.skipped;
      continue;
    }
    const double ratio = d_cc[i] / std::sqrt(d_r[i]);
    report.ratios.push_back(ratio);
    report.c_fit = std::max(report.c_fit, ratio);
    if (d_r[i] > d_cc[i] * (1.0 + 1e-6) + 1e-9) ++report.ordering_violations;
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i].second) continue;
    if (d_cc[i] > report.c_fit * std::sqrt(d_r[i])) ++report.violations;
  }
  return report;
}

}  // namespace heisen
