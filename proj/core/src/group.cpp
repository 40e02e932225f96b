#include "heisen/group.hpp"

#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace heisen {

std::string_view to_string(Model model) {
  return model == Model::polarized ? "polarized" : "symmetric";
}

Model model_from_string(std::string_view name) {
  if (name == "polarized") return Model::polarized;
  if (name == "symmetric") return Model::symmetric;
  throw std::invalid_argument("unknown coordinate model '" + std::string(name) + "'");
}

bool GroupPoint::is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

LatticePoint operator*(const LatticePoint& a, const LatticePoint& b) {
  return {a.m + b.m, a.n + b.n, a.k + b.k + a.m * b.n};
}

LatticePoint lattice_inv(const LatticePoint& a) { return {-a.m, -a.n, -a.k + a.m * a.n}; }

namespace {

void require_same_model(const GroupPoint& p, const GroupPoint& q) {
  if (p.model != q.model) {
    throw ModelMismatch("group operation mixes " + std::string(to_string(p.model)) + " and " +
                        std::string(to_string(q.model)) + " coordinates");
  }
}

}  // namespace

GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q) {
  require_same_model(p, q);
  const double twist =
      p.model == Model::polarized ? p.x * q.y : 0.5 * (p.x * q.y - p.y * q.x);
  return {p.model, p.x + q.x, p.y + q.y, p.z + q.z + twist};
}

GroupPoint group_inv(const GroupPoint& p) {
  if (p.model == Model::polarized) return {p.model, -p.x, -p.y, -p.z + p.x * p.y};
  return {p.model, -p.x, -p.y, -p.z};
}

GroupPoint convert_model(const GroupPoint& p, Model target) {
  if (p.model == target) return p;
  const double half_xy = 0.5 * p.x * p.y;
  if (target == Model::symmetric) return {target, p.x, p.y, p.z - half_xy};
  return {target, p.x, p.y, p.z + half_xy};
}

GroupPoint dilate(double t, const GroupPoint& p) {
  if (!(t > 0.0)) throw std::invalid_argument("dilation parameter must be positive");
  return {p.model, t * p.x, t * p.y, t * t * p.z};
}

GroupPoint exp_algebra(Model model, const Eigen::Vector3d& c) {
  if (model == Model::polarized) return {model, c.x(), c.y(), c.z() + 0.5 * c.x() * c.y()};
  return {model, c.x(), c.y(), c.z()};
}

Eigen::Vector3d log_algebra(const GroupPoint& p) {
  if (p.model == Model::polarized) return {p.x, p.y, p.z - 0.5 * p.x * p.y};
  return {p.x, p.y, p.z};
}

FrameMatrix left_invariant_frame(const GroupPoint& p) {
  FrameMatrix frame;
  if (p.model == Model::polarized) {
    // X1 = d/dx, X2 = d/dy + x d/dz, X3 = d/dz
    frame.columns(2, 1) = p.x;
  } else {
    // X1 = d/dx - (y/2) d/dz, X2 = d/dy + (x/2) d/dz, X3 = d/dz
    frame.columns(2, 0) = -0.5 * p.y;
    frame.columns(2, 1) = 0.5 * p.x;
  }
  return frame;
}

Cometric cometric(const GroupPoint& p) {
  const auto horizontal = left_invariant_frame(p).horizontal();
  return {horizontal * horizontal.transpose()};
}

VectorField frame_field(Model model, int index) {
  if (index < 1 || index > 3) throw std::invalid_argument("frame index must be 1, 2 or 3");
  return [model, index](const Eigen::Vector3d& c) -> Eigen::Vector3d {
    return left_invariant_frame(GroupPoint::from_coords(model, c)).columns.col(index - 1);
  };
}

namespace {

Eigen::Matrix3d jacobian(const VectorField& X, const Eigen::Vector3d& p, double step) {
  Eigen::Matrix3d jac;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d forward = p;
    Eigen::Vector3d backward = p;
    forward(j) += step;
    backward(j) -= step;
    jac.col(j) = (X(forward) - X(backward)) / (2.0 * step);
  }
  return jac;
}

int numerical_rank(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-8 * sv(0)) ++rank;
  }
  return rank;
}

}  // namespace

Eigen::Vector3d lie_bracket(const VectorField& X, const VectorField& Y, const Eigen::Vector3d& p,
                            double step) {
  return jacobian(Y, p, step) * X(p) - jacobian(X, p, step) * Y(p);
}

Eigen::Vector3d flow_rk4(const VectorField& X, const Eigen::Vector3d& p, double t, int steps) {
  if (steps <= 0) throw std::invalid_argument("flow_rk4 needs a positive step count");
  const double h = t / steps;
  Eigen::Vector3d q = p;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = X(q);
    const Eigen::Vector3d k2 = X(q + 0.5 * h * k1);
    const Eigen::Vector3d k3 = X(q + 0.5 * h * k2);
    const Eigen::Vector3d k4 = X(q + h * k3);
    q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return q;
}

int hormander_rank(std::span<const VectorField> distribution, const Eigen::Vector3d& p) {
  std::vector<Eigen::Vector3d> columns;
  for (const auto& field : distribution) columns.push_back(field(p));
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    for (std::size_t j = i + 1; j < distribution.size(); ++j) {
      columns.push_back(lie_bracket(distribution[i], distribution[j], p));
    }
  }
  Eigen::MatrixXd m(3, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = columns[c];
  return numerical_rank(m);
}

int hormander_rank(const GroupPoint& p) {
  const std::array<VectorField, 2> horizontal{frame_field(p.model, 1), frame_field(p.model, 2)};
  return hormander_rank(horizontal, p.coords());
}

int horizontal_rank(const GroupPoint& p) {
  return numerical_rank(left_invariant_frame(p).horizontal());
}

std::pair<VectorField, VectorField> perturbed_field_pair() {
  // X1 and X2 of the polarized model plus smooth terms that break nilpotency.
  VectorField x = [](const Eigen::Vector3d& c) -> Eigen::Vector3d {
    return {1.0 + 0.2 * c.y(), 0.3 * std::sin(c.z()), 0.25 * c.y() * c.y()};
  };
  VectorField y = [](const Eigen::Vector3d& c) -> Eigen::Vector3d {
    return {0.2 * c.z() * c.z(), 1.0 + 0.15 * c.x(), c.x() + 0.3 * c.x() * c.x()};
  };
  return {std::move(x), std::move(y)};
}

CommutatorResult commutator_flow_residual(double t, bool horizontal) {
  if (std::abs(t) > 1.0) throw std::invalid_argument("commutator flow needs |t| <= 1");
  CommutatorResult result;
  if (horizontal) {
    // Exact flows: the flow of X_i for time s from p is p * exp(s X_i).
    const auto step = [](const GroupPoint& p, double a, double b) {
      return group_mul(p, exp_algebra(Model::polarized, {a, b, 0.0}));
    };
    GroupPoint p = GroupPoint::identity(Model::polarized);
    p = step(p, t, 0.0);
    p = step(p, 0.0, t);
    p = step(p, -t, 0.0);
    p = step(p, 0.0, -t);
    const GroupPoint target = exp_algebra(Model::polarized, {0.0, 0.0, t * t});
    result.endpoint = p.coords();
    result.residual = p.coords() - target.coords();
    return result;
  }

  const auto [X, Y] = perturbed_field_pair();
  constexpr int kSteps = 400;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  p = flow_rk4(X, p, t, kSteps);
  p = flow_rk4(Y, p, t, kSteps);
  p = flow_rk4(X, p, -t, kSteps);
  p = flow_rk4(Y, p, -t, kSteps);
  const VectorField bracket = [X = X, Y = Y](const Eigen::Vector3d& c) { return lie_bracket(X, Y, c); };
  const Eigen::Vector3d target = flow_rk4(bracket, Eigen::Vector3d::Zero(), t * t, kSteps);
  result.endpoint = p;
  result.residual = p - target;
  return result;
}

double commutator_order_slope(std::span<const double> ts) {
  if (ts.size() < 2) throw std::invalid_argument("slope fit needs at least two step sizes");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : ts) {
    const double lx = std::log(t);
    const double ly = std::log(commutator_flow_residual(t, false).residual.norm());
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(ts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace heisen
