#include "wallaw/wall_laws.hpp"

#include "wallaw/errors.hpp"

#include <cmath>
#include <memory>

namespace wallaw {

namespace {

// parallel flow (f(x2), 0) with f = a x2^2 + b x2 + c
ClosedFormFlow quadratic(ClosedFormFlow::Kind kind, double a, double b, double c) {
  ClosedFormFlow f;
  f.kind = kind;
  f.evaluator = [a, b, c](const Eigen::Vector2d& x) {
    return Eigen::Vector2d((a * x.y() + b) * x.y() + c, 0.0);
  };
  f.gradient = [a, b](const Eigen::Vector2d& x) {
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    g(0, 1) = 2 * a * x.y() + b;
    return g;
  };
  return f;
}

// owns a cell result together with its evaluator, which points into it
struct Cell {
  explicit Cell(const BLResult& b) : r(b), ev(r) {}
  BLResult r;
  CellEvaluator ev;
};

}  // namespace

std::string to_string(ClosedFormFlow::Kind kind) {
  switch (kind) {
    case ClosedFormFlow::Kind::poiseuille: return "poiseuille";
    case ClosedFormFlow::Kind::corrector_u1: return "u1";
    case ClosedFormFlow::Kind::navier_wall_law: return "navier";
    case ClosedFormFlow::Kind::composite: return "composite";
  }
  return "?";
}

ClosedFormFlow poiseuille(double flux) {
  ClosedFormFlow f = quadratic(ClosedFormFlow::Kind::poiseuille, -6 * flux, 6 * flux, 0.0);
  f.flux = flux;
  return f;
}

ClosedFormFlow corrector_u1(double flux, double alpha) {
  const double s = 6 * flux * alpha;
  ClosedFormFlow f = quadratic(ClosedFormFlow::Kind::corrector_u1, 3 * s, -4 * s, 0.0);
  f.flux = flux;
  f.alpha = alpha;
  return f;
}

ClosedFormFlow navier_wall_law(double flux, double alpha, double eps) {
  const double d = 1 + 4 * eps * alpha;
  if (!(d > 1e-12)) throw DegenerateDenominator("navier_wall_law: 1 + 4 eps alpha must be positive");
  const double s = 6 * flux;
  ClosedFormFlow f = quadratic(ClosedFormFlow::Kind::navier_wall_law, -s * (1 + eps * alpha) / d, s / d,
                               s * eps * alpha / d);
  f.flux = flux;
  f.alpha = alpha;
  f.eps = eps;
  return f;
}

ClosedFormFlow composite(double flux, double eps, const BLResult& bl, const std::optional<BLResult>& bl1) {
  if (!(eps > 0.0)) throw PreconditionError("composite: eps must be positive");
  if (!bl.field.space) throw PreconditionError("composite: empty boundary-layer result");
  if (bl1 && bl1->field.space != bl.field.space) throw MeshMismatch("composite: v1 lives on another cell mesh");
  const auto v = std::make_shared<const Cell>(bl);
  const auto v1 = bl1 ? std::make_shared<const Cell>(*bl1) : nullptr;
  const ClosedFormFlow u0 = poiseuille(flux), u1 = corrector_u1(flux, bl.alpha);
  ClosedFormFlow f;
  f.kind = ClosedFormFlow::Kind::composite;
  f.flux = flux;
  f.alpha = bl.alpha;
  f.eps = eps;
  f.evaluator = [=](const Eigen::Vector2d& x) {
    const Eigen::Vector2d y = x / eps;
    Eigen::Vector2d u = u0.evaluator(x) + 6 * flux * eps * v->ev(y) + eps * u1.evaluator(x);
    if (v1) u += 6 * flux * eps * eps * v1->ev(y);
    return u;
  };
  return f;
}

}  // namespace wallaw
