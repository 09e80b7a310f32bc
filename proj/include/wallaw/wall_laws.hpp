#pragma once

#include "wallaw/boundary_layer.hpp"
#include "wallaw/stokes.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace wallaw {

/// Explicit homogenized flows on the unit channel 0 < x2 < 1.
struct ClosedFormFlow {
  enum class Kind { poiseuille, corrector_u1, navier_wall_law, composite };
  Kind kind = Kind::poiseuille;
  double flux = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> evaluator;
  /// Empty for the composite expansion.
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> gradient;

  Eigen::Vector2d operator()(double x1, double x2) const { return evaluator({x1, x2}); }
  AnalyticField analytic() const { return {evaluator, gradient}; }
};

std::string to_string(ClosedFormFlow::Kind kind);

/// (6 phi x2 (1 - x2), 0).
ClosedFormFlow poiseuille(double flux);
/// Couette-Poiseuille corrector (6 phi alpha (3 x2^2 - 4 x2), 0).
ClosedFormFlow corrector_u1(double flux, double alpha);
/// 6 phi U_N(x2) with slip eps alpha / (1 + 4 eps alpha) at x2 = 0.
/// Throws DegenerateDenominator when 1 + 4 eps alpha <= 1e-12.
ClosedFormFlow navier_wall_law(double flux, double alpha, double eps);
/// u0 + 6 phi eps v(x/eps) + eps u1 + 6 phi eps^2 v1(x/eps); the cell fields are
/// copied. Throws MeshMismatch when bl1 does not live on the mesh of bl.
ClosedFormFlow composite(double flux, double eps, const BLResult& bl, const std::optional<BLResult>& bl1);

}  // namespace wallaw
