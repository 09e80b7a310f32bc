#pragma once

#include "wallaw/fem.hpp"
#include "wallaw/profiles.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>

namespace wallaw {

/// Lateral sides of the cell R_Y = {omega(y1) < y2 < Y}: periodic over the
/// profile period, or a slice [0, A] whose sides carry no condition.
struct Lateral {
  enum class Kind { periodic, slice };
  Kind kind = Kind::periodic;
  double width = 0.0;  ///< A, slice only

  static Lateral periodic() { return {Kind::periodic, 0.0}; }
  static Lateral slice(double a) { return {Kind::slice, a}; }
  /// "periodic" or "slice:<A>".
  static Lateral parse(const std::string& text);
};
std::string to_string(const Lateral& l);

struct InequalityOptions {
  double h = 0.05;                 ///< wall spacing of the cell mesh
  double degenerate_tol = 1e-10;   ///< lambda_min below this flags degeneracy
  bool noslip_rough = false;       ///< u = 0 on the rough wall instead of u . nu = 0
};

struct InequalityReport {
  enum class Kind { poincare_H1, korn_H2, korn_classical };
  Kind kind = Kind::poincare_H1;
  double lambda_min = 0.0;
  double constant = 0.0;  ///< 1 / sqrt(lambda_min), infinite for degenerate cells
  bool degenerate = false;
  std::string profile_id;
  double depth = 0.0;
  Lateral lateral;
  std::shared_ptr<const P2P1Space> space;
  Eigen::VectorXd eigenvector;  ///< mass-normalized velocity
};
std::string to_string(InequalityReport::Kind kind);

/// min int |grad u|^2 / int |u|^2 over fields tangent to the rough wall.
InequalityReport poincare_constant(const RoughnessProfile& p, double depth_Y, const Lateral& lateral,
                                   const InequalityOptions& options = {});
/// Same with int |D(u)|^2 in the numerator.
InequalityReport korn_constant(const RoughnessProfile& p, double depth_Y, const Lateral& lateral,
                               const InequalityOptions& options = {});
/// min int (|u|^2 + |D(u)|^2) / int (|u|^2 + |grad u|^2) with no boundary condition.
InequalityReport korn_classical_check(const RoughnessProfile& p, double depth_Y,
                                      const Lateral& lateral = Lateral::periodic(),
                                      const InequalityOptions& options = {});

}  // namespace wallaw
