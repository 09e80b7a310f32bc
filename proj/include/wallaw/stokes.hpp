#pragma once

#include "wallaw/fem.hpp"
#include "wallaw/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wallaw {

/// Condition at the rough wall.
struct BoundaryCondition {
  enum class Kind { dirichlet, navier, freeslip };
  Kind kind = Kind::dirichlet;
  double lambda = 0.0;  ///< slip length (navier only)

  static BoundaryCondition dirichlet() { return {Kind::dirichlet, 0.0}; }
  static BoundaryCondition navier(double lambda) { return {Kind::navier, lambda}; }
  static BoundaryCondition freeslip() { return {Kind::freeslip, 0.0}; }
  /// Parses "dirichlet", "navier:<lambda>" or "freeslip".
  static BoundaryCondition parse(const std::string& text);
};

std::string to_string(const BoundaryCondition& bc);

/// Discrete velocity/pressure pair on a channel mesh.
struct FlowField {
  std::shared_ptr<const P2P1Space> space;
  Eigen::VectorXd velocity;  ///< canonical P2 nodes, interleaved (u1, u2)
  Eigen::VectorXd pressure;  ///< x1-periodic part at P1 vertices
  /// Mean axial pressure drop G: total pressure = pressure - G x1.
  double pressure_gradient_multiplier = 0.0;
  double flux = 0.0;
  BoundaryCondition bc;
  int picard_iterations = 0;

  const TriMesh& mesh() const { return *space->mesh; }
  Eigen::Vector2d node_velocity(int canonical_node) const {
    return {velocity[2 * canonical_node], velocity[2 * canonical_node + 1]};
  }
};

// ---------------------------------------------------------------------------
// Generic constrained Stokes system
// ---------------------------------------------------------------------------

/// K u + B^T p + sum_i c_i gamma_i = f, B u (+ m mu) = 0, c_i . u = d_i,
/// with u = P z + g from the nodal constraints.
struct StokesSystem {
  const P2P1Space* space = nullptr;
  SparseMatrix velocity_operator;
  Eigen::VectorXd velocity_load;
  ConstraintMap constraints;
  std::vector<Eigen::VectorXd> velocity_multipliers;
  std::vector<double> multiplier_values;
  bool zero_mean_pressure = true;
};

struct StokesSolution {
  Eigen::VectorXd velocity;
  Eigen::VectorXd pressure;
  std::vector<double> multipliers;
};

StokesSolution solve_constrained_stokes(const StokesSystem& system);

// ---------------------------------------------------------------------------
// Channel problems
// ---------------------------------------------------------------------------

/// Steady Stokes flow in the periodic channel with prescribed flux
/// (integral of u1 over any vertical section), no-slip at the top and the
/// given condition at the rough wall.
FlowField solve_stokes(std::shared_ptr<const TriMesh> mesh, double flux, BoundaryCondition bc);
FlowField solve_stokes(std::shared_ptr<const P2P1Space> space, double flux, BoundaryCondition bc);

struct PicardOptions {
  double tol = 1e-10;
  double phi0 = 0.5;       ///< small-data threshold; larger fluxes warn
  int max_iterations = 50;
  int growth_limit = 3;    ///< consecutive increment growths tolerated
};

/// Navier-Stokes by Picard iteration on the frozen convection field,
/// starting from the Stokes solution. Throws PicardDiverged.
FlowField solve_navier_stokes(std::shared_ptr<const TriMesh> mesh, double flux, BoundaryCondition bc,
                              double tol = 1e-10);
FlowField solve_navier_stokes(std::shared_ptr<const P2P1Space> space, double flux,
                              BoundaryCondition bc, const PicardOptions& options);

/// Constraints for the channel: zero velocity at the top, the wall condition at
/// the rough boundary.
std::vector<NodeConstraint> channel_constraints(const P2P1Space& space, const BoundaryCondition& bc);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Closed-form velocity with its gradient (row = component).
struct AnalyticField {
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> value;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> gradient;
};

struct ErrorNorms {
  double l2 = 0.0;            ///< L2 over the part of the mesh with x2 > 0
  double h1 = 0.0;            ///< sqrt(l2^2 + |grad e|^2 over the whole mesh)
  double slice_sup_l2 = 0.0;  ///< max over unit x1-slices of the per-length L2 norm
};

/// Error against a closed form, which is extended by zero below x2 = 0.
ErrorNorms error_norms(const FlowField& f, const AnalyticField& ref);
/// Error against another field on the same mesh; throws MeshMismatch.
ErrorNorms error_norms(const FlowField& f, const FlowField& ref);

double cross_section_flux(const FlowField& f, double x1);
/// max over pressure basis functions of |int q div u|.
double divergence_residual(const FlowField& f);
/// 2 int |D(u)|^2 + (2/lambda) int_Gamma |u_tau|^2 for navier.
double dissipation(const FlowField& f);
/// max |u . nu| over rough-boundary nodes.
double max_normal_velocity(const FlowField& f);

void write_field_vtk(std::ostream& os, const FlowField& f);

}  // namespace wallaw
