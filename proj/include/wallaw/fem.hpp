#pragma once

#include "wallaw/geometry.hpp"
#include "wallaw/numerics.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace wallaw {

/// Quadratic velocity / linear pressure (Taylor-Hood) space on a TriMesh.
///
/// Velocity nodes are the mesh vertices followed by the edge midpoints; node
/// `nv + e` sits at the midpoint of edge `e`. With `periodic` the nodes on the
/// x1 = width side are identified with their partners at x1 = 0, and every
/// unknown is indexed through `canonical`.
///
/// Midpoints of rough-wall edges sit on the wall profile itself; triangles
/// owning such an edge use the quadratic (isoparametric) element map, all
/// others stay affine. The map keeps x1 affine on every triangle.
struct P2P1Space {
  std::shared_ptr<const TriMesh> mesh;
  bool periodic = true;
  int n_vertices = 0;
  int n_nodes = 0;
  std::vector<Eigen::Vector2d> node_xy;
  std::vector<int> canonical;         ///< node -> canonical velocity node
  int n_canonical = 0;
  std::vector<int> pressure_index;    ///< vertex -> pressure unknown
  int n_pressure = 0;
  std::vector<std::array<int, 6>> tri_nodes;  ///< v0 v1 v2, mid(01) mid(12) mid(20)
  std::vector<char> curved;                   ///< per triangle: quadratic map

  /// Boundary segments of one tag: (node a, node b, midpoint node).
  std::vector<std::array<int, 3>> boundary_segments(BoundaryTag tag) const;
  /// Canonical nodes touched by boundary segments with the given tag.
  std::vector<int> canonical_nodes_on(BoundaryTag tag) const;
  /// Unit normal into the domain at a rough-boundary canonical node: the
  /// exact profile normal (chord normal at midpoints when the mesh carries no
  /// slope function).
  Eigen::Vector2d rough_normal(int canonical_node) const;

  int velocity_dofs() const { return 2 * n_canonical; }
  int ux(int canonical_node) const { return 2 * canonical_node; }
  int uy(int canonical_node) const { return 2 * canonical_node + 1; }

  std::vector<Eigen::Vector2d> rough_normal_by_canonical;
  std::vector<bool> has_rough_normal;
};

P2P1Space make_p2p1_space(std::shared_ptr<const TriMesh> mesh, bool periodic = true);

// ---------------------------------------------------------------------------
// Reference element
// ---------------------------------------------------------------------------

/// P2 shape functions at reference point (s, t) in local node order.
Eigen::Matrix<double, 6, 1> p2_shape(double s, double t);
/// Reference gradients d/ds, d/dt of the P2 shape functions (6 x 2).
Eigen::Matrix<double, 6, 2> p2_shape_grad(double s, double t);

/// Affine map through the three vertices.
struct ElementGeometry {
  Eigen::Vector2d origin;
  Eigen::Matrix2d jacobian;      ///< columns x1 - x0, x2 - x0
  Eigen::Matrix2d inv_jacobian;
  double det = 0.0;
};
ElementGeometry element_geometry(const P2P1Space& space, int tri);

/// The actual element map (quadratic on curved triangles) at (s, t).
struct PointGeometry {
  Eigen::Vector2d x;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inv_jacobian;
  double det = 0.0;
};
PointGeometry point_geometry(const P2P1Space& space, int tri, double s, double t);

/// Exact area of the discrete domain (curved triangles included).
double domain_area(const P2P1Space& space);

// ---------------------------------------------------------------------------
// Assembly (canonical velocity dofs interleaved x/y, then nothing else)
// ---------------------------------------------------------------------------

enum class ViscousForm {
  symmetric_gradient,  ///< coef * int D(u):D(v)
  full_gradient        ///< coef * int grad u : grad v
};

SparseMatrix assemble_viscous(const P2P1Space& space, ViscousForm form, double coef = 1.0);
SparseMatrix assemble_velocity_mass(const P2P1Space& space);
/// Rows = pressure unknowns, columns = velocity dofs: -int q div u.
SparseMatrix assemble_divergence(const P2P1Space& space);
/// int ((w . grad) u) . v for a frozen canonical velocity vector w.
SparseMatrix assemble_convection(const P2P1Space& space, const Eigen::VectorXd& w);
/// int_{tag} (u . tau)(v . tau) ds with the chord tangent of each edge.
SparseMatrix assemble_tangential_boundary_mass(const P2P1Space& space, BoundaryTag tag);
/// int_{tag} u . v ds.
SparseMatrix assemble_boundary_mass(const P2P1Space& space, BoundaryTag tag);
/// int_{tag} g(x, tau, nu) . v ds, g evaluated at quadrature points with the
/// edge chord tangent and the normal pointing into the domain.
Eigen::VectorXd assemble_boundary_load(
    const P2P1Space& space, BoundaryTag tag,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d& x, const Eigen::Vector2d& tau,
                                        const Eigen::Vector2d& nu)>& g);
/// Same, with g also receiving the trace of the velocity vector w at x.
Eigen::VectorXd assemble_boundary_trace_load(
    const P2P1Space& space, BoundaryTag tag, const Eigen::VectorXd& w,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d& x, const Eigen::Vector2d& tau,
                                        const Eigen::Vector2d& nu, const Eigen::Vector2d& w_at_x)>& g);
/// int f(x) . v dx.
Eigen::VectorXd assemble_volume_load(const P2P1Space& space,
                                     const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f);
/// int psi_q dx for every pressure unknown.
Eigen::VectorXd pressure_mean_row(const P2P1Space& space);

// ---------------------------------------------------------------------------
// Nodal constraints
// ---------------------------------------------------------------------------

/// Per canonical node: free, fully prescribed, or with a prescribed
/// component along a unit direction n (the orthogonal component stays free).
struct NodeConstraint {
  enum class Kind { free, fixed, directional };
  Kind kind = Kind::free;
  Eigen::Vector2d value = Eigen::Vector2d::Zero();  ///< fixed value
  Eigen::Vector2d direction = Eigen::Vector2d::UnitY();
  double directional_value = 0.0;                   ///< prescribed u . direction
};

/// Maps reduced unknowns z to full velocity u = P z + g.
struct ConstraintMap {
  SparseMatrix prolongation;  ///< velocity_dofs x n_free
  Eigen::VectorXd offset;     ///< g
  int n_free = 0;
};
ConstraintMap build_constraint_map(const P2P1Space& space, const std::vector<NodeConstraint>& c);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Eigen::Vector2d eval_velocity(const P2P1Space& space, const Eigen::VectorXd& u, int tri, double s,
                              double t);
/// Gradient (row i = component i, column j = d/dx_j).
Eigen::Matrix2d eval_velocity_gradient(const P2P1Space& space, const Eigen::VectorXd& u, int tri,
                                       double s, double t);
double eval_pressure(const P2P1Space& space, const Eigen::VectorXd& p, int tri, double s, double t);

/// Locates x (x1 taken modulo the width when periodic); returns triangle and
/// reference coordinates.
struct PointLocation {
  int tri = -1;
  double s = 0.0;
  double t = 0.0;
};
class PointLocator {
 public:
  explicit PointLocator(const P2P1Space& space);
  std::optional<PointLocation> locate(Eigen::Vector2d x) const;

 private:
  const P2P1Space* space_;
  double x0_, y0_, dx_, dy_;
  int nx_, ny_;
  std::vector<std::vector<int>> buckets_;
};

/// Integral of u1 along the vertical segment x1 = c through the mesh.
double cross_section_flux(const P2P1Space& space, const Eigen::VectorXd& u, double c);

/// Convex polygon clipping helpers used by norm integration.
using Polygon = std::vector<Eigen::Vector2d>;
/// Keeps the part with a . x >= b.
Polygon clip_halfplane(const Polygon& poly, const Eigen::Vector2d& a, double b);

/// Integrates f over the part of every triangle satisfying the clip
/// half-planes, with a collapsed Gauss rule of order n on each fan triangle.
/// f receives (triangle, s, t, physical point).
double integrate_clipped(const P2P1Space& space,
                         const std::vector<std::pair<Eigen::Vector2d, double>>& halfplanes,
                         const std::function<double(int, double, double, const Eigen::Vector2d&)>& f,
                         int order = 5);

}  // namespace wallaw
