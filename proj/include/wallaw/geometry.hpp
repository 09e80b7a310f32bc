#pragma once

#include "wallaw/profiles.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace wallaw {

enum class BoundaryTag { rough, top, periodic_master, periodic_slave };

std::string to_string(BoundaryTag tag);

struct BoundaryEdge {
  int edge = -1;  ///< index into TriMesh::edges
  BoundaryTag tag = BoundaryTag::rough;
};

/// Boundary-fitted triangulation of an x1-periodic strip
/// {0 <= x1 <= width, bottom(x1) < x2 < top}. The right-hand column of
/// vertices (x1 = width) duplicates the left one; `periodic_pairing` maps
/// each such slave vertex to its master.
struct TriMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;       ///< counter-clockwise
  std::vector<std::array<int, 2>> edges;           ///< unique, (lo, hi) vertex ids
  std::vector<std::array<int, 3>> triangle_edges;  ///< edge k joins local vertices k, k+1
  std::vector<BoundaryEdge> boundary_edges;
  std::map<int, int> periodic_pairing;
  /// Inward unit normal (pointing into the fluid) at rough-boundary vertices,
  /// taken from the exact profile slope.
  std::map<int, Eigen::Vector2d> rough_normals;
  double width = 1.0;
  double top = 1.0;
  double h_max = 0.0;
  /// Roughness scale: eps for channel meshes, 1 for cell meshes.
  double scale = 1.0;
  std::function<double(double)> bottom;
  std::function<double(double)> bottom_slope;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double signed_area(int t) const;
  double area() const;
  double min_angle_deg() const;
  /// Vertex ids lying on boundary edges with the given tag (sorted, unique).
  std::vector<int> vertices_with_tag(BoundaryTag tag) const;
};

/// Layout parameters of the graded terrain-following mesher.
struct StripSpec {
  double width = 1.0;
  std::function<double(double)> bottom;
  std::function<double(double)> bottom_slope;
  double top = 1.0;
  double wall_spacing = 0.05;  ///< element size along the rough wall
  double layer_scale = 1.0;    ///< roughness length scale; grading bands scale with it
  double max_spacing = 0.25;   ///< coarsest element size allowed in the bulk
  int column_multiple = 1;     ///< wall columns are a multiple of this (roughness periods)
  double min_angle_deg = 15.0;
};

/// Structured mesher: uniform columns near the wall, column count halved in
/// successive bands whose thickness doubles away from the wall, vertical
/// coordinate blended from the rough bottom to a flat top.
TriMesh build_strip_mesh(const StripSpec& spec);

/// Mesh of the rough channel {0 <= x1 < W, eps*omega(x1/eps) < x2 < 1}.
/// eps must be 1/N; W = 1 unless the roughness period exceeds it.
/// Wall spacing is h/2. Throws ResolutionError if h > eps/4.
TriMesh build_channel_mesh(const RoughnessProfile& p, double eps, double h);

/// Mesh of the truncated boundary-layer cell {0 <= y1 < P, omega(y1) < y2 < H}.
TriMesh build_cell_mesh(const RoughnessProfile& p, double H, double h);

/// Returns N when eps = 1/N (to 1e-9 relative); otherwise throws PreconditionError.
int eps_to_periods(double eps);

/// Length of the computational window for a channel with this profile and eps.
double channel_window(const RoughnessProfile& p, double eps);

void write_vtk(std::ostream& os, const TriMesh& mesh, const std::string& title = "wallaw mesh");
void write_vertex_csv(std::ostream& os, const TriMesh& mesh);

}  // namespace wallaw
