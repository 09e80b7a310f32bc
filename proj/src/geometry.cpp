#include "wallaw/geometry.hpp"

#include "wallaw/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace wallaw {

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::rough: return "rough";
    case BoundaryTag::top: return "top";
    case BoundaryTag::periodic_master: return "periodic_master";
    case BoundaryTag::periodic_slave: return "periodic_slave";
  }
  return "unknown";
}

double TriMesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Eigen::Vector2d a = vertices[tri[1]] - vertices[tri[0]];
  const Eigen::Vector2d b = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

double TriMesh::area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(static_cast<int>(t));
  return s;
}

namespace {

double triangle_min_angle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c) {
  auto angle = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& r) {
    const Eigen::Vector2d u = q - p;
    const Eigen::Vector2d v = r - p;
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)}) * 180.0 / std::numbers::pi;
}

}  // namespace

double TriMesh::min_angle_deg() const {
  double m = 180.0;
  for (const auto& t : triangles)
    m = std::min(m, triangle_min_angle(vertices[t[0]], vertices[t[1]], vertices[t[2]]));
  return m;
}

std::vector<int> TriMesh::vertices_with_tag(BoundaryTag tag) const {
  std::set<int> ids;
  for (const auto& be : boundary_edges)
    if (be.tag == tag) {
      ids.insert(edges[be.edge][0]);
      ids.insert(edges[be.edge][1]);
    }
  return {ids.begin(), ids.end()};
}

namespace {

struct Band {
  int columns;
  std::vector<double> levels;  // zeta values of row tops in this band
  bool coarsens = false;       // the top row halves the column count
};

std::vector<Band> layout_bands(const StripSpec& spec, int n0, double z_top) {
  std::vector<Band> bands;
  const double l = spec.layer_scale;
  double z = 0.0;
  int cols = n0;
  int level = 0;
  const double s0 = spec.width / n0;
  while (z < z_top - 1e-14) {
    const double spacing = s0 * std::pow(2.0, level);
    const bool can_coarsen = cols % 2 == 0 && cols / 2 >= 4 && 2.0 * spacing <= spec.max_spacing * (1 + 1e-12);
    double band_end = level == 0 ? 0.5 * l : l * std::pow(2.0, level - 1);
    if (!can_coarsen || band_end >= z_top) band_end = z_top;
    const double thickness = band_end - z;
    const int rows = std::max(1, static_cast<int>(std::ceil(thickness / spacing - 1e-9)));
    Band b;
    b.columns = cols;
    b.coarsens = can_coarsen && band_end < z_top;
    for (int r = 1; r <= rows; ++r) b.levels.push_back(r == rows ? band_end : z + thickness * r / rows);
    bands.push_back(std::move(b));
    z = band_end;
    if (can_coarsen) {
      cols /= 2;
      ++level;
    }
  }
  return bands;
}

/// Picks the quad diagonal that maximizes the minimum angle.
void split_quad(const std::vector<Eigen::Vector2d>& v, int a, int b, int c, int d,
                std::vector<std::array<int, 3>>& tris) {
  // a = bottom-left, b = bottom-right, c = top-right, d = top-left
  const double q1 = std::min(triangle_min_angle(v[a], v[b], v[c]), triangle_min_angle(v[a], v[c], v[d]));
  const double q2 = std::min(triangle_min_angle(v[a], v[b], v[d]), triangle_min_angle(v[b], v[c], v[d]));
  if (q1 >= q2) {
    tris.push_back({a, b, c});
    tris.push_back({a, c, d});
  } else {
    tris.push_back({a, b, d});
    tris.push_back({b, c, d});
  }
}

void finalize_topology(TriMesh& m) {
  std::map<std::pair<int, int>, int> edge_index;
  m.triangle_edges.resize(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = m.triangles[t][k];
      int b = m.triangles[t][(k + 1) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.emplace(std::make_pair(key.first, key.second),
                                               static_cast<int>(m.edges.size()));
      if (inserted) m.edges.push_back({key.first, key.second});
      m.triangle_edges[t][k] = it->second;
    }
  }
  double hmax = 0.0;
  for (const auto& e : m.edges) hmax = std::max(hmax, (m.vertices[e[0]] - m.vertices[e[1]]).norm());
  m.h_max = hmax;
}

int lookup_edge(const TriMesh& m, int a, int b) {
  const auto key = std::minmax(a, b);
  for (std::size_t e = 0; e < m.edges.size(); ++e)
    if (m.edges[e][0] == key.first && m.edges[e][1] == key.second) return static_cast<int>(e);
  return -1;
}

}  // namespace

TriMesh build_strip_mesh(const StripSpec& spec) {
  if (!spec.bottom || !spec.bottom_slope) throw PreconditionError("build_strip_mesh: missing bottom");
  if (!(spec.width > 0.0) || !(spec.wall_spacing > 0.0) || !(spec.layer_scale > 0.0))
    throw PreconditionError("build_strip_mesh: width, spacing and layer scale must be positive");

  // Column count: roughness period count times a power of two, so that
  // halving the spacing exactly doubles every band.
  const long raw = static_cast<long>(std::ceil(spec.width / spec.wall_spacing - 1e-9));
  long n0_long = std::max(1, spec.column_multiple);
  while (n0_long < raw || n0_long < 4) n0_long *= 2;
  if (n0_long > 1'000'000) throw PreconditionError("build_strip_mesh: too many columns");
  const int n0 = static_cast<int>(n0_long);

  std::vector<double> xs_bottom(n0 + 1);
  double mean_bottom = 0.0;
  double min_bottom = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n0; ++i) {
    const double x = spec.width * i / n0;
    xs_bottom[i] = spec.bottom(x);
    if (i < n0) mean_bottom += xs_bottom[i];
    min_bottom = std::min(min_bottom, xs_bottom[i]);
  }
  mean_bottom /= n0;
  for (int i = 0; i <= n0; ++i)
    if (!(xs_bottom[i] < spec.top)) throw PreconditionError("build_strip_mesh: bottom reaches the top");

  const double z_top = spec.top - mean_bottom;
  const double blend = 2.0 * spec.layer_scale;
  const double tail = std::exp(-z_top / blend);
  auto damping = [&](double z) { return (std::exp(-z / blend) - tail) / (1.0 - tail); };

  TriMesh m;
  m.width = spec.width;
  m.top = spec.top;
  m.bottom = spec.bottom;
  m.bottom_slope = spec.bottom_slope;
  auto make_line = [&](int cols, double z) {
    std::vector<int> ids(cols + 1);
    for (int i = 0; i <= cols; ++i) {
      const double x = (i == cols) ? spec.width : spec.width * i / cols;
      double y;
      if (z == 0.0) {
        y = spec.bottom(x);
      } else if (z >= z_top) {
        y = spec.top;
      } else {
        y = mean_bottom + z + (spec.bottom(x) - mean_bottom) * damping(z);
      }
      ids[i] = static_cast<int>(m.vertices.size());
      m.vertices.emplace_back(x, y);
    }
    m.periodic_pairing[ids[cols]] = ids[0];
    return ids;
  };

  const auto bands = layout_bands(spec, n0, z_top);
  std::vector<int> below = make_line(n0, 0.0);
  const std::vector<int> bottom_line = below;
  std::vector<int> left_side{below.front()};
  std::vector<int> right_side{below.back()};
  int below_cols = n0;
  // The transition row is the last row of the finer band, so refinement
  // doubles every row count including the transitions.
  for (const auto& band : bands) {
    for (std::size_t r = 0; r < band.levels.size(); ++r) {
      const double z = band.levels[r];
      const int cols = (band.coarsens && r + 1 == band.levels.size()) ? band.columns / 2 : band.columns;
      std::vector<int> above = make_line(cols, z);
      if (cols == below_cols) {
        for (int i = 0; i < cols; ++i)
          split_quad(m.vertices, below[i], below[i + 1], above[i + 1], above[i], m.triangles);
      } else {
        for (int c = 0; c < cols; ++c) {
          const int f0 = below[2 * c], f1 = below[2 * c + 1], f2 = below[2 * c + 2];
          m.triangles.push_back({f0, f1, above[c]});
          m.triangles.push_back({f1, f2, above[c + 1]});
          m.triangles.push_back({f1, above[c + 1], above[c]});
        }
      }
      left_side.push_back(above.front());
      right_side.push_back(above.back());
      below = std::move(above);
      below_cols = cols;
    }
  }
  const std::vector<int> top_line = below;

  finalize_topology(m);

  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t)
    if (!(m.signed_area(t) > 0.0))
      throw MeshQualityError("build_strip_mesh: inverted triangle (bottom too steep for the blend map)");
  const double min_angle = m.min_angle_deg();
  if (min_angle < spec.min_angle_deg) {
    std::ostringstream os;
    os << "build_strip_mesh: minimum angle " << min_angle << " deg below " << spec.min_angle_deg;
    throw MeshQualityError(os.str());
  }

  auto tag_polyline = [&](const std::vector<int>& line, BoundaryTag tag) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i)
      m.boundary_edges.push_back({lookup_edge(m, line[i], line[i + 1]), tag});
  };
  tag_polyline(bottom_line, BoundaryTag::rough);
  tag_polyline(top_line, BoundaryTag::top);
  tag_polyline(left_side, BoundaryTag::periodic_master);
  tag_polyline(right_side, BoundaryTag::periodic_slave);
  for (const auto& be : m.boundary_edges)
    if (be.edge < 0) throw MeshQualityError("build_strip_mesh: boundary edge not found");

  for (int id : bottom_line) {
    const double x = m.vertices[id].x();
    Eigen::Vector2d nu(-spec.bottom_slope(x), 1.0);
    m.rough_normals[id] = nu.normalized();
  }
  return m;
}

int eps_to_periods(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("eps must lie in (0, 1]");
  const double inv = 1.0 / eps;
  const long n = std::lround(inv);
  if (n < 1 || std::abs(inv - static_cast<double>(n)) > 1e-9 * inv) {
    std::ostringstream os;
    os << "eps = " << eps << " is not of the form 1/N";
    throw PreconditionError(os.str());
  }
  return static_cast<int>(n);
}

double channel_window(const RoughnessProfile& p, double eps) {
  eps_to_periods(eps);
  if (p.is_flat() || !p.period) {
    if (!p.is_flat()) throw PreconditionError("channel mesh requires a periodic (or periodized) profile");
    return 1.0;
  }
  const double cell = eps * *p.period;  // physical roughness period
  if (cell >= 1.0 - 1e-12) return cell;
  const double count = 1.0 / cell;
  if (std::abs(count - std::round(count)) > 1e-9 * count)
    throw PreconditionError("roughness period eps*P must divide the unit window");
  return 1.0;
}

TriMesh build_channel_mesh(const RoughnessProfile& p, double eps, double h) {
  const int n_periods_unit = eps_to_periods(eps);
  (void)n_periods_unit;
  if (!(h > 0.0)) throw PreconditionError("build_channel_mesh: h must be positive");
  if (!p.is_flat() && h > eps / 4.0 * (1 + 1e-12)) {
    std::ostringstream os;
    os << "h = " << h << " exceeds eps/4 = " << eps / 4.0;
    throw ResolutionError(os.str());
  }
  const double window = channel_window(p, eps);
  StripSpec spec;
  spec.width = window;
  spec.bottom = [p, eps](double x) { return eps * p.eval(x / eps); };
  spec.bottom_slope = [p, eps](double x) { return p.deriv(x / eps); };
  spec.top = 1.0;
  spec.wall_spacing = 0.5 * h;
  spec.layer_scale = p.is_flat() ? std::max(eps, h) : eps;
  spec.max_spacing = std::min(0.25, std::max(h, h / eps));
  spec.column_multiple = p.is_flat() ? 1 : static_cast<int>(std::lround(window / (eps * *p.period)));
  TriMesh m = build_strip_mesh(spec);
  m.scale = eps;
  return m;
}

TriMesh build_cell_mesh(const RoughnessProfile& p, double H, double h) {
  if (!(H >= 2.0)) throw PreconditionError("build_cell_mesh: truncation height H must be >= 2");
  if (!(h > 0.0)) throw PreconditionError("build_cell_mesh: h must be positive");
  if (!p.is_flat() && !p.period) throw PreconditionError("build_cell_mesh: profile must be periodic");
  const double width = p.is_flat() ? 1.0 : *p.period;
  if (!p.is_flat() && h > width / 4.0) throw ResolutionError("build_cell_mesh: h exceeds period/4");
  StripSpec spec;
  spec.width = width;
  spec.bottom = [p](double y) { return p.eval(y); };
  spec.bottom_slope = [p](double y) { return p.deriv(y); };
  spec.top = H;
  spec.wall_spacing = h;
  spec.layer_scale = 1.0;
  spec.max_spacing = std::min(8.0 * h, std::max(h, 0.5));
  TriMesh m = build_strip_mesh(spec);
  m.scale = 1.0;
  return m;
}

void write_vtk(std::ostream& os, const TriMesh& mesh, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(17);
  os << "POINTS " << mesh.vertices.size() << " double\n";
  for (const auto& v : mesh.vertices) os << v.x() << ' ' << v.y() << " 0\n";
  os << "CELLS " << mesh.triangles.size() << ' ' << 4 * mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << mesh.triangles.size() << '\n';
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) os << "5\n";
}

void write_vertex_csv(std::ostream& os, const TriMesh& mesh) {
  std::vector<std::string> tags(mesh.vertices.size(), "interior");
  for (const auto& be : mesh.boundary_edges)
    for (int v : mesh.edges[be.edge]) {
      // rough and top take precedence over the lateral tags at corners
      if (tags[v] == "interior" || be.tag == BoundaryTag::rough || be.tag == BoundaryTag::top)
        tags[v] = to_string(be.tag);
    }
  os << "id,x1,x2,tag\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    os << i << ',' << mesh.vertices[i].x() << ',' << mesh.vertices[i].y() << ',' << tags[i] << '\n';
}

}  // namespace wallaw
