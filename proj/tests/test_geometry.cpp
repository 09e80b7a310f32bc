#include <doctest.h>

#include "wallaw/errors.hpp"
#include "wallaw/geometry.hpp"
#include "wallaw/numerics.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace wallaw;

namespace {

void check_invariants(const TriMesh& m, const std::function<double(double)>& rough, double top) {
  for (int t = 0; t < static_cast<int>(m.num_triangles()); ++t) CHECK(m.signed_area(t) > 0.0);
  CHECK(m.min_angle_deg() >= 15.0);

  std::set<int> masters;
  for (const auto& [slave, master] : m.periodic_pairing) {
    CHECK(std::abs(m.vertices[slave].y() - m.vertices[master].y()) <= 1e-12);
    CHECK(std::abs(m.vertices[slave].x() - m.width) <= 1e-14);
    CHECK(m.vertices[master].x() == 0.0);
    masters.insert(master);
  }
  CHECK(masters.size() == m.periodic_pairing.size());
  const auto left = m.vertices_with_tag(BoundaryTag::periodic_master);
  const auto right = m.vertices_with_tag(BoundaryTag::periodic_slave);
  CHECK(left.size() == masters.size());
  CHECK(right.size() == m.periodic_pairing.size());

  const auto rough_ids = m.vertices_with_tag(BoundaryTag::rough);
  CHECK(!rough_ids.empty());
  for (int v : rough_ids) {
    CHECK(std::abs(m.vertices[v].y() - rough(m.vertices[v].x())) <= 1e-12);
    REQUIRE(m.rough_normals.count(v) == 1);
    CHECK(std::abs(m.rough_normals.at(v).norm() - 1.0) < 1e-14);
    CHECK(m.rough_normals.at(v).y() > 0.0);
  }
  for (int v : m.vertices_with_tag(BoundaryTag::top)) CHECK(m.vertices[v].y() == top);

  // Every edge is shared by at most two triangles and boundary edges by one.
  std::vector<int> count(m.edges.size(), 0);
  for (const auto& te : m.triangle_edges)
    for (int e : te) ++count[e];
  for (int c : count) CHECK((c == 1 || c == 2));
  for (const auto& be : m.boundary_edges) CHECK(count[be.edge] == 1);

  double hmax = 0;
  for (const auto& e : m.edges) hmax = std::max(hmax, (m.vertices[e[0]] - m.vertices[e[1]]).norm());
  CHECK(m.h_max == hmax);
}

double exact_area(const std::function<double(double)>& rough, double top, double width) {
  return quad_adaptive([&](double x) { return top - rough(x); }, 0.0, width, 1e-12);
}

}  // namespace

TEST_CASE("flat channel mesh") {
  const auto p = make_flat(0.0);
  const auto m = build_channel_mesh(p, 1.0 / 8.0, 0.1);
  check_invariants(m, [](double) { return 0.0; }, 1.0);
  CHECK(std::abs(m.area() - 1.0) < 1e-12);
  for (int v : m.vertices_with_tag(BoundaryTag::rough)) CHECK(m.vertices[v].y() == 0.0);
}

TEST_CASE("cosine channel mesh") {
  const auto p = make_cosine();
  const double eps = 1.0 / 8.0, h = 1.0 / 64.0;
  const auto m = build_channel_mesh(p, eps, h);
  auto rough = [&](double x) { return eps * p.eval(x / eps); };
  check_invariants(m, rough, 1.0);
  CHECK(m.num_vertices() > 0);
  // at least 8 oscillations: count sign changes of the slope along the rough wall
  auto ids = m.vertices_with_tag(BoundaryTag::rough);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) { return m.vertices[a].x() < m.vertices[b].x(); });
  int maxima = 0;
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    const double a = m.vertices[ids[i - 1]].y(), b = m.vertices[ids[i]].y(), c = m.vertices[ids[i + 1]].y();
    if (b >= a && b > c) ++maxima;
  }
  CHECK(maxima >= 7);  // interior maxima; the eighth sits on the periodic seam
  const double area = exact_area(rough, 1.0, 1.0);
  CHECK(std::abs(m.area() - area) <= 4 * h * h);
  for (const auto& be : m.boundary_edges)
    if (be.tag == BoundaryTag::rough)
      CHECK(std::abs((m.vertices[m.edges[be.edge][0]] - m.vertices[m.edges[be.edge][1]]).x()) <= h / 2 + 1e-12);
}

TEST_CASE("channel mesh preconditions") {
  const auto p = make_cosine();
  CHECK_THROWS_AS(build_channel_mesh(p, 1.0 / 8.0, 0.1), ResolutionError);
  CHECK_THROWS_AS(build_channel_mesh(p, 0.3, 0.01), PreconditionError);
}

TEST_CASE("refinement quadruples the triangle count") {
  const auto p = make_cosine();
  const auto a = build_channel_mesh(p, 1.0 / 8.0, 1.0 / 32.0);
  const auto b = build_channel_mesh(p, 1.0 / 8.0, 1.0 / 64.0);
  CHECK(b.num_triangles() >= 4 * a.num_triangles());
  CHECK(b.min_angle_deg() >= 15.0);
  const auto c = build_cell_mesh(p, 4.0, 0.04);
  const auto d = build_cell_mesh(p, 4.0, 0.02);
  CHECK(d.num_triangles() >= 4 * c.num_triangles());
}

TEST_CASE("cell meshes") {
  const auto flat = make_flat(-0.3);
  const auto m = build_cell_mesh(flat, 4.0, 0.05);
  check_invariants(m, [](double) { return -0.3; }, 4.0);
  CHECK(std::abs(m.area() - 4.3) < 1e-12);

  const auto p = make_cosine();
  const double h = 0.02;
  const auto c = build_cell_mesh(p, 4.0, h);
  check_invariants(c, [&](double y) { return p.eval(y); }, 4.0);
  CHECK(std::abs(c.area() - exact_area([&](double y) { return p.eval(y); }, 4.0, 1.0)) <= 4 * h * h);

  CHECK_THROWS_AS(build_cell_mesh(p, 1.0, 0.02), PreconditionError);
}

TEST_CASE("random profile channel uses a long window") {
  const auto p = make_random_stationary(3, 8, 2.5, {-0.7, -0.3});
  const double eps = 1.0 / 64.0;
  CHECK(channel_window(p, eps) == doctest::Approx(1.0));
  const auto q = make_random_stationary(3, 8, 2.5, {-0.7, -0.3}, 16.0);
  CHECK(channel_window(q, 1.0 / 8.0) == doctest::Approx(2.0));
}

TEST_CASE("mesh dumps") {
  const auto m = build_cell_mesh(make_flat(-0.5), 2.0, 0.25);
  std::ostringstream vtk, csv;
  write_vtk(vtk, m);
  write_vertex_csv(csv, m);
  CHECK(vtk.str().find("POINTS " + std::to_string(m.num_vertices())) != std::string::npos);
  CHECK(vtk.str().find("CELL_TYPES " + std::to_string(m.num_triangles())) != std::string::npos);
  CHECK(csv.str().rfind("id,x1,x2,tag\n", 0) == 0);
  CHECK(csv.str().find(",rough\n") != std::string::npos);
  CHECK(csv.str().find(",top\n") != std::string::npos);
}
