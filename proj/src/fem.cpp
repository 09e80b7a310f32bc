#include "wallaw/fem.hpp"

#include "wallaw/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace wallaw {

namespace {

struct QuadCache {
  TriangleRule rule;
  std::vector<Eigen::Matrix<double, 6, 1>> shape;
  std::vector<Eigen::Matrix<double, 6, 2>> grad;
  std::vector<Eigen::Vector3d> linear;
};

QuadCache make_cache(int n) {
  QuadCache c;
  c.rule = duffy_triangle_rule(n);
  for (const auto& x : c.rule.x) {
    c.shape.push_back(p2_shape(x.x(), x.y()));
    c.grad.push_back(p2_shape_grad(x.x(), x.y()));
    c.linear.emplace_back(1.0 - x.x() - x.y(), x.x(), x.y());
  }
  return c;
}

const QuadCache& cache(int n) {
  static const std::array<QuadCache, 8> all = [] {
    std::array<QuadCache, 8> c;
    for (int k = 1; k <= 8; ++k) c[k - 1] = make_cache(k);
    return c;
  }();
  return all[std::clamp(n, 1, 8) - 1];
}

/// Order used on curved triangles, whose integrands are rational.
int curved_order(int order) { return std::min(8, std::max(order + 2, 5)); }

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

Eigen::Matrix2d jacobian_from(const P2P1Space& sp, int tri, const Eigen::Matrix<double, 6, 2>& grad) {
  Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
  const auto& n = sp.tri_nodes[tri];
  for (int a = 0; a < 6; ++a) j += sp.node_xy[n[a]] * grad.row(a);
  return j;
}

Eigen::Vector2d map_from(const P2P1Space& sp, int tri, const Eigen::Matrix<double, 6, 1>& shape) {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  const auto& n = sp.tri_nodes[tri];
  for (int a = 0; a < 6; ++a) x += shape[a] * sp.node_xy[n[a]];
  return x;
}

/// Edge shape derivatives for p2_edge_shape.
Eigen::Vector3d p2_edge_shape_deriv(double t) { return {4 * t - 3, 4 * t - 1, 4 - 8 * t}; }

}  // namespace

Eigen::Matrix<double, 6, 1> p2_shape(double s, double t) {
  const double l0 = 1.0 - s - t, l1 = s, l2 = t;
  Eigen::Matrix<double, 6, 1> n;
  n << l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0;
  return n;
}

Eigen::Matrix<double, 6, 2> p2_shape_grad(double s, double t) {
  const double l0 = 1.0 - s - t, l1 = s, l2 = t;
  const Eigen::Vector2d d0(-1, -1), d1(1, 0), d2(0, 1);
  Eigen::Matrix<double, 6, 2> g;
  g.row(0) = (4 * l0 - 1) * d0;
  g.row(1) = (4 * l1 - 1) * d1;
  g.row(2) = (4 * l2 - 1) * d2;
  g.row(3) = 4 * (l1 * d0 + l0 * d1);
  g.row(4) = 4 * (l2 * d1 + l1 * d2);
  g.row(5) = 4 * (l0 * d2 + l2 * d0);
  return g;
}

ElementGeometry element_geometry(const P2P1Space& space, int tri) {
  const auto& n = space.tri_nodes[tri];
  ElementGeometry g;
  g.origin = space.node_xy[n[0]];
  g.jacobian.col(0) = space.node_xy[n[1]] - g.origin;
  g.jacobian.col(1) = space.node_xy[n[2]] - g.origin;
  g.det = g.jacobian.determinant();
  g.inv_jacobian = g.jacobian.inverse();
  return g;
}

PointGeometry point_geometry(const P2P1Space& space, int tri, double s, double t) {
  PointGeometry g;
  if (space.curved[tri]) {
    g.jacobian = jacobian_from(space, tri, p2_shape_grad(s, t));
    g.x = map_from(space, tri, p2_shape(s, t));
  } else {
    const ElementGeometry e = element_geometry(space, tri);
    g.jacobian = e.jacobian;
    g.x = e.origin + e.jacobian * Eigen::Vector2d(s, t);
  }
  g.det = g.jacobian.determinant();
  g.inv_jacobian = g.jacobian.inverse();
  return g;
}

P2P1Space make_p2p1_space(std::shared_ptr<const TriMesh> mesh, bool periodic) {
  if (!mesh) throw PreconditionError("make_p2p1_space: null mesh");
  P2P1Space sp;
  sp.mesh = mesh;
  sp.periodic = periodic;
  const TriMesh& m = *mesh;
  sp.n_vertices = static_cast<int>(m.vertices.size());
  const int ne = static_cast<int>(m.edges.size());
  sp.n_nodes = sp.n_vertices + ne;
  sp.node_xy = m.vertices;
  for (const auto& e : m.edges) sp.node_xy.push_back(0.5 * (m.vertices[e[0]] + m.vertices[e[1]]));

  // Periodic identification of vertices and of edges on the slave side.
  std::vector<int> rep(sp.n_nodes);
  for (int i = 0; i < sp.n_nodes; ++i) rep[i] = i;
  if (periodic) {
    for (const auto& [slave, master] : m.periodic_pairing) rep[slave] = master;
    std::map<std::pair<int, int>, int> master_edges;
    for (const auto& be : m.boundary_edges)
      if (be.tag == BoundaryTag::periodic_master) {
        const auto& e = m.edges[be.edge];
        master_edges[std::minmax(e[0], e[1])] = be.edge;
      }
    for (const auto& be : m.boundary_edges)
      if (be.tag == BoundaryTag::periodic_slave) {
        const auto& e = m.edges[be.edge];
        const auto key = std::minmax(rep[e[0]], rep[e[1]]);
        auto it = master_edges.find({key.first, key.second});
        if (it == master_edges.end()) throw MeshMismatch("periodic edge without a partner");
        rep[sp.n_vertices + be.edge] = sp.n_vertices + it->second;
      }
  }
  sp.canonical.assign(sp.n_nodes, -1);
  for (int i = 0; i < sp.n_nodes; ++i)
    if (rep[i] == i) sp.canonical[i] = sp.n_canonical++;
  for (int i = 0; i < sp.n_nodes; ++i) sp.canonical[i] = sp.canonical[rep[i]];

  sp.pressure_index.assign(sp.n_vertices, -1);
  for (int v = 0; v < sp.n_vertices; ++v)
    if (rep[v] == v) sp.pressure_index[v] = sp.n_pressure++;
  for (int v = 0; v < sp.n_vertices; ++v) sp.pressure_index[v] = sp.pressure_index[rep[v]];

  sp.tri_nodes.resize(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tr = m.triangles[t];
    const auto& te = m.triangle_edges[t];
    sp.tri_nodes[t] = {tr[0], tr[1], tr[2], sp.n_vertices + te[0], sp.n_vertices + te[1],
                       sp.n_vertices + te[2]};
  }

  // Rough-wall midpoints move vertically onto the profile.
  std::vector<char> bent_edge(ne, 0);
  if (m.bottom)
    for (const auto& be : m.boundary_edges)
      if (be.tag == BoundaryTag::rough) {
        Eigen::Vector2d& x = sp.node_xy[sp.n_vertices + be.edge];
        const double y = m.bottom(x.x());
        const double scale = (m.vertices[m.edges[be.edge][0]] - m.vertices[m.edges[be.edge][1]]).norm();
        if (std::abs(y - x.y()) > 1e-14 * scale) {
          x.y() = y;
          bent_edge[be.edge] = 1;
        }
      }
  sp.curved.assign(m.triangles.size(), 0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int e : m.triangle_edges[t])
      if (bent_edge[e]) sp.curved[t] = 1;

  sp.rough_normal_by_canonical.assign(sp.n_canonical, Eigen::Vector2d::Zero());
  sp.has_rough_normal.assign(sp.n_canonical, false);
  for (const auto& [v, nu] : m.rough_normals) {
    sp.rough_normal_by_canonical[sp.canonical[v]] = nu;
    sp.has_rough_normal[sp.canonical[v]] = true;
  }
  for (const auto& seg : sp.boundary_segments(BoundaryTag::rough)) {
    const int c = sp.canonical[seg[2]];
    if (m.bottom_slope) {
      sp.rough_normal_by_canonical[c] = Eigen::Vector2d(-m.bottom_slope(sp.node_xy[seg[2]].x()), 1.0).normalized();
    } else {
      const Eigen::Vector2d tau = (sp.node_xy[seg[1]] - sp.node_xy[seg[0]]).normalized();
      sp.rough_normal_by_canonical[c] = perp(tau);
    }
    sp.has_rough_normal[c] = true;
  }
  return sp;
}

std::vector<std::array<int, 3>> P2P1Space::boundary_segments(BoundaryTag tag) const {
  const TriMesh& m = *mesh;
  std::set<int> wanted;
  for (const auto& be : m.boundary_edges)
    if (be.tag == tag) wanted.insert(be.edge);
  std::vector<std::array<int, 3>> out;
  if (wanted.empty()) return out;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int e = m.triangle_edges[t][k];
      if (wanted.count(e)) {
        // the domain lies to the left of v_k -> v_{k+1}
        out.push_back({m.triangles[t][k], m.triangles[t][(k + 1) % 3], n_vertices + e});
      }
    }
  return out;
}

std::vector<int> P2P1Space::canonical_nodes_on(BoundaryTag tag) const {
  std::set<int> ids;
  for (const auto& s : boundary_segments(tag))
    for (int n : s) ids.insert(canonical[n]);
  return {ids.begin(), ids.end()};
}

Eigen::Vector2d P2P1Space::rough_normal(int c) const {
  if (c < 0 || c >= n_canonical || !has_rough_normal[c])
    throw PreconditionError("rough_normal: node is not on the rough boundary");
  return rough_normal_by_canonical[c];
}

namespace {

/// Calls visit(q, gradients in x, weight incl. |det|) at every quadrature
/// point of triangle t, with the rule suited to its map.
template <typename Visit>
const QuadCache& for_each_point(const P2P1Space& space, int t, int order, Visit&& visit) {
  if (!space.curved[t]) {
    const QuadCache& qc = cache(order);
    const ElementGeometry g = element_geometry(space, t);
    for (std::size_t q = 0; q < qc.rule.x.size(); ++q)
      visit(qc, q, Eigen::Matrix<double, 6, 2>(qc.grad[q] * g.inv_jacobian), qc.rule.w[q] * std::abs(g.det));
    return qc;
  }
  const QuadCache& qc = cache(curved_order(order));
  for (std::size_t q = 0; q < qc.rule.x.size(); ++q) {
    const Eigen::Matrix2d j = jacobian_from(space, t, qc.grad[q]);
    visit(qc, q, Eigen::Matrix<double, 6, 2>(qc.grad[q] * j.inverse()), qc.rule.w[q] * std::abs(j.determinant()));
  }
  return qc;
}

template <typename LocalFn>
SparseMatrix assemble_square(const P2P1Space& space, int order, LocalFn&& local) {
  std::vector<Triplet> trip;
  trip.reserve(space.tri_nodes.size() * 144);
  Eigen::Matrix<double, 12, 12> ke;
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t) {
    ke.setZero();
    for_each_point(space, t, order,
                   [&](const QuadCache& qc, std::size_t q, const Eigen::Matrix<double, 6, 2>& gp, double w) {
                     local(t, q, qc, gp, w, ke);
                   });
    const auto& nodes = space.tri_nodes[t];
    for (int a = 0; a < 6; ++a)
      for (int i = 0; i < 2; ++i)
        for (int b = 0; b < 6; ++b)
          for (int j = 0; j < 2; ++j) {
            const double v = ke(2 * a + i, 2 * b + j);
            if (v != 0.0)
              trip.emplace_back(2 * space.canonical[nodes[a]] + i, 2 * space.canonical[nodes[b]] + j, v);
          }
  }
  SparseMatrix k(space.velocity_dofs(), space.velocity_dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  return k;
}

}  // namespace

SparseMatrix assemble_viscous(const P2P1Space& space, ViscousForm form, double coef) {
  return assemble_square(space, 2, [&](int, std::size_t, const QuadCache&,
                                       const Eigen::Matrix<double, 6, 2>& gp, double w,
                                       Eigen::Matrix<double, 12, 12>& ke) {
    const Eigen::Matrix<double, 6, 6> dots = gp * gp.transpose();
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double v = (i == j) ? dots(a, b) : 0.0;
            if (form == ViscousForm::symmetric_gradient) v = 0.5 * (v + gp(a, j) * gp(b, i));
            ke(2 * a + i, 2 * b + j) += coef * w * v;
          }
  });
}

SparseMatrix assemble_velocity_mass(const P2P1Space& space) {
  return assemble_square(space, 3, [&](int, std::size_t q, const QuadCache& qc,
                                       const Eigen::Matrix<double, 6, 2>&, double w,
                                       Eigen::Matrix<double, 12, 12>& ke) {
    const auto& n = qc.shape[q];
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double v = w * n[a] * n[b];
        ke(2 * a, 2 * b) += v;
        ke(2 * a + 1, 2 * b + 1) += v;
      }
  });
}

SparseMatrix assemble_convection(const P2P1Space& space, const Eigen::VectorXd& wvec) {
  if (wvec.size() != space.velocity_dofs()) throw PreconditionError("assemble_convection: size mismatch");
  return assemble_square(space, 4, [&](int t, std::size_t q, const QuadCache& qc,
                                       const Eigen::Matrix<double, 6, 2>& gp, double w,
                                       Eigen::Matrix<double, 12, 12>& ke) {
    const auto& nodes = space.tri_nodes[t];
    Eigen::Vector2d wq = Eigen::Vector2d::Zero();
    for (int a = 0; a < 6; ++a) {
      const int c = space.canonical[nodes[a]];
      wq += qc.shape[q][a] * Eigen::Vector2d(wvec[2 * c], wvec[2 * c + 1]);
    }
    const Eigen::Matrix<double, 6, 1> adv = gp * wq;
    for (int b = 0; b < 6; ++b)      // test
      for (int a = 0; a < 6; ++a) {  // trial
        const double v = w * qc.shape[q][b] * adv[a];
        ke(2 * b, 2 * a) += v;
        ke(2 * b + 1, 2 * a + 1) += v;
      }
  });
}

SparseMatrix assemble_divergence(const P2P1Space& space) {
  std::vector<Triplet> trip;
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t) {
    Eigen::Matrix<double, 3, 12> be = Eigen::Matrix<double, 3, 12>::Zero();
    for_each_point(space, t, 2,
                   [&](const QuadCache& qc, std::size_t q, const Eigen::Matrix<double, 6, 2>& gp, double w) {
                     for (int r = 0; r < 3; ++r)
                       for (int a = 0; a < 6; ++a) {
                         be(r, 2 * a) -= w * qc.linear[q][r] * gp(a, 0);
                         be(r, 2 * a + 1) -= w * qc.linear[q][r] * gp(a, 1);
                       }
                   });
    const auto& nodes = space.tri_nodes[t];
    for (int r = 0; r < 3; ++r)
      for (int a = 0; a < 6; ++a)
        for (int i = 0; i < 2; ++i)
          if (be(r, 2 * a + i) != 0.0)
            trip.emplace_back(space.pressure_index[nodes[r]], 2 * space.canonical[nodes[a]] + i,
                              be(r, 2 * a + i));
  }
  SparseMatrix b(space.n_pressure, space.velocity_dofs());
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  return b;
}

namespace {

const LineRule& edge_rule() {
  static const LineRule r = gauss_legendre_01(5);
  return r;
}

Eigen::Vector3d p2_edge_shape(double t) {
  return {(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)};
}

SparseMatrix assemble_boundary_form(const P2P1Space& space, BoundaryTag tag, bool tangential_only) {
  const LineRule& r = edge_rule();
  std::vector<Triplet> trip;
  for (const auto& seg : space.boundary_segments(tag)) {
    Eigen::Matrix<double, 6, 6> m = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < r.x.size(); ++q) {
      const Eigen::Vector3d n = p2_edge_shape(r.x[q]);
      const Eigen::Vector3d dn = p2_edge_shape_deriv(r.x[q]);
      const Eigen::Vector2d d = dn[0] * space.node_xy[seg[0]] + dn[1] * space.node_xy[seg[1]] + dn[2] * space.node_xy[seg[2]];
      const double len = d.norm();
      const Eigen::Vector2d tau = d / len;
      const Eigen::Matrix2d proj = tangential_only ? Eigen::Matrix2d(tau * tau.transpose()) : Eigen::Matrix2d::Identity();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) m.block<2, 2>(2 * a, 2 * b) += r.w[q] * len * n[a] * n[b] * proj;
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double v = m(2 * a + i, 2 * b + j);
            if (v != 0.0)
              trip.emplace_back(2 * space.canonical[seg[a]] + i, 2 * space.canonical[seg[b]] + j, v);
          }
  }
  SparseMatrix k(space.velocity_dofs(), space.velocity_dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  return k;
}

}  // namespace

SparseMatrix assemble_tangential_boundary_mass(const P2P1Space& space, BoundaryTag tag) {
  return assemble_boundary_form(space, tag, true);
}

SparseMatrix assemble_boundary_mass(const P2P1Space& space, BoundaryTag tag) {
  return assemble_boundary_form(space, tag, false);
}

Eigen::VectorXd assemble_boundary_trace_load(
    const P2P1Space& space, BoundaryTag tag, const Eigen::VectorXd& w,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&, const Eigen::Vector2d&,
                                        const Eigen::Vector2d&, const Eigen::Vector2d&)>& g) {
  const LineRule& r = edge_rule();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(space.velocity_dofs());
  for (const auto& seg : space.boundary_segments(tag)) {
    for (std::size_t q = 0; q < r.x.size(); ++q) {
      const Eigen::Vector3d n = p2_edge_shape(r.x[q]);
      const Eigen::Vector3d dn = p2_edge_shape_deriv(r.x[q]);
      Eigen::Vector2d x = Eigen::Vector2d::Zero(), d = Eigen::Vector2d::Zero(), wx = Eigen::Vector2d::Zero();
      for (int a = 0; a < 3; ++a) {
        x += n[a] * space.node_xy[seg[a]];
        d += dn[a] * space.node_xy[seg[a]];
        if (w.size() > 0) {
          const int c = space.canonical[seg[a]];
          wx += n[a] * Eigen::Vector2d(w[2 * c], w[2 * c + 1]);
        }
      }
      const double len = d.norm();
      const Eigen::Vector2d tau = d / len;
      const Eigen::Vector2d val = g(x, tau, perp(tau), wx);
      for (int a = 0; a < 3; ++a) {
        const int c = space.canonical[seg[a]];
        f[2 * c] += r.w[q] * len * n[a] * val.x();
        f[2 * c + 1] += r.w[q] * len * n[a] * val.y();
      }
    }
  }
  return f;
}

Eigen::VectorXd assemble_boundary_load(
    const P2P1Space& space, BoundaryTag tag,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&, const Eigen::Vector2d&,
                                        const Eigen::Vector2d&)>& g) {
  return assemble_boundary_trace_load(
      space, tag, Eigen::VectorXd(),
      [&](const Eigen::Vector2d& x, const Eigen::Vector2d& tau, const Eigen::Vector2d& nu,
          const Eigen::Vector2d&) { return g(x, tau, nu); });
}

Eigen::VectorXd assemble_volume_load(const P2P1Space& space,
                                     const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& fn) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(space.velocity_dofs());
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t) {
    const auto& nodes = space.tri_nodes[t];
    for_each_point(space, t, 4, [&](const QuadCache& qc, std::size_t q, const Eigen::Matrix<double, 6, 2>&, double w) {
      const Eigen::Vector2d val = fn(map_from(space, t, qc.shape[q]));
      for (int a = 0; a < 6; ++a) {
        const int c = space.canonical[nodes[a]];
        f[2 * c] += w * qc.shape[q][a] * val.x();
        f[2 * c + 1] += w * qc.shape[q][a] * val.y();
      }
    });
  }
  return f;
}

Eigen::VectorXd pressure_mean_row(const P2P1Space& space) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(space.n_pressure);
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t)
    for_each_point(space, t, 2, [&](const QuadCache& qc, std::size_t q, const Eigen::Matrix<double, 6, 2>&, double w) {
      for (int r = 0; r < 3; ++r) m[space.pressure_index[space.tri_nodes[t][r]]] += w * qc.linear[q][r];
    });
  return m;
}

double domain_area(const P2P1Space& space) { return pressure_mean_row(space).sum(); }

ConstraintMap build_constraint_map(const P2P1Space& space, const std::vector<NodeConstraint>& c) {
  if (static_cast<int>(c.size()) != space.n_canonical)
    throw PreconditionError("build_constraint_map: one constraint per canonical node required");
  ConstraintMap map;
  map.offset = Eigen::VectorXd::Zero(space.velocity_dofs());
  std::vector<Triplet> trip;
  int col = 0;
  for (int n = 0; n < space.n_canonical; ++n) {
    switch (c[n].kind) {
      case NodeConstraint::Kind::free:
        trip.emplace_back(2 * n, col++, 1.0);
        trip.emplace_back(2 * n + 1, col++, 1.0);
        break;
      case NodeConstraint::Kind::fixed:
        map.offset[2 * n] = c[n].value.x();
        map.offset[2 * n + 1] = c[n].value.y();
        break;
      case NodeConstraint::Kind::directional: {
        const Eigen::Vector2d d = c[n].direction.normalized();
        const Eigen::Vector2d t = perp(d);
        trip.emplace_back(2 * n, col, t.x());
        trip.emplace_back(2 * n + 1, col, t.y());
        ++col;
        map.offset[2 * n] = c[n].directional_value * d.x();
        map.offset[2 * n + 1] = c[n].directional_value * d.y();
        break;
      }
    }
  }
  map.n_free = col;
  map.prolongation.resize(space.velocity_dofs(), col);
  map.prolongation.setFromTriplets(trip.begin(), trip.end());
  map.prolongation.makeCompressed();
  return map;
}

Eigen::Vector2d eval_velocity(const P2P1Space& space, const Eigen::VectorXd& u, int tri, double s,
                              double t) {
  const auto n = p2_shape(s, t);
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int a = 0; a < 6; ++a) {
    const int c = space.canonical[space.tri_nodes[tri][a]];
    v += n[a] * Eigen::Vector2d(u[2 * c], u[2 * c + 1]);
  }
  return v;
}

Eigen::Matrix2d eval_velocity_gradient(const P2P1Space& space, const Eigen::VectorXd& u, int tri,
                                       double s, double t) {
  const Eigen::Matrix<double, 6, 2> ref = p2_shape_grad(s, t);
  const Eigen::Matrix2d inv = space.curved[tri] ? Eigen::Matrix2d(jacobian_from(space, tri, ref).inverse())
                                                : element_geometry(space, tri).inv_jacobian;
  const Eigen::Matrix<double, 6, 2> gp = ref * inv;
  Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 6; ++a) {
    const int c = space.canonical[space.tri_nodes[tri][a]];
    grad.row(0) += u[2 * c] * gp.row(a);
    grad.row(1) += u[2 * c + 1] * gp.row(a);
  }
  return grad;
}

double eval_pressure(const P2P1Space& space, const Eigen::VectorXd& p, int tri, double s, double t) {
  const auto& n = space.tri_nodes[tri];
  return (1 - s - t) * p[space.pressure_index[n[0]]] + s * p[space.pressure_index[n[1]]] +
         t * p[space.pressure_index[n[2]]];
}

PointLocator::PointLocator(const P2P1Space& space) : space_(&space) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int v = 0; v < space.n_vertices; ++v) {
    xmin = std::min(xmin, space.node_xy[v].x());
    xmax = std::max(xmax, space.node_xy[v].x());
    ymin = std::min(ymin, space.node_xy[v].y());
    ymax = std::max(ymax, space.node_xy[v].y());
  }
  const int nt = static_cast<int>(space.tri_nodes.size());
  const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nt) / 2.0)));
  nx_ = side;
  ny_ = side;
  x0_ = xmin;
  y0_ = ymin;
  dx_ = (xmax - xmin) / nx_ * (1 + 1e-12) + 1e-300;
  dy_ = (ymax - ymin) / ny_ * (1 + 1e-12) + 1e-300;
  buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  for (int t = 0; t < nt; ++t) {
    double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
    for (int k = 0; k < 6; ++k) {
      const auto& p = space.node_xy[space.tri_nodes[t][k]];
      bx0 = std::min(bx0, p.x());
      bx1 = std::max(bx1, p.x());
      by0 = std::min(by0, p.y());
      by1 = std::max(by1, p.y());
    }
    if (space.curved[t]) {
      // a curved edge may bulge past its nodes
      const double pad = 0.25 * (by1 - by0);
      by0 -= pad;
      by1 += pad;
    }
    const int i0 = std::clamp(static_cast<int>((bx0 - x0_) / dx_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((bx1 - x0_) / dx_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((by0 - y0_) / dy_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((by1 - y0_) / dy_), 0, ny_ - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(i) * ny_ + j].push_back(t);
  }
}

std::optional<PointLocation> PointLocator::locate(Eigen::Vector2d x) const {
  const P2P1Space& sp = *space_;
  if (sp.periodic) {
    const double w = sp.mesh->width;
    x.x() -= w * std::floor(x.x() / w);
  }
  const int i = static_cast<int>((x.x() - x0_) / dx_);
  const int j = static_cast<int>((x.y() - y0_) / dy_);
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return std::nullopt;
  std::optional<PointLocation> best;
  double best_violation = 1e300;
  for (int t : buckets_[static_cast<std::size_t>(i) * ny_ + j]) {
    const ElementGeometry g = element_geometry(sp, t);
    Eigen::Vector2d st = g.inv_jacobian * (x - g.origin);
    if (sp.curved[t]) {
      for (int it = 0; it < 30; ++it) {
        const PointGeometry pg = point_geometry(sp, t, st.x(), st.y());
        const Eigen::Vector2d d = pg.inv_jacobian * (x - pg.x);
        st += d;
        if (d.norm() < 1e-15) break;
      }
    }
    const double violation = std::max({0.0, -st.x(), -st.y(), st.x() + st.y() - 1.0});
    if (violation < best_violation) {
      best_violation = violation;
      best = PointLocation{t, st.x(), st.y()};
    }
    if (violation == 0.0) break;
  }
  if (!best || best_violation > 1e-10) return std::nullopt;
  return best;
}

Polygon clip_halfplane(const Polygon& poly, const Eigen::Vector2d& a, double b) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d& p = poly[k];
    const Eigen::Vector2d& q = poly[(k + 1) % n];
    const double fp = a.dot(p) - b;
    const double fq = a.dot(q) - b;
    if (fp >= 0) out.push_back(p);
    if ((fp > 0 && fq < 0) || (fp < 0 && fq > 0)) {
      const double t = fp / (fp - fq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

namespace {

/// Clips a reference-space polygon by g >= 0, interpolating g linearly
/// along each edge (exact when g is affine in the reference coordinates).
Polygon clip_by_values(const Polygon& poly, const std::function<double(const Eigen::Vector2d&)>& g) {
  Polygon out;
  const std::size_t n = poly.size();
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = g(poly[k]);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t l = (k + 1) % n;
    if (v[k] >= 0) out.push_back(poly[k]);
    if ((v[k] > 0 && v[l] < 0) || (v[k] < 0 && v[l] > 0))
      out.push_back(poly[k] + v[k] / (v[k] - v[l]) * (poly[l] - poly[k]));
  }
  return out;
}

}  // namespace

double integrate_clipped(const P2P1Space& space,
                         const std::vector<std::pair<Eigen::Vector2d, double>>& halfplanes,
                         const std::function<double(int, double, double, const Eigen::Vector2d&)>& f,
                         int order) {
  // Work in reference coordinates so that curved triangles are handled by
  // the same code: each fan triangle of the clipped reference polygon is
  // integrated with the element's own |det J|.
  const TriangleRule rule = duffy_triangle_rule(order);
  const TriangleRule curved_rule = duffy_triangle_rule(std::min(8, order + 2));
  double total = 0.0;
  const Polygon unit{{0, 0}, {1, 0}, {0, 1}};
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t) {
    const bool bent = space.curved[t];
    const ElementGeometry eg = element_geometry(space, t);
    auto to_x = [&](const Eigen::Vector2d& st) {
      return bent ? map_from(space, t, p2_shape(st.x(), st.y())) : Eigen::Vector2d(eg.origin + eg.jacobian * st);
    };
    const auto& nodes = space.tri_nodes[t];
    bool inside_all = true, outside = false;
    for (const auto& [a, b] : halfplanes) {
      bool all_in = true, all_out = true;
      for (int k = 0; k < (bent ? 6 : 3); ++k) {
        const double v = a.dot(space.node_xy[nodes[k]]) - b;
        all_in = all_in && v >= 0;
        all_out = all_out && v < 0;
      }
      if (all_out && !bent) outside = true;
      if (!all_in) inside_all = false;
    }
    if (outside) continue;

    std::vector<Polygon> pieces;
    if (inside_all) {
      pieces.push_back(unit);
    } else {
      // On curved triangles the half-plane values are quadratic unless the
      // normal is horizontal (x1 is affine), so those cuts use a 4x4 split.
      const int split = bent ? 4 : 1;
      for (int i = 0; i < split; ++i)
        for (int j = 0; i + j < split; ++j) {
          const double h = 1.0 / split;
          const Eigen::Vector2d o(i * h, j * h);
          pieces.push_back({o, o + Eigen::Vector2d(h, 0), o + Eigen::Vector2d(0, h)});
          if (i + j + 1 < split)
            pieces.push_back({o + Eigen::Vector2d(h, 0), o + Eigen::Vector2d(h, h), o + Eigen::Vector2d(0, h)});
        }
      for (auto& poly : pieces)
        for (const auto& [a, b] : halfplanes) {
          if (poly.size() < 3) break;
          poly = clip_by_values(poly, [&](const Eigen::Vector2d& st) { return a.dot(to_x(st)) - b; });
        }
    }
    const TriangleRule& r = bent ? curved_rule : rule;
    for (const auto& poly : pieces) {
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        Eigen::Matrix2d j;
        j.col(0) = poly[k] - poly[0];
        j.col(1) = poly[k + 1] - poly[0];
        const double sub = std::abs(j.determinant());
        if (sub == 0.0) continue;
        for (std::size_t q = 0; q < r.x.size(); ++q) {
          const Eigen::Vector2d st = poly[0] + j * r.x[q];
          double det = eg.det;
          Eigen::Vector2d x;
          if (bent) {
            const PointGeometry pg = point_geometry(space, t, st.x(), st.y());
            det = pg.det;
            x = pg.x;
          } else {
            x = eg.origin + eg.jacobian * st;
          }
          total += r.w[q] * sub * std::abs(det) * f(t, st.x(), st.y(), x);
        }
      }
    }
  }
  return total;
}

double cross_section_flux(const P2P1Space& space, const Eigen::VectorXd& u, double c) {
  // x1 is affine on every element, so the section is a straight segment in
  // reference coordinates; u1 is integrated against dx2 along it.
  const LineRule r = gauss_legendre_01(6);
  const std::array<Eigen::Vector2d, 3> corner{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  double flux = 0.0;
  for (int t = 0; t < static_cast<int>(space.tri_nodes.size()); ++t) {
    const auto& nodes = space.tri_nodes[t];
    std::array<double, 3> px{space.node_xy[nodes[0]].x(), space.node_xy[nodes[1]].x(), space.node_xy[nodes[2]].x()};
    const double xmin = std::min({px[0], px[1], px[2]});
    const double xmax = std::max({px[0], px[1], px[2]});
    if (c < xmin || c > xmax || xmin == xmax) continue;
    // A vertical edge on the section is shared by two triangles; keep the right one.
    int on_line = 0;
    for (double x : px) on_line += x == c ? 1 : 0;
    if (on_line == 2 && (px[0] + px[1] + px[2]) / 3.0 < c) continue;
    std::vector<Eigen::Vector2d> hits;
    for (int k = 0; k < 3; ++k) {
      const int l = (k + 1) % 3;
      const double fa = px[k] - c, fb = px[l] - c;
      if (fa == 0.0) hits.push_back(corner[k]);
      if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) hits.push_back(corner[k] + fa / (fa - fb) * (corner[l] - corner[k]));
    }
    if (hits.size() < 2) continue;
    Eigen::Vector2d p = hits[0], q = hits[1];
    for (std::size_t i = 0; i < hits.size(); ++i)
      for (std::size_t j = i + 1; j < hits.size(); ++j)
        if ((hits[i] - hits[j]).norm() > (p - q).norm()) {
          p = hits[i];
          q = hits[j];
        }
    if ((p - q).norm() == 0.0) continue;
    for (std::size_t k = 0; k < r.x.size(); ++k) {
      const Eigen::Vector2d st = p + r.x[k] * (q - p);
      const PointGeometry pg = point_geometry(space, t, st.x(), st.y());
      const double dx2 = std::abs(pg.jacobian.row(1).dot(q - p));
      flux += r.w[k] * dx2 * eval_velocity(space, u, t, st.x(), st.y()).x();
    }
  }
  return flux;
}

}  // namespace wallaw
