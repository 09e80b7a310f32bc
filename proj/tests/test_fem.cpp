#include <doctest.h>

#include "wallaw/fem.hpp"
#include "wallaw/geometry.hpp"
#include "wallaw/numerics.hpp"
#include "wallaw/profiles.hpp"

#include <cmath>

using namespace wallaw;

namespace {

std::shared_ptr<const P2P1Space> flat_space(double h = 0.125) {
  auto mesh = std::make_shared<const TriMesh>(build_channel_mesh(make_flat(0.0), 1.0 / 8.0, h));
  return std::make_shared<const P2P1Space>(make_p2p1_space(mesh));
}

std::shared_ptr<const P2P1Space> cosine_space() {
  auto mesh = std::make_shared<const TriMesh>(build_channel_mesh(make_cosine(), 1.0 / 8.0, 1.0 / 32.0));
  return std::make_shared<const P2P1Space>(make_p2p1_space(mesh));
}

Eigen::VectorXd interpolate(const P2P1Space& sp, const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& f) {
  Eigen::VectorXd u(sp.velocity_dofs());
  for (int n = 0; n < sp.n_nodes; ++n) {
    const Eigen::Vector2d v = f(sp.node_xy[n]);
    u[sp.ux(sp.canonical[n])] = v.x();
    u[sp.uy(sp.canonical[n])] = v.y();
  }
  return u;
}

}  // namespace

TEST_CASE("P2 shape functions form a partition of unity") {
  for (double s : {0.0, 0.2, 0.5})
    for (double t : {0.0, 0.3}) {
      CHECK(p2_shape(s, t).sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(p2_shape_grad(s, t).colwise().sum().norm() < 1e-13);
    }
  const auto at_mid = p2_shape(0.5, 0.0);
  CHECK(at_mid[3] == doctest::Approx(1.0));
}

TEST_CASE("periodic identification") {
  const auto sp = flat_space();
  for (const auto& [slave, master] : sp->mesh->periodic_pairing) CHECK(sp->canonical[slave] == sp->canonical[master]);
  CHECK(sp->n_canonical < sp->n_nodes);
  CHECK(sp->n_pressure < sp->n_vertices);
}

TEST_CASE("mass and volume integrals") {
  const auto sp = cosine_space();
  const Eigen::VectorXd ones = interpolate(*sp, [](const Eigen::Vector2d&) { return Eigen::Vector2d(1.0, 0.0); });
  const SparseMatrix mass = assemble_velocity_mass(*sp);
  CHECK(ones.dot(mass * ones) == doctest::Approx(domain_area(*sp)).epsilon(1e-12));
  CHECK(domain_area(*sp) == doctest::Approx(sp->mesh->area()).epsilon(1e-6));
  CHECK(is_symmetric(mass));
  CHECK(is_symmetric(assemble_viscous(*sp, ViscousForm::symmetric_gradient, 2.0)));
}

TEST_CASE("viscous forms on polynomial fields") {
  const auto sp = flat_space();
  // u = (x2^2, 0): int |grad u|^2 = int 4 x2^2 = 4/3, 2 int |D u|^2 = 2 * 2 * x2^2 -> 4/3
  const Eigen::VectorXd u = interpolate(*sp, [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.y() * x.y(), 0.0); });
  const SparseMatrix full = assemble_viscous(*sp, ViscousForm::full_gradient, 1.0);
  const SparseMatrix sym = assemble_viscous(*sp, ViscousForm::symmetric_gradient, 2.0);
  CHECK(u.dot(full * u) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(u.dot(sym * u) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  // rigid rotation about a point has zero strain but not zero gradient (not periodic, so use a non-periodic space)
  auto mesh = std::make_shared<const TriMesh>(build_cell_mesh(make_flat(0.0), 2.0, 0.25));
  const P2P1Space open = make_p2p1_space(mesh, false);
  const Eigen::VectorXd r = interpolate(open, [](const Eigen::Vector2d& x) { return Eigen::Vector2d(-x.y(), x.x()); });
  CHECK(std::abs(r.dot(assemble_viscous(open, ViscousForm::symmetric_gradient, 2.0) * r)) < 1e-12);
  CHECK(r.dot(assemble_viscous(open, ViscousForm::full_gradient, 1.0) * r) == doctest::Approx(2.0 * mesh->area()));
}

TEST_CASE("divergence of solenoidal and compressive fields") {
  auto shear_fn = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.y() * (1 - x.y()), 0.0); };
  const auto fs = flat_space();
  CHECK((assemble_divergence(*fs) * interpolate(*fs, shear_fn)).cwiseAbs().maxCoeff() < 1e-14);
  // curved elements reproduce the field only up to the geometry error
  const auto sp = cosine_space();
  const SparseMatrix b = assemble_divergence(*sp);
  CHECK((b * interpolate(*sp, shear_fn)).cwiseAbs().maxCoeff() < 1e-6);
  // u = (0, x2): div = 1, sum over pressure tests of -int q = -area
  const Eigen::VectorXd lift = interpolate(*sp, [](const Eigen::Vector2d& x) { return Eigen::Vector2d(0.0, x.y()); });
  CHECK((b * lift).sum() == doctest::Approx(-sp->mesh->area()).epsilon(1e-12));
}

TEST_CASE("boundary integrals on a flat wall") {
  const auto sp = flat_space();
  const Eigen::VectorXd ones = interpolate(*sp, [](const Eigen::Vector2d&) { return Eigen::Vector2d(1.0, 2.0); });
  CHECK(ones.dot(assemble_tangential_boundary_mass(*sp, BoundaryTag::rough) * ones) == doctest::Approx(1.0));
  CHECK(ones.dot(assemble_boundary_mass(*sp, BoundaryTag::top) * ones) == doctest::Approx(5.0));
  const Eigen::VectorXd load = assemble_boundary_load(*sp, BoundaryTag::rough,
      [](const Eigen::Vector2d&, const Eigen::Vector2d& tau, const Eigen::Vector2d& nu) {
        CHECK(tau.x() == doctest::Approx(1.0));
        CHECK(nu.y() == doctest::Approx(1.0));
        return Eigen::Vector2d(3.0, 0.0);
      });
  CHECK(load.dot(ones) == doctest::Approx(3.0));
}

TEST_CASE("convection of a shear flow vanishes") {
  const auto sp = flat_space();
  const Eigen::VectorXd w = interpolate(*sp, [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.y(), 0.0); });
  const SparseMatrix c = assemble_convection(*sp, w);
  CHECK((c * w).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("nodal constraints") {
  const auto sp = cosine_space();
  std::vector<NodeConstraint> c(sp->n_canonical);
  for (int n : sp->canonical_nodes_on(BoundaryTag::rough)) {
    c[n].kind = NodeConstraint::Kind::directional;
    c[n].direction = sp->rough_normal(n);
    c[n].directional_value = 0.25;
  }
  for (int n : sp->canonical_nodes_on(BoundaryTag::top)) {
    c[n].kind = NodeConstraint::Kind::fixed;
    c[n].value = {1.0, -1.0};
  }
  const ConstraintMap cm = build_constraint_map(*sp, c);
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(cm.n_free, -1.0, 1.0);
  const Eigen::VectorXd u = cm.prolongation * z + cm.offset;
  for (int n : sp->canonical_nodes_on(BoundaryTag::rough)) {
    const Eigen::Vector2d v(u[sp->ux(n)], u[sp->uy(n)]);
    CHECK(v.dot(sp->rough_normal(n)) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::abs(sp->rough_normal(n).norm() - 1.0) < 1e-14);
  }
  for (int n : sp->canonical_nodes_on(BoundaryTag::top)) {
    CHECK(u[sp->ux(n)] == 1.0);
    CHECK(u[sp->uy(n)] == -1.0);
  }
}

TEST_CASE("evaluation, location and cross-section flux") {
  const auto sp = cosine_space();
  auto f = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(6 * x.y() * (1 - x.y()), x.y() * x.y()); };
  const Eigen::VectorXd u = interpolate(*sp, f);
  const PointLocator loc(*sp);
  for (const Eigen::Vector2d x : {Eigen::Vector2d(0.3, 0.5), Eigen::Vector2d(0.77, 0.01), Eigen::Vector2d(0.05, 0.95)}) {
    const auto l = loc.locate(x);
    REQUIRE(l.has_value());
    CHECK((eval_velocity(*sp, u, l->tri, l->s, l->t) - f(x)).norm() < 1e-12);
    const Eigen::Matrix2d g = eval_velocity_gradient(*sp, u, l->tri, l->s, l->t);
    CHECK(g(0, 1) == doctest::Approx(6 - 12 * x.y()));
    CHECK(g(1, 1) == doctest::Approx(2 * x.y()));
  }
  CHECK(!loc.locate(Eigen::Vector2d(0.5, 1.5)).has_value());
  // flux of 6 x2 (1 - x2) through a flat section is exactly 1
  const auto fs = flat_space();
  const Eigen::VectorXd p = interpolate(*fs, f);
  for (double c : {0.0, 0.1, 0.5, 0.93}) CHECK(cross_section_flux(*fs, p, c) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("curved wall elements") {
  // a bump with a mean, so that polygon sagittas do not cancel
  const auto p = make_cosine(-0.5, 0.1);
  const double eps = 1.0 / 4.0;
  const auto rough = [&](double x) { return eps * p.eval(x / eps); };
  const double exact = quad_adaptive([&](double x) { return 1.0 - rough(x); }, 0.0, 0.25, 1e-14);
  double prev = 1.0;
  for (double h : {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}) {
    auto mesh = std::make_shared<const TriMesh>(build_channel_mesh(p, eps, h));
    const P2P1Space sp = make_p2p1_space(mesh);
    int curved = 0;
    for (char c : sp.curved) curved += c;
    CHECK(curved > 0);
    // over a quarter period the wall curvature has one sign, so the
    // polygon error does not cancel; the curved one shrinks like h^4
    const double part = integrate_clipped(sp, {{Eigen::Vector2d(-1, 0), -eps / 4.0}},
                                          [](int, double, double, const Eigen::Vector2d&) { return 1.0; });
    const double err = std::abs(part - quad_adaptive([&](double x) { return 1.0 - rough(x); }, 0.0, eps / 4.0, 1e-14));
    MESSAGE("h = ", h, " quarter-period area error ", err);
    CHECK(err < prev / 8.0);
    prev = err;
    CHECK(std::abs(domain_area(sp) / mesh->width - exact / 0.25) < 1e-6);
  }
}

TEST_CASE("clipped integration") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Polygon half = clip_halfplane(sq, Eigen::Vector2d(1, 1), 1.0);
  REQUIRE(half.size() == 3);
  const auto sp = cosine_space();
  const double above = integrate_clipped(*sp, {{Eigen::Vector2d(0, 1), 0.0}},
                                         [](int, double, double, const Eigen::Vector2d&) { return 1.0; });
  CHECK(above == doctest::Approx(1.0).epsilon(1e-12));
  const double x2 = integrate_clipped(*sp, {{Eigen::Vector2d(0, 1), 0.0}},
                                      [](int, double, double, const Eigen::Vector2d& x) { return x.y(); });
  CHECK(x2 == doctest::Approx(0.5).epsilon(1e-12));
}
