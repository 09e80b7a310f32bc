#include <doctest.h>

#include "wallaw/errors.hpp"
#include "wallaw/inequalities.hpp"

#include <cmath>
#include <numbers>

using namespace wallaw;

namespace {

// circular bowl of radius 1 centred at (0.5, 0.5) seen on [0, 1]
RoughnessProfile arc() {
  return make_custom([](double y) { return 0.5 - std::sqrt(1.0 - (y - 0.5) * (y - 0.5)); },
                     [](double y) { return (y - 0.5) / std::sqrt(1.0 - (y - 0.5) * (y - 0.5)); }, std::nullopt, "arc",
                     1.0);
}

double rayleigh(const SparseMatrix& a, const SparseMatrix& b, const Eigen::VectorXd& v) {
  return v.dot(a * v) / v.dot(b * v);
}

}  // namespace

TEST_CASE("lateral parsing") {
  CHECK(Lateral::parse("periodic").kind == Lateral::Kind::periodic);
  CHECK(Lateral::parse("slice:2.5").width == 2.5);
  CHECK(to_string(Lateral::slice(2.5)) == "slice:2.5");
  CHECK_THROWS_AS(Lateral::parse("slice:"), PreconditionError);
  CHECK_THROWS_AS(Lateral::parse("slice:-1"), PreconditionError);
  CHECK_THROWS_AS(poincare_constant(make_cosine(), -0.45, Lateral::periodic()), PreconditionError);
}

TEST_CASE("flat cells are degenerate with the horizontal translation") {
  const auto flat = make_flat(-0.5);
  for (const auto& r : {poincare_constant(flat, 0.0, Lateral::periodic()), korn_constant(flat, 0.0, Lateral::periodic())}) {
    CAPTURE(to_string(r.kind));
    CHECK(r.degenerate);
    CHECK(r.lambda_min < 1e-10);
    const double area = 0.5;
    const double sign = r.eigenvector[0] > 0 ? 1.0 : -1.0;
    double dev = 0.0;
    for (int c = 0; c < r.space->n_canonical; ++c)
      dev = std::max(dev, (sign * std::sqrt(area) * r.eigenvector.segment<2>(2 * c) - Eigen::Vector2d(1.0, 0.0)).norm());
    CHECK(dev <= 1e-6);
  }
}

TEST_CASE("cosine cells satisfy both inequalities") {
  const auto p = make_cosine();
  for (double y : {0.0, 0.5}) {
    const InequalityReport pc = poincare_constant(p, y, Lateral::periodic());
    const InequalityReport kc = korn_constant(p, y, Lateral::periodic());
    CHECK(!pc.degenerate);
    CHECK(!kc.degenerate);
    CHECK(pc.lambda_min > 0.0);
    CHECK(kc.lambda_min > 0.0);
    CHECK(kc.constant >= pc.constant);
  }
  // depth robustness
  for (auto fn : {&poincare_constant, &korn_constant}) {
    const double c1 = fn(p, 0.5, Lateral::periodic(), {}).constant, c2 = fn(p, 1.0, Lateral::periodic(), {}).constant;
    MESSAGE("constants at depth 0.5 and 1: ", c1, " ", c2);
    CHECK(std::max(c1, c2) / std::min(c1, c2) <= 10.0);
  }
}

TEST_CASE("one-dimensional Poincare constant with no-slip wall") {
  InequalityOptions o;
  o.noslip_rough = true;
  for (double d : {0.25, 0.5}) {
    const InequalityReport r = poincare_constant(make_flat(-d), 0.0, Lateral::periodic(), o);
    CHECK(r.constant == doctest::Approx(2 * d / std::numbers::pi).epsilon(0.01));
  }
}

TEST_CASE("arc wall admits a rigid rotation") {
  const InequalityReport k = korn_constant(arc(), 0.0, Lateral::slice(1.0));
  const InequalityReport p = poincare_constant(arc(), 0.0, Lateral::slice(1.0));
  MESSAGE("arc korn lambda ", k.lambda_min, " poincare lambda ", p.lambda_min);
  CHECK(k.lambda_min < 1e-9);
  CHECK(k.degenerate);
  CHECK(!p.degenerate);
  CHECK(k.constant >= p.constant);
}

TEST_CASE("classical Korn") {
  const InequalityReport flat = korn_classical_check(make_flat(-0.5), 0.0);
  CHECK(std::isfinite(flat.constant));
  CHECK(!flat.degenerate);
  const double c1 = korn_classical_check(make_cosine(-0.5, 0.1), 0.5).constant;
  const double c3 = korn_classical_check(make_cosine(-0.5, 0.3), 0.5).constant;
  MESSAGE("C_K amplitude 0.1: ", c1, ", 0.3: ", c3);
  CHECK(std::isfinite(c1));
  CHECK(c3 >= c1);

  // a rigid rotation cannot beat the minimum of the quotient
  const InequalityReport s = korn_classical_check(arc(), 0.0, Lateral::slice(1.0));
  const P2P1Space& sp = *s.space;
  Eigen::VectorXd rot(sp.velocity_dofs());
  for (int n = 0; n < sp.n_nodes; ++n) {
    rot[sp.ux(sp.canonical[n])] = -sp.node_xy[n].y();
    rot[sp.uy(sp.canonical[n])] = sp.node_xy[n].x();
  }
  const SparseMatrix m = assemble_velocity_mass(sp);
  const double q = rayleigh(m + assemble_viscous(sp, ViscousForm::symmetric_gradient, 1.0),
                            m + assemble_viscous(sp, ViscousForm::full_gradient, 1.0), rot);
  CHECK(q >= s.lambda_min);
}

TEST_CASE("eigenvalue refinement") {
  const auto p = make_cosine();
  InequalityOptions o;
  o.h = 1.0 / 64.0;
  const double ref = korn_constant(p, 0.0, Lateral::periodic(), o).lambda_min;
  double prev = 1.0;
  for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    o.h = h;
    const double err = std::abs(korn_constant(p, 0.0, Lateral::periodic(), o).lambda_min - ref);
    MESSAGE("h ", h, " eigenvalue error ", err);
    CHECK(err <= prev / 2);
    prev = err;
  }
}
