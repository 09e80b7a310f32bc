#include <doctest.h>

#include "wallaw/errors.hpp"
#include "wallaw/numerics.hpp"

#include <cmath>
#include <numbers>

using namespace wallaw;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& m) {
  SparseMatrix s = m.sparseView();
  s.makeCompressed();
  return s;
}

}  // namespace

TEST_CASE("quad_adaptive examples") {
  CHECK(quad_adaptive([](double) { return 1.0; }, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  const double s = quad_adaptive(
      [](double t) { return std::pow(std::sin(2 * std::numbers::pi * t), 2); }, 0.0, 1.0, 1e-11);
  CHECK(std::abs(s - 0.5) < 1e-10);
  CHECK(std::abs(quad_adaptive([](double t) { return t * t; }, 0.0, 2.0) - 8.0 / 3.0) < 1e-10);
  CHECK_THROWS_AS(quad_adaptive([](double) { return 1.0; }, 1.0, 0.0), PreconditionError);
}

TEST_CASE("quad_adaptive budget") {
  auto wild = [](double t) { return std::sin(1.0 / (t + 1e-9)); };
  CHECK_THROWS_AS(quad_adaptive(wild, 0.0, 1.0, 1e-14, 1000), BudgetExceeded);
}

TEST_CASE("gauss rules integrate polynomials") {
  const auto g = gauss_legendre_01(5);
  double s = 0;
  for (int i = 0; i < 5; ++i) s += g.w[i] * std::pow(g.x[i], 9);
  CHECK(s == doctest::Approx(0.1).epsilon(1e-14));

  const auto t = duffy_triangle_rule(4);
  double area = 0, m = 0;
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    area += t.w[i];
    m += t.w[i] * std::pow(t.x[i].x(), 3) * std::pow(t.x[i].y(), 3);
  }
  CHECK(area == doctest::Approx(0.5).epsilon(1e-14));
  // int x^3 y^3 over the unit triangle = 3!3!/8!
  CHECK(m == doctest::Approx(36.0 / 40320.0).epsilon(1e-13));
}

TEST_CASE("solve_saddle_point examples") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  CHECK((solve_saddle_point(dense_to_sparse(id), e1) - e1).norm() < 1e-15);

  Eigen::MatrixXd perm(2, 2);
  perm << 0, 1, 1, 0;
  Eigen::VectorXd rhs(2);
  rhs << 1, 2;
  const Eigen::VectorXd x = solve_saddle_point(dense_to_sparse(perm), rhs, true);
  CHECK(x[0] == doctest::Approx(2.0));
  CHECK(x[1] == doctest::Approx(1.0));

  Eigen::MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  CHECK_THROWS_AS(solve_saddle_point(dense_to_sparse(sing), rhs), SingularSystem);
}

TEST_CASE("solve_saddle_point residual on a random Stokes-like block system") {
  const int n = 60, m = 20;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, n);
  a = a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Random(m, n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = a;
  k.topRightCorner(n, m) = b.transpose();
  k.bottomLeftCorner(m, n) = b;
  const Eigen::VectorXd rhs = Eigen::VectorXd::Random(n + m);
  const Eigen::VectorXd x = solve_saddle_point(dense_to_sparse(k), rhs, true);
  CHECK((k * x - rhs).norm() / rhs.norm() <= 1e-10);
}

TEST_CASE("smallest_eigenpair diagonal examples") {
  Eigen::MatrixXd a = Eigen::Vector3d(1, 2, 3).asDiagonal();
  const auto p = smallest_eigenpair(dense_to_sparse(a), dense_to_sparse(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(p.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(std::abs(p.vector[0]) - 1.0) < 1e-8);

  Eigen::MatrixXd z = Eigen::Vector2d(0, 1).asDiagonal();
  const auto q = smallest_eigenpair(dense_to_sparse(z), dense_to_sparse(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(std::abs(q.value) < 1e-12);
  CHECK(std::abs(std::abs(q.vector[0]) - 1.0) < 1e-8);
}

TEST_CASE("smallest_eigenpair on the 1D Dirichlet Laplacian") {
  const int n = 200;
  const double h = 1.0 / (n + 1);
  std::vector<Triplet> ka, kb;
  for (int i = 0; i < n; ++i) {
    ka.emplace_back(i, i, 2.0 / h);
    kb.emplace_back(i, i, 4.0 * h / 6.0);
    if (i + 1 < n) {
      ka.emplace_back(i, i + 1, -1.0 / h);
      ka.emplace_back(i + 1, i, -1.0 / h);
      kb.emplace_back(i, i + 1, h / 6.0);
      kb.emplace_back(i + 1, i, h / 6.0);
    }
  }
  SparseMatrix a(n, n), b(n, n);
  a.setFromTriplets(ka.begin(), ka.end());
  b.setFromTriplets(kb.begin(), kb.end());
  const auto p = smallest_eigenpair(a, b);
  CHECK(std::abs(p.value - std::numbers::pi * std::numbers::pi) < 0.01);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(a), Eigen::MatrixXd(b)};
  CHECK(std::abs(p.value - dense.eigenvalues()[0]) < 1e-8);
  CHECK(p.residual <= 1e-8 * std::max(1.0, p.value));
}

TEST_CASE("smallest_eigenpair agrees with a dense solver, with and without a constraint basis") {
  const int n = 40;
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(n, n);
  Eigen::MatrixXd a = r * r.transpose();
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(n, n);
  Eigen::MatrixXd b = s * s.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  const auto p = smallest_eigenpair(dense_to_sparse(a), dense_to_sparse(b));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(a, b);
  CHECK(std::abs(p.value - dense.eigenvalues()[0]) < 1e-8);

  // Restrict to the first 25 coordinates.
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, 25);
  basis.topRows(25) = Eigen::MatrixXd::Identity(25, 25);
  const auto q = smallest_eigenpair(dense_to_sparse(a), dense_to_sparse(b), dense_to_sparse(basis));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> sub(a.topLeftCorner(25, 25), b.topLeftCorner(25, 25));
  CHECK(std::abs(q.value - sub.eigenvalues()[0]) < 1e-8);
  CHECK(q.vector.size() == n);
  CHECK(q.vector.tail(n - 25).norm() == 0.0);
}

TEST_CASE("is_symmetric") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  CHECK(is_symmetric(dense_to_sparse(a)));
  a(0, 1) = 2.1;
  CHECK_FALSE(is_symmetric(dense_to_sparse(a)));
}
