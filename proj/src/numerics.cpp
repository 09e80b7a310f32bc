#include "wallaw/numerics.hpp"

#include "wallaw/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace wallaw {

LineRule gauss_legendre_01(int n) {
  if (n < 1) throw PreconditionError("gauss_legendre_01: n must be >= 1");
  LineRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.x[i] = 0.5 * (1.0 - z);
    rule.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

TriangleRule duffy_triangle_rule(int n) {
  const LineRule g = gauss_legendre_01(n);
  TriangleRule rule;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.x[i];
      const double v = g.x[j];
      rule.x.emplace_back(u, v * (1.0 - u));
      rule.w.push_back(g.w[i] * g.w[j] * (1.0 - u));
    }
  }
  return rule;
}

namespace {

struct SimpsonBudget {
  long evals = 0;
  long max_evals = 0;
};

double simpson_recurse(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth,
                       SimpsonBudget& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  budget.evals += 2;
  if (budget.evals > budget.max_evals)
    throw BudgetExceeded("quad_adaptive: evaluation budget exhausted");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Minimum depth guards against symmetric integrands fooling the first test.
  if (depth >= 4 && std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth > 60) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget);
}

}  // namespace

double quad_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                     long max_evals) {
  if (!(a < b)) throw PreconditionError("quad_adaptive: requires a < b");
  if (!(tol > 0)) throw PreconditionError("quad_adaptive: tol must be positive");
  SimpsonBudget budget{3, max_evals};
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 0, budget);
}

bool is_symmetric(const SparseMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const SparseMatrix t = a.transpose();
  const SparseMatrix d = a - t;
  double max_entry = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      max_entry = std::max(max_entry, std::abs(it.value()));
  double max_diff = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it)
      max_diff = std::max(max_diff, std::abs(it.value()));
  return max_diff <= tol * std::max(max_entry, 1e-300);
}

SparseDirectSolver::SparseDirectSolver(const SparseMatrix& a, double pivot_tol) : a_(a) {
  if (a.rows() != a.cols()) throw PreconditionError("SparseDirectSolver: matrix not square");
  a_.makeCompressed();
  for (int k = 0; k < a_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a_, k); it; ++it)
      if (!std::isfinite(it.value()))
        throw PreconditionError("SparseDirectSolver: non-finite matrix entry");

  // Symmetric equilibration S A S with S = diag(1 / sqrt(max_i |a_ij|)), so
  // that penalty-sized rows do not masquerade as ill-conditioning.
  Eigen::VectorXd colmax = Eigen::VectorXd::Zero(a_.cols());
  for (int k = 0; k < a_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a_, k); it; ++it)
      colmax[it.col()] = std::max(colmax[it.col()], std::abs(it.value()));
  scale_.resize(a_.cols());
  for (Eigen::Index j = 0; j < scale_.size(); ++j) scale_[j] = colmax[j] > 0.0 ? 1.0 / std::sqrt(colmax[j]) : 1.0;
  SparseMatrix scaled = scale_.asDiagonal() * a_ * scale_.asDiagonal();
  scaled.makeCompressed();

  lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
  lu_->analyzePattern(scaled);
  lu_->factorize(scaled);
  if (lu_->info() != Eigen::Success)
    throw SingularSystem("sparse LU failed: " + lu_->lastErrorMessage());

  // Lower bound on ||A^-1||_2 from a few inverse power steps; a tiny pivot
  // left by rounding shows up as an enormous growth factor.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd x(scaled.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
  x.normalize();
  double inv_norm = 0.0;
  for (int it = 0; it < 4; ++it) {
    Eigen::VectorXd y = lu_->solve(x);
    const double ny = y.norm();
    if (!std::isfinite(ny)) throw SingularSystem("sparse LU produced non-finite solution");
    inv_norm = std::max(inv_norm, ny);
    x = y / ny;
  }
  double row_sum = 0.0;
  {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(scaled.rows());
    for (int k = 0; k < scaled.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(scaled, k); it; ++it) sums[it.row()] += std::abs(it.value());
    row_sum = sums.maxCoeff();
  }
  cond_estimate_ = row_sum * inv_norm;
  if (cond_estimate_ * pivot_tol > 1.0) {
    std::ostringstream os;
    os << "matrix is numerically singular (condition estimate " << cond_estimate_ << ")";
    throw SingularSystem(os.str());
  }
}

Eigen::VectorXd SparseDirectSolver::solve_unchecked(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != a_.rows()) throw PreconditionError("solve: rhs length mismatch");
  auto apply = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return scale_.cwiseProduct(lu_->solve(scale_.cwiseProduct(b)));
  };
  Eigen::VectorXd x = apply(rhs);
  const double nb = std::max(rhs.norm(), 1e-300);
  Eigen::VectorXd r = rhs - a_ * x;
  for (int it = 0; it < 3 && r.norm() > 1e-12 * nb; ++it) {
    x += apply(r);
    r = rhs - a_ * x;
  }
  return x;
}

Eigen::VectorXd SparseDirectSolver::solve(const Eigen::VectorXd& rhs) const {
  const Eigen::VectorXd x = solve_unchecked(rhs);
  const double nb = std::max(rhs.norm(), 1e-300);
  const Eigen::VectorXd r = rhs - a_ * x;
  if (rhs.norm() > 0.0 && r.norm() > 1e-10 * nb) {
    std::ostringstream os;
    os << "residual " << r.norm() / nb << " above 1e-10 (inconsistent or singular system)";
    throw SingularSystem(os.str());
  }
  return x;
}

Eigen::VectorXd solve_saddle_point(const SparseMatrix& a, const Eigen::VectorXd& rhs,
                                   bool symmetric_indefinite) {
  if (a.rows() != a.cols()) throw PreconditionError("solve_saddle_point: matrix not square");
  if (rhs.size() != a.rows()) throw PreconditionError("solve_saddle_point: rhs length mismatch");
  if (symmetric_indefinite && !is_symmetric(a))
    throw PreconditionError("solve_saddle_point: matrix flagged symmetric is not");
  return SparseDirectSolver(a).solve(rhs);
}

BorderedSolution solve_bordered(const SparseMatrix& a, const Eigen::MatrixXd& c, const Eigen::MatrixXd& d,
                                const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  const Eigen::Index n = a.rows(), m = c.cols();
  if (a.cols() != n || c.rows() != n || d.rows() != m || d.cols() != m || f.size() != n || g.size() != m)
    throw PreconditionError("solve_bordered: dimension mismatch");
  const SparseDirectSolver lu(a);
  Eigen::MatrixXd ac(n, m);
  for (Eigen::Index j = 0; j < m; ++j) ac.col(j) = lu.solve_unchecked(c.col(j));
  // The border columns can differ in scale by many orders of magnitude, so
  // the Schur complement is equilibrated before its rank is judged.
  const Eigen::MatrixXd schur = d - c.transpose() * ac;
  Eigen::VectorXd sd(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = std::abs(schur(i, i));
    sd[i] = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> slu(sd.asDiagonal() * schur * sd.asDiagonal());
  if (m > 0 && slu.rank() < m) throw SingularSystem("solve_bordered: singular Schur complement");

  auto step = [&](const Eigen::VectorXd& rf, const Eigen::VectorXd& rg, Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const Eigen::VectorXd af = lu.solve_unchecked(rf);
    y = m > 0 ? Eigen::VectorXd(sd.cwiseProduct(slu.solve(sd.cwiseProduct(rg - c.transpose() * af))))
              : Eigen::VectorXd();
    x = af - ac * y;
  };
  BorderedSolution s;
  step(f, g, s.x, s.y);
  const double nb = std::max(std::sqrt(f.squaredNorm() + g.squaredNorm()), 1e-300);
  auto residual = [&](Eigen::VectorXd& rf, Eigen::VectorXd& rg) {
    rf = f - a * s.x - c * s.y;
    rg = g - c.transpose() * s.x - d * s.y;
    return std::sqrt(rf.squaredNorm() + rg.squaredNorm());
  };
  Eigen::VectorXd rf, rg, dx, dy;
  double r = residual(rf, rg);
  for (int it = 0; it < 3 && r > 1e-12 * nb; ++it) {
    step(rf, rg, dx, dy);
    s.x += dx;
    s.y += dy;
    r = residual(rf, rg);
  }
  if (f.norm() + g.norm() > 0.0 && r > 1e-10 * nb) {
    std::ostringstream os;
    os << "bordered residual " << r / nb << " above 1e-10";
    throw SingularSystem(os.str());
  }
  return s;
}

EigenPair smallest_eigenpair(const SparseMatrix& a_full, const SparseMatrix& b_full,
                             const std::optional<SparseMatrix>& basis, double tol,
                             int max_iter) {
  if (a_full.rows() != a_full.cols() || b_full.rows() != b_full.cols() ||
      a_full.rows() != b_full.rows())
    throw PreconditionError("smallest_eigenpair: dimension mismatch");
  SparseMatrix a = a_full;
  SparseMatrix b = b_full;
  if (basis) {
    if (basis->rows() != a_full.rows())
      throw PreconditionError("smallest_eigenpair: basis row count mismatch");
    a = SparseMatrix(basis->transpose() * a_full * *basis);
    b = SparseMatrix(basis->transpose() * b_full * *basis);
  }
  const Eigen::Index n = a.rows();
  if (n == 0) throw PreconditionError("smallest_eigenpair: empty subspace");

  // Start with a shift below the spectrum; once the Ritz values settle, move
  // the shift up to half-way between the two lowest ones.
  double sigma = -1.0;
  Eigen::SimplicialLDLT<SparseMatrix> shifted_ldlt(SparseMatrix(a - sigma * b));
  if (shifted_ldlt.info() != Eigen::Success)
    throw NoConvergence("smallest_eigenpair: shifted factorization failed");
  Eigen::SimplicialLDLT<SparseMatrix> b_ldlt(b);
  if (b_ldlt.info() != Eigen::Success)
    throw PreconditionError("smallest_eigenpair: B not positive definite on subspace");

  const Eigen::Index block = std::min<Eigen::Index>(n, 6);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < block; ++j) x(i, j) = dist(rng);

  EigenPair out;
  double prev_lambda = std::numeric_limits<double>::infinity();
  int reshifts = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd y = shifted_ldlt.solve(b * x);
    const Eigen::MatrixXd ar = y.transpose() * (a * y);
    const Eigen::MatrixXd br = y.transpose() * (b * y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(
        0.5 * (ar + ar.transpose()), 0.5 * (br + br.transpose()));
    if (ritz.info() != Eigen::Success) throw NoConvergence("Rayleigh-Ritz step failed");
    x = y * ritz.eigenvectors();
    for (Eigen::Index j = 0; j < block; ++j) {
      const double nb = std::sqrt(x.col(j).dot(b * x.col(j)));
      x.col(j) /= nb;
    }
    const double lambda = ritz.eigenvalues()[0];
    const Eigen::VectorXd v = x.col(0);
    const Eigen::VectorXd r = a * v - lambda * (b * v);
    const double res = std::sqrt(std::max(0.0, r.dot(b_ldlt.solve(r))));
    out.value = lambda;
    out.residual = res;
    out.iterations = it;
    if (res <= tol * std::max(1.0, std::abs(lambda))) {
      out.vector = basis ? Eigen::VectorXd(*basis * v) : v;
      return out;
    }
    if (block > 1 && reshifts < 8) {
      const double gap = ritz.eigenvalues()[1] - lambda;
      const double target = lambda - 0.5 * gap;
      if (gap > 0.0 && std::abs(lambda - prev_lambda) <= 1e-3 * gap && target > sigma + 0.1 * gap) {
        sigma = target;
        shifted_ldlt.compute(SparseMatrix(a - sigma * b));
        if (shifted_ldlt.info() != Eigen::Success)
          throw NoConvergence("smallest_eigenpair: shifted factorization failed");
        ++reshifts;
      }
    }
    prev_lambda = lambda;
  }
  throw NoConvergence("smallest_eigenpair: no convergence after max_iter iterations");
}

}  // namespace wallaw
