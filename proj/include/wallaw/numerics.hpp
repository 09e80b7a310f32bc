#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace wallaw {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

// ---------------------------------------------------------------------------
// Quadrature rules
// ---------------------------------------------------------------------------

/// Gauss-Legendre rule with `n` points on [0, 1].
struct LineRule {
  std::vector<double> x;
  std::vector<double> w;
};
LineRule gauss_legendre_01(int n);

/// Collapsed (Duffy) Gauss rule on the reference triangle
/// {(s, t): s, t >= 0, s + t <= 1}; exact for polynomials of total degree
/// 2n - 2. Weights sum to 1/2.
struct TriangleRule {
  std::vector<Eigen::Vector2d> x;
  std::vector<double> w;
};
TriangleRule duffy_triangle_rule(int n);

/// Adaptive Simpson quadrature; |result - integral| <= tol for piecewise
/// smooth integrands. Throws BudgetExceeded after `max_evals` evaluations.
double quad_adaptive(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-8, long max_evals = 2'000'000);

// ---------------------------------------------------------------------------
// Linear systems
// ---------------------------------------------------------------------------

/// True when A equals its transpose to `tol` relative to max |a_ij|.
bool is_symmetric(const SparseMatrix& a, double tol = 1e-12);

/// Sparse LU factorization with singularity detection. A factorization is
/// immutable after construction; `solve` may be called concurrently.
class SparseDirectSolver {
 public:
  /// Throws SingularSystem when the LU fails or when the estimated
  /// reciprocal condition number falls below `pivot_tol`.
  explicit SparseDirectSolver(const SparseMatrix& a, double pivot_tol = 1e-14);

  /// Solves with up to three steps of iterative refinement; throws
  /// SingularSystem if the relative residual stays above 1e-10.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Same refinement without the residual check; for callers that verify
  /// a larger system themselves.
  Eigen::VectorXd solve_unchecked(const Eigen::VectorXd& rhs) const;

  double condition_estimate() const { return cond_estimate_; }
  Eigen::Index rows() const { return a_.rows(); }

 private:
  SparseMatrix a_;
  Eigen::VectorXd scale_;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  double cond_estimate_ = 0.0;
};

/// One-shot solve of A x = rhs with relative residual <= 1e-10.
/// `symmetric_indefinite` asserts symmetry (checked to 1e-12).
Eigen::VectorXd solve_saddle_point(const SparseMatrix& a, const Eigen::VectorXd& rhs,
                                   bool symmetric_indefinite = false);

/// Solves [A C; C^T D] (x, y) = (f, g) for sparse A and a handful of dense
/// columns C: one factorization of A, a small Schur complement, and
/// iterative refinement on the full system. Dense rows would otherwise ruin
/// the fill of the sparse LU.
struct BorderedSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};
BorderedSolution solve_bordered(const SparseMatrix& a, const Eigen::MatrixXd& c, const Eigen::MatrixXd& d,
                                const Eigen::VectorXd& f, const Eigen::VectorXd& g);

// ---------------------------------------------------------------------------
// Generalized symmetric eigenproblems
// ---------------------------------------------------------------------------

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  ///< B-normalized; expressed in the full space.
  double residual = 0.0;   ///< ||A v - value B v||_{B^-1} on the constrained space.
  int iterations = 0;
};

/// Smallest eigenpair of A v = lambda B v restricted to range(basis) (all of
/// R^n when `basis` is empty). A symmetric positive semidefinite and B
/// symmetric positive definite on the subspace. Shift-invert block subspace
/// iteration with Rayleigh-Ritz; throws NoConvergence after `max_iter`.
EigenPair smallest_eigenpair(const SparseMatrix& a, const SparseMatrix& b,
                             const std::optional<SparseMatrix>& basis = std::nullopt,
                             double tol = 1e-8, int max_iter = 500);

}  // namespace wallaw
