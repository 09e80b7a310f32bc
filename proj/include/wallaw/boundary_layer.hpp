#pragma once

#include "wallaw/profiles.hpp"
#include "wallaw/stokes.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace wallaw {

/// Poisson kernel of the Stokes problem in the upper half-plane: the
/// decaying solution with trace v0 is v(y) = int G(t, y2) v0(y1 - t) dt and
/// its pressure q(y) = int grad g(t, y2) . v0(y1 - t) dt.
struct StokesHalfPlaneKernel {
  static Eigen::Matrix2d G(const Eigen::Vector2d& y);
  static double g(const Eigen::Vector2d& y);
  static Eigen::Vector2d grad_g(const Eigen::Vector2d& y);
};

enum class TopCondition { dtn, natural };
std::string to_string(TopCondition top);
TopCondition parse_top_condition(const std::string& text);

/// Boundary-layer corrector on a truncated periodic cell.
///
/// `field` holds the corrector itself (v, or v1 for `solve_v1`), not the
/// total flow; `field.bc` is the condition at the rough boundary.
struct BLResult {
  FlowField field;
  double alpha = 0.0;
  std::optional<double> beta;
  double truncation_H = 0.0;
  double mesh_h = 0.0;
  TopCondition top = TopCondition::dtn;
  /// RMS over the top edge of the nonzero Fourier modes of the trace.
  double top_mode_residual = 0.0;
  /// 2 int |D(u)|^2 + top form, and the load pairing, for u = v + (y2, 0).
  double energy = 0.0;
  double energy_data = 0.0;

  const BoundaryCondition& bc_kind_at_rough() const { return field.bc; }
};

/// Solves the cell problem for v with u = v + (y2, 0) vanishing on the rough
/// boundary (dirichlet) or satisfying u . nu = 0 with zero tangential
/// traction (navier; the slip length does not enter this problem).
/// Flat profiles with navier raise SingularSystem.
BLResult solve_bl(const RoughnessProfile& p, const BoundaryCondition& rough_bc, double H, double h,
                  TopCondition top = TopCondition::dtn);

/// Second-order corrector v1 for a navier cell `v` on the same profile and mesh.
BLResult solve_v1(const RoughnessProfile& p, double lambda0, const BLResult& v, double H, double h);

/// Traction of the decaying half-plane solution for the Fourier mode k of a
/// unit-period trace; the map acts on cosine and sine coefficients alike.
/// Throws ZeroModeRequest for k = 0.
Eigen::Matrix2d dtn_mode_matrix(int k, double period = 1.0);

/// Half-plane extension of a periodic trace sampled at `samples.size()`
/// uniform points over [0, period), evaluated at y (y2 > 0).
Eigen::Vector2d kernel_extend(const std::vector<Eigen::Vector2d>& samples, double period,
                              const Eigen::Vector2d& y);
/// Pressure of the same extension.
double kernel_extend_pressure(const std::vector<Eigen::Vector2d>& samples, double period,
                              const Eigen::Vector2d& y);

/// One row per height: y2, sup |v - (alpha, 0)|, sup y2^k |d1^k v| (k = 1..3),
/// all over the period at that height.
struct DecayRow {
  double y2 = 0.0;
  double deviation = 0.0;
  std::array<double, 3> derivatives{};
};
std::vector<DecayRow> far_field_decay_report(const BLResult& r, const std::vector<double>& heights);

/// Corrector value at a cell point; above the truncation the top trace is
/// extended by the half-plane kernel. Keeps a pointer to `r`.
class CellEvaluator {
 public:
  explicit CellEvaluator(const BLResult& r, int trace_samples = 256);
  Eigen::Vector2d operator()(Eigen::Vector2d y) const;
  double period() const { return period_; }

 private:
  const BLResult* r_;
  PointLocator locator_;
  double period_;
  std::vector<Eigen::Vector2d> trace_;
};

}  // namespace wallaw
