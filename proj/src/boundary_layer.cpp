#include "wallaw/boundary_layer.hpp"

#include "wallaw/errors.hpp"
#include "wallaw/geometry.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

namespace wallaw {

namespace {

constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;

// int_0^1 t^j exp(-i theta t) dt for j = 0, 1, 2
std::array<cplx, 3> edge_moments(double theta) {
  std::array<cplx, 3> m{};
  if (std::abs(theta) < 1.0) {
    static const LineRule r = gauss_legendre_01(16);
    for (std::size_t q = 0; q < r.x.size(); ++q) {
      const cplx e = std::exp(cplx(0.0, -theta * r.x[q]));
      for (int j = 0; j < 3; ++j) m[j] += r.w[q] * std::pow(r.x[q], j) * e;
    }
    return m;
  }
  const cplx e = std::exp(cplx(0.0, -theta));
  const cplx it(0.0, theta);
  m[0] = (1.0 - e) / it;
  for (int j = 1; j < 3; ++j) m[j] = (-e + static_cast<double>(j) * m[j - 1]) / it;
  return m;
}

// <DN u, v> on the top edge, summed over the nonzero modes of the trace.
SparseMatrix dtn_top_form(const P2P1Space& sp, double width) {
  const auto segs = sp.boundary_segments(BoundaryTag::top);
  std::map<int, int> local;
  for (const auto& s : segs)
    for (int a : s) local.emplace(sp.canonical[a], 0);
  int nt = 0;
  for (auto& [c, i] : local) i = nt++;
  const int modes = std::max<int>(64, 32 * static_cast<int>(segs.size()));
  // quadratic edge shapes in the edge parameter: constant, linear, square coefficients
  const double shape[3][3] = {{1, -3, 2}, {0, -1, 2}, {0, 4, -4}};
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(modes, nt), im = Eigen::MatrixXd::Zero(modes, nt);
  for (const auto& s : segs) {
    const double xa = sp.node_xy[s[0]].x(), len = sp.node_xy[s[1]].x() - xa;
    for (int k = 1; k <= modes; ++k) {
      const double kappa = 2 * pi * k / width;
      const auto m = edge_moments(kappa * len);
      const cplx phase = std::exp(cplx(0.0, -kappa * xa)) * std::abs(len) / width;
      for (int a = 0; a < 3; ++a) {
        const cplx c = phase * (shape[a][0] * m[0] + shape[a][1] * m[1] + shape[a][2] * m[2]);
        const int i = local[sp.canonical[s[a]]];
        re(k - 1, i) += c.real();
        im(k - 1, i) += c.imag();
      }
    }
  }
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nt, nt);
  for (int k = 1; k <= modes; ++k) {
    const double w = 2 * width * dtn_mode_matrix(k, width)(0, 0);
    block += w * (re.row(k - 1).transpose() * re.row(k - 1) + im.row(k - 1).transpose() * im.row(k - 1));
  }
  std::vector<Triplet> trip;
  for (const auto& [ca, ia] : local)
    for (const auto& [cb, ib] : local)
      for (int d = 0; d < 2; ++d) trip.emplace_back(2 * ca + d, 2 * cb + d, block(ia, ib));
  SparseMatrix m(sp.velocity_dofs(), sp.velocity_dofs());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::VectorXd top_load(const P2P1Space& sp, const Eigen::Vector2d& g) {
  return assemble_boundary_load(sp, BoundaryTag::top,
                                [&](const Eigen::Vector2d&, const Eigen::Vector2d&, const Eigen::Vector2d&) { return g; });
}

std::vector<Eigen::Vector2d> canonical_xy(const P2P1Space& sp) {
  std::vector<Eigen::Vector2d> xy(sp.n_canonical);
  for (int n = 0; n < sp.n_nodes; ++n) xy[sp.canonical[n]] = sp.node_xy[n];
  return xy;
}

struct CellSystem {
  SparseMatrix op;
  std::vector<NodeConstraint> constraints;
  Eigen::VectorXd e1, e2;  // top loads of unit horizontal and vertical traction
};

CellSystem cell_system(const P2P1Space& sp, TopCondition top) {
  CellSystem cs;
  cs.op = assemble_viscous(sp, ViscousForm::symmetric_gradient, 2.0);
  if (top == TopCondition::dtn) cs.op += dtn_top_form(sp, sp.mesh->width);
  cs.constraints.resize(sp.n_canonical);
  if (top == TopCondition::natural)
    for (int n : sp.canonical_nodes_on(BoundaryTag::top)) {
      cs.constraints[n].kind = NodeConstraint::Kind::directional;
      cs.constraints[n].direction = Eigen::Vector2d::UnitY();
    }
  cs.e1 = top_load(sp, Eigen::Vector2d::UnitX());
  cs.e2 = top_load(sp, Eigen::Vector2d::UnitY());
  return cs;
}

StokesSolution cell_solve(const P2P1Space& sp, const CellSystem& cs, TopCondition top, const Eigen::VectorXd& load) {
  StokesSystem sys;
  sys.space = &sp;
  sys.velocity_operator = cs.op;
  sys.velocity_load = load;
  sys.constraints = build_constraint_map(sp, cs.constraints);
  if (top == TopCondition::dtn) {
    // zero mode of the vertical velocity at the top
    sys.velocity_multipliers.push_back(cs.e2);
    sys.multiplier_values.push_back(0.0);
  }
  return solve_constrained_stokes(sys);
}

double top_residual(const P2P1Space& sp, const CellSystem& cs, const Eigen::VectorXd& u) {
  const double w = sp.mesh->width;
  const Eigen::Vector2d mean(cs.e1.dot(u) / w, cs.e2.dot(u) / w);
  Eigen::VectorXd d = u;
  for (int c = 0; c < sp.n_canonical; ++c) d.segment<2>(2 * c) -= mean;
  return std::sqrt(d.dot(assemble_boundary_mass(sp, BoundaryTag::top) * d) / w);
}

void check_cell_args(double H, double h) {
  if (!(H >= 2.0) || !std::isfinite(H)) throw PreconditionError("cell height H must be >= 2");
  if (!(h > 0.0)) throw PreconditionError("cell mesh size h must be positive");
}

// periodized kernel sum: N periods either side plus the integral of the rest
constexpr int kPeriods = 200;

Eigen::Matrix2d G_antiderivative(double t, double a) {
  const double r2 = t * t + a * a, at = std::atan(t / a);
  Eigen::Matrix2d f;
  f(0, 0) = (2 * a / pi) * (at / (2 * a) - t / (2 * r2));
  f(0, 1) = f(1, 0) = -(a * a) / (pi * r2);
  f(1, 1) = (2 * a * a * a / pi) * (t / (2 * a * a * r2) + at / (2 * a * a * a));
  return f;
}

Eigen::Vector2d grad_g_antiderivative(double t, double a) {
  const double r2 = t * t + a * a;
  return {-2 * a / (pi * r2), (2 / pi) * t / r2};
}

template <class Kernel, class Anti, class Value>
Value periodized(double s, double a, double period, Kernel&& kernel, Anti&& anti, Value zero, Value at_plus,
                 Value at_minus) {
  Value sum = zero;
  for (int n = -kPeriods; n <= kPeriods; ++n) sum += kernel(s + n * period);
  const double hi = s + (kPeriods + 0.5) * period, lo = s - (kPeriods + 0.5) * period;
  sum += (at_plus - anti(hi, a)) / period;
  sum += (anti(lo, a) - at_minus) / period;
  // Euler-Maclaurin correction of the midpoint tails: (L/24) (f'(hi) - f'(lo))
  const double d = period / 8;
  sum += (period / 24) * ((kernel(hi + d) - kernel(hi - d)) - (kernel(lo + d) - kernel(lo - d))) / (2 * d);
  return sum;
}

void check_trace(const std::vector<Eigen::Vector2d>& samples, double period, const Eigen::Vector2d& y) {
  if (samples.size() < 256) throw PreconditionError("kernel_extend: need at least 256 samples per period");
  if (!(period > 0.0)) throw PreconditionError("kernel_extend: period must be positive");
  if (!(y.y() > 0.0)) throw PreconditionError("kernel_extend: y2 must be positive");
}

}  // namespace

Eigen::Matrix2d StokesHalfPlaneKernel::G(const Eigen::Vector2d& y) {
  const double r2 = y.squaredNorm();
  Eigen::Matrix2d m;
  m << y.x() * y.x(), y.x() * y.y(), y.x() * y.y(), y.y() * y.y();
  return (2 * y.y() / (pi * r2 * r2)) * m;
}

double StokesHalfPlaneKernel::g(const Eigen::Vector2d& y) { return -2 * y.y() / (pi * y.squaredNorm()); }

Eigen::Vector2d StokesHalfPlaneKernel::grad_g(const Eigen::Vector2d& y) {
  const double r2 = y.squaredNorm();
  return Eigen::Vector2d(4 * y.x() * y.y(), 2 * (y.y() * y.y() - y.x() * y.x())) / (pi * r2 * r2);
}

std::string to_string(TopCondition top) { return top == TopCondition::dtn ? "dtn" : "natural"; }

TopCondition parse_top_condition(const std::string& text) {
  if (text == "dtn") return TopCondition::dtn;
  if (text == "natural") return TopCondition::natural;
  throw PreconditionError("unknown top condition '" + text + "' (expected dtn or natural)");
}

Eigen::Matrix2d dtn_mode_matrix(int k, double period) {
  if (k == 0) throw ZeroModeRequest("dtn_mode_matrix: the zero mode has its own rule");
  if (!(period > 0.0)) throw PreconditionError("dtn_mode_matrix: period must be positive");
  // decaying modes (A + B y) exp(-|kappa| y): the traction is 2 |kappa| times
  // the trace, with no coupling between the components
  return 2 * (2 * pi * std::abs(k) / period) * Eigen::Matrix2d::Identity();
}

BLResult solve_bl(const RoughnessProfile& p, const BoundaryCondition& rough_bc, double H, double h, TopCondition top) {
  check_cell_args(H, h);
  if (rough_bc.kind == BoundaryCondition::Kind::freeslip)
    throw PreconditionError("solve_bl: rough condition must be dirichlet or navier");
  if (rough_bc.kind == BoundaryCondition::Kind::navier && !(rough_bc.lambda > 0.0))
    throw PreconditionError("solve_bl: navier slip length must be positive");
  auto mesh = std::make_shared<const TriMesh>(build_cell_mesh(p, H, h));
  auto space = std::make_shared<const P2P1Space>(make_p2p1_space(mesh));
  const P2P1Space& sp = *space;

  CellSystem cs = cell_system(sp, top);
  for (int n : sp.canonical_nodes_on(BoundaryTag::rough)) {
    if (rough_bc.kind == BoundaryCondition::Kind::dirichlet) {
      cs.constraints[n].kind = NodeConstraint::Kind::fixed;
      cs.constraints[n].value.setZero();
    } else {
      cs.constraints[n].kind = NodeConstraint::Kind::directional;
      cs.constraints[n].direction = sp.rough_normal(n);
      cs.constraints[n].directional_value = 0.0;
    }
  }
  // total flow u = v + (y2, 0), driven by unit shear at the top
  const StokesSolution s = cell_solve(sp, cs, top, cs.e1);
  const Eigen::VectorXd& u = s.velocity;

  BLResult r;
  r.truncation_H = H;
  r.mesh_h = h;
  r.top = top;
  r.alpha = cs.e1.dot(u) / mesh->width - H;
  r.top_mode_residual = top_residual(sp, cs, u);
  r.energy = u.dot(cs.op * u);
  r.energy_data = cs.e1.dot(u);
  r.field.space = space;
  r.field.velocity = u;
  const auto xy = canonical_xy(sp);
  for (int c = 0; c < sp.n_canonical; ++c) r.field.velocity[sp.ux(c)] -= xy[c].y();
  r.field.pressure = s.pressure;
  r.field.bc = rough_bc;
  return r;
}

BLResult solve_v1(const RoughnessProfile& p, double lambda0, const BLResult& v, double H, double h) {
  check_cell_args(H, h);
  if (v.field.bc.kind != BoundaryCondition::Kind::navier)
    throw PreconditionError("solve_v1: the first corrector must be a navier cell");
  if (!(lambda0 > 0.0) || std::abs(lambda0 - v.field.bc.lambda) > 1e-12 * lambda0)
    throw PreconditionError("solve_v1: lambda0 differs from the first corrector");
  if (H != v.truncation_H || h != v.mesh_h || !v.field.space)
    throw MeshMismatch("solve_v1: H and h must match the first corrector");
  const double width = p.is_flat() ? 1.0 : p.period.value_or(0.0);
  if (std::abs(width - v.field.mesh().width) > 1e-12) throw MeshMismatch("solve_v1: profile period differs");
  const P2P1Space& sp = *v.field.space;
  const auto xy = canonical_xy(sp);

  CellSystem cs = cell_system(sp, v.top);
  for (int n : sp.canonical_nodes_on(BoundaryTag::rough)) {
    const Eigen::Vector2d nu = sp.rough_normal(n);
    cs.constraints[n].kind = NodeConstraint::Kind::directional;
    cs.constraints[n].direction = nu;
    cs.constraints[n].directional_value = xy[n].y() * xy[n].y() * nu.x();
  }
  // tangential traction on the wall: -2 (u_tau / lambda0 + (D((y2^2, 0)) nu)_tau)
  const Eigen::VectorXd load = assemble_boundary_trace_load(
      sp, BoundaryTag::rough, v.field.velocity,
      [&](const Eigen::Vector2d& x, const Eigen::Vector2d& tau, const Eigen::Vector2d& nu, const Eigen::Vector2d& vx) {
        const Eigen::Vector2d u = vx + Eigen::Vector2d(x.y(), 0.0);
        const Eigen::Vector2d d_nu(x.y() * nu.y(), x.y() * nu.x());
        return Eigen::Vector2d(-2.0 * (u.dot(tau) / lambda0 + d_nu.dot(tau)) * tau);
      });
  const StokesSolution s = cell_solve(sp, cs, v.top, load);

  BLResult r;
  r.truncation_H = H;
  r.mesh_h = h;
  r.top = v.top;
  r.alpha = v.alpha;
  r.beta = cs.e1.dot(s.velocity) / sp.mesh->width;
  r.top_mode_residual = top_residual(sp, cs, s.velocity);
  r.energy = s.velocity.dot(cs.op * s.velocity);
  r.energy_data = load.dot(s.velocity);
  r.field.space = v.field.space;
  r.field.velocity = s.velocity;
  r.field.pressure = s.pressure;
  r.field.bc = v.field.bc;
  return r;
}

Eigen::Vector2d kernel_extend(const std::vector<Eigen::Vector2d>& samples, double period, const Eigen::Vector2d& y) {
  check_trace(samples, period, y);
  const int m = static_cast<int>(samples.size());
  const double a = y.y(), dx = period / m;
  Eigen::Matrix2d at_plus, at_minus;
  at_plus << 0.5, 1 / pi, 1 / pi, 0.5;
  at_minus << -0.5, 1 / pi, 1 / pi, -0.5;
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int j = 0; j < m; ++j) {
    const double s = y.x() - j * dx;
    const Eigen::Matrix2d k = periodized(
        s, a, period, [a](double t) { return StokesHalfPlaneKernel::G({t, a}); }, G_antiderivative,
        Eigen::Matrix2d::Zero().eval(), at_plus, at_minus);
    v += dx * k * samples[j];
  }
  return v;
}

double kernel_extend_pressure(const std::vector<Eigen::Vector2d>& samples, double period, const Eigen::Vector2d& y) {
  check_trace(samples, period, y);
  const int m = static_cast<int>(samples.size());
  const double a = y.y(), dx = period / m;
  double q = 0.0;
  for (int j = 0; j < m; ++j) {
    const double s = y.x() - j * dx;
    const Eigen::Vector2d k = periodized(
        s, a, period, [a](double t) { return StokesHalfPlaneKernel::grad_g({t, a}); }, grad_g_antiderivative,
        Eigen::Vector2d::Zero().eval(), Eigen::Vector2d::Zero().eval(), Eigen::Vector2d::Zero().eval());
    q += dx * k.dot(samples[j]);
  }
  return q;
}

std::vector<DecayRow> far_field_decay_report(const BLResult& r, const std::vector<double>& heights) {
  for (double y : heights)
    if (!(y >= 1.0 && y <= r.truncation_H))
      throw PreconditionError("far_field_decay_report: heights must lie in [1, H]");
  const P2P1Space& sp = *r.field.space;
  const PointLocator loc(sp);
  const double w = sp.mesh->width;
  // spectral derivatives from the low modes only, which the mesh resolves
  const int kmax = std::max(1, static_cast<int>(std::lround(8 * w)));
  const int n = std::max(32, 4 * kmax);
  std::vector<DecayRow> rows;
  for (double y2 : heights) {
    std::vector<Eigen::Vector2d> d(n);
    for (int j = 0; j < n; ++j) {
      const auto l = loc.locate(Eigen::Vector2d(j * w / n, y2));
      if (!l) throw MeshMismatch("far_field_decay_report: height outside the cell");
      d[j] = eval_velocity(sp, r.field.velocity, l->tri, l->s, l->t) - Eigen::Vector2d(r.alpha, 0.0);
    }
    DecayRow row;
    row.y2 = y2;
    for (const auto& x : d) row.deviation = std::max(row.deviation, x.norm());
    std::vector<std::array<cplx, 2>> coef(kmax + 1);
    for (int k = 1; k <= kmax; ++k)
      for (int j = 0; j < n; ++j) {
        const cplx e = std::exp(cplx(0.0, -2 * pi * k * j / n)) / static_cast<double>(n);
        coef[k][0] += e * d[j].x();
        coef[k][1] += e * d[j].y();
      }
    for (int order = 1; order <= 3; ++order) {
      double sup = 0.0;
      for (int j = 0; j < n; ++j) {
        Eigen::Vector2d der = Eigen::Vector2d::Zero();
        for (int k = 1; k <= kmax; ++k) {
          const double kappa = 2 * pi * k / w;
          const cplx f = std::pow(cplx(0.0, kappa), order) * std::exp(cplx(0.0, 2 * pi * k * j / n));
          der += 2.0 * Eigen::Vector2d((f * coef[k][0]).real(), (f * coef[k][1]).real());
        }
        sup = std::max(sup, der.norm());
      }
      row.derivatives[order - 1] = std::pow(y2, order) * sup;
    }
    rows.push_back(row);
  }
  return rows;
}

CellEvaluator::CellEvaluator(const BLResult& r, int trace_samples)
    : r_(&r), locator_(*r.field.space), period_(r.field.mesh().width) {
  trace_.resize(trace_samples);
  for (int j = 0; j < trace_samples; ++j) {
    const auto l = locator_.locate(Eigen::Vector2d(j * period_ / trace_samples, r.truncation_H));
    if (!l) throw MeshMismatch("CellEvaluator: top edge not found");
    trace_[j] = eval_velocity(*r.field.space, r.field.velocity, l->tri, l->s, l->t);
  }
}

Eigen::Vector2d CellEvaluator::operator()(Eigen::Vector2d y) const {
  if (y.y() > r_->truncation_H)
    return kernel_extend(trace_, period_, Eigen::Vector2d(y.x(), y.y() - r_->truncation_H));
  const auto l = locator_.locate(y);
  if (!l) return Eigen::Vector2d::Zero();
  return eval_velocity(*r_->field.space, r_->field.velocity, l->tri, l->s, l->t);
}

}  // namespace wallaw
