#include "wallaw/stokes.hpp"

#include "wallaw/errors.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <sstream>

namespace wallaw {

BoundaryCondition BoundaryCondition::parse(const std::string& text) {
  if (text == "dirichlet") return dirichlet();
  if (text == "freeslip") return freeslip();
  if (text.rfind("navier:", 0) == 0) {
    const std::string num = text.substr(7);
    std::size_t used = 0;
    double lambda = 0.0;
    try {
      lambda = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != num.size() || num.empty()) throw PreconditionError("bad slip length in '" + text + "'");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw PreconditionError("navier slip length must be positive and finite");
    return navier(lambda);
  }
  throw PreconditionError("unknown boundary condition '" + text + "' (dirichlet|navier:<l>|freeslip)");
}

std::string to_string(const BoundaryCondition& bc) {
  switch (bc.kind) {
    case BoundaryCondition::Kind::dirichlet: return "dirichlet";
    case BoundaryCondition::Kind::freeslip: return "freeslip";
    case BoundaryCondition::Kind::navier: {
      std::ostringstream os;
      os << "navier:" << bc.lambda;
      return os.str();
    }
  }
  return "unknown";
}

StokesSolution solve_constrained_stokes(const StokesSystem& sys) {
  if (!sys.space) throw PreconditionError("solve_constrained_stokes: missing space");
  const P2P1Space& sp = *sys.space;
  const SparseMatrix& P = sys.constraints.prolongation;
  const Eigen::VectorXd& g = sys.constraints.offset;
  const int nz = sys.constraints.n_free;
  const int np = sp.n_pressure;
  const int nm = static_cast<int>(sys.velocity_multipliers.size());
  const int ng = sys.zero_mean_pressure ? 1 : 0;
  if (static_cast<int>(sys.multiplier_values.size()) != nm)
    throw PreconditionError("solve_constrained_stokes: multiplier values mismatch");

  const SparseMatrix B = assemble_divergence(sp);
  const SparseMatrix Pt = P.transpose();
  const SparseMatrix PtKP = Pt * sys.velocity_operator * P;
  const SparseMatrix BP = B * P;

  // Sparse core [P^T K P, (BP)^T; BP, delta e e^T]: the pin on one pressure
  // unknown makes the core invertible and is undone by an extra border
  // column with corner 1/delta. The dense multiplier rows are borders.
  double delta = 0.0;
  for (int k = 0; k < PtKP.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(PtKP, k); it; ++it)
      if (it.row() == it.col()) delta = std::max(delta, std::abs(it.value()));
  if (!(delta > 0.0)) delta = 1.0;
  const int n = nz + np;
  std::vector<Triplet> trip;
  trip.reserve(PtKP.nonZeros() + 2 * BP.nonZeros() + 1);
  for (int k = 0; k < PtKP.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(PtKP, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < BP.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(BP, k); it; ++it) {
      trip.emplace_back(nz + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), nz + it.row(), it.value());
    }
  trip.emplace_back(nz, nz, delta);
  SparseMatrix core(n, n);
  core.setFromTriplets(trip.begin(), trip.end());
  core.makeCompressed();

  const int nb = nm + ng + 1;
  Eigen::MatrixXd borders = Eigen::MatrixXd::Zero(n, nb);
  Eigen::MatrixXd corner = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd border_rhs = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < nm; ++i) {
    borders.col(i).head(nz) = Pt * sys.velocity_multipliers[i];
    border_rhs[i] = sys.multiplier_values[i] - sys.velocity_multipliers[i].dot(g);
  }
  if (ng) borders.col(nm).segment(nz, np) = pressure_mean_row(sp);
  borders(nz, nb - 1) = 1.0;
  corner(nb - 1, nb - 1) = 1.0 / delta;

  Eigen::VectorXd rhs(n);
  rhs.head(nz) = Pt * (sys.velocity_load - sys.velocity_operator * g);
  rhs.tail(np) = -(B * g);

  const BorderedSolution bs = solve_bordered(core, borders, corner, rhs, border_rhs);
  const Eigen::VectorXd& x = bs.x;
  StokesSolution out;
  out.velocity = P * x.head(nz) + g;
  out.pressure = x.segment(nz, np);
  for (int i = 0; i < nm; ++i) out.multipliers.push_back(bs.y[i]);
  return out;
}

std::vector<NodeConstraint> channel_constraints(const P2P1Space& sp, const BoundaryCondition& bc) {
  std::vector<NodeConstraint> c(sp.n_canonical);
  for (int n : sp.canonical_nodes_on(BoundaryTag::rough)) {
    if (bc.kind == BoundaryCondition::Kind::dirichlet) {
      c[n].kind = NodeConstraint::Kind::fixed;
    } else {
      c[n].kind = NodeConstraint::Kind::directional;
      c[n].direction = sp.rough_normal(n);
      c[n].directional_value = 0.0;
    }
  }
  for (int n : sp.canonical_nodes_on(BoundaryTag::top)) {
    c[n].kind = NodeConstraint::Kind::fixed;
    c[n].value.setZero();
  }
  return c;
}

namespace {

void check_bc(const BoundaryCondition& bc) {
  if (bc.kind == BoundaryCondition::Kind::navier && !(bc.lambda > 0.0 && std::isfinite(bc.lambda)))
    throw PreconditionError("navier slip length must be positive");
}

SparseMatrix channel_operator(const P2P1Space& sp, const BoundaryCondition& bc) {
  SparseMatrix k = assemble_viscous(sp, ViscousForm::symmetric_gradient, 2.0);
  if (bc.kind == BoundaryCondition::Kind::navier)
    k += (2.0 / bc.lambda) * assemble_tangential_boundary_mass(sp, BoundaryTag::rough);
  return k;
}

FlowField channel_solve(std::shared_ptr<const P2P1Space> space, double flux, const BoundaryCondition& bc,
                        const SparseMatrix& op, const ConstraintMap& cmap, const Eigen::VectorXd& axial) {
  StokesSystem sys;
  sys.space = space.get();
  sys.velocity_operator = op;
  sys.velocity_load = Eigen::VectorXd::Zero(space->velocity_dofs());
  sys.constraints = cmap;
  sys.velocity_multipliers = {axial};
  sys.multiplier_values = {space->mesh->width * flux};
  const StokesSolution s = solve_constrained_stokes(sys);
  FlowField f;
  f.space = std::move(space);
  f.velocity = s.velocity;
  f.pressure = s.pressure;
  f.pressure_gradient_multiplier = -s.multipliers[0];
  f.flux = flux;
  f.bc = bc;
  return f;
}

Eigen::VectorXd axial_row(const P2P1Space& sp) {
  return assemble_volume_load(sp, [](const Eigen::Vector2d&) { return Eigen::Vector2d(1.0, 0.0); });
}

}  // namespace

FlowField solve_stokes(std::shared_ptr<const P2P1Space> space, double flux, BoundaryCondition bc) {
  check_bc(bc);
  if (!std::isfinite(flux)) throw PreconditionError("flux must be finite");
  const SparseMatrix op = channel_operator(*space, bc);
  const ConstraintMap cmap = build_constraint_map(*space, channel_constraints(*space, bc));
  return channel_solve(space, flux, bc, op, cmap, axial_row(*space));
}

FlowField solve_stokes(std::shared_ptr<const TriMesh> mesh, double flux, BoundaryCondition bc) {
  return solve_stokes(std::make_shared<const P2P1Space>(make_p2p1_space(std::move(mesh))), flux, bc);
}

FlowField solve_navier_stokes(std::shared_ptr<const P2P1Space> space, double flux, BoundaryCondition bc,
                              const PicardOptions& opt) {
  check_bc(bc);
  if (!(opt.tol >= 1e-12)) throw PreconditionError("Picard tolerance must be >= 1e-12");
  if (std::abs(flux) > opt.phi0)
    std::cerr << "warning: flux " << flux << " exceeds the small-data threshold " << opt.phi0 << '\n';
  const P2P1Space& sp = *space;
  const SparseMatrix op = channel_operator(sp, bc);
  const ConstraintMap cmap = build_constraint_map(sp, channel_constraints(sp, bc));
  const Eigen::VectorXd axial = axial_row(sp);
  SparseMatrix h1 = assemble_viscous(sp, ViscousForm::full_gradient, 1.0);
  h1 += assemble_velocity_mass(sp);
  auto h1_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(std::max(0.0, v.dot(h1 * v))); };

  FlowField cur = channel_solve(space, flux, bc, op, cmap, axial);
  double prev_inc = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const SparseMatrix k = op + assemble_convection(sp, cur.velocity);
    FlowField next;
    try {
      next = channel_solve(space, flux, bc, k, cmap, axial);
    } catch (const SingularSystem& e) {
      throw PicardDiverged(std::string("Picard step failed: ") + e.what());
    }
    const double inc = h1_norm(next.velocity - cur.velocity) / std::max(h1_norm(next.velocity), 1e-300);
    next.picard_iterations = it;
    cur = std::move(next);
    if (!std::isfinite(inc)) throw PicardDiverged("Picard increment is not finite");
    if (inc <= opt.tol) return cur;
    growth = inc > prev_inc ? growth + 1 : 0;
    if (growth >= opt.growth_limit) {
      std::ostringstream os;
      os << "Picard increment grew " << growth << " times in a row (flux " << flux << ")";
      throw PicardDiverged(os.str());
    }
    prev_inc = inc;
  }
  std::ostringstream os;
  os << "Picard iteration did not converge in " << opt.max_iterations << " steps (flux " << flux << ")";
  throw PicardDiverged(os.str());
}

FlowField solve_navier_stokes(std::shared_ptr<const TriMesh> mesh, double flux, BoundaryCondition bc,
                              double tol) {
  PicardOptions opt;
  opt.tol = tol;
  return solve_navier_stokes(std::make_shared<const P2P1Space>(make_p2p1_space(std::move(mesh))), flux,
                             bc, opt);
}

namespace {

using Halfplanes = std::vector<std::pair<Eigen::Vector2d, double>>;

/// Integrates |e|^2 and |grad e|^2 above and below x2 = 0, optionally
/// restricted to a window a <= x1 < b.
struct SquaredPieces {
  double upper_l2 = 0.0;
  double upper_grad = 0.0;
  double lower_grad = 0.0;
};

template <typename DiffFn>
SquaredPieces squared_pieces(const P2P1Space& sp, DiffFn&& diff, std::optional<std::pair<double, double>> window) {
  Halfplanes up{{Eigen::Vector2d(0, 1), 0.0}};
  Halfplanes down{{Eigen::Vector2d(0, -1), 0.0}};
  if (window) {
    for (Halfplanes* h : {&up, &down}) {
      h->push_back({Eigen::Vector2d(1, 0), window->first});
      h->push_back({Eigen::Vector2d(-1, 0), -window->second});
    }
  }
  SquaredPieces s;
  s.upper_l2 = integrate_clipped(sp, up, [&](int t, double a, double b, const Eigen::Vector2d& x) {
    return diff(t, a, b, x, true).first;
  });
  s.upper_grad = integrate_clipped(sp, up, [&](int t, double a, double b, const Eigen::Vector2d& x) {
    return diff(t, a, b, x, true).second;
  });
  s.lower_grad = integrate_clipped(sp, down, [&](int t, double a, double b, const Eigen::Vector2d& x) {
    return diff(t, a, b, x, false).second;
  });
  return s;
}

template <typename DiffFn>
ErrorNorms norms_from(const P2P1Space& sp, DiffFn&& diff) {
  ErrorNorms n;
  const SquaredPieces all = squared_pieces(sp, diff, std::nullopt);
  n.l2 = std::sqrt(all.upper_l2);
  n.h1 = std::sqrt(all.upper_l2 + all.upper_grad + all.lower_grad);
  const double w = sp.mesh->width;
  if (w <= 1.0 + 1e-12) {
    n.slice_sup_l2 = std::sqrt(all.upper_l2 / w);
  } else {
    double best = 0.0;
    for (double a = 0.0; a < w - 1e-12; a += 1.0) {
      const double b = std::min(a + 1.0, w);
      const SquaredPieces s = squared_pieces(sp, diff, std::make_pair(a, b));
      best = std::max(best, std::sqrt(s.upper_l2 / (b - a)));
    }
    n.slice_sup_l2 = best;
  }
  return n;
}

}  // namespace

ErrorNorms error_norms(const FlowField& f, const AnalyticField& ref) {
  const P2P1Space& sp = *f.space;
  auto diff = [&](int t, double s, double r, const Eigen::Vector2d& x, bool upper) {
    Eigen::Vector2d e = eval_velocity(sp, f.velocity, t, s, r);
    Eigen::Matrix2d ge = eval_velocity_gradient(sp, f.velocity, t, s, r);
    if (upper) {
      e -= ref.value(x);
      if (ref.gradient) ge -= ref.gradient(x);
    }
    return std::make_pair(e.squaredNorm(), ge.squaredNorm());
  };
  return norms_from(sp, diff);
}

ErrorNorms error_norms(const FlowField& f, const FlowField& ref) {
  const P2P1Space& sp = *f.space;
  if (f.space != ref.space) {
    const auto& a = f.mesh();
    const auto& b = ref.mesh();
    bool same = a.vertices.size() == b.vertices.size() && a.triangles == b.triangles;
    for (std::size_t i = 0; same && i < a.vertices.size(); ++i) same = a.vertices[i] == b.vertices[i];
    if (!same || f.space->n_canonical != ref.space->n_canonical)
      throw MeshMismatch("error_norms: fields live on different meshes");
  }
  const Eigen::VectorXd d = f.velocity - ref.velocity;
  auto diff = [&](int t, double s, double r, const Eigen::Vector2d&, bool) {
    return std::make_pair(eval_velocity(sp, d, t, s, r).squaredNorm(),
                          eval_velocity_gradient(sp, d, t, s, r).squaredNorm());
  };
  return norms_from(sp, diff);
}

double cross_section_flux(const FlowField& f, double x1) {
  const double w = f.mesh().width;
  x1 -= w * std::floor(x1 / w);
  return cross_section_flux(*f.space, f.velocity, x1);
}

double divergence_residual(const FlowField& f) {
  const SparseMatrix b = assemble_divergence(*f.space);
  return (b * f.velocity).cwiseAbs().maxCoeff();
}

double dissipation(const FlowField& f) {
  SparseMatrix k = assemble_viscous(*f.space, ViscousForm::symmetric_gradient, 2.0);
  if (f.bc.kind == BoundaryCondition::Kind::navier)
    k += (2.0 / f.bc.lambda) * assemble_tangential_boundary_mass(*f.space, BoundaryTag::rough);
  return f.velocity.dot(k * f.velocity);
}

double max_normal_velocity(const FlowField& f) {
  double m = 0.0;
  for (int n : f.space->canonical_nodes_on(BoundaryTag::rough))
    m = std::max(m, std::abs(f.node_velocity(n).dot(f.space->rough_normal(n))));
  return m;
}

void write_field_vtk(std::ostream& os, const FlowField& f) {
  const P2P1Space& sp = *f.space;
  write_vtk(os, f.mesh(), "wallaw flow field");
  os << "POINT_DATA " << sp.n_vertices << "\nVECTORS velocity double\n" << std::setprecision(17);
  for (int v = 0; v < sp.n_vertices; ++v) {
    const Eigen::Vector2d u = f.node_velocity(sp.canonical[v]);
    os << u.x() << ' ' << u.y() << " 0\n";
  }
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < sp.n_vertices; ++v)
    os << f.pressure[sp.pressure_index[v]] - f.pressure_gradient_multiplier * sp.node_xy[v].x() << '\n';
}

}  // namespace wallaw
