#include "wallaw/inequalities.hpp"

#include "wallaw/errors.hpp"
#include "wallaw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wallaw {

namespace {

std::shared_ptr<const P2P1Space> cell_space(const RoughnessProfile& p, double depth, const Lateral& lateral,
                                            double h) {
  if (!(h > 0.0)) throw PreconditionError("inequalities: h must be positive");
  if (!(depth > p.range.second)) throw PreconditionError("inequalities: depth must exceed sup omega");
  StripSpec spec;
  if (lateral.kind == Lateral::Kind::periodic) {
    if (!p.is_flat() && !p.period) throw PreconditionError("inequalities: periodic lateral needs a periodic profile");
    spec.width = p.is_flat() ? 1.0 : *p.period;
  } else {
    if (!(lateral.width > 0.0)) throw PreconditionError("inequalities: slice width must be positive");
    spec.width = lateral.width;
  }
  spec.bottom = [p](double y) { return p.eval(y); };
  spec.bottom_slope = [p](double y) { return p.deriv(y); };
  spec.top = depth;
  spec.wall_spacing = h;
  spec.layer_scale = 1.0;
  // shallow cells stay nearly uniform
  spec.max_spacing = std::min({8.0 * h, std::max(h, 0.5), std::max(h, (depth - p.range.first) / 4.0)});
  auto mesh = std::make_shared<const TriMesh>(build_strip_mesh(spec));
  return std::make_shared<const P2P1Space>(make_p2p1_space(mesh, lateral.kind == Lateral::Kind::periodic));
}

InequalityReport finish(InequalityReport::Kind kind, const RoughnessProfile& p, double depth, const Lateral& lateral,
                        const InequalityOptions& opt, std::shared_ptr<const P2P1Space> sp, const SparseMatrix& a,
                        const SparseMatrix& b, const std::optional<SparseMatrix>& basis) {
  const EigenPair e = smallest_eigenpair(a, b, basis, 1e-9);
  InequalityReport r;
  r.kind = kind;
  r.lambda_min = std::max(0.0, e.value);
  r.degenerate = r.lambda_min < opt.degenerate_tol;
  // below the threshold the smallest eigenvalue is a discrete zero mode, so no finite constant exists
  r.constant = r.degenerate ? std::numeric_limits<double>::infinity() : 1.0 / std::sqrt(r.lambda_min);
  r.profile_id = p.id;
  r.depth = depth;
  r.lateral = lateral;
  r.space = std::move(sp);
  r.eigenvector = e.vector;
  return r;
}

InequalityReport tangent_problem(InequalityReport::Kind kind, const RoughnessProfile& p, double depth,
                                 const Lateral& lateral, const InequalityOptions& opt) {
  auto sp = cell_space(p, depth, lateral, opt.h);
  std::vector<NodeConstraint> c(sp->n_canonical);
  for (int n : sp->canonical_nodes_on(BoundaryTag::rough)) {
    if (opt.noslip_rough) {
      c[n].kind = NodeConstraint::Kind::fixed;
    } else {
      c[n].kind = NodeConstraint::Kind::directional;
      c[n].direction = sp->rough_normal(n);
    }
  }
  const ConstraintMap cm = build_constraint_map(*sp, c);
  const SparseMatrix a = kind == InequalityReport::Kind::poincare_H1
                             ? assemble_viscous(*sp, ViscousForm::full_gradient, 1.0)
                             : assemble_viscous(*sp, ViscousForm::symmetric_gradient, 1.0);
  return finish(kind, p, depth, lateral, opt, sp, a, assemble_velocity_mass(*sp), cm.prolongation);
}

}  // namespace

Lateral Lateral::parse(const std::string& text) {
  if (text == "periodic") return periodic();
  if (text.rfind("slice:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double a = std::stod(text.substr(6), &used);
      if (used == text.size() - 6 && a > 0.0) return slice(a);
    } catch (const std::exception&) {
    }
  }
  throw PreconditionError("bad lateral condition '" + text + "' (expected periodic or slice:<A>)");
}

std::string to_string(const Lateral& l) {
  if (l.kind == Lateral::Kind::periodic) return "periodic";
  std::ostringstream os;
  os << "slice:" << l.width;
  return os.str();
}

std::string to_string(InequalityReport::Kind kind) {
  switch (kind) {
    case InequalityReport::Kind::poincare_H1: return "poincare";
    case InequalityReport::Kind::korn_H2: return "korn";
    case InequalityReport::Kind::korn_classical: return "classical";
  }
  return "?";
}

InequalityReport poincare_constant(const RoughnessProfile& p, double depth_Y, const Lateral& lateral,
                                   const InequalityOptions& options) {
  return tangent_problem(InequalityReport::Kind::poincare_H1, p, depth_Y, lateral, options);
}

InequalityReport korn_constant(const RoughnessProfile& p, double depth_Y, const Lateral& lateral,
                               const InequalityOptions& options) {
  return tangent_problem(InequalityReport::Kind::korn_H2, p, depth_Y, lateral, options);
}

InequalityReport korn_classical_check(const RoughnessProfile& p, double depth_Y, const Lateral& lateral,
                                      const InequalityOptions& options) {
  auto sp = cell_space(p, depth_Y, lateral, options.h);
  const SparseMatrix m = assemble_velocity_mass(*sp);
  const SparseMatrix a = m + assemble_viscous(*sp, ViscousForm::symmetric_gradient, 1.0);
  const SparseMatrix b = m + assemble_viscous(*sp, ViscousForm::full_gradient, 1.0);
  return finish(InequalityReport::Kind::korn_classical, p, depth_Y, lateral, options, sp, a, b, std::nullopt);
}

}  // namespace wallaw
