#include "wallaw/experiments.hpp"

#include "wallaw/errors.hpp"
#include "wallaw/fem.hpp"
#include "wallaw/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace wallaw {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

int worker_count(int requested, int tasks) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("WALLAW_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) throw ConfigError("WALLAW_THREADS must be a positive integer, got '" + std::string(env) + "'");
    n = std::min<long>(n, cap);
  }
  return std::max(1, std::min(n, tasks));
}

void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  if (n <= 0) return;
  const int workers = worker_count(threads, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        // keep the lowest index so that the reported error does not depend on scheduling
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("fit_rate: need two or more (x, y) pairs");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw PreconditionError("fit_rate: coordinates must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 1e-14 * n * sxx)) throw PreconditionError("fit_rate: x values must not all coincide");
  RateFit r;
  r.slope = (n * sxy - sx * sy) / den;
  r.intercept = (sy - r.slope * sx) / n;
  return r;
}

void fit_report(SweepReport& report, const RateThresholds& thr, bool wall_law_flags) {
  auto& rows = report.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.eps > b.eps; });
  report.fitted_rates.clear();
  report.pass_flags.clear();

  std::vector<double> eps;
  for (const auto& r : rows) eps.push_back(r.eps);
  auto rate = [&](const std::string& name, double SweepRow::*col, double threshold) {
    std::vector<double> err;
    for (const auto& r : rows) err.push_back(r.*col);
    const bool usable = rows.size() >= 3 && std::all_of(err.begin(), err.end(), [](double e) { return e > 0.0; });
    if (!usable) {
      report.pass_flags[name] = false;
      return;
    }
    const RateFit f = fit_rate(eps, err);
    report.fitted_rates[name] = f;
    report.pass_flags[name] = f.slope >= threshold;
  };
  rate("l2_u0", &SweepRow::l2_u0, thr.l2_u0);
  rate("h1_u0", &SweepRow::h1_u0, thr.h1_u0);
  if (!wall_law_flags) return;
  rate("l2_uN", &SweepRow::l2_uN, thr.l2_uN);

  bool decreasing = rows.size() >= 2;
  for (std::size_t i = 1; i < rows.size(); ++i)
    decreasing = decreasing && rows[i].l2_uN / rows[i].l2_u0 < rows[i - 1].l2_uN / rows[i - 1].l2_u0;
  report.pass_flags["ratio_decreasing"] = decreasing;
}

namespace {

BoundaryCondition cell_condition(const BoundaryCondition& bc) {
  switch (bc.kind) {
    case BoundaryCondition::Kind::dirichlet:
      return bc;
    case BoundaryCondition::Kind::navier:
      return bc;
    case BoundaryCondition::Kind::freeslip:
      // the leading-order cell for any slip wall is the impermeable, traction-free one
      return BoundaryCondition::navier(1.0);
  }
  return bc;
}

}  // namespace

int inverse_integer(double eps, const std::string& where) {
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError(where + ": eps must lie in (0, 1]");
  const double n = std::round(1.0 / eps);
  if (std::abs(n * eps - 1.0) > 1e-12)
    throw PreconditionError(where + ": eps = " + format_number(eps) + " is not of the form 1/N");
  return static_cast<int>(n);
}

SweepReport convergence_sweep(const RoughnessProfile& p, const BoundaryCondition& bc, double flux,
                              const std::vector<double>& eps_list, const std::function<double(double)>& h_rule,
                              const SweepOptions& opts) {
  if (eps_list.size() < 3) throw PreconditionError("convergence_sweep: need at least three eps values");
  if (!std::isfinite(flux)) throw PreconditionError("convergence_sweep: flux must be finite");
  std::vector<double> eps = eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  if (std::adjacent_find(eps.begin(), eps.end()) != eps.end())
    throw PreconditionError("convergence_sweep: eps values must be distinct");
  std::vector<double> hs;
  for (double e : eps) {
    inverse_integer(e, "convergence_sweep");
    const double h = h_rule(e);
    if (!(h > 0.0 && h <= e / 8.0 * (1 + 1e-12)))
      throw PreconditionError("convergence_sweep: h_rule(" + format_number(e) + ") = " + format_number(h) +
                              " must lie in (0, eps/8]");
    hs.push_back(h);
  }

  const BLResult cell = solve_bl(p, cell_condition(bc), opts.cell_H, opts.cell_h, opts.cell_top);
  const double alpha = cell.alpha;

  SweepReport report;
  report.rows.resize(eps.size());
  std::vector<std::string> failures(eps.size());
  parallel_for(static_cast<int>(eps.size()), opts.threads, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      BoundaryCondition channel = bc;
      if (bc.kind == BoundaryCondition::Kind::navier && opts.slip == SlipScaling::proportional)
        channel = BoundaryCondition::navier(bc.lambda * eps[i]);
      auto mesh = std::make_shared<const TriMesh>(build_channel_mesh(p, eps[i], hs[i]));
      const FlowField f =
          solve_navier_stokes(std::make_shared<const P2P1Space>(make_p2p1_space(mesh)), flux, channel, opts.picard);
      const ErrorNorms e0 = error_norms(f, poiseuille(flux).analytic());
      const ErrorNorms eN = error_norms(f, navier_wall_law(flux, alpha, eps[i]).analytic());
      SweepRow& row = report.rows[i];
      row.eps = eps[i];
      row.flux = flux;
      row.bc = to_string(bc);
      row.l2_u0 = e0.l2;
      row.h1_u0 = e0.h1;
      row.l2_uN = eN.l2;
      row.slice_sup = e0.slice_sup_l2;
      row.alpha = alpha;
      if (opts.record_runtime)
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } catch (const Error& e) {
      failures[i] = std::string(e.kind()) + ": " + e.what();
    }
  });
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!failures[i].empty())
      throw IncompleteSweep("convergence_sweep: eps = " + format_number(eps[i]) + " failed with " + failures[i]);

  fit_report(report, opts.thresholds, !(bc.kind == BoundaryCondition::Kind::navier && opts.slip == SlipScaling::proportional));
  return report;
}

MonteCarloReport monte_carlo_alpha(const RandomProfileSpec& spec, const std::vector<std::uint64_t>& seeds,
                                   const BoundaryCondition& bc, const SweepOptions& opts) {
  return monte_carlo_alpha(
      [&](std::uint64_t seed) {
        return make_random_stationary(seed, spec.n_modes, spec.decay_s, spec.range, spec.sample_period);
      },
      seeds, bc, opts);
}

MonteCarloReport monte_carlo_alpha(const std::function<RoughnessProfile(std::uint64_t)>& realize,
                                   const std::vector<std::uint64_t>& seeds, const BoundaryCondition& bc,
                                   const SweepOptions& opts) {
  if (seeds.size() < 2) throw PreconditionError("monte_carlo_alpha: need at least two seeds");
  MonteCarloReport report;
  report.rows.resize(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), opts.threads, [&](int i) {
    const RoughnessProfile p = realize(seeds[i]);
    const BLResult r = solve_bl(p, cell_condition(bc), opts.cell_H, opts.cell_h, opts.cell_top);
    report.rows[i] = {seeds[i], r.alpha, p.range.first, p.range.second};
  });
  // deviations from the first value keep identical samples at exactly zero spread
  const double a0 = report.rows[0].alpha;
  double s = 0.0, ss = 0.0;
  for (const auto& r : report.rows) {
    s += r.alpha - a0;
    ss += (r.alpha - a0) * (r.alpha - a0);
  }
  const double n = static_cast<double>(seeds.size());
  report.mean = a0 + s / n;
  report.std = std::sqrt(std::max(0.0, (ss - s * s / n) / (n - 1)));
  return report;
}

double sliding_window_norm(const FlowField& f, const ClosedFormFlow& ref, const std::vector<double>& R_grid) {
  if (R_grid.empty()) throw PreconditionError("sliding_window_norm: empty R grid");
  const P2P1Space& sp = *f.space;
  const double W = sp.mesh->width;
  auto err2 = [&](int tri, double s, double t, const Eigen::Vector2d& x) {
    return (eval_velocity(sp, f.velocity, tri, s, t) - ref(x.x(), x.y())).squaredNorm();
  };
  const std::pair<Eigen::Vector2d, double> above{Eigen::Vector2d(0, 1), 0.0};
  auto strip = [&](double a, double b) {
    if (b <= a) return 0.0;
    return integrate_clipped(sp, {above, {Eigen::Vector2d(1, 0), a}, {Eigen::Vector2d(-1, 0), -b}}, err2);
  };
  const double period = integrate_clipped(sp, {above}, err2);

  double best = 0.0;
  for (double R : R_grid) {
    if (!(R >= 1.0 && std::isfinite(R))) throw PreconditionError("sliding_window_norm: R values must be >= 1");
    const double len = 2.0 * R;
    const double full = std::floor(len / W);
    const double rest = len - full * W;
    const double start = std::fmod(std::fmod(-R, W) + W, W);
    double total = full * period;
    if (rest > 0.0) {
      total += strip(start, std::min(W, start + rest));
      if (start + rest > W) total += strip(0.0, start + rest - W);
    }
    best = std::max(best, total / len);
  }
  return std::sqrt(best);
}

void write_sweep_csv(std::ostream& os, const SweepReport& r) {
  os << "eps,flux,bc,l2_u0,h1_u0,l2_uN,slice_sup,alpha,runtime_s\n";
  for (const auto& row : r.rows)
    os << format_number(row.eps) << ',' << format_number(row.flux) << ',' << row.bc << ',' << format_number(row.l2_u0)
       << ',' << format_number(row.h1_u0) << ',' << format_number(row.l2_uN) << ',' << format_number(row.slice_sup)
       << ',' << format_number(row.alpha) << ',' << format_number(row.runtime_s) << '\n';
}

void write_rates_csv(std::ostream& os, const SweepReport& r) {
  os << "norm,slope,intercept,pass\n";
  for (const auto& [name, pass] : r.pass_flags) {
    const auto it = r.fitted_rates.find(name);
    os << name << ',';
    if (it != r.fitted_rates.end())
      os << format_number(it->second.slope) << ',' << format_number(it->second.intercept);
    else
      os << ',';
    os << ',' << (pass ? "true" : "false") << '\n';
  }
}

void write_norm_vs_eps(std::ostream& os, const SweepReport& r) {
  const std::pair<const char*, double SweepRow::*> cols[] = {
      {"l2_u0", &SweepRow::l2_u0}, {"h1_u0", &SweepRow::h1_u0}, {"l2_uN", &SweepRow::l2_uN}};
  bool first = true;
  for (const auto& [name, col] : cols) {
    if (!first) os << "\n\n";
    first = false;
    os << "# " << name << ": log10(eps) log10(error)\n";
    for (const auto& row : r.rows)
      if (row.*col > 0.0) os << format_number(std::log10(row.eps)) << ' ' << format_number(std::log10(row.*col)) << '\n';
  }
}

void write_monte_carlo_csv(std::ostream& os, const MonteCarloReport& r) {
  os << "seed,alpha,omega_min,omega_max\n";
  for (const auto& row : r.rows)
    os << row.seed << ',' << format_number(row.alpha) << ',' << format_number(row.omega_min) << ','
       << format_number(row.omega_max) << '\n';
}

}  // namespace wallaw
