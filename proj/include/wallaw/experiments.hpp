#pragma once

#include "wallaw/boundary_layer.hpp"
#include "wallaw/profiles.hpp"
#include "wallaw/stokes.hpp"
#include "wallaw/wall_laws.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace wallaw {

struct SweepRow {
  double eps = 0.0;
  double flux = 0.0;
  std::string bc;
  double l2_u0 = 0.0;
  double h1_u0 = 0.0;
  double l2_uN = 0.0;
  double slice_sup = 0.0;
  double alpha = 0.0;
  double runtime_s = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Minimum log-log slopes accepted for each error column.
struct RateThresholds {
  double l2_u0 = 0.9;
  double h1_u0 = 0.45;
  double l2_uN = 1.2;
};

/// How the channel slip length depends on eps for a navier wall:
/// `fixed` keeps lambda, `proportional` uses lambda * eps.
enum class SlipScaling { fixed, proportional };

struct SweepOptions {
  double cell_H = 4.0;
  double cell_h = 0.02;
  TopCondition cell_top = TopCondition::dtn;
  PicardOptions picard;
  bool record_runtime = true;
  SlipScaling slip = SlipScaling::fixed;
  RateThresholds thresholds;
  /// Worker cap; 0 means hardware concurrency, further capped by WALLAW_THREADS.
  int threads = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  ///< eps descending
  std::map<std::string, RateFit> fitted_rates;
  std::map<std::string, bool> pass_flags;
};

/// Least-squares fit of log y = slope log x + intercept. Needs two or more
/// points with positive coordinates.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

/// Fills fitted_rates and pass_flags from the rows (sorted first). Rates are
/// fitted for l2_u0, h1_u0 and l2_uN once there are three rows; the flag
/// "ratio_decreasing" asks l2_uN / l2_u0 to drop strictly as eps decreases.
void fit_report(SweepReport& report, const RateThresholds& thresholds, bool wall_law_flags = true);

/// Navier-Stokes channel solves on the profile for each eps = 1/N, compared
/// with Poiseuille and with the Navier wall law whose slip length comes from
/// the cell problem. Freeslip walls use the navier cell.
SweepReport convergence_sweep(const RoughnessProfile& p, const BoundaryCondition& bc, double flux,
                              const std::vector<double>& eps_list,
                              const std::function<double(double)>& h_rule, const SweepOptions& opts = {});

struct RandomProfileSpec {
  int n_modes = 8;
  double decay_s = 2.5;
  std::pair<double, double> range{-0.7, -0.3};
  double sample_period = 2.0;
};

struct MonteCarloRow {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double omega_min = 0.0;
  double omega_max = 0.0;
};

struct MonteCarloReport {
  std::vector<MonteCarloRow> rows;  ///< input seed order
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
};

/// Slip lengths of independent realizations, each solved on a cell of one
/// sample period.
MonteCarloReport monte_carlo_alpha(const RandomProfileSpec& spec, const std::vector<std::uint64_t>& seeds,
                                   const BoundaryCondition& bc, const SweepOptions& opts = {});
/// Same with an arbitrary seed -> profile map.
MonteCarloReport monte_carlo_alpha(const std::function<RoughnessProfile(std::uint64_t)>& realize,
                                   const std::vector<std::uint64_t>& seeds, const BoundaryCondition& bc,
                                   const SweepOptions& opts = {});

/// max over R of sqrt((1/2R) int_{|x1|<R, x2>0} |f - ref|^2), with f
/// extended periodically in x1.
double sliding_window_norm(const FlowField& f, const ClosedFormFlow& ref, const std::vector<double>& R_grid);

/// N for eps = 1/N; PreconditionError naming `where` otherwise.
int inverse_integer(double eps, const std::string& where);

/// Number of workers for `tasks` independent jobs.
int worker_count(int requested, int tasks);
/// Runs job(i) for i in [0, n) on a pool; the first exception is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& job);

void write_sweep_csv(std::ostream& os, const SweepReport& r);
void write_rates_csv(std::ostream& os, const SweepReport& r);
/// Blocks of "log10(eps) log10(error)" per norm, separated by blank lines.
void write_norm_vs_eps(std::ostream& os, const SweepReport& r);
void write_monte_carlo_csv(std::ostream& os, const MonteCarloReport& r);

/// Shortest round-trip decimal form used by every CSV writer.
std::string format_number(double x);

}  // namespace wallaw
