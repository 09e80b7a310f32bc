#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wallaw {

enum class ProfileFamily { periodic, quasiperiodic, random_stationary, flat, custom };

std::string to_string(ProfileFamily family);

/// Lipschitz roughness profile y1 -> omega(y1), in channel-height units.
/// Immutable after construction; all members are safe to share across threads.
struct RoughnessProfile {
  ProfileFamily family = ProfileFamily::flat;
  std::string id;
  std::function<double(double)> eval_fn;
  std::function<double(double)> deriv_fn;
  std::optional<double> period;
  /// Quasi-periodic frequency vector lambda (empty otherwise).
  Eigen::VectorXd frequencies;
  /// Fourier data. Periodic and random: c_k for k = 1..n with
  /// omega = offset + sum Re(c_k exp(2 pi i k y / period)).
  /// Quasi-periodic: a_k paired with `fourier_indices`.
  std::vector<std::complex<double>> fourier_coeffs;
  std::vector<Eigen::VectorXi> fourier_indices;
  double offset = 0.0;
  std::optional<std::uint64_t> seed;
  double lipschitz_K = 0.0;
  std::pair<double, double> range{0.0, 0.0};

  double eval(double y1) const { return eval_fn(y1); }
  double deriv(double y1) const { return deriv_fn(y1); }
  bool is_flat() const { return family == ProfileFamily::flat; }
  /// Length over which statistics are taken: the period when there is one.
  double natural_window() const { return period.value_or(100.0); }
};

/// omega(y1) = offset + sum_{k>=1} Re(coeffs[k-1] exp(2 pi i k y1 / period)).
/// Throws RangeViolation when the 1e4-point range scan escapes (-1, 0).
RoughnessProfile make_periodic(const std::vector<std::complex<double>>& coeffs, double offset,
                               double period = 1.0);

/// offset + amplitude cos(2 pi y1 / period).
RoughnessProfile make_cosine(double offset = -0.5, double amplitude = 0.1, double period = 1.0);

/// Constant profile. The level may be 0 (flat wall at the interface).
RoughnessProfile make_flat(double level);

/// omega(y1) = offset + Re sum_k a_k exp(2 pi i k . lambda y1). Throws
/// DivergentSeries when sum |k| |a_k| exceeds `series_cap`.
RoughnessProfile make_quasiperiodic(const std::map<std::vector<int>, std::complex<double>>& coeffs,
                                    const Eigen::VectorXd& lambda, double offset,
                                    double series_cap = 1e3);

/// Phase-randomized trigonometric polynomial of period `sample_period`,
/// sum_{k=1}^{n_modes} k^{-s} cos(2 pi k y1 / L + theta_k), affinely mapped
/// onto `target_range`. Deterministic given the seed.
RoughnessProfile make_random_stationary(std::uint64_t seed, int n_modes, double decay_s,
                                        std::pair<double, double> target_range,
                                        double sample_period = 64.0);

/// Profile from arbitrary evaluators (used for special geometries such as
/// circular arcs). Range and Lipschitz constant are measured on [0, window].
RoughnessProfile make_custom(std::function<double(double)> eval,
                             std::function<double(double)> deriv, std::optional<double> period,
                             std::string id, double window = 1.0);

/// Uniform grid of `n` points covering one natural window of the profile.
Eigen::VectorXd default_y1_grid(const RoughnessProfile& p, int n = 256);

/// min over the grid of int_0^A |omega'(y1 + t)|^2 dt (adaptive quadrature,
/// absolute tolerance 1e-8). Positive values certify the sampled
/// non-degeneracy condition.
double nondegeneracy_functional(const RoughnessProfile& p, double A, const Eigen::VectorXd& y1_grid);

struct SlopeHistogram {
  Eigen::VectorXd bin_edges;
  Eigen::VectorXd masses;
  double dirac_at_zero_mass = 0.0;

  Eigen::VectorXd centers() const;
  double second_moment() const;
};

/// Histogram of omega'(y1 / eps) on a uniform grid of at least 1e4 points
/// over [0, window). Bins are symmetric about zero and span the Lipschitz range.
SlopeHistogram empirical_slope_distribution(const RoughnessProfile& p, double eps, double window,
                                            int n_bins);

/// Distance proxy of the slice y1 in [0, A] -> (y1, omega(y1 + kA)) from the
/// set of circle arcs and straight segments: min of the best-fit-circle RMS
/// residual and the RMS deviation of the unit normal from its mean.
double rotational_invariance_distance(const RoughnessProfile& p, double A, int k,
                                      int n_samples = 512);

/// Individual branches of `rotational_invariance_distance`.
double circle_fit_rms(const std::vector<Eigen::Vector2d>& points);
double normal_deviation_rms(const RoughnessProfile& p, double a, double b, int n_samples);

}  // namespace wallaw
