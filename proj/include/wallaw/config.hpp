#pragma once

#include "wallaw/boundary_layer.hpp"
#include "wallaw/experiments.hpp"
#include "wallaw/profiles.hpp"
#include "wallaw/stokes.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace wallaw {

/// Declarative profile description. `family` is one of cosine, flat,
/// periodic (real `coeffs`, optional `coeffs_imag`) or random.
struct ProfileConfig {
  std::string family = "cosine";
  double offset = -0.5;
  double amplitude = 0.1;
  double period = 1.0;
  double level = -0.3;
  std::vector<double> coeffs;
  std::vector<double> coeffs_imag;
  std::uint64_t seed = 1;
  int n_modes = 8;
  double decay_s = 2.5;
  std::pair<double, double> range{-0.7, -0.3};
  double sample_period = 64.0;
};

/// Builds the profile; construction failures surface as ConfigError.
RoughnessProfile build_profile(const ProfileConfig& c);
RandomProfileSpec random_spec(const ProfileConfig& c);

/// Everything a CLI run can be configured with. Sections and keys of the
/// TOML file:
///
///   [profile]     family offset amplitude period level coeffs coeffs_imag
///                 seed n_modes decay_s range sample_period
///   [cell]        H h top
///   [flow]        bc flux eps h picard_tol phi0
///   [sweep]       eps h_ratio slip timing threads
///   [montecarlo]  seeds
///   [thresholds]  rate_l2_u0 rate_h1_u0 rate_l2_uN degenerate_tol
///   [output]      dir
///
/// eps entries may be numbers or "1/N" strings.
struct RunConfig {
  ProfileConfig profile;

  double cell_H = 4.0;
  double cell_h = 0.02;
  TopCondition top = TopCondition::dtn;

  BoundaryCondition bc = BoundaryCondition::dirichlet();
  double flux = 0.1;
  double eps = 0.125;
  double h = 0.0;  ///< 0: eps / 8
  PicardOptions picard;

  std::vector<double> sweep_eps;
  double h_ratio = 8.0;  ///< sweep mesh size is eps / h_ratio
  SlipScaling slip = SlipScaling::fixed;
  bool timing = false;
  int threads = 0;

  std::vector<std::uint64_t> seeds;

  RateThresholds thresholds;
  double degenerate_tol = 1e-10;

  std::string output_dir = ".";

  SweepOptions sweep_options() const;
};

/// Overlays the keys found in `in` on `base`. Unknown keys, duplicate keys
/// and ill-typed or out-of-range values raise ConfigError naming the key.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// "0.125" or "1/8".
double parse_eps(const std::string& text);

}  // namespace wallaw
