#include "wallaw/profiles.hpp"

#include "wallaw/errors.hpp"
#include "wallaw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace wallaw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kRangeScanPoints = 10'000;

/// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

/// Max of f over [a, b]: dense scan then local golden-section refinement.
double scan_max(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double best = -std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= n; ++i) {
    const double v = f(a + i * h);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double lo = std::max(a, a + (best_i - 1) * h);
  const double hi = std::min(b, a + (best_i + 1) * h);
  return std::max(best, golden_max(f, lo, hi));
}

void certify(RoughnessProfile& p, double window, double fourier_bound, bool allow_zero) {
  const auto& f = p.eval_fn;
  const auto& df = p.deriv_fn;
  const double hi = scan_max(f, 0.0, window, kRangeScanPoints);
  const double lo = -scan_max([&](double y) { return -f(y); }, 0.0, window, kRangeScanPoints);
  p.range = {lo, hi};
  const bool top_ok = allow_zero ? hi <= 0.0 : hi < 0.0;
  if (!(lo > -1.0) || !top_ok || !std::isfinite(lo) || !std::isfinite(hi)) {
    std::ostringstream os;
    os << "profile range [" << lo << ", " << hi << "] escapes (-1, 0)";
    throw RangeViolation(os.str());
  }
  const double slope = scan_max([&](double y) { return std::abs(df(y)); }, 0.0, window,
                                kRangeScanPoints);
  p.lipschitz_K = std::min(slope, fourier_bound);
}

}  // namespace

std::string to_string(ProfileFamily family) {
  switch (family) {
    case ProfileFamily::periodic: return "periodic";
    case ProfileFamily::quasiperiodic: return "quasiperiodic";
    case ProfileFamily::random_stationary: return "random_stationary";
    case ProfileFamily::flat: return "flat";
    case ProfileFamily::custom: return "custom";
  }
  return "unknown";
}

RoughnessProfile make_periodic(const std::vector<std::complex<double>>& coeffs, double offset,
                               double period) {
  if (!(period > 0.0)) throw PreconditionError("make_periodic: period must be positive");
  if (!std::isfinite(offset)) throw PreconditionError("make_periodic: offset not finite");
  for (const auto& c : coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw PreconditionError("make_periodic: non-finite coefficient");

  const bool flat = std::all_of(coeffs.begin(), coeffs.end(),
                                [](const auto& c) { return c == std::complex<double>{}; });
  RoughnessProfile p;
  p.family = flat ? ProfileFamily::flat : ProfileFamily::periodic;
  p.id = flat ? "flat" : "periodic";
  p.period = period;
  p.offset = offset;
  p.fourier_coeffs = coeffs;
  const double w = kTwoPi / period;
  p.eval_fn = [coeffs, offset, w, period](double y) {
    y -= period * std::floor(y / period);
    double s = offset;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      const double arg = w * static_cast<double>(k + 1) * y;
      s += coeffs[k].real() * std::cos(arg) - coeffs[k].imag() * std::sin(arg);
    }
    return s;
  };
  p.deriv_fn = [coeffs, w, period](double y) {
    y -= period * std::floor(y / period);
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      const double wk = w * static_cast<double>(k + 1);
      const double arg = wk * y;
      s += -wk * (coeffs[k].real() * std::sin(arg) + coeffs[k].imag() * std::cos(arg));
    }
    return s;
  };
  double bound = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    bound += w * static_cast<double>(k + 1) * std::abs(coeffs[k]);
  certify(p, period, bound, false);
  return p;
}

RoughnessProfile make_cosine(double offset, double amplitude, double period) {
  RoughnessProfile p = make_periodic({std::complex<double>(amplitude, 0.0)}, offset, period);
  if (p.family == ProfileFamily::periodic) p.id = "cosine";
  return p;
}

RoughnessProfile make_flat(double level) {
  if (!(level > -1.0 && level <= 0.0))
    throw RangeViolation("make_flat: level must lie in (-1, 0]");
  RoughnessProfile p;
  p.family = ProfileFamily::flat;
  p.id = "flat";
  p.offset = level;
  p.eval_fn = [level](double) { return level; };
  p.deriv_fn = [](double) { return 0.0; };
  p.range = {level, level};
  p.lipschitz_K = 0.0;
  return p;
}

RoughnessProfile make_quasiperiodic(const std::map<std::vector<int>, std::complex<double>>& coeffs,
                                    const Eigen::VectorXd& lambda, double offset,
                                    double series_cap) {
  const auto d = lambda.size();
  if (d < 1) throw PreconditionError("make_quasiperiodic: empty frequency vector");
  RoughnessProfile p;
  p.family = ProfileFamily::quasiperiodic;
  p.id = "quasiperiodic";
  p.frequencies = lambda;
  p.offset = offset;
  std::vector<double> freq;  // k . lambda
  std::vector<std::complex<double>> amp;
  double weighted = 0.0;
  double lip_bound = 0.0;
  for (const auto& [k, a] : coeffs) {
    if (static_cast<Eigen::Index>(k.size()) != d)
      throw PreconditionError("make_quasiperiodic: index dimension mismatch");
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw DivergentSeries("make_quasiperiodic: non-finite coefficient");
    Eigen::VectorXi kv(d);
    double dot = 0.0, knorm = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      kv[i] = k[i];
      dot += k[i] * lambda[i];
      knorm += static_cast<double>(k[i]) * k[i];
    }
    weighted += std::sqrt(knorm) * std::abs(a);
    lip_bound += kTwoPi * std::abs(dot) * std::abs(a);
    p.fourier_indices.push_back(kv);
    p.fourier_coeffs.push_back(a);
    freq.push_back(dot);
    amp.push_back(a);
  }
  if (!(weighted <= series_cap))
    throw DivergentSeries("make_quasiperiodic: sum |k||a_k| exceeds the configured cap");
  p.eval_fn = [freq, amp, offset](double y) {
    double s = offset;
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double arg = kTwoPi * freq[i] * y;
      s += amp[i].real() * std::cos(arg) - amp[i].imag() * std::sin(arg);
    }
    return s;
  };
  p.deriv_fn = [freq, amp](double y) {
    double s = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) {
      const double w = kTwoPi * freq[i];
      const double arg = w * y;
      s += -w * (amp[i].real() * std::sin(arg) + amp[i].imag() * std::cos(arg));
    }
    return s;
  };
  // A single period exists only when all frequencies are commensurate; the
  // range scan therefore runs over a long window.
  certify(p, 200.0, lip_bound, false);
  // Exact reduction to a periodic profile for a single nonzero frequency.
  int nonzero = 0;
  for (Eigen::Index i = 0; i < d; ++i) nonzero += lambda[i] != 0.0 ? 1 : 0;
  if (nonzero == 1) {
    for (Eigen::Index i = 0; i < d; ++i)
      if (lambda[i] != 0.0) p.period = 1.0 / std::abs(lambda[i]);
  }
  return p;
}

RoughnessProfile make_random_stationary(std::uint64_t seed, int n_modes, double decay_s,
                                        std::pair<double, double> target_range,
                                        double sample_period) {
  const auto [lo, hi] = target_range;
  if (!(lo > -1.0 && hi < 0.0 && lo < hi))
    throw PreconditionError("make_random_stationary: target range must satisfy -1 < lo < hi < 0");
  if (n_modes < 1) throw PreconditionError("make_random_stationary: n_modes must be >= 1");
  if (!(decay_s > 1.5)) throw PreconditionError("make_random_stationary: decay_s must exceed 1.5");
  if (!(sample_period > 0.0))
    throw PreconditionError("make_random_stationary: sample period must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<std::complex<double>> raw(n_modes);
  for (int k = 1; k <= n_modes; ++k)
    raw[k - 1] = std::polar(std::pow(static_cast<double>(k), -decay_s), phase(rng));

  const double w = kTwoPi / sample_period;
  auto raw_eval = [raw, w](double y) {
    double s = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      const double arg = w * static_cast<double>(k + 1) * y;
      s += raw[k].real() * std::cos(arg) - raw[k].imag() * std::sin(arg);
    }
    return s;
  };
  const int scan = std::max(kRangeScanPoints, 64 * n_modes);
  const double smax = scan_max(raw_eval, 0.0, sample_period, scan);
  const double smin = -scan_max([&](double y) { return -raw_eval(y); }, 0.0, sample_period, scan);
  // Map [smin, smax] affinely onto [lo, hi].
  const double scale = (hi - lo) / (smax - smin);
  const double shift = lo - scale * smin;
  std::vector<std::complex<double>> coeffs(n_modes);
  for (int k = 0; k < n_modes; ++k) coeffs[k] = scale * raw[k];

  RoughnessProfile p = make_periodic(coeffs, shift, sample_period);
  p.family = ProfileFamily::random_stationary;
  p.id = "random_" + std::to_string(seed);
  p.seed = seed;
  return p;
}

RoughnessProfile make_custom(std::function<double(double)> eval, std::function<double(double)> deriv,
                             std::optional<double> period, std::string id, double window) {
  RoughnessProfile p;
  p.family = ProfileFamily::custom;
  p.id = std::move(id);
  p.eval_fn = std::move(eval);
  p.deriv_fn = std::move(deriv);
  p.period = period;
  certify(p, period.value_or(window), std::numeric_limits<double>::infinity(), false);
  return p;
}

Eigen::VectorXd default_y1_grid(const RoughnessProfile& p, int n) {
  if (n < 1) throw PreconditionError("default_y1_grid: n must be >= 1");
  const double window = p.natural_window();
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = window * i / n;
  return g;
}

double nondegeneracy_functional(const RoughnessProfile& p, double A, const Eigen::VectorXd& y1_grid) {
  if (!(A > 0.0)) throw PreconditionError("nondegeneracy_functional: A must be positive");
  if (y1_grid.size() == 0) throw PreconditionError("nondegeneracy_functional: empty grid");
  if (p.is_flat()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < y1_grid.size(); ++i) {
    const double y = y1_grid[i];
    const double v = quad_adaptive(
        [&](double t) {
          const double d = p.deriv(y + t);
          return d * d;
        },
        0.0, A, 1e-8);
    best = std::min(best, v);
  }
  return best;
}

Eigen::VectorXd SlopeHistogram::centers() const {
  const Eigen::Index n = masses.size();
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = 0.5 * (bin_edges[i] + bin_edges[i + 1]);
  return c;
}

double SlopeHistogram::second_moment() const {
  const Eigen::VectorXd c = centers();
  return (masses.array() * c.array().square()).sum();
}

SlopeHistogram empirical_slope_distribution(const RoughnessProfile& p, double eps, double window,
                                            int n_bins) {
  if (!(eps > 0.0)) throw PreconditionError("empirical_slope_distribution: eps must be positive");
  if (!(window > 0.0)) throw PreconditionError("empirical_slope_distribution: window must be positive");
  if (n_bins < 1) throw PreconditionError("empirical_slope_distribution: n_bins must be >= 1");

  const double half = p.lipschitz_K > 0.0 ? p.lipschitz_K * (1.0 + 1e-9) : 1.0;
  SlopeHistogram h;
  h.bin_edges = Eigen::VectorXd::LinSpaced(n_bins + 1, -half, half);
  h.masses = Eigen::VectorXd::Zero(n_bins);
  constexpr int kSamples = 10'000;
  const double width = 2.0 * half / n_bins;
  for (int i = 0; i < kSamples; ++i) {
    const double y = window * i / kSamples;
    const double s = p.deriv(y / eps);
    int bin = static_cast<int>(std::floor((s + half) / width));
    bin = std::clamp(bin, 0, n_bins - 1);
    h.masses[bin] += 1.0;
  }
  h.masses /= static_cast<double>(kSamples);
  int zero_bin = static_cast<int>(std::floor(half / width));
  zero_bin = std::clamp(zero_bin, 0, n_bins - 1);
  h.dirac_at_zero_mass = h.masses[zero_bin];
  return h;
}

double circle_fit_rms(const std::vector<Eigen::Vector2d>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (n < 3) return std::numeric_limits<double>::infinity();
  // Algebraic (Kasa) fit: x^2 + y^2 + D x + E y + F = 0, on centred data.
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& q : pts) mean += q;
  mean /= static_cast<double>(n);
  Eigen::MatrixXd m(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d q = pts[i] - mean;
    m(i, 0) = q.x();
    m(i, 1) = q.y();
    m(i, 2) = 1.0;
    rhs[i] = -q.squaredNorm();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[2] <= 1e-12 * sv[0]) return std::numeric_limits<double>::infinity();
  const Eigen::Vector3d sol = svd.solve(rhs);
  Eigen::Vector2d c(-0.5 * sol[0], -0.5 * sol[1]);
  double r2 = c.squaredNorm() - sol[2];
  if (!(r2 > 0.0)) return std::numeric_limits<double>::infinity();
  double r = std::sqrt(r2);
  // Geometric refinement by Gauss-Newton on (cx, cy, r).
  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixXd j(n, 3);
    Eigen::VectorXd res(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector2d d = pts[i] - mean - c;
      const double dist = std::max(d.norm(), 1e-300);
      res[i] = dist - r;
      j(i, 0) = -d.x() / dist;
      j(i, 1) = -d.y() / dist;
      j(i, 2) = -1.0;
    }
    const Eigen::Vector3d step = j.colPivHouseholderQr().solve(-res);
    c += step.head<2>();
    r += step[2];
    if (step.norm() < 1e-15 * std::max(1.0, r)) break;
  }
  double ss = 0.0;
  for (const auto& q : pts) {
    const double e = (q - mean - c).norm() - r;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

double normal_deviation_rms(const RoughnessProfile& p, double a, double b, int n_samples) {
  std::vector<Eigen::Vector2d> normals;
  normals.reserve(n_samples + 1);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int i = 0; i <= n_samples; ++i) {
    const double y = a + (b - a) * i / n_samples;
    const double d = p.deriv(y);
    Eigen::Vector2d nu(-d, 1.0);
    nu /= nu.norm();
    normals.push_back(nu);
    mean += nu;
  }
  mean /= static_cast<double>(normals.size());
  double ss = 0.0;
  for (const auto& nu : normals) ss += (nu - mean).squaredNorm();
  return std::sqrt(ss / static_cast<double>(normals.size()));
}

double rotational_invariance_distance(const RoughnessProfile& p, double A, int k, int n_samples) {
  if (!(A > 0.0)) throw PreconditionError("rotational_invariance_distance: A must be positive");
  const double shift = k * A;
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(n_samples + 1);
  for (int i = 0; i <= n_samples; ++i) {
    const double y = A * i / n_samples;
    pts.emplace_back(y, p.eval(y + shift));
  }
  const double normal_branch = normal_deviation_rms(p, shift, shift + A, n_samples);
  const double circle_branch = circle_fit_rms(pts);
  return std::min(normal_branch, circle_branch);
}

}  // namespace wallaw
