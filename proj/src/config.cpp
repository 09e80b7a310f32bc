#include "wallaw/config.hpp"

#include "wallaw/errors.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace wallaw {

namespace {

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

using Values = std::vector<std::string>;

const std::string& scalar(const std::string& key, const Values& v) {
  if (v.size() != 1) throw ConfigError("config key '" + key + "': expected a single value");
  return v[0];
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError("config key '" + key + "': must be positive");
  return v;
}

}  // namespace

double parse_eps(const std::string& text) {
  double v = 0.0;
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const double num = to_double("eps", text.substr(0, slash));
    const double den = to_double("eps", text.substr(slash + 1));
    if (den == 0.0) throw ConfigError("eps '" + text + "': zero denominator");
    v = num / den;
  } else {
    v = to_double("eps", text);
  }
  if (!(v > 0.0)) throw ConfigError("eps '" + text + "': must be positive");
  return v;
}

RandomProfileSpec random_spec(const ProfileConfig& c) {
  return {c.n_modes, c.decay_s, c.range, c.sample_period};
}

RoughnessProfile build_profile(const ProfileConfig& c) {
  try {
    if (c.family == "cosine") {
      if (!(c.offset - std::abs(c.amplitude) > -1.0 && c.offset + std::abs(c.amplitude) < 0.0))
        throw ConfigError("profile: offset +- amplitude must stay inside (-1, 0)");
      return make_cosine(c.offset, c.amplitude, c.period);
    }
    if (c.family == "flat") return make_flat(c.level);
    if (c.family == "periodic") {
      if (c.coeffs.empty()) throw ConfigError("profile: family periodic needs coeffs");
      if (!c.coeffs_imag.empty() && c.coeffs_imag.size() != c.coeffs.size())
        throw ConfigError("profile: coeffs_imag must match coeffs in length");
      std::vector<std::complex<double>> z;
      for (std::size_t k = 0; k < c.coeffs.size(); ++k)
        z.emplace_back(c.coeffs[k], c.coeffs_imag.empty() ? 0.0 : c.coeffs_imag[k]);
      return make_periodic(z, c.offset, c.period);
    }
    if (c.family == "random")
      return make_random_stationary(c.seed, c.n_modes, c.decay_s, c.range, c.sample_period);
  } catch (const ConfigError&) {
    throw;
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  } catch (const RangeViolation& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
  throw ConfigError("profile: unknown family '" + c.family + "' (cosine, flat, periodic, random)");
}

SweepOptions RunConfig::sweep_options() const {
  SweepOptions o;
  o.cell_H = cell_H;
  o.cell_h = cell_h;
  o.cell_top = top;
  o.picard = picard;
  o.record_runtime = timing;
  o.slip = slip;
  o.thresholds = thresholds;
  o.threads = threads;
  return o;
}

RunConfig parse_config(std::istream& in, RunConfig c) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  using Setter = std::function<void(const std::string&, const Values&)>;
  auto num = [](double& dst) {
    return Setter([&dst](const std::string& k, const Values& v) { dst = to_double(k, scalar(k, v)); });
  };
  auto pos = [](double& dst) {
    return Setter([&dst](const std::string& k, const Values& v) { dst = positive(k, to_double(k, scalar(k, v))); });
  };
  auto list = [](std::vector<double>& dst) {
    return Setter([&dst](const std::string& k, const Values& v) {
      dst.clear();
      for (const auto& s : v) dst.push_back(to_double(k, s));
    });
  };

  const std::map<std::string, Setter> keys{
      {"profile.family", [&](auto& k, auto& v) { c.profile.family = scalar(k, v); }},
      {"profile.offset", num(c.profile.offset)},
      {"profile.amplitude", num(c.profile.amplitude)},
      {"profile.period", pos(c.profile.period)},
      {"profile.level", num(c.profile.level)},
      {"profile.coeffs", list(c.profile.coeffs)},
      {"profile.coeffs_imag", list(c.profile.coeffs_imag)},
      {"profile.seed",
       [&](auto& k, auto& v) {
         const long long s = to_integer(k, scalar(k, v));
         if (s < 0) throw ConfigError("config key '" + k + "': must be nonnegative");
         c.profile.seed = static_cast<std::uint64_t>(s);
       }},
      {"profile.n_modes",
       [&](auto& k, auto& v) {
         const long long n = to_integer(k, scalar(k, v));
         if (n < 1 || n > 4096) throw ConfigError("config key '" + k + "': must lie in [1, 4096]");
         c.profile.n_modes = static_cast<int>(n);
       }},
      {"profile.decay_s", num(c.profile.decay_s)},
      {"profile.range",
       [&](auto& k, auto& v) {
         if (v.size() != 2) throw ConfigError("config key '" + k + "': expected [lo, hi]");
         c.profile.range = {to_double(k, v[0]), to_double(k, v[1])};
       }},
      {"profile.sample_period", pos(c.profile.sample_period)},
      {"cell.H", num(c.cell_H)},
      {"cell.h", pos(c.cell_h)},
      {"cell.top",
       [&](auto& k, auto& v) {
         try {
           c.top = parse_top_condition(scalar(k, v));
         } catch (const PreconditionError& e) {
           throw ConfigError("config key '" + k + "': " + e.what());
         }
       }},
      {"flow.bc",
       [&](auto& k, auto& v) {
         try {
           c.bc = BoundaryCondition::parse(scalar(k, v));
         } catch (const PreconditionError& e) {
           throw ConfigError("config key '" + k + "': " + e.what());
         }
       }},
      {"flow.flux", num(c.flux)},
      {"flow.eps", [&](auto& k, auto& v) { c.eps = parse_eps(scalar(k, v)); }},
      {"flow.h", pos(c.h)},
      {"flow.picard_tol", pos(c.picard.tol)},
      {"flow.phi0", pos(c.picard.phi0)},
      {"sweep.eps",
       [&](auto&, auto& v) {
         c.sweep_eps.clear();
         for (const auto& s : v) c.sweep_eps.push_back(parse_eps(s));
       }},
      {"sweep.h_ratio", pos(c.h_ratio)},
      {"sweep.slip",
       [&](auto& k, auto& v) {
         const auto& s = scalar(k, v);
         if (s == "fixed")
           c.slip = SlipScaling::fixed;
         else if (s == "proportional")
           c.slip = SlipScaling::proportional;
         else
           throw ConfigError("config key '" + k + "': expected fixed or proportional");
       }},
      {"sweep.timing", [&](auto& k, auto& v) { c.timing = to_bool(k, scalar(k, v)); }},
      {"sweep.threads",
       [&](auto& k, auto& v) {
         const long long n = to_integer(k, scalar(k, v));
         if (n < 0 || n > 1024) throw ConfigError("config key '" + k + "': must lie in [0, 1024]");
         c.threads = static_cast<int>(n);
       }},
      {"montecarlo.seeds",
       [&](auto& k, auto& v) {
         c.seeds.clear();
         for (const auto& s : v) {
           const long long x = to_integer(k, s);
           if (x < 0) throw ConfigError("config key '" + k + "': seeds must be nonnegative");
           c.seeds.push_back(static_cast<std::uint64_t>(x));
         }
       }},
      {"thresholds.rate_l2_u0", pos(c.thresholds.l2_u0)},
      {"thresholds.rate_h1_u0", pos(c.thresholds.h1_u0)},
      {"thresholds.rate_l2_uN", pos(c.thresholds.l2_uN)},
      {"thresholds.degenerate_tol", pos(c.degenerate_tol)},
      {"output.dir",
       [&](auto& k, auto& v) {
         c.output_dir = scalar(k, v);
         if (c.output_dir.empty()) throw ConfigError("config key '" + k + "': empty directory");
       }},
  };

  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("config: unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key '" + key + "'");
    it->second(key, item.inputs);
  }

  if (!(c.cell_H >= 2.0)) throw ConfigError("config key 'cell.H': must be at least 2");
  if (c.h_ratio < 8.0) throw ConfigError("config key 'sweep.h_ratio': must be at least 8 (h <= eps/8)");
  if (!(c.profile.range.first > -1.0 && c.profile.range.second < 0.0 && c.profile.range.first < c.profile.range.second))
    throw ConfigError("config key 'profile.range': need -1 < lo < hi < 0");
  if (!(c.profile.decay_s > 1.5)) throw ConfigError("config key 'profile.decay_s': must exceed 1.5");
  if (c.picard.tol < 1e-12) throw ConfigError("config key 'flow.picard_tol': must be at least 1e-12");
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in, std::move(base));
}

}  // namespace wallaw
