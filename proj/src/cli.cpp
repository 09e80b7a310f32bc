#include "wallaw/cli.hpp"

#include "wallaw/boundary_layer.hpp"
#include "wallaw/config.hpp"
#include "wallaw/errors.hpp"
#include "wallaw/experiments.hpp"
#include "wallaw/geometry.hpp"
#include "wallaw/inequalities.hpp"
#include "wallaw/profiles.hpp"
#include "wallaw/stokes.hpp"
#include "wallaw/wall_laws.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wallaw {

namespace {

namespace fs = std::filesystem;

/// Everything a command produces, flushed only on success.
struct Outputs {
  fs::path dir = ".";
  std::vector<std::pair<fs::path, std::string>> files;
  std::ostringstream stdout_text;

  fs::path resolve(const std::string& name) const {
    const fs::path p = fs::path(name).lexically_normal();
    if (p.empty() || p.is_absolute() || *p.begin() == ".." || p.filename().empty())
      throw ConfigError("output path '" + name + "' must name a file inside the output directory '" + dir.string() +
                        "'");
    return dir / p;
  }
  void add(const std::string& name, std::string content) { files.emplace_back(resolve(name), std::move(content)); }
};

std::string csv_bool(bool b) { return b ? "true" : "false"; }

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> xs;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
      throw ConfigError("grid '" + text + "': bad number '" + s + "'");
    return v;
  };
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto a = text.find(':'), b = text.rfind(':');
    const double lo = number(text.substr(0, a)), hi = number(text.substr(a + 1, b - a - 1));
    const std::string ns = text.substr(b + 1);
    int n = 0;
    const auto res = std::from_chars(ns.data(), ns.data() + ns.size(), n);
    if (res.ec != std::errc() || res.ptr != ns.data() + ns.size() || n < 1 || n > 1000000)
      throw ConfigError("grid '" + text + "': point count must be an integer in [1, 1e6]");
    for (int i = 0; i < n; ++i) xs.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) xs.push_back(number(item));
  }
  if (xs.empty()) throw ConfigError("grid '" + text + "' is empty");
  return xs;
}

void write_bl_line(std::ostream& os, const std::string& profile_id, const BLResult& r, const std::optional<double>& beta) {
  os << "profile_id,bc,H,h,alpha,beta,top_mode_residual\n";
  os << profile_id << ',' << to_string(r.field.bc) << ',' << format_number(r.truncation_H) << ','
     << format_number(r.mesh_h) << ',' << format_number(r.alpha) << ',' << (beta ? format_number(*beta) : "") << ','
     << format_number(r.top_mode_residual) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rough-channel wall-law lab", "wallaw"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);

  std::string config_path, profile_path, out_dir, out_name;
  auto common = [&](CLI::App* sub, bool profile) {
    sub->add_option("--config", config_path, "TOML run configuration");
    if (profile) sub->add_option("--profile", profile_path, "TOML file with a [profile] table");
    sub->add_option("--out-dir", out_dir, "output directory (default: output.dir of the config, else .)");
  };

  // profile dump
  auto* profile_cmd = app.add_subcommand("profile", "roughness profiles");
  profile_cmd->require_subcommand(1);
  auto* dump = profile_cmd->add_subcommand("dump", "CSV samples y1,omega,domega over one window");
  common(dump, true);
  std::string family;
  double offset = 0, amplitude = 0, period = 0, level = 0, decay = 0;
  std::uint64_t seed = 0;
  int n_modes = 0, samples = 256;
  std::vector<double> range;
  auto* o_family = dump->add_option("--family", family, "cosine, flat, periodic or random");
  auto* o_offset = dump->add_option("--offset", offset);
  auto* o_amplitude = dump->add_option("--amplitude", amplitude);
  auto* o_period = dump->add_option("--period", period);
  auto* o_level = dump->add_option("--level", level);
  auto* o_seed = dump->add_option("--seed", seed);
  auto* o_modes = dump->add_option("--n-modes", n_modes);
  auto* o_decay = dump->add_option("--decay", decay);
  auto* o_range = dump->add_option("--range", range)->expected(2)->allow_extra_args(false);
  dump->add_option("--samples", samples, "number of samples (default 256)")->check(CLI::Range(1, 10000000));
  dump->add_option("--out", out_name, "CSV file (default: stdout)");

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "channel or cell mesh dump");
  common(mesh_cmd, true);
  std::string eps_text, format;
  double h = 0, H = 0;
  bool cell = false;
  mesh_cmd->add_option("--eps", eps_text, "roughness scale 1/N");
  auto* o_mesh_h = mesh_cmd->add_option("--h", h, "mesh size");
  mesh_cmd->add_flag("--cell", cell, "boundary-layer cell instead of the channel");
  auto* o_mesh_H = mesh_cmd->add_option("--H", H, "cell height");
  mesh_cmd->add_option("--format", format, "vtk or csv")->check(CLI::IsMember({"vtk", "csv"}));
  mesh_cmd->add_option("--out", out_name, "output file (default: stdout)");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "rough-channel flow");
  common(solve_cmd, true);
  std::string bc_text;
  double flux = 0;
  bool stokes_only = false;
  solve_cmd->add_option("--eps", eps_text, "roughness scale 1/N");
  auto* o_flux = solve_cmd->add_option("--flux", flux);
  solve_cmd->add_option("--bc", bc_text, "dirichlet, navier:<lambda> or freeslip");
  auto* o_solve_h = solve_cmd->add_option("--h", h);
  solve_cmd->add_flag("--stokes", stokes_only, "drop the convection term");
  solve_cmd->add_option("--out", out_name, "VTK field dump");

  // bl
  auto* bl_cmd = app.add_subcommand("bl", "boundary-layer cell problem");
  common(bl_cmd, true);
  std::string top_text;
  bl_cmd->add_option("--bc", bc_text, "dirichlet or navier:<lambda0>");
  auto* o_bl_H = bl_cmd->add_option("--H", H);
  auto* o_bl_h = bl_cmd->add_option("--h", h);
  bl_cmd->add_option("--top", top_text, "dtn or natural");
  bl_cmd->add_option("--out", out_name, "VTK cell field dump");

  // walllaw eval
  auto* wl_cmd = app.add_subcommand("walllaw", "closed-form homogenized flows");
  wl_cmd->require_subcommand(1);
  auto* wl_eval = wl_cmd->add_subcommand("eval", "CSV x2,u1_value");
  std::string kind, grid;
  double alpha = 0, eps_value = 0;
  wl_eval->add_option("--kind", kind)->required()->check(CLI::IsMember({"poiseuille", "u1", "navier"}));
  wl_eval->add_option("--flux", flux)->required();
  auto* o_alpha = wl_eval->add_option("--alpha", alpha);
  auto* o_eps = wl_eval->add_option("--eps", eps_value);
  wl_eval->add_option("--x2", grid, "a:b:n or a comma list")->required();
  wl_eval->add_option("--out-dir", out_dir);
  wl_eval->add_option("--out", out_name, "CSV file (default: stdout)");

  // ineq
  auto* ineq_cmd = app.add_subcommand("ineq", "Poincare and Korn constants of a cell");
  common(ineq_cmd, true);
  std::string lateral_text = "periodic", ineq_kind;
  double depth = 0;
  bool noslip = false;
  ineq_cmd->add_option("--depth", depth)->required();
  ineq_cmd->add_option("--lateral", lateral_text, "periodic or slice:<A>");
  ineq_cmd->add_option("--kind", ineq_kind)->required()->check(CLI::IsMember({"poincare", "korn", "classical"}));
  auto* o_ineq_h = ineq_cmd->add_option("--h", h);
  ineq_cmd->add_flag("--noslip", noslip, "no-slip instead of tangency on the rough wall");
  ineq_cmd->add_option("--out", out_name, "CSV file (default: stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "convergence sweep and Monte-Carlo slip lengths");
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--out-dir", out_dir);
  out_name = "";
  std::string report_name = "report.csv";
  sweep_cmd->add_option("--out", report_name, "sweep CSV (rates.csv and norm_vs_eps.dat go next to it)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  Outputs o;
  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (!profile_path.empty()) cfg = load_config(profile_path, cfg);
    o.dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
    if (!bc_text.empty()) cfg.bc = BoundaryCondition::parse(bc_text);
    if (!eps_text.empty()) cfg.eps = parse_eps(eps_text);
    if (!top_text.empty()) cfg.top = parse_top_condition(top_text);

    if (dump->parsed()) {
      ProfileConfig& pc = cfg.profile;
      if (o_family->count()) pc.family = family;
      if (o_offset->count()) pc.offset = offset;
      if (o_amplitude->count()) pc.amplitude = amplitude;
      if (o_period->count()) pc.period = period;
      if (o_level->count()) pc.level = level;
      if (o_seed->count()) pc.seed = seed;
      if (o_modes->count()) pc.n_modes = n_modes;
      if (o_decay->count()) pc.decay_s = decay;
      if (o_range->count()) pc.range = {range[0], range[1]};
      if (!out_name.empty()) o.resolve(out_name);
      const RoughnessProfile p = build_profile(pc);
      std::ostringstream csv;
      csv << "y1,omega,domega\n";
      const double window = p.natural_window();
      for (int i = 0; i < samples; ++i) {
        const double y = window * i / samples;
        csv << format_number(y) << ',' << format_number(p.eval(y)) << ',' << format_number(p.deriv(y)) << '\n';
      }
      if (out_name.empty())
        o.stdout_text << csv.str();
      else
        o.add(out_name, csv.str());
    } else if (mesh_cmd->parsed()) {
      if (!out_name.empty()) o.resolve(out_name);
      const RoughnessProfile p = build_profile(cfg.profile);
      TriMesh m;
      if (cell) {
        const double hh = o_mesh_h->count() ? h : cfg.cell_h;
        m = build_cell_mesh(p, o_mesh_H->count() ? H : cfg.cell_H, hh);
      } else {
        inverse_integer(cfg.eps, "mesh");
        m = build_channel_mesh(p, cfg.eps, o_mesh_h->count() ? h : (cfg.h > 0 ? cfg.h : cfg.eps / 8.0));
      }
      std::string fmt = format;
      if (fmt.empty()) fmt = fs::path(out_name).extension() == ".csv" ? "csv" : "vtk";
      std::ostringstream s;
      if (fmt == "csv")
        write_vertex_csv(s, m);
      else
        write_vtk(s, m);
      if (out_name.empty())
        o.stdout_text << s.str();
      else
        o.add(out_name, s.str());
    } else if (solve_cmd->parsed()) {
      if (o_flux->count()) cfg.flux = flux;
      if (o_solve_h->count()) cfg.h = h;
      inverse_integer(cfg.eps, "solve");
      if (!out_name.empty()) o.resolve(out_name);
      const RoughnessProfile p = build_profile(cfg.profile);
      const double hh = cfg.h > 0 ? cfg.h : cfg.eps / 8.0;
      auto mesh = std::make_shared<const TriMesh>(build_channel_mesh(p, cfg.eps, hh));
      auto space = std::make_shared<const P2P1Space>(make_p2p1_space(mesh));
      const FlowField f = stokes_only ? solve_stokes(space, cfg.flux, cfg.bc)
                                      : solve_navier_stokes(space, cfg.flux, cfg.bc, cfg.picard);
      const ErrorNorms e = error_norms(f, poiseuille(cfg.flux).analytic());
      o.stdout_text << "eps,flux,bc,l2_vs_poiseuille,h1_vs_poiseuille,picard_iters\n"
                    << format_number(cfg.eps) << ',' << format_number(cfg.flux) << ',' << to_string(cfg.bc) << ','
                    << format_number(e.l2) << ',' << format_number(e.h1) << ',' << f.picard_iterations << '\n';
      if (!out_name.empty()) {
        std::ostringstream s;
        write_field_vtk(s, f);
        o.add(out_name, s.str());
      }
    } else if (bl_cmd->parsed()) {
      if (o_bl_H->count()) cfg.cell_H = H;
      if (o_bl_h->count()) cfg.cell_h = h;
      if (cfg.bc.kind == BoundaryCondition::Kind::freeslip)
        throw PreconditionError("bl: the rough condition must be dirichlet or navier:<lambda0>");
      if (!out_name.empty()) o.resolve(out_name);
      const RoughnessProfile p = build_profile(cfg.profile);
      const BLResult r = solve_bl(p, cfg.bc, cfg.cell_H, cfg.cell_h, cfg.top);
      std::optional<double> beta;
      if (cfg.bc.kind == BoundaryCondition::Kind::navier)
        beta = solve_v1(p, cfg.bc.lambda, r, cfg.cell_H, cfg.cell_h).beta;
      write_bl_line(o.stdout_text, p.id, r, beta);
      if (!out_name.empty()) {
        std::ostringstream s;
        write_field_vtk(s, r.field);
        o.add(out_name, s.str());
      }
    } else if (wl_eval->parsed()) {
      if (!out_name.empty()) o.resolve(out_name);
      const std::vector<double> xs = parse_grid(grid);
      for (double x : xs)
        if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("walllaw: x2 values must lie in [0, 1]");
      ClosedFormFlow flow;
      if (kind == "poiseuille") {
        flow = poiseuille(flux);
      } else {
        if (!o_alpha->count()) throw PreconditionError("walllaw: --alpha is required for kind " + kind);
        if (kind == "u1") {
          flow = corrector_u1(flux, alpha);
        } else {
          if (!o_eps->count() || !(eps_value > 0.0)) throw PreconditionError("walllaw: navier needs --eps > 0");
          flow = navier_wall_law(flux, alpha, eps_value);
        }
      }
      std::ostringstream s;
      s << "x2,u1_value\n";
      for (double x : xs) s << format_number(x) << ',' << format_number(flow(0.0, x).x()) << '\n';
      if (out_name.empty())
        o.stdout_text << s.str();
      else
        o.add(out_name, s.str());
    } else if (ineq_cmd->parsed()) {
      InequalityOptions io;
      if (o_ineq_h->count()) io.h = h;
      io.degenerate_tol = cfg.degenerate_tol;
      io.noslip_rough = noslip;
      const Lateral lateral = Lateral::parse(lateral_text);
      if (!out_name.empty()) o.resolve(out_name);
      const RoughnessProfile p = build_profile(cfg.profile);
      InequalityReport r;
      if (ineq_kind == "poincare")
        r = poincare_constant(p, depth, lateral, io);
      else if (ineq_kind == "korn")
        r = korn_constant(p, depth, lateral, io);
      else
        r = korn_classical_check(p, depth, lateral, io);
      std::ostringstream s;
      s << "kind,lambda_min,constant,degenerate\n"
        << to_string(r.kind) << ',' << format_number(r.lambda_min) << ',' << format_number(r.constant) << ','
        << csv_bool(r.degenerate) << '\n';
      if (out_name.empty())
        o.stdout_text << s.str();
      else
        o.add(out_name, s.str());
    } else if (sweep_cmd->parsed()) {
      const fs::path report = o.resolve(report_name);
      const fs::path rel = report.lexically_relative(o.dir);
      const std::string sibling = rel.has_parent_path() ? rel.parent_path().string() + "/" : "";
      if (cfg.sweep_eps.empty() && cfg.seeds.empty())
        throw ConfigError("sweep: the config needs sweep.eps or montecarlo.seeds");
      for (double e : cfg.sweep_eps) inverse_integer(e, "sweep");
      if (!cfg.seeds.empty() && cfg.seeds.size() < 2) throw ConfigError("sweep: montecarlo.seeds needs two or more seeds");
      worker_count(cfg.threads, 1);
      const SweepOptions so = cfg.sweep_options();
      if (!cfg.sweep_eps.empty()) {
        const RoughnessProfile p = build_profile(cfg.profile);
        const double ratio = cfg.h_ratio;
        const SweepReport r = convergence_sweep(p, cfg.bc, cfg.flux, cfg.sweep_eps,
                                                [ratio](double e) { return e / ratio; }, so);
        std::ostringstream a, b, c;
        write_sweep_csv(a, r);
        write_rates_csv(b, r);
        write_norm_vs_eps(c, r);
        o.add(rel.string(), a.str());
        o.add(sibling + "rates.csv", b.str());
        o.add(sibling + "norm_vs_eps.dat", c.str());
      }
      if (!cfg.seeds.empty()) {
        const MonteCarloReport mc = monte_carlo_alpha(random_spec(cfg.profile), cfg.seeds, cfg.bc, so);
        std::ostringstream s;
        write_monte_carlo_csv(s, mc);
        o.add(sibling + "montecarlo.csv", s.str());
        err << "montecarlo: mean alpha " << format_number(mc.mean) << " std " << format_number(mc.std) << '\n';
      }
    }
  } catch (const PreconditionError& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    for (const auto& [path, content] : o.files) {
      fs::create_directories(path.parent_path());
      std::ofstream f(path, std::ios::binary);
      f << content;
      if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
      err << "wrote " << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  out << o.stdout_text.str();
  return 0;
}

}  // namespace wallaw
