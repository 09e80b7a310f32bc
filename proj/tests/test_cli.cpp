#include <doctest.h>

#include "wallaw/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wallaw;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Fresh empty directory under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("wallaw_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

bool empty_dir(const fs::path& d) { return fs::is_empty(d); }

std::string read(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("profile dump") {
  const Run r = call({"profile", "dump", "--family", "cosine"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("y1,omega,domega\n0,-0.4,0\n", 0) == 0);
  CHECK(lines(r.out) == 257);

  const Run a = call({"profile", "dump", "--family", "random", "--seed", "11", "--range", "-0.7", "-0.3", "--samples", "64"});
  const Run b = call({"profile", "dump", "--family", "random", "--seed", "11", "--range", "-0.7", "-0.3", "--samples", "64"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != call({"profile", "dump", "--family", "random", "--seed", "12", "--samples", "64"}).out);
}

TEST_CASE("validation failures exit 2 and write nothing") {
  const fs::path d = scratch("validation");
  const Run unknown = call({"profile", "dump", "--family", "cosine", "--out-dir", d.string(), "--out", "p.csv", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(lines(unknown.err) == 1);
  CHECK(empty_dir(d));

  std::ofstream(d / "bad.toml") << "[sweep]\neps = [\"1/4\", 0.3, \"1/16\"]\n[output]\ndir = \"" << (d / "out").string()
                                << "\"\n";
  const Run sweep = call({"sweep", "--config", (d / "bad.toml").string()});
  CHECK(sweep.code == 2);
  CHECK(sweep.err.find("1/N") != std::string::npos);
  CHECK(!fs::exists(d / "out"));

  CHECK(call({"profile", "dump", "--family", "cosine", "--out-dir", d.string(), "--out", "../escape.csv"}).code == 2);
  CHECK(call({"profile", "dump", "--family", "cosine", "--out-dir", d.string(), "--out", "/tmp/escape.csv"}).code == 2);
  CHECK(call({"profile", "dump", "--family", "fractal"}).code == 2);
  CHECK(call({"solve", "--eps", "0.3"}).code == 2);
  CHECK(call({"bl", "--bc", "freeslip"}).code == 2);
  CHECK(call({"ineq", "--depth", "0", "--kind", "korn", "--lateral", "slice:"}).code == 2);
  CHECK(call({"walllaw", "eval", "--kind", "u1", "--flux", "1", "--x2", "0:1:5"}).code == 2);
  CHECK(call({"walllaw", "eval", "--kind", "poiseuille", "--flux", "1", "--x2", "0:2:5"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"solve", "--config", (d / "missing.toml").string()}).code == 2);
  CHECK(fs::directory_iterator(d) != fs::directory_iterator());  // only bad.toml
  CHECK(std::distance(fs::directory_iterator(d), fs::directory_iterator()) == 1);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("numerical failures exit 1") {
  const fs::path d = scratch("numeric");
  std::ofstream(d / "flat.toml") << "[profile]\nfamily = \"flat\"\nlevel = -0.3\n";
  const Run r = call({"bl", "--profile", (d / "flat.toml").string(), "--bc", "navier:1", "--h", "0.1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("SingularSystem") != std::string::npos);
}

TEST_CASE("wall law evaluation") {
  const Run r = call({"walllaw", "eval", "--kind", "poiseuille", "--flux", "0.5", "--x2", "0,0.25,0.5"});
  CHECK(r.code == 0);
  CHECK(r.out == "x2,u1_value\n0,0\n0.25,0.5625\n0.5,0.75\n");
  const Run n = call({"walllaw", "eval", "--kind", "navier", "--flux", "1", "--alpha", "0.5", "--eps", "0.25", "--x2", "0:1:3"});
  CHECK(n.code == 0);
  // slip value 6 phi eps alpha / (1 + 4 eps alpha)
  CHECK(n.out.find("\n0,0.5\n") != std::string::npos);
}

TEST_CASE("cell, inequality, mesh and solve commands") {
  const fs::path d = scratch("commands");
  const Run bl = call({"bl", "--bc", "dirichlet", "--H", "4", "--h", "0.05", "--out-dir", d.string(), "--out", "cell.vtk"});
  CHECK(bl.code == 0);
  CHECK(bl.out.rfind("profile_id,bc,H,h,alpha,beta,top_mode_residual\ncosine,dirichlet,4,0.05,0.45", 0) == 0);
  CHECK(read(d / "cell.vtk").find("VECTORS velocity double") != std::string::npos);

  const Run nav = call({"bl", "--bc", "navier:1", "--h", "0.05"});
  CHECK(nav.code == 0);
  CHECK(nav.out.find("navier:1,4,0.05,0.7") != std::string::npos);
  CHECK(nav.out.find(",,") == std::string::npos);  // beta present

  std::ofstream(d / "flat.toml") << "[profile]\nfamily = \"flat\"\nlevel = -0.5\n";
  const Run iq = call({"ineq", "--profile", (d / "flat.toml").string(), "--depth", "0", "--kind", "poincare", "--h", "0.1"});
  CHECK(iq.code == 0);
  CHECK(iq.out.rfind("kind,lambda_min,constant,degenerate\npoincare,", 0) == 0);
  CHECK(iq.out.find(",inf,true\n") != std::string::npos);

  const Run m = call({"mesh", "--eps", "1/4", "--h", "0.0625", "--out-dir", d.string(), "--out", "m.csv"});
  CHECK(m.code == 0);
  CHECK(read(d / "m.csv").rfind("id,x1,x2,tag\n", 0) == 0);
  CHECK(call({"mesh", "--cell", "--h", "0.1", "--out-dir", d.string(), "--out", "c.vtk"}).code == 0);
  CHECK(read(d / "c.vtk").find("CELL_TYPES") != std::string::npos);

  const Run s = call({"solve", "--eps", "1/4", "--flux", "0.1", "--bc", "navier:0.5", "--h", "0.03125"});
  CHECK(s.code == 0);
  CHECK(s.out.rfind("eps,flux,bc,l2_vs_poiseuille,h1_vs_poiseuille,picard_iters\n0.25,0.1,navier:0.5,", 0) == 0);
}

TEST_CASE("seeded sweep output is reproducible") {
  const fs::path d = scratch("sweep");
  std::ofstream(d / "mc.toml") << "[profile]\nsample_period = 2.0\n[cell]\nh = 0.05\n[montecarlo]\nseeds = [4, 9]\n";
  const Run a = call({"sweep", "--config", (d / "mc.toml").string(), "--out-dir", (d / "a").string()});
  const Run b = call({"sweep", "--config", (d / "mc.toml").string(), "--out-dir", (d / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string ca = read(d / "a" / "montecarlo.csv");
  CHECK(ca.rfind("seed,alpha,omega_min,omega_max\n4,", 0) == 0);
  CHECK(ca == read(d / "b" / "montecarlo.csv"));
  CHECK(!fs::exists(d / "a" / "report.csv"));
}
