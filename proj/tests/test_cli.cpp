#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

Run run_shell(const std::string& command) {
  auto log = fs::temp_directory_path() / "nsl_cli_test.log";
  std::string cmd = command + " > " + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

Run run(const std::string& args) { return run_shell(std::string(NSL_BIN) + " " + args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("nsl_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("usage errors exit with 64") {
  CHECK(run("").status == 64);
  CHECK(run("solve --bogus 1").status == 64);
  CHECK(run("frobnicate").status == 64);
  CHECK(run("--help").status == 0);
}

TEST_CASE("missing input files exit with 3 and name the path") {
  auto r = run("mesh --domain /nonexistent/dom.txt --out /tmp/m.txt");
  CHECK(r.status == 3);
  CHECK(r.output.find("/nonexistent/dom.txt") != std::string::npos);
}

TEST_CASE("domain errors exit with 1") {
  auto d = scratch("domain_error");
  CHECK(run("stability --seq shrinking_hole --stages 2 --p 2.5 --out " + d.string()).status == 1);
  CHECK(run("stability --seq spiral --out " + d.string()).status == 1);
}

TEST_CASE("domain, mesh and solve pipeline") {
  auto d = scratch("pipeline");
  REQUIRE(run("domain --seq shrinking_hole --stage 2 --resolution 16 --out " + (d / "dom.txt").string()).status == 0);
  REQUIRE(run("mesh --domain " + (d / "dom.txt").string() + " --out " + (d / "m.txt").string()).status == 0);
  std::ofstream(d / "prob.toml") << "p = 2\nb = 1\nf = 1\n";
  auto r = run("solve --problem " + (d / "prob.toml").string() + " --mesh " + (d / "m.txt").string() + " --out " +
               (d / "out").string());
  CHECK(r.status == 0);
  CHECK(fs::exists(d / "out" / "u.csv"));
  CHECK(fs::exists(d / "out" / "report.txt"));
  CHECK(slurp(d / "out" / "u.csv").find("vertex_id,value") != std::string::npos);
}

TEST_CASE("stability writes the table and the verdict") {
  auto d = scratch("stability");
  auto r = run("stability --seq shrinking_hole --stages 6 --p 1.5 --out " + d.string());
  CHECK(r.status == 0);
  CHECK(slurp(d / "verdict.txt") == "stable\n");
  auto csv = slurp(d / "stability.csv");
  CHECK(csv.rfind("index,dH_complement,meas,meas_bpos,grad_gap,field_gap\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("outputs do not depend on the worker count") {
  auto a = scratch("workers1"), b = scratch("workers3");
  std::string args = "stability --seq moving_hole --stages 3 --resolution 32 --p 1.5 --f-slope 1 --out ";
  REQUIRE(run_shell("env NSL_WORKERS=1 " + std::string(NSL_BIN) + " " + args + a.string()).status == 0);
  REQUIRE(run_shell("env NSL_WORKERS=3 " + std::string(NSL_BIN) + " " + args + b.string()).status == 0);
  CHECK(slurp(a / "stability.csv") == slurp(b / "stability.csv"));
}

TEST_CASE("cut optimization artifacts") {
  auto d = scratch("cut");
  REQUIRE(run("domain --seq shrinking_hole --stage 3 --resolution 16 --out " + (d / "dom.txt").string()).status == 0);
  auto r = run("cut optimize --domain " + (d / "dom.txt").string() +
               " --terminals 0.125 0.125 0.375 0.125 --p 1.5 --budget 50 --seed 3 --g mixed --out " + d.string());
  CHECK(r.status == 0);
  CHECK(slurp(d / "cut.txt").rfind("cut ", 0) == 0);
  CHECK(slurp(d / "trace.csv").rfind("step,energy,accepted,temperature\n", 0) == 0);
  auto again = scratch("cut_again");
  run("cut optimize --domain " + (d / "dom.txt").string() +
      " --terminals 0.125 0.125 0.375 0.125 --p 1.5 --budget 50 --seed 3 --g mixed --out " + again.string());
  CHECK(slurp(d / "trace.csv") == slurp(again / "trace.csv"));

  auto s = run("cut stability --domain " + (d / "dom.txt").string() + " --cut " + (d / "cut.txt").string() +
               " --vertex 0.125 0.125 --stages 2 --out " + d.string());
  CHECK(s.status == 0);
  CHECK(slurp(d / "cut_stability.csv").rfind("index,hausdorff,grad_gap\n", 0) == 0);

  auto outside = run("cut optimize --domain " + (d / "dom.txt").string() +
                     " --terminals 2 2 0.5 0.5 --out " + d.string());
  CHECK(outside.status == 1);
}

TEST_CASE("maly, density and mosco artifacts") {
  auto d = scratch("misc");
  CHECK(run("maly --stages 3 --resolution 64 --out " + (d / "maly").string()).status == 0);
  CHECK(fs::exists(d / "maly" / "coverage.csv"));
  CHECK(run("density --domain " + (d / "maly" / "domain.txt").string() + " --count 2 --fields 2 --levels 2 --out " +
            (d / "dens").string())
            .status == 0);
  CHECK(slurp(d / "dens" / "hperp.csv").rfind("element,max_residual\n", 0) == 0);
  CHECK(slurp(d / "dens" / "flatten.csv").rfind("level,width,width_reduced,distance\n", 0) == 0);
  CHECK(run("mosco --seq shrinking_hole --stages 3 --resolution 16 --out " + (d / "mosco").string()).status == 0);
  CHECK(slurp(d / "mosco" / "mosco.csv").rfind("index,m1_probe,outside_value,outside_gradient,gauss_defect\n", 0) == 0);
}

TEST_CASE("check runs selected criteria") {
  auto r = run("check --only 1 13");
  CHECK(r.status == 0);
  CHECK(r.output.find("PASS  1") != std::string::npos);
  CHECK(r.output.find("PASS 13") != std::string::npos);
}
