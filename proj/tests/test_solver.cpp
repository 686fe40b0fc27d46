#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nsl/acceptance.hpp"
#include "nsl/solver.hpp"

using namespace nsl;

namespace {

MeshPtr box(int n) { return std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(n))); }

double sup_diff(const std::vector<double>& a, const std::vector<double>& b, double shift = 0.0) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i] - shift));
  return d;
}

}  // namespace

TEST_CASE("structure checks") {
  auto m = box(2);
  auto s2 = check_structure(ProblemSpec::constant(*m, 2.0, 1.0, 1.0), 1000, 1);
  CHECK(s2.pass);
  CHECK(s2.max_quadratic_deviation <= 1e-12);
  CHECK(s2.monotonicity_violations == 0);

  auto s15 = check_structure(ProblemSpec::constant(*m, 1.5, 1.0, 1.0), 10000, 2);
  CHECK(s15.pass);
  CHECK(s15.monotonicity_violations == 0);
  CHECK(s15.min_monotonicity_gap > 0.0);

  auto scaled = ProblemSpec::constant(*m, 1.5, 1.0, 1.0);
  scaled.op = OperatorKind::scaled;
  scaled.a.assign(m->triangle_count(), 1.0);
  scaled.a[3] = 0.0;
  CHECK_FALSE(check_structure(scaled, 1000, 3).pass);
}

TEST_CASE("constant solutions") {
  auto m = box(16);
  auto r = solve(m, ProblemSpec::constant(*m, 2.0, 1.0, 1.0));
  CHECK(sup_diff(r.solution.values, std::vector<double>(m->vertex_count(), 1.0)) <= 1e-8);

  auto zero = solve(m, ProblemSpec::constant(*m, 1.5, 1.0, 0.0));
  for (double v : zero.solution.values) CHECK(std::abs(v) <= 1e-8);

  for (double p : {1.25, 1.5, 1.8}) {
    double f = 3.0;
    double expected = std::pow(f, 1.0 / (p - 1.0));
    auto rp = solve(m, ProblemSpec::constant(*m, p, 2.0, f));
    for (double v : rp.solution.values) CHECK(std::abs(v - expected) <= 1e-6 * expected);
  }
}

TEST_CASE("pure Neumann problems") {
  auto m = box(8);
  auto spec = ProblemSpec::sampled(
      *m, 1.5, [](const Point&) { return 0.0; }, [](const Point&) { return 0.0; },
      [](const Point& x) { return x.x - 0.5; });
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> a(m->vertex_count()), b(m->vertex_count());
  for (auto& x : a) x = unif(rng);
  for (auto& x : b) x = unif(rng);
  auto ua = solve(m, spec, a).solution.values;
  auto ub = solve(m, spec, b).solution.values;
  // equal up to the additive gauge
  CHECK(sup_diff(ua, ub, ua[0] - ub[0]) <= 1e-8);

  auto bad = ProblemSpec::sampled(
      *m, 1.5, [](const Point&) { return 0.0; }, [](const Point&) { return 0.0; }, [](const Point&) { return 1.0; });
  CHECK_THROWS_AS(solve(m, bad), std::invalid_argument);
}

TEST_CASE("validation") {
  auto m = box(4);
  auto spec = ProblemSpec::constant(*m, 2.5, 1.0, 1.0);
  CHECK_THROWS_AS(solve(m, spec), std::invalid_argument);
  spec = ProblemSpec::constant(*m, 1.5, -1.0, 1.0);
  CHECK_THROWS_AS(solve(m, spec), std::invalid_argument);
  spec = ProblemSpec::constant(*m, 1.5, 1.0, 1.0);
  spec.f.pop_back();
  CHECK_THROWS_AS(solve(m, spec), std::invalid_argument);
}

TEST_CASE("newton budget exhaustion raises a convergence error") {
  auto m = box(8);
  auto spec = ProblemSpec::sampled(
      *m, 1.25, [](const Point&) { return 1.0; }, [](const Point& x) { return 1.0 + 5.0 * x.x * x.y; }, {});
  spec.max_newton = 1;
  CHECK_THROWS_AS(solve(m, spec), ConvergenceError);
}

TEST_CASE("dirichlet data are honoured") {
  auto m = box(8);
  auto spec = ProblemSpec::constant(*m, 2.0, 0.0, 0.0);
  // u = x on the left and right walls, harmonic inside: exact for P1
  for (std::size_t v = 0; v < m->vertex_count(); ++v) {
    double x = m->vertices[v].x;
    if (x == 0.0 || x == 1.0) {
      spec.dirichlet_vertices.push_back(static_cast<int>(v));
      spec.dirichlet_values.push_back(x);
    }
  }
  auto u = solve(m, spec).solution;
  for (std::size_t v = 0; v < m->vertex_count(); ++v) CHECK(u.values[v] == doctest::Approx(m->vertices[v].x));
}

TEST_CASE("manufactured convergence") {
  auto rep = manufactured_convergence(4, 8);
  REQUIRE(rep.levels.size() == 4u);
  for (double r : rep.l2_rates) CHECK(r >= 1.9);
  for (double r : rep.h1_rates) CHECK(r >= 0.9);
  for (std::size_t i = 1; i < rep.levels.size(); ++i) CHECK(rep.levels[i].energy < rep.levels[i - 1].energy);
}

TEST_CASE("agreement with derivative-free minimization") {
  for (const auto& sm : small_meshes()) {
    CHECK(sm.mesh->vertex_count() <= 12u);
    auto spec = ProblemSpec::sampled(
        *sm.mesh, 1.5, [](const Point& x) { return 0.5 + x.y; }, [](const Point& x) { return 2.0 - x.x; }, {});
    auto rep = solve(sm.mesh, spec);
    double eps = rep.epsilon_trace.back();
    auto brute = coordinate_search(*sm.mesh, spec, eps, std::vector<double>(sm.mesh->vertex_count(), 0.0));
    CHECK(std::abs(discrete_energy(*sm.mesh, spec, brute, eps) - discrete_energy(*sm.mesh, spec, rep.solution.values, eps)) <=
          1e-6);
    CHECK(sup_diff(brute, rep.solution.values) <= 1e-4);
  }
}

TEST_CASE("energy and residual") {
  auto m = box(4);
  auto spec = ProblemSpec::constant(*m, 2.0, 1.0, 1.0);
  std::vector<double> one(m->vertex_count(), 1.0);
  // (1/2) eps^2 area + (1/2) (1 + eps^2) - 1 at eps -> 0
  CHECK(discrete_energy(*m, spec, one, 1e-12) == doctest::Approx(-0.5));
  CHECK(euler_lagrange_residual(*m, spec, one) <= 1e-14);
}

TEST_CASE("problem files") {
  auto m = box(2);
  std::stringstream ss("p = 1.5  # exponent\nb = 2\nf = 3\noperator = plap\n");
  auto spec = read_problem(ss, *m, "");
  CHECK(spec.p == 1.5);
  CHECK(spec.b == std::vector<double>(m->triangle_count(), 2.0));
  CHECK(spec.f == std::vector<double>(m->triangle_count(), 3.0));

  auto dir = std::filesystem::temp_directory_path() / "nsl_problem_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "dir.csv");
    csv << "vertex_id,value\n0,1.5\n4,-2\n";
    std::ofstream prob(dir / "prob.toml");
    prob << "p = 2\ndirichlet = \"dir.csv\"\n";
  }
  auto loaded = load_problem((dir / "prob.toml").string(), *m);
  CHECK(loaded.dirichlet_vertices == std::vector<int>{0, 4});
  CHECK(loaded.dirichlet_values == std::vector<double>{1.5, -2.0});

  std::stringstream unknown("q = 2\n");
  CHECK_THROWS_AS(read_problem(unknown, *m, ""), IoError);
  std::stringstream missing("f = nowhere.csv\n");
  CHECK_THROWS_AS(read_problem(missing, *m, dir.string()), IoError);
  CHECK_THROWS_AS(load_problem("/nonexistent/prob.toml", *m), IoError);
}
