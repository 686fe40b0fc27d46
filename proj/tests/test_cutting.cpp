#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "nsl/cutting.hpp"

using namespace nsl;

namespace {

MeshPtr box(int n) { return std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(n))); }

double mixed(const Point& x) { return x.x * x.x + 0.5 * x.y + std::sin(3.0 * x.x * x.y); }

std::vector<int> row_path(const CrackMesh& m, int n, double y, int i0, int i1) {
  std::vector<int> path;
  for (int i = i0; i <= i1; ++i) path.push_back(snap_terminal(m, {double(i) / n, y}));
  return path;
}

}  // namespace

TEST_CASE("terminal snapping") {
  auto m = box(4);
  int v = snap_terminal(*m, {0.26, 0.49});
  CHECK(m->vertices[v] == Point{0.25, 0.5});
  CHECK_THROWS_AS(snap_terminal(*m, {1.5, 0.5}), std::invalid_argument);
  auto holed = std::make_shared<const CrackMesh>(
      triangulate(PixelDomain::full(4).with_cell(1, 1, false).with_cell(2, 1, false)));
  CHECK_THROWS_AS(snap_terminal(*holed, {0.5, 0.3}), std::invalid_argument);
}

TEST_CASE("cut energies") {
  auto m = box(8);
  auto single = path_cut(m, row_path(*m, 8, 0.5, 3, 4));

  CutProblem constant{m, 1.5, 1e-8, {}, [](const Point&) { return 2.0; }};
  auto c = cut_energy(constant, single);
  CHECK(std::abs(c.energy) <= 1e-12);
  for (double v : c.solution.values) CHECK(v == doctest::Approx(2.0));

  // an interior edge does not relieve u = x, whose Dirichlet energy is 1
  CutProblem linear{m, 2.0, 1e-8, {}, [](const Point& x) { return x.x; }};
  CHECK(cut_energy(linear, single).energy == doctest::Approx(1.0).epsilon(1e-8));

  // a cut across the whole box removes the constraint along it
  auto across = path_cut(m, row_path(*m, 8, 0.5, 0, 8));
  CutProblem vertical{m, 2.0, 1e-8, {}, [](const Point& x) { return x.y; }};
  CHECK(cut_energy(vertical, across).energy < cut_energy(vertical, single).energy - 0.1);

  // doubling the weight doubles the energy
  CutProblem weighted = linear;
  weighted.p = 1.5;
  weighted.g = mixed;
  CutProblem doubled = weighted;
  doubled.a = [](const Point&) { return 2.0; };
  auto k = path_cut(m, row_path(*m, 8, 0.5, 1, 5));
  CHECK(cut_energy(doubled, k).energy == doctest::Approx(2.0 * cut_energy(weighted, k).energy).epsilon(1e-6));
}

TEST_CASE("larger cuts never raise the energy") {
  auto m = box(6);
  CutProblem prob{m, 1.5, 1e-8, {}, mixed};
  auto k = path_cut(m, row_path(*m, 6, 0.5, 1, 3));
  EdgeTable table(*m);
  auto bigger = k.edges;
  int a = snap_terminal(*m, {2.0 / 6, 0.5}), b = snap_terminal(*m, {2.0 / 6, 4.0 / 6});
  bigger.push_back(table.find(a, b));
  std::sort(bigger.begin(), bigger.end());
  auto kk = CutPath::from_edges(m, bigger, k.terminal1, k.terminal2);
  CHECK(cut_energy(prob, kk).energy <= cut_energy(prob, k).energy + 1e-10);
}

TEST_CASE("path enumeration") {
  auto m = box(2);
  int a = snap_terminal(*m, {0.0, 0.0}), b = snap_terminal(*m, {1.0, 1.0});
  auto paths = enumerate_paths(*m, a, b, 2);
  // only the diagonal through the centre has two edges
  REQUIRE(paths.size() == 1u);
  CHECK(paths[0].size() == 3u);
  auto more = enumerate_paths(*m, a, b, 8);
  CHECK(std::is_sorted(more.begin(), more.end()));
  for (const auto& p : more) {
    CHECK(p.front() == a);
    CHECK(p.back() == b);
    std::set<int> seen(p.begin(), p.end());
    CHECK(seen.size() == p.size());
  }
}

TEST_CASE("ranking") {
  CHECK(better_cut(2.0, {1, 2, 3}, 1.0, {1}));
  CHECK(better_cut(1.0, {4}, 1.0 + 1e-12, {1, 2}));
  CHECK(better_cut(1.0, {1, 2}, 1.0, {1, 3}));
  CHECK_FALSE(better_cut(1.0, {1, 3}, 1.0, {1, 2}));
}

TEST_CASE("annealing matches enumeration") {
  auto m = box(4);
  CutProblem prob{m, 1.5, 1e-8, {}, mixed};

  SUBCASE("adjacent terminals") {
    int t1 = snap_terminal(*m, {0.25, 0.5}), t2 = snap_terminal(*m, {0.5, 0.5});
    auto exact = best_cut_by_enumeration(prob, t1, t2, 6);
    auto opt = optimize_cut(prob, t1, t2, 1000, 7, 6);
    CHECK(opt.best.cut.edges == exact.cut.edges);
    CHECK(opt.best.energy == doctest::Approx(exact.energy).epsilon(1e-8));
  }

  SUBCASE("terminals two cells apart") {
    CutProblem saddle{m, 2.0, 1e-8, {}, [](const Point& x) { return x.x * x.x - x.y * x.y; }};
    int t1 = snap_terminal(*m, {0.25, 0.25}), t2 = snap_terminal(*m, {0.75, 0.5});
    auto exact = best_cut_by_enumeration(saddle, t1, t2, 5);
    auto opt = optimize_cut(saddle, t1, t2, 3000, 11, 5);
    CHECK(opt.best.cut.edges == exact.cut.edges);
    CHECK(opt.best.energy == doctest::Approx(exact.energy).epsilon(1e-8));
    CHECK(opt.trace.size() == 3000u);
  }

  SUBCASE("constant data keeps the initial shortest path") {
    CutProblem flat{m, 1.5, 1e-8, {}, [](const Point&) { return 1.0; }};
    int t1 = snap_terminal(*m, {0.25, 0.25}), t2 = snap_terminal(*m, {0.75, 0.25});
    auto opt = optimize_cut(flat, t1, t2, 200, 3);
    CHECK(opt.best.cut.edges.size() == 2u);
    CHECK(std::abs(opt.best.energy) <= 1e-12);
  }
}

TEST_CASE("annealing is deterministic per seed") {
  auto m = box(4);
  CutProblem prob{m, 1.5, 1e-8, {}, mixed};
  int t1 = snap_terminal(*m, {0.25, 0.25}), t2 = snap_terminal(*m, {0.75, 0.75});
  auto a = optimize_cut(prob, t1, t2, 300, 5);
  auto b = optimize_cut(prob, t1, t2, 300, 5);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].energy == b.trace[i].energy);
    CHECK(a.trace[i].accepted == b.trace[i].accepted);
  }
  CHECK(a.best.cut.edges == b.best.cut.edges);
}

TEST_CASE("detours and cut stability") {
  const int n = 16;
  auto m = box(n);
  auto k = path_cut(m, row_path(*m, n, 0.5, 4, 12));
  auto seq = detour_sequence(k, snap_terminal(*m, {0.5, 0.5}), 3);
  REQUIRE(seq.size() == 3u);
  for (int i = 0; i < 3; ++i) {
    double side = std::ldexp(1.0, 3 - (i + 1)) / n;
    CHECK(cut_distance(seq[i], k) == doctest::Approx(side));
    // the square's first side runs along K
    CHECK(seq[i].edges.size() == k.edges.size() + static_cast<std::size_t>(3 * std::ldexp(1.0, 3 - (i + 1))));
  }
  CHECK(cut_distance(k, k) == 0.0);

  CutProblem prob{m, 1.5, 1e-8, {}, [](const Point& x) { return x.x; }};
  auto same = cut_stability(prob, {k, k}, k);
  for (double g : same.grad_gap) CHECK(g <= 1e-8);
  auto rep = cut_stability(prob, seq, k);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    CHECK(rep.hausdorff[i] < rep.hausdorff[i - 1]);
    CHECK(rep.grad_gap[i] < rep.grad_gap[i - 1]);
  }
}

TEST_CASE("cut files") {
  auto m = box(4);
  auto k = path_cut(m, row_path(*m, 4, 0.5, 0, 3));
  std::stringstream ss;
  write_cut(ss, k);
  CHECK(ss.str().rfind("cut 3\n", 0) == 0);
  auto back = read_cut(ss, m);
  CHECK(back.edges == k.edges);
  CHECK(back.terminal1 == k.terminal1);
  CHECK(back.terminal2 == k.terminal2);

  // without the terminals line they come from the path ends
  std::stringstream bare;
  bare << "cut " << k.edges.size() << "\n";
  for (int e : k.edges) bare << e << "\n";
  auto inferred = read_cut(bare, m);
  CHECK(std::min(inferred.terminal1, inferred.terminal2) == std::min(k.terminal1, k.terminal2));
  CHECK(std::max(inferred.terminal1, inferred.terminal2) == std::max(k.terminal1, k.terminal2));

  std::stringstream bad("cut 2\n0\n");
  CHECK_THROWS_AS(read_cut(bad, m), IoError);
  std::stringstream range("cut 1\n9999\n");
  CHECK_THROWS_AS(read_cut(range, m), IoError);

  std::stringstream trace;
  write_trace_csv(trace, {{1, 0.5, true, 2.0}, {2, 0.25, false, 1.9}});
  std::string header;
  std::getline(trace, header);
  CHECK(header == "step,energy,accepted,temperature");
}
