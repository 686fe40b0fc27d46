#include <doctest.h>

#include <set>
#include <sstream>

#include "nsl/mesh.hpp"
#include "nsl/solver.hpp"

using namespace nsl;

namespace {

int vertex_at(const CrackMesh& m, Point x) {
  for (std::size_t v = 0; v < m.vertex_count(); ++v)
    if (distance(m.vertices[v], x) < 1e-12) return static_cast<int>(v);
  FAIL("no vertex at (" << x.x << ", " << x.y << ")");
  return -1;
}

// Horizontal cut along y = y0 from x = x0 to x = x1 on a grid of step h.
std::vector<Edge> horizontal_cut(const CrackMesh& m, double y0, double x0, double x1, double h) {
  std::vector<Edge> cut;
  for (double x = x0; x < x1 - 1e-12; x += h) cut.push_back(make_edge(vertex_at(m, {x, y0}), vertex_at(m, {x + h, y0})));
  return cut;
}

}  // namespace

TEST_CASE("triangulation counts") {
  auto one = triangulate(PixelDomain::full(1));
  CHECK(one.triangle_count() == 2u);
  CHECK(one.vertex_count() == 4u);
  for (int n : {2, 5, 8}) {
    auto m = triangulate(PixelDomain::full(n));
    CHECK(m.triangle_count() == static_cast<std::size_t>(2 * n * n));
    CHECK(m.vertex_count() == static_cast<std::size_t>((n + 1) * (n + 1)));
    CHECK(m.total_area() == doctest::Approx(1.0));
    auto holed = triangulate(PixelDomain::full(n).with_cell(1, 1, false));
    CHECK(holed.triangle_count() == static_cast<std::size_t>(2 * n * n - 2));
  }
  // counterclockwise orientation
  auto m = triangulate(PixelDomain::full(3));
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    CHECK(cross(m.vertices[tri[1]] - m.vertices[tri[0]], m.vertices[tri[2]] - m.vertices[tri[0]]) > 0.0);
  }
}

TEST_CASE("edge table") {
  auto m = triangulate(PixelDomain::full(2));
  EdgeTable table(m);
  // 12 grid edges + 4 diagonals
  CHECK(table.size() == 16u);
  CHECK(std::is_sorted(table.edges().begin(), table.edges().end()));
  int a = vertex_at(m, {0.0, 0.0}), b = vertex_at(m, {0.5, 0.5}), c = vertex_at(m, {0.5, 0.0});
  CHECK(table.find(a, b) >= 0);
  CHECK(table.find(b, a) == table.find(a, b));
  CHECK(table.find(a, vertex_at(m, {1.0, 1.0})) == -1);
  int d = vertex_at(m, {0.0, 0.5});
  std::vector<int> expected{b, c, d};
  std::sort(expected.begin(), expected.end());
  CHECK(table.adjacency()[a] == expected);
}

TEST_CASE("slit") {
  const int n = 8;
  const double h = 1.0 / n;
  auto m = triangulate(PixelDomain::full(n));

  SUBCASE("empty cut leaves the mesh unchanged") {
    auto s = slit(m, {});
    CHECK(s.vertices == m.vertices);
    CHECK(s.triangles == m.triangles);
  }

  SUBCASE("interior slit of k edges adds k-1 vertices") {
    for (int k : {1, 2, 4}) {
      auto s = slit(m, horizontal_cut(m, 0.5, 2 * h, (2 + k) * h, h));
      CHECK(s.vertex_count() == m.vertex_count() + static_cast<std::size_t>(k - 1));
      CHECK(s.crack_edges.size() == static_cast<std::size_t>(k));
      CHECK(s.triangles.size() == m.triangles.size());
      CHECK(mesh_components(s).count == 1);
    }
  }

  SUBCASE("a slit reaching the outer boundary opens its endpoint") {
    auto s = slit(m, horizontal_cut(m, 0.5, 0.0, 3 * h, h));
    CHECK(s.vertex_count() == m.vertex_count() + 3);
  }

  SUBCASE("a slit across the box splits the mesh and allows a jump") {
    auto s = std::make_shared<const CrackMesh>(slit(m, horizontal_cut(m, 0.5, 0.0, 1.0, h)));
    CHECK(mesh_components(*s).count == 2);
    // antisymmetric data: with p = 2 and b = 1 the solution equals f exactly
    auto spec = ProblemSpec::sampled(
        *s, 2.0, [](const Point&) { return 1.0; }, [](const Point& x) { return x.y > 0.5 ? 1.0 : -1.0; }, {});
    auto u = solve(s, spec).solution;
    for (std::size_t v = 0; v < s->vertex_count(); ++v) CHECK(std::abs(std::abs(u.values[v]) - 1.0) < 1e-8);
    int below = 0, above = 0;
    for (std::size_t v = 0; v < s->vertex_count(); ++v)
      if (std::abs(s->vertices[v].y - 0.5) < 1e-12) (u.values[v] > 0 ? above : below)++;
    CHECK(above == n + 1);
    CHECK(below == n + 1);
  }

  SUBCASE("origins map copies back") {
    auto s = slit(m, horizontal_cut(m, 0.5, 2 * h, 6 * h, h));
    for (std::size_t v = 0; v < s.vertex_count(); ++v)
      CHECK(distance(s.vertices[v], m.vertices[s.origin[v]]) == 0.0);
  }

  SUBCASE("edges that are not mesh edges are rejected") {
    std::vector<Edge> bogus{make_edge(vertex_at(m, {0.0, 0.0}), vertex_at(m, {1.0, 1.0}))};
    CHECK_THROWS_AS(slit(m, bogus), std::invalid_argument);
  }
}

TEST_CASE("refinement") {
  auto m = triangulate(PixelDomain::full(4).with_cell(2, 1, false));
  auto cut = slit(m, horizontal_cut(m, 0.5, 0.0, 0.5, 0.25));
  auto r = refine(cut);
  CHECK(r.triangle_count() == 4 * cut.triangle_count());
  CHECK(r.total_area() == doctest::Approx(cut.total_area()).epsilon(1e-15));
  CHECK(r.crack_edges.size() == 2 * cut.crack_edges.size());
  CHECK(r.grid.n == 2 * cut.grid.n);
  CHECK(mesh_components(r).count == mesh_components(cut).count);
  for (std::size_t t = 0; t < r.triangle_count(); ++t) {
    // children lie in their parent
    CHECK(triangle_key(r, t, cut.grid) == triangle_key(cut, static_cast<std::size_t>(r.parent_triangle[t]), cut.grid));
  }
}

TEST_CASE("triangle keys are unique on a full grid") {
  auto m = triangulate(PixelDomain::full(5));
  std::set<int> keys;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) keys.insert(triangle_key(m, t, m.grid));
  CHECK(keys.size() == m.triangle_count());
  CHECK(*keys.rbegin() == 2 * 25 - 1);
}

TEST_CASE("cut paths") {
  auto mesh = std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(4)));
  std::vector<int> path{vertex_at(*mesh, {0.25, 0.25}), vertex_at(*mesh, {0.5, 0.25}), vertex_at(*mesh, {0.5, 0.5})};
  auto cut = CutPath::from_vertex_path(mesh, path);
  CHECK(cut.edges.size() == 2u);
  CHECK(cut.terminal1 == path.front());
  CHECK(cut.terminal2 == path.back());
  CHECK_NOTHROW(cut.validate());
  CHECK_THROWS_AS(CutPath::from_edges(mesh, {cut.edges.front()}, path.front(), path.back()), std::invalid_argument);
  CHECK_THROWS_AS(CutPath::from_vertex_path(mesh, {path[0], vertex_at(*mesh, {1.0, 1.0})}), std::invalid_argument);
}

TEST_CASE("mesh files round trip") {
  auto m = triangulate(PixelDomain::full(4));
  auto s = slit(m, horizontal_cut(m, 0.5, 0.0, 0.5, 0.25));
  std::stringstream ss;
  write_mesh(ss, s);
  auto back = read_mesh(ss);
  CHECK(back.vertices == s.vertices);
  CHECK(back.triangles == s.triangles);
  CHECK(back.crack_edges.size() == s.crack_edges.size());
  CHECK(back.boundary_edges.size() == s.boundary_edges.size());
  CHECK(back.origin == s.origin);
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.txt"), IoError);
}
