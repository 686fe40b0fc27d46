#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "nsl/fem.hpp"

using namespace nsl;

namespace {

MeshPtr box(int n) { return std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(n))); }

NodalField random_field(MeshPtr m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(m->vertex_count());
  for (auto& x : v) x = unif(rng);
  return {m, v};
}

}  // namespace

TEST_CASE("gradients of affine fields are exact") {
  auto m = box(6);
  for (const auto& w : gradient(NodalField::interpolate(m, [](const Point&) { return 2.5; })).vectors) {
    CHECK(w.x == 0.0);
    CHECK(w.y == 0.0);
  }
  for (const auto& w : gradient(NodalField::interpolate(m, [](const Point& x) { return x.x; })).vectors) {
    CHECK(w.x == doctest::Approx(1.0));
    CHECK(w.y == doctest::Approx(0.0).epsilon(1e-12));
  }
  for (const auto& w : gradient(NodalField::interpolate(m, [](const Point& x) { return 3 * x.x + 4 * x.y - 1; })).vectors) {
    CHECK(w.x == doctest::Approx(3.0));
    CHECK(w.y == doctest::Approx(4.0));
  }
}

TEST_CASE("norms") {
  auto m = box(8);
  EdgeFlux zero(m, std::vector<Vec2>(m->triangle_count()));
  CHECK(lp_norm(zero, 1.5) == 0.0);
  EdgeFlux c(m, std::vector<Vec2>(m->triangle_count(), Vec2{3.0, 4.0}));
  CHECK(lp_norm(c, 2.0) == doctest::Approx(5.0));
  CHECK(lp_norm(c, 1.5) == doctest::Approx(5.0));

  auto m32 = box(32);
  auto u = NodalField::interpolate(m32, [](const Point& x) { return x.x; });
  CHECK(std::abs(lp_norm_scalar(u, 2.0) - 1.0 / std::sqrt(3.0)) <= 0.02 / std::sqrt(3.0));
  // weight 4 doubles the L2 norm
  std::vector<double> w(m32->triangle_count(), 4.0);
  CHECK(lp_norm_scalar(u, 2.0, w) == doctest::Approx(2.0 * lp_norm_scalar(u, 2.0)));
  // W^{1,2} of u = x: sqrt(|u|^2 + 1)
  CHECK(w1p_norm(u, 2.0) == doctest::Approx(std::sqrt(std::pow(lp_norm_scalar(u, 2.0), 2) + 1.0)));
}

TEST_CASE("extension by zero") {
  const int n = 8;
  auto full = PixelDomain::full(n);
  auto m = box(n);
  auto u = NodalField::interpolate(m, [](const Point& x) { return x.x * x.y; });
  auto ext = extend_by_zero(u, full);
  // full-box source: cell averages of the interpolant over the two triangles
  for (std::size_t t = 0; t < m->triangle_count(); t += 2) {
    int cell = triangle_key(*m, t, m->grid) / 2;
    double avg = 0.5 * (u.centroid_value(t) + u.centroid_value(t + 1));
    CHECK(ext.values[cell] == doctest::Approx(avg));
  }

  auto half = full.with_removed([](const Point& x) { return x.x > 0.5; });
  auto hm = std::make_shared<const CrackMesh>(triangulate(half));
  auto one = NodalField::interpolate(hm, [](const Point&) { return 1.0; });
  CHECK(grid_lp_norm(extend_by_zero(one, full), 1.0) == doctest::Approx(0.5));

  auto hole = full.with_cell(3, 3, false).with_cell(4, 3, false);
  CHECK(grid_lp_norm(indicator(full) - indicator(hole), 1.0) ==
        doctest::Approx(lebesgue_measure(full) - lebesgue_measure(hole)));

  // vectors from a refined source average down
  auto fine = std::make_shared<const CrackMesh>(refine(*m));
  auto g = extend_by_zero(gradient(NodalField::interpolate(fine, [](const Point& x) { return 2 * x.x - x.y; })), full);
  for (const auto& v : g.values) {
    CHECK(v.x == doctest::Approx(2.0));
    CHECK(v.y == doctest::Approx(-1.0));
  }
}

TEST_CASE("truncation") {
  auto m = box(8);
  auto u = NodalField::interpolate(m, [](const Point& x) { return x.x - 0.5; });
  CHECK(truncate(u, 1.0).values == u.values);
  auto t = truncate(NodalField::interpolate(m, [](const Point& x) { return 2 * x.x - 1; }), 0.5);
  for (double v : t.values) CHECK(std::abs(v) <= 0.5);
  auto g = gradient(t);
  for (std::size_t k = 0; k < m->triangle_count(); ++k) {
    bool clamped = true;
    double sign = 0.0;
    for (int v : m->triangles[k]) {
      clamped = clamped && std::abs(t.values[v]) == 0.5;
      sign += t.values[v];
    }
    if (clamped && std::abs(sign) == 1.5) CHECK(norm(g.vectors[k]) == 0.0);
  }
}

TEST_CASE("level flattening") {
  std::vector<double> zero{0.0};
  for (double y : {-2.0, -0.7, -0.5, -0.2, 0.0, 0.3, 0.5, 0.9, 3.0}) {
    double expected = std::abs(y) <= 0.5 ? 0.0 : y - std::copysign(0.5, y);
    CHECK(flatten_level_map(y, zero, 2) == doctest::Approx(expected));
  }
  auto m = box(6);
  auto c = NodalField::interpolate(m, [](const Point&) { return 0.3; });
  std::vector<double> lv{0.3};
  auto fc = flatten_levels(c, lv, 4);
  for (const auto& w : gradient(fc).vectors) CHECK(norm(w) == 0.0);

  // distance to phi shrinks as n grows
  auto phi = NodalField::interpolate(box(16), [](const Point& x) { return std::sin(3 * x.x) * x.y; });
  std::vector<double> levels{0.0, 0.5};
  double prev = 1e300;
  for (int n = 2; n <= 128; n *= 2) {
    auto f = flatten_levels(phi, levels, n);
    std::vector<double> diff(f.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f.values[i] - phi.values[i];
    double d = w1p_norm(NodalField(phi.mesh, diff), 1.5);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("mean normalization") {
  auto m = box(5);
  std::vector<int> all(m->triangle_count());
  std::iota(all.begin(), all.end(), 0);
  auto c = NodalField::interpolate(m, [](const Point&) { return 7.0; });
  for (double v : mean_normalize(c, all).values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
  auto u = random_field(m, 2);
  auto once = mean_normalize(u, all);
  auto twice = mean_normalize(once, all);
  for (std::size_t i = 0; i < once.values.size(); ++i) CHECK(twice.values[i] == doctest::Approx(once.values[i]));
}

TEST_CASE("helmholtz split") {
  auto m = box(8);
  auto v = NodalField::interpolate(m, [](const Point& x) { return std::sin(2 * x.x) + x.y * x.y; });
  auto gv = gradient(v);
  auto s1 = helmholtz_split(gv);
  CHECK(lp_norm(s1.solenoidal_part, 2.0) <= 1e-10 * lp_norm(gv, 2.0));

  // R grad v is solenoidal only when v vanishes on the boundary
  auto bubble = random_field(m, 5);
  for (const auto& e : m->boundary_edges) {
    bubble.values[static_cast<std::size_t>(e.a)] = 0.0;
    bubble.values[static_cast<std::size_t>(e.b)] = 0.0;
  }
  auto rv = rotate90(gradient(bubble));
  auto s2 = helmholtz_split(rv);
  CHECK(lp_norm(s2.gradient_part, 2.0) <= 1e-10 * lp_norm(rv, 2.0));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::vector<Vec2> raw(m->triangle_count());
  for (auto& w : raw) w = {normal(rng), normal(rng)};
  EdgeFlux w(m, raw);
  auto s = helmholtz_split(w);
  auto sum = s.gradient_part + s.solenoidal_part;
  for (std::size_t t = 0; t < raw.size(); ++t) CHECK(norm(sum.vectors[t] - raw[t]) <= 1e-12);
  CHECK(std::abs(inner_product(s.gradient_part, s.solenoidal_part)) <= 1e-10);
  // the solenoidal part is orthogonal to every gradient
  CHECK(std::abs(inner_product(s.solenoidal_part, gradient(random_field(m, 11)))) <= 1e-10);
}

TEST_CASE("prolongation reproduces the coarse interpolant") {
  auto m = box(4);
  auto fine = std::make_shared<const CrackMesh>(refine(*m));
  auto u = NodalField::interpolate(m, [](const Point& x) { return 1 + 2 * x.x - 3 * x.y; });
  auto p = prolong(u, fine);
  for (std::size_t v = 0; v < fine->vertex_count(); ++v)
    CHECK(p.values[v] == doctest::Approx(1 + 2 * fine->vertices[v].x - 3 * fine->vertices[v].y));
}

TEST_CASE("field csv round trip") {
  auto m = box(3);
  auto u = random_field(m, 4);
  std::stringstream ss;
  write_field_csv(ss, u, "m.txt");
  CHECK(ss.str().rfind("# mesh m.txt\nvertex_id,value\n", 0) == 0);
  auto back = read_field_csv(ss);
  REQUIRE(back.size() == u.values.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == u.values[i]);
}
