#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nsl/geometry.hpp"

using namespace nsl;

namespace {

// Independent brute force over both point clouds.
double brute_hausdorff(const std::vector<Point>& a, const std::vector<Point>& b) {
  auto one_sided = [](const std::vector<Point>& x, const std::vector<Point>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = 1e300;
      for (const auto& q : y) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

PixelDomain disk(int n) {
  return PixelDomain::full(n, Box{-1.0, -1.0, 2.0}).with_removed([](const Point& x) {
    return x.x * x.x + x.y * x.y > 1.0;
  });
}

}  // namespace

TEST_CASE("hausdorff distance on small point sets") {
  auto k = CompactSet::from_points({{0.0, 0.0}, {1.0, 2.0}});
  CHECK(hausdorff_distance(k, k, 10.0) == 0.0);
  CHECK(hausdorff_distance(CompactSet::from_points({{0.0, 0.0}}), CompactSet::from_points({{3.0, 4.0}}), 10.0) ==
        doctest::Approx(5.0));
  CompactSet empty = CompactSet::from_points({});
  CHECK(hausdorff_distance(empty, k, 7.5) == 7.5);
  CHECK(hausdorff_distance(k, empty, 7.5) == 7.5);
  CHECK(hausdorff_distance(empty, empty, 7.5) == 0.0);
}

TEST_CASE("hausdorff distance of pixel sets matches brute force") {
  Grid grid{12, {}};
  std::mt19937_64 rng(3);
  std::bernoulli_distribution keep(0.15);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a, b;
    for (int c = 0; c < grid.cell_count(); ++c) {
      if (keep(rng)) a.push_back(c);
      if (keep(rng)) b.push_back(c);
    }
    if (a.empty() || b.empty()) continue;
    auto ka = CompactSet::from_cells(grid, a), kb = CompactSet::from_cells(grid, b);
    CHECK(hausdorff_distance(ka, kb, grid.box.diameter()) ==
          doctest::Approx(brute_hausdorff(ka.point_cloud(), kb.point_cloud())).epsilon(1e-12));
  }
}

TEST_CASE("complementary distance") {
  const int n = 64;
  const double h = 1.0 / n;
  auto full = PixelDomain::full(n);
  CHECK(complementary_distance(full, full) == 0.0);

  // small enough that the hole corners are nearer the puncture than the frame
  const double w = 0.125;
  auto holed = full.with_removed([&](const Point& x) { return std::abs(x.x - 0.5) < w && std::abs(x.y - 0.5) < w; });
  auto punctured = full.with_punctures({{0.5, 0.5}});
  CHECK(std::abs(complementary_distance(punctured, holed) - w * std::sqrt(2.0)) <= h * std::sqrt(2.0));
  CHECK(complementary_distance(punctured, holed) ==
        doctest::Approx(brute_hausdorff(complement_in_box(punctured).point_cloud(),
                                        complement_in_box(holed).point_cloud())));

  // one complement cell at the centre: its distance to the box boundary
  auto single = full.with_cell(n / 2, n / 2, false);
  double expected = brute_hausdorff(complement_in_box(full).point_cloud(), complement_in_box(single).point_cloud());
  CHECK(complementary_distance(full, single) == doctest::Approx(expected));
  CHECK(std::abs(complementary_distance(full, single) - 0.5) <= h * std::sqrt(2.0));

  CHECK_THROWS_AS(complementary_distance(full, PixelDomain::full(n, Box{0.0, 0.0, 2.0})), std::invalid_argument);
}

TEST_CASE("complement components") {
  auto full = PixelDomain::full(16);
  CHECK(complement_components(full).count == 1);
  auto holes = full.with_cell(3, 3, false).with_cell(10, 4, false).with_cell(7, 11, false);
  auto lab = complement_components(holes);
  CHECK(lab.count == 4);
  CHECK(lab.representatives.size() == 4u);
  CHECK(lab.labels[holes.grid().index(3, 3)] != lab.labels[holes.grid().index(10, 4)]);
  // a slit of cells touching the boundary merges with the exterior
  auto slit = full;
  for (int j = 0; j < 6; ++j) slit = slit.with_cell(8, j, false);
  CHECK(complement_components(slit).count == 1);
  // cells touching only diagonally are separate components
  auto diag = full.with_cell(5, 5, false).with_cell(6, 6, false);
  CHECK(complement_components(diag).count == 3);
}

TEST_CASE("lebesgue measure") {
  CHECK(lebesgue_measure(PixelDomain::full(8)) == doctest::Approx(1.0));
  auto quarter = PixelDomain::full(8).with_removed(
      [](const Point& x) { return std::abs(x.x - 0.5) < 0.25 && std::abs(x.y - 0.5) < 0.25; });
  CHECK(lebesgue_measure(quarter) == doctest::Approx(0.75));
  double first = std::abs(lebesgue_measure(disk(16)) - M_PI);
  double last = std::abs(lebesgue_measure(disk(256)) - M_PI);
  CHECK(last < first / 8.0);
  CHECK(last < 1e-3);
}

TEST_CASE("premeasure estimates") {
  auto point = CompactSet::from_points({{0.3, 0.7}});
  for (int k = 1; k <= 8; ++k) {
    double delta = std::ldexp(1.0, -k);
    CHECK(premeasure_estimate(point, 0.7, delta) == doctest::Approx(std::pow(delta, 0.7)));
  }
  std::vector<Point> segment;
  for (int i = 0; i <= 4000; ++i) segment.push_back({i / 4000.0, 0.0});
  auto seg = CompactSet::from_points(segment);
  for (int k = 2; k <= 9; ++k) {
    double v = premeasure_estimate(seg, 1.0, std::ldexp(1.0, -k));
    CHECK(v >= 1.0);
    CHECK(v <= 2.0);
  }
  std::vector<Point> geometric;
  for (int j = 0; j <= 20; ++j) geometric.push_back({std::ldexp(1.0, -j), 0.0});
  auto geo = CompactSet::from_points(geometric);
  double prev = 1e300;
  for (int k = 3; k <= 10; ++k) {
    double v = premeasure_estimate(geo, 0.5, std::ldexp(1.0, -k));
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(premeasure_estimate(point, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("admissibility of finitely holed domains") {
  auto holes = PixelDomain::full(64).with_cell(10, 10, false).with_cell(40, 50, false);
  auto rep = is_admissible_estimate(holes, 1.5, default_deltas(holes.grid()));
  CHECK(rep.consistent_with_null_measure);
  CHECK(rep.selection_size == 3u);
}

TEST_CASE("domain files round trip") {
  auto d = PixelDomain::full(8, Box{1.0, -2.0, 4.0}).with_cell(2, 3, false).with_punctures({{2.0, 0.5}});
  std::stringstream ss;
  write_domain(ss, d);
  auto back = read_domain(ss);
  CHECK(back.grid() == d.grid());
  CHECK(back.mask() == d.mask());
  REQUIRE(back.punctures().size() == 1u);
  CHECK(back.punctures()[0] == Point{2.0, 0.5});

  std::stringstream bad("pixeldomain 2 0 0 1\n10\n1x\n");
  CHECK_THROWS_AS(read_domain(bad), IoError);
  CHECK_THROWS_AS(load_domain("/nonexistent/domain.txt"), IoError);
}
