#include <doctest.h>

#include <sstream>

#include "nsl/experiments.hpp"

using namespace nsl;

namespace {

MeshPtr mesh_of(const PixelDomain& d) { return std::make_shared<const CrackMesh>(triangulate(d)); }

DomainSequence sequence(SequenceKind kind, int stages, int resolution) {
  DomainSequence s;
  s.kind = kind;
  s.stages = stages;
  s.resolution = resolution;
  return s;
}

StabilityRow row(int i, double grad, double field, double meas_bpos = 1.0) {
  StabilityRow r;
  r.index = i;
  r.grad_gap = grad;
  r.field_gap = field;
  r.meas_bpos = meas_bpos;
  return r;
}

}  // namespace

TEST_CASE("built-in sequences converge in the complementary Hausdorff sense") {
  for (auto kind : {SequenceKind::shrinking_hole, SequenceKind::fixed_crack_opening, SequenceKind::fattening_obstacle,
                    SequenceKind::moving_hole, SequenceKind::maly_martio_stagewise}) {
    CAPTURE(to_string(kind));
    auto seq = sequence(kind, 5, 64);
    auto lim = limit(seq);
    double prev = 1e300;
    for (int n = 1; n <= seq.stages; ++n) {
      auto d = generate(seq, n);
      CHECK(complement_components(d).count <= seq.component_bound());
      double dist = complementary_distance(d, lim);
      CHECK(dist <= prev + 1e-12);
      prev = dist;
    }
    CHECK(prev <= 0.1);
  }
}

TEST_CASE("shrinking holes fill the box") {
  auto seq = sequence(SequenceKind::shrinking_hole, 6, 64);
  double prev = 0.0;
  for (int n = 1; n <= 6; ++n) {
    double m = lebesgue_measure(generate(seq, n));
    CHECK(m > prev);
    prev = m;
  }
  CHECK(lebesgue_measure(limit(seq)) == doctest::Approx(1.0));
  CHECK(1.0 - prev <= 4.0 / (64.0 * 64.0) + 1e-12);
}

TEST_CASE("comb teeth keep the slot measure") {
  auto seq = sequence(SequenceKind::fattening_obstacle, 5, 64);
  seq.m0 = 0.05;
  double lim = lebesgue_measure(limit(seq));
  for (int n = 1; n <= seq.stages; ++n) {
    double kept = lebesgue_measure(generate(seq, n)) - lim;
    CHECK(kept >= seq.m0 - 1e-12);
    CHECK(kept <= 2.0 * seq.m0);
  }
  CHECK_THROWS_AS(generate(seq, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate(seq, 6), std::invalid_argument);
  seq.stages = 9;  // the slots would be narrower than one cell
  CHECK_THROWS_AS(generate(seq, 9), std::invalid_argument);
}

TEST_CASE("verdict rules") {
  CHECK(judge({row(1, 0, 0), row(2, 0, 0)}, 1.0) == Verdict::stable);
  CHECK(judge({row(1, 1.0, 0.5), row(2, 0.3, 0.2), row(3, 0.05, 0.01)}, 1.0) == Verdict::stable);
  // the gradient gap does not decay
  CHECK(judge({row(1, 1.0, 0.5), row(2, 0.9, 0.2), row(3, 0.8, 0.01)}, 1.0) == Verdict::unstable);
  // decays but too slowly
  CHECK(judge({row(1, 1.0, 0.5), row(2, 0.5, 0.2), row(3, 0.3, 0.01)}, 1.0) == Verdict::inconclusive);
  // weighted measure fails to converge
  CHECK(judge({row(1, 1.0, 0.5, 0.8), row(2, 0.3, 0.2, 0.8), row(3, 0.05, 0.01, 0.8)}, 1.0) == Verdict::inconclusive);
  auto failed = row(2, 0, 0);
  failed.failed = true;
  CHECK(judge({row(1, 0, 0), failed}, 1.0) == Verdict::inconclusive);
}

TEST_CASE("stability runs") {
  auto seq = sequence(SequenceKind::shrinking_hole, 4, 32);
  ProblemTemplate unit;
  unit.p = 1.5;
  auto flat = run_stability(seq, unit);
  // u = 1 on every member; only the hole itself separates the fields
  for (const auto& r : flat.rows) CHECK(r.grad_gap <= 1e-9);
  for (std::size_t i = 1; i < flat.rows.size(); ++i) CHECK(flat.rows[i].field_gap < flat.rows[i - 1].field_gap);
  CHECK(flat.verdict == Verdict::stable);

  ProblemTemplate sloped = unit;
  sloped.f = [](const Point& x) { return 1.0 + x.x; };
  auto rep = run_stability(seq, sloped, true);
  REQUIRE(rep.rows.size() == 4u);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].grad_gap < rep.rows[i - 1].grad_gap);
    CHECK(rep.rows[i].dH_complement < rep.rows[i - 1].dH_complement);
  }
  CHECK(rep.verdict == Verdict::stable);
  CHECK(rep.sweep_gap_fine.has_value());

  std::stringstream ss;
  write_stability_csv(ss, rep);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "index,dH_complement,meas,meas_bpos,grad_gap,field_gap");
  int lines = 0;
  for (std::string l; std::getline(ss, l);) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("M1 probe") {
  auto seq = sequence(SequenceKind::shrinking_hole, 5, 32);
  auto omega = limit(seq);
  auto u = NodalField::interpolate(mesh_of(omega), [](const Point& x) { return x.x; });
  CHECK(mosco_m1_probe(omega, omega, u, 1.5) <= 1e-10);
  double prev = 1e300;
  for (int n = 1; n <= seq.stages; ++n) {
    double v = mosco_m1_probe(generate(seq, n), omega, u, 1.5);
    CHECK(v < prev);
    prev = v;
  }

  auto comb = sequence(SequenceKind::fattening_obstacle, 4, 64);
  auto comb_limit = limit(comb);
  auto uc = NodalField::interpolate(mesh_of(comb_limit), [](const Point& x) { return x.x; });
  for (int n = 1; n <= comb.stages; ++n)
    CHECK(mosco_m1_probe(generate(comb, n), comb_limit, uc, 1.5) >= 0.5 * std::pow(comb.m0, 1.0 / 1.5));
}

TEST_CASE("M2 probe") {
  auto seq = sequence(SequenceKind::shrinking_hole, 4, 32);
  auto omega = limit(seq);
  std::vector<NodalField> ones;
  for (int n = 1; n <= seq.stages; ++n)
    ones.push_back(NodalField::interpolate(mesh_of(generate(seq, n)), [](const Point&) { return 1.0; }));
  auto r = mosco_m2_probe(ones, omega);
  CHECK(r.max_defect <= 1e-12);
  for (const auto& row : r.rows) CHECK(row.outside_value == 0.0);

  // members that keep measure outside the limit: the gradient mass there is the lost area
  auto comb = sequence(SequenceKind::fattening_obstacle, 3, 64);
  auto comb_limit = limit(comb);
  std::vector<NodalField> xs;
  for (int n = 1; n <= comb.stages; ++n)
    xs.push_back(NodalField::interpolate(mesh_of(generate(comb, n)), [](const Point& x) { return x.x; }));
  auto rc = mosco_m2_probe(xs, comb_limit);
  for (int n = 1; n <= comb.stages; ++n) {
    double lost = lebesgue_measure(generate(comb, n)) - lebesgue_measure(comb_limit);
    CHECK(rc.rows[n - 1].outside_gradient == doctest::Approx(lost));
  }
  for (const auto& row : rc.rows) CHECK(row.gauss_defect <= 1e-10);
  CHECK(rc.max_defect == doctest::Approx(rc.rows.back().outside_gradient));
}

TEST_CASE("sequence configs") {
  std::stringstream ss("# comb\nkind = fattening_obstacle\nstages = 4\nresolution = 32\nw0 = 0.25\nm0 = 0.02\n");
  auto s = read_sequence(ss);
  CHECK(s.kind == SequenceKind::fattening_obstacle);
  CHECK(s.stages == 4);
  CHECK(s.resolution == 32);
  CHECK(s.w0 == 0.25);
  CHECK(s.m0 == 0.02);
  std::stringstream unknown("kind = shrinking_hole\ncolour = red\n");
  CHECK_THROWS_AS(read_sequence(unknown), IoError);
  std::stringstream no_kind("stages = 3\n");
  CHECK_THROWS_AS(read_sequence(no_kind), IoError);
  std::stringstream bad("kind = shrinking_hole\nstages = many\n");
  CHECK_THROWS_AS(read_sequence(bad), IoError);
  CHECK_THROWS_AS(parse_sequence_kind("spiral"), std::invalid_argument);
  CHECK(parse_sequence_kind(to_string(SequenceKind::moving_hole)) == SequenceKind::moving_hole);
}
