#pragma once

// Domain sequences converging in the Hausdorff complementary sense and the
// stability runner comparing zero-extended solutions along them.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsl/solver.hpp"

namespace nsl {

enum class SequenceKind { shrinking_hole, fixed_crack_opening, fattening_obstacle, moving_hole, maly_martio_stagewise };

std::string to_string(SequenceKind kind);
SequenceKind parse_sequence_kind(const std::string& name);

struct DomainSequence {
  SequenceKind kind = SequenceKind::shrinking_hole;
  int stages = 6;        // members are indexed 1..stages
  int resolution = 64;   // common grid for every member and the limit
  double r0 = 0.5;       // hole half-width / crack half-thickness, scaled by 2^-n; the moving hole keeps half-width r0/2
  double w0 = 0.5;       // comb width
  double m0 = 0.05;      // comb: measure kept by the slots between the teeth
  Point center{0.5, 0.5};  // hole or comb centre
  /// Comb only: also remove a square hole of half-width r0 2^-n here.
  std::optional<Point> hole_center;
  Box box;

  /// Bound l on the number of complement components of every member.
  int component_bound() const;
};

/// Member n (1 <= n <= stages). Throws invalid_argument outside the range
/// or when the member breaks the component bound.
PixelDomain generate(const DomainSequence& seq, int n);
PixelDomain limit(const DomainSequence& seq);

/// Problem data as functions, instantiated per mesh.
struct ProblemTemplate {
  double p = 2.0;
  ScalarFunction b = [](const Point&) { return 1.0; };
  ScalarFunction f = [](const Point&) { return 1.0; };
  ScalarFunction g;  // empty means zero
  ProblemSpec instantiate(const CrackMesh& mesh) const;
};

enum class Verdict { stable, unstable, inconclusive };
std::string to_string(Verdict v);

struct StabilityRow {
  int index = 0;
  double dH_complement = 0.0;
  double meas = 0.0;
  double meas_bpos = 0.0;
  double grad_gap = 0.0;
  double field_gap = 0.0;
  bool failed = false;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double limit_meas = 0.0;
  double limit_meas_bpos = 0.0;
  int component_bound = 0;
  Verdict verdict = Verdict::inconclusive;
  // refinement sweep on the last member (only when requested)
  std::optional<double> sweep_gap_fine;
  bool resolution_dominated = false;
};

/// Verdict from the traces:
///  - every gap below 1e-9 -> stable;
///  - stable when grad_gap and field_gap each end below 0.1 x their first value
///    (or vanish) and are nonincreasing over the final half, and meas_bpos
///    converges to the limit value (final error <= 0.1 x first error or 1e-12);
///  - unstable when grad_gap ends at >= 0.5 x its maximum;
///  - inconclusive otherwise or when any row failed.
Verdict judge(const std::vector<StabilityRow>& rows, double limit_meas_bpos);

StabilityReport run_stability(const DomainSequence& seq, const ProblemTemplate& problem, bool refinement_sweep = false);

void write_stability_csv(std::ostream& out, const StabilityReport& report);

/// min over P1 fields v on Omega_n of the W^{1,2} distance between zero
/// extensions, evaluated as ||grad v 1_n - grad u 1||_p + ||v 1_n - u 1||_p.
double mosco_m1_probe(const PixelDomain& omega_n, const PixelDomain& omega, const NodalField& u, double p);

struct M2Row {
  int index = 0;
  double outside_value = 0.0;     // L1 of the averaged phi on cells outside Omega
  double outside_gradient = 0.0;  // L1 of the averaged Phi on cells outside Omega
  double gauss_defect = 0.0;      // max over blocks meshed by both Omega and the member of |int Phi - oint phi nu| / block area
};

struct M2Report {
  std::vector<M2Row> rows;
  double max_defect = 0.0;  // of the last member
};

/// Weak-limit surrogates of the zero extensions of u_n and grad u_n on
/// blocks of `block` x `block` cells of the limit grid.
M2Report mosco_m2_probe(const std::vector<NodalField>& fields, const PixelDomain& omega, int block = 4);

// Sequence config: "key = value" lines with kind, stages, r0, w0, m0, resolution.
DomainSequence read_sequence(std::istream& in);
DomainSequence load_sequence(const std::string& path);

}  // namespace nsl
