#pragma once

// Regularized p-Laplacian Neumann problems
//   -div(a (|grad u|^2 + eps^2)^{(p-2)/2} grad u) + b |u|^{p-2} u = b f + g
// solved by minimizing the convex primitive with damped Newton steps and
// continuation in eps.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsl/fem.hpp"

namespace nsl {

enum class OperatorKind { plap, scaled };

struct ProblemSpec {
  double p = 2.0;
  OperatorKind op = OperatorKind::plap;
  // Per-triangle data. `a` is only read for the scaled operator.
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> f;
  std::vector<double> g_load;
  std::vector<int> dirichlet_vertices;
  std::vector<double> dirichlet_values;

  double epsilon0 = 1e-2;
  double epsilon_min = 1e-8;
  /// Stop after the first eps level instead of continuing to eps_min.
  bool single_epsilon = false;
  double newton_tol = 1e-10;
  double el_tol = 1e-6;
  int max_newton = 200;

  static ProblemSpec constant(const CrackMesh& mesh, double p, double b, double f, double g = 0.0);
  /// Coefficients sampled at triangle centroids.
  static ProblemSpec sampled(const CrackMesh& mesh, double p, const ScalarFunction& b, const ScalarFunction& f,
                             const ScalarFunction& g);

  double coefficient(std::size_t t) const { return op == OperatorKind::scaled ? a[t] : 1.0; }
  /// Throws invalid_argument on size mismatches, p outside (1,2], b < 0 or eps <= 0.
  void validate(const CrackMesh& mesh) const;
};

struct SolveReport {
  NodalField solution;
  std::vector<double> energy_trace;  // regularized energy, one entry per accepted step and eps level
  int newton_iters = 0;
  double el_residual = 0.0;  // unregularized Euler-Lagrange residual, Euclidean norm over free vertices
  std::vector<double> epsilon_trace;
};

/// (1/p) sum_T a_T area_T s_T^{p/2} + (1/p) sum_i m_i (u_i^2+eps^2)^{p/2} - sum_i F_i u_i,
/// with s_T = |grad u|^2 + eps^2 and lumped weights m_i, load F_i.
double discrete_energy(const CrackMesh& mesh, const ProblemSpec& spec, std::span<const double> u, double eps);

/// Euclidean norm of the unregularized residual over non-Dirichlet vertices.
double euler_lagrange_residual(const CrackMesh& mesh, const ProblemSpec& spec, std::span<const double> u);

/// Throws invalid_argument for incompatible pure-Neumann loads and
/// ConvergenceError when Newton stalls.
SolveReport solve(MeshPtr mesh, const ProblemSpec& spec,
                  std::optional<std::vector<double>> initial = std::nullopt);

struct StructureReport {
  int samples = 0;
  int monotonicity_violations = 0;
  double min_monotonicity_gap = 0.0;
  /// max |gap - a |xi1 - xi2|^2| over the samples; zero for p = 2.
  double max_quadratic_deviation = 0.0;
  double c1 = 0.0;  // coercivity: A(xi).xi >= c1 |xi|^p
  double c2 = 0.0;  // growth: |A(xi)| <= c2 |xi|^{p-1}
  bool pass = false;
};

/// Monte-Carlo check of monotonicity, growth and coercivity for the
/// unregularized operator a |xi|^{p-2} xi.
StructureReport check_structure(const ProblemSpec& spec, int samples, std::uint64_t seed);

struct ConvergenceLevel {
  int n = 0;
  double l2_error = 0.0;
  double h1_error = 0.0;
  double energy = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  std::vector<double> l2_rates;
  std::vector<double> h1_rates;
};

/// p = 2, u* = cos(pi x) cos(pi y) on the unit box, b = 1, h = (2 pi^2 + 1) u*.
ConvergenceReport manufactured_convergence(int levels, int n0 = 8);

// Problem file: lines "key = value" with keys p, epsilon0, operator
// (plap|scaled), a, b, f (constant or per-triangle CSV path), g (CSV path)
// and dirichlet (CSV vertex_id,value). Relative paths resolve against `base_dir`.
ProblemSpec read_problem(std::istream& in, const CrackMesh& mesh, const std::string& base_dir);
ProblemSpec load_problem(const std::string& path, const CrackMesh& mesh);

void write_report(std::ostream& out, const SolveReport& report);

}  // namespace nsl
