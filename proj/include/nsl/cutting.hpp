#pragma once

// Optimal cuts: the energy of a slit domain with boundary datum g imposed
// away from the cut, its maximization over edge paths between two
// terminals, and the stability of minimizers along converging cuts.

#include <iosfwd>
#include <string>
#include <vector>

#include "nsl/fem.hpp"

namespace nsl {

struct CutProblem {
  MeshPtr mesh;  // unslit triangulation of the domain
  double p = 2.0;
  double epsilon = 1e-8;
  ScalarFunction a;  // density weight, empty means 1
  ScalarFunction g;  // boundary datum, defined on the whole box
};

/// Nearest mesh vertex. Throws invalid_argument when x is not in the
/// closure of the meshed domain.
int snap_terminal(const CrackMesh& mesh, const Point& x);

struct CutEnergyReport {
  double energy = 0.0;
  NodalField solution;  // on the slit mesh
  double el_residual = 0.0;
};

/// E(K) = min sum_T a_T area_T ((|grad u|^2 + eps^2)^{p/2} - eps^p) over P1
/// fields on the slit mesh with u = g on outer boundary vertices off the cut.
CutEnergyReport cut_energy(const CutProblem& problem, const CutPath& cut);

/// Vertex path -> cut. The path must be simple and follow mesh edges.
CutPath path_cut(MeshPtr mesh, const std::vector<int>& path);

/// Ranking of cuts: higher energy (beyond 1e-10 relative), then fewer
/// edges, then lexicographically smaller sorted edge ids.
bool better_cut(double e1, const std::vector<int>& edges1, double e2, const std::vector<int>& edges2);

/// All simple vertex paths from t1 to t2 with at most max_edges edges,
/// in lexicographic order.
std::vector<std::vector<int>> enumerate_paths(const CrackMesh& mesh, int t1, int t2, int max_edges);

struct RankedCut {
  std::vector<int> path;
  CutPath cut;
  double energy = 0.0;
};

/// Exhaustive maximization over enumerate_paths.
RankedCut best_cut_by_enumeration(const CutProblem& problem, int t1, int t2, int max_edges);

struct AnnealingStep {
  int step = 0;
  double energy = 0.0;  // energy of the proposal
  bool accepted = false;
  double temperature = 0.0;
};

struct OptimizeResult {
  RankedCut best;
  CutEnergyReport report;
  std::vector<AnnealingStep> trace;
};

/// Simulated annealing over simple paths between the terminals, starting
/// from the shortest path. Moves insert a one- or two-vertex detour around
/// a triangle or cell, or shortcut one. max_edges <= 0 means unbounded.
OptimizeResult optimize_cut(const CutProblem& problem, int t1, int t2, int budget, std::uint64_t seed,
                            int max_edges = 0);

/// K plus the boundary of a square of side 2^{stages-n} cells with one
/// corner at `vertex`, for n = 1..stages.
std::vector<CutPath> detour_sequence(const CutPath& k, int vertex, int stages);

/// Hausdorff distance between the edge sets (sampled densely along each edge).
double cut_distance(const CutPath& a, const CutPath& b);

struct CutStabilityReport {
  std::vector<double> hausdorff;
  std::vector<double> grad_gap;  // ||grad u_n - grad u||_{L^p} per triangle
};

/// Cuts must live on problem.mesh.
CutStabilityReport cut_stability(const CutProblem& problem, const std::vector<CutPath>& cuts, const CutPath& limit);

// "cut <E>" then E edge ids, then "terminals <t1> <t2>".
void write_cut(std::ostream& out, const CutPath& cut);
CutPath read_cut(std::istream& in, MeshPtr mesh);
void write_trace_csv(std::ostream& out, const std::vector<AnnealingStep>& trace);

}  // namespace nsl
