#pragma once

// The end-to-end acceptance suite, shared by the test binary and `nsl check`.

#include <iosfwd>
#include <string>
#include <vector>

#include "nsl/solver.hpp"

namespace nsl {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Ids 1..13 in order.
std::vector<int> criterion_ids();
std::string criterion_name(int id);

/// Throws invalid_argument for an unknown id; exceptions from the run are
/// caught and reported as a failure.
CriterionResult run_criterion(int id);
/// Empty means all.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {});

/// One line: "PASS  4 stability_shrinking_hole  (detail) 2.81s".
void print_result(std::ostream& out, const CriterionResult& r);

struct SmallMesh {
  std::string name;
  MeshPtr mesh;
};

/// Built-in meshes with at most 12 vertices, including an L-shape, a strip
/// and a slit square.
std::vector<SmallMesh> small_meshes();

/// Derivative-free minimization of discrete_energy at fixed eps: pattern
/// search probing single vertices and triangle vertex triples by +-step,
/// halving the step down to `tol`. Dirichlet vertices keep their values.
std::vector<double> coordinate_search(const CrackMesh& mesh, const ProblemSpec& spec, double eps,
                                      std::vector<double> start, double tol = 1e-8);

}  // namespace nsl
