#pragma once

// P1 nodal fields, piecewise-constant vector fields and the operators the
// density and stability machinery is built from.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsl/mesh.hpp"

namespace nsl {

struct NodalField {
  MeshPtr mesh;
  std::vector<double> values;

  NodalField() = default;
  NodalField(MeshPtr m, std::vector<double> v);
  static NodalField zeros(MeshPtr m);
  static NodalField interpolate(MeshPtr m, const ScalarFunction& fn);
  /// Mean of the three nodal values (exact centroid value of the interpolant).
  double centroid_value(std::size_t t) const;
};

/// Interpolates a field onto `fine`, which must be refine(*coarse.mesh).
NodalField prolong(const NodalField& coarse, MeshPtr fine);

/// Piecewise-constant vector field, one vector per triangle.
struct EdgeFlux {
  MeshPtr mesh;
  std::vector<Vec2> vectors;

  EdgeFlux() = default;
  EdgeFlux(MeshPtr m, std::vector<Vec2> v);
};

/// Shape-function gradients of a P1 triangle.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vec2, 3> basis_gradients{};
};
ElementGeometry element_geometry(const CrackMesh& mesh, std::size_t t);

EdgeFlux gradient(const NodalField& u);
EdgeFlux rotate90(const EdgeFlux& w);
EdgeFlux operator+(const EdgeFlux& a, const EdgeFlux& b);
EdgeFlux operator-(const EdgeFlux& a, const EdgeFlux& b);

/// L2 pairing sum_T area_T a_T . b_T, optionally restricted to a triangle mask.
double inner_product(const EdgeFlux& a, const EdgeFlux& b);

double lp_norm(const EdgeFlux& w, double p);
/// Centroid-quadrature L^p norm of the interpolant, weighted per triangle by b.
double lp_norm_scalar(const NodalField& u, double p, std::optional<std::span<const double>> weight = std::nullopt);
/// (||u||_q^q + ||grad u||_q^q)^(1/q).
double w1p_norm(const NodalField& u, double q);

/// Piecewise-constant samples on a pixel grid (scalars or vectors).
struct GridField {
  Grid grid;
  std::vector<double> values;
};
struct GridVectorField {
  Grid grid;
  std::vector<Vec2> values;
};

/// Area-weighted cell averages over the triangles lying in each cell;
/// cells without triangles of the source mesh are zero. The source mesh
/// must live on the target box at the same or a finer aligned resolution.
GridVectorField extend_by_zero(const EdgeFlux& w, const PixelDomain& target);
GridField extend_by_zero(const NodalField& u, const PixelDomain& target);
GridField indicator(const PixelDomain& domain);

double grid_lp_norm(const GridField& f, double p, std::optional<std::span<const double>> weight = std::nullopt);
double grid_lp_norm(const GridVectorField& f, double p);
GridField operator-(const GridField& a, const GridField& b);
GridVectorField operator-(const GridVectorField& a, const GridVectorField& b);

/// Nodal clamp to [-k, k].
NodalField truncate(const NodalField& u, double k);

/// T(y) = integral_0^y 1_{R \ C_n}(s) ds with C_n the closed 1/n-neighbourhood of `levels`.
double flatten_level_map(double y, std::span<const double> levels, int n);
/// Nodewise T o phi.
NodalField flatten_levels(const NodalField& phi, std::span<const double> levels, int n);

/// Subtracts the mean over the given triangles.
NodalField mean_normalize(const NodalField& u, std::span<const int> triangles);

struct HelmholtzSplit {
  EdgeFlux gradient_part;
  EdgeFlux solenoidal_part;
  NodalField potential;
  double gradient_norm = 0.0;    // in L^{p_dual}
  double solenoidal_norm = 0.0;  // in L^{p_dual}
};

/// L2-orthogonal split w = grad(phi) + sigma with sigma orthogonal to all
/// discrete gradients; phi has zero mean on every mesh component.
HelmholtzSplit helmholtz_split(const EdgeFlux& w, double p_dual = 2.0);

/// Solves the discrete Neumann Laplacian K phi = rhs with zero mean per
/// mesh component (rhs must be compatible per component).
std::vector<double> solve_neumann_laplacian(const CrackMesh& mesh, std::vector<double> rhs);

// CSV: header "vertex_id,value" preceded by a comment line "# mesh <name>".
void write_field_csv(std::ostream& out, const NodalField& u, const std::string& mesh_name);
std::vector<double> read_field_csv(std::istream& in);
void write_flux_csv(std::ostream& out, const EdgeFlux& w);

}  // namespace nsl
