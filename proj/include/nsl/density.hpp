#pragma once

// Potentials constant on complement components and the fields built from
// them: rotated gradients orthogonal to all gradients, flattening near the
// components, the Maly-Martio stage construction and Airy-type pairings.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "nsl/fem.hpp"

namespace nsl {

struct HPerpElement {
  NodalField potential;                   // phi on the box mesh
  std::vector<double> component_values;   // c_i per complement component, c_0 = 0
  EdgeFlux field;                         // psi = -R grad(phi), per box-mesh triangle
};

/// Box-mesh vertices lying on the closure of each complement component;
/// components whose closures touch share one entry. Vertices on no
/// component get -1. Box-boundary vertices belong to the unbounded component.
std::vector<int> component_of_vertex(const PixelDomain& domain, const ComponentLabeling& labeling,
                                     const CrackMesh& box_mesh);

/// phi0 blended harmonically onto the plateau values: phi = values[c] on the
/// vertices of component c, phi0 plus a discrete harmonic correction elsewhere.
NodalField blend_to_plateaus(const NodalField& phi0, const std::vector<int>& vertex_component,
                             const std::vector<double>& values);

HPerpElement make_hperp_element(NodalField potential, std::vector<double> component_values);

/// `count` random elements (smooth bumps blended onto random plateaus).
std::vector<HPerpElement> hperp_basis(const PixelDomain& domain, MeshPtr box_mesh, int count, std::uint64_t seed);

/// |sum_T area psi.grad u| / (||psi||_{p'} ||grad u||_p) over the triangles of
/// u's mesh, which must be a triangulation of the same grid as the box mesh.
double orthogonality_residual(const NodalField& u, const HPerpElement& elem, double p = 2.0);

struct FlattenResult {
  NodalField field;
  double width = 0.0;
  bool width_reduced = false;
  double distance = 0.0;  // ||field - phi||_{W^{1,q}}
};

/// Sets phi to the component value c_i on every vertex within `width` of
/// K_i (box boundary counts for the unbounded component). phi must already
/// be constant (1e-8) on the component vertices. Overlapping neighbourhoods
/// halve the width until they are disjoint.
FlattenResult flatten_near_components(const NodalField& phi, const PixelDomain& domain,
                                      const ComponentLabeling& labeling, double width, double q);

/// Level n = 1..levels: phi prolonged to the mesh refined n-1 times and
/// flattened with a one-cell width of that mesh.
std::vector<FlattenResult> flatten_trace(const NodalField& phi, const PixelDomain& domain, int levels, double q);

struct MalyMartioStage {
  int stage = 0;
  double alpha = 0.0;
  double log_ratio = 0.0;      // L = log(R / rho) chosen by bisection
  double support_radius = 0.0; // R
  double plateau_radius = 0.0; // rho
  std::vector<Point> centers;
  std::vector<double> targets;    // midpoints of the dyadic partition of [-1, 1]
  std::vector<double> amplitudes;
  std::vector<double> center_values;  // phi_s at the centres, from the analytic model
  double increment_norm = 0.0;        // ||phi_s - phi_{s-1}||_{W^{1,2}}, exact for the profile
  double budget = 0.0;                // 2^{-s}
  double coverage = 0.0;
  double count_radius_stat = 0.0;     // #balls * rho^alpha
  bool plateau_resolved = false;      // rho >= 2 cells of the output grid
  NodalField field;                   // phi_s sampled on the output grid mesh
};

struct MalyMartioOutput {
  std::vector<MalyMartioStage> stages;
  PixelDomain domain;
  bool truncated = false;  // stopped before the requested stage count
  std::vector<double> alphas;
};

/// Radial profile 1 on [0, rho], log(R/r)/log(R/rho) on [rho, R], 0 beyond.
double log_profile(double r, double support, double log_ratio);
/// Squared W^{1,2} norm of the profile above.
double log_profile_norm2(double support, double log_ratio);

/// Fraction of [-1, 1] within `radius` of the given values.
double value_coverage(const std::vector<double>& values, double radius);

/// alpha_schedule empty means alpha_s = 1/s.
MalyMartioOutput maly_martio(int stages, std::vector<double> alpha_schedule, int grid_n);

/// Piecewise bicubic C^1 function on a grid, Hermite data per node:
/// value, d/dx, d/dy, d2/dxdy.
struct HermiteField {
  Grid grid;
  std::vector<std::array<double, 4>> nodes;  // (n+1)^2, index j (n+1) + i

  struct Jet {
    double value = 0.0;
    Vec2 grad;
    double xx = 0.0, xy = 0.0, yy = 0.0;
  };
  Jet evaluate(const Point& x) const;

  using Fn = std::function<std::array<double, 4>(const Point&)>;
  static HermiteField from_function(const Grid& grid, const Fn& fn);
};

/// Linear data phi = c . x + b on the one-cell dilation of each component
/// (components indexed as in the labeling), random Hermite data elsewhere.
HermiteField airy_potential(const PixelDomain& domain, const ComponentLabeling& labeling,
                            const std::vector<std::array<double, 3>>& linear_data, std::uint64_t seed);

/// |int Hess~(phi) : e(v)| / (||Hess~ phi||_2 ||e(v)||_2) over v's mesh; the
/// mesh grid must refine the Hermite grid.
double airy_orthogonality(const NodalField& v1, const NodalField& v2, const HermiteField& phi);
/// Unnormalized pairing.
double airy_pairing(const NodalField& v1, const NodalField& v2, const HermiteField& phi);

void write_coverage_csv(std::ostream& out, const MalyMartioOutput& mm);
/// Writes coverage.csv, stage_<s>.csv and domain.txt into `dir`.
void save_maly_martio(const std::string& dir, const MalyMartioOutput& mm);

}  // namespace nsl
