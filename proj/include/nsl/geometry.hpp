#pragma once

// Rasterized planar domains and the set-level quantities defined on them:
// complement components, Lebesgue measure, Hausdorff distances and a
// dyadic-cover estimate of the Hausdorff pre-measure.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsl/common.hpp"

namespace nsl {

/// Axis-aligned square [x0, x0+side] x [y0, y0+side].
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 1.0;

  double diameter() const { return side * std::sqrt(2.0); }
  bool contains(const Point& p, double tol = 0.0) const {
    return p.x >= x0 - tol && p.x <= x0 + side + tol && p.y >= y0 - tol && p.y <= y0 + side + tol;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Uniform n x n grid of closed pixels over a box. Cell (i, j) has
/// lower-left corner (x0 + i h, y0 + j h); its linear index is j n + i.
struct Grid {
  int n = 1;
  Box box;

  double cell_size() const { return box.side / n; }
  double cell_area() const { return cell_size() * cell_size(); }
  int cell_count() const { return n * n; }
  int index(int i, int j) const { return j * n + i; }
  Point cell_center(int cell) const;
  Point node(int i, int j) const { return {box.x0 + i * cell_size(), box.y0 + j * cell_size()}; }
  /// Cell containing p (clamped to the grid); nullopt when p is outside the box.
  std::optional<int> locate(const Point& p) const;
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Open planar domain: the interior of the union of true cells, minus an
/// optional finite list of punctures (measure-zero complement points).
class PixelDomain {
 public:
  PixelDomain() = default;
  PixelDomain(Grid grid, std::vector<char> mask, std::vector<Point> punctures = {});

  /// Whole box, every cell inside.
  static PixelDomain full(int n, Box box = {});

  const Grid& grid() const { return grid_; }
  int resolution() const { return grid_.n; }
  const Box& box() const { return grid_.box; }
  bool inside(int cell) const { return mask_[static_cast<std::size_t>(cell)] != 0; }
  bool inside(int i, int j) const { return inside(grid_.index(i, j)); }
  const std::vector<char>& mask() const { return mask_; }
  const std::vector<Point>& punctures() const { return punctures_; }
  int inside_count() const;

  /// Copy with cells for which pred(center) holds removed from the domain.
  PixelDomain with_removed(const std::function<bool(const Point&)>& pred) const;
  PixelDomain with_cell(int i, int j, bool value) const;
  PixelDomain with_punctures(std::vector<Point> punctures) const;

 private:
  Grid grid_;
  std::vector<char> mask_;
  std::vector<Point> punctures_;
};

/// Compact set given either as a union of closed grid cells or as a finite
/// point list. Distances are evaluated on cell-center point clouds.
struct CompactSet {
  enum class Kind { pixel, points };

  Kind kind = Kind::points;
  Grid grid;               // pixel kind only
  std::vector<int> cells;  // pixel kind only
  std::vector<Point> points;

  static CompactSet from_cells(Grid grid, std::vector<int> cells);
  static CompactSet from_points(std::vector<Point> points);
  bool empty() const { return kind == Kind::pixel ? cells.empty() : points.empty(); }
  std::vector<Point> point_cloud() const;
};

struct ComponentLabeling {
  std::vector<int> labels;           // per cell; -1 for cells inside the domain
  std::vector<int> puncture_labels;  // per puncture
  int unbounded_id = 0;
  int count = 0;
  std::vector<Point> representatives;  // one per component (the selection E)
};

/// max(sup_{x in K1} dist(x, K2), sup_{x in K2} dist(x, K1)); d(empty, empty) = 0
/// and d(empty, K) = diamA for nonempty K.
double hausdorff_distance(const CompactSet& k1, const CompactSet& k2, double diamA);

/// Closed complement of the domain inside its box, including the box
/// boundary (a ring of frame cells just outside D) and the punctures.
CompactSet complement_in_box(const PixelDomain& domain);

/// Hausdorff distance between the complements D ∩ Ω1^c and D ∩ Ω2^c.
double complementary_distance(const PixelDomain& a, const PixelDomain& b);

/// 4-connected labeling of the complement; the exterior of D belongs to
/// the component `unbounded_id`.
ComponentLabeling complement_components(const PixelDomain& domain);

double lebesgue_measure(const PixelDomain& domain);

/// Greedy dyadic cover of E at the coarsest level whose square side is
/// <= delta; returns N * side^alpha. `cover_box` defaults to the grid box
/// (pixel sets) or the smallest power-of-two square at the points' lower
/// left corner (point sets).
double premeasure_estimate(const CompactSet& set, double alpha, double delta,
                           std::optional<Box> cover_box = std::nullopt);

struct AdmissibilityReport {
  double alpha = 0.0;
  std::vector<double> deltas;
  std::vector<double> estimates;
  std::size_t selection_size = 0;
  /// Heuristic: the estimate trace dropped by at least a factor 2.
  bool consistent_with_null_measure = false;
};

AdmissibilityReport is_admissible_estimate(const PixelDomain& domain, double p,
                                           const std::vector<double>& deltas);

/// Dyadic deltas side/4, side/8, ... down to the cell size.
std::vector<double> default_deltas(const Grid& grid);

// Text format: "pixeldomain <n> <x0> <y0> <side>", then n rows of '0'/'1'
// (top row first), then optionally "punctures <k>" and k lines "x y".
void write_domain(std::ostream& out, const PixelDomain& domain);
PixelDomain read_domain(std::istream& in);
void save_domain(const std::string& path, const PixelDomain& domain);
PixelDomain load_domain(const std::string& path);

void write_points_csv(std::ostream& out, const std::vector<Point>& points);
std::vector<Point> read_points_csv(std::istream& in);

}  // namespace nsl
