#pragma once

// Structured P1 triangulations of pixel domains, slit cracks by vertex
// duplication, and uniform red refinement.

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nsl/geometry.hpp"

namespace nsl {

using Triangle = std::array<int, 3>;
using Edge = std::pair<int, int>;  // always stored with first < second

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

enum class BoundaryTag { outer, crack };

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::outer;
};

/// One cut edge seen from both faces: (a1,b1) in the triangles on one
/// side, (a2,b2) on the other. Tips appear as a1 == a2 or b1 == b2.
struct CrackEdge {
  int a1 = 0;
  int b1 = 0;
  int a2 = 0;
  int b2 = 0;
};

struct CrackMesh {
  std::vector<Point> vertices;
  std::vector<Triangle> triangles;  // counterclockwise
  std::vector<CrackEdge> crack_edges;
  std::vector<BoundaryEdge> boundary_edges;
  /// Grid the mesh was generated on (refinement doubles its resolution).
  Grid grid;
  /// Per vertex: the vertex of the unslit mesh it was copied from.
  std::vector<int> origin;
  /// Per triangle: the triangle of the parent mesh (before the last
  /// refinement); identity for freshly triangulated meshes.
  std::vector<int> parent_triangle;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  double area(std::size_t t) const;
  Point centroid(std::size_t t) const;
  double total_area() const;
};

using MeshPtr = std::shared_ptr<const CrackMesh>;

/// Unique undirected edges (by vertex ids) in lexicographic order;
/// edge ids are positions in this table.
class EdgeTable {
 public:
  explicit EdgeTable(const CrackMesh& mesh);
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  /// -1 when (a,b) is not a mesh edge.
  int find(int a, int b) const;
  /// Sorted neighbour lists of the vertex graph.
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

 private:
  std::vector<Edge> edges_;
  std::map<Edge, int> index_;
  std::vector<std::vector<int>> adjacency_;
};

/// Connected set of mesh edges containing two terminal vertices; edges
/// are ids into EdgeTable(*mesh).
struct CutPath {
  MeshPtr mesh;
  std::vector<int> edges;  // sorted, unique
  int terminal1 = -1;
  int terminal2 = -1;

  /// Builds the cut from a vertex path v0, v1, ..., vk.
  static CutPath from_vertex_path(MeshPtr mesh, const std::vector<int>& path);
  static CutPath from_edges(MeshPtr mesh, std::vector<int> edges, int terminal1, int terminal2);
  std::vector<Edge> vertex_pairs() const;
  /// Throws invalid_argument unless the edges are connected and touch both terminals.
  void validate() const;
};

/// Two right triangles per inside cell, diagonal from lower-left to upper-right.
CrackMesh triangulate(const PixelDomain& domain);

/// Duplicates the vertices along the cut so that the triangle fans on the
/// two sides of every cut edge reference distinct copies. Interior crack
/// tips stay single; cut vertices on the outer boundary open up.
CrackMesh slit(const CrackMesh& mesh, const std::vector<Edge>& cut);
CrackMesh slit(const CutPath& cut);

/// Red refinement: every triangle split into four by its edge midpoints.
CrackMesh refine(const CrackMesh& mesh);

/// Connected components of the triangle graph (triangles sharing a vertex).
/// Returns the component id per vertex and per triangle.
struct MeshComponents {
  int count = 0;
  std::vector<int> of_vertex;
  std::vector<int> of_triangle;
};
MeshComponents mesh_components(const CrackMesh& mesh);

/// Key identifying a triangle of a structured mesh by position:
/// 2 * cell + (0 lower-right half, 1 upper-left half) at `grid`.
int triangle_key(const CrackMesh& mesh, std::size_t t, const Grid& grid);

void write_mesh(std::ostream& out, const CrackMesh& mesh);
CrackMesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const CrackMesh& mesh);
CrackMesh load_mesh(const std::string& path);

}  // namespace nsl
