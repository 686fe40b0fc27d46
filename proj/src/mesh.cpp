#include "nsl/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

namespace nsl {

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

std::vector<BoundaryEdge> boundary_from_triangles(const CrackMesh& mesh, const std::set<Edge>& crack_pairs_by_origin) {
  std::map<Edge, int> count;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) ++count[make_edge(t[k], t[(k + 1) % 3])];
  }
  std::vector<BoundaryEdge> out;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      if (count[make_edge(a, b)] != 1) continue;
      const Edge by_origin = make_edge(mesh.origin[static_cast<std::size_t>(a)], mesh.origin[static_cast<std::size_t>(b)]);
      const auto tag = crack_pairs_by_origin.count(by_origin) ? BoundaryTag::crack : BoundaryTag::outer;
      out.push_back({a, b, tag});
    }
  }
  return out;
}

std::vector<std::vector<int>> vertex_triangles(const CrackMesh& mesh) {
  std::vector<std::vector<int>> out(mesh.vertex_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    for (int v : mesh.triangles[t]) out[static_cast<std::size_t>(v)].push_back(static_cast<int>(t));
  }
  return out;
}

bool edges_connected(const std::vector<Edge>& edges) {
  if (edges.empty()) return true;
  std::map<int, int> local;
  for (const auto& [a, b] : edges) {
    local.emplace(a, static_cast<int>(local.size()));
    local.emplace(b, static_cast<int>(local.size()));
  }
  DisjointSets ds(local.size());
  for (const auto& [a, b] : edges) ds.unite(local[a], local[b]);
  const int root = ds.find(0);
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (ds.find(static_cast<int>(i)) != root) return false;
  }
  return true;
}

}  // namespace

double CrackMesh::area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point& a = vertices[static_cast<std::size_t>(tri[0])];
  const Point& b = vertices[static_cast<std::size_t>(tri[1])];
  const Point& c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * cross(b - a, c - a);
}

Point CrackMesh::centroid(std::size_t t) const {
  const auto& tri = triangles[t];
  Point s{};
  for (int v : tri) s += vertices[static_cast<std::size_t>(v)];
  return (1.0 / 3.0) * s;
}

double CrackMesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangle_count(); ++t) s += area(t);
  return s;
}

EdgeTable::EdgeTable(const CrackMesh& mesh) : adjacency_(mesh.vertex_count()) {
  std::set<Edge> unique;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) unique.insert(make_edge(t[k], t[(k + 1) % 3]));
  }
  edges_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    index_.emplace(edges_[i], static_cast<int>(i));
    adjacency_[static_cast<std::size_t>(edges_[i].first)].push_back(edges_[i].second);
    adjacency_[static_cast<std::size_t>(edges_[i].second)].push_back(edges_[i].first);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

int EdgeTable::find(int a, int b) const {
  auto it = index_.find(make_edge(a, b));
  return it == index_.end() ? -1 : it->second;
}

CutPath CutPath::from_vertex_path(MeshPtr mesh, const std::vector<int>& path) {
  if (path.size() < 2) throw std::invalid_argument("cut path: needs at least two vertices");
  const EdgeTable table(*mesh);
  std::vector<int> edges;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int id = table.find(path[i], path[i + 1]);
    if (id < 0) throw std::invalid_argument("cut path: consecutive vertices are not joined by a mesh edge");
    edges.push_back(id);
  }
  return from_edges(std::move(mesh), std::move(edges), path.front(), path.back());
}

CutPath CutPath::from_edges(MeshPtr mesh, std::vector<int> edges, int terminal1, int terminal2) {
  CutPath c;
  c.mesh = std::move(mesh);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  c.edges = std::move(edges);
  c.terminal1 = terminal1;
  c.terminal2 = terminal2;
  c.validate();
  return c;
}

std::vector<Edge> CutPath::vertex_pairs() const {
  const EdgeTable table(*mesh);
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (int e : edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= table.size()) throw std::invalid_argument("cut path: edge id not in mesh");
    out.push_back(table.edges()[static_cast<std::size_t>(e)]);
  }
  return out;
}

void CutPath::validate() const {
  if (!mesh) throw std::invalid_argument("cut path: no mesh");
  const auto pairs = vertex_pairs();
  if (pairs.empty()) throw std::invalid_argument("cut path: empty edge set");
  if (!edges_connected(pairs)) throw std::invalid_argument("cut path: edge set is not connected");
  auto touches = [&](int v) {
    return std::any_of(pairs.begin(), pairs.end(), [v](const Edge& e) { return e.first == v || e.second == v; });
  };
  if (!touches(terminal1) || !touches(terminal2)) throw std::invalid_argument("cut path: terminals not on the cut");
}

CrackMesh triangulate(const PixelDomain& domain) {
  const Grid& g = domain.grid();
  const int n = g.n;
  if (domain.inside_count() == 0) throw std::invalid_argument("triangulate: empty domain");
  std::vector<int> node_id(static_cast<std::size_t>((n + 1) * (n + 1)), -1);
  auto node_index = [n](int i, int j) { return static_cast<std::size_t>(j * (n + 1) + i); };

  CrackMesh mesh;
  mesh.grid = g;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      bool used = false;
      for (int dj = -1; dj <= 0 && !used; ++dj) {
        for (int di = -1; di <= 0 && !used; ++di) {
          const int ci = i + di;
          const int cj = j + dj;
          if (ci >= 0 && cj >= 0 && ci < n && cj < n && domain.inside(ci, cj)) used = true;
        }
      }
      if (used) {
        node_id[node_index(i, j)] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(g.node(i, j));
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!domain.inside(i, j)) continue;
      const int v00 = node_id[node_index(i, j)];
      const int v10 = node_id[node_index(i + 1, j)];
      const int v01 = node_id[node_index(i, j + 1)];
      const int v11 = node_id[node_index(i + 1, j + 1)];
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  mesh.origin.resize(mesh.vertex_count());
  std::iota(mesh.origin.begin(), mesh.origin.end(), 0);
  mesh.parent_triangle.resize(mesh.triangle_count());
  std::iota(mesh.parent_triangle.begin(), mesh.parent_triangle.end(), 0);
  mesh.boundary_edges = boundary_from_triangles(mesh, {});
  return mesh;
}

CrackMesh slit(const CrackMesh& mesh, const std::vector<Edge>& cut) {
  if (cut.empty()) return mesh;
  if (!mesh.crack_edges.empty()) throw std::invalid_argument("slit: mesh already carries cracks");
  const EdgeTable table(mesh);
  std::set<Edge> cut_set;
  for (const auto& [a, b] : cut) {
    if (table.find(a, b) < 0) throw std::invalid_argument("slit: cut edge is not a mesh edge");
    cut_set.insert(make_edge(a, b));
  }
  if (!edges_connected({cut_set.begin(), cut_set.end()})) throw std::invalid_argument("slit: cut is not connected");

  CrackMesh out = mesh;
  const auto fans = vertex_triangles(mesh);
  std::set<int> cut_vertices;
  for (const auto& [a, b] : cut_set) {
    cut_vertices.insert(a);
    cut_vertices.insert(b);
  }

  for (int v : cut_vertices) {
    const auto& fan = fans[static_cast<std::size_t>(v)];
    DisjointSets sectors(fan.size());
    for (std::size_t x = 0; x < fan.size(); ++x) {
      for (std::size_t y = x + 1; y < fan.size(); ++y) {
        const auto& tx = mesh.triangles[static_cast<std::size_t>(fan[x])];
        const auto& ty = mesh.triangles[static_cast<std::size_t>(fan[y])];
        for (int w : tx) {
          if (w == v) continue;
          if (std::find(ty.begin(), ty.end(), w) == ty.end()) continue;
          if (!cut_set.count(make_edge(v, w))) sectors.unite(static_cast<int>(x), static_cast<int>(y));
        }
      }
    }
    std::map<int, int> copy_of_root;  // sector root -> vertex id
    for (std::size_t x = 0; x < fan.size(); ++x) {
      const int root = sectors.find(static_cast<int>(x));
      auto it = copy_of_root.find(root);
      if (it == copy_of_root.end()) {
        int id = v;
        if (!copy_of_root.empty()) {
          id = static_cast<int>(out.vertices.size());
          out.vertices.push_back(mesh.vertices[static_cast<std::size_t>(v)]);
          out.origin.push_back(mesh.origin[static_cast<std::size_t>(v)]);
        }
        it = copy_of_root.emplace(root, id).first;
      }
      auto& tri = out.triangles[static_cast<std::size_t>(fan[x])];
      for (int& w : tri) {
        if (w == v) w = it->second;
      }
    }
  }

  // crack records: the two triangles adjacent to every interior cut edge
  for (const auto& [a, b] : cut_set) {
    std::vector<int> adjacent;
    for (int t : fans[static_cast<std::size_t>(a)]) {
      const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
      if (std::find(tri.begin(), tri.end(), b) != tri.end()) adjacent.push_back(t);
    }
    if (adjacent.size() != 2) continue;
    auto image = [&](int t, int original) {
      const auto& before = mesh.triangles[static_cast<std::size_t>(t)];
      const auto& after = out.triangles[static_cast<std::size_t>(t)];
      for (int k = 0; k < 3; ++k) {
        if (before[static_cast<std::size_t>(k)] == original) return after[static_cast<std::size_t>(k)];
      }
      return original;
    };
    out.crack_edges.push_back({image(adjacent[0], a), image(adjacent[0], b), image(adjacent[1], a), image(adjacent[1], b)});
  }

  std::set<Edge> by_origin;
  for (const auto& [a, b] : cut_set)
    by_origin.insert(make_edge(mesh.origin[static_cast<std::size_t>(a)], mesh.origin[static_cast<std::size_t>(b)]));
  out.boundary_edges = boundary_from_triangles(out, by_origin);
  return out;
}

CrackMesh slit(const CutPath& cut) {
  cut.validate();
  return slit(*cut.mesh, cut.vertex_pairs());
}

CrackMesh refine(const CrackMesh& mesh) {
  CrackMesh out;
  out.grid = Grid{mesh.grid.n * 2, mesh.grid.box};
  out.vertices = mesh.vertices;
  out.origin = mesh.origin;
  std::map<Edge, int> midpoint;
  std::map<Edge, int> origin_midpoint;
  auto mid = [&](int a, int b) {
    const Edge key = make_edge(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[static_cast<std::size_t>(a)] + mesh.vertices[static_cast<std::size_t>(b)]));
    const Edge okey = make_edge(mesh.origin[static_cast<std::size_t>(a)], mesh.origin[static_cast<std::size_t>(b)]);
    auto [oit, inserted] = origin_midpoint.emplace(okey, id);
    out.origin.push_back(inserted ? id : oit->second);
    midpoint.emplace(key, id);
    return id;
  };
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    const int ab = mid(a, b);
    const int bc = mid(b, c);
    const int ca = mid(c, a);
    out.triangles.push_back({a, ab, ca});
    out.triangles.push_back({ab, b, bc});
    out.triangles.push_back({ca, bc, c});
    out.triangles.push_back({ab, bc, ca});
    for (int k = 0; k < 4; ++k) out.parent_triangle.push_back(static_cast<int>(t));
  }
  for (const auto& e : mesh.crack_edges) {
    const int m1 = mid(e.a1, e.b1);
    const int m2 = mid(e.a2, e.b2);
    out.crack_edges.push_back({e.a1, m1, e.a2, m2});
    out.crack_edges.push_back({m1, e.b1, m2, e.b2});
  }
  for (const auto& e : mesh.boundary_edges) {
    const int m = mid(e.a, e.b);
    out.boundary_edges.push_back({e.a, m, e.tag});
    out.boundary_edges.push_back({m, e.b, e.tag});
  }
  return out;
}

MeshComponents mesh_components(const CrackMesh& mesh) {
  DisjointSets ds(mesh.vertex_count());
  for (const auto& t : mesh.triangles) {
    ds.unite(t[0], t[1]);
    ds.unite(t[0], t[2]);
  }
  MeshComponents out;
  out.of_vertex.assign(mesh.vertex_count(), -1);
  std::map<int, int> id_of_root;
  std::vector<char> used(mesh.vertex_count(), 0);
  for (const auto& t : mesh.triangles) {
    for (int v : t) used[static_cast<std::size_t>(v)] = 1;
  }
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    if (!used[v]) continue;
    const int root = ds.find(static_cast<int>(v));
    auto [it, inserted] = id_of_root.emplace(root, static_cast<int>(id_of_root.size()));
    out.of_vertex[v] = it->second;
  }
  out.count = static_cast<int>(id_of_root.size());
  out.of_triangle.reserve(mesh.triangle_count());
  for (const auto& t : mesh.triangles) out.of_triangle.push_back(out.of_vertex[static_cast<std::size_t>(t[0])]);
  return out;
}

int triangle_key(const CrackMesh& mesh, std::size_t t, const Grid& grid) {
  const Point c = mesh.centroid(t);
  const auto cell = grid.locate(c);
  if (!cell) throw std::invalid_argument("triangle_key: triangle outside grid");
  const double h = grid.cell_size();
  const double fx = (c.x - grid.box.x0) / h - (*cell % grid.n);
  const double fy = (c.y - grid.box.y0) / h - (*cell / grid.n);
  return 2 * *cell + (fx > fy ? 0 : 1);
}

void write_mesh(std::ostream& out, const CrackMesh& mesh) {
  out << "vertices " << mesh.vertex_count() << '\n';
  for (const auto& p : mesh.vertices) out << format_real(p.x) << ' ' << format_real(p.y) << '\n';
  out << "triangles " << mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "cracks " << mesh.crack_edges.size() << '\n';
  for (const auto& c : mesh.crack_edges) out << c.a1 << ' ' << c.b1 << ' ' << c.a2 << ' ' << c.b2 << '\n';
}

CrackMesh read_mesh(std::istream& in) {
  CrackMesh mesh;
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "vertices") throw IoError("mesh file: expected 'vertices <V>'");
  mesh.vertices.resize(count);
  for (auto& p : mesh.vertices) {
    if (!(in >> p.x >> p.y)) throw IoError("mesh file: truncated vertex list");
  }
  if (!(in >> tag >> count) || tag != "triangles") throw IoError("mesh file: expected 'triangles <T>'");
  mesh.triangles.resize(count);
  for (auto& t : mesh.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) throw IoError("mesh file: truncated triangle list");
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertex_count()) throw IoError("mesh file: vertex index out of range");
    }
  }
  if (in >> tag) {
    if (tag != "cracks" || !(in >> count)) throw IoError("mesh file: expected 'cracks <C>'");
    mesh.crack_edges.resize(count);
    for (auto& c : mesh.crack_edges) {
      if (!(in >> c.a1 >> c.b1 >> c.a2 >> c.b2)) throw IoError("mesh file: truncated crack list");
    }
  }
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw IoError("mesh file: empty mesh");

  // copies of one point share the smallest id as origin
  std::map<std::pair<double, double>, int> first_at;
  mesh.origin.resize(mesh.vertex_count());
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    auto [it, inserted] = first_at.emplace(std::pair{mesh.vertices[v].x, mesh.vertices[v].y}, static_cast<int>(v));
    mesh.origin[v] = it->second;
  }
  mesh.parent_triangle.resize(mesh.triangle_count());
  std::iota(mesh.parent_triangle.begin(), mesh.parent_triangle.end(), 0);

  double xmin = mesh.vertices[0].x, ymin = mesh.vertices[0].y, xmax = xmin, ymax = ymin;
  double h = std::numeric_limits<double>::infinity();
  for (const auto& p : mesh.vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 d = mesh.vertices[static_cast<std::size_t>(t[(k + 1) % 3])] - mesh.vertices[static_cast<std::size_t>(t[k])];
      const double len = std::max(std::abs(d.x), std::abs(d.y));
      if (len > 0) h = std::min(h, len);
    }
  }
  const double side = std::max(xmax - xmin, ymax - ymin);
  mesh.grid = Grid{std::max(1, static_cast<int>(std::lround(side / h))), Box{xmin, ymin, side}};

  std::set<Edge> crack_pairs;
  for (const auto& c : mesh.crack_edges)
    crack_pairs.insert(make_edge(mesh.origin[static_cast<std::size_t>(c.a1)], mesh.origin[static_cast<std::size_t>(c.b1)]));
  mesh.boundary_edges = boundary_from_triangles(mesh, crack_pairs);
  return mesh;
}

void save_mesh(const std::string& path, const CrackMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_mesh(out, mesh);
}

CrackMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_mesh(in);
}

}  // namespace nsl
