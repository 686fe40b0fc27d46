#include "nsl/cutting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "nsl/solver.hpp"

namespace nsl {

namespace {

std::vector<int> path_edges(const EdgeTable& table, const std::vector<int>& path) {
  std::vector<int> edges;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) edges.push_back(table.find(path[i], path[i + 1]));
  std::sort(edges.begin(), edges.end());
  return edges;
}

bool adjacent(const EdgeTable& table, int a, int b) { return table.find(a, b) >= 0; }

// Moves of the annealing chain, in a fixed order.
std::vector<std::vector<int>> neighbours(const EdgeTable& table, const std::vector<int>& path, int max_edges) {
  const auto& adj = table.adjacency();
  const std::set<int> on_path(path.begin(), path.end());
  const auto free_vertex = [&](int w) { return !on_path.count(w); };
  std::vector<std::vector<int>> out;
  const auto edges = static_cast<int>(path.size()) - 1;
  const auto insert = [&](std::size_t i, std::initializer_list<int> ws) {
    std::vector<int> q(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    q.insert(q.end(), ws);
    q.insert(q.end(), path.begin() + static_cast<std::ptrdiff_t>(i) + 1, path.end());
    out.push_back(std::move(q));
  };
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int u = path[i], v = path[i + 1];
    if (max_edges <= 0 || edges + 1 <= max_edges)
      for (int w : adj[static_cast<std::size_t>(u)])
        if (free_vertex(w) && adjacent(table, w, v)) insert(i, {w});
    if (max_edges <= 0 || edges + 2 <= max_edges)
      for (int w1 : adj[static_cast<std::size_t>(u)]) {
        if (!free_vertex(w1)) continue;
        for (int w2 : adj[static_cast<std::size_t>(v)])
          if (w2 != w1 && free_vertex(w2) && adjacent(table, w1, w2)) insert(i, {w1, w2});
      }
  }
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    if (adjacent(table, path[i - 1], path[i + 1])) {
      std::vector<int> q = path;
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back(std::move(q));
    }
    if (i + 2 < path.size() && adjacent(table, path[i - 1], path[i + 2])) {
      std::vector<int> q = path;
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(i), q.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      out.push_back(std::move(q));
    }
  }
  return out;
}

std::vector<int> shortest_path(const EdgeTable& table, int t1, int t2) {
  const auto& adj = table.adjacency();
  std::vector<int> prev(adj.size(), -2);
  std::queue<int> queue;
  queue.push(t1);
  prev[static_cast<std::size_t>(t1)] = -1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    if (v == t2) break;
    for (int w : adj[static_cast<std::size_t>(v)])
      if (prev[static_cast<std::size_t>(w)] == -2) {
        prev[static_cast<std::size_t>(w)] = v;
        queue.push(w);
      }
  }
  if (prev[static_cast<std::size_t>(t2)] == -2) throw std::invalid_argument("terminals are not connected in the mesh");
  std::vector<int> path;
  for (int v = t2; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Point> edge_samples(const CutPath& cut) {
  std::vector<Point> pts;
  constexpr int kSamples = 8;
  for (const auto& [a, b] : cut.vertex_pairs()) {
    const Point pa = cut.mesh->vertices[static_cast<std::size_t>(a)];
    const Point pb = cut.mesh->vertices[static_cast<std::size_t>(b)];
    for (int s = 0; s <= kSamples; ++s) pts.push_back(pa + (static_cast<double>(s) / kSamples) * (pb - pa));
  }
  return pts;
}

}  // namespace

int snap_terminal(const CrackMesh& mesh, const Point& x) {
  const Grid& g = mesh.grid;
  if (!g.box.contains(x, 1e-12)) throw std::invalid_argument("terminal outside the box");
  std::set<int> cells;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    if (const auto c = g.locate(mesh.centroid(t))) cells.insert(*c);
  // closed cells around x
  const double h = g.cell_size();
  const double fi = (x.x - g.box.x0) / h, fj = (x.y - g.box.y0) / h;
  bool covered = false;
  for (int j = static_cast<int>(std::floor(fj - 1e-9)); j <= static_cast<int>(std::floor(fj + 1e-9)); ++j)
    for (int i = static_cast<int>(std::floor(fi - 1e-9)); i <= static_cast<int>(std::floor(fi + 1e-9)); ++i)
      if (i >= 0 && j >= 0 && i < g.n && j < g.n && cells.count(g.index(i, j))) covered = true;
  if (!covered) throw std::invalid_argument("terminal outside the closed domain");
  int best = -1;
  double bd = 0.0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const double d = distance(mesh.vertices[v], x);
    if (best < 0 || d < bd - 1e-14) {
      best = static_cast<int>(v);
      bd = d;
    }
  }
  return best;
}

CutEnergyReport cut_energy(const CutProblem& problem, const CutPath& cut) {
  if (!(problem.p > 1.0 && problem.p <= 2.0)) throw std::invalid_argument("cut_energy: p must lie in (1, 2]");
  if (!(problem.epsilon > 0.0)) throw std::invalid_argument("cut_energy: epsilon must be positive");
  if (!problem.g) throw std::invalid_argument("cut_energy: boundary datum missing");
  const auto mesh = std::make_shared<const CrackMesh>(slit(cut));
  std::set<int> cut_vertices;
  for (const auto& [a, b] : cut.vertex_pairs()) {
    cut_vertices.insert(a);
    cut_vertices.insert(b);
  }

  ProblemSpec spec;
  spec.p = problem.p;
  spec.op = OperatorKind::scaled;
  const std::size_t nt = mesh->triangle_count();
  spec.a.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) spec.a[t] = problem.a ? problem.a(mesh->centroid(t)) : 1.0;
  spec.b.assign(nt, 0.0);
  spec.f.assign(nt, 0.0);
  spec.g_load.assign(nt, 0.0);
  std::set<int> dirichlet;
  for (const auto& e : mesh->boundary_edges) {
    if (e.tag != BoundaryTag::outer) continue;
    for (int v : {e.a, e.b})
      if (!cut_vertices.count(mesh->origin[static_cast<std::size_t>(v)])) dirichlet.insert(v);
  }
  for (int v : dirichlet) {
    spec.dirichlet_vertices.push_back(v);
    spec.dirichlet_values.push_back(problem.g(mesh->vertices[static_cast<std::size_t>(v)]));
  }
  spec.epsilon0 = std::max(1e-2, problem.epsilon);
  spec.epsilon_min = problem.epsilon;
  spec.el_tol = 0.0;  // continue all the way down to the requested epsilon

  std::vector<double> initial(mesh->vertex_count(), 0.0);
  for (std::size_t v = 0; v < initial.size(); ++v) initial[v] = problem.g(mesh->vertices[v]);
  for (std::size_t k = 0; k < spec.dirichlet_vertices.size(); ++k)
    initial[static_cast<std::size_t>(spec.dirichlet_vertices[k])] = spec.dirichlet_values[k];
  SolveReport solved = solve(mesh, spec, initial);

  CutEnergyReport rep;
  const EdgeFlux grad = gradient(solved.solution);
  const double ep = std::pow(problem.epsilon, problem.p);
  for (std::size_t t = 0; t < nt; ++t) {
    const Vec2 g = grad.vectors[t];
    rep.energy += spec.a[t] * mesh->area(t) * (std::pow(dot(g, g) + problem.epsilon * problem.epsilon, 0.5 * problem.p) - ep);
  }
  rep.el_residual = solved.el_residual;
  rep.solution = std::move(solved.solution);
  return rep;
}

CutPath path_cut(MeshPtr mesh, const std::vector<int>& path) {
  if (std::set<int>(path.begin(), path.end()).size() != path.size())
    throw std::invalid_argument("cut path revisits a vertex");
  return CutPath::from_vertex_path(std::move(mesh), path);
}

bool better_cut(double e1, const std::vector<int>& edges1, double e2, const std::vector<int>& edges2) {
  const double tol = 1e-10 * (1.0 + std::max(std::abs(e1), std::abs(e2)));
  if (std::abs(e1 - e2) > tol) return e1 > e2;
  if (edges1.size() != edges2.size()) return edges1.size() < edges2.size();
  return edges1 < edges2;
}

std::vector<std::vector<int>> enumerate_paths(const CrackMesh& mesh, int t1, int t2, int max_edges) {
  const EdgeTable table(mesh);
  const auto& adj = table.adjacency();
  std::vector<std::vector<int>> out;
  std::vector<int> path{t1};
  std::vector<char> used(mesh.vertex_count(), 0);
  used[static_cast<std::size_t>(t1)] = 1;
  const std::function<void()> dfs = [&] {
    const int v = path.back();
    if (v == t2) {
      out.push_back(path);
      return;
    }
    if (static_cast<int>(path.size()) - 1 >= max_edges) return;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (used[static_cast<std::size_t>(w)]) continue;
      used[static_cast<std::size_t>(w)] = 1;
      path.push_back(w);
      dfs();
      path.pop_back();
      used[static_cast<std::size_t>(w)] = 0;
    }
  };
  if (t1 != t2) dfs();
  return out;
}

RankedCut best_cut_by_enumeration(const CutProblem& problem, int t1, int t2, int max_edges) {
  const auto paths = enumerate_paths(*problem.mesh, t1, t2, max_edges);
  if (paths.empty()) throw std::invalid_argument("no admissible path between the terminals");
  std::vector<double> energy(paths.size());
  parallel_for(paths.size(), [&](std::size_t k) { energy[k] = cut_energy(problem, path_cut(problem.mesh, paths[k])).energy; });
  const EdgeTable table(*problem.mesh);
  std::size_t best = 0;
  std::vector<int> best_edges = path_edges(table, paths[0]);
  for (std::size_t k = 1; k < paths.size(); ++k) {
    auto edges = path_edges(table, paths[k]);
    if (better_cut(energy[k], edges, energy[best], best_edges)) {
      best = k;
      best_edges = std::move(edges);
    }
  }
  return {paths[best], path_cut(problem.mesh, paths[best]), energy[best]};
}

OptimizeResult optimize_cut(const CutProblem& problem, int t1, int t2, int budget, std::uint64_t seed, int max_edges) {
  if (budget <= 0) throw std::invalid_argument("optimize_cut: budget must be positive");
  if (t1 == t2) throw std::invalid_argument("optimize_cut: terminals must be distinct");
  const EdgeTable table(*problem.mesh);
  std::mt19937_64 rng(derive_seed(seed, "optimize_cut", 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::map<std::vector<int>, double> memo;
  const auto energy_of = [&](const std::vector<int>& path) {
    auto it = memo.find(path);
    if (it != memo.end()) return it->second;
    const double e = cut_energy(problem, path_cut(problem.mesh, path)).energy;
    memo.emplace(path, e);
    return e;
  };

  std::vector<int> current = shortest_path(table, t1, t2);
  if (max_edges > 0 && static_cast<int>(current.size()) - 1 > max_edges)
    throw std::invalid_argument("optimize_cut: shortest path exceeds the edge limit");
  double e_cur = energy_of(current);
  std::vector<int> best = current;
  double e_best = e_cur;
  const auto consider = [&](const std::vector<int>& path, double e) {
    if (better_cut(e, path_edges(table, path), e_best, path_edges(table, best))) {
      best = path;
      e_best = e;
    }
  };

  // T0: energy spread over a 20-move random walk from the initial path.
  double lo = e_cur, hi = e_cur;
  {
    std::vector<int> walk = current;
    for (int k = 0; k < 20; ++k) {
      const auto moves = neighbours(table, walk, max_edges);
      if (moves.empty()) break;
      walk = moves[static_cast<std::size_t>(rng() % moves.size())];
      const double e = energy_of(walk);
      consider(walk, e);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
  }
  const double t0 = std::max(hi - lo, 1e-300);

  OptimizeResult result;
  double temperature = t0;
  for (int step = 0; step < budget; ++step, temperature *= 0.95) {
    const auto moves = neighbours(table, current, max_edges);
    AnnealingStep row;
    row.step = step;
    row.temperature = temperature;
    if (moves.empty()) {
      row.energy = e_cur;
      result.trace.push_back(row);
      continue;
    }
    const auto& proposal = moves[static_cast<std::size_t>(rng() % moves.size())];
    const double e = energy_of(proposal);
    consider(proposal, e);
    const double u = unit(rng);
    row.energy = e;
    row.accepted = e >= e_cur || u < std::exp((e - e_cur) / temperature);
    if (row.accepted) {
      current = proposal;
      e_cur = e;
    }
    result.trace.push_back(row);
  }
  result.best = {best, path_cut(problem.mesh, best), e_best};
  result.report = cut_energy(problem, result.best.cut);
  return result;
}

std::vector<CutPath> detour_sequence(const CutPath& k, int vertex, int stages) {
  const CrackMesh& mesh = *k.mesh;
  const EdgeTable table(mesh);
  const double h = mesh.grid.cell_size();
  const Point v = mesh.vertices[static_cast<std::size_t>(vertex)];
  std::map<std::pair<long, long>, int> at;
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    const Point q = mesh.vertices[i];
    at[{std::lround((q.x - mesh.grid.box.x0) / h), std::lround((q.y - mesh.grid.box.y0) / h)}] = static_cast<int>(i);
  }
  const long vi = std::lround((v.x - mesh.grid.box.x0) / h), vj = std::lround((v.y - mesh.grid.box.y0) / h);
  std::vector<CutPath> out;
  for (int n = 1; n <= stages; ++n) {
    const long side = 1L << (stages - n);
    // first quadrant whose square fits in the mesh
    bool placed = false;
    for (const auto& [sx, sy] : std::vector<std::pair<long, long>>{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}) {
      std::vector<int> loop;
      bool ok = true;
      const auto add = [&](long i, long j) {
        auto it = at.find({i, j});
        if (it == at.end()) ok = false;
        else loop.push_back(it->second);
      };
      for (long s = 0; s < side; ++s) add(vi + sx * s, vj);
      for (long s = 0; s < side; ++s) add(vi + sx * side, vj + sy * s);
      for (long s = 0; s < side; ++s) add(vi + sx * (side - s), vj + sy * side);
      for (long s = 0; s < side; ++s) add(vi, vj + sy * (side - s));
      if (!ok) continue;
      std::vector<int> edges = k.edges;
      for (std::size_t s = 0; s < loop.size() && ok; ++s) {
        const int id = table.find(loop[s], loop[(s + 1) % loop.size()]);
        if (id < 0) ok = false;
        else edges.push_back(id);
      }
      if (!ok) continue;
      out.push_back(CutPath::from_edges(k.mesh, edges, k.terminal1, k.terminal2));
      placed = true;
      break;
    }
    if (!placed) throw std::invalid_argument("detour square does not fit around the vertex");
  }
  return out;
}

double cut_distance(const CutPath& a, const CutPath& b) {
  return hausdorff_distance(CompactSet::from_points(edge_samples(a)), CompactSet::from_points(edge_samples(b)),
                            a.mesh->grid.box.diameter());
}

CutStabilityReport cut_stability(const CutProblem& problem, const std::vector<CutPath>& cuts, const CutPath& limit) {
  std::vector<CutPath> all = cuts;
  all.push_back(limit);
  std::vector<NodalField> sol(all.size());
  parallel_for(all.size(), [&](std::size_t k) { sol[k] = cut_energy(problem, all[k]).solution; });
  const EdgeFlux gl = gradient(sol.back());
  CutStabilityReport rep;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    rep.hausdorff.push_back(cut_distance(cuts[k], limit));
    const EdgeFlux gk = gradient(sol[k]);
    double s = 0.0;
    for (std::size_t t = 0; t < gk.vectors.size(); ++t)
      s += sol[k].mesh->area(t) * std::pow(norm(gk.vectors[t] - gl.vectors[t]), problem.p);
    rep.grad_gap.push_back(std::pow(s, 1.0 / problem.p));
  }
  return rep;
}

void write_cut(std::ostream& out, const CutPath& cut) {
  out << "cut " << cut.edges.size() << '\n';
  for (int e : cut.edges) out << e << '\n';
  out << "terminals " << cut.terminal1 << ' ' << cut.terminal2 << '\n';
}

CutPath read_cut(std::istream& in, MeshPtr mesh) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "cut") throw IoError("cut file: expected 'cut <E>'");
  std::vector<int> edges(count);
  for (auto& e : edges)
    if (!(in >> e)) throw IoError("cut file: truncated edge list");
  int t1 = -1, t2 = -1;
  if (in >> tag) {
    if (tag != "terminals" || !(in >> t1 >> t2)) throw IoError("cut file: expected 'terminals <t1> <t2>'");
  } else {
    // endpoints of a simple path
    const EdgeTable table(*mesh);
    std::map<int, int> degree;
    for (int e : edges) {
      if (e < 0 || static_cast<std::size_t>(e) >= table.size()) throw IoError("cut file: edge id out of range");
      ++degree[table.edges()[static_cast<std::size_t>(e)].first];
      ++degree[table.edges()[static_cast<std::size_t>(e)].second];
    }
    for (const auto& [v, d] : degree)
      if (d == 1) (t1 < 0 ? t1 : t2) = v;
    if (t2 < 0) throw IoError("cut file: terminals missing and not inferable");
  }
  return CutPath::from_edges(std::move(mesh), std::move(edges), t1, t2);
}

void write_trace_csv(std::ostream& out, const std::vector<AnnealingStep>& trace) {
  out << "step,energy,accepted,temperature\n";
  for (const auto& r : trace)
    out << r.step << ',' << format_real(r.energy) << ',' << (r.accepted ? 1 : 0) << ',' << format_real(r.temperature) << '\n';
}

}  // namespace nsl
