#include "nsl/density.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace nsl {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  }
  // smaller id becomes the root so the unbounded component (id 0) stays 0
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

/// Domain cells whose closure contains p; cells outside the grid report -1.
std::vector<int> touching_cells(const Grid& grid, const Point& p) {
  const double h = grid.cell_size();
  const double gx = (p.x - grid.box.x0) / h;
  const double gy = (p.y - grid.box.y0) / h;
  auto candidates = [](double g) {
    const double r = std::round(g);
    if (std::abs(g - r) < 1e-9) return std::vector<int>{static_cast<int>(r) - 1, static_cast<int>(r)};
    return std::vector<int>{static_cast<int>(std::floor(g))};
  };
  std::vector<int> out;
  for (int j : candidates(gy)) {
    for (int i : candidates(gx)) {
      out.push_back(i < 0 || j < 0 || i >= grid.n || j >= grid.n ? -1 : grid.index(i, j));
    }
  }
  return out;
}

Eigen::SparseMatrix<double> stiffness(const CrackMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b)
        trip.emplace_back(mesh.triangles[t][a], mesh.triangles[t][b], geo.area * dot(geo.basis_gradients[a], geo.basis_gradients[b]));
    }
  }
  const auto n = static_cast<int>(mesh.vertex_count());
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

double dual_exponent(double p) { return p / (p - 1.0); }

}  // namespace

std::vector<int> component_of_vertex(const PixelDomain& domain, const ComponentLabeling& labeling,
                                     const CrackMesh& box_mesh) {
  if (!(box_mesh.grid.box == domain.box())) throw std::invalid_argument("component_of_vertex: box mismatch");
  const Grid& grid = domain.grid();
  UnionFind uf(std::max(1, labeling.count));
  std::vector<std::vector<int>> touched(box_mesh.vertex_count());
  for (std::size_t v = 0; v < box_mesh.vertex_count(); ++v) {
    for (int cell : touching_cells(grid, box_mesh.vertices[v])) {
      const int label = cell < 0 ? labeling.unbounded_id : labeling.labels[static_cast<std::size_t>(cell)];
      if (label >= 0) touched[v].push_back(label);
    }
    for (std::size_t k = 0; k < domain.punctures().size(); ++k) {
      if (distance(domain.punctures()[k], box_mesh.vertices[v]) < 1e-9 * grid.box.side)
        touched[v].push_back(labeling.puncture_labels[k]);
    }
    for (std::size_t k = 1; k < touched[v].size(); ++k) uf.unite(touched[v][0], touched[v][k]);
  }
  std::vector<int> out(box_mesh.vertex_count(), -1);
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (!touched[v].empty()) out[v] = uf.find(touched[v][0]);
  }
  return out;
}

NodalField blend_to_plateaus(const NodalField& phi0, const std::vector<int>& vertex_component,
                             const std::vector<double>& values) {
  const auto& mesh = *phi0.mesh;
  const auto nv = mesh.vertex_count();
  std::vector<int> dof(nv, -1);
  int nfree = 0;
  std::vector<double> w(nv, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (vertex_component[v] < 0) {
      dof[v] = nfree++;
    } else {
      w[v] = values[static_cast<std::size_t>(vertex_component[v])] - phi0.values[v];
    }
  }
  auto out = phi0.values;
  if (nfree > 0) {
    const auto k = stiffness(mesh);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    for (int col = 0; col < k.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
        const int i = dof[static_cast<std::size_t>(it.row())];
        if (i < 0) continue;
        const int j = dof[static_cast<std::size_t>(it.col())];
        if (j >= 0) {
          trip.emplace_back(i, j, it.value());
        } else {
          rhs[i] -= it.value() * w[static_cast<std::size_t>(it.col())];
        }
      }
    }
    Eigen::SparseMatrix<double> kff(nfree, nfree);
    kff.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(kff);
    if (ldlt.info() != Eigen::Success) throw std::invalid_argument("blend_to_plateaus: a mesh component has no plateau vertex");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (std::size_t v = 0; v < nv; ++v) {
      if (dof[v] >= 0) w[v] = x[dof[v]];
    }
  }
  for (std::size_t v = 0; v < nv; ++v) out[v] += w[v];
  // plateau values exactly, not up to round-off
  for (std::size_t v = 0; v < nv; ++v) {
    if (vertex_component[v] >= 0) out[v] = values[static_cast<std::size_t>(vertex_component[v])];
  }
  return NodalField(phi0.mesh, std::move(out));
}

HPerpElement make_hperp_element(NodalField potential, std::vector<double> component_values) {
  HPerpElement e;
  e.field = rotate90(gradient(potential));
  for (auto& v : e.field.vectors) v = -1.0 * v;
  e.potential = std::move(potential);
  e.component_values = std::move(component_values);
  return e;
}

std::vector<HPerpElement> hperp_basis(const PixelDomain& domain, MeshPtr box_mesh, int count, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("hperp_basis: count must be positive");
  if (!(box_mesh->grid == domain.grid())) throw std::invalid_argument("hperp_basis: box mesh must triangulate the domain grid");
  const auto labeling = complement_components(domain);
  const auto vcomp = component_of_vertex(domain, labeling, *box_mesh);
  const Box& box = domain.box();
  std::vector<int> label_root(static_cast<std::size_t>(std::max(1, labeling.count)));
  std::iota(label_root.begin(), label_root.end(), 0);
  for (std::size_t v = 0; v < vcomp.size(); ++v) {
    if (vcomp[v] < 0) continue;
    for (int cell : touching_cells(domain.grid(), box_mesh->vertices[v])) {
      const int label = cell < 0 ? labeling.unbounded_id : labeling.labels[static_cast<std::size_t>(cell)];
      if (label >= 0) label_root[static_cast<std::size_t>(label)] = vcomp[v];
    }
  }
  std::vector<HPerpElement> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, "hperp_basis", k));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    struct Bump {
      Point z;
      double a;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < 4; ++b) bumps.push_back({{box.x0 + box.side * unit(rng), box.y0 + box.side * unit(rng)}, sym(rng)});
    const double sigma = 0.15 * box.side;
    std::vector<double> values(static_cast<std::size_t>(std::max(1, labeling.count)), 0.0);
    for (std::size_t c = 0; c < values.size(); ++c) values[c] = static_cast<int>(c) == labeling.unbounded_id ? 0.0 : sym(rng);
    auto phi0 = NodalField::interpolate(box_mesh, [&](const Point& x) {
      double s = 0.0;
      for (const auto& b : bumps) s += b.a * std::exp(-dot(x - b.z, x - b.z) / (2 * sigma * sigma));
      return s;
    });
    // merged components share the value of their root
    for (std::size_t c = 0; c < values.size(); ++c) values[c] = values[static_cast<std::size_t>(label_root[c])];
    auto blended = blend_to_plateaus(phi0, vcomp, values);
    out[k] = make_hperp_element(std::move(blended), std::move(values));
  });
  return out;
}

double orthogonality_residual(const NodalField& u, const HPerpElement& elem, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("orthogonality_residual: p must exceed 1");
  const auto& um = *u.mesh;
  const auto& bm = *elem.field.mesh;
  if (!(um.grid == bm.grid)) throw std::invalid_argument("orthogonality_residual: mesh mismatch");
  std::vector<int> by_key(static_cast<std::size_t>(2 * bm.grid.cell_count()), -1);
  for (std::size_t t = 0; t < bm.triangle_count(); ++t) by_key[static_cast<std::size_t>(triangle_key(bm, t, bm.grid))] = static_cast<int>(t);
  const auto gu = gradient(u);
  const double q = dual_exponent(p);
  double pairing = 0.0;
  double npsi = 0.0;
  double ngu = 0.0;
  for (std::size_t t = 0; t < um.triangle_count(); ++t) {
    const int bt = by_key[static_cast<std::size_t>(triangle_key(um, t, um.grid))];
    if (bt < 0) throw std::invalid_argument("orthogonality_residual: triangle not in the box mesh");
    const Vec2& psi = elem.field.vectors[static_cast<std::size_t>(bt)];
    const double a = um.area(t);
    pairing += a * dot(psi, gu.vectors[t]);
    npsi += a * std::pow(norm(psi), q);
    ngu += a * std::pow(norm(gu.vectors[t]), p);
  }
  const double denom = std::pow(npsi, 1.0 / q) * std::pow(ngu, 1.0 / p);
  return denom > 0.0 ? std::abs(pairing) / denom : 0.0;
}

FlattenResult flatten_near_components(const NodalField& phi, const PixelDomain& domain,
                                      const ComponentLabeling& labeling, double width, double q) {
  if (!(width >= 0.0)) throw std::invalid_argument("flatten_near_components: width must be nonnegative");
  const auto& mesh = *phi.mesh;
  const Grid& dg = domain.grid();
  if (!(mesh.grid.box == dg.box) || mesh.grid.n % dg.n != 0)
    throw std::invalid_argument("flatten_near_components: mesh does not refine the domain grid");
  const auto vcomp = component_of_vertex(domain, labeling, mesh);

  // component values from the vertices on the components
  std::map<int, double> value;
  for (std::size_t v = 0; v < vcomp.size(); ++v) {
    if (vcomp[v] < 0) continue;
    auto [it, inserted] = value.emplace(vcomp[v], phi.values[v]);
    if (!inserted && std::abs(it->second - phi.values[v]) > 1e-8)
      throw std::invalid_argument("flatten_near_components: phi is not constant on a component");
  }
  // root label of every domain cell's component (merging as above)
  std::vector<int> label_root(static_cast<std::size_t>(std::max(1, labeling.count)));
  for (std::size_t l = 0; l < label_root.size(); ++l) label_root[l] = static_cast<int>(l);
  for (std::size_t v = 0; v < vcomp.size(); ++v) {
    if (vcomp[v] < 0) continue;
    for (int cell : touching_cells(dg, mesh.vertices[v])) {
      const int label = cell < 0 ? labeling.unbounded_id : labeling.labels[static_cast<std::size_t>(cell)];
      if (label >= 0) label_root[static_cast<std::size_t>(label)] = vcomp[v];
    }
  }

  // vertices by mesh node
  const Grid& mg = mesh.grid;
  const double hm = mg.cell_size();
  std::map<std::pair<int, int>, std::vector<int>> node_vertices;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const auto i = static_cast<int>(std::lround((mesh.vertices[v].x - mg.box.x0) / hm));
    const auto j = static_cast<int>(std::lround((mesh.vertices[v].y - mg.box.y0) / hm));
    node_vertices[{i, j}].push_back(static_cast<int>(v));
  }

  FlattenResult res;
  for (;;) {
    std::vector<int> assign(mesh.vertex_count(), -1);
    bool overlap = false;
    auto mark = [&](int v, int root) {
      int& a = assign[static_cast<std::size_t>(v)];
      if (a >= 0 && a != root) overlap = true;
      a = root;
    };
    const double tol = 1e-9 * hm;
    auto mark_square = [&](double x0, double y0, double x1, double y1, int root) {
      const int i0 = static_cast<int>(std::ceil((x0 - width - mg.box.x0) / hm - 1e-9));
      const int i1 = static_cast<int>(std::floor((x1 + width - mg.box.x0) / hm + 1e-9));
      const int j0 = static_cast<int>(std::ceil((y0 - width - mg.box.y0) / hm - 1e-9));
      const int j1 = static_cast<int>(std::floor((y1 + width - mg.box.y0) / hm + 1e-9));
      for (int j = std::max(0, j0); j <= std::min(mg.n, j1); ++j) {
        for (int i = std::max(0, i0); i <= std::min(mg.n, i1); ++i) {
          const Point p = mg.node(i, j);
          const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
          const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
          if (std::hypot(dx, dy) > width + tol) continue;
          auto it = node_vertices.find({i, j});
          if (it == node_vertices.end()) continue;
          for (int v : it->second) mark(v, root);
        }
      }
    };
    const double hd = dg.cell_size();
    for (int cell = 0; cell < dg.cell_count(); ++cell) {
      const int label = labeling.labels[static_cast<std::size_t>(cell)];
      if (label < 0) continue;
      const Point c = dg.cell_center(cell);
      mark_square(c.x - hd / 2, c.y - hd / 2, c.x + hd / 2, c.y + hd / 2, label_root[static_cast<std::size_t>(label)]);
    }
    for (std::size_t k = 0; k < domain.punctures().size(); ++k) {
      const Point& z = domain.punctures()[k];
      mark_square(z.x, z.y, z.x, z.y, label_root[static_cast<std::size_t>(labeling.puncture_labels[k])]);
    }
    const int outer = label_root[static_cast<std::size_t>(labeling.unbounded_id)];
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      const Point& p = mesh.vertices[v];
      const double d = std::min({p.x - mg.box.x0, mg.box.x0 + mg.box.side - p.x, p.y - mg.box.y0, mg.box.y0 + mg.box.side - p.y});
      if (d <= width + tol) mark(static_cast<int>(v), outer);
    }
    if (overlap && width > 0.0) {
      width *= 0.5;
      res.width_reduced = true;
      if (width < 1e-6 * hm) width = 0.0;
      continue;
    }
    auto out = phi.values;
    for (std::size_t v = 0; v < out.size(); ++v) {
      if (assign[v] >= 0) {
        auto it = value.find(assign[v]);
        if (it != value.end()) out[v] = it->second;
      }
    }
    res.field = NodalField(phi.mesh, std::move(out));
    break;
  }
  res.width = width;
  std::vector<double> diff(phi.values.size());
  for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = res.field.values[v] - phi.values[v];
  res.distance = w1p_norm(NodalField(phi.mesh, std::move(diff)), q);
  return res;
}

std::vector<FlattenResult> flatten_trace(const NodalField& phi, const PixelDomain& domain, int levels, double q) {
  if (levels <= 0) throw std::invalid_argument("flatten_trace: levels must be positive");
  const auto labeling = complement_components(domain);
  std::vector<FlattenResult> out;
  NodalField current = phi;
  for (int n = 1; n <= levels; ++n) {
    if (n > 1) current = prolong(current, std::make_shared<const CrackMesh>(refine(*current.mesh)));
    out.push_back(flatten_near_components(current, domain, labeling, current.mesh->grid.cell_size(), q));
  }
  return out;
}

double log_profile(double r, double support, double log_ratio) {
  if (r >= support) return 0.0;
  if (r <= 0.0) return 1.0;
  const double l = std::log(support / r);
  return std::min(1.0, l / log_ratio);
}

double log_profile_norm2(double support, double log_ratio) {
  using std::numbers::pi;
  const double L = log_ratio;
  const double R = support;
  const double rho2 = R * R * std::exp(-2 * L);  // rho^2
  const double grad2 = 2 * pi / L;
  // int_rho^R r log^2(R/r) dr
  const double tail = R * R / 4 - rho2 * (L * L / 2 + L / 2 + 0.25);
  return grad2 + pi * rho2 + 2 * pi / (L * L) * tail;
}

double value_coverage(const std::vector<double>& values, double radius) {
  std::vector<std::pair<double, double>> iv;
  for (double v : values) iv.emplace_back(std::max(-1.0, v - radius), std::min(1.0, v + radius));
  std::sort(iv.begin(), iv.end());
  double covered = 0.0;
  double reach = -1.0;
  for (const auto& [a, b] : iv) {
    const double lo = std::max(a, reach);
    if (b > lo) {
      covered += b - lo;
      reach = b;
    }
  }
  return covered / 2.0;
}

MalyMartioOutput maly_martio(int stages, std::vector<double> alpha_schedule, int grid_n) {
  if (stages < 1) throw std::invalid_argument("maly_martio: stages must be >= 1");
  if (grid_n < 4) throw std::invalid_argument("maly_martio: grid_n must be >= 4");
  if (!alpha_schedule.empty() && static_cast<int>(alpha_schedule.size()) < stages)
    throw std::invalid_argument("maly_martio: alpha schedule shorter than the stage count");
  for (double a : alpha_schedule) {
    if (!(a > 0.0 && a <= 2.0)) throw std::invalid_argument("maly_martio: alpha must lie in (0, 2]");
  }
  MalyMartioOutput out;
  const Grid grid{grid_n, Box{}};
  const double h = grid.cell_size();
  auto mesh = std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(grid_n)));

  // phi(x) = sum over stages of sum_i amp_i * profile(|x - c_i|)
  auto model = [&](const Point& x) {
    double s = 0.0;
    for (const auto& st : out.stages) {
      for (std::size_t i = 0; i < st.centers.size(); ++i) {
        const double r = distance(x, st.centers[i]);
        if (r < st.support_radius) s += st.amplitudes[i] * log_profile(r, st.support_radius, st.log_ratio);
      }
    }
    return s;
  };

  std::vector<Point> parents{{0.5, 0.5}};
  std::vector<double> parent_targets{0.0};
  for (int s = 1; s <= stages; ++s) {
    const double d = 0.25 * std::pow(0.5, (s - 1) / 2);
    const Vec2 axis = s % 2 == 1 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    const double support = 0.9 * d;
    if (support < 2 * h) {
      out.truncated = true;
      break;
    }
    MalyMartioStage st;
    st.stage = s;
    st.alpha = alpha_schedule.empty() ? 1.0 / s : alpha_schedule[static_cast<std::size_t>(s - 1)];
    st.support_radius = support;
    st.budget = std::pow(0.5, s);
    const double step = std::pow(0.5, s);
    for (std::size_t k = 0; k < parents.size(); ++k) {
      for (double sign : {-1.0, 1.0}) {
        st.centers.push_back(parents[k] + sign * d * axis);
        st.targets.push_back(parent_targets[k] + sign * step);
      }
    }
    double amp2 = 0.0;
    for (std::size_t i = 0; i < st.centers.size(); ++i) {
      st.amplitudes.push_back(st.targets[i] - model(st.centers[i]));
      amp2 += st.amplitudes.back() * st.amplitudes.back();
    }
    // smallest log ratio meeting the budget; the upper end of the bracket is returned
    auto norm2 = [&](double L) { return amp2 * log_profile_norm2(support, L); };
    const double budget2 = st.budget * st.budget;
    double hi = 1.0;
    while (norm2(hi) > budget2) hi *= 2.0;
    double lo = hi / 2;
    if (norm2(lo) <= budget2) lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm2(mid) <= budget2 ? hi : lo) = mid;
    }
    st.log_ratio = hi;
    st.plateau_radius = support * std::exp(-hi);
    st.increment_norm = std::sqrt(norm2(hi));
    st.plateau_resolved = st.plateau_radius >= 2 * h;
    out.stages.push_back(st);
    auto& cur = out.stages.back();
    for (const auto& c : cur.centers) cur.center_values.push_back(model(c));
    cur.coverage = value_coverage(cur.center_values, step);
    // log of #balls * rho^alpha, to survive underflow of rho
    cur.count_radius_stat = std::log(static_cast<double>(cur.centers.size())) + cur.alpha * (std::log(support) - hi);
    cur.field = NodalField::interpolate(mesh, model);
    out.alphas.push_back(cur.alpha);
    parents = cur.centers;
    parent_targets = cur.targets;
  }

  // domain: the unit square minus the closed cells around the finest centres
  auto dom = PixelDomain::full(grid_n);
  if (!out.stages.empty()) {
    std::vector<char> mask = dom.mask();
    for (const auto& c : out.stages.back().centers) {
      for (int cell : touching_cells(grid, c)) {
        if (cell >= 0) mask[static_cast<std::size_t>(cell)] = 0;
      }
    }
    dom = PixelDomain(grid, std::move(mask));
  }
  out.domain = std::move(dom);
  return out;
}

namespace {

struct Cubic {
  // Hermite basis on [0,1]: value-left, value-right, slope-left, slope-right
  static std::array<double, 4> v(double t) {
    return {2 * t * t * t - 3 * t * t + 1, -2 * t * t * t + 3 * t * t, t * t * t - 2 * t * t + t, t * t * t - t * t};
  }
  static std::array<double, 4> d(double t) {
    return {6 * t * t - 6 * t, -6 * t * t + 6 * t, 3 * t * t - 4 * t + 1, 3 * t * t - 2 * t};
  }
  static std::array<double, 4> dd(double t) { return {12 * t - 6, -12 * t + 6, 6 * t - 4, 6 * t - 2}; }
};

HermiteField::Jet evaluate_cell(const HermiteField& f, int ci, int cj, const Point& x) {
  const Grid& g = f.grid;
  const double h = g.cell_size();
  const double t = (x.x - g.box.x0) / h - ci;
  const double s = (x.y - g.box.y0) / h - cj;
  const auto xv = Cubic::v(t), xd = Cubic::d(t), xdd = Cubic::dd(t);
  const auto yv = Cubic::v(s), yd = Cubic::d(s), ydd = Cubic::dd(s);
  HermiteField::Jet jet;
  const int stride = g.n + 1;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      const auto& node = f.nodes[static_cast<std::size_t>((cj + b) * stride + ci + a)];
      // (x-basis index, y-basis index, coefficient scaled to the unit cell)
      const std::array<std::array<double, 3>, 4> terms{{
          {static_cast<double>(a), static_cast<double>(b), node[0]},
          {static_cast<double>(a + 2), static_cast<double>(b), node[1] * h},
          {static_cast<double>(a), static_cast<double>(b + 2), node[2] * h},
          {static_cast<double>(a + 2), static_cast<double>(b + 2), node[3] * h * h},
      }};
      for (const auto& term : terms) {
        const auto ix = static_cast<std::size_t>(term[0]);
        const auto iy = static_cast<std::size_t>(term[1]);
        const double c = term[2];
        jet.value += c * xv[ix] * yv[iy];
        jet.grad.x += c * xd[ix] * yv[iy] / h;
        jet.grad.y += c * xv[ix] * yd[iy] / h;
        jet.xx += c * xdd[ix] * yv[iy] / (h * h);
        jet.xy += c * xd[ix] * yd[iy] / (h * h);
        jet.yy += c * xv[ix] * ydd[iy] / (h * h);
      }
    }
  }
  return jet;
}

constexpr std::array<double, 5> kGaussX{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussW{0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};

}  // namespace

HermiteField::Jet HermiteField::evaluate(const Point& x) const {
  const auto cell = grid.locate(x);
  if (!cell) throw std::invalid_argument("HermiteField: point outside the grid");
  return evaluate_cell(*this, *cell % grid.n, *cell / grid.n, x);
}

HermiteField HermiteField::from_function(const Grid& grid, const Fn& fn) {
  HermiteField f;
  f.grid = grid;
  for (int j = 0; j <= grid.n; ++j) {
    for (int i = 0; i <= grid.n; ++i) f.nodes.push_back(fn(grid.node(i, j)));
  }
  return f;
}

HermiteField airy_potential(const PixelDomain& domain, const ComponentLabeling& labeling,
                            const std::vector<std::array<double, 3>>& linear_data, std::uint64_t seed) {
  if (static_cast<int>(linear_data.size()) < labeling.count)
    throw std::invalid_argument("airy_potential: one linear datum per component required");
  const Grid& g = domain.grid();
  const int n = g.n;
  const int stride = n + 1;
  std::vector<int> node_comp(static_cast<std::size_t>(stride * stride), -1);
  bool clash = false;
  auto claim_cell_corners = [&](int i, int j, int comp) {
    for (int b = 0; b < 2; ++b) {
      for (int a = 0; a < 2; ++a) {
        int& slot = node_comp[static_cast<std::size_t>((j + b) * stride + i + a)];
        if (slot >= 0 && slot != comp) clash = true;
        slot = comp;
      }
    }
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // one-cell dilation: the 3x3 block around the cell, exterior counts as unbounded
      int comp = -1;
      for (int dj = -1; dj <= 1 && !clash; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di;
          const int jj = j + dj;
          const int label = ii < 0 || jj < 0 || ii >= n || jj >= n ? labeling.unbounded_id
                                                                    : labeling.labels[static_cast<std::size_t>(g.index(ii, jj))];
          if (label < 0) continue;
          if (comp >= 0 && comp != label) clash = true;
          comp = label;
        }
      }
      if (comp >= 0) claim_cell_corners(i, j, comp);
    }
  }
  if (clash) throw std::invalid_argument("airy_potential: dilated components overlap");
  std::mt19937_64 rng(derive_seed(seed, "airy_potential", 0));
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  return HermiteField::from_function(g, [&](const Point& x) -> std::array<double, 4> {
    const double h = g.cell_size();
    const auto i = static_cast<int>(std::lround((x.x - g.box.x0) / h));
    const auto j = static_cast<int>(std::lround((x.y - g.box.y0) / h));
    const int comp = node_comp[static_cast<std::size_t>(j * stride + i)];
    if (comp >= 0) {
      const auto& d = linear_data[static_cast<std::size_t>(comp)];
      return {d[0] * x.x + d[1] * x.y + d[2], d[0], d[1], 0.0};
    }
    return {sym(rng), sym(rng), sym(rng), sym(rng)};
  });
}

namespace {

struct AiryParts {
  double pairing = 0.0;
  double hess_norm2 = 0.0;
  double strain_norm2 = 0.0;
};

AiryParts airy_parts(const NodalField& v1, const NodalField& v2, const HermiteField& phi) {
  const auto& mesh = *v1.mesh;
  if (v2.mesh.get() != v1.mesh.get()) throw std::invalid_argument("airy_orthogonality: v1 and v2 live on different meshes");
  if (!(mesh.grid.box == phi.grid.box) || mesh.grid.n % phi.grid.n != 0)
    throw std::invalid_argument("airy_orthogonality: mesh does not refine the Hermite grid");
  const auto g1 = gradient(v1);
  const auto g2 = gradient(v2);
  AiryParts parts;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto cell = phi.grid.locate(mesh.centroid(t));
    const int ci = *cell % phi.grid.n;
    const int cj = *cell / phi.grid.n;
    const double e11 = g1.vectors[t].x;
    const double e22 = g2.vectors[t].y;
    const double e12 = 0.5 * (g1.vectors[t].y + g2.vectors[t].x);
    // int_T phi_xx = oint phi_x n_x, int_T phi_yy = oint phi_y n_y, int_T phi_xy = oint phi_x n_y
    double ixx = 0.0, iyy = 0.0, ixy = 0.0;
    const auto& tri = mesh.triangles[t];
    for (std::size_t k = 0; k < 3; ++k) {
      const Point& a = mesh.vertices[static_cast<std::size_t>(tri[k])];
      const Point& b = mesh.vertices[static_cast<std::size_t>(tri[(k + 1) % 3])];
      const Vec2 e = b - a;
      for (std::size_t q = 0; q < kGaussX.size(); ++q) {
        const double s = 0.5 * (kGaussX[q] + 1.0);
        const auto jet = evaluate_cell(phi, ci, cj, a + s * e);
        const double w = 0.5 * kGaussW[q];
        ixx += w * jet.grad.x * e.y;
        iyy += w * jet.grad.y * -e.x;
        ixy += w * jet.grad.x * -e.x;
      }
    }
    parts.pairing += e11 * iyy - 2 * e12 * ixy + e22 * ixx;
    const double area = mesh.area(t);
    parts.strain_norm2 += area * (e11 * e11 + 2 * e12 * e12 + e22 * e22);
    // collapsed Gauss rule for the Hessian norm
    const Point& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Point& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Point& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    for (std::size_t i = 0; i < kGaussX.size(); ++i) {
      const double u = 0.5 * (kGaussX[i] + 1.0);
      for (std::size_t j = 0; j < kGaussX.size(); ++j) {
        const double w = 0.5 * (kGaussX[j] + 1.0);
        const double l1 = u * (1 - w);
        const double l2 = u * w;
        const Point x = (1 - l1 - l2) * p0 + l1 * p1 + l2 * p2;
        const double weight = 0.25 * kGaussW[i] * kGaussW[j] * u * 2.0 * area;
        const auto jet = evaluate_cell(phi, ci, cj, x);
        parts.hess_norm2 += weight * (jet.yy * jet.yy + 2 * jet.xy * jet.xy + jet.xx * jet.xx);
      }
    }
  }
  return parts;
}

}  // namespace

double airy_pairing(const NodalField& v1, const NodalField& v2, const HermiteField& phi) {
  return airy_parts(v1, v2, phi).pairing;
}

double airy_orthogonality(const NodalField& v1, const NodalField& v2, const HermiteField& phi) {
  const auto parts = airy_parts(v1, v2, phi);
  const double denom = std::sqrt(parts.hess_norm2 * parts.strain_norm2);
  return denom > 0.0 ? std::abs(parts.pairing) / denom : 0.0;
}

void write_coverage_csv(std::ostream& out, const MalyMartioOutput& mm) {
  out << "stage,coverage,increment_norm\n";
  for (const auto& st : mm.stages)
    out << st.stage << ',' << format_real(st.coverage) << ',' << format_real(st.increment_norm) << '\n';
}

void save_maly_martio(const std::string& dir, const MalyMartioOutput& mm) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw IoError("cannot write " + (std::filesystem::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("coverage.csv");
    write_coverage_csv(f, mm);
  }
  if (!mm.stages.empty()) {
    auto f = open("grid_mesh.txt");
    write_mesh(f, *mm.stages.front().field.mesh);
  }
  for (const auto& st : mm.stages) {
    auto f = open("stage_" + std::to_string(st.stage) + ".csv");
    write_field_csv(f, st.field, "grid_mesh.txt");
  }
  auto f = open("domain.txt");
  write_domain(f, mm.domain);
}

}  // namespace nsl
