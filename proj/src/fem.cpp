#include "nsl/fem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace nsl {

NodalField::NodalField(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh) throw std::invalid_argument("nodal field: null mesh");
  if (values.size() != mesh->vertex_count()) throw std::invalid_argument("nodal field: size does not match vertex count");
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("nodal field: non-finite value");
  }
}

NodalField NodalField::zeros(MeshPtr m) {
  const auto n = m->vertex_count();
  return NodalField(std::move(m), std::vector<double>(n, 0.0));
}

NodalField NodalField::interpolate(MeshPtr m, const ScalarFunction& fn) {
  std::vector<double> v;
  v.reserve(m->vertex_count());
  for (const auto& p : m->vertices) v.push_back(fn(p));
  return NodalField(std::move(m), std::move(v));
}

double NodalField::centroid_value(std::size_t t) const {
  const auto& tri = mesh->triangles[t];
  return (values[static_cast<std::size_t>(tri[0])] + values[static_cast<std::size_t>(tri[1])] +
          values[static_cast<std::size_t>(tri[2])]) / 3.0;
}

NodalField prolong(const NodalField& coarse, MeshPtr fine) {
  const auto& cm = *coarse.mesh;
  if (fine->parent_triangle.size() != fine->triangle_count()) throw std::invalid_argument("prolong: fine mesh has no parent linkage");
  std::vector<double> v(fine->vertex_count(), 0.0);
  for (std::size_t t = 0; t < fine->triangle_count(); ++t) {
    const auto parent = static_cast<std::size_t>(fine->parent_triangle[t]);
    if (parent >= cm.triangle_count()) throw std::invalid_argument("prolong: parent triangle out of range");
    const auto& pt = cm.triangles[parent];
    const auto geo = element_geometry(cm, parent);
    const Point& a = cm.vertices[static_cast<std::size_t>(pt[0])];
    const double ua = coarse.values[static_cast<std::size_t>(pt[0])];
    Vec2 g{};
    for (std::size_t k = 0; k < 3; ++k) g += coarse.values[static_cast<std::size_t>(pt[k])] * geo.basis_gradients[k];
    for (int w : fine->triangles[t]) v[static_cast<std::size_t>(w)] = ua + dot(g, fine->vertices[static_cast<std::size_t>(w)] - a);
  }
  return NodalField(std::move(fine), std::move(v));
}

EdgeFlux::EdgeFlux(MeshPtr m, std::vector<Vec2> v) : mesh(std::move(m)), vectors(std::move(v)) {
  if (!mesh) throw std::invalid_argument("flux: null mesh");
  if (vectors.size() != mesh->triangle_count()) throw std::invalid_argument("flux: size does not match triangle count");
}

ElementGeometry element_geometry(const CrackMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Point& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
  const Point& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
  const Point& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
  ElementGeometry g;
  const double twice = cross(b - a, c - a);
  g.area = 0.5 * twice;
  // grad lambda_k = R(opposite edge) / (2 area)
  auto perp = [&](const Vec2& e) { return Vec2{-e.y / twice, e.x / twice}; };
  g.basis_gradients[0] = perp(c - b);
  g.basis_gradients[1] = perp(a - c);
  g.basis_gradients[2] = perp(b - a);
  return g;
}

EdgeFlux gradient(const NodalField& u) {
  const auto& mesh = *u.mesh;
  std::vector<Vec2> out(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    Vec2 g{};
    for (int k = 0; k < 3; ++k)
      g += u.values[static_cast<std::size_t>(mesh.triangles[t][static_cast<std::size_t>(k)])] * geo.basis_gradients[static_cast<std::size_t>(k)];
    out[t] = g;
  }
  return EdgeFlux(u.mesh, std::move(out));
}

EdgeFlux rotate90(const EdgeFlux& w) {
  std::vector<Vec2> out;
  out.reserve(w.vectors.size());
  for (const auto& v : w.vectors) out.push_back(rotate90(v));
  return EdgeFlux(w.mesh, std::move(out));
}

EdgeFlux operator+(const EdgeFlux& a, const EdgeFlux& b) {
  if (a.vectors.size() != b.vectors.size()) throw std::invalid_argument("flux: size mismatch");
  std::vector<Vec2> out(a.vectors.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.vectors[i] + b.vectors[i];
  return EdgeFlux(a.mesh, std::move(out));
}

EdgeFlux operator-(const EdgeFlux& a, const EdgeFlux& b) {
  if (a.vectors.size() != b.vectors.size()) throw std::invalid_argument("flux: size mismatch");
  std::vector<Vec2> out(a.vectors.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.vectors[i] - b.vectors[i];
  return EdgeFlux(a.mesh, std::move(out));
}

double inner_product(const EdgeFlux& a, const EdgeFlux& b) {
  if (a.vectors.size() != b.vectors.size()) throw std::invalid_argument("inner_product: size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < a.vectors.size(); ++t) s += a.mesh->area(t) * dot(a.vectors[t], b.vectors[t]);
  return s;
}

double lp_norm(const EdgeFlux& w, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  for (std::size_t t = 0; t < w.vectors.size(); ++t) s += w.mesh->area(t) * std::pow(norm(w.vectors[t]), p);
  return std::pow(s, 1.0 / p);
}

double lp_norm_scalar(const NodalField& u, double p, std::optional<std::span<const double>> weight) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_scalar: p must be >= 1");
  const auto& mesh = *u.mesh;
  if (weight && weight->size() != mesh.triangle_count()) throw std::invalid_argument("lp_norm_scalar: weight size mismatch");
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double b = weight ? (*weight)[t] : 1.0;
    s += b * mesh.area(t) * std::pow(std::abs(u.centroid_value(t)), p);
  }
  return std::pow(s, 1.0 / p);
}

double w1p_norm(const NodalField& u, double q) {
  const double a = lp_norm_scalar(u, q);
  const double b = lp_norm(gradient(u), q);
  return std::pow(std::pow(a, q) + std::pow(b, q), 1.0 / q);
}

namespace {

void check_target(const CrackMesh& mesh, const PixelDomain& target) {
  if (!(mesh.grid.box == target.box())) throw std::invalid_argument("extend_by_zero: box mismatch");
  if (mesh.grid.n < target.resolution() || mesh.grid.n % target.resolution() != 0)
    throw std::invalid_argument("extend_by_zero: source mesh coarser than or misaligned with the target grid");
}

template <class T, class Getter>
std::vector<T> cell_average(const CrackMesh& mesh, const Grid& grid, Getter value) {
  std::vector<T> sum(static_cast<std::size_t>(grid.cell_count()), T{});
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto cell = grid.locate(mesh.centroid(t));
    if (!cell) continue;
    const double a = mesh.area(t);
    sum[static_cast<std::size_t>(*cell)] += a * value(t);
  }
  const double inv = 1.0 / grid.cell_area();
  for (auto& s : sum) s *= inv;
  return sum;
}

}  // namespace

GridVectorField extend_by_zero(const EdgeFlux& w, const PixelDomain& target) {
  check_target(*w.mesh, target);
  return {target.grid(), cell_average<Vec2>(*w.mesh, target.grid(), [&](std::size_t t) { return w.vectors[t]; })};
}

GridField extend_by_zero(const NodalField& u, const PixelDomain& target) {
  check_target(*u.mesh, target);
  return {target.grid(), cell_average<double>(*u.mesh, target.grid(), [&](std::size_t t) { return u.centroid_value(t); })};
}

GridField indicator(const PixelDomain& domain) {
  GridField f{domain.grid(), std::vector<double>(static_cast<std::size_t>(domain.grid().cell_count()), 0.0)};
  for (int c = 0; c < domain.grid().cell_count(); ++c) f.values[static_cast<std::size_t>(c)] = domain.inside(c) ? 1.0 : 0.0;
  return f;
}

double grid_lp_norm(const GridField& f, double p, std::optional<std::span<const double>> weight) {
  if (!(p >= 1.0)) throw std::invalid_argument("grid_lp_norm: p must be >= 1");
  double s = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    const double b = weight ? (*weight)[c] : 1.0;
    s += b * std::pow(std::abs(f.values[c]), p);
  }
  return std::pow(s * f.grid.cell_area(), 1.0 / p);
}

double grid_lp_norm(const GridVectorField& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("grid_lp_norm: p must be >= 1");
  double s = 0.0;
  for (const auto& v : f.values) s += std::pow(norm(v), p);
  return std::pow(s * f.grid.cell_area(), 1.0 / p);
}

GridField operator-(const GridField& a, const GridField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("grid field: grid mismatch");
  GridField out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

GridVectorField operator-(const GridVectorField& a, const GridVectorField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("grid field: grid mismatch");
  GridVectorField out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

NodalField truncate(const NodalField& u, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("truncate: k must be positive");
  auto v = u.values;
  for (double& x : v) x = std::clamp(x, -k, k);
  return NodalField(u.mesh, std::move(v));
}

double flatten_level_map(double y, std::span<const double> levels, int n) {
  if (n <= 0) throw std::invalid_argument("flatten_levels: n must be positive");
  if (levels.empty()) throw std::invalid_argument("flatten_levels: empty level set");
  // merged closed intervals [c - 1/n, c + 1/n]
  std::vector<double> c(levels.begin(), levels.end());
  std::sort(c.begin(), c.end());
  const double r = 1.0 / n;
  std::vector<std::pair<double, double>> intervals;
  for (double v : c) {
    if (!intervals.empty() && v - r <= intervals.back().second) {
      intervals.back().second = v + r;
    } else {
      intervals.emplace_back(v - r, v + r);
    }
  }
  // T(y) = y - meas(C_n ∩ [0,y]) for y >= 0, y + meas(C_n ∩ [y,0]) otherwise
  const double lo = std::min(0.0, y);
  const double hi = std::max(0.0, y);
  double covered = 0.0;
  for (const auto& [a, b] : intervals) covered += std::max(0.0, std::min(b, hi) - std::max(a, lo));
  return y >= 0.0 ? y - covered : y + covered;
}

NodalField flatten_levels(const NodalField& phi, std::span<const double> levels, int n) {
  auto v = phi.values;
  for (double& x : v) x = flatten_level_map(x, levels, n);
  return NodalField(phi.mesh, std::move(v));
}

NodalField mean_normalize(const NodalField& u, std::span<const int> triangles) {
  if (triangles.empty()) throw std::invalid_argument("mean_normalize: empty triangle set");
  double integral = 0.0;
  double area = 0.0;
  for (int t : triangles) {
    const auto tt = static_cast<std::size_t>(t);
    if (t < 0 || tt >= u.mesh->triangle_count()) throw std::invalid_argument("mean_normalize: triangle index out of range");
    integral += u.mesh->area(tt) * u.centroid_value(tt);
    area += u.mesh->area(tt);
  }
  const double mean = integral / area;
  auto v = u.values;
  for (double& x : v) x -= mean;
  return NodalField(u.mesh, std::move(v));
}

std::vector<double> solve_neumann_laplacian(const CrackMesh& mesh, std::vector<double> rhs) {
  const auto nv = static_cast<int>(mesh.vertex_count());
  const auto comps = mesh_components(mesh);
  std::vector<int> pinned(static_cast<std::size_t>(comps.count), -1);
  for (int v = 0; v < nv; ++v) {
    const int c = comps.of_vertex[static_cast<std::size_t>(v)];
    if (c >= 0 && pinned[static_cast<std::size_t>(c)] < 0) pinned[static_cast<std::size_t>(c)] = v;
  }
  std::vector<char> fixed(static_cast<std::size_t>(nv), 0);
  for (int v = 0; v < nv; ++v) {
    if (comps.of_vertex[static_cast<std::size_t>(v)] < 0) fixed[static_cast<std::size_t>(v)] = 1;
  }
  for (int v : pinned) fixed[static_cast<std::size_t>(v)] = 1;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangle_count() * 9 + static_cast<std::size_t>(nv));
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    for (int a = 0; a < 3; ++a) {
      const int i = mesh.triangles[t][static_cast<std::size_t>(a)];
      if (fixed[static_cast<std::size_t>(i)]) continue;
      for (int b = 0; b < 3; ++b) {
        const int j = mesh.triangles[t][static_cast<std::size_t>(b)];
        if (fixed[static_cast<std::size_t>(j)]) continue;
        trip.emplace_back(i, j, geo.area * dot(geo.basis_gradients[static_cast<std::size_t>(a)], geo.basis_gradients[static_cast<std::size_t>(b)]));
      }
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (fixed[static_cast<std::size_t>(v)]) trip.emplace_back(v, v, 1.0);
  }
  Eigen::SparseMatrix<double> K(nv, nv);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b(nv);
  for (int v = 0; v < nv; ++v) b[v] = fixed[static_cast<std::size_t>(v)] ? 0.0 : rhs[static_cast<std::size_t>(v)];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw std::runtime_error("neumann laplacian: factorization failed");
  Eigen::VectorXd x = solver.solve(b);

  // zero mean per component
  std::vector<double> integral(static_cast<std::size_t>(comps.count), 0.0), area(static_cast<std::size_t>(comps.count), 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = mesh.area(t);
    const auto c = static_cast<std::size_t>(comps.of_triangle[t]);
    integral[c] += a * (x[tri[0]] + x[tri[1]] + x[tri[2]]) / 3.0;
    area[c] += a;
  }
  std::vector<double> out(static_cast<std::size_t>(nv), 0.0);
  for (int v = 0; v < nv; ++v) {
    const int c = comps.of_vertex[static_cast<std::size_t>(v)];
    if (c < 0) continue;
    out[static_cast<std::size_t>(v)] = x[v] - integral[static_cast<std::size_t>(c)] / area[static_cast<std::size_t>(c)];
  }
  return out;
}

HelmholtzSplit helmholtz_split(const EdgeFlux& w, double p_dual) {
  if (!(p_dual >= 1.0)) throw std::invalid_argument("helmholtz_split: p_dual must be >= 1");
  const auto& mesh = *w.mesh;
  std::vector<double> rhs(mesh.vertex_count(), 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto geo = element_geometry(mesh, t);
    for (int k = 0; k < 3; ++k)
      rhs[static_cast<std::size_t>(mesh.triangles[t][static_cast<std::size_t>(k)])] += geo.area * dot(geo.basis_gradients[static_cast<std::size_t>(k)], w.vectors[t]);
  }
  HelmholtzSplit out;
  out.potential = NodalField(w.mesh, solve_neumann_laplacian(mesh, std::move(rhs)));
  out.gradient_part = gradient(out.potential);
  out.solenoidal_part = w - out.gradient_part;
  out.gradient_norm = lp_norm(out.gradient_part, p_dual);
  out.solenoidal_norm = lp_norm(out.solenoidal_part, p_dual);
  return out;
}

void write_field_csv(std::ostream& out, const NodalField& u, const std::string& mesh_name) {
  out << "# mesh " << mesh_name << '\n';
  out << "vertex_id,value\n";
  for (std::size_t v = 0; v < u.values.size(); ++v) out << v << ',' << format_real(u.values[v]) << '\n';
}

std::vector<double> read_field_csv(std::istream& in) {
  std::vector<std::pair<std::size_t, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("vertex_id", 0) == 0) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::size_t id = 0;
    double value = 0.0;
    if (!(ss >> id >> value)) throw IoError("field csv: malformed line");
    rows.emplace_back(id, value);
  }
  std::vector<double> out(rows.size(), 0.0);
  for (const auto& [id, value] : rows) {
    if (id >= out.size()) throw IoError("field csv: vertex ids are not contiguous");
    out[id] = value;
  }
  return out;
}

void write_flux_csv(std::ostream& out, const EdgeFlux& w) {
  out << "triangle_id,vx,vy\n";
  for (std::size_t t = 0; t < w.vectors.size(); ++t)
    out << t << ',' << format_real(w.vectors[t].x) << ',' << format_real(w.vectors[t].y) << '\n';
}

}  // namespace nsl
