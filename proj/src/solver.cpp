#include "nsl/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace nsl {

ProblemSpec ProblemSpec::constant(const CrackMesh& mesh, double p, double b, double f, double g) {
  ProblemSpec s;
  s.p = p;
  const auto nt = mesh.triangle_count();
  s.b.assign(nt, b);
  s.f.assign(nt, f);
  s.g_load.assign(nt, g);
  return s;
}

ProblemSpec ProblemSpec::sampled(const CrackMesh& mesh, double p, const ScalarFunction& b, const ScalarFunction& f,
                                 const ScalarFunction& g) {
  ProblemSpec s;
  s.p = p;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Point c = mesh.centroid(t);
    s.b.push_back(b(c));
    s.f.push_back(f(c));
    s.g_load.push_back(g ? g(c) : 0.0);
  }
  return s;
}

void ProblemSpec::validate(const CrackMesh& mesh) const {
  const auto nt = mesh.triangle_count();
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("problem: p must lie in (1, 2]");
  if (b.size() != nt || f.size() != nt || g_load.size() != nt) throw std::invalid_argument("problem: per-triangle data size mismatch");
  if (op == OperatorKind::scaled && a.size() != nt) throw std::invalid_argument("problem: scaled operator needs a per triangle");
  if (dirichlet_vertices.size() != dirichlet_values.size()) throw std::invalid_argument("problem: dirichlet ids and values differ in length");
  for (double v : b) {
    if (!(v >= 0.0)) throw std::invalid_argument("problem: b must be nonnegative");
  }
  if (op == OperatorKind::scaled) {
    for (double v : a) {
      if (!(v >= 0.0)) throw std::invalid_argument("problem: a must be nonnegative");
    }
  }
  for (int v : dirichlet_vertices) {
    if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertex_count()) throw std::invalid_argument("problem: dirichlet vertex out of range");
  }
  if (!(epsilon0 > 0.0) || !(epsilon_min > 0.0)) throw std::invalid_argument("problem: epsilon must be positive");
}

namespace {

struct Assembly {
  const CrackMesh& mesh;
  const ProblemSpec& spec;
  std::vector<ElementGeometry> geo;
  std::vector<double> mass;  // lumped b
  std::vector<double> load;  // lumped h = b f + g
  double load_norm = 0.0;

  Assembly(const CrackMesh& m, const ProblemSpec& s) : mesh(m), spec(s) {
    const auto nv = mesh.vertex_count();
    mass.assign(nv, 0.0);
    load.assign(nv, 0.0);
    geo.reserve(mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      geo.push_back(element_geometry(mesh, t));
      const double w = geo.back().area / 3.0;
      const double h = spec.b[t] * spec.f[t] + spec.g_load[t];
      for (int k : mesh.triangles[t]) {
        mass[static_cast<std::size_t>(k)] += w * spec.b[t];
        load[static_cast<std::size_t>(k)] += w * h;
      }
    }
    double sq = 0.0;
    for (double x : load) sq += x * x;
    load_norm = std::sqrt(sq);
  }

  Vec2 grad(std::size_t t, std::span<const double> u) const {
    Vec2 g{};
    for (std::size_t k = 0; k < 3; ++k) g += u[static_cast<std::size_t>(mesh.triangles[t][k])] * geo[t].basis_gradients[k];
    return g;
  }

  double energy(std::span<const double> u, double eps) const {
    const double p = spec.p;
    double e = 0.0;
    for (std::size_t t = 0; t < geo.size(); ++t) {
      const Vec2 g = grad(t, u);
      e += spec.coefficient(t) * geo[t].area * std::pow(dot(g, g) + eps * eps, p / 2) / p;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (mass[i] > 0.0) e += mass[i] * std::pow(u[i] * u[i] + eps * eps, p / 2) / p;
      e -= load[i] * u[i];
    }
    return e;
  }

  /// Gradient of the energy; eps = 0 gives the unregularized residual.
  std::vector<double> residual(std::span<const double> u, double eps) const {
    const double p = spec.p;
    std::vector<double> r(u.size(), 0.0);
    for (std::size_t t = 0; t < geo.size(); ++t) {
      const Vec2 g = grad(t, u);
      const double s = dot(g, g) + eps * eps;
      const double coef = s > 0.0 ? spec.coefficient(t) * geo[t].area * std::pow(s, (p - 2) / 2) : 0.0;
      for (std::size_t k = 0; k < 3; ++k)
        r[static_cast<std::size_t>(mesh.triangles[t][k])] += coef * dot(g, geo[t].basis_gradients[k]);
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double s = u[i] * u[i] + eps * eps;
      if (mass[i] > 0.0 && s > 0.0) r[i] += mass[i] * std::pow(s, (p - 2) / 2) * u[i];
      r[i] -= load[i];
    }
    return r;
  }

  Eigen::SparseMatrix<double> hessian(std::span<const double> u, double eps, const std::vector<int>& dof) const {
    const double p = spec.p;
    const int n = static_cast<int>(*std::max_element(dof.begin(), dof.end()) + 1);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(geo.size() * 9 + u.size());
    for (std::size_t t = 0; t < geo.size(); ++t) {
      const Vec2 g = grad(t, u);
      const double s = dot(g, g) + eps * eps;
      const double w = spec.coefficient(t) * geo[t].area * std::pow(s, (p - 2) / 2);
      const double q = (p - 2) / s;
      for (std::size_t a = 0; a < 3; ++a) {
        const int i = dof[static_cast<std::size_t>(mesh.triangles[t][a])];
        if (i < 0) continue;
        const Vec2& ga = geo[t].basis_gradients[a];
        for (std::size_t b = 0; b < 3; ++b) {
          const int j = dof[static_cast<std::size_t>(mesh.triangles[t][b])];
          if (j < 0) continue;
          const Vec2& gb = geo[t].basis_gradients[b];
          trip.emplace_back(i, j, w * (dot(ga, gb) + q * dot(g, ga) * dot(g, gb)));
        }
      }
    }
    for (std::size_t v = 0; v < u.size(); ++v) {
      const int i = dof[v];
      if (i < 0 || mass[v] <= 0.0) continue;
      const double s = u[v] * u[v] + eps * eps;
      trip.emplace_back(i, i, mass[v] * std::pow(s, (p - 4) / 2) * ((p - 1) * u[v] * u[v] + eps * eps));
    }
    Eigen::SparseMatrix<double> h(n, n);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }
};

double restricted_norm(const std::vector<double>& r, const std::vector<int>& dof) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (dof[i] >= 0) s += r[i] * r[i];
  }
  return std::sqrt(s);
}

}  // namespace

double discrete_energy(const CrackMesh& mesh, const ProblemSpec& spec, std::span<const double> u, double eps) {
  return Assembly(mesh, spec).energy(u, eps);
}

double euler_lagrange_residual(const CrackMesh& mesh, const ProblemSpec& spec, std::span<const double> u) {
  Assembly as(mesh, spec);
  std::vector<int> dof(mesh.vertex_count(), 0);
  for (int v : spec.dirichlet_vertices) dof[static_cast<std::size_t>(v)] = -1;
  return restricted_norm(as.residual(u, 0.0), dof);
}

SolveReport solve(MeshPtr mesh_ptr, const ProblemSpec& spec, std::optional<std::vector<double>> initial) {
  const CrackMesh& mesh = *mesh_ptr;
  spec.validate(mesh);
  const auto nv = mesh.vertex_count();
  Assembly as(mesh, spec);

  std::vector<double> u = initial ? std::move(*initial) : std::vector<double>(nv, 0.0);
  if (u.size() != nv) throw std::invalid_argument("solve: initial guess size mismatch");

  // Free vertices; Dirichlet vertices and one vertex per pure-Neumann component are fixed.
  std::vector<char> fixed(nv, 0);
  for (std::size_t k = 0; k < spec.dirichlet_vertices.size(); ++k) {
    const auto v = static_cast<std::size_t>(spec.dirichlet_vertices[k]);
    fixed[v] = 1;
    u[v] = spec.dirichlet_values[k];
  }
  const auto comps = mesh_components(mesh);
  std::vector<char> neumann(static_cast<std::size_t>(comps.count), 1);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (spec.b[t] > 0.0) neumann[static_cast<std::size_t>(comps.of_triangle[t])] = 0;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (fixed[v] && comps.of_vertex[v] >= 0) neumann[static_cast<std::size_t>(comps.of_vertex[v])] = 0;
  }
  std::vector<double> comp_load(neumann.size(), 0.0), comp_abs(neumann.size(), 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    const int c = comps.of_vertex[v];
    if (c < 0) {
      fixed[v] = 1;
      continue;
    }
    comp_load[static_cast<std::size_t>(c)] += as.load[v];
    comp_abs[static_cast<std::size_t>(c)] += std::abs(as.load[v]);
  }
  std::vector<char> pinned(neumann.size(), 0);
  for (std::size_t v = 0; v < nv; ++v) {
    const int c = comps.of_vertex[v];
    if (c < 0 || !neumann[static_cast<std::size_t>(c)] || pinned[static_cast<std::size_t>(c)]) continue;
    pinned[static_cast<std::size_t>(c)] = 1;
    fixed[v] = 1;
  }
  for (std::size_t c = 0; c < neumann.size(); ++c) {
    if (neumann[c] && std::abs(comp_load[c]) > 1e-9 * comp_abs[c] + 1e-14)
      throw std::invalid_argument("solve: load has nonzero mean on a pure Neumann component");
  }
  std::vector<int> dof(nv, -1);
  int nfree = 0;
  for (std::size_t v = 0; v < nv; ++v) {
    if (!fixed[v]) dof[v] = nfree++;
  }

  SolveReport rep;
  const double scale = std::max(1.0, as.load_norm);
  std::vector<double> residual_trace;
  double eps = spec.epsilon0;
  for (;;) {
    rep.energy_trace.push_back(as.energy(u, eps));
    bool converged = nfree == 0;
    for (int it = 0; it < spec.max_newton && !converged; ++it) {
      const auto r = as.residual(u, eps);
      const double rn = restricted_norm(r, dof);
      residual_trace.push_back(rn);
      if (rn <= spec.newton_tol * scale) {
        converged = true;
        break;
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(as.hessian(u, eps, dof));
      if (ldlt.info() != Eigen::Success) throw ConvergenceError("solve: Hessian factorization failed", residual_trace);
      Eigen::VectorXd rhs(nfree);
      for (std::size_t v = 0; v < nv; ++v) {
        if (dof[v] >= 0) rhs[dof[v]] = -r[v];
      }
      Eigen::VectorXd d = ldlt.solve(rhs);
      double slope = -rhs.dot(d);
      if (!(slope < 0.0)) {
        d = rhs;
        slope = -rhs.squaredNorm();
      }
      const double e0 = rep.energy_trace.back();
      // Newton decrement at round-off level of the energy: nothing left to gain.
      if (-slope <= 1e-15 * (1.0 + std::abs(e0))) {
        converged = true;
        break;
      }
      std::vector<double> trial(u);
      double t = 1.0;
      bool accepted = false;
      double et = e0;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t v = 0; v < nv; ++v) {
          if (dof[v] >= 0) trial[v] = u[v] + t * d[dof[v]];
        }
        et = as.energy(trial, eps);
        if (et < e0 && et <= e0 + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
        // Energy change below round-off: fall back to residual decrease.
        if (std::abs(et - e0) <= 1e-13 * (1.0 + std::abs(e0)) &&
            restricted_norm(as.residual(trial, eps), dof) < (1.0 - 1e-4 * t) * rn) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      // Keep halving while the energy still drops: full steps overshoot
      // where the flux behaves like |grad u|^{p-1}.
      if (accepted) {
        std::vector<double> half(u);
        for (int k = 0; k < 30; ++k) {
          const double th = 0.5 * t;
          for (std::size_t v = 0; v < nv; ++v) {
            if (dof[v] >= 0) half[v] = u[v] + th * d[dof[v]];
          }
          const double eh = as.energy(half, eps);
          if (!(eh < et)) break;
          t = th;
          et = eh;
          trial.swap(half);
        }
      }
      if (!accepted) {
        if (rn <= spec.el_tol * scale) {
          converged = true;
          break;
        }
        throw ConvergenceError("solve: line search failed", residual_trace);
      }
      u.swap(trial);
      ++rep.newton_iters;
      rep.energy_trace.push_back(et);
    }
    if (!converged) {
      const double rn = restricted_norm(as.residual(u, eps), dof);
      if (rn > spec.el_tol * scale) throw ConvergenceError("solve: Newton iteration limit reached", residual_trace);
    }
    rep.epsilon_trace.push_back(eps);
    std::vector<int> el_dof(nv, 0);
    for (int v : spec.dirichlet_vertices) el_dof[static_cast<std::size_t>(v)] = -1;
    rep.el_residual = restricted_norm(as.residual(u, 0.0), el_dof);
    if (spec.single_epsilon || rep.el_residual <= spec.el_tol * scale || eps <= spec.epsilon_min) break;
    eps = std::max(eps / 2, spec.epsilon_min);
  }

  // Zero-mean gauge on pure Neumann components.
  std::vector<double> integral(neumann.size(), 0.0), area(neumann.size(), 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto c = static_cast<std::size_t>(comps.of_triangle[t]);
    if (!neumann[c]) continue;
    const auto& tri = mesh.triangles[t];
    integral[c] += as.geo[t].area * (u[static_cast<std::size_t>(tri[0])] + u[static_cast<std::size_t>(tri[1])] + u[static_cast<std::size_t>(tri[2])]) / 3.0;
    area[c] += as.geo[t].area;
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const int c = comps.of_vertex[v];
    if (c >= 0 && neumann[static_cast<std::size_t>(c)]) u[v] -= integral[static_cast<std::size_t>(c)] / area[static_cast<std::size_t>(c)];
  }
  rep.solution = NodalField(std::move(mesh_ptr), std::move(u));
  return rep;
}

StructureReport check_structure(const ProblemSpec& spec, int samples, std::uint64_t seed) {
  StructureReport rep;
  rep.samples = samples;
  const std::size_t nt = std::max<std::size_t>(1, spec.b.size());
  auto coef = [&](std::size_t t) {
    return spec.op == OperatorKind::scaled && t < spec.a.size() ? spec.a[t] : 1.0;
  };
  const double p = spec.p;
  auto A = [&](std::size_t t, const Vec2& xi) {
    const double r = norm(xi);
    return r > 0.0 ? coef(t) * std::pow(r, p - 2) * xi : Vec2{};
  };
  std::mt19937_64 rng(derive_seed(seed, "check_structure", 0));
  std::uniform_real_distribution<double> dir(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(-2.0, 2.0);
  auto draw = [&] {
    Vec2 v{dir(rng), dir(rng)};
    return std::pow(10.0, mag(rng)) * v;
  };
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  rep.min_monotonicity_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const std::size_t t = static_cast<std::size_t>(k) % nt;
    const Vec2 x1 = draw();
    const Vec2 x2 = draw();
    const Vec2 d = x1 - x2;
    const double gap = dot(A(t, x1) - A(t, x2), d);
    if (norm(d) > 0.0) {
      rep.min_monotonicity_gap = std::min(rep.min_monotonicity_gap, gap / std::pow(norm(d), p));
      if (!(gap > 0.0)) ++rep.monotonicity_violations;
      if (p == 2.0) rep.max_quadratic_deviation = std::max(rep.max_quadratic_deviation, std::abs(gap - coef(t) * dot(d, d)));
    }
    for (const Vec2& x : {x1, x2}) {
      const double r = norm(x);
      if (r == 0.0) continue;
      c1 = std::min(c1, dot(A(t, x), x) / std::pow(r, p));
      c2 = std::max(c2, norm(A(t, x)) / std::pow(r, p - 1));
    }
  }
  for (std::size_t t = 0; t < nt; ++t) c1 = std::min(c1, coef(t));
  rep.c1 = std::isfinite(c1) ? c1 : 0.0;
  rep.c2 = c2;
  if (!std::isfinite(rep.min_monotonicity_gap)) rep.min_monotonicity_gap = 0.0;
  rep.pass = samples > 0 && rep.monotonicity_violations == 0 && rep.c1 > 0.0;
  return rep;
}

ConvergenceReport manufactured_convergence(int levels, int n0) {
  if (levels < 2 || n0 < 2) throw std::invalid_argument("manufactured_convergence: need at least two levels and n0 >= 2");
  using std::numbers::pi;
  auto exact = [](const Point& x) { return std::cos(pi * x.x) * std::cos(pi * x.y); };
  auto exact_grad = [](const Point& x) {
    return Vec2{-pi * std::sin(pi * x.x) * std::cos(pi * x.y), -pi * std::cos(pi * x.x) * std::sin(pi * x.y)};
  };
  ConvergenceReport rep;
  for (int k = 0; k < levels; ++k) {
    const int n = n0 << k;
    auto mesh = std::make_shared<const CrackMesh>(triangulate(PixelDomain::full(n)));
    auto spec = ProblemSpec::sampled(
        *mesh, 2.0, [](const Point&) { return 1.0; }, [&](const Point& x) { return (2 * pi * pi + 1) * exact(x); }, {});
    const auto sol = solve(mesh, spec);
    double l2 = 0.0;
    double h1 = 0.0;
    for (std::size_t t = 0; t < mesh->triangle_count(); ++t) {
      const auto& tri = mesh->triangles[t];
      const auto geo = element_geometry(*mesh, t);
      Vec2 gh{};
      for (std::size_t i = 0; i < 3; ++i) gh += sol.solution.values[static_cast<std::size_t>(tri[i])] * geo.basis_gradients[i];
      for (std::size_t i = 0; i < 3; ++i) {
        const auto a = static_cast<std::size_t>(tri[i]);
        const auto b = static_cast<std::size_t>(tri[(i + 1) % 3]);
        const Point m = 0.5 * (mesh->vertices[a] + mesh->vertices[b]);
        const double e = 0.5 * (sol.solution.values[a] + sol.solution.values[b]) - exact(m);
        const Vec2 ge = gh - exact_grad(m);
        l2 += geo.area / 3.0 * e * e;
        h1 += geo.area / 3.0 * dot(ge, ge);
      }
    }
    rep.levels.push_back({n, std::sqrt(l2), std::sqrt(h1), sol.energy_trace.back()});
  }
  for (std::size_t k = 1; k < rep.levels.size(); ++k) {
    rep.l2_rates.push_back(std::log2(rep.levels[k - 1].l2_error / rep.levels[k].l2_error));
    rep.h1_rates.push_back(std::log2(rep.levels[k - 1].h1_error / rep.levels[k].h1_error));
  }
  return rep;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::pair<std::size_t, double>> read_id_value_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<std::size_t, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || !(std::isdigit(static_cast<unsigned char>(line[0])))) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::size_t id = 0;
    double v = 0.0;
    if (!(ss >> id >> v)) throw IoError(path + ": malformed row");
    rows.emplace_back(id, v);
  }
  return rows;
}

std::optional<double> parse_number(const std::string& s) {
  std::istringstream ss(s);
  double v = 0.0;
  if (ss >> v && ss.eof()) return v;
  return std::nullopt;
}

}  // namespace

ProblemSpec read_problem(std::istream& in, const CrackMesh& mesh, const std::string& base_dir) {
  const auto nt = mesh.triangle_count();
  ProblemSpec spec = ProblemSpec::constant(mesh, 2.0, 1.0, 0.0, 0.0);
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p.string() : (std::filesystem::path(base_dir) / p).string();
  };
  auto per_triangle = [&](const std::string& key, const std::string& v) {
    if (auto c = parse_number(v)) return std::vector<double>(nt, *c);
    std::vector<double> out(nt, 0.0);
    const auto rows = read_id_value_csv(resolve(v));
    if (rows.size() != nt) throw IoError(key + ": expected one row per triangle");
    for (const auto& [id, x] : rows) {
      if (id >= nt) throw IoError(key + ": triangle id out of range");
      out[id] = x;
    }
    return out;
  };
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("problem file: expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "p" || key == "epsilon0") {
      const auto v = parse_number(value);
      if (!v) throw IoError("problem file: " + key + " must be a number");
      (key == "p" ? spec.p : spec.epsilon0) = *v;
    } else if (key == "operator") {
      if (value == "plap") {
        spec.op = OperatorKind::plap;
      } else if (value == "scaled") {
        spec.op = OperatorKind::scaled;
      } else {
        throw IoError("problem file: unknown operator " + value);
      }
    } else if (key == "a") {
      spec.a = per_triangle(key, value);
    } else if (key == "b") {
      spec.b = per_triangle(key, value);
    } else if (key == "f") {
      spec.f = per_triangle(key, value);
    } else if (key == "g") {
      spec.g_load = per_triangle(key, value);
    } else if (key == "dirichlet") {
      for (const auto& [id, x] : read_id_value_csv(resolve(value))) {
        spec.dirichlet_vertices.push_back(static_cast<int>(id));
        spec.dirichlet_values.push_back(x);
      }
    } else {
      throw IoError("problem file: unknown key " + key);
    }
  }
  if (spec.op == OperatorKind::scaled && spec.a.empty()) spec.a.assign(nt, 1.0);
  return spec;
}

ProblemSpec load_problem(const std::string& path, const CrackMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_problem(in, mesh, std::filesystem::path(path).parent_path().string());
}

void write_report(std::ostream& out, const SolveReport& report) {
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_real(v[i]);
    out << '\n';
  };
  out << "newton_iters = " << report.newton_iters << '\n';
  out << "el_residual = " << format_real(report.el_residual) << '\n';
  out << "energy_trace = ";
  list(report.energy_trace);
  out << "epsilon_trace = ";
  list(report.epsilon_trace);
}

}  // namespace nsl
