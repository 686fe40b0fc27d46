#include "nsl/experiments.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nsl/density.hpp"

namespace nsl {

namespace {

constexpr double kTiny = 1e-9;

// Cells [i0, i0 + k) of an axis, k >= 1, centred on `c` as well as the grid allows.
std::pair<int, int> centred_range(double c, double half_width, double origin, double h) {
  const int k = std::max(1, static_cast<int>(std::lround(2.0 * half_width / h)));
  const int i0 = static_cast<int>(std::lround((c - origin) / h - 0.5 * k));
  return {i0, i0 + k};
}

PixelDomain remove_block(const PixelDomain& d, int i0, int i1, int j0, int j1) {
  const Grid& g = d.grid();
  std::vector<char> mask = d.mask();
  for (int j = std::max(0, j0); j < std::min(g.n, j1); ++j)
    for (int i = std::max(0, i0); i < std::min(g.n, i1); ++i) mask[static_cast<std::size_t>(g.index(i, j))] = 0;
  return PixelDomain(g, std::move(mask), d.punctures());
}

struct CombLayout {
  int i0 = 0, j0 = 0;  // lower-left cell of the comb region
  int width = 0;       // columns
  int height = 0;      // slot rows above the spine row
};

CombLayout comb_layout(const DomainSequence& seq) {
  const Grid g{seq.resolution, seq.box};
  const double h = g.cell_size();
  CombLayout c;
  c.width = 2 * std::max(2, static_cast<int>(std::lround(0.5 * seq.w0 / h)));
  const double slot_cell = (0.5 * c.width - 1.0) * h * h;  // the last column is a closing wall
  c.height = std::max(1, static_cast<int>(std::ceil(seq.m0 / slot_cell - 1e-12)));
  c.i0 = static_cast<int>(std::lround((seq.center.x - seq.box.x0) / h - 0.5 * c.width));
  c.j0 = static_cast<int>(std::lround((seq.center.y - seq.box.y0) / h - 0.5 * (c.height + 1)));
  if (c.i0 < 1 || c.j0 < 1 || c.i0 + c.width > g.n - 1 || c.j0 + c.height + 1 > g.n - 1)
    throw std::invalid_argument("comb does not fit inside the box");
  return c;
}

std::vector<int> key_table(const CrackMesh& mesh, const Grid& grid) {
  std::vector<int> table(2 * static_cast<std::size_t>(grid.cell_count()), -1);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    table[static_cast<std::size_t>(triangle_key(mesh, t, grid))] = static_cast<int>(t);
  return table;
}

// Value of u's triangle t at one of its vertex positions.
double vertex_value(const NodalField& u, int t, const Point& x) {
  const auto& tri = u.mesh->triangles[static_cast<std::size_t>(t)];
  const double tol = 1e-9 * u.mesh->grid.box.side;
  for (int v : tri)
    if (distance(u.mesh->vertices[static_cast<std::size_t>(v)], x) <= tol) return u.values[static_cast<std::size_t>(v)];
  throw std::logic_error("vertex position not found in matched triangle");
}

struct Gap {
  double grad = 0.0;
  double field = 0.0;
};

// Exact P1 gaps between zero extensions, triangles matched by position;
// the field term uses centroid quadrature weighted by `weight`.
Gap triangle_gap(const NodalField& un, const NodalField& u, double p, const ScalarFunction& weight) {
  const Grid& grid = u.mesh->grid;
  if (!(un.mesh->grid == grid)) throw std::invalid_argument("gap: fields live on different grids");
  const auto kn = key_table(*un.mesh, grid);
  const auto k = key_table(*u.mesh, grid);
  const EdgeFlux gn = gradient(un);
  const EdgeFlux g = gradient(u);
  double sg = 0.0, sf = 0.0;
  for (std::size_t key = 0; key < k.size(); ++key) {
    const int a = kn[key], b = k[key];
    if (a < 0 && b < 0) continue;
    Vec2 dg;
    double dv = 0.0, area = 0.0;
    Point c;
    if (a >= 0) {
      dg += gn.vectors[static_cast<std::size_t>(a)];
      dv += un.centroid_value(static_cast<std::size_t>(a));
      area = un.mesh->area(static_cast<std::size_t>(a));
      c = un.mesh->centroid(static_cast<std::size_t>(a));
    }
    if (b >= 0) {
      dg -= g.vectors[static_cast<std::size_t>(b)];
      dv -= u.centroid_value(static_cast<std::size_t>(b));
      area = u.mesh->area(static_cast<std::size_t>(b));
      c = u.mesh->centroid(static_cast<std::size_t>(b));
    }
    sg += area * std::pow(norm(dg), p);
    sf += area * (weight ? weight(c) : 1.0) * std::pow(std::abs(dv), p);
  }
  return {std::pow(sg, 1.0 / p), std::pow(sf, 1.0 / p)};
}

double bpos_measure(const PixelDomain& d, const ScalarFunction& b) {
  const Grid& g = d.grid();
  double m = 0.0;
  for (int c = 0; c < g.cell_count(); ++c)
    if (d.inside(c) && b(g.cell_center(c)) > 0.0) m += g.cell_area();
  return m;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

}  // namespace

std::string to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::shrinking_hole: return "shrinking_hole";
    case SequenceKind::fixed_crack_opening: return "fixed_crack_opening";
    case SequenceKind::fattening_obstacle: return "fattening_obstacle";
    case SequenceKind::moving_hole: return "moving_hole";
    case SequenceKind::maly_martio_stagewise: return "maly_martio_stagewise";
  }
  return "?";
}

SequenceKind parse_sequence_kind(const std::string& name) {
  for (auto k : {SequenceKind::shrinking_hole, SequenceKind::fixed_crack_opening, SequenceKind::fattening_obstacle,
                 SequenceKind::moving_hole, SequenceKind::maly_martio_stagewise})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown sequence kind '" + name + "'");
}

int DomainSequence::component_bound() const {
  if (kind == SequenceKind::maly_martio_stagewise) return (1 << std::min(stages, 20)) + 1;
  if (kind == SequenceKind::fattening_obstacle && hole_center) return 3;
  return 2;
}

PixelDomain generate(const DomainSequence& seq, int n) {
  if (n < 1 || n > seq.stages) throw std::invalid_argument("sequence index out of range");
  if (seq.resolution < 4) throw std::invalid_argument("sequence resolution must be >= 4");
  const PixelDomain full = PixelDomain::full(seq.resolution, seq.box);
  const Grid& g = full.grid();
  const double h = g.cell_size();
  const double scale = std::ldexp(1.0, -n);
  PixelDomain out;
  switch (seq.kind) {
    case SequenceKind::shrinking_hole: {
      const auto [i0, i1] = centred_range(seq.center.x, seq.r0 * scale, seq.box.x0, h);
      const auto [j0, j1] = centred_range(seq.center.y, seq.r0 * scale, seq.box.y0, h);
      out = remove_block(full, i0, i1, j0, j1);
      break;
    }
    case SequenceKind::fixed_crack_opening: {
      const auto [i0, i1] = centred_range(seq.center.x, 0.5 * seq.w0, seq.box.x0, h);
      const double t = std::max(seq.r0 * scale, h);
      const auto [j0, j1] = centred_range(seq.center.y, t, seq.box.y0, h);
      out = remove_block(full, i0, i1, j0, j1);
      break;
    }
    case SequenceKind::moving_hole: {
      const double shift = 0.25 * seq.box.side * scale;
      const auto [i0, i1] = centred_range(seq.center.x + shift, 0.5 * seq.r0, seq.box.x0, h);
      const auto [j0, j1] = centred_range(seq.center.y, 0.5 * seq.r0, seq.box.y0, h);
      out = remove_block(full, i0, i1, j0, j1);
      break;
    }
    case SequenceKind::fattening_obstacle: {
      const CombLayout c = comb_layout(seq);
      const int period = c.width >> (n - 1);
      if (period < 2 || (c.width % (1 << (n - 1))) != 0)
        throw std::invalid_argument("comb stage finer than the grid allows");
      std::vector<char> mask = full.mask();
      for (int i = 0; i < c.width; ++i) {
        mask[static_cast<std::size_t>(g.index(c.i0 + i, c.j0))] = 0;  // spine
        if (i % period < period / 2 || i == c.width - 1)
          for (int j = 1; j <= c.height; ++j) mask[static_cast<std::size_t>(g.index(c.i0 + i, c.j0 + j))] = 0;
      }
      out = PixelDomain(g, std::move(mask));
      if (seq.hole_center) {
        const auto [i0, i1] = centred_range(seq.hole_center->x, seq.r0 * scale, seq.box.x0, h);
        const auto [j0, j1] = centred_range(seq.hole_center->y, seq.r0 * scale, seq.box.y0, h);
        out = remove_block(out, i0, i1, j0, j1);
      }
      break;
    }
    case SequenceKind::maly_martio_stagewise:
      out = maly_martio(n, {}, seq.resolution).domain;
      break;
  }
  if (complement_components(out).count > seq.component_bound())
    throw std::invalid_argument("sequence member exceeds the component bound");
  return out;
}

PixelDomain limit(const DomainSequence& seq) {
  const PixelDomain full = PixelDomain::full(seq.resolution, seq.box);
  const Grid& g = full.grid();
  const double h = g.cell_size();
  switch (seq.kind) {
    case SequenceKind::shrinking_hole:
      return full.with_punctures({seq.center});
    case SequenceKind::moving_hole: {
      const auto [i0, i1] = centred_range(seq.center.x, 0.5 * seq.r0, seq.box.x0, h);
      const auto [j0, j1] = centred_range(seq.center.y, 0.5 * seq.r0, seq.box.y0, h);
      return remove_block(full, i0, i1, j0, j1);
    }
    case SequenceKind::fixed_crack_opening: {
      const auto [i0, i1] = centred_range(seq.center.x, 0.5 * seq.w0, seq.box.x0, h);
      const auto [j0, j1] = centred_range(seq.center.y, h, seq.box.y0, h);
      return remove_block(full, i0, i1, j0, j1);
    }
    case SequenceKind::fattening_obstacle: {
      const CombLayout c = comb_layout(seq);
      const PixelDomain base = seq.hole_center ? full.with_punctures({*seq.hole_center}) : full;
      return remove_block(base, c.i0, c.i0 + c.width, c.j0, c.j0 + c.height + 1);
    }
    case SequenceKind::maly_martio_stagewise:
      return maly_martio(seq.stages, {}, seq.resolution).domain;
  }
  return full;
}

ProblemSpec ProblemTemplate::instantiate(const CrackMesh& mesh) const {
  const ScalarFunction zero = [](const Point&) { return 0.0; };
  return ProblemSpec::sampled(mesh, p, b, f, g ? g : zero);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

Verdict judge(const std::vector<StabilityRow>& rows, double limit_meas_bpos) {
  if (rows.empty()) return Verdict::inconclusive;
  for (const auto& r : rows)
    if (r.failed) return Verdict::inconclusive;
  std::vector<double> grad, field;
  for (const auto& r : rows) {
    grad.push_back(r.grad_gap);
    field.push_back(r.field_gap);
  }
  const auto vanishes = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x <= kTiny; });
  };
  if (vanishes(grad) && vanishes(field)) return Verdict::stable;

  const auto converges = [](const std::vector<double>& v) {
    if (v.back() <= kTiny) return true;
    if (!(v.back() < 0.1 * v.front())) return false;
    for (std::size_t i = std::max<std::size_t>(1, v.size() / 2); i < v.size(); ++i)
      if (v[i] > v[i - 1] * (1.0 + 1e-9) + kTiny) return false;
    return true;
  };
  const auto persists = [](const std::vector<double>& v) {  // grad_gap only
    const double mx = *std::max_element(v.begin(), v.end());
    return mx > kTiny && v.back() >= 0.5 * mx;
  };
  const double e_first = std::abs(rows.front().meas_bpos - limit_meas_bpos);
  const double e_last = std::abs(rows.back().meas_bpos - limit_meas_bpos);
  const bool meas_ok = e_last <= 1e-12 || e_last <= 0.1 * e_first;

  if (converges(grad) && converges(field) && meas_ok) return Verdict::stable;
  if (persists(grad)) return Verdict::unstable;
  return Verdict::inconclusive;
}

StabilityReport run_stability(const DomainSequence& seq, const ProblemTemplate& problem, bool refinement_sweep) {
  const int count = seq.stages;
  std::vector<PixelDomain> domains;
  for (int n = 1; n <= count; ++n) domains.push_back(generate(seq, n));
  domains.push_back(limit(seq));

  std::vector<MeshPtr> meshes(domains.size());
  std::vector<std::optional<NodalField>> solutions(domains.size());
  parallel_for(domains.size(), [&](std::size_t k) {
    meshes[k] = std::make_shared<const CrackMesh>(triangulate(domains[k]));
    try {
      solutions[k] = solve(meshes[k], problem.instantiate(*meshes[k])).solution;
    } catch (const ConvergenceError&) {
      solutions[k].reset();
    }
  });
  if (!solutions.back()) throw ConvergenceError("limit problem did not converge", {});

  StabilityReport report;
  const PixelDomain& lim = domains.back();
  const NodalField& u = *solutions.back();
  report.limit_meas = lebesgue_measure(lim);
  report.limit_meas_bpos = bpos_measure(lim, problem.b);
  report.component_bound = seq.component_bound();
  for (int n = 0; n < count; ++n) {
    StabilityRow row;
    row.index = n + 1;
    row.dH_complement = complementary_distance(domains[static_cast<std::size_t>(n)], lim);
    row.meas = lebesgue_measure(domains[static_cast<std::size_t>(n)]);
    row.meas_bpos = bpos_measure(domains[static_cast<std::size_t>(n)], problem.b);
    const auto& un = solutions[static_cast<std::size_t>(n)];
    if (un) {
      const Gap gap = triangle_gap(*un, u, problem.p, problem.b);
      row.grad_gap = gap.grad;
      row.field_gap = gap.field;
    } else {
      row.failed = true;
      row.grad_gap = row.field_gap = std::numeric_limits<double>::quiet_NaN();
    }
    report.rows.push_back(row);
  }
  report.verdict = judge(report.rows, report.limit_meas_bpos);

  if (refinement_sweep && solutions[static_cast<std::size_t>(count - 1)]) {
    std::array<MeshPtr, 2> fine{std::make_shared<const CrackMesh>(refine(*meshes[static_cast<std::size_t>(count - 1)])),
                                std::make_shared<const CrackMesh>(refine(*meshes.back()))};
    std::array<NodalField, 2> sol;
    parallel_for(2, [&](std::size_t k) { sol[k] = solve(fine[k], problem.instantiate(*fine[k])).solution; });
    const double coarse = report.rows.back().grad_gap;
    report.sweep_gap_fine = triangle_gap(sol[0], sol[1], problem.p, problem.b).grad;
    report.resolution_dominated = std::abs(*report.sweep_gap_fine - coarse) > 0.5 * std::max(coarse, kTiny);
  }
  return report;
}

void write_stability_csv(std::ostream& out, const StabilityReport& report) {
  out << "index,dH_complement,meas,meas_bpos,grad_gap,field_gap\n";
  for (const auto& r : report.rows)
    out << r.index << ',' << format_real(r.dH_complement) << ',' << format_real(r.meas) << ','
        << format_real(r.meas_bpos) << ',' << format_real(r.grad_gap) << ',' << format_real(r.field_gap) << '\n';
}

double mosco_m1_probe(const PixelDomain& omega_n, const PixelDomain& omega, const NodalField& u, double p) {
  if (!(u.mesh->grid == omega.grid()) || !(omega_n.grid() == omega.grid()))
    throw std::invalid_argument("mosco_m1_probe: domains and field must share one grid");
  auto mesh = std::make_shared<const CrackMesh>(triangulate(omega_n));
  const Grid& grid = omega.grid();
  const auto target = key_table(*u.mesh, grid);
  const EdgeFlux gu = gradient(u);

  // (M + K) v = rhs with the zero extension of u as data.
  const auto nv = static_cast<Eigen::Index>(mesh->vertex_count());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
  for (std::size_t t = 0; t < mesh->triangle_count(); ++t) {
    const auto geo = element_geometry(*mesh, t);
    const auto& tri = mesh->triangles[t];
    const int src = target[static_cast<std::size_t>(triangle_key(*mesh, t, grid))];
    std::array<double, 3> ut{0.0, 0.0, 0.0};
    Vec2 gt;
    if (src >= 0) {
      for (int a = 0; a < 3; ++a) ut[static_cast<std::size_t>(a)] = vertex_value(u, src, mesh->vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(a)])]);
      gt = gu.vectors[static_cast<std::size_t>(src)];
    }
    for (std::size_t a = 0; a < 3; ++a) {
      double r = geo.area * dot(gt, geo.basis_gradients[a]);
      for (std::size_t c = 0; c < 3; ++c) {
        const double m = geo.area / 12.0 * (a == c ? 2.0 : 1.0);
        trip.emplace_back(tri[a], tri[c], m + geo.area * dot(geo.basis_gradients[a], geo.basis_gradients[c]));
        r += m * ut[c];
      }
      rhs[tri[a]] += r;
    }
  }
  Eigen::SparseMatrix<double> a(nv, nv);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("mosco_m1_probe: factorization failed");
  const Eigen::VectorXd v = ldlt.solve(rhs);
  const NodalField vn(mesh, std::vector<double>(v.data(), v.data() + v.size()));
  const Gap gap = triangle_gap(vn, u, p, {});
  return gap.grad + gap.field;
}

M2Report mosco_m2_probe(const std::vector<NodalField>& fields, const PixelDomain& omega, int block) {
  if (fields.empty()) throw std::invalid_argument("mosco_m2_probe: no fields");
  if (block < 1) throw std::invalid_argument("mosco_m2_probe: block must be >= 1");
  const Grid& grid = omega.grid();
  const double h = grid.cell_size();
  M2Report report;
  int index = 0;
  for (const auto& u : fields) {
    if (!(u.mesh->grid == grid)) throw std::invalid_argument("mosco_m2_probe: field grid differs from the limit grid");
    M2Row row;
    row.index = ++index;
    const GridField phi = extend_by_zero(u, omega);
    const GridVectorField big_phi = extend_by_zero(gradient(u), omega);
    for (int c = 0; c < grid.cell_count(); ++c) {
      if (omega.inside(c)) continue;
      row.outside_value += std::abs(phi.values[static_cast<std::size_t>(c)]) * grid.cell_area();
      row.outside_gradient += norm(big_phi.values[static_cast<std::size_t>(c)]) * grid.cell_area();
    }

    const auto keys = key_table(*u.mesh, grid);
    // Integral of u nu over one cell edge, seen from the cell (i, j); zero if the cell is not meshed.
    const auto edge_flux = [&](int i, int j, int side) -> Vec2 {
      const int cell = grid.index(i, j);
      const bool lower = side == 0 || side == 1;  // bottom, right
      const int t = keys[static_cast<std::size_t>(2 * cell + (lower ? 0 : 1))];
      if (t < 0) return {};
      Point a, b;
      Vec2 nu;
      switch (side) {
        case 0: a = grid.node(i, j); b = grid.node(i + 1, j); nu = {0, -1}; break;
        case 1: a = grid.node(i + 1, j); b = grid.node(i + 1, j + 1); nu = {1, 0}; break;
        case 2: a = grid.node(i, j + 1); b = grid.node(i + 1, j + 1); nu = {0, 1}; break;
        default: a = grid.node(i, j); b = grid.node(i, j + 1); nu = {-1, 0}; break;
      }
      return (0.5 * h * (vertex_value(u, t, a) + vertex_value(u, t, b))) * nu;
    };
    for (int bj = 0; bj + block <= grid.n; bj += block)
      for (int bi = 0; bi + block <= grid.n; bi += block) {
        bool inside = true;
        Vec2 volume;
        for (int j = bj; j < bj + block && inside; ++j)
          for (int i = bi; i < bi + block; ++i) {
            const int cell = grid.index(i, j);
            if (!omega.inside(cell) || keys[static_cast<std::size_t>(2 * cell)] < 0 ||
                keys[static_cast<std::size_t>(2 * cell + 1)] < 0) {
              inside = false;
              break;
            }
            volume += grid.cell_area() * big_phi.values[static_cast<std::size_t>(grid.index(i, j))];
          }
        if (!inside) continue;
        Vec2 surface;
        for (int k = 0; k < block; ++k) {
          surface += edge_flux(bi + k, bj, 0);
          surface += edge_flux(bi + block - 1, bj + k, 1);
          surface += edge_flux(bi + k, bj + block - 1, 2);
          surface += edge_flux(bi, bj + k, 3);
        }
        const double area = block * block * grid.cell_area();
        row.gauss_defect = std::max(row.gauss_defect, norm(volume - surface) / area);
      }
    report.rows.push_back(row);
  }
  const auto& last = report.rows.back();
  report.max_defect = std::max({last.outside_value, last.outside_gradient, last.gauss_defect});
  return report;
}

DomainSequence read_sequence(std::istream& in) {
  DomainSequence seq;
  std::string line;
  bool have_kind = false;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("sequence config: expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "kind") {
        seq.kind = parse_sequence_kind(value);
        have_kind = true;
      } else if (key == "stages") seq.stages = std::stoi(value);
      else if (key == "resolution") seq.resolution = std::stoi(value);
      else if (key == "r0") seq.r0 = std::stod(value);
      else if (key == "w0") seq.w0 = std::stod(value);
      else if (key == "m0") seq.m0 = std::stod(value);
      else if (key == "center_x") seq.center.x = std::stod(value);
      else if (key == "center_y") seq.center.y = std::stod(value);
      else if (key == "hole_x") seq.hole_center = Point{std::stod(value), seq.hole_center ? seq.hole_center->y : 0.5};
      else if (key == "hole_y") seq.hole_center = Point{seq.hole_center ? seq.hole_center->x : 0.5, std::stod(value)};
      else throw IoError("sequence config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw IoError("sequence config: bad value for '" + key + "'");
    }
  }
  if (!have_kind) throw IoError("sequence config: missing kind");
  if (seq.stages < 1) throw std::invalid_argument("sequence config: stages must be >= 1");
  return seq;
}

DomainSequence load_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_sequence(in);
}

}  // namespace nsl
