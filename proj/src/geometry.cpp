#include "nsl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace nsl {

Point Grid::cell_center(int cell) const {
  const int i = cell % n;
  const int j = cell / n;
  const double h = cell_size();
  return {box.x0 + (i + 0.5) * h, box.y0 + (j + 0.5) * h};
}

std::optional<int> Grid::locate(const Point& p) const {
  if (!box.contains(p, 1e-12 * box.side)) return std::nullopt;
  const double h = cell_size();
  int i = static_cast<int>(std::floor((p.x - box.x0) / h));
  int j = static_cast<int>(std::floor((p.y - box.y0) / h));
  i = std::clamp(i, 0, n - 1);
  j = std::clamp(j, 0, n - 1);
  return index(i, j);
}

PixelDomain::PixelDomain(Grid grid, std::vector<char> mask, std::vector<Point> punctures)
    : grid_(grid), mask_(std::move(mask)), punctures_(std::move(punctures)) {
  if (grid_.n <= 0) throw std::invalid_argument("pixel domain: resolution must be positive");
  if (!(grid_.box.side > 0.0)) throw std::invalid_argument("pixel domain: box side must be positive");
  if (mask_.size() != static_cast<std::size_t>(grid_.cell_count()))
    throw std::invalid_argument("pixel domain: mask size does not match resolution");
  for (char& c : mask_) c = c ? 1 : 0;
}

PixelDomain PixelDomain::full(int n, Box box) {
  return PixelDomain(Grid{n, box}, std::vector<char>(static_cast<std::size_t>(n) * n, 1));
}

int PixelDomain::inside_count() const {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), 1));
}

PixelDomain PixelDomain::with_removed(const std::function<bool(const Point&)>& pred) const {
  auto mask = mask_;
  for (int c = 0; c < grid_.cell_count(); ++c) {
    if (pred(grid_.cell_center(c))) mask[static_cast<std::size_t>(c)] = 0;
  }
  return PixelDomain(grid_, std::move(mask), punctures_);
}

PixelDomain PixelDomain::with_cell(int i, int j, bool value) const {
  auto mask = mask_;
  mask[static_cast<std::size_t>(grid_.index(i, j))] = value ? 1 : 0;
  return PixelDomain(grid_, std::move(mask), punctures_);
}

PixelDomain PixelDomain::with_punctures(std::vector<Point> punctures) const {
  return PixelDomain(grid_, mask_, std::move(punctures));
}

CompactSet CompactSet::from_cells(Grid grid, std::vector<int> cells) {
  CompactSet s;
  s.kind = Kind::pixel;
  s.grid = grid;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (int c : cells) {
    if (c < 0 || c >= grid.cell_count()) throw std::invalid_argument("compact set: cell outside grid");
  }
  s.cells = std::move(cells);
  return s;
}

CompactSet CompactSet::from_points(std::vector<Point> points) {
  CompactSet s;
  s.kind = Kind::points;
  s.points = std::move(points);
  return s;
}

std::vector<Point> CompactSet::point_cloud() const {
  std::vector<Point> out = points;
  if (kind == Kind::pixel) {
    out.reserve(out.size() + cells.size());
    for (int c : cells) out.push_back(grid.cell_center(c));
  }
  return out;
}

namespace {

// Directed Hausdorff distance with the early-break scan; inputs are
// shuffled deterministically so the break triggers early on average.
double directed_hausdorff(std::vector<Point> a, std::vector<Point> b) {
  std::mt19937_64 rng(0x5eed);
  std::shuffle(a.begin(), a.end(), rng);
  std::shuffle(b.begin(), b.end(), rng);
  double cmax = 0.0;
  for (const Point& x : a) {
    double cmin = std::numeric_limits<double>::infinity();
    bool dominated = false;
    for (const Point& y : b) {
      const double d2 = (x.x - y.x) * (x.x - y.x) + (x.y - y.y) * (x.y - y.y);
      if (d2 < cmax * cmax) {
        dominated = true;
        break;
      }
      cmin = std::min(cmin, d2);
    }
    if (!dominated) cmax = std::max(cmax, std::sqrt(cmin));
  }
  return cmax;
}

}  // namespace

double hausdorff_distance(const CompactSet& k1, const CompactSet& k2, double diamA) {
  if (diamA < 0.0) throw std::invalid_argument("hausdorff_distance: diamA must be nonnegative");
  const bool e1 = k1.empty();
  const bool e2 = k2.empty();
  if (e1 && e2) return 0.0;
  if (e1 || e2) return diamA;
  auto a = k1.point_cloud();
  auto b = k2.point_cloud();
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

CompactSet complement_in_box(const PixelDomain& domain) {
  const Grid& g = domain.grid();
  const double h = g.cell_size();
  std::vector<Point> pts;
  for (int c = 0; c < g.cell_count(); ++c) {
    if (!domain.inside(c)) pts.push_back(g.cell_center(c));
  }
  // frame ring standing in for the box boundary
  for (int i = -1; i <= g.n; ++i) {
    pts.push_back({g.box.x0 + (i + 0.5) * h, g.box.y0 - 0.5 * h});
    pts.push_back({g.box.x0 + (i + 0.5) * h, g.box.y0 + g.box.side + 0.5 * h});
  }
  for (int j = 0; j < g.n; ++j) {
    pts.push_back({g.box.x0 - 0.5 * h, g.box.y0 + (j + 0.5) * h});
    pts.push_back({g.box.x0 + g.box.side + 0.5 * h, g.box.y0 + (j + 0.5) * h});
  }
  for (const Point& p : domain.punctures()) pts.push_back(p);
  return CompactSet::from_points(std::move(pts));
}

double complementary_distance(const PixelDomain& a, const PixelDomain& b) {
  if (!(a.box() == b.box())) throw std::invalid_argument("complementary_distance: bounding boxes differ");
  return hausdorff_distance(complement_in_box(a), complement_in_box(b), a.box().diameter());
}

ComponentLabeling complement_components(const PixelDomain& domain) {
  const Grid& g = domain.grid();
  const int n = g.n;
  const int m = n + 2;  // extended grid with the exterior frame
  std::vector<int> ext(static_cast<std::size_t>(m) * m, -1);
  auto is_outside = [&](int i, int j) {  // extended coordinates
    if (i == 0 || j == 0 || i == m - 1 || j == m - 1) return true;
    return !domain.inside(i - 1, j - 1);
  };

  ComponentLabeling out;
  out.labels.assign(static_cast<std::size_t>(g.cell_count()), -1);
  auto flood = [&](int si, int sj, int id) {
    std::queue<std::pair<int, int>> q;
    q.push({si, sj});
    ext[static_cast<std::size_t>(sj * m + si)] = id;
    while (!q.empty()) {
      auto [i, j] = q.front();
      q.pop();
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int a = i + di[k];
        const int b = j + dj[k];
        if (a < 0 || b < 0 || a >= m || b >= m) continue;
        auto& slot = ext[static_cast<std::size_t>(b * m + a)];
        if (slot != -1 || !is_outside(a, b)) continue;
        slot = id;
        q.push({a, b});
      }
    }
  };

  flood(0, 0, 0);
  out.unbounded_id = 0;
  int next = 1;
  std::vector<Point> reps(1, Point{g.box.x0 - 0.5 * g.cell_size(), g.box.y0 - 0.5 * g.cell_size()});
  bool k0_has_cell = false;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (domain.inside(i, j)) continue;
      auto& slot = ext[static_cast<std::size_t>((j + 1) * m + (i + 1))];
      if (slot == -1) {
        flood(i + 1, j + 1, next);
        reps.push_back(g.cell_center(g.index(i, j)));
        ++next;
      } else if (slot == 0 && !k0_has_cell) {
        reps[0] = g.cell_center(g.index(i, j));
        k0_has_cell = true;
      }
      out.labels[static_cast<std::size_t>(g.index(i, j))] = slot;
    }
  }

  const double h = g.cell_size();
  const double tol = 1e-12 * g.box.side;
  for (const Point& p : domain.punctures()) {
    const Box& b = g.box;
    const bool interior = p.x > b.x0 + tol && p.x < b.x0 + b.side - tol && p.y > b.y0 + tol &&
                          p.y < b.y0 + b.side - tol;
    int label = -1;
    if (!interior) {
      label = 0;
    } else {
      // closed cells containing p (up to four when p is a grid node)
      const double fx = (p.x - b.x0) / h;
      const double fy = (p.y - b.y0) / h;
      const int i0 = static_cast<int>(std::floor(fx - 1e-9));
      const int i1 = static_cast<int>(std::floor(fx + 1e-9));
      const int j0 = static_cast<int>(std::floor(fy - 1e-9));
      const int j1 = static_cast<int>(std::floor(fy + 1e-9));
      for (int j = j0; j <= j1 && label < 0; ++j) {
        for (int i = i0; i <= i1 && label < 0; ++i) {
          if (i < 0 || j < 0 || i >= n || j >= n) continue;
          if (!domain.inside(i, j)) label = out.labels[static_cast<std::size_t>(g.index(i, j))];
        }
      }
      if (label < 0) {
        label = next++;
        reps.push_back(p);
      }
    }
    out.puncture_labels.push_back(label);
  }
  out.count = next;
  out.representatives = std::move(reps);
  return out;
}

double lebesgue_measure(const PixelDomain& domain) {
  return domain.inside_count() * domain.grid().cell_area();
}

double premeasure_estimate(const CompactSet& set, double alpha, double delta, std::optional<Box> cover_box) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("premeasure_estimate: alpha must lie in (0,2]");
  if (!(delta > 0.0)) throw std::invalid_argument("premeasure_estimate: delta must be positive");
  if (set.empty()) return 0.0;

  Box box;
  if (cover_box) {
    box = *cover_box;
  } else if (set.kind == CompactSet::Kind::pixel) {
    box = set.grid.box;
  } else {
    double xmin = set.points.front().x, xmax = xmin, ymin = set.points.front().y, ymax = ymin;
    for (const auto& p : set.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double extent = std::max({xmax - xmin, ymax - ymin, 1.0});
    box = Box{xmin, ymin, std::exp2(std::ceil(std::log2(extent)))};
  }

  int level = 0;
  double side = box.side;
  while (side > delta && level < 60) {
    side *= 0.5;
    ++level;
  }

  const auto squares_per_axis = static_cast<long long>(1) << std::min(level, 62);
  auto key_of = [&](const Point& p) {
    auto ix = static_cast<long long>(std::floor((p.x - box.x0) / side));
    auto iy = static_cast<long long>(std::floor((p.y - box.y0) / side));
    ix = std::clamp<long long>(ix, 0, squares_per_axis - 1);
    iy = std::clamp<long long>(iy, 0, squares_per_axis - 1);
    return std::pair{ix, iy};
  };

  double count = 0.0;
  if (set.kind == CompactSet::Kind::pixel && side < set.grid.cell_size()) {
    const double per_cell = std::ceil(set.grid.cell_size() / side - 1e-9);
    count = static_cast<double>(set.cells.size()) * per_cell * per_cell;
  } else {
    std::set<std::pair<long long, long long>> occupied;
    for (const Point& p : set.point_cloud()) occupied.insert(key_of(p));
    count = static_cast<double>(occupied.size());
  }
  return count * std::pow(side, alpha);
}

std::vector<double> default_deltas(const Grid& grid) {
  std::vector<double> out;
  for (double d = grid.box.side / 4.0; d >= grid.cell_size() * (1.0 - 1e-12); d *= 0.5) out.push_back(d);
  return out;
}

AdmissibilityReport is_admissible_estimate(const PixelDomain& domain, double p, const std::vector<double>& deltas) {
  if (!(p >= 1.0 && p < 2.0)) throw std::invalid_argument("is_admissible_estimate: p must lie in [1,2)");
  if (deltas.empty()) throw std::invalid_argument("is_admissible_estimate: no deltas");
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    if (!(deltas[i] < deltas[i - 1])) throw std::invalid_argument("is_admissible_estimate: deltas must strictly decrease");
  }
  AdmissibilityReport r;
  r.alpha = 2.0 - p;
  r.deltas = deltas;
  const auto labels = complement_components(domain);
  const auto selection = CompactSet::from_points(labels.representatives);
  r.selection_size = labels.representatives.size();
  // cover box extended by one cell so that the exterior representative fits
  const Grid& g = domain.grid();
  const double h = g.cell_size();
  const Box cover{g.box.x0 - h, g.box.y0 - h, g.box.side + 2 * h};
  for (double d : deltas) r.estimates.push_back(premeasure_estimate(selection, r.alpha, d, cover));
  r.consistent_with_null_measure = r.estimates.back() <= 0.5 * r.estimates.front();
  return r;
}

void write_domain(std::ostream& out, const PixelDomain& domain) {
  const Grid& g = domain.grid();
  out << "pixeldomain " << g.n << ' ' << format_real(g.box.x0) << ' ' << format_real(g.box.y0) << ' '
      << format_real(g.box.side) << '\n';
  for (int j = g.n - 1; j >= 0; --j) {
    std::string row(static_cast<std::size_t>(g.n), '0');
    for (int i = 0; i < g.n; ++i) row[static_cast<std::size_t>(i)] = domain.inside(i, j) ? '1' : '0';
    out << row << '\n';
  }
  if (!domain.punctures().empty()) {
    out << "punctures " << domain.punctures().size() << '\n';
    for (const auto& p : domain.punctures()) out << format_real(p.x) << ' ' << format_real(p.y) << '\n';
  }
}

PixelDomain read_domain(std::istream& in) {
  std::string tag;
  int n = 0;
  Box box;
  if (!(in >> tag >> n >> box.x0 >> box.y0 >> box.side) || tag != "pixeldomain" || n <= 0)
    throw IoError("domain file: malformed header (expected 'pixeldomain <n> <x0> <y0> <side>')");
  std::vector<char> mask(static_cast<std::size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r) {
    std::string row;
    if (!(in >> row) || row.size() != static_cast<std::size_t>(n))
      throw IoError("domain file: row " + std::to_string(r) + " has wrong length");
    const int j = n - 1 - r;
    for (int i = 0; i < n; ++i) {
      const char c = row[static_cast<std::size_t>(i)];
      if (c != '0' && c != '1') throw IoError("domain file: invalid character in row " + std::to_string(r));
      mask[static_cast<std::size_t>(j * n + i)] = c == '1';
    }
  }
  std::vector<Point> punctures;
  if (in >> tag) {
    std::size_t k = 0;
    if (tag != "punctures" || !(in >> k)) throw IoError("domain file: unexpected trailing content");
    for (std::size_t q = 0; q < k; ++q) {
      Point p;
      if (!(in >> p.x >> p.y)) throw IoError("domain file: truncated puncture list");
      punctures.push_back(p);
    }
  }
  return PixelDomain(Grid{n, box}, std::move(mask), std::move(punctures));
}

void save_domain(const std::string& path, const PixelDomain& domain) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_domain(out, domain);
}

PixelDomain load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_domain(in);
}

void write_points_csv(std::ostream& out, const std::vector<Point>& points) {
  out << "x,y\n";
  for (const auto& p : points) out << format_real(p.x) << ',' << format_real(p.y) << '\n';
}

std::vector<Point> read_points_csv(std::istream& in) {
  std::vector<Point> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.find_first_not_of("0123456789.-+eE, \t") != std::string::npos) continue;  // header
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Point p;
    if (!(ss >> p.x >> p.y)) throw IoError("points csv: malformed line '" + line + "'");
    out.push_back(p);
  }
  return out;
}

}  // namespace nsl
