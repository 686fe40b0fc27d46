// nsl: command-line driver for domains, meshes, solves, stability runs,
// Mosco probes, optimal cuts, density checks and the acceptance suite.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "nsl/acceptance.hpp"
#include "nsl/cutting.hpp"
#include "nsl/density.hpp"
#include "nsl/experiments.hpp"

using namespace nsl;

namespace {

constexpr int kUsage = 64;

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void check_run_config(double p, int resolution) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("p must lie in (1, 2]");
  if (resolution < 4) throw std::invalid_argument("resolution must be at least 4");
}

// Sequence selection shared by domain, stability and mosco.
struct SequenceArgs {
  std::string kind;
  std::string config;
  int stages = 6;
  int resolution = 64;
  CLI::Option* stages_opt = nullptr;
  CLI::Option* resolution_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--seq", kind, "shrinking_hole|fixed_crack_opening|fattening_obstacle|moving_hole|maly_martio_stagewise");
    app->add_option("--config", config, "sequence config file (key = value)");
    stages_opt = app->add_option("--stages", stages, "number of members");
    resolution_opt = app->add_option("--resolution", resolution, "grid resolution");
  }

  DomainSequence build() const {
    DomainSequence seq;
    if (!config.empty()) seq = load_sequence(config);
    else if (!kind.empty()) seq.kind = parse_sequence_kind(kind);
    else throw std::invalid_argument("give --seq or --config");
    if (config.empty() || stages_opt->count()) seq.stages = stages;
    if (config.empty() || resolution_opt->count()) seq.resolution = resolution;
    return seq;
  }
};

struct LoadArgs {
  double p = 1.5;
  double b = 1.0;
  double f = 1.0;
  double f_slope = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--p", p, "exponent in (1, 2]");
    app->add_option("--b", b, "constant lower-order weight b");
    app->add_option("--f", f, "load f = F + slope * x");
    app->add_option("--f-slope", f_slope, "x-slope of the load");
  }

  ProblemTemplate build() const {
    ProblemTemplate pt;
    pt.p = p;
    pt.b = [b = b](const Point&) { return b; };
    pt.f = [f = f, s = f_slope](const Point& x) { return f + s * x.x; };
    return pt;
  }
};

ScalarFunction named_datum(const std::string& name) {
  if (name == "x") return [](const Point& x) { return x.x; };
  if (name == "y") return [](const Point& x) { return x.y; };
  if (name == "saddle") return [](const Point& x) { return x.x * x.x - x.y * x.y; };
  if (name == "mixed") return [](const Point& x) { return x.x * x.x + 0.5 * x.y + std::sin(3.0 * x.x * x.y); };
  throw std::invalid_argument("unknown boundary datum '" + name + "' (x|y|saddle|mixed)");
}

MeshPtr share(CrackMesh m) { return std::make_shared<const CrackMesh>(std::move(m)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neumann problems on non-smooth domains: stability, density and optimal cuts"};
  app.require_subcommand(1);

  // domain
  auto* domain_cmd = app.add_subcommand("domain", "write a member or the limit of a domain sequence");
  SequenceArgs domain_seq;
  domain_seq.attach(domain_cmd);
  int domain_stage = 1;
  bool domain_limit = false;
  std::string domain_out;
  domain_cmd->add_option("--stage", domain_stage, "member index");
  domain_cmd->add_flag("--limit", domain_limit, "write the limit domain instead");
  domain_cmd->add_option("--out", domain_out, "output domain file")->required();

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "triangulate a pixel domain");
  std::string mesh_domain, mesh_out;
  int mesh_refine = 0;
  mesh_cmd->add_option("--domain", mesh_domain, "domain file")->required();
  mesh_cmd->add_option("--refine", mesh_refine, "uniform refinements");
  mesh_cmd->add_option("--out", mesh_out, "output mesh file")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one Neumann problem");
  std::string solve_problem, solve_mesh, solve_out;
  solve_cmd->add_option("--problem", solve_problem, "problem file")->required();
  solve_cmd->add_option("--mesh", solve_mesh, "mesh file")->required();
  solve_cmd->add_option("--out", solve_out, "output directory")->required();

  // stability
  auto* stab_cmd = app.add_subcommand("stability", "solve along a domain sequence and compare with the limit");
  SequenceArgs stab_seq;
  stab_seq.attach(stab_cmd);
  LoadArgs stab_load;
  stab_load.attach(stab_cmd);
  bool stab_sweep = false;
  std::string stab_out;
  stab_cmd->add_flag("--sweep", stab_sweep, "refine the last member and the limit once");
  stab_cmd->add_option("--out", stab_out, "output directory")->required();

  // mosco
  auto* mosco_cmd = app.add_subcommand("mosco", "M1 and M2 probes along a domain sequence");
  SequenceArgs mosco_seq;
  mosco_seq.attach(mosco_cmd);
  LoadArgs mosco_load;
  mosco_load.attach(mosco_cmd);
  int mosco_block = 4;
  std::string mosco_out;
  mosco_cmd->add_option("--block", mosco_block, "block size of the M2 probe in cells");
  mosco_cmd->add_option("--out", mosco_out, "output directory")->required();

  // cut
  auto* cut_cmd = app.add_subcommand("cut", "optimal cuts");
  cut_cmd->require_subcommand(1);
  auto* opt_cmd = cut_cmd->add_subcommand("optimize", "maximize the cut energy by annealing");
  std::string opt_domain, opt_g = "x", opt_out = ".";
  std::vector<double> opt_terminals;
  double opt_p = 2.0, opt_eps = 1e-8;
  int opt_budget = 1000, opt_max_edges = 0;
  std::uint64_t opt_seed = 1;
  opt_cmd->add_option("--domain", opt_domain, "domain file")->required();
  opt_cmd->add_option("--terminals", opt_terminals, "x1 y1 x2 y2")->expected(4)->required();
  opt_cmd->add_option("--p", opt_p, "exponent in (1, 2]");
  opt_cmd->add_option("--epsilon", opt_eps, "regularization");
  opt_cmd->add_option("--g", opt_g, "boundary datum: x|y|saddle|mixed");
  opt_cmd->add_option("--budget", opt_budget, "annealing steps");
  opt_cmd->add_option("--max-edges", opt_max_edges, "edge bound, 0 for none");
  opt_cmd->add_option("--seed", opt_seed, "random seed");
  opt_cmd->add_option("--out", opt_out, "output directory");

  auto* cstab_cmd = cut_cmd->add_subcommand("stability", "detour sequence converging to a cut");
  std::string cs_domain, cs_cut, cs_g = "x", cs_out = ".";
  std::vector<double> cs_vertex;
  double cs_p = 2.0;
  int cs_stages = 4;
  cstab_cmd->add_option("--domain", cs_domain, "domain file")->required();
  cstab_cmd->add_option("--cut", cs_cut, "cut file")->required();
  cstab_cmd->add_option("--vertex", cs_vertex, "x y of the detour corner")->expected(2)->required();
  cstab_cmd->add_option("--stages", cs_stages, "number of detours");
  cstab_cmd->add_option("--p", cs_p, "exponent in (1, 2]");
  cstab_cmd->add_option("--g", cs_g, "boundary datum: x|y|saddle|mixed");
  cstab_cmd->add_option("--out", cs_out, "output directory");

  // density
  auto* dens_cmd = app.add_subcommand("density", "orthogonality and flattening checks on a domain");
  std::string dens_domain, dens_out;
  int dens_count = 20, dens_fields = 20, dens_levels = 6;
  double dens_q = 2.0;
  std::uint64_t dens_seed = 1;
  dens_cmd->add_option("--domain", dens_domain, "domain file")->required();
  dens_cmd->add_option("--count", dens_count, "number of sampled elements");
  dens_cmd->add_option("--fields", dens_fields, "random test fields per element");
  dens_cmd->add_option("--levels", dens_levels, "flattening levels");
  dens_cmd->add_option("--q", dens_q, "exponent of the flattening distance");
  dens_cmd->add_option("--seed", dens_seed, "random seed");
  dens_cmd->add_option("--out", dens_out, "output directory")->required();

  // maly
  auto* maly_cmd = app.add_subcommand("maly", "stagewise Maly-Martio construction");
  int maly_stages = 5, maly_resolution = 128;
  std::vector<double> maly_alpha;
  std::string maly_out;
  maly_cmd->add_option("--stages", maly_stages, "number of stages");
  maly_cmd->add_option("--resolution", maly_resolution, "output grid resolution");
  maly_cmd->add_option("--alpha", maly_alpha, "alpha per stage (default 1/s)");
  maly_cmd->add_option("--out", maly_out, "output directory")->required();

  // check
  auto* check_cmd = app.add_subcommand("check", "run the acceptance suite");
  std::vector<int> check_only;
  check_cmd->add_option("--only", check_only, "criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*domain_cmd) {
      auto seq = domain_seq.build();
      check_run_config(2.0, seq.resolution);
      save_domain(domain_out, domain_limit ? limit(seq) : generate(seq, domain_stage));
    } else if (*mesh_cmd) {
      auto mesh = triangulate(load_domain(mesh_domain));
      for (int k = 0; k < mesh_refine; ++k) mesh = refine(mesh);
      save_mesh(mesh_out, mesh);
    } else if (*solve_cmd) {
      auto mesh = share(load_mesh(solve_mesh));
      auto spec = load_problem(solve_problem, *mesh);
      auto rep = solve(mesh, spec);
      auto u = open_out(solve_out, "u.csv");
      write_field_csv(u, rep.solution, std::filesystem::path(solve_mesh).filename().string());
      auto r = open_out(solve_out, "report.txt");
      write_report(r, rep);
    } else if (*stab_cmd) {
      auto seq = stab_seq.build();
      check_run_config(stab_load.p, seq.resolution);
      auto rep = run_stability(seq, stab_load.build(), stab_sweep);
      auto csv = open_out(stab_out, "stability.csv");
      write_stability_csv(csv, rep);
      auto v = open_out(stab_out, "verdict.txt");
      v << to_string(rep.verdict) << '\n';
      std::cout << to_string(rep.verdict) << '\n';
    } else if (*mosco_cmd) {
      auto seq = mosco_seq.build();
      check_run_config(mosco_load.p, seq.resolution);
      auto pt = mosco_load.build();
      auto omega = limit(seq);
      auto lmesh = share(triangulate(omega));
      auto u = solve(lmesh, pt.instantiate(*lmesh)).solution;
      std::vector<NodalField> fields(static_cast<std::size_t>(seq.stages));
      std::vector<double> m1(fields.size());
      parallel_for(fields.size(), [&](std::size_t i) {
        auto d = generate(seq, static_cast<int>(i) + 1);
        auto m = share(triangulate(d));
        fields[i] = solve(m, pt.instantiate(*m)).solution;
        m1[i] = mosco_m1_probe(d, omega, u, pt.p);
      });
      auto m2 = mosco_m2_probe(fields, omega, mosco_block);
      auto csv = open_out(mosco_out, "mosco.csv");
      csv << "index,m1_probe,outside_value,outside_gradient,gauss_defect\n";
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& r = m2.rows[i];
        csv << r.index << ',' << format_real(m1[i]) << ',' << format_real(r.outside_value) << ','
            << format_real(r.outside_gradient) << ',' << format_real(r.gauss_defect) << '\n';
      }
    } else if (*opt_cmd) {
      check_run_config(opt_p, 4);
      CutProblem prob{share(triangulate(load_domain(opt_domain))), opt_p, opt_eps, {}, named_datum(opt_g)};
      int t1 = snap_terminal(*prob.mesh, {opt_terminals[0], opt_terminals[1]});
      int t2 = snap_terminal(*prob.mesh, {opt_terminals[2], opt_terminals[3]});
      auto res = optimize_cut(prob, t1, t2, opt_budget, opt_seed, opt_max_edges);
      auto c = open_out(opt_out, "cut.txt");
      write_cut(c, res.best.cut);
      auto t = open_out(opt_out, "trace.csv");
      write_trace_csv(t, res.trace);
      auto u = open_out(opt_out, "u.csv");
      write_field_csv(u, res.report.solution, "slit");
      std::cout << "energy " << format_real(res.best.energy) << " edges " << res.best.cut.edges.size() << '\n';
    } else if (*cstab_cmd) {
      check_run_config(cs_p, 4);
      CutProblem prob{share(triangulate(load_domain(cs_domain))), cs_p, 1e-8, {}, named_datum(cs_g)};
      std::ifstream in(cs_cut);
      if (!in) throw IoError("cannot open " + cs_cut);
      auto k = read_cut(in, prob.mesh);
      auto seq = detour_sequence(k, snap_terminal(*prob.mesh, {cs_vertex[0], cs_vertex[1]}), cs_stages);
      auto rep = cut_stability(prob, seq, k);
      auto csv = open_out(cs_out, "cut_stability.csv");
      csv << "index,hausdorff,grad_gap\n";
      for (std::size_t i = 0; i < seq.size(); ++i)
        csv << i + 1 << ',' << format_real(rep.hausdorff[i]) << ',' << format_real(rep.grad_gap[i]) << '\n';
    } else if (*dens_cmd) {
      auto dom = load_domain(dens_domain);
      auto box = share(triangulate(PixelDomain::full(dom.resolution(), dom.box())));
      auto om = share(triangulate(dom));
      auto elems = hperp_basis(dom, box, dens_count, derive_seed(dens_seed, "hperp", 0));
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      std::vector<NodalField> tests;
      for (int k = 0; k < dens_fields; ++k) {
        std::mt19937_64 rng(derive_seed(dens_seed, "fields", static_cast<std::uint64_t>(k)));
        std::vector<double> v(om->vertex_count());
        for (auto& x : v) x = unif(rng);
        tests.emplace_back(om, std::move(v));
      }
      auto h = open_out(dens_out, "hperp.csv");
      h << "element,max_residual\n";
      for (std::size_t e = 0; e < elems.size(); ++e) {
        double worst = 0.0;
        for (const auto& u : tests) worst = std::max(worst, orthogonality_residual(u, elems[e]));
        h << e << ',' << format_real(worst) << '\n';
      }
      auto fl = open_out(dens_out, "flatten.csv");
      fl << "level,width,width_reduced,distance\n";
      if (!elems.empty()) {
        auto trace = flatten_trace(elems.front().potential, dom, dens_levels, dens_q);
        for (std::size_t i = 0; i < trace.size(); ++i)
          fl << i + 1 << ',' << format_real(trace[i].width) << ',' << (trace[i].width_reduced ? 1 : 0) << ','
             << format_real(trace[i].distance) << '\n';
      }
    } else if (*maly_cmd) {
      check_run_config(2.0, maly_resolution);
      auto mm = maly_martio(maly_stages, maly_alpha, maly_resolution);
      save_maly_martio(maly_out, mm);
      if (mm.truncated) std::cerr << "stopped after " << mm.stages.size() << " stages\n";
    } else if (*check_cmd) {
      bool all = true;
      for (int id : check_only.empty() ? criterion_ids() : check_only) {
        auto r = run_criterion(id);
        print_result(std::cout, r);
        std::cout.flush();
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
