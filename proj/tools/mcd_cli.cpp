// Command-line front end: geometry and operator dumps, acoustics and flow
// runs, convergence studies and reference comparisons.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mcd/mcd.hpp"

namespace {

using namespace mcd;

// Case selection shared by every subcommand: a preset name or a JSON config
// file, optionally overridden from flags.
struct CaseOptions {
  std::string source = "tgv";
  int n = 0;
  double l0 = 0.0;
  double re = 0.0;
  double t_end = -1.0;
  int max_steps = -1;
  double dt = 0.0;
  double beta = -1.0;
  std::string mode;
  std::string arrangement;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  std::string obstacle;
  std::string out;
  int every = 0;
  std::vector<double> snapshots;
  bool vtk = false;

  void add_flags(CLI::App* app, bool flow) {
    app->add_option("--n", n, "nodes per side");
    app->add_option("--l0", l0, "cell width for cylinder cases");
    app->add_option("--t-end", t_end, "simulated end time");
    app->add_option("--max-steps", max_steps, "step cap");
    app->add_option("--dt", dt, "time step");
    app->add_option("--mode", mode, "staggered or collocated")->check(CLI::IsMember({"staggered", "collocated"}));
    app->add_option("--obstacle", obstacle, "none, fitted or damping")
        ->check(CLI::IsMember({"none", "fitted", "damping"}));
    app->add_option("--out", out, "output directory");
    app->add_option("--every", every, "diagnostic output cadence in steps");
    app->add_option("--snapshot-times", snapshots, "times at which to write snapshots");
    app->add_flag("--vtk", vtk, "also write legacy VTK snapshots");
    if (flow) {
      app->add_option("--re", re, "Reynolds number");
      app->add_option("--beta", beta, "TEC blending factor");
      app->add_option("--arrangement", arrangement, "uniform or randomized")
          ->check(CLI::IsMember({"uniform", "randomized"}));
      app->add_option("--alpha", alpha, "randomization amplitude");
      app->add_option("--seed", seed, "randomization seed");
    }
  }

  CaseConfig resolve() const {
    CaseConfig c;
    if (known_preset(source)) {
      c = preset(source, n, re);
    } else {
      std::ifstream is(source);
      if (!is) throw ConfigError("'" + source + "' is neither a preset nor a readable config file");
      std::stringstream ss;
      ss << is.rdbuf();
      c = parse_config(ss.str());
      if (n > 0) c.n = n;
    }
    if (l0 > 0.0) c.l0 = l0;
    if (t_end >= 0.0) c.run.t_end = t_end;
    if (max_steps >= 0) c.run.max_steps = max_steps;
    if (dt > 0.0) {
      c.fluid.dt = dt;
      c.acoustics.dt = dt;
    }
    if (beta >= 0.0) c.fluid.beta = beta;
    if (!mode.empty()) c.scheme = mode;
    if (!arrangement.empty()) c.arrangement = {arrangement, alpha, seed};
    if (!obstacle.empty()) {
      c.obstacle.mode = obstacle;
      if (c.name == "acoustics" && obstacle == "damping") {
        c.obstacle.alpha0 = 1e7;
        c.obstacle.radius = 0.05;
        c.obstacle.center = {0.625, 0.5};
        if (dt <= 0.0) c.acoustics.dt = 1e-7;
      }
    }
    if (!out.empty()) c.output.directory = out;
    if (every > 0) c.output.every = every;
    if (!snapshots.empty()) c.output.snapshot_times = snapshots;
    if (vtk) c.output.formats = {"csv", "vtk"};
    c.validate();
    return c;
  }

  static bool known_preset(const std::string& s) {
    return s == "tgv" || s == "cavity" || s == "channel-cylinder" || s == "oscillating-cylinder" ||
           s == "acoustics";
  }
};

void apply_thread_override() {
  const char* env = std::getenv("MCD_THREADS");
  if (!env) return;
  const int t = std::atoi(env);
  if (t < 1) throw ConfigError("MCD_THREADS must be a positive integer");
#ifdef _OPENMP
  omp_set_num_threads(t);
#endif
}

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::fluid: return "fluid";
    case NodeKind::boundary: return "boundary";
    case NodeKind::excluded: return "excluded";
  }
  return "?";
}

const char* tag_name(const NodeSet& nodes, int i) {
  if (nodes.tag[i] < 0) return "none";
  switch (nodes.condition(i).kind) {
    case BoundaryKind::wall: return "wall";
    case BoundaryKind::inlet: return "inlet";
    case BoundaryKind::outlet: return "outlet";
    case BoundaryKind::obstacle: return "obstacle";
  }
  return "?";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

void geometry_dump(const CaseConfig& c, const std::string& nodes_path, const std::string& edges_path) {
  const auto disc = flow_geometry(c);
  auto os = open_out(nodes_path);
  os << "id,x,y,kind,tag\n";
  for (int i = 0; i < disc.size(); ++i) {
    os << i << ',' << format_double(disc.nodes.position[i].x) << ',' << format_double(disc.nodes.position[i].y)
       << ',' << kind_name(disc.nodes.kind[i]) << ',' << tag_name(disc.nodes, i) << '\n';
  }
  if (!edges_path.empty()) {
    auto es = open_out(edges_path);
    es << "a,b,dx,dy\n";
    for (const auto& e : disc.edges) {
      es << e.a << ',' << e.b << ',' << format_double(e.offset.x) << ',' << format_double(e.offset.y) << '\n';
    }
  }
  std::cout << disc.size() << " nodes, " << disc.edges.size() << " edges\n";
}

void operators_dump(const CaseConfig& c, const std::string& path) {
  const auto prob = Problem::build(flow_geometry(c));
  auto os = open_out(path);
  os << "node,fit,neighbor,value,grad_x,grad_y,laplacian,condition_number,regularized\n";
  auto rows = [&](int i, const char* fit, const DerivativeWeights& w, bool with_centre) {
    const auto& st = prob.disc.stencils[i];
    for (int k = 0; k < w.size(); ++k) {
      const int nb = with_centre ? (k == 0 ? i : st.neighbors[k - 1].node) : st.neighbors[k].node;
      os << i << ',' << fit << ',' << nb << ',' << format_double(w.value[k]) << ','
         << format_double(w.gradient[k].x) << ',' << format_double(w.gradient[k].y) << ','
         << format_double(w.laplacian[k]) << ',' << format_double(w.condition_number) << ','
         << (w.regularized ? 1 : 0) << '\n';
    }
  };
  for (int i = 0; i < prob.disc.size(); ++i) {
    if (!prob.disc.nodes.fluid(i)) continue;
    const auto& op = prob.ops.at(i);
    rows(i, "radial", op.radial, false);
    if (prob.disc.stencils[i].has_boundary_face()) rows(i, "augmented", op.augmented, false);
    rows(i, "nodal", op.nodal, true);
  }
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

Profile load_profile(const std::string& path, const std::string& s_col, const std::string& f_col) {
  const auto t = read_csv(path);
  return {t.values(s_col), t.values(f_col)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meshfree staggered incompressible flow and acoustics solver"};
  app.require_subcommand(1);

  CaseOptions geo_opt;
  std::string nodes_path = "nodes.csv", edges_path;
  auto* geometry = app.add_subcommand("geometry", "geometry tools");
  auto* gdump = geometry->add_subcommand("dump", "write nodes (and edges) as CSV");
  geometry->require_subcommand(1);
  gdump->add_option("case", geo_opt.source, "preset or config file");
  gdump->add_option("--nodes", nodes_path, "node CSV path");
  gdump->add_option("--edges", edges_path, "edge CSV path");
  geo_opt.add_flags(gdump, true);

  CaseOptions op_opt;
  std::string op_path = "operators.csv";
  auto* operators = app.add_subcommand("operators", "operator tools");
  auto* odump = operators->add_subcommand("dump", "write per-node derivative weights as CSV");
  operators->require_subcommand(1);
  odump->add_option("case", op_opt.source, "preset or config file");
  odump->add_option("--csv", op_path, "output CSV path");
  op_opt.add_flags(odump, true);

  CaseOptions ac_opt;
  ac_opt.source = "acoustics";
  auto* acoustics = app.add_subcommand("acoustics", "pressure-pulse acoustics run");
  acoustics->add_option("--config", ac_opt.source, "config file (default: acoustics preset)");
  ac_opt.add_flags(acoustics, false);

  CaseOptions ns_opt;
  bool print_config = false;
  auto* ns = app.add_subcommand("ns", "incompressible flow run");
  ns->add_option("case", ns_opt.source, "preset (tgv, cavity, channel-cylinder, oscillating-cylinder) or config file")
      ->required();
  ns->add_flag("--print-config", print_config, "print the resolved config and exit");
  ns_opt.add_flags(ns, true);

  CaseOptions cv_opt;
  std::string resolutions = "16,32,64", cv_path = "convergence.csv";
  auto* converge = app.add_subcommand("converge", "Taylor-Green convergence study");
  converge->add_option("case", cv_opt.source, "tgv preset or config file");
  converge->add_option("--resolutions", resolutions, "comma separated N list");
  converge->add_option("--csv", cv_path, "output CSV path");
  cv_opt.add_flags(converge, true);

  std::string profile_path, reference_path, s_col = "y", f_col = "u";
  auto* compare = app.add_subcommand("compare", "compare a profile CSV against a reference CSV");
  compare->add_option("profile", profile_path, "numerical profile CSV")->required();
  compare->add_option("reference", reference_path, "reference CSV")->required();
  compare->add_option("--x-col", s_col, "abscissa column");
  compare->add_option("--f-col", f_col, "value column");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_thread_override();
    if (*gdump) {
      geometry_dump(geo_opt.resolve(), nodes_path, edges_path);
    } else if (*odump) {
      operators_dump(op_opt.resolve(), op_path);
    } else if (*acoustics) {
      const auto c = ac_opt.resolve();
      if (c.name != "acoustics") throw ConfigError("acoustics needs an acoustics config");
      run_case(c, std::cout);
    } else if (*ns) {
      const auto c = ns_opt.resolve();
      if (print_config) {
        std::cout << serialize_config(c) << '\n';
        return 0;
      }
      if (c.name == "acoustics") throw ConfigError("use the acoustics subcommand for acoustics configs");
      const auto r = run_case(c, std::cout);
      for (const auto& f : r.files) std::cout << "wrote " << f << '\n';
      return r.identity_violations == 0 ? 0 : 3;
    } else if (*converge) {
      const auto c = cv_opt.resolve();
      if (c.name != "tgv") throw ConfigError("convergence studies are defined for the tgv case");
      const auto study = taylor_green_convergence(c, parse_list(resolutions));
      write_csv(cv_path, convergence_csv(study));
      write_csv(std::cout, convergence_csv(study));
      if (!study.complete) {
        std::cerr << "incomplete study: " << study.failure << '\n';
        return 2;
      }
    } else if (*compare) {
      const auto d = reference_comparison(load_profile(profile_path, s_col, f_col),
                                          load_profile(reference_path, s_col, f_col));
      std::cout << "max," << format_double(d.max) << "\nrms," << format_double(d.rms) << "\ncount," << d.count
                << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
