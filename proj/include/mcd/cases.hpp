#pragma once

/// @file cases.hpp
/// Case orchestration: geometry, operators, initial state, time loop and
/// artifacts (diagnostics, drag series, probe lines, snapshots).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mcd/benchmarks.hpp"
#include "mcd/config.hpp"
#include "mcd/io.hpp"

namespace mcd {

/// Geometry for a flow case described by `c`.
inline Discretization flow_geometry(const CaseConfig& c) {
  if (c.name == "tgv") return taylor_green_geometry(c.n, c.arrangement.to_arrangement(), c.flow.L);
  if (c.name == "cavity") return cavity_geometry(c.n, c.flow.U, c.flow.L, c.arrangement.to_arrangement());
  if (c.name == "channel-cylinder") {
    ChannelSpec s;
    s.l0 = c.l0;
    s.U = c.flow.U;
    s.cylinder = {c.obstacle.center, c.flow.D};
    s.obstacle = c.obstacle.mode == "fitted" ? ObstacleMode::fitted : ObstacleMode::damping;
    return channel_geometry(s, c.arrangement.to_arrangement());
  }
  if (c.name == "oscillating-cylinder") {
    return oscillating_geometry({c.flow.half_width, c.l0, c.flow.D});
  }
  if (c.name == "acoustics") return acoustics_geometry(c.n, 1.0);
  throw ConfigError("unknown case '" + c.name + "'");
}

inline FluidParams fluid_params(const CaseConfig& c) {
  FluidParams p;
  p.rho = c.fluid.rho;
  p.eta = c.fluid.eta;
  p.dt = c.fluid.dt;
  p.beta = c.fluid.beta;
  p.solver = c.solve_options();
  return p;
}

inline Forcing flow_forcing(const CaseConfig& c) {
  Forcing f;
  f.damping = c.damping();
  if (c.name == "oscillating-cylinder") f.frame = oscillating_frame(c.flow.U, c.flow.frequency);
  return f;
}

inline VectorField initial_velocity(const CaseConfig& c, const Discretization& disc) {
  VectorField u(disc.size());
  for (int i = 0; i < disc.size(); ++i) {
    if (c.name == "tgv") {
      const auto e = taylor_green_exact(disc.nodes.position[i], 0.0, c.flow.U, c.flow.L, c.fluid.rho, c.fluid.eta);
      u[i] = {e.u, e.v};
    } else if (c.name == "channel-cylinder" || c.name == "oscillating-cylinder") {
      u[i] = {c.flow.U, 0.0};
    }
  }
  // Nodes inside a fitted body are excluded; boundary values are set by the solver.
  return u;
}

inline Snapshot flow_snapshot(const Discretization& disc, const OperatorCache& ops, const FlowState& s,
                              Scheme scheme) {
  ScalarField div(disc.size(), 0.0);
  if (scheme == Scheme::staggered) {
    div = staggered_divergence(disc, ops, s.U, s.u);
  } else {
    for (int i = 0; i < disc.size(); ++i) {
      if (disc.nodes.fluid(i)) div[i] = nodal_divergence(disc, ops, s.u, i);
    }
  }
  return make_snapshot(disc, s.u, s.p, div, vorticity(disc, ops, s.u));
}

struct CaseResult {
  int steps = 0;
  double t = 0.0;
  bool steady = false;
  int identity_violations = 0;
  std::vector<std::string> files;
};

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void write_snapshot_files(const CaseConfig& c, const Snapshot& snap, const std::string& stem,
                                 CaseResult& res) {
  for (const auto& f : c.output.formats) {
    const std::string path = join_path(c.output.directory, stem + "." + f);
    if (f == "csv") write_snapshot_csv(path, snap);
    if (f == "vtk") write_snapshot_vtk(path, snap, stem);
    res.files.push_back(path);
  }
}

inline std::string time_tag(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

}  // namespace detail

inline CaseResult run_flow_case(const CaseConfig& c, std::ostream& log) {
  std::filesystem::create_directories(c.output.directory);
  auto prob = Problem::build(flow_geometry(c));
  const auto& disc = prob.disc;
  const auto scheme = c.scheme_kind();
  NsSolver solver(disc, prob.ops, fluid_params(c), flow_forcing(c), scheme);
  FlowState s = solver.initial_state(initial_velocity(c, disc));

  const double u_ref = c.flow.U;
  log << "case " << c.name << " (" << c.scheme << "): " << disc.nodes.count(NodeKind::fluid)
      << " fluid nodes, l0 = " << disc.mesh.l0 << ", dt = " << c.fluid.dt
      << ", Courant = " << advective_courant(u_ref, c.fluid.dt, disc.mesh.l0)
      << ", diffusion number = " << diffusion_number(solver.params(), disc.mesh.l0) << '\n';
  if (advective_courant(u_ref, c.fluid.dt, disc.mesh.l0) > 1.0) log << "warning: Courant number above 1\n";
  if (diffusion_number(solver.params(), disc.mesh.l0) > 0.25) log << "warning: diffusion number above 0.25\n";

  CaseResult res;
  Table diag;
  diag.header = {"step", "t", "max_div", "residual_inf", "identity_bound", "identity_holds",
                 "iterations", "final_residual", "max_rate", "recovery_difference"};
  Table drag;
  drag.header = {"t", "cd_total", "cd_pressure", "cd_viscous", "cd_damping"};
  const bool want_drag = c.obstacle.mode != "none" &&
                         (c.name == "channel-cylinder" || c.name == "oscillating-cylinder");
  std::size_t next_snapshot = 0;
  auto snapshot_times = c.output.snapshot_times;
  std::sort(snapshot_times.begin(), snapshot_times.end());

  RunControl ctl;
  ctl.t_end = c.run.t_end;
  ctl.max_steps = c.run.max_steps;
  if (c.run.steady) ctl.steady_reference = std::make_pair(c.flow.U, c.flow.L);
  auto observe = [&](const FlowState& st, const StepDiagnostics& d) {
    if (st.step % c.output.every == 0) {
      diag.rows.push_back({static_cast<double>(st.step), st.t, d.max_divergence, d.residual_inf,
                           d.identity_bound, d.identity_holds ? 1.0 : 0.0,
                           static_cast<double>(d.solve.iterations), d.solve.final_residual(), d.max_rate,
                           d.recovery_difference});
      if (want_drag) {
        const auto r = c.obstacle.mode == "fitted"
                           ? drag_fitted(disc, st, c.fluid.eta, c.fluid.rho, c.flow.U, c.flow.D)
                           : drag_damping(disc, st, *c.damping(), c.fluid.rho, c.flow.U, c.flow.D);
        drag.rows.push_back({st.t, r.total, r.pressure, r.viscous, r.damping});
      }
    }
    while (next_snapshot < snapshot_times.size() && st.t >= snapshot_times[next_snapshot] - 0.5 * c.fluid.dt) {
      detail::write_snapshot_files(c, flow_snapshot(disc, prob.ops, st, scheme),
                                   "snapshot_t" + detail::time_tag(snapshot_times[next_snapshot]), res);
      ++next_snapshot;
    }
  };
  const auto sum = run_flow(solver, s, ctl, observe);
  res.steps = sum.steps;
  res.t = s.t;
  res.steady = sum.steady;
  res.identity_violations = sum.identity_violations;

  const std::string diag_path = detail::join_path(c.output.directory, "diagnostics.csv");
  write_csv(diag_path, diag);
  res.files.push_back(diag_path);
  if (want_drag) {
    const std::string p = detail::join_path(c.output.directory, "drag.csv");
    write_csv(p, drag);
    res.files.push_back(p);
  }
  detail::write_snapshot_files(c, flow_snapshot(disc, prob.ops, s, scheme), "snapshot_final", res);
  if (c.name == "cavity") {
    const auto prof = vertical_centerline_u(disc, prob.ops, s.u);
    Table t;
    t.header = {"y", "u"};
    for (std::size_t k = 0; k < prof.s.size(); ++k) t.rows.push_back({prof.s[k], prof.f[k]});
    const std::string p = detail::join_path(c.output.directory, "centerline_u.csv");
    write_csv(p, t);
    res.files.push_back(p);
  }
  log << "finished after " << res.steps << " steps at t = " << res.t << (res.steady ? " (steady)" : "")
      << ", identity violations: " << res.identity_violations << '\n';
  return res;
}

/// One Taylor-Green run from the exact initial state; errors at the final time.
struct TaylorGreenResult {
  ErrorReport errors;
  RunSummary summary;
};

inline TaylorGreenResult run_taylor_green(const CaseConfig& c) {
  auto prob = Problem::build(flow_geometry(c));
  NsSolver solver(prob.disc, prob.ops, fluid_params(c), {}, c.scheme_kind());
  FlowState s = solver.initial_state(initial_velocity(c, prob.disc));
  RunControl ctl;
  ctl.t_end = c.run.t_end;
  ctl.max_steps = c.run.max_steps;
  TaylorGreenResult r;
  r.summary = run_flow(solver, s, ctl);
  r.errors = taylor_green_errors(prob.disc, s, c.flow.U, c.flow.L, c.fluid.rho, c.fluid.eta, c.n);
  return r;
}

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  bool complete = true;
  std::string failure;
};

/// Runs `base` at each resolution; a failing run stops the study and the
/// partial table is returned with `complete = false`.
inline ConvergenceStudy taylor_green_convergence(CaseConfig base, const std::vector<int>& resolutions) {
  ConvergenceStudy study;
  std::vector<ErrorReport> reports;
  for (int n : resolutions) {
    base.n = n;
    try {
      reports.push_back(run_taylor_green(base).errors);
    } catch (const std::exception& e) {
      study.complete = false;
      study.failure = "N = " + std::to_string(n) + ": " + e.what();
      break;
    }
  }
  study.rows = convergence_table(reports);
  return study;
}

inline Table convergence_csv(const ConvergenceStudy& study) {
  Table t;
  t.header = {"n"};
  for (const char* f : {"u", "v", "p"}) {
    for (const char* k : {"l1", "l2", "linf"}) t.header.push_back(std::string(f) + "_" + k);
  }
  for (const char* f : {"u", "v", "p"}) {
    for (const char* k : {"l1", "l2", "linf"}) t.header.push_back(std::string("order_") + f + "_" + k);
  }
  t.header.push_back("complete");
  for (const auto& r : study.rows) {
    std::vector<double> row{static_cast<double>(r.errors.resolution)};
    for (const auto* n : {&r.errors.u, &r.errors.v, &r.errors.p}) {
      row.insert(row.end(), {n->l1, n->l2, n->linf});
    }
    for (const auto* n : {&r.order_u, &r.order_v, &r.order_p}) {
      row.insert(row.end(), {n->l1, n->l2, n->linf});
    }
    row.push_back(study.complete ? 1.0 : 0.0);
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct AcousticsRun {
  Discretization disc;
  OperatorCache ops;
  AcousticsState state;
};

/// Pulse initial condition on the acoustics box.
inline AcousticsRun start_acoustics(const CaseConfig& c) {
  auto prob = Problem::build(flow_geometry(c));
  ScalarField p0(prob.disc.size(), 0.0);
  for (int i = 0; i < prob.disc.size(); ++i) {
    if (prob.disc.nodes.active(i)) {
      p0[i] = cosine_pulse(prob.disc.nodes.position[i], c.acoustics.pulse_center, c.acoustics.pulse_radius);
    }
  }
  auto st = make_acoustics_state(prob.disc, p0);
  return {std::move(prob.disc), std::move(prob.ops), std::move(st)};
}

inline void acoustics_step(AcousticsRun& run, const CaseConfig& c) {
  const AcousticParams prm{c.acoustics.rho, c.acoustics.c};
  if (c.scheme_kind() == Scheme::staggered) {
    acoustics_step_staggered(run.disc, run.ops, run.state, prm, c.acoustics.dt, c.damping());
  } else {
    acoustics_step_collocated(run.disc, run.ops, run.state, prm, c.acoustics.dt, c.damping());
  }
}

/// Pressure along y = L/2 for x in [L/2, L] at the node heights of the row
/// through the pulse centre.
inline Profile acoustics_centerline(const Discretization& disc, const ScalarField& p) {
  Profile prof;
  const auto& m = disc.mesh;
  const int iy = m.ny / 2;
  for (int ix = 0; ix < m.nx; ++ix) {
    const int i = m.cell_id(ix, iy);
    const Vec2 x = disc.nodes.position[i];
    if (x.x < m.origin.x + 0.5 * m.extent().x - 1e-12) continue;
    prof.s.push_back(x.x);
    prof.f.push_back(p[i]);
  }
  return prof;
}

inline int step_count(double t_end, double dt) { return static_cast<int>(std::llround(t_end / dt)); }

inline CaseResult run_acoustics_case(const CaseConfig& c, std::ostream& log) {
  std::filesystem::create_directories(c.output.directory);
  auto run = start_acoustics(c);
  const AcousticParams prm{c.acoustics.rho, c.acoustics.c};
  const double courant = acoustic_courant(prm, c.acoustics.dt, run.disc.mesh.l0);
  log << "acoustics (" << c.scheme << "): " << run.disc.nodes.count(NodeKind::fluid)
      << " fluid nodes, Courant = " << courant << '\n';
  if (courant > 1.0) log << "warning: acoustic Courant number above 1\n";

  CaseResult res;
  Table metric;
  metric.header = {"step", "t", "checkerboard"};
  const int steps = std::min(step_count(c.run.t_end, c.acoustics.dt), c.run.max_steps);
  auto snapshot_times = c.output.snapshot_times;
  std::sort(snapshot_times.begin(), snapshot_times.end());
  std::size_t next_snapshot = 0;
  auto acoustic_snapshot = [&] {
    VectorField u = c.scheme_kind() == Scheme::staggered
                        ? staggered_to_nodal_velocity(run.disc, run.ops, run.state.U, run.state.u)
                        : run.state.u;
    return make_snapshot(run.disc, u, run.state.p, {}, {});
  };
  for (int n = 0; n < steps; ++n) {
    acoustics_step(run, c);
    if (run.state.step % c.output.every == 0 || n + 1 == steps) {
      metric.rows.push_back({static_cast<double>(run.state.step), run.state.t,
                             checkerboard_metric(run.disc, run.state.p)});
    }
    while (next_snapshot < snapshot_times.size() &&
           run.state.t >= snapshot_times[next_snapshot] - 0.5 * c.acoustics.dt) {
      detail::write_snapshot_files(c, acoustic_snapshot(),
                                   "snapshot_t" + detail::time_tag(snapshot_times[next_snapshot]), res);
      ++next_snapshot;
    }
  }
  res.steps = steps;
  res.t = run.state.t;
  const std::string mpath = detail::join_path(c.output.directory, "checkerboard.csv");
  write_csv(mpath, metric);
  res.files.push_back(mpath);

  const auto prof = acoustics_centerline(run.disc, run.state.p);
  Table probe;
  probe.header = {"x", "p"};
  for (std::size_t k = 0; k < prof.s.size(); ++k) probe.rows.push_back({prof.s[k], prof.f[k]});
  const std::string ppath = detail::join_path(c.output.directory, "probe_centerline.csv");
  write_csv(ppath, probe);
  res.files.push_back(ppath);
  detail::write_snapshot_files(c, acoustic_snapshot(), "snapshot_final", res);
  log << "finished after " << steps << " steps at t = " << res.t
      << ", checkerboard metric = " << checkerboard_metric(run.disc, run.state.p) << '\n';
  return res;
}

inline CaseResult run_case(const CaseConfig& c, std::ostream& log) {
  c.validate();
  return c.name == "acoustics" ? run_acoustics_case(c, log) : run_flow_case(c, log);
}

}  // namespace mcd
