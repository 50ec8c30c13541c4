#pragma once

/// @file benchmarks.hpp
/// Benchmark geometries, exact solutions, error norms, convergence tables,
/// profile sampling and reference comparison, and the time-loop driver.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcd/acoustics.hpp"
#include "mcd/ns.hpp"

namespace mcd {

struct TaylorGreenSample {
  double u = 0.0;
  double v = 0.0;
  double p = 0.0;
};

/// Decaying Taylor-Green vortex with period 2L. The pressure is the
/// companion field (rho U^2 / 4) e^{-4 pi^2 eta t / rho L^2}
/// [cos(2 pi x / L) + cos(2 pi y / L)] that balances the velocity field.
inline TaylorGreenSample taylor_green_exact(const Vec2& x, double t, double U, double L, double rho,
                                            double eta) {
  const double pi = std::numbers::pi;
  const double decay = std::exp(-2.0 * pi * pi * eta * t / (rho * L * L));
  const double kx = pi * x.x / L;
  const double ky = pi * x.y / L;
  TaylorGreenSample s;
  s.u = U * decay * std::sin(kx) * std::cos(ky);
  s.v = -U * decay * std::cos(kx) * std::sin(ky);
  s.p = 0.25 * rho * U * U * decay * decay * (std::cos(2.0 * kx) + std::cos(2.0 * ky));
  return s;
}

struct NormTriple {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Mean-absolute, root-mean-square and max error over the listed entries.
inline NormTriple error_norms(const std::vector<double>& numerical, const std::vector<double>& exact) {
  if (numerical.size() != exact.size()) throw std::invalid_argument("error_norms size mismatch");
  NormTriple n;
  if (numerical.empty()) return n;
  for (std::size_t i = 0; i < numerical.size(); ++i) {
    const double d = std::abs(numerical[i] - exact[i]);
    n.l1 += d;
    n.l2 += d * d;
    n.linf = std::max(n.linf, d);
  }
  const double count = static_cast<double>(numerical.size());
  n.l1 /= count;
  n.l2 = std::sqrt(n.l2 / count);
  return n;
}

struct ErrorReport {
  int resolution = 0;
  NormTriple u, v, p;
};

/// Observed order between two consecutive resolutions (NaN when undefined).
inline double observed_order(double e_coarse, double e_fine, double refinement = 2.0) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_coarse / e_fine) / std::log(refinement);
}

struct ConvergenceRow {
  ErrorReport errors;
  // Orders relative to the previous row (NaN in the first row).
  NormTriple order_u, order_v, order_p;
};

inline std::vector<ConvergenceRow> convergence_table(const std::vector<ErrorReport>& reports) {
  std::vector<ConvergenceRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < reports.size(); ++k) {
    ConvergenceRow r;
    r.errors = reports[k];
    r.order_u = r.order_v = r.order_p = {nan, nan, nan};
    if (k > 0) {
      const auto& a = reports[k - 1];
      const auto& b = reports[k];
      const double ref = static_cast<double>(b.resolution) / a.resolution;
      auto orders = [&](const NormTriple& x, const NormTriple& y) {
        return NormTriple{observed_order(x.l1, y.l1, ref), observed_order(x.l2, y.l2, ref),
                          observed_order(x.linf, y.linf, ref)};
      };
      r.order_u = orders(a.u, b.u);
      r.order_v = orders(a.v, b.v);
      r.order_p = orders(a.p, b.p);
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Geometries.

struct Problem {
  Discretization disc;
  OperatorCache ops;

  static Problem build(Discretization d, const FitSettings& fit = {}) {
    Problem p{std::move(d), {}};
    p.ops = OperatorCache::build(p.disc, fit);
    return p;
  }
};

/// Periodic [-L, L]^2 with l0 = 2L/N.
inline Discretization taylor_green_geometry(int n, const Arrangement& arr, double L = 1.0) {
  const auto mesh = build_background_mesh({{-L, -L}, {L, L}}, 2.0 * L / n, true, true);
  return make_discretization(mesh, generate_nodes(mesh, arr, {}));
}

/// [-L/2, L/2]^2 with N x N nodes; the lid on top moves at (U, 0) and owns the corners.
inline Discretization cavity_geometry(int n, double U = 1.0, double L = 1.0,
                                      const Arrangement& arr = Arrangement::uniform()) {
  const auto mesh = build_background_mesh({{-0.5 * L, -0.5 * L}, {0.5 * L, 0.5 * L}}, L / n, false, false);
  BoundarySpec bc;
  bc[Side::left] = BoundaryCondition{BoundaryKind::wall, {}, false};
  bc[Side::right] = BoundaryCondition{BoundaryKind::wall, {}, false};
  bc[Side::bottom] = BoundaryCondition{BoundaryKind::wall, {}, false};
  bc[Side::top] = BoundaryCondition{BoundaryKind::wall, {U, 0.0}, false};
  return make_discretization(mesh, generate_nodes(mesh, arr, bc));
}

struct ChannelSpec {
  double x_min = -2.0, x_max = 6.0, y_min = -2.0, y_max = 2.0;
  double l0 = 1.0 / 16.0;
  double U = 1.0;
  Circle cylinder{{0.0, 0.0}, 1.0};
  ObstacleMode obstacle = ObstacleMode::damping;
};

/// Channel periodic in y with a uniform inlet on the left and a pressure
/// outlet on the right.
inline Discretization channel_geometry(const ChannelSpec& c,
                                       const Arrangement& arr = Arrangement::uniform()) {
  const auto mesh = build_background_mesh({{c.x_min, c.y_min}, {c.x_max, c.y_max}}, c.l0, false, true);
  BoundarySpec bc;
  bc[Side::left] = BoundaryCondition{BoundaryKind::inlet, {c.U, 0.0}, false};
  bc[Side::right] = BoundaryCondition{BoundaryKind::outlet, {}, false};
  auto nodes = generate_nodes(mesh, arr, bc);
  nodes = place_obstacle_nodes(std::move(nodes), mesh, c.cylinder, c.obstacle);
  return make_discretization(mesh, std::move(nodes));
}

/// Default damping region standing in for the channel cylinder.
inline DampingSpec channel_damping(const ChannelSpec& c, double alpha0 = 1e4) {
  return {alpha0, c.cylinder.radius(), c.cylinder.center};
}

struct OscillatingSpec {
  double half_width = 5.0;  // box [-h, h]^2 around the body
  double l0 = 1.0 / 20.0;
  double diameter = 1.0;
};

/// Closed box in the body-fixed frame: the fitted cylinder is at rest and
/// the outer walls move with the far-field velocity of the frame.
inline Discretization oscillating_geometry(const OscillatingSpec& s) {
  const double h = s.half_width;
  const auto mesh = build_background_mesh({{-h, -h}, {h, h}}, s.l0, false, false);
  BoundarySpec bc;
  for (auto side : {Side::left, Side::right, Side::bottom, Side::top}) {
    bc[side] = BoundaryCondition{BoundaryKind::wall, {}, true};
  }
  auto nodes = generate_nodes(mesh, Arrangement::uniform(), bc);
  nodes = place_obstacle_nodes(std::move(nodes), mesh, {{0.0, 0.0}, s.diameter}, ObstacleMode::fitted);
  return make_discretization(mesh, std::move(nodes));
}

/// [0, L]^2 with N x N nodes and rigid (reflecting) walls.
inline Discretization acoustics_geometry(int n, double L = 1.0) {
  const auto mesh = build_background_mesh({{0.0, 0.0}, {L, L}}, L / n, false, false);
  BoundarySpec bc;
  for (auto side : {Side::left, Side::right, Side::bottom, Side::top}) {
    bc[side] = BoundaryCondition{BoundaryKind::wall, {}, false};
  }
  return make_discretization(mesh, generate_nodes(mesh, Arrangement::uniform(), bc));
}

// ---------------------------------------------------------------------------
// Sampling and comparison.

/// Value of the nodal interpolant at x, using the node of the cell containing x.
inline Vec2 sample_velocity(const Discretization& disc, const OperatorCache& ops,
                            const VectorField& u, const Vec2& x) {
  const auto& m = disc.mesh;
  const int ix = std::clamp(static_cast<int>(std::floor((x.x - m.origin.x) / m.l0)), 0, m.nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((x.y - m.origin.y) / m.l0)), 0, m.ny - 1);
  const int i = m.cell_id(ix, iy);
  if (!disc.nodes.active(i)) return {};
  return interpolate_velocity(disc, ops, u, i, x - disc.nodes.position[i]);
}

struct Profile {
  std::vector<double> s;  // abscissa
  std::vector<double> f;  // value
};

/// u_x along the vertical line x = x0, sampled at the node heights of the
/// cell column containing x0 (wall nodes included).
inline Profile vertical_centerline_u(const Discretization& disc, const OperatorCache& ops,
                                     const VectorField& u, double x0 = 0.0) {
  Profile p;
  const auto& m = disc.mesh;
  const int ix = std::clamp(static_cast<int>(std::floor((x0 - m.origin.x) / m.l0)), 0, m.nx - 1);
  for (int iy = 0; iy < m.ny; ++iy) {
    const double y = disc.nodes.position[m.cell_id(ix, iy)].y;
    p.s.push_back(y);
    p.f.push_back(sample_velocity(disc, ops, u, {x0, y}).x);
  }
  return p;
}

/// Linear interpolation of a profile with increasing abscissae.
inline double interpolate_profile(const Profile& p, double s) {
  if (p.s.empty()) throw std::invalid_argument("empty profile");
  if (s < p.s.front() - 1e-12 || s > p.s.back() + 1e-12) {
    throw std::out_of_range("abscissa outside the profile range");
  }
  const auto it = std::upper_bound(p.s.begin(), p.s.end(), s);
  if (it == p.s.begin()) return p.f.front();
  if (it == p.s.end()) return p.f.back();
  const std::size_t k = static_cast<std::size_t>(it - p.s.begin());
  const double t = (s - p.s[k - 1]) / (p.s[k] - p.s[k - 1]);
  return (1.0 - t) * p.f[k - 1] + t * p.f[k];
}

struct Deviation {
  double max = 0.0;
  double rms = 0.0;
  int count = 0;
};

/// Interpolates `numerical` to the reference abscissae and reports the
/// max and RMS deviation.
inline Deviation reference_comparison(const Profile& numerical, const Profile& reference) {
  Deviation d;
  for (std::size_t k = 0; k < reference.s.size(); ++k) {
    const double e = interpolate_profile(numerical, reference.s[k]) - reference.f[k];
    d.max = std::max(d.max, std::abs(e));
    d.rms += e * e;
    ++d.count;
  }
  if (d.count > 0) d.rms = std::sqrt(d.rms / d.count);
  return d;
}

/// Pressure and velocity errors of a Taylor-Green run. The numerical
/// pressure has zero mean, so the exact pressure is compared after removing
/// its own nodal mean.
inline ErrorReport taylor_green_errors(const Discretization& disc, const FlowState& s, double U,
                                       double L, double rho, double eta, int resolution) {
  std::vector<double> nu, eu, nv, ev, np, ep;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto e = taylor_green_exact(disc.nodes.position[i], s.t, U, L, rho, eta);
    nu.push_back(s.u[i].x);
    eu.push_back(e.u);
    nv.push_back(s.u[i].y);
    ev.push_back(e.v);
    np.push_back(s.p[i]);
    ep.push_back(e.p);
  }
  const double mean_n = std::accumulate(np.begin(), np.end(), 0.0) / np.size();
  const double mean_e = std::accumulate(ep.begin(), ep.end(), 0.0) / ep.size();
  for (double& v : np) v -= mean_n;
  for (double& v : ep) v -= mean_e;
  return {resolution, error_norms(nu, eu), error_norms(nv, ev), error_norms(np, ep)};
}

// ---------------------------------------------------------------------------
// Time loop.

struct RunSummary {
  int steps = 0;
  bool steady = false;
  int identity_violations = 0;
  double worst_identity_excess = -std::numeric_limits<double>::infinity();
  double max_divergence = 0.0;
  long long solver_iterations = 0;
  StepDiagnostics last;
};

struct RunControl {
  double t_end = 0.0;
  int max_steps = std::numeric_limits<int>::max();
  // Stop once the steady criterion max rate < 1e-3 U/L holds (when set).
  std::optional<std::pair<double, double>> steady_reference;
};

using StepObserver = std::function<void(const FlowState&, const StepDiagnostics&)>;

inline RunSummary run_flow(NsSolver& solver, FlowState& s, const RunControl& ctl,
                           const StepObserver& observe = {}) {
  RunSummary sum;
  const double dt = solver.params().dt;
  while (sum.steps < ctl.max_steps && s.t < ctl.t_end - 0.5 * dt) {
    auto d = solver.step(s);
    ++sum.steps;
    sum.solver_iterations += d.solve.iterations;
    sum.max_divergence = std::max(sum.max_divergence, d.max_divergence);
    if (solver.scheme() == Scheme::staggered) {
      sum.worst_identity_excess =
          std::max(sum.worst_identity_excess, d.max_divergence - d.identity_bound);
      if (!d.identity_holds) ++sum.identity_violations;
    }
    if (observe) observe(s, d);
    sum.last = d;
    if (ctl.steady_reference &&
        is_steady(d, ctl.steady_reference->first, ctl.steady_reference->second)) {
      sum.steady = true;
      break;
    }
  }
  return sum;
}

}  // namespace mcd
