#pragma once

/// @file ns.hpp
/// First-order explicit pressure-projection Navier-Stokes stepping on the
/// staggered arrangement (upwind radial advection, radial viscous Laplacian,
/// TEC face update, Poisson solve, face and nodal corrections), the nodal
/// collocated baseline, and drag evaluation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcd/acoustics.hpp"
#include "mcd/operators.hpp"

namespace mcd {

struct FluidParams {
  double rho = 1.0;
  double eta = 0.01;
  double dt = 1e-3;
  double beta = 0.99;
  SolveOptions solver;

  void validate() const {
    if (!(rho > 0.0) || !(eta >= 0.0) || !(dt > 0.0)) {
      throw ConfigError("rho and dt must be positive and eta non-negative");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  }
};

/// Motion of a body-fixed frame: x_cyl(t) with velocity and acceleration.
/// The fluid feels -rho * acceleration; boundaries flagged `moves_with_frame`
/// additionally carry -velocity (the far field seen from the body).
struct FrameForcing {
  std::function<Vec2(double)> velocity;
  std::function<Vec2(double)> acceleration;
};

/// x_cyl = -A sin(2 pi f t) along x with A = U / (2 pi f), so the far field
/// seen from the body is (U cos(2 pi f t), 0).
inline FrameForcing oscillating_frame(double u_max, double frequency) {
  const double w = 2.0 * std::numbers::pi * frequency;
  FrameForcing f;
  f.velocity = [u_max, w](double t) { return Vec2{-u_max * std::cos(w * t), 0.0}; };
  f.acceleration = [u_max, w](double t) { return Vec2{u_max * w * std::sin(w * t), 0.0}; };
  return f;
}

struct Forcing {
  std::optional<DampingSpec> damping;
  std::optional<FrameForcing> frame;
  Vec2 body;  // constant body force per unit volume
};

struct FlowState {
  VectorField u;
  ScalarField p;
  StaggeredField U;
  double t = 0.0;
  int step = 0;
};

struct StepDiagnostics {
  double max_divergence = 0.0;
  double residual_inf = 0.0;
  double identity_bound = 0.0;  // dt/(4 rho) ||r||_inf + 1e-12
  bool identity_holds = true;
  double recovery_difference = 0.0;  // max |u recovered from U - u| (staggered only)
  double max_rate = 0.0;             // max component |u^{n+1} - u^n| / dt
  SolveReport solve;
};

/// Prescribed velocities at time t for every prescribed-velocity node.
inline Vec2 boundary_velocity(const NodeSet& nodes, int i, double t, const Forcing& forcing) {
  const auto& bc = nodes.condition(i);
  Vec2 v = bc.velocity;
  if (bc.moves_with_frame && forcing.frame && forcing.frame->velocity) {
    v -= forcing.frame->velocity(t);
  }
  return v;
}

inline void apply_velocity_bc(const Discretization& disc, VectorField& u, double t,
                              const Forcing& forcing) {
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.velocity_dirichlet(i)) u[i] = boundary_velocity(disc.nodes, i, t, forcing);
  }
}

/// Outlet nodes take the velocity of their upstream partner (zero normal gradient).
inline void apply_outlet_velocity(const Discretization& disc, const OperatorCache& ops,
                                  VectorField& u) {
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.outlet(i)) continue;
    const int j = ops.partner(i);
    if (j >= 0) u[i] = u[j];
  }
}

/// A_{i->ij} = U(i,j) times the donor-side interpolant at x_ij.
inline Vec2 upwind_advective_radial(double U_ij, const Vec2& uh_i, const Vec2& uh_j) {
  return U_ij * (U_ij >= 0.0 ? uh_i : uh_j);
}

/// Staggered face update blending the advanced value with one-sided
/// radial projections (both taken about x_i) at levels n and *.
inline double tec_update(double U_n, double bar_n_i, double bar_n_j, double bar_s_i,
                         double bar_s_j, double beta) {
  return beta * (U_n + 0.5 * (bar_s_i - bar_n_i + bar_s_j - bar_n_j)) +
         (1.0 - beta) * 0.5 * (bar_s_i + bar_s_j);
}

/// U^0(i,j) = 2 (x_ij - x_i) . (u_i + u_j)/2; faces into prescribed-velocity
/// nodes use the boundary value.
inline StaggeredField initial_staggered(const Discretization& disc, const VectorField& u) {
  StaggeredField U(static_cast<int>(disc.edges.size()));
  for (int e = 0; e < U.size(); ++e) {
    const Edge& ed = disc.edges[e];
    Vec2 v = (u[ed.a] + u[ed.b]) * 0.5;
    if (disc.nodes.velocity_dirichlet(ed.a)) v = u[ed.a];
    if (disc.nodes.velocity_dirichlet(ed.b)) v = u[ed.b];
    U.raw()[e] = dot(ed.offset, v);
  }
  return U;
}

inline FlowState make_flow_state(const Discretization& disc, VectorField u0,
                                 const Forcing& forcing = {}, double t0 = 0.0) {
  FlowState s;
  s.u = std::move(u0);
  apply_velocity_bc(disc, s.u, t0, forcing);
  s.p.assign(disc.size(), 0.0);
  s.U = initial_staggered(disc, s.u);
  s.t = t0;
  return s;
}

namespace detail {

inline Vec2 source_term(double t, const FluidParams& prm, const Forcing& forcing) {
  Vec2 f = forcing.body / prm.rho;
  if (forcing.frame && forcing.frame->acceleration) f -= forcing.frame->acceleration(t);
  return f;
}

inline double damping_factor(const Discretization& disc, int i, double dt, const Forcing& forcing) {
  if (!forcing.damping) return 1.0;
  return std::exp(-damping_coefficient(disc.nodes.position[i], *forcing.damping) * dt);
}

}  // namespace detail

/// u*_i = u^n_i + dt [ -(1/4) sum g A + eta/(4 rho) sum g (u_j - u_i) + f/rho ],
/// with the damping force applied as the exact decay factor exp(-alpha dt).
/// `uh` holds the level-n midpoint interpolants.
inline VectorField predict_intermediate(const Discretization& disc, const OperatorCache& ops,
                                        const FlowState& s, const SlotField<Vec2>& uh,
                                        const FluidParams& prm, const Forcing& forcing) {
  VectorField u_star = s.u;
  const double nu4 = prm.eta / (4.0 * prm.rho);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto& st = disc.stencils[i];
    const auto& g = ops.at(i).radial.laplacian;
    Vec2 adv, vis;
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      const double Uij = s.U.get(nb);
      adv += g[k] * upwind_advective_radial(Uij, uh[ops.slot(i, k)], uh[ops.slot(nb.node, nb.reverse)]);
      vis += g[k] * (s.u[nb.node] - s.u[i]);
    }
    const Vec2 rate = adv * (-0.25) + vis * nu4 + detail::source_term(s.t, prm, forcing);
    u_star[i] = (s.u[i] + rate * prm.dt) * detail::damping_factor(disc, i, prm.dt, forcing);
  }
  return u_star;
}

/// Applies the TEC update to every face not touching a prescribed-velocity
/// node and sets those faces to the boundary value held in `u_star`.
inline StaggeredField tec_faces(const Discretization& disc, const OperatorCache& ops,
                                const StaggeredField& U_n, const SlotField<Vec2>& uh_n,
                                const SlotField<Vec2>& uh_s, const VectorField& u_star,
                                double beta) {
  StaggeredField U_s(U_n.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    const auto& st = disc.stencils[i];
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      if (nb.edge < 0 || nb.sign < 0.0) continue;  // visit each edge from its lower node
      const int j = nb.node;
      if (disc.nodes.velocity_dirichlet(i) || disc.nodes.velocity_dirichlet(j)) {
        const Vec2 w = disc.nodes.velocity_dirichlet(j) ? u_star[j] : u_star[i];
        U_s.set(nb, dot(nb.offset, w));
        continue;
      }
      const int si = ops.slot(i, k);
      const int sj = ops.slot(j, nb.reverse);
      U_s.set(nb, tec_update(U_n.get(nb), dot(nb.offset, uh_n[si]), dot(nb.offset, uh_n[sj]),
                             dot(nb.offset, uh_s[si]), dot(nb.offset, uh_s[sj]), beta));
    }
  }
  return U_s;
}

inline double max_rate(const Discretization& disc, const VectorField& a, const VectorField& b,
                       double dt) {
  double m = 0.0;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    m = std::max({m, std::abs(a[i].x - b[i].x), std::abs(a[i].y - b[i].y)});
  }
  return m / dt;
}

class PoissonFailure : public std::runtime_error {
 public:
  PoissonFailure(const std::string& what, SolveReport r)
      : std::runtime_error(what), report(std::move(r)) {}
  SolveReport report;
};

/// Time stepper owning the pressure system of one discretization.
class NsSolver {
 public:
  NsSolver(const Discretization& disc, const OperatorCache& ops, FluidParams prm,
           Forcing forcing = {}, Scheme scheme = Scheme::staggered)
      : disc_(&disc), ops_(&ops), prm_(std::move(prm)), forcing_(std::move(forcing)),
        scheme_(scheme) {
    prm_.validate();
    const bool zero_mean = !has_pressure_dirichlet(disc.nodes);
    sys_ = scheme == Scheme::staggered ? assemble_poisson(disc, ops, zero_mean)
                                       : assemble_nodal_poisson(disc, ops, zero_mean);
  }

  const FluidParams& params() const { return prm_; }
  FluidParams& params() { return prm_; }
  const Forcing& forcing() const { return forcing_; }
  Scheme scheme() const { return scheme_; }
  const PoissonSystem& poisson() const { return sys_; }

  FlowState initial_state(VectorField u0) const { return make_flow_state(*disc_, std::move(u0), forcing_); }

  StepDiagnostics step(FlowState& s) {
    return scheme_ == Scheme::staggered ? step_staggered(s) : step_collocated(s);
  }

 private:
  StepDiagnostics step_staggered(FlowState& s) {
    const Discretization& disc = *disc_;
    const OperatorCache& ops = *ops_;
    const double t_next = s.t + prm_.dt;
    const VectorField u_old = s.u;

    const auto uh_n = interpolate_at_midpoints(disc, ops, s.u);
    VectorField u_star = predict_intermediate(disc, ops, s, uh_n, prm_, forcing_);
    apply_velocity_bc(disc, u_star, t_next, forcing_);
    const auto uh_s = interpolate_at_midpoints(disc, ops, u_star);
    StaggeredField U = tec_faces(disc, ops, s.U, uh_n, uh_s, u_star, prm_.beta);

    set_poisson_rhs(sys_, disc, ops, U, u_star, prm_.rho, prm_.dt);
    StepDiagnostics diag;
    diag.solve = solve_poisson(sys_, s.p, prm_.solver);
    if (!diag.solve.converged) throw PoissonFailure("pressure solve did not converge", diag.solve);

    projection_correct(disc, ops, U, u_star, s.p, prm_.dt, prm_.rho);
    apply_outlet_velocity(disc, ops, u_star);
    fill_boundary_pressure(disc, ops, s.p);

    const auto div = staggered_divergence(disc, ops, U, u_star);
    const auto r = poisson_residual(sys_, s.p);
    for (double v : r) diag.residual_inf = std::max(diag.residual_inf, std::abs(v));
    for (int i = 0; i < disc.size(); ++i) {
      if (disc.nodes.fluid(i)) diag.max_divergence = std::max(diag.max_divergence, std::abs(div[i]));
    }
    diag.identity_bound = prm_.dt / (4.0 * prm_.rho) * diag.residual_inf + 1e-12;
    diag.identity_holds = diag.max_divergence <= diag.identity_bound;

    const auto recovered = staggered_to_nodal_velocity(disc, ops, U, u_star);
    for (int i = 0; i < disc.size(); ++i) {
      if (disc.nodes.fluid(i)) {
        diag.recovery_difference = std::max(diag.recovery_difference, norm(recovered[i] - u_star[i]));
      }
    }
    diag.max_rate = max_rate(disc, u_star, u_old, prm_.dt);

    s.u = std::move(u_star);
    s.U = std::move(U);
    s.t = t_next;
    ++s.step;
    return diag;
  }

  StepDiagnostics step_collocated(FlowState& s) {
    const Discretization& disc = *disc_;
    const OperatorCache& ops = *ops_;
    const double t_next = s.t + prm_.dt;
    const VectorField u_old = s.u;
    const double nu = prm_.eta / prm_.rho;

    VectorField u_star = s.u;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < disc.size(); ++i) {
      if (!disc.nodes.fluid(i)) continue;
      const auto& st = disc.stencils[i];
      const auto& w = ops.at(i).nodal;
      // div(u u) from nodal gradients of the products.
      auto flux = [&](int node) {
        const Vec2& v = s.u[node];
        return std::array<double, 3>{v.x * v.x, v.x * v.y, v.y * v.y};
      };
      const auto f0 = flux(i);
      Vec2 gxx = w.gradient[0] * f0[0], gxy = w.gradient[0] * f0[1], gyy = w.gradient[0] * f0[2];
      Vec2 lap = s.u[i] * w.laplacian[0];
      for (int k = 0; k < st.size(); ++k) {
        const int j = st.neighbors[k].node;
        const auto fj = flux(j);
        gxx += w.gradient[k + 1] * fj[0];
        gxy += w.gradient[k + 1] * fj[1];
        gyy += w.gradient[k + 1] * fj[2];
        lap += s.u[j] * w.laplacian[k + 1];
      }
      const Vec2 adv{gxx.x + gxy.y, gxy.x + gyy.y};
      const Vec2 rate = -adv + lap * nu + detail::source_term(s.t, prm_, forcing_);
      u_star[i] = (s.u[i] + rate * prm_.dt) * detail::damping_factor(disc, i, prm_.dt, forcing_);
    }
    apply_velocity_bc(disc, u_star, t_next, forcing_);

    const double scale = prm_.rho / prm_.dt;
    for (int r = 0; r < sys_.size(); ++r) {
      const int i = sys_.node_of[r];
      sys_.rhs[r] = disc.nodes.fluid(i) ? scale * nodal_divergence(disc, ops, u_star, i) : 0.0;
    }
    StepDiagnostics diag;
    diag.solve = solve_poisson(sys_, s.p, prm_.solver);
    if (!diag.solve.converged) throw PoissonFailure("pressure solve did not converge", diag.solve);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < disc.size(); ++i) {
      if (disc.nodes.fluid(i)) u_star[i] -= nodal_gradient(disc, ops, s.p, i) * (prm_.dt / prm_.rho);
    }
    apply_outlet_velocity(disc, ops, u_star);
    for (int i = 0; i < disc.size(); ++i) {
      if (disc.nodes.fluid(i)) {
        diag.max_divergence = std::max(diag.max_divergence, std::abs(nodal_divergence(disc, ops, u_star, i)));
      }
    }
    const auto r = poisson_residual(sys_, s.p);
    for (double v : r) diag.residual_inf = std::max(diag.residual_inf, std::abs(v));
    diag.max_rate = max_rate(disc, u_star, u_old, prm_.dt);

    s.u = std::move(u_star);
    s.t = t_next;
    ++s.step;
    return diag;
  }

  const Discretization* disc_;
  const OperatorCache* ops_;
  FluidParams prm_;
  Forcing forcing_;
  Scheme scheme_;
  PoissonSystem sys_;
};

inline bool is_steady(const StepDiagnostics& d, double u_ref, double l_ref) {
  return d.max_rate < 1e-3 * u_ref / l_ref;
}

inline double advective_courant(double u_ref, double dt, double l0) { return u_ref * dt / l0; }
inline double diffusion_number(const FluidParams& prm, double l0) {
  return prm.eta * prm.dt / (prm.rho * l0 * l0);
}

/// Force on an obstacle split by origin, with the matching coefficients
/// F_x / (rho U^2 D / 2).
struct DragReport {
  Vec2 pressure_force;
  Vec2 viscous_force;
  Vec2 damping_force;
  double pressure = 0.0;
  double viscous = 0.0;
  double damping = 0.0;
  double total = 0.0;
};

namespace detail {

inline DragReport finish_drag(DragReport d, double rho, double u_ref, double diameter) {
  const double q = 0.5 * rho * u_ref * u_ref * diameter;
  d.pressure = d.pressure_force.x / q;
  d.viscous = d.viscous_force.x / q;
  d.damping = d.damping_force.x / q;
  d.total = d.pressure + d.viscous + d.damping;
  return d;
}

}  // namespace detail

/// Surface integral over the nodes tagged as obstacle boundary. Boundary
/// pressure is a linear least-squares extrapolation from fluid neighbours;
/// the velocity gradient solves (u_j - u_b) = G (x_j - x_b) in least squares.
inline DragReport drag_fitted(const Discretization& disc, const FlowState& s, double eta,
                              double rho, double u_ref, double diameter) {
  std::vector<int> body;
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.boundary(i) && disc.nodes.condition(i).kind == BoundaryKind::obstacle) {
      body.push_back(i);
    }
  }
  if (body.empty()) throw ConfigError("drag requested without an obstacle");
  const double ds = std::numbers::pi * diameter / static_cast<double>(body.size());
  DragReport d;
  for (int b : body) {
    Eigen::Matrix3d mp = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rp = Eigen::Vector3d::Zero();
    Eigen::Matrix2d mg = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d rg = Eigen::Matrix2d::Zero();  // columns: u_x, u_y targets
    // Fluid samples from the stencil, widened to the second ring when the
    // body hides most of it.
    std::vector<std::pair<int, Vec2>> samples;
    auto gather = [&](int node, Vec2 base) {
      for (const auto& nb : disc.stencils[node].neighbors) {
        if (!disc.nodes.fluid(nb.node)) continue;
        const bool seen = std::any_of(samples.begin(), samples.end(), [&](const auto& q) { return q.first == nb.node; });
        if (!seen) samples.push_back({nb.node, base + nb.offset});
      }
    };
    gather(b, {});
    if (samples.size() < 3) {
      for (const auto& nb : disc.stencils[b].neighbors) gather(nb.node, nb.offset);
    }
    if (samples.size() < 3) throw DegenerateStencilError(b, "obstacle node has fewer than 3 fluid samples");
    for (const auto& [j, off] : samples) {
      const Eigen::Vector2d dx(off.x, off.y);
      const Eigen::Vector3d row(1.0, dx.x(), dx.y());
      mp += row * row.transpose();
      rp += row * s.p[j];
      const Vec2 du = s.u[j] - s.u[b];
      mg += dx * dx.transpose();
      rg.col(0) += dx * du.x;
      rg.col(1) += dx * du.y;
    }
    const double pb = mp.ldlt().solve(rp)(0);
    const Eigen::Matrix2d gt = mg.ldlt().solve(rg);  // gt(k, c) = d u_c / d x_k
    const Eigen::Matrix2d grad = gt.transpose();     // grad(c, k) = d u_c / d x_k
    const Eigen::Matrix2d tau = eta * (grad + grad.transpose());
    const Vec2 n = -disc.nodes.normal[b];  // out of the body, into the fluid
    d.pressure_force += n * (-pb * ds);
    const Eigen::Vector2d tn = tau * Eigen::Vector2d(n.x, n.y);
    d.viscous_force += Vec2{tn.x(), tn.y()} * ds;
  }
  return detail::finish_drag(d, rho, u_ref, diameter);
}

/// Momentum removed by the damping region: F = sum alpha rho u l0^2.
inline DragReport drag_damping(const Discretization& disc, const FlowState& s,
                               const DampingSpec& spec, double rho, double u_ref, double diameter) {
  DragReport d;
  const double area = disc.mesh.l0 * disc.mesh.l0;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    d.damping_force += s.u[i] * (damping_coefficient(disc.nodes.position[i], spec) * rho * area);
  }
  return detail::finish_drag(d, rho, u_ref, diameter);
}

}  // namespace mcd
