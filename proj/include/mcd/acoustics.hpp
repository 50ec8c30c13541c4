#pragma once

/// @file acoustics.hpp
/// Explicit 2D linear acoustics: staggered (nodal p, edge radial velocity)
/// and collocated (nodal p and u) schemes with an optional velocity damping
/// region, plus a Yee-grid finite-difference reference solver.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "mcd/operators.hpp"

namespace mcd {

/// Cosine-bump damping region alpha0/2 (1 + cos(pi r / R)) for r < R.
struct DampingSpec {
  double alpha0 = 0.0;
  double radius = 1.0;
  Vec2 center;
};

inline double damping_coefficient(const Vec2& x, const DampingSpec& spec) {
  const double r = norm(x - spec.center);
  if (r >= spec.radius) return 0.0;
  return 0.5 * spec.alpha0 * (1.0 + std::cos(std::numbers::pi * r / spec.radius));
}

inline double damping_coefficient(const Vec2& x, const std::optional<DampingSpec>& spec) {
  return spec ? damping_coefficient(x, *spec) : 0.0;
}

struct AcousticParams {
  double rho = 1050.0;
  double c = 1000.0;
};

enum class Scheme { staggered, collocated };

struct AcousticsState {
  ScalarField p;
  StaggeredField U;  // staggered scheme
  VectorField u;     // collocated scheme (and recovered nodal velocity for output)
  double t = 0.0;
  int step = 0;
};

/// Raised-cosine pulse 1/2 (1 + cos(pi r / R)) for r < R.
inline double cosine_pulse(const Vec2& x, const Vec2& center, double radius) {
  const double r = norm(x - center);
  return r < radius ? 0.5 * (1.0 + std::cos(std::numbers::pi * r / radius)) : 0.0;
}

inline AcousticsState make_acoustics_state(const Discretization& disc, const ScalarField& p0) {
  AcousticsState s;
  s.p = p0;
  s.U = StaggeredField(static_cast<int>(disc.edges.size()));
  s.u.assign(disc.size(), Vec2{});
  return s;
}

/// p^{n+1} = p^n - dt rho c^2 / 4 sum g U^n, then
/// U^{n+1} = exp(-alpha(x_ij) dt) (U^n - dt/rho (p_j - p_i)^{n+1}).
/// Faces into prescribed-velocity nodes carry the (zero) wall flux.
inline void acoustics_step_staggered(const Discretization& disc, const OperatorCache& ops,
                                     AcousticsState& s, const AcousticParams& prm, double dt,
                                     const std::optional<DampingSpec>& damping = std::nullopt) {
  const auto div = staggered_divergence(disc, ops, s.U, s.u);
  const double k = dt * prm.rho * prm.c * prm.c;
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.fluid(i)) s.p[i] -= k * div[i];
  }
  fill_boundary_pressure(disc, ops, s.p);
  const double c = dt / prm.rho;
#pragma omp parallel for schedule(static)
  for (int e = 0; e < static_cast<int>(disc.edges.size()); ++e) {
    const Edge& ed = disc.edges[e];
    if (disc.nodes.velocity_dirichlet(ed.a) || disc.nodes.velocity_dirichlet(ed.b)) continue;
    double v = s.U.raw()[e] - c * (s.p[ed.b] - s.p[ed.a]);
    if (damping) {
      const Vec2 mid = disc.nodes.position[ed.a] + ed.offset * 0.5;
      v *= std::exp(-damping_coefficient(mid, *damping) * dt);
    }
    s.U.raw()[e] = v;
  }
  s.t += dt;
  ++s.step;
}

/// Same ordering with nodal MLS divergence and gradient.
inline void acoustics_step_collocated(const Discretization& disc, const OperatorCache& ops,
                                      AcousticsState& s, const AcousticParams& prm, double dt,
                                      const std::optional<DampingSpec>& damping = std::nullopt) {
  const double k = dt * prm.rho * prm.c * prm.c;
  ScalarField p_new = s.p;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.fluid(i)) p_new[i] = s.p[i] - k * nodal_divergence(disc, ops, s.u, i);
  }
  fill_boundary_pressure(disc, ops, p_new);
  s.p = std::move(p_new);
  const double c = dt / prm.rho;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    Vec2 v = s.u[i] - nodal_gradient(disc, ops, s.p, i) * c;
    if (damping) v *= std::exp(-damping_coefficient(disc.nodes.position[i], *damping) * dt);
    s.u[i] = v;
  }
  s.t += dt;
  ++s.step;
}

/// Courant number c dt / l0; values above 1 are worth a warning.
inline double acoustic_courant(const AcousticParams& prm, double dt, double l0) {
  return prm.c * dt / l0;
}

/// Mean over fluid nodes of |f_i - mean of f over active neighbours|,
/// normalised by the field range. Zero for constant fields.
inline double checkerboard_metric(const Discretization& disc, const ScalarField& f) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.active(i)) continue;
    lo = std::min(lo, f[i]);
    hi = std::max(hi, f[i]);
  }
  const double range = hi - lo + 1e-300;
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto& st = disc.stencils[i];
    if (st.neighbors.empty()) continue;
    double m = 0.0;
    for (const auto& nb : st.neighbors) m += f[nb.node];
    m /= st.size();
    sum += std::abs(f[i] - m);
    ++count;
  }
  return count > 0 ? sum / count / range : 0.0;
}

/// Staggered-grid leapfrog solution of the same equations on [lo, lo + L]^2
/// with rigid walls. Pressure lives at cell centres, u at x-faces and v at
/// y-faces; velocities sit half a step behind pressure.
class FdtdSolver {
 public:
  FdtdSolver(Vec2 lo, double length, int cells, const AcousticParams& prm)
      : lo_(lo), n_(cells), h_(length / cells), prm_(prm),
        p_(static_cast<std::size_t>(cells) * cells, 0.0),
        u_(static_cast<std::size_t>(cells + 1) * cells, 0.0),
        v_(static_cast<std::size_t>(cells) * (cells + 1), 0.0) {}

  int cells() const { return n_; }
  double spacing() const { return h_; }
  double time() const { return t_; }
  Vec2 cell_center(int ix, int iy) const { return {lo_.x + (ix + 0.5) * h_, lo_.y + (iy + 0.5) * h_}; }
  double& p(int ix, int iy) { return p_[idx(ix, iy)]; }
  double p(int ix, int iy) const { return p_[idx(ix, iy)]; }

  template <class Fn>
  void set_pressure(Fn&& fn) {
    for (int iy = 0; iy < n_; ++iy) {
      for (int ix = 0; ix < n_; ++ix) p(ix, iy) = fn(cell_center(ix, iy));
    }
  }

  /// Advances to `t_end` with a step no larger than courant * h / c. The
  /// first call starts from rest by placing velocities at -dt/2.
  void run_to(double t_end, double courant) {
    const double remaining = t_end - t_;
    if (remaining <= 0.0) return;
    const int steps = static_cast<int>(std::ceil(remaining / (courant * h_ / prm_.c) - 1e-12));
    const double dt = remaining / steps;
    if (!started_) {
      velocity_update(-0.5 * dt);
      started_ = true;
    }
    for (int s = 0; s < steps; ++s) step(dt);
  }

  void step(double dt) {
    velocity_update(dt);
    const double k = dt * prm_.rho * prm_.c * prm_.c / h_;
    for (int iy = 0; iy < n_; ++iy) {
      for (int ix = 0; ix < n_; ++ix) {
        const double div = u_[uidx(ix + 1, iy)] - u_[uidx(ix, iy)] + v_[vidx(ix, iy + 1)] -
                           v_[vidx(ix, iy)];
        p(ix, iy) -= k * div;
      }
    }
    t_ += dt;
  }

  /// Discrete energy with velocities taken at the current half level.
  double energy() const {
    double e = 0.0;
    const double a = h_ * h_;
    for (double pv : p_) e += pv * pv / (2.0 * prm_.rho * prm_.c * prm_.c) * a;
    for (double uv : u_) e += 0.5 * prm_.rho * uv * uv * a;
    for (double vv : v_) e += 0.5 * prm_.rho * vv * vv * a;
    return e;
  }

  /// Bilinear interpolation of cell-centred pressure (clamped at the walls).
  double sample_pressure(const Vec2& x) const {
    const double fx = std::clamp((x.x - lo_.x) / h_ - 0.5, 0.0, n_ - 1.0);
    const double fy = std::clamp((x.y - lo_.y) / h_ - 0.5, 0.0, n_ - 1.0);
    const int ix = std::min(static_cast<int>(fx), n_ - 2);
    const int iy = std::min(static_cast<int>(fy), n_ - 2);
    const double tx = fx - ix;
    const double ty = fy - iy;
    return (1 - tx) * (1 - ty) * p(ix, iy) + tx * (1 - ty) * p(ix + 1, iy) +
           (1 - tx) * ty * p(ix, iy + 1) + tx * ty * p(ix + 1, iy + 1);
  }

 private:
  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * n_ + ix; }
  std::size_t uidx(int fx, int iy) const { return static_cast<std::size_t>(iy) * (n_ + 1) + fx; }
  std::size_t vidx(int ix, int fy) const { return static_cast<std::size_t>(fy) * n_ + ix; }

  void velocity_update(double dt) {
    const double k = dt / (prm_.rho * h_);
    for (int iy = 0; iy < n_; ++iy) {
      for (int fx = 1; fx < n_; ++fx) u_[uidx(fx, iy)] -= k * (p(fx, iy) - p(fx - 1, iy));
    }
    for (int fy = 1; fy < n_; ++fy) {
      for (int ix = 0; ix < n_; ++ix) v_[vidx(ix, fy)] -= k * (p(ix, fy) - p(ix, fy - 1));
    }
  }

  Vec2 lo_;
  int n_;
  double h_;
  AcousticParams prm_;
  std::vector<double> p_, u_, v_;
  double t_ = 0.0;
  bool started_ = false;
};

/// Pressure of the reference solver at `probes` after `t_end`.
inline std::vector<double> fdtd_reference(Vec2 lo, double length, int cells,
                                          const AcousticParams& prm, const Vec2& pulse_center,
                                          double pulse_radius, double t_end,
                                          const std::vector<Vec2>& probes, double courant = 0.2) {
  FdtdSolver f(lo, length, cells, prm);
  f.set_pressure([&](const Vec2& x) { return cosine_pulse(x, pulse_center, pulse_radius); });
  f.run_to(t_end, courant);
  std::vector<double> out;
  out.reserve(probes.size());
  for (const auto& x : probes) out.push_back(f.sample_pressure(x));
  return out;
}

}  // namespace mcd
