#pragma once

/// @file operators.hpp
/// Field containers and discrete operators built from cached derivative
/// weights: staggered divergence and velocity recovery, radial vector
/// Laplacians, pressure Poisson assembly and projection corrections, plus
/// the nodal (collocated) counterparts.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcd/geometry.hpp"
#include "mcd/linalg.hpp"
#include "mcd/mls.hpp"

namespace mcd {

using ScalarField = std::vector<double>;
using VectorField = std::vector<Vec2>;

/// One radial value per undirected edge, stored as seen from the lower node
/// id. Access through a stencil slot applies the orientation sign, so
/// U(i,j) = -U(j,i) holds by construction.
class StaggeredField {
 public:
  StaggeredField() = default;
  explicit StaggeredField(int edges) : values_(edges, 0.0) {}

  double get(const Neighbor& nb) const { return nb.sign * values_[nb.edge]; }
  void set(const Neighbor& nb, double v) { values_[nb.edge] = nb.sign * v; }

  int size() const { return static_cast<int>(values_.size()); }
  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Samples U_{i->ij} = 2 (x_ij - x_i) . u(x_ij) of an analytic field on every edge.
template <class VelocityFn>
StaggeredField sample_staggered(const Discretization& disc, VelocityFn&& u) {
  StaggeredField f(static_cast<int>(disc.edges.size()));
  for (int e = 0; e < static_cast<int>(disc.edges.size()); ++e) {
    const Edge& ed = disc.edges[e];
    const Vec2 mid = disc.nodes.position[ed.a] + ed.offset * 0.5;
    f.raw()[e] = dot(ed.offset, u(mid));
  }
  return f;
}

struct FitSettings {
  double radius_factor = 3.1;  // r_e / l0
  // Gaussian taper / l0 of the nodal fit. Untapered, the quadratic fit on a
  // uniform 3x3 block maps a checkerboard to -0.40 of itself at edge midpoints
  // (upwinded advection then amplifies it) and its Laplacian has negative edge
  // weights. Tapered at l0 the response is +0.32 and all neighbour weights are
  // positive (corners 0.37, edges 0.27).
  double nodal_taper_factor = 1.0;
};

/// Cached linear functionals of one fluid node.
struct NodeOperators {
  // Radial fit with every face sampled (advection, diffusion, acoustics-free use).
  DerivativeWeights radial;
  // Radial fit with boundary-face rows; equals `radial` when no face is a boundary face.
  DerivativeWeights augmented;
  // Nodal fit; sample 0 is the centre, sample k+1 neighbour k.
  DerivativeWeights nodal;
  LeastSquaresFit nodal_fit;
  // interp[k * (K+1) + s]: weight of nodal sample s in u^h_i(x_ij) for slot k.
  std::vector<double> interp;
};

/// Per-node derivative weights for a discretization; rebuilt only when the
/// geometry changes.
class OperatorCache {
 public:
  OperatorCache() = default;

  static OperatorCache build(const Discretization& disc, const FitSettings& settings = {}) {
    OperatorCache c;
    const int n = disc.size();
    c.ops_.resize(n);
    c.slot_offset_.resize(n + 1, 0);
    for (int i = 0; i < n; ++i) c.slot_offset_[i + 1] = c.slot_offset_[i] + disc.stencils[i].size();
    c.partner_.assign(n, -1);
    const BasisSpec basis{disc.mesh.l0};
    const WeightSpec weight{settings.radius_factor * disc.mesh.l0};
    const WeightSpec nodal_weight{weight.radius, settings.nodal_taper_factor * disc.mesh.l0};
    for (int i = 0; i < n; ++i) {
      const auto& st = disc.stencils[i];
      if (disc.nodes.boundary(i)) c.partner_[i] = choose_partner(disc, i);
      if (!disc.nodes.fluid(i)) continue;
      NodeOperators& op = c.ops_[i];
      op.radial = fit_radial_mls(st, disc.nodes, basis, weight, false).derivative_weights();
      op.augmented = st.has_boundary_face()
                         ? fit_radial_mls(st, disc.nodes, basis, weight, true).derivative_weights()
                         : op.radial;
      op.nodal_fit = fit_nodal_mls(st, basis, nodal_weight);
      op.nodal = op.nodal_fit.derivative_weights();
      const int k1 = st.size() + 1;
      op.interp.resize(static_cast<std::size_t>(st.size()) * k1);
      for (int k = 0; k < st.size(); ++k) {
        const auto w = op.nodal_fit.value_weights_at(st.neighbors[k].midpoint_offset());
        std::copy(w.begin(), w.end(), op.interp.begin() + static_cast<std::ptrdiff_t>(k) * k1);
      }
    }
    return c;
  }

  const NodeOperators& at(int i) const { return ops_[i]; }
  int slot(int node, int k) const { return slot_offset_[node] + k; }
  int slot_count() const { return slot_offset_.back(); }
  /// Fluid neighbour best aligned with the inward normal of boundary node i (-1 if none).
  int partner(int i) const { return partner_[i]; }

 private:
  static int choose_partner(const Discretization& disc, int i) {
    const Vec2 inward = -disc.nodes.normal[i];
    int best = -1;
    double best_cos = -2.0;
    for (int pass = 0; pass < 2 && best < 0; ++pass) {
      for (const auto& nb : disc.stencils[i].neighbors) {
        if (pass == 0 && !disc.nodes.fluid(nb.node)) continue;
        const double c = dot(nb.offset, inward) / norm(nb.offset);
        if (c > best_cos) {
          best_cos = c;
          best = nb.node;
        }
      }
    }
    return best;
  }

  std::vector<NodeOperators> ops_;
  std::vector<int> slot_offset_;
  std::vector<int> partner_;
};

template <class T>
using SlotField = std::vector<T>;

/// u^h_i(x_ij) for every directed slot (i, k): the nodal MLS interpolant
/// at fluid nodes, the stored nodal value at all other nodes.
inline SlotField<Vec2> interpolate_at_midpoints(const Discretization& disc,
                                                const OperatorCache& ops, const VectorField& u) {
  SlotField<Vec2> out(ops.slot_count());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    const auto& st = disc.stencils[i];
    if (!disc.nodes.fluid(i)) {
      for (int k = 0; k < st.size(); ++k) out[ops.slot(i, k)] = u[i];
      continue;
    }
    const auto& w = ops.at(i).interp;
    const int k1 = st.size() + 1;
    for (int k = 0; k < st.size(); ++k) {
      const double* wk = w.data() + static_cast<std::ptrdiff_t>(k) * k1;
      Vec2 s = u[i] * wk[0];
      for (int m = 0; m < st.size(); ++m) s += u[st.neighbors[m].node] * wk[m + 1];
      out[ops.slot(i, k)] = s;
    }
  }
  return out;
}

/// Evaluates the nodal MLS vector polynomial of fluid node i at x_i + rel.
inline Vec2 interpolate_velocity(const Discretization& disc, const OperatorCache& ops,
                                 const VectorField& u, int i, const Vec2& rel) {
  if (!disc.nodes.fluid(i)) return u[i];
  const auto w = ops.at(i).nodal_fit.value_weights_at(rel);
  Vec2 s = u[i] * w[0];
  const auto& st = disc.stencils[i];
  for (int m = 0; m < st.size(); ++m) s += u[st.neighbors[m].node] * w[m + 1];
  return s;
}

/// q_j = n_j . u_j at boundary node j.
inline double boundary_flux(const Discretization& disc, const VectorField& u, int j) {
  return dot(disc.nodes.normal[j], u[j]);
}

/// div_i = (1/4) sum g_ij U(i,j); boundary faces contribute g 2 q_j with q_j
/// taken from the nodal velocity held at the boundary node.
inline ScalarField staggered_divergence(const Discretization& disc, const OperatorCache& ops,
                                        const StaggeredField& U, const VectorField& u_boundary) {
  ScalarField div(disc.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto& st = disc.stencils[i];
    const auto& g = ops.at(i).augmented.laplacian;
    double s = 0.0;
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      const double t = nb.face == FaceClass::boundary
                           ? 2.0 * boundary_flux(disc, u_boundary, nb.node)
                           : U.get(nb);
      s += g[k] * t;
    }
    div[i] = 0.25 * s;
  }
  return div;
}

/// u_i = (1/2) sum d_ij U(i,j) with the same boundary-face convention.
inline VectorField staggered_to_nodal_velocity(const Discretization& disc, const OperatorCache& ops,
                                               const StaggeredField& U,
                                               const VectorField& u_boundary) {
  VectorField out(disc.size());
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) {
      out[i] = u_boundary.empty() ? Vec2{} : u_boundary[i];
      continue;
    }
    const auto& st = disc.stencils[i];
    const auto& d = ops.at(i).augmented.gradient;
    Vec2 s;
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      const double t = nb.face == FaceClass::boundary
                           ? 2.0 * boundary_flux(disc, u_boundary, nb.node)
                           : U.get(nb);
      s += d[k] * t;
    }
    out[i] = s * 0.5;
  }
  return out;
}

/// (1/4) sum g_ij sample_ij componentwise, using the all-faces radial fit.
inline VectorField vector_radial_laplacian(const Discretization& disc, const OperatorCache& ops,
                                           const SlotField<Vec2>& samples) {
  VectorField out(disc.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto& st = disc.stencils[i];
    const auto& g = ops.at(i).radial.laplacian;
    Vec2 s;
    for (int k = 0; k < st.size(); ++k) s += samples[ops.slot(i, k)] * g[k];
    out[i] = s * 0.25;
  }
  return out;
}

/// D_{i->ij} = u_j - u_i for every slot.
inline SlotField<Vec2> difference_samples(const Discretization& disc, const OperatorCache& ops,
                                          const VectorField& u) {
  SlotField<Vec2> out(ops.slot_count());
  for (int i = 0; i < disc.size(); ++i) {
    const auto& st = disc.stencils[i];
    for (int k = 0; k < st.size(); ++k) out[ops.slot(i, k)] = u[st.neighbors[k].node] - u[i];
  }
  return out;
}

/// Sparse pressure system. Unknowns are fluid and outlet nodes. A fluid row
/// is sum_j g_ij (p_j - p_i) over interior faces (faces into
/// prescribed-velocity nodes are dropped); outlet rows pin p = 0.
struct PoissonSystem {
  SparseMatrix matrix;
  std::vector<int> unknown_of;  // node -> row, -1 when not an unknown
  std::vector<int> node_of;     // row -> node
  bool zero_mean = false;
  ScalarField rhs;
  std::vector<double> residual_history;

  int size() const { return matrix.rows(); }
};

inline bool has_pressure_dirichlet(const NodeSet& nodes) {
  for (int i = 0; i < nodes.size(); ++i) {
    if (nodes.outlet(i)) return true;
  }
  return false;
}

inline PoissonSystem assemble_poisson(const Discretization& disc, const OperatorCache& ops,
                                      bool zero_mean) {
  const bool dirichlet = has_pressure_dirichlet(disc.nodes);
  if (!dirichlet && !zero_mean) {
    throw ConfigError("pressure system without Dirichlet rows needs the zero-mean constraint");
  }
  PoissonSystem sys;
  sys.zero_mean = zero_mean && !dirichlet;
  sys.unknown_of.assign(disc.size(), -1);
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.fluid(i) || disc.nodes.outlet(i)) {
      sys.unknown_of[i] = static_cast<int>(sys.node_of.size());
      sys.node_of.push_back(i);
    }
  }
  const int n = static_cast<int>(sys.node_of.size());
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int r = 0; r < n; ++r) {
    const int i = sys.node_of[r];
    if (disc.nodes.outlet(i)) {
      rows[r] = {{r, 1.0}};
      continue;
    }
    const auto& st = disc.stencils[i];
    const auto& g = ops.at(i).augmented.laplacian;
    double diag = 0.0;
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      if (nb.face == FaceClass::boundary) continue;
      rows[r].push_back({sys.unknown_of[nb.node], g[k]});
      diag -= g[k];
    }
    rows[r].push_back({r, diag});
  }
  sys.matrix = SparseMatrix::from_rows(n, std::move(rows));
  sys.rhs.assign(n, 0.0);
  return sys;
}

/// rhs_i = (rho/dt) sum g_ij U*(i,j) (= 4 (rho/dt) div*_i); outlet rows 0.
inline void set_poisson_rhs(PoissonSystem& sys, const Discretization& disc, const OperatorCache& ops,
                            const StaggeredField& U_star, const VectorField& u_boundary, double rho,
                            double dt) {
  const auto div = staggered_divergence(disc, ops, U_star, u_boundary);
  for (int r = 0; r < sys.size(); ++r) {
    const int i = sys.node_of[r];
    sys.rhs[r] = disc.nodes.outlet(i) ? 0.0 : 4.0 * rho / dt * div[i];
  }
}

/// b - A p on the unknowns (no bordering term).
inline ScalarField poisson_residual(const PoissonSystem& sys, const ScalarField& p) {
  ScalarField x(sys.size());
  for (int r = 0; r < sys.size(); ++r) x[r] = p[sys.node_of[r]];
  auto ax = spmv(sys.matrix, x);
  for (int r = 0; r < sys.size(); ++r) ax[r] = sys.rhs[r] - ax[r];
  return ax;
}

/// Solves the system, warm-started from `p` (nodal), and writes the result back.
inline SolveReport solve_poisson(PoissonSystem& sys, ScalarField& p, const SolveOptions& opt) {
  const int n = sys.size();
  std::vector<double> x(n);
  for (int r = 0; r < n; ++r) x[r] = p[sys.node_of[r]];
  SolveReport rep;
  if (sys.zero_mean) {
    auto sol = solve_zero_mean(sys.matrix, sys.rhs, x, opt);
    x = std::move(sol.p);
    rep = std::move(sol.report);
  } else {
    rep = bicgstab(sys.matrix, sys.rhs, x, opt);
  }
  for (int r = 0; r < n; ++r) p[sys.node_of[r]] = x[r];
  sys.residual_history.push_back(rep.final_residual());
  return rep;
}

/// Copies each prescribed-velocity node's pressure from its partner node.
inline void fill_boundary_pressure(const Discretization& disc, const OperatorCache& ops,
                                   ScalarField& p) {
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.velocity_dirichlet(i)) continue;
    const int j = ops.partner(i);
    p[i] = j >= 0 ? p[j] : 0.0;
  }
}

/// U^{n+1} = U* - (dt/rho)(p_j - p_i) on faces not touching a
/// prescribed-velocity node, and u^{n+1}_i = u*_i - dt/(2 rho) sum d_ij (p_j - p_i)
/// over the same faces.
inline void projection_correct(const Discretization& disc, const OperatorCache& ops,
                               StaggeredField& U, VectorField& u, const ScalarField& p, double dt,
                               double rho) {
  const double c = dt / rho;
  for (int e = 0; e < static_cast<int>(disc.edges.size()); ++e) {
    const Edge& ed = disc.edges[e];
    if (disc.nodes.velocity_dirichlet(ed.a) || disc.nodes.velocity_dirichlet(ed.b)) continue;
    U.raw()[e] -= c * (p[ed.b] - p[ed.a]);
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto& st = disc.stencils[i];
    const auto& d = ops.at(i).augmented.gradient;
    Vec2 grad;
    for (int k = 0; k < st.size(); ++k) {
      const auto& nb = st.neighbors[k];
      if (nb.face == FaceClass::boundary) continue;
      grad += d[k] * (p[nb.node] - p[i]);
    }
    u[i] -= grad * (0.5 * c);
  }
}

// ---------------------------------------------------------------------------
// Nodal (collocated) operators.

inline Vec2 nodal_gradient(const Discretization& disc, const OperatorCache& ops,
                           const ScalarField& f, int i) {
  const auto& w = ops.at(i).nodal.gradient;
  const auto& st = disc.stencils[i];
  Vec2 s = w[0] * f[i];
  for (int k = 0; k < st.size(); ++k) s += w[k + 1] * f[st.neighbors[k].node];
  return s;
}

inline double nodal_laplacian(const Discretization& disc, const OperatorCache& ops,
                              const ScalarField& f, int i) {
  const auto& w = ops.at(i).nodal.laplacian;
  const auto& st = disc.stencils[i];
  double s = w[0] * f[i];
  for (int k = 0; k < st.size(); ++k) s += w[k + 1] * f[st.neighbors[k].node];
  return s;
}

/// Velocity gradient tensor rows: {grad u_x, grad u_y}.
inline std::pair<Vec2, Vec2> nodal_velocity_gradient(const Discretization& disc,
                                                     const OperatorCache& ops,
                                                     const VectorField& u, int i) {
  const auto& w = ops.at(i).nodal.gradient;
  const auto& st = disc.stencils[i];
  Vec2 gx = w[0] * u[i].x;
  Vec2 gy = w[0] * u[i].y;
  for (int k = 0; k < st.size(); ++k) {
    const Vec2& v = u[st.neighbors[k].node];
    gx += w[k + 1] * v.x;
    gy += w[k + 1] * v.y;
  }
  return {gx, gy};
}

inline double nodal_divergence(const Discretization& disc, const OperatorCache& ops,
                               const VectorField& u, int i) {
  const auto [gx, gy] = nodal_velocity_gradient(disc, ops, u, i);
  return gx.x + gy.y;
}

/// dv/dx - du/dy at fluid nodes (0 elsewhere).
inline ScalarField vorticity(const Discretization& disc, const OperatorCache& ops,
                             const VectorField& u) {
  ScalarField w(disc.size(), 0.0);
  for (int i = 0; i < disc.size(); ++i) {
    if (!disc.nodes.fluid(i)) continue;
    const auto [gx, gy] = nodal_velocity_gradient(disc, ops, u, i);
    w[i] = gy.x - gx.y;
  }
  return w;
}

/// Nodal Poisson system for the collocated baseline: fluid rows apply the
/// nodal MLS Laplacian, prescribed-velocity nodes copy their partner (zero
/// normal gradient), outlet rows pin p = 0.
inline PoissonSystem assemble_nodal_poisson(const Discretization& disc, const OperatorCache& ops,
                                            bool zero_mean) {
  const bool dirichlet = has_pressure_dirichlet(disc.nodes);
  if (!dirichlet && !zero_mean) {
    throw ConfigError("pressure system without Dirichlet rows needs the zero-mean constraint");
  }
  PoissonSystem sys;
  sys.zero_mean = zero_mean && !dirichlet;
  sys.unknown_of.assign(disc.size(), -1);
  for (int i = 0; i < disc.size(); ++i) {
    if (disc.nodes.active(i)) {
      sys.unknown_of[i] = static_cast<int>(sys.node_of.size());
      sys.node_of.push_back(i);
    }
  }
  const int n = static_cast<int>(sys.node_of.size());
  // Constraint rows scaled and signed like a uniform Laplacian diagonal;
  // unit rows stall Bi-CGSTAB.
  const double row_scale = -2.4 / (disc.mesh.l0 * disc.mesh.l0);
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int r = 0; r < n; ++r) {
    const int i = sys.node_of[r];
    if (disc.nodes.outlet(i)) {
      rows[r] = {{r, row_scale}};
    } else if (disc.nodes.boundary(i)) {
      rows[r] = {{r, row_scale}};
      const int j = ops.partner(i);
      if (j >= 0) rows[r].push_back({sys.unknown_of[j], -row_scale});
    } else {
      const auto& st = disc.stencils[i];
      const auto& w = ops.at(i).nodal.laplacian;
      rows[r].push_back({r, w[0]});
      for (int k = 0; k < st.size(); ++k) rows[r].push_back({sys.unknown_of[st.neighbors[k].node], w[k + 1]});
    }
  }
  sys.matrix = SparseMatrix::from_rows(n, std::move(rows));
  sys.rhs.assign(n, 0.0);
  return sys;
}

}  // namespace mcd
