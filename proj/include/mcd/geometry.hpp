#pragma once

/// @file geometry.hpp
/// Background mesh, mesh-constrained discrete points and per-node local
/// primal-dual stencils (3x3 cell blocks, edge midpoints, face classes).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
constexpr bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a fluid node cannot support a quadratic reconstruction.
class DegenerateStencilError : public std::runtime_error {
 public:
  DegenerateStencilError(int node, const std::string& what)
      : std::runtime_error("node " + std::to_string(node) + ": " + what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

struct Rect {
  Vec2 lo;
  Vec2 hi;
};

struct Circle {
  Vec2 center;
  double diameter = 1.0;
  double radius() const { return 0.5 * diameter; }
};

/// Structured cell system that constrains node placement. Cell id is
/// `iy * nx + ix`; node ids coincide with cell ids.
struct BackgroundMesh {
  Vec2 origin;
  double l0 = 1.0;
  int nx = 0;
  int ny = 0;
  bool periodic_x = false;
  bool periodic_y = false;

  int cell_count() const { return nx * ny; }
  int cell_id(int ix, int iy) const { return iy * nx + ix; }
  std::pair<int, int> cell_coords(int cell) const { return {cell % nx, cell / nx}; }
  Vec2 cell_lo(int ix, int iy) const { return {origin.x + ix * l0, origin.y + iy * l0}; }
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * l0, origin.y + (iy + 0.5) * l0};
  }
  Vec2 extent() const { return {nx * l0, ny * l0}; }
  Rect domain() const { return {origin, origin + extent()}; }

  /// Closure test with a small absolute slack.
  bool in_cell(int cell, const Vec2& p, double slack = 1e-12) const {
    auto [ix, iy] = cell_coords(cell);
    const Vec2 lo = cell_lo(ix, iy);
    const double tol = slack * l0;
    return p.x >= lo.x - tol && p.x <= lo.x + l0 + tol && p.y >= lo.y - tol &&
           p.y <= lo.y + l0 + tol;
  }
};

inline BackgroundMesh build_background_mesh(const Rect& domain, double l0, bool periodic_x,
                                            bool periodic_y) {
  if (!(l0 > 0.0)) throw ConfigError("cell width l0 must be positive");
  const double wx = domain.hi.x - domain.lo.x;
  const double wy = domain.hi.y - domain.lo.y;
  if (!(wx > 0.0) || !(wy > 0.0)) throw ConfigError("domain side lengths must be positive");
  auto count = [l0](double w, const char* axis) {
    const double r = w / l0;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * r) {
      throw ConfigError(std::string("domain extent along ") + axis +
                        " is not an integer multiple of l0");
    }
    return static_cast<int>(n);
  };
  BackgroundMesh mesh;
  mesh.origin = domain.lo;
  mesh.l0 = l0;
  mesh.nx = count(wx, "x");
  mesh.ny = count(wy, "y");
  mesh.periodic_x = periodic_x;
  mesh.periodic_y = periodic_y;
  if (mesh.nx < 3 || mesh.ny < 3) throw ConfigError("background mesh needs at least 3x3 cells");
  return mesh;
}

enum class Side : int { left = 0, right = 1, bottom = 2, top = 3 };

enum class BoundaryKind : std::uint8_t { wall, inlet, outlet, obstacle };

/// Boundary data attached to a tag. Velocity-type boundaries (everything but
/// outlet) prescribe `velocity`, plus the frame velocity when
/// `moves_with_frame` is set.
struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::wall;
  Vec2 velocity;
  bool moves_with_frame = false;

  bool prescribes_velocity() const { return kind != BoundaryKind::outlet; }
};

/// Conditions on the four domain sides. A periodic axis must leave both of
/// its sides empty. Corner cells take the tag of the later side in
/// left, right, bottom, top order (so a lid on top owns its corners).
struct BoundarySpec {
  std::array<std::optional<BoundaryCondition>, 4> sides;

  std::optional<BoundaryCondition>& operator[](Side s) { return sides[static_cast<int>(s)]; }
  const std::optional<BoundaryCondition>& operator[](Side s) const {
    return sides[static_cast<int>(s)];
  }
};

enum class NodeKind : std::uint8_t { fluid, boundary, excluded };

struct NodeSet {
  std::vector<Vec2> position;
  std::vector<NodeKind> kind;
  std::vector<int> tag;       // index into `conditions`, -1 for fluid/excluded
  std::vector<Vec2> normal;   // unit normal pointing out of the fluid region
  std::vector<BoundaryCondition> conditions;

  int size() const { return static_cast<int>(position.size()); }
  bool active(int i) const { return kind[i] != NodeKind::excluded; }
  bool fluid(int i) const { return kind[i] == NodeKind::fluid; }
  bool boundary(int i) const { return kind[i] == NodeKind::boundary; }
  const BoundaryCondition& condition(int i) const { return conditions[tag[i]]; }
  bool velocity_dirichlet(int i) const {
    return boundary(i) && condition(i).prescribes_velocity();
  }
  bool outlet(int i) const { return boundary(i) && condition(i).kind == BoundaryKind::outlet; }
  int count(NodeKind k) const {
    return static_cast<int>(std::count(kind.begin(), kind.end(), k));
  }
};

struct Arrangement {
  enum class Kind { uniform, randomized };
  Kind kind = Kind::uniform;
  double alpha_rdm = 0.0;
  std::uint64_t seed = 0;

  static Arrangement uniform() { return {}; }
  static Arrangement randomized(double alpha, std::uint64_t seed) {
    return {Kind::randomized, alpha, seed};
  }
};

namespace detail {

inline void check_mesh_constraint(const BackgroundMesh& mesh, const NodeSet& nodes) {
  for (int i = 0; i < nodes.size(); ++i) {
    if (!mesh.in_cell(i, nodes.position[i])) {
      throw std::logic_error("mesh constraint violated at node " + std::to_string(i));
    }
  }
}

inline Vec2 side_normal(Side s) {
  switch (s) {
    case Side::left: return {-1.0, 0.0};
    case Side::right: return {1.0, 0.0};
    case Side::bottom: return {0.0, -1.0};
    case Side::top: return {0.0, 1.0};
  }
  return {};
}

}  // namespace detail

/// One node per cell. Randomized placement shifts each node from its cell
/// centre by i.i.d. U(-alpha l0/2, alpha l0/2) per axis; the outermost layer
/// of a bounded side is then snapped onto the side line and tagged.
inline NodeSet generate_nodes(const BackgroundMesh& mesh, const Arrangement& arrangement,
                              const BoundarySpec& bc) {
  if (arrangement.kind == Arrangement::Kind::randomized &&
      !(arrangement.alpha_rdm >= 0.0 && arrangement.alpha_rdm < 1.0)) {
    throw ConfigError("alpha_rdm must lie in [0, 1)");
  }
  if (mesh.periodic_x && (bc[Side::left] || bc[Side::right])) {
    throw ConfigError("periodic x axis cannot carry left/right boundary conditions");
  }
  if (mesh.periodic_y && (bc[Side::bottom] || bc[Side::top])) {
    throw ConfigError("periodic y axis cannot carry bottom/top boundary conditions");
  }

  const int n = mesh.cell_count();
  NodeSet nodes;
  nodes.position.resize(n);
  nodes.kind.assign(n, NodeKind::fluid);
  nodes.tag.assign(n, -1);
  nodes.normal.assign(n, Vec2{});

  std::mt19937_64 rng(arrangement.seed);
  const double half = 0.5 * arrangement.alpha_rdm * mesh.l0;
  std::uniform_real_distribution<double> shift(-half, half);
  const bool randomize = arrangement.kind == Arrangement::Kind::randomized && half > 0.0;
  for (int iy = 0; iy < mesh.ny; ++iy) {
    for (int ix = 0; ix < mesh.nx; ++ix) {
      Vec2 p = mesh.cell_center(ix, iy);
      if (randomize) {
        const double dx = shift(rng);
        const double dy = shift(rng);
        p += Vec2{dx, dy};
      }
      nodes.position[mesh.cell_id(ix, iy)] = p;
    }
  }

  const Rect dom = mesh.domain();
  for (int s = 0; s < 4; ++s) {
    const auto& cond = bc.sides[s];
    if (!cond) continue;
    const int tag = static_cast<int>(nodes.conditions.size());
    nodes.conditions.push_back(*cond);
    const Side side = static_cast<Side>(s);
    const Vec2 n = detail::side_normal(side);
    auto mark = [&](int ix, int iy) {
      const int id = mesh.cell_id(ix, iy);
      Vec2& p = nodes.position[id];
      switch (side) {
        case Side::left: p.x = dom.lo.x; break;
        case Side::right: p.x = dom.hi.x; break;
        case Side::bottom: p.y = dom.lo.y; break;
        case Side::top: p.y = dom.hi.y; break;
      }
      // Corner cells already tagged by an earlier side get a diagonal normal.
      if (nodes.kind[id] == NodeKind::boundary) {
        const Vec2 m = nodes.normal[id] + n;
        nodes.normal[id] = m / norm(m);
      } else {
        nodes.normal[id] = n;
      }
      nodes.kind[id] = NodeKind::boundary;
      nodes.tag[id] = tag;
    };
    if (side == Side::left || side == Side::right) {
      const int ix = side == Side::left ? 0 : mesh.nx - 1;
      for (int iy = 0; iy < mesh.ny; ++iy) mark(ix, iy);
    } else {
      const int iy = side == Side::bottom ? 0 : mesh.ny - 1;
      for (int ix = 0; ix < mesh.nx; ++ix) mark(ix, iy);
    }
  }
  detail::check_mesh_constraint(mesh, nodes);
  return nodes;
}

enum class ObstacleMode { fitted, damping };

namespace detail {

/// Points where the circle crosses the boundary of the cell.
inline std::vector<Vec2> circle_cell_crossings(const Circle& c, const Vec2& lo, double l0) {
  std::vector<Vec2> out;
  const double r = c.radius();
  const Vec2 hi = lo + Vec2{l0, l0};
  auto on_vertical = [&](double x) {
    const double dx = x - c.center.x;
    const double disc = r * r - dx * dx;
    if (disc < 0.0) return;
    const double s = std::sqrt(disc);
    for (double y : {c.center.y - s, c.center.y + s}) {
      if (y >= lo.y && y <= hi.y) out.push_back({x, y});
    }
  };
  auto on_horizontal = [&](double y) {
    const double dy = y - c.center.y;
    const double disc = r * r - dy * dy;
    if (disc < 0.0) return;
    const double s = std::sqrt(disc);
    for (double x : {c.center.x - s, c.center.x + s}) {
      if (x >= lo.x && x <= hi.x) out.push_back({x, y});
    }
  };
  on_vertical(lo.x);
  on_vertical(hi.x);
  on_horizontal(lo.y);
  on_horizontal(hi.y);
  return out;
}

}  // namespace detail

/// Represents a circular obstacle. Damping mode leaves the nodes untouched
/// (the obstacle acts through a force field). Fitted mode snaps the node of
/// every cell cut by the circle onto the circle, tags it with `cond`, and
/// excludes cells lying strictly inside.
inline NodeSet place_obstacle_nodes(NodeSet nodes, const BackgroundMesh& mesh, const Circle& circle,
                                    ObstacleMode mode,
                                    BoundaryCondition cond = {BoundaryKind::obstacle, {}, false}) {
  const Rect dom = mesh.domain();
  const double r = circle.radius();
  const double clearance = 2.0 * mesh.l0;
  if (circle.center.x - r < dom.lo.x + clearance || circle.center.x + r > dom.hi.x - clearance ||
      circle.center.y - r < dom.lo.y + clearance || circle.center.y + r > dom.hi.y - clearance) {
    throw ConfigError("obstacle must lie inside the domain with at least 2 l0 clearance");
  }
  if (mode == ObstacleMode::damping) return nodes;

  const int tag = static_cast<int>(nodes.conditions.size());
  nodes.conditions.push_back(cond);
  int cut = 0;
  for (int iy = 0; iy < mesh.ny; ++iy) {
    for (int ix = 0; ix < mesh.nx; ++ix) {
      const int id = mesh.cell_id(ix, iy);
      const Vec2 lo = mesh.cell_lo(ix, iy);
      const Vec2 hi = lo + Vec2{mesh.l0, mesh.l0};
      const Vec2 nearest{std::clamp(circle.center.x, lo.x, hi.x),
                         std::clamp(circle.center.y, lo.y, hi.y)};
      const double dmin = norm(nearest - circle.center);
      double dmax = 0.0;
      for (const Vec2& corner : {lo, hi, Vec2{lo.x, hi.y}, Vec2{hi.x, lo.y}}) {
        dmax = std::max(dmax, norm(corner - circle.center));
      }
      if (dmax < r) {
        nodes.kind[id] = NodeKind::excluded;
        nodes.tag[id] = -1;
        continue;
      }
      if (dmin > r) continue;
      ++cut;
      const Vec2 centre = mesh.cell_center(ix, iy);
      Vec2 radial = centre - circle.center;
      double len = norm(radial);
      if (len == 0.0) {
        radial = {1.0, 0.0};
        len = 1.0;
      }
      Vec2 snapped = circle.center + radial * (r / len);
      if (!mesh.in_cell(id, snapped, 0.0)) {
        auto crossings = detail::circle_cell_crossings(circle, lo, mesh.l0);
        if (crossings.empty()) throw std::logic_error("cut cell without circle crossing");
        snapped = *std::min_element(crossings.begin(), crossings.end(),
                                    [&](const Vec2& a, const Vec2& b) {
                                      return norm(a - centre) < norm(b - centre);
                                    });
      }
      nodes.position[id] = snapped;
      nodes.kind[id] = NodeKind::boundary;
      nodes.tag[id] = tag;
      const Vec2 out = circle.center - snapped;  // leaves the fluid into the solid
      nodes.normal[id] = out / norm(out);
    }
  }
  if (cut < 8) throw ConfigError("obstacle intersects fewer than 8 cells");
  detail::check_mesh_constraint(mesh, nodes);
  return nodes;
}

enum class FaceClass : std::uint8_t { interior, boundary };

struct Neighbor {
  int node = -1;
  Vec2 offset;   // x_j - x_i with periodic images resolved
  FaceClass face = FaceClass::interior;
  int edge = -1;
  double sign = 1.0;   // +1 when the centre is the lower node id of the edge
  int reverse = -1;    // slot of the centre inside the neighbour's stencil

  Vec2 midpoint_offset() const { return offset * 0.5; }
};

/// Local primal-dual grid of one node. Midpoints use theta = 1/2, so a face
/// is shared by both endpoint stencils with x_ij - x_j = -(x_ij - x_i).
struct LocalStencil {
  int center = -1;
  std::vector<Neighbor> neighbors;

  int size() const { return static_cast<int>(neighbors.size()); }
  bool has_boundary_face() const {
    return std::any_of(neighbors.begin(), neighbors.end(),
                       [](const Neighbor& n) { return n.face == FaceClass::boundary; });
  }
};

struct Edge {
  int a = -1;   // lower node id
  int b = -1;
  Vec2 offset;  // x_b - x_a
};

/// Geometry bundle shared by every operator: immutable after construction.
struct Discretization {
  BackgroundMesh mesh;
  NodeSet nodes;
  std::vector<LocalStencil> stencils;
  std::vector<Edge> edges;

  int size() const { return nodes.size(); }
};

inline constexpr int kMinNeighbors = 6;

/// Builds the 3x3 cell-block stencils and the undirected edge table. Every
/// active node gets a stencil; fluid nodes with fewer than six neighbours
/// are rejected.
inline std::vector<LocalStencil> build_local_stencils(const NodeSet& nodes,
                                                      const BackgroundMesh& mesh) {
  const int n = nodes.size();
  std::vector<LocalStencil> out(n);
  const Vec2 ext = mesh.extent();
  for (int i = 0; i < n; ++i) {
    out[i].center = i;
    if (!nodes.active(i)) continue;
    auto [ix, iy] = mesh.cell_coords(i);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        int jx = ix + dx;
        int jy = iy + dy;
        Vec2 shift;
        if (jx < 0 || jx >= mesh.nx) {
          if (!mesh.periodic_x) continue;
          shift.x = jx < 0 ? -ext.x : ext.x;
          jx = (jx + mesh.nx) % mesh.nx;
        }
        if (jy < 0 || jy >= mesh.ny) {
          if (!mesh.periodic_y) continue;
          shift.y = jy < 0 ? -ext.y : ext.y;
          jy = (jy + mesh.ny) % mesh.ny;
        }
        const int j = mesh.cell_id(jx, jy);
        if (!nodes.active(j)) continue;
        Neighbor nb;
        nb.node = j;
        nb.offset = (nodes.position[j] + shift) - nodes.position[i];
        nb.face = nodes.velocity_dirichlet(j) ? FaceClass::boundary : FaceClass::interior;
        out[i].neighbors.push_back(nb);
      }
    }
    if (nodes.fluid(i) && out[i].size() < kMinNeighbors) {
      throw DegenerateStencilError(i, "fluid node has only " + std::to_string(out[i].size()) +
                                          " neighbours (need 6)");
    }
  }
  return out;
}

/// Assigns edge ids, orientation signs and reverse slots. Edges are stored
/// once per unordered pair; only pairs touching at least one fluid node or
/// outlet node carry an edge.
inline std::vector<Edge> build_edges(std::vector<LocalStencil>& stencils, const NodeSet& nodes) {
  std::vector<Edge> edges;
  const int n = static_cast<int>(stencils.size());
  for (int i = 0; i < n; ++i) {
    for (auto& nb : stencils[i].neighbors) {
      const int j = nb.node;
      for (int k = 0; k < stencils[j].size(); ++k) {
        if (stencils[j].neighbors[k].node == i) nb.reverse = k;
      }
      if (nb.reverse < 0) throw std::logic_error("asymmetric stencil pair");
      nb.sign = i < j ? 1.0 : -1.0;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (auto& nb : stencils[i].neighbors) {
      const int j = nb.node;
      if (i > j) continue;
      const bool needed = nodes.fluid(i) || nodes.fluid(j);
      if (!needed) continue;
      nb.edge = static_cast<int>(edges.size());
      stencils[j].neighbors[nb.reverse].edge = nb.edge;
      edges.push_back({i, j, nb.offset});
    }
  }
  return edges;
}

inline Discretization make_discretization(const BackgroundMesh& mesh, NodeSet nodes) {
  Discretization d;
  d.mesh = mesh;
  d.nodes = std::move(nodes);
  d.stencils = build_local_stencils(d.nodes, d.mesh);
  d.edges = build_edges(d.stencils, d.nodes);
  return d;
}

}  // namespace mcd
