#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mcd/benchmarks.hpp"

using namespace mcd;

namespace {

BoundarySpec all_walls() {
  BoundarySpec bc;
  for (auto s : {Side::left, Side::right, Side::bottom, Side::top}) {
    bc[s] = BoundaryCondition{BoundaryKind::wall, {}, false};
  }
  return bc;
}

}  // namespace

TEST(BackgroundMesh, CellIdsAreRowMajor) {
  const auto m = build_background_mesh({{0, 0}, {1, 0.5}}, 0.125, false, false);
  EXPECT_EQ(m.nx, 8);
  EXPECT_EQ(m.ny, 4);
  EXPECT_EQ(m.cell_id(3, 2), 2 * 8 + 3);
  EXPECT_EQ(m.cell_coords(19), std::make_pair(3, 2));
}

TEST(BackgroundMesh, RejectsExtentNotMultipleOfCellWidth) {
  EXPECT_THROW(build_background_mesh({{0, 0}, {1, 1}}, 0.3, false, false), ConfigError);
}

TEST(NodeGeneration, UniformNodesSitAtCellCentres) {
  const auto m = build_background_mesh({{0, 0}, {1, 1}}, 0.25, true, true);
  const auto nodes = generate_nodes(m, Arrangement::uniform(), {});
  for (int i = 0; i < nodes.size(); ++i) {
    auto [ix, iy] = m.cell_coords(i);
    EXPECT_DOUBLE_EQ(nodes.position[i].x, m.cell_center(ix, iy).x);
    EXPECT_DOUBLE_EQ(nodes.position[i].y, m.cell_center(ix, iy).y);
    EXPECT_TRUE(nodes.fluid(i));
  }
}

TEST(NodeGeneration, RandomizedNodesStayInsideTheirCellAndAreSeeded) {
  const auto m = build_background_mesh({{0, 0}, {1, 1}}, 1.0 / 16, true, true);
  const auto a = generate_nodes(m, Arrangement::randomized(0.5, 3), {});
  const auto b = generate_nodes(m, Arrangement::randomized(0.5, 3), {});
  const auto c = generate_nodes(m, Arrangement::randomized(0.5, 4), {});
  bool differs = false;
  for (int i = 0; i < a.size(); ++i) {
    auto [ix, iy] = m.cell_coords(i);
    const Vec2 d = a.position[i] - m.cell_center(ix, iy);
    EXPECT_LE(std::abs(d.x), 0.25 * m.l0 + 1e-15);
    EXPECT_LE(std::abs(d.y), 0.25 * m.l0 + 1e-15);
    EXPECT_EQ(a.position[i].x, b.position[i].x);
    EXPECT_EQ(a.position[i].y, b.position[i].y);
    differs = differs || a.position[i].x != c.position[i].x;
  }
  EXPECT_TRUE(differs);
}

TEST(NodeGeneration, RejectsAmplitudeOutsideUnitInterval) {
  const auto m = build_background_mesh({{0, 0}, {1, 1}}, 0.25, true, true);
  EXPECT_THROW(generate_nodes(m, Arrangement::randomized(1.0, 0), {}), ConfigError);
  EXPECT_THROW(generate_nodes(m, Arrangement::randomized(-0.1, 0), {}), ConfigError);
}

TEST(NodeGeneration, PeriodicAxisCannotCarryWalls) {
  const auto m = build_background_mesh({{0, 0}, {1, 1}}, 0.25, true, false);
  EXPECT_THROW(generate_nodes(m, Arrangement::uniform(), all_walls()), ConfigError);
}

TEST(NodeGeneration, WallNodesSnapToTheWallWithOutwardNormals) {
  const auto m = build_background_mesh({{0, 0}, {1, 1}}, 0.125, false, false);
  const auto nodes = generate_nodes(m, Arrangement::uniform(), all_walls());
  const int left = m.cell_id(0, 3);
  EXPECT_TRUE(nodes.boundary(left));
  EXPECT_DOUBLE_EQ(nodes.position[left].x, 0.0);
  EXPECT_DOUBLE_EQ(nodes.normal[left].x, -1.0);
  const int corner = m.cell_id(7, 7);
  EXPECT_DOUBLE_EQ(nodes.position[corner].x, 1.0);
  EXPECT_DOUBLE_EQ(nodes.position[corner].y, 1.0);
  EXPECT_NEAR(nodes.normal[corner].x, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(nodes.normal[corner].y, std::sqrt(0.5), 1e-15);
  EXPECT_TRUE(nodes.fluid(m.cell_id(3, 3)));
}

TEST(NodeGeneration, CavityLidOwnsTheCorners) {
  const auto d = cavity_geometry(9);
  const auto& m = d.mesh;
  for (int ix : {0, 8}) {
    const int id = m.cell_id(ix, 8);
    EXPECT_DOUBLE_EQ(d.nodes.condition(id).velocity.x, 1.0);
  }
  EXPECT_DOUBLE_EQ(d.nodes.condition(m.cell_id(0, 0)).velocity.x, 0.0);
}

TEST(Stencils, PeriodicUniformNodesHaveEightSymmetricNeighbours) {
  const auto d = taylor_green_geometry(8, Arrangement::uniform());
  for (int i = 0; i < d.size(); ++i) {
    const auto& st = d.stencils[i];
    ASSERT_EQ(st.size(), 8);
    Vec2 sum;
    for (const auto& nb : st.neighbors) {
      sum += nb.offset;
      EXPECT_LE(norm(nb.offset), std::sqrt(2.0) * d.mesh.l0 + 1e-12);
    }
    EXPECT_NEAR(norm(sum), 0.0, 1e-12);
  }
}

TEST(Stencils, EdgesAreSharedWithOppositeOrientation) {
  const auto d = taylor_green_geometry(8, Arrangement::randomized(0.5, 11));
  for (int i = 0; i < d.size(); ++i) {
    for (const auto& nb : d.stencils[i].neighbors) {
      const auto& back = d.stencils[nb.node].neighbors[nb.reverse];
      EXPECT_EQ(back.node, i);
      EXPECT_EQ(back.edge, nb.edge);
      EXPECT_EQ(back.sign, -nb.sign);
      EXPECT_NEAR(norm(back.offset + nb.offset), 0.0, 1e-12);
    }
  }
  // Each unordered pair is stored once: 4 undirected edges per node.
  EXPECT_EQ(static_cast<int>(d.edges.size()), 4 * d.size());
}

TEST(Stencils, FacesIntoWallNodesAreBoundaryFaces) {
  const auto d = cavity_geometry(8);
  const int i = d.mesh.cell_id(1, 1);
  int boundary_faces = 0;
  for (const auto& nb : d.stencils[i].neighbors) {
    if (nb.face == FaceClass::boundary) {
      ++boundary_faces;
      EXPECT_TRUE(d.nodes.boundary(nb.node));
    }
  }
  EXPECT_EQ(boundary_faces, 5);
}

TEST(Obstacle, FittedCylinderTagsCutCellsAndExcludesInterior) {
  ChannelSpec spec;
  spec.l0 = 0.125;
  spec.obstacle = ObstacleMode::fitted;
  const auto d = channel_geometry(spec);
  int on_circle = 0;
  for (int i = 0; i < d.size(); ++i) {
    const Vec2 x = d.nodes.position[i];
    if (d.nodes.boundary(i) && d.nodes.condition(i).kind == BoundaryKind::obstacle) {
      ++on_circle;
      EXPECT_NEAR(norm(x), 0.5, 1e-12);
      // Normal points from the fluid into the body.
      EXPECT_NEAR(dot(d.nodes.normal[i], x * -2.0), 1.0, 1e-12);
      EXPECT_TRUE(d.mesh.in_cell(i, x));
    }
    if (d.nodes.fluid(i)) {
      EXPECT_GT(norm(x), 0.5);
    }
  }
  EXPECT_GE(on_circle, 8);
  EXPECT_GT(d.nodes.count(NodeKind::excluded), 0);
}

TEST(Obstacle, DampingModeLeavesNodesUntouched) {
  ChannelSpec spec;
  spec.l0 = 0.125;
  const auto d = channel_geometry(spec);
  EXPECT_EQ(d.nodes.count(NodeKind::excluded), 0);
}

TEST(Obstacle, RejectsObstacleTooCloseToTheBoundary) {
  ChannelSpec spec;
  spec.l0 = 0.125;
  spec.cylinder = {{-1.6, 0.0}, 1.0};
  EXPECT_THROW(channel_geometry(spec), ConfigError);
}

TEST(Stencils, UnderfilledFluidNodeIsReported) {
  // A single fluid row squeezed between walls leaves too few neighbours
  // once the wall rows are excluded.
  const auto m = build_background_mesh({{0, 0}, {1, 0.375}}, 0.125, true, false);
  auto nodes = generate_nodes(m, Arrangement::uniform(), {});
  for (int ix = 0; ix < m.nx; ++ix) {
    nodes.kind[m.cell_id(ix, 0)] = NodeKind::excluded;
    nodes.kind[m.cell_id(ix, 2)] = NodeKind::excluded;
  }
  try {
    make_discretization(m, nodes);
    FAIL() << "expected DegenerateStencilError";
  } catch (const DegenerateStencilError& e) {
    EXPECT_GE(e.node(), 0);
  }
}
