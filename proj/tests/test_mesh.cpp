// SPDX-License-Identifier: Apache-2.0
#include "hodgefem/mesh.hpp"
#include "hodgefem/problems.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>
#include <set>

using namespace hodgefem;

namespace {

Mesh two_triangle_square() {
  return Mesh::with_longest_edge_marking({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

Mesh reference_triangle() { return Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}); }

void expect_conforming_cover(const Mesh &coarse, const Mesh &fine) {
  double ca = 0.0, fa = 0.0;
  for (int t = 0; t < coarse.num_triangles(); ++t) ca += coarse.area(t);
  for (int t = 0; t < fine.num_triangles(); ++t) fa += fine.area(t);
  EXPECT_NEAR(ca, fa, 1e-12);
  // Euler characteristic is a refinement invariant.
  EXPECT_EQ(coarse.num_vertices() - coarse.num_edges() + coarse.num_triangles(),
            fine.num_vertices() - fine.num_edges() + fine.num_triangles());
}

}  // namespace

TEST(Mesh, ReferenceTriangleDiameterSurrogate) {
  const Mesh m = reference_triangle();
  EXPECT_NEAR(m.area(0), 0.5, 1e-15);
  EXPECT_NEAR(m.h(0), std::sqrt(0.5), 1e-15);
}

TEST(Mesh, TwoTriangleSquareMinAngle) {
  EXPECT_NEAR(mesh_metrics(two_triangle_square()).min_angle, std::numbers::pi / 4, 1e-14);
}

TEST(Mesh, EdgesAndOrientation) {
  const Mesh m = two_triangle_square();
  EXPECT_EQ(m.num_edges(), 5);
  EXPECT_EQ(m.num_boundary_edges(), 4);
  for (const Edge &e : m.edges()) EXPECT_LT(e.v[0], e.v[1]);
  const int diag = m.edge_between(0, 2);
  ASSERT_GE(diag, 0);
  EXPECT_FALSE(m.edge(diag).boundary());
  // The normal points out of the plus side.
  const Vec2 n = m.edge_normal(diag);
  const Vec2 mid = 0.5 * (m.vertex(0) + m.vertex(2));
  Vec2 c = Vec2::Zero();
  for (int v : m.triangle(m.edge(diag).plus).v) c += m.vertex(v) / 3.0;
  EXPECT_LT((c - mid).dot(n), 0.0);
}

TEST(Mesh, ClockwiseInputIsReoriented) {
  const Mesh m({{0, 0}, {0, 1}, {1, 0}}, {{0, 1, 2}});
  const auto &v = m.triangle(0).v;
  EXPECT_GT(cross(m.vertex(v[1]) - m.vertex(v[0]), m.vertex(v[2]) - m.vertex(v[0])), 0.0);
  EXPECT_EQ(v[0], 0);  // newest vertex kept first
}

TEST(Mesh, RejectsDegenerateAndNonConforming) {
  EXPECT_THROW(Mesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), GeometryError);
  EXPECT_THROW(Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 1}}), GeometryError);
  EXPECT_THROW(Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 5}}), InputError);
  // Hanging vertex: (0.5, 0) splits the bottom edge of the upper triangle only.
  EXPECT_THROW(Mesh({{0, 0}, {1, 0}, {0.5, 1}, {0.5, 0}, {0.5, -1}}, {{0, 1, 2}, {0, 4, 3}, {3, 4, 1}}), GeometryError);
}

TEST(Mesh, EulerCharacteristicCountsHoles) {
  for (const auto &[mesh, holes] : {std::pair{union_jack_square(), 0}, std::pair{lshape_mesh(), 0}, std::pair{annulus_mesh(), 1}}) {
    EXPECT_EQ(mesh.num_vertices() - mesh.num_edges() + mesh.num_triangles(), 1 - holes);
    EXPECT_EQ(boundary_loops(mesh), 1 + holes);
  }
}

TEST(Bisection, EmptyMarkingIsNoOp) {
  const Mesh m = union_jack_square();
  const auto [fine, rec] = bisect_marked(m, std::vector<int>{});
  EXPECT_EQ(fine.num_triangles(), m.num_triangles());
  EXPECT_TRUE(rec.refined.empty());
  EXPECT_TRUE(extended_refined_set(rec, m).empty());
}

TEST(Bisection, MarkingOneTriangleOfTheSquareForcesNeighbour) {
  const Mesh m = two_triangle_square();
  const auto [fine, rec] = bisect_marked(m, std::vector<int>{0});
  EXPECT_EQ(fine.num_triangles(), 4);
  EXPECT_EQ(rec.refined, (std::vector<int>{0, 1}));
  expect_conforming_cover(m, fine);
}

TEST(Bisection, UniformTwoTriangleSquareGivesEight) {
  const Mesh m = two_triangle_square();
  const auto [fine, rec] = uniform_refine(m);
  EXPECT_EQ(fine.num_triangles(), 8);
  for (int t = 0; t < fine.num_triangles(); ++t)
    EXPECT_EQ(fine.triangle(t).generation, m.triangle(rec.parent[t]).generation + 2);
}

TEST(Bisection, MarkAllBisectsEveryTriangle) {
  for (const Mesh &m : {union_jack_square(), lshape_mesh(), annulus_mesh()}) {
    std::vector<int> all(m.num_triangles());
    std::iota(all.begin(), all.end(), 0);
    const auto [fine, rec] = bisect_marked(m, all);
    for (const auto &ch : rec.children) EXPECT_GE(ch.size(), 2u);
    EXPECT_GE(fine.num_triangles(), 2 * m.num_triangles());
    expect_conforming_cover(m, fine);
  }
}

TEST(Bisection, GenealogyAndGenerations) {
  std::mt19937_64 rng(7);
  Mesh m = lshape_mesh();
  for (int step = 0; step < 8; ++step) {
    std::uniform_int_distribution<int> pick(0, m.num_triangles() - 1);
    const std::vector<int> marked = {pick(rng), pick(rng)};
    auto [fine, rec] = bisect_marked(m, marked);
    ASSERT_EQ(rec.parent.size(), static_cast<std::size_t>(fine.num_triangles()));
    for (int t = 0; t < fine.num_triangles(); ++t) {
      const int p = rec.parent[t];
      const int bisections = rec.children[p].size() == 1 ? 0 : (rec.children[p].size() == 2 ? 1 : 2);
      const int delta = fine.triangle(t).generation - m.triangle(p).generation;
      EXPECT_GE(delta, 0);
      EXPECT_LE(delta, bisections);
      EXPECT_EQ(fine.triangle(t).root, m.triangle(p).root);
    }
    for (int id : marked) EXPECT_GE(rec.children[id].size(), 2u);
    expect_conforming_cover(m, fine);
    m = std::move(fine);
  }
}

TEST(Bisection, MinimumAngleSettlesAfterTwoUniformLevels) {
  Mesh m = union_jack_square();
  double after_two = 0.0;
  for (int level = 1; level <= 6; ++level) {
    m = uniform_refine(m).first;
    if (level == 2) after_two = mesh_metrics(m).min_angle;
  }
  EXPECT_NEAR(mesh_metrics(m).min_angle, after_two, 1e-12);
}

TEST(Bisection, ComposeMatchesTwoSteps) {
  const Mesh m = union_jack_square();
  const auto [a, ra] = bisect_marked(m, std::vector<int>{0, 5});
  const auto [b, rb] = bisect_marked(a, std::vector<int>{1});
  const RefinementRecord c = compose(ra, rb);
  for (int t = 0; t < b.num_triangles(); ++t) EXPECT_EQ(c.parent[t], ra.parent[rb.parent[t]]);
}

TEST(ExtendedRefinedSet, Saturation) {
  const Mesh m = union_jack_square();
  const auto [fine, rec] = uniform_refine(m);
  std::vector<int> all(m.num_triangles());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(extended_refined_set(rec, m), all);
}

TEST(ExtendedRefinedSet, SingleInteriorTriangleGivesVertexOneRing) {
  Mesh m = union_jack_square();
  for (int i = 0; i < 2; ++i) m = uniform_refine(m).first;
  // An interior triangle: all three vertices strictly inside the square.
  int target = -1;
  for (int t = 0; t < m.num_triangles() && target < 0; ++t) {
    bool inside = true;
    for (int v : m.triangle(t).v) {
      const Vec2 x = m.vertex(v);
      inside = inside && x.x() > 1e-12 && x.x() < 1 - 1e-12 && x.y() > 1e-12 && x.y() < 1 - 1e-12;
    }
    if (inside) target = t;
  }
  ASSERT_GE(target, 0);
  RefinementRecord rec = identity_record(m);
  rec.refined = {target};
  std::set<int> ring;
  for (int v : m.triangle(target).v)
    for (int t : m.vertex_triangles()[v]) ring.insert(t);
  const auto ext = extended_refined_set(rec, m);
  EXPECT_EQ(std::vector<int>(ring.begin(), ring.end()), ext);
}

TEST(Mesh, MetricsCounts) {
  const MeshMetrics mm = mesh_metrics(annulus_mesh());
  EXPECT_EQ(mm.triangles, 16);
  EXPECT_EQ(mm.vertices, 16);
  EXPECT_EQ(mm.edges, 32);
  EXPECT_GT(mm.max_h, 0.0);
}

TEST(Bisection, UniformRefinementQuadruplesCompatibleMeshes) {
  for (Mesh m : {union_jack_square(), lshape_mesh()}) {
    for (int level = 0; level < 3; ++level) {
      const int before = m.num_triangles();
      m = uniform_refine(m).first;
      EXPECT_EQ(m.num_triangles(), 4 * before);
    }
  }
}
