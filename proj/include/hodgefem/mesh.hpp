// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/common.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace hodgefem {

/// A triangle of a newest-vertex-bisection mesh. Vertices are stored counter-
/// clockwise with the newest vertex first, so (v[1], v[2]) is always the
/// refinement edge.
struct Triangle {
  std::array<int, 3> v{};
  int generation = 0;
  int root = -1;
};

/// An edge oriented from its lower to its higher vertex id. `plus` is the
/// adjacent triangle whose counter-clockwise boundary runs along that
/// orientation, `minus` the other one; -1 marks a missing side.
struct Edge {
  std::array<int, 2> v{};
  int plus = -1;
  int minus = -1;

  bool boundary() const { return plus < 0 || minus < 0; }
  int any_triangle() const { return plus >= 0 ? plus : minus; }
};

class Mesh {
 public:
  Mesh() = default;

  /// Builds a mesh whose triangles already carry their refinement edge:
  /// tris[t][0] is the newest vertex. Orientation is normalized to
  /// counter-clockwise and conformity is validated.
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> tris, std::vector<int> generation = {},
       std::vector<int> root = {})
      : vertices_(std::move(vertices)) {
    triangles_.resize(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      Triangle &tri = triangles_[t];
      tri.v = tris[t];
      tri.generation = generation.empty() ? 0 : generation.at(t);
      tri.root = root.empty() ? static_cast<int>(t) : root.at(t);
    }
    build();
  }

  /// Initial mesh: the refinement edge of every triangle is its longest edge,
  /// ties broken by the smallest opposite vertex id.
  static Mesh with_longest_edge_marking(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> tris) {
    for (auto &tri : tris) {
      for (int id : tri)
        if (id < 0 || id >= static_cast<int>(vertices.size())) throw InputError("triangle references unknown vertex");
      int best = 0;
      double best_len = -1.0;
      for (int i = 0; i < 3; ++i) {
        const double len = (vertices[tri[(i + 1) % 3]] - vertices[tri[(i + 2) % 3]]).squaredNorm();
        if (len > best_len || (len == best_len && tri[i] < tri[best])) {
          best = i;
          best_len = len;
        }
      }
      tri = {tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]};
    }
    return Mesh(std::move(vertices), std::move(tris));
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Vec2> &vertices() const { return vertices_; }
  const std::vector<Triangle> &triangles() const { return triangles_; }
  const std::vector<Edge> &edges() const { return edges_; }
  const Vec2 &vertex(int i) const { return vertices_[i]; }
  const Triangle &triangle(int t) const { return triangles_[t]; }
  const Edge &edge(int e) const { return edges_[e]; }

  /// Edge opposite local vertex i of triangle t.
  int triangle_edge(int t, int i) const { return tri_edges_[t][i]; }
  /// +1 when the counter-clockwise traversal of t runs along the edge's stored orientation.
  int triangle_edge_sign(int t, int i) const { return tri_edge_signs_[t][i]; }
  int refinement_edge(int t) const { return tri_edges_[t][0]; }

  double area(int t) const {
    const auto &v = triangles_[t].v;
    return 0.5 * cross(vertices_[v[1]] - vertices_[v[0]], vertices_[v[2]] - vertices_[v[0]]);
  }
  /// Element size h_K = |K|^{1/2}.
  double h(int t) const { return std::sqrt(area(t)); }

  Vec2 edge_tangent(int e) const { return vertices_[edges_[e].v[1]] - vertices_[edges_[e].v[0]]; }
  double edge_length(int e) const { return edge_tangent(e).norm(); }
  /// Unit normal of edge e pointing out of its plus side.
  Vec2 edge_normal(int e) const {
    const Vec2 t = edge_tangent(e).normalized();
    return Vec2(t.y(), -t.x());
  }

  /// Triangles incident to each vertex, ascending.
  const std::vector<std::vector<int>> &vertex_triangles() const {
    if (vertex_triangles_.empty() && !vertices_.empty()) {
      vertex_triangles_.assign(vertices_.size(), {});
      for (int t = 0; t < num_triangles(); ++t)
        for (int id : triangles_[t].v) vertex_triangles_[id].push_back(t);
    }
    return vertex_triangles_;
  }

  int edge_between(int a, int b) const {
    const auto it = edge_index_.find({std::min(a, b), std::max(a, b)});
    return it == edge_index_.end() ? -1 : it->second;
  }

  int num_boundary_edges() const {
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [](const Edge &e) { return e.boundary(); }));
  }

 private:
  void build() {
    const int nv = num_vertices();
    for (auto &tri : triangles_) {
      for (int id : tri.v)
        if (id < 0 || id >= nv) throw InputError("triangle references unknown vertex");
      if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2])
        throw GeometryError("triangle with repeated vertex");
      const double a2 = cross(vertices_[tri.v[1]] - vertices_[tri.v[0]], vertices_[tri.v[2]] - vertices_[tri.v[0]]);
      if (!(std::abs(a2) > 0.0)) throw GeometryError("degenerate triangle (zero area)");
      // Swapping the two refinement-edge vertices keeps the newest vertex first.
      if (a2 < 0.0) std::swap(tri.v[1], tri.v[2]);
    }
    edges_.clear();
    edge_index_.clear();
    tri_edges_.assign(triangles_.size(), {});
    tri_edge_signs_.assign(triangles_.size(), {});
    for (int t = 0; t < num_triangles(); ++t) {
      for (int i = 0; i < 3; ++i) {
        const int a = triangles_[t].v[(i + 1) % 3];
        const int b = triangles_[t].v[(i + 2) % 3];
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        auto [it, inserted] = edge_index_.try_emplace(key, num_edges());
        if (inserted) edges_.push_back(Edge{{key.first, key.second}, -1, -1});
        Edge &edge = edges_[it->second];
        const int sign = a < b ? 1 : -1;
        int &slot = sign > 0 ? edge.plus : edge.minus;
        if (slot >= 0) throw GeometryError("non-conforming mesh: edge shared by more than two triangles or inconsistently oriented");
        slot = t;
        tri_edges_[t][i] = it->second;
        tri_edge_signs_[t][i] = sign;
      }
    }
    check_hanging_vertices();
  }

  // A hanging vertex sits strictly inside a boundary edge and is connected to
  // one of that edge's endpoints.
  void check_hanging_vertices() const {
    std::vector<std::vector<int>> neighbors(vertices_.size());
    for (const auto &e : edges_) {
      neighbors[e.v[0]].push_back(e.v[1]);
      neighbors[e.v[1]].push_back(e.v[0]);
    }
    for (const auto &e : edges_) {
      if (!e.boundary()) continue;
      const Vec2 a = vertices_[e.v[0]];
      const Vec2 ab = vertices_[e.v[1]] - a;
      const double len2 = ab.squaredNorm();
      for (int end : e.v) {
        for (int w : neighbors[end]) {
          if (w == e.v[0] || w == e.v[1]) continue;
          const Vec2 aw = vertices_[w] - a;
          const double s = aw.dot(ab) / len2;
          if (s > 0.0 && s < 1.0 && std::abs(cross(ab, aw)) <= 1e-12 * len2)
            throw GeometryError("non-conforming mesh: hanging vertex on a boundary edge");
        }
      }
    }
  }

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::map<std::pair<int, int>, int> edge_index_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 3>> tri_edge_signs_;
  mutable std::vector<std::vector<int>> vertex_triangles_;
};

/// Genealogy of one refinement call.
struct RefinementRecord {
  std::vector<std::vector<int>> children;  // coarse triangle -> fine triangles
  std::vector<int> parent;                 // fine triangle -> coarse triangle
  std::vector<int> refined;                // R_H: coarse triangles with >= 2 children, ascending
  std::vector<int> marked;                 // M, ascending
};

namespace detail {

inline std::vector<int> sorted_unique(std::span<const int> ids) {
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Newest-vertex bisection of the marked triangles plus conforming closure.
/// Every marked triangle is bisected at least once; triangles with further
/// marked edges are bisected up to twice more in the same call.
inline std::pair<Mesh, RefinementRecord> bisect_marked(const Mesh &mesh, std::span<const int> marked) {
  const int nt = mesh.num_triangles();
  RefinementRecord record;
  record.marked = detail::sorted_unique(marked);
  for (int t : record.marked)
    if (t < 0 || t >= nt) throw InputError("marked triangle id out of range: " + std::to_string(t));

  // Closure on edges: a triangle with any marked edge needs its refinement edge marked.
  std::vector<char> edge_marked(mesh.num_edges(), 0);
  std::vector<int> stack;
  auto mark_edge = [&](int e) {
    if (edge_marked[e]) return;
    edge_marked[e] = 1;
    const Edge &edge = mesh.edge(e);
    for (int t : {edge.plus, edge.minus})
      if (t >= 0) stack.push_back(t);
  };
  for (int t : record.marked) mark_edge(mesh.refinement_edge(t));
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    mark_edge(mesh.refinement_edge(t));
  }

  std::vector<Vec2> vertices = mesh.vertices();
  std::vector<int> midpoint(mesh.num_edges(), -1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (!edge_marked[e]) continue;
    const Edge &edge = mesh.edge(e);
    midpoint[e] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (mesh.vertex(edge.v[0]) + mesh.vertex(edge.v[1])));
  }

  std::vector<std::array<int, 3>> tris;
  std::vector<int> generation, root;
  record.children.assign(nt, {});
  auto emit = [&](int parent, std::array<int, 3> v, int gen) {
    record.children[parent].push_back(static_cast<int>(tris.size()));
    record.parent.push_back(parent);
    tris.push_back(v);
    generation.push_back(gen);
    root.push_back(mesh.triangle(parent).root);
  };
  for (int t = 0; t < nt; ++t) {
    const Triangle &tri = mesh.triangle(t);
    const int e0 = mesh.triangle_edge(t, 0);
    if (!edge_marked[e0]) {
      emit(t, tri.v, tri.generation);
      continue;
    }
    const auto [p, a, b] = tri.v;
    const int m = midpoint[e0];
    // Children (m, p, a) and (m, b, p); their refinement edges are the parent's
    // edges (p, a) = opposite b and (b, p) = opposite a.
    const int edge_pa = mesh.triangle_edge(t, 2);
    const int edge_bp = mesh.triangle_edge(t, 1);
    if (edge_marked[edge_pa]) {
      const int m1 = midpoint[edge_pa];
      emit(t, {m1, m, p}, tri.generation + 2);
      emit(t, {m1, a, m}, tri.generation + 2);
    } else {
      emit(t, {m, p, a}, tri.generation + 1);
    }
    if (edge_marked[edge_bp]) {
      const int m2 = midpoint[edge_bp];
      emit(t, {m2, m, b}, tri.generation + 2);
      emit(t, {m2, p, m}, tri.generation + 2);
    } else {
      emit(t, {m, b, p}, tri.generation + 1);
    }
  }
  for (int t = 0; t < nt; ++t)
    if (record.children[t].size() >= 2) record.refined.push_back(t);
  return {Mesh(std::move(vertices), std::move(tris), std::move(generation), std::move(root)), std::move(record)};
}

/// Composition of two successive refinement records (coarse -> mid -> fine).
inline RefinementRecord compose(const RefinementRecord &first, const RefinementRecord &second) {
  RefinementRecord out;
  out.parent.resize(second.parent.size());
  out.children.assign(first.children.size(), {});
  for (std::size_t f = 0; f < second.parent.size(); ++f) {
    const int coarse = first.parent[second.parent[f]];
    out.parent[f] = coarse;
    out.children[coarse].push_back(static_cast<int>(f));
  }
  for (std::size_t t = 0; t < out.children.size(); ++t)
    if (out.children[t].size() >= 2) out.refined.push_back(static_cast<int>(t));
  out.marked = first.marked;
  return out;
}

/// Identity genealogy of a mesh onto itself.
inline RefinementRecord identity_record(const Mesh &mesh) {
  RefinementRecord out;
  out.parent.resize(mesh.num_triangles());
  out.children.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    out.parent[t] = t;
    out.children[t] = {t};
  }
  return out;
}

/// Two full bisection sweeps: every triangle ends with four grandchildren.
inline std::pair<Mesh, RefinementRecord> uniform_refine(const Mesh &mesh) {
  std::vector<int> all(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) all[t] = t;
  auto [mid, first] = bisect_marked(mesh, all);
  std::vector<int> all_mid(mid.num_triangles());
  for (int t = 0; t < mid.num_triangles(); ++t) all_mid[t] = t;
  auto [fine, second] = bisect_marked(mid, all_mid);
  RefinementRecord record = compose(first, second);
  record.marked = first.marked;
  return {std::move(fine), std::move(record)};
}

/// R_H extended by every coarse triangle sharing a vertex with R_H.
inline std::vector<int> extended_refined_set(const RefinementRecord &record, const Mesh &coarse) {
  std::vector<char> in(coarse.num_triangles(), 0);
  const auto &vt = coarse.vertex_triangles();
  for (int t : record.refined) {
    in[t] = 1;
    for (int id : coarse.triangle(t).v)
      for (int s : vt[id]) in[s] = 1;
  }
  std::vector<int> out;
  for (int t = 0; t < coarse.num_triangles(); ++t)
    if (in[t]) out.push_back(t);
  return out;
}

inline int max_vertex_valence(const Mesh &mesh) {
  int best = 0;
  for (const auto &ts : mesh.vertex_triangles()) best = std::max(best, static_cast<int>(ts.size()));
  return best;
}

struct MeshMetrics {
  double min_angle = 0.0;  // radians
  double max_h = 0.0;
  int triangles = 0;
  int edges = 0;
  int vertices = 0;
};

inline double min_angle(const Mesh &mesh, int t) {
  const auto &v = mesh.triangle(t).v;
  double best = std::numbers::pi;
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = mesh.vertex(v[(i + 1) % 3]) - mesh.vertex(v[i]);
    const Vec2 b = mesh.vertex(v[(i + 2) % 3]) - mesh.vertex(v[i]);
    best = std::min(best, std::atan2(std::abs(cross(a, b)), a.dot(b)));
  }
  return best;
}

inline MeshMetrics mesh_metrics(const Mesh &mesh) {
  MeshMetrics m;
  m.min_angle = std::numbers::pi;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    m.min_angle = std::min(m.min_angle, min_angle(mesh, t));
    m.max_h = std::max(m.max_h, mesh.h(t));
  }
  m.triangles = mesh.num_triangles();
  m.edges = mesh.num_edges();
  m.vertices = mesh.num_vertices();
  return m;
}

/// Number of connected components of the boundary (boundary loops).
inline int boundary_loops(const Mesh &mesh) {
  std::vector<int> parent(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> on_boundary(mesh.num_vertices(), 0);
  for (const auto &e : mesh.edges()) {
    if (!e.boundary()) continue;
    on_boundary[e.v[0]] = on_boundary[e.v[1]] = 1;
    parent[find(e.v[0])] = find(e.v[1]);
  }
  int loops = 0;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (on_boundary[i] && find(i) == i) ++loops;
  return loops;
}

}  // namespace hodgefem
