// SPDX-License-Identifier: Apache-2.0
#pragma once

// Lowest-order trimmed spaces P_1^- Lambda^k on a 2D mesh: Lagrange P1 (k = 0),
// Whitney edge forms (k = 1) and piecewise constants (k = 2).
//
// Proxy dictionary used throughout:
//   k = 0: scalar,  d = grad
//   k = 1: vector,  d = rot = d1 v2 - d2 v1,  delta = -div,  *v = (-v2, v1)
//   k = 2: scalar,  delta s = (d2 s, -d1 s),  *s = s
// so tr *v on an edge is the normal component v . n.
//
// Degrees of freedom: vertex values, edge circulations along the low -> high
// vertex orientation, and element means.

#include "hodgefem/common.hpp"
#include "hodgefem/mesh.hpp"
#include "hodgefem/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <type_traits>
#include <memory>
#include <ostream>
#include <istream>
#include <sstream>

namespace hodgefem {

using MeshPtr = std::shared_ptr<const Mesh>;

struct FormSpace {
  int k = 0;
  MeshPtr mesh;
  int degree = 1;  // fixed: lowest-order trimmed family

  FormSpace() = default;
  FormSpace(int degree_k, MeshPtr m) : k(degree_k), mesh(std::move(m)) {
    if (k < 0 || k > 2) throw InputError("form degree must be 0, 1 or 2");
    if (!mesh) throw InputError("form space needs a mesh");
  }

  int ndof() const {
    switch (k) {
      case 0: return mesh->num_vertices();
      case 1: return mesh->num_edges();
      default: return mesh->num_triangles();
    }
  }
  bool operator==(const FormSpace &o) const { return k == o.k && mesh == o.mesh; }
};

struct CoefficientVector {
  FormSpace space;
  Eigen::VectorXd values;

  CoefficientVector() = default;
  CoefficientVector(FormSpace s, Eigen::VectorXd v) : space(std::move(s)), values(std::move(v)) {
    if (values.size() != space.ndof()) throw InputError("coefficient vector length does not match ndof");
  }
  static CoefficientVector zero(const FormSpace &s) { return {s, Eigen::VectorXd::Zero(s.ndof())}; }
};

/// A smooth k-form given by its proxy, optionally with analytic d and delta.
struct AnalyticForm {
  int k = 0;
  std::function<Proxy(const Vec2 &)> value;
  std::shared_ptr<const AnalyticForm> d;
  std::shared_ptr<const AnalyticForm> delta;

  Proxy operator()(const Vec2 &x) const { return value(x); }

  static AnalyticForm zero(int degree) {
    AnalyticForm z{degree, [](const Vec2 &) { return Proxy(0.0, 0.0); }, nullptr, nullptr};
    return z;
  }
  static AnalyticForm scalar(int degree, std::function<double(const Vec2 &)> f) {
    return AnalyticForm{degree, [f = std::move(f)](const Vec2 &x) { return scalar_proxy(f(x)); }, nullptr, nullptr};
  }
  // Callables must return Vec2 by value: an Eigen expression would outlive its operands.
  template <typename F>
  static AnalyticForm vector(F f) {
    static_assert(std::is_same_v<std::decay_t<std::invoke_result_t<F &, const Vec2 &>>, Vec2>,
                  "vector field callables must return Vec2, not an Eigen expression");
    return AnalyticForm{1, std::function<Proxy(const Vec2 &)>(std::move(f)), nullptr, nullptr};
  }

  AnalyticForm with_d(AnalyticForm df) && {
    d = std::make_shared<const AnalyticForm>(std::move(df));
    return std::move(*this);
  }
  AnalyticForm with_delta(AnalyticForm cf) && {
    delta = std::make_shared<const AnalyticForm>(std::move(cf));
    return std::move(*this);
  }

  AnalyticForm exterior_derivative() const;
  AnalyticForm coderivative() const;
};

namespace detail {

// Fourth-order central differences; fallback when no analytic derivative is attached.
inline constexpr double kFdStep = 1e-4;

inline std::array<Proxy, 2> partials(const AnalyticForm &f, const Vec2 &x) {
  std::array<Proxy, 2> out;
  for (int dir = 0; dir < 2; ++dir) {
    Vec2 e = Vec2::Zero();
    e[dir] = kFdStep;
    out[dir] = (8.0 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12.0 * kFdStep);
  }
  return out;
}

}  // namespace detail

inline AnalyticForm AnalyticForm::exterior_derivative() const {
  if (d) return *d;
  if (k == 2) return zero(3);
  auto self = std::make_shared<const AnalyticForm>(*this);
  if (k == 0)
    return AnalyticForm{1, [self](const Vec2 &x) {
                          auto p = detail::partials(*self, x);
                          return Vec2(p[0][0], p[1][0]);
                        }};
  return AnalyticForm{2, [self](const Vec2 &x) {
                        auto p = detail::partials(*self, x);
                        return scalar_proxy(p[0][1] - p[1][0]);
                      }};
}

inline AnalyticForm AnalyticForm::coderivative() const {
  if (delta) return *delta;
  if (k == 0) return zero(-1);
  auto self = std::make_shared<const AnalyticForm>(*this);
  if (k == 1)
    return AnalyticForm{0, [self](const Vec2 &x) {
                          auto p = detail::partials(*self, x);
                          return scalar_proxy(-(p[0][0] + p[1][1]));
                        }};
  return AnalyticForm{1, [self](const Vec2 &x) {
                        auto p = detail::partials(*self, x);
                        return Vec2(p[1][0], -p[0][0]);
                      }};
}

/// Geometry of one triangle: vertex coordinates and barycentric gradients.
struct ElementGeometry {
  std::array<Vec2, 3> x;
  std::array<Vec2, 3> grad;
  double area = 0.0;

  ElementGeometry(const Mesh &mesh, int t) {
    const auto &v = mesh.triangle(t).v;
    for (int i = 0; i < 3; ++i) x[i] = mesh.vertex(v[i]);
    Eigen::Matrix2d B;
    B.col(0) = x[1] - x[0];
    B.col(1) = x[2] - x[0];
    area = 0.5 * B.determinant();
    if (!(area > 0.0)) throw GeometryError("degenerate triangle " + std::to_string(t));
    const Eigen::Matrix2d inv = B.inverse();
    grad[1] = inv.row(0).transpose();
    grad[2] = inv.row(1).transpose();
    grad[0] = -grad[1] - grad[2];
  }

  Vec2 point(const std::array<double, 3> &bary) const { return bary[0] * x[0] + bary[1] * x[1] + bary[2] * x[2]; }

  std::array<double, 3> barycentric(const Vec2 &p) const {
    const double l1 = grad[1].dot(p - x[0]);
    const double l2 = grad[2].dot(p - x[0]);
    return {1.0 - l1 - l2, l1, l2};
  }

  /// Whitney form of local edge i (opposite vertex i) oriented counter-clockwise.
  Vec2 whitney(int i, const std::array<double, 3> &bary) const {
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    return bary[a] * grad[b] - bary[b] * grad[a];
  }
  double whitney_rot(int i) const { return 2.0 * cross(grad[(i + 1) % 3], grad[(i + 2) % 3]); }
  double whitney_div(int i) const {
    const int a = (i + 1) % 3, b = (i + 2) % 3;
    return grad[a].dot(grad[b]) - grad[b].dot(grad[a]);
  }
};

/// Proxy value of a discrete form at barycentric point `bary` of triangle t.
inline Proxy evaluate(const CoefficientVector &v, const ElementGeometry &g, int t, const std::array<double, 3> &bary) {
  const Mesh &mesh = *v.space.mesh;
  switch (v.space.k) {
    case 0: {
      const auto &ids = mesh.triangle(t).v;
      return scalar_proxy(bary[0] * v.values[ids[0]] + bary[1] * v.values[ids[1]] + bary[2] * v.values[ids[2]]);
    }
    case 1: {
      Vec2 out = Vec2::Zero();
      for (int i = 0; i < 3; ++i)
        out += mesh.triangle_edge_sign(t, i) * v.values[mesh.triangle_edge(t, i)] * g.whitney(i, bary);
      return out;
    }
    default: return scalar_proxy(v.values[t]);
  }
}

inline Proxy evaluate_at(const CoefficientVector &v, int t, const Vec2 &x) {
  const ElementGeometry g(*v.space.mesh, t);
  return evaluate(v, g, t, g.barycentric(x));
}

/// Exterior derivative of a discrete form on triangle t (constant per element).
inline Proxy element_derivative(const CoefficientVector &v, const ElementGeometry &g, int t) {
  const Mesh &mesh = *v.space.mesh;
  switch (v.space.k) {
    case 0: {
      const auto &ids = mesh.triangle(t).v;
      return v.values[ids[0]] * g.grad[0] + v.values[ids[1]] * g.grad[1] + v.values[ids[2]] * g.grad[2];
    }
    case 1: {
      double rot = 0.0;
      for (int i = 0; i < 3; ++i) rot += mesh.triangle_edge_sign(t, i) * v.values[mesh.triangle_edge(t, i)] * g.whitney_rot(i);
      return scalar_proxy(rot);
    }
    default: return Proxy::Zero();
  }
}

/// Integer coboundary matrix: D_0 (edges x vertices) or D_1 (triangles x edges).
inline SparseMatrix derivative_matrix(const FormSpace &space) {
  const Mesh &mesh = *space.mesh;
  std::vector<Triplet> trip;
  if (space.k == 0) {
    SparseMatrix D(mesh.num_edges(), mesh.num_vertices());
    for (int e = 0; e < mesh.num_edges(); ++e) {
      trip.emplace_back(e, mesh.edge(e).v[0], -1.0);
      trip.emplace_back(e, mesh.edge(e).v[1], 1.0);
    }
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
  }
  if (space.k == 1) {
    SparseMatrix D(mesh.num_triangles(), mesh.num_edges());
    for (int t = 0; t < mesh.num_triangles(); ++t)
      for (int i = 0; i < 3; ++i) trip.emplace_back(t, mesh.triangle_edge(t, i), mesh.triangle_edge_sign(t, i));
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
  }
  throw InputError("no higher form space: the exterior derivative of a 2-form vanishes in 2D");
}

/// Exterior derivative in coefficient coordinates: D_0 itself for k = 0, and
/// diag(1/|K|) D_1 for k = 1 because 2-form coefficients are element means.
inline SparseMatrix exterior_derivative_operator(const FormSpace &space) {
  SparseMatrix D = derivative_matrix(space);
  if (space.k == 1) {
    Eigen::VectorXd inv_area(space.mesh->num_triangles());
    for (int t = 0; t < space.mesh->num_triangles(); ++t) inv_area[t] = 1.0 / space.mesh->area(t);
    D = inv_area.asDiagonal() * D;
  }
  return D;
}

inline SparseMatrix mass_matrix(const FormSpace &space) {
  const Mesh &mesh = *space.mesh;
  const int n = space.ndof();
  std::vector<Triplet> trip;
  if (space.k == 2) {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double a = mesh.area(t);
      if (!(a > 0.0)) throw GeometryError("degenerate triangle in mass matrix");
      trip.emplace_back(t, t, a);
    }
  } else {
    trip.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const ElementGeometry g(mesh, t);
      Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
      for (const auto &q : quadrature::triangle_rule()) {
        std::array<Vec2, 3> phi;
        for (int i = 0; i < 3; ++i)
          phi[i] = space.k == 0 ? scalar_proxy(q.bary[i]) : Vec2(mesh.triangle_edge_sign(t, i) * g.whitney(i, q.bary));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) local(i, j) += q.weight * g.area * phi[i].dot(phi[j]);
      }
      std::array<int, 3> dof;
      for (int i = 0; i < 3; ++i) dof[i] = space.k == 0 ? mesh.triangle(t).v[i] : mesh.triangle_edge(t, i);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.emplace_back(dof[i], dof[j], local(i, j));
    }
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

/// Canonical interpolation: vertex values, edge circulations (2-point Gauss),
/// element means (6-point rule).
inline CoefficientVector interpolate(const FormSpace &space, const AnalyticForm &g) {
  if (g.k != space.k) throw InputError("interpolate: form degree mismatch");
  const Mesh &mesh = *space.mesh;
  Eigen::VectorXd values(space.ndof());
  if (space.k == 0) {
    for (int i = 0; i < mesh.num_vertices(); ++i) values[i] = g(mesh.vertex(i))[0];
  } else if (space.k == 1) {
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Vec2 a = mesh.vertex(mesh.edge(e).v[0]);
      const Vec2 t = mesh.edge_tangent(e);
      double s = 0.0;
      for (const auto &q : quadrature::edge_rule2()) s += q.weight * g(a + q.s * t).dot(t);
      values[e] = s;
    }
  } else {
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const ElementGeometry geo(mesh, t);
      double s = 0.0;
      for (const auto &q : quadrature::triangle_rule()) s += q.weight * g(geo.point(q.bary))[0];
      values[t] = s;
    }
  }
  return {space, std::move(values)};
}

/// Load vector <f, phi_i> by the 6-point rule.
inline Eigen::VectorXd load_vector(const FormSpace &space, const AnalyticForm &f) {
  if (f.k != space.k) throw InputError("load_vector: form degree mismatch");
  const Mesh &mesh = *space.mesh;
  Eigen::VectorXd F = Eigen::VectorXd::Zero(space.ndof());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry g(mesh, t);
    for (const auto &q : quadrature::triangle_rule()) {
      const Proxy fx = f(g.point(q.bary));
      const double w = q.weight * g.area;
      if (space.k == 0) {
        for (int i = 0; i < 3; ++i) F[mesh.triangle(t).v[i]] += w * fx[0] * q.bary[i];
      } else if (space.k == 1) {
        for (int i = 0; i < 3; ++i)
          F[mesh.triangle_edge(t, i)] += w * mesh.triangle_edge_sign(t, i) * fx.dot(g.whitney(i, q.bary));
      } else {
        F[t] += w * fx[0];
      }
    }
  }
  return F;
}

/// delta v on each element: -div for k = 1 (a scalar), the rotated gradient
/// for k = 2 (a vector, zero inside elements for piecewise constants).
inline std::vector<Proxy> elementwise_coderivative(const CoefficientVector &v) {
  const Mesh &mesh = *v.space.mesh;
  if (v.space.k == 0) throw InputError("coderivative of a 0-form maps to the zero space");
  std::vector<Proxy> out(mesh.num_triangles(), Proxy::Zero());
  if (v.space.k == 2) return out;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const ElementGeometry g(mesh, t);
    double div = 0.0;
    for (int i = 0; i < 3; ++i) div += mesh.triangle_edge_sign(t, i) * v.values[mesh.triangle_edge(t, i)] * g.whitney_div(i);
    out[t] = scalar_proxy(-div);
  }
  return out;
}

/// An elementwise-smooth k-form: eval(t, x) is the proxy of its restriction to triangle t.
struct PiecewiseForm {
  int k = 0;
  std::function<Proxy(int, const Vec2 &)> eval;

  Proxy operator()(int t, const Vec2 &x) const { return eval(t, x); }
};

inline PiecewiseForm piecewise(const AnalyticForm &g) {
  return {g.k, [g](int, const Vec2 &x) { return g(x); }};
}

inline PiecewiseForm piecewise(const CoefficientVector &v) {
  return {v.space.k, [v](int t, const Vec2 &x) { return evaluate_at(v, t, x); }};
}

inline PiecewiseForm operator-(const PiecewiseForm &a, const PiecewiseForm &b) {
  if (a.k != b.k) throw InputError("form degree mismatch");
  return {a.k, [a, b](int t, const Vec2 &x) -> Proxy { return a(t, x) - b(t, x); }};
}

inline PiecewiseForm operator+(const PiecewiseForm &a, const PiecewiseForm &b) {
  if (a.k != b.k) throw InputError("form degree mismatch");
  return {a.k, [a, b](int t, const Vec2 &x) -> Proxy { return a(t, x) + b(t, x); }};
}

/// Points of the 3-point edge rule, in stored orientation.
inline std::array<Vec2, 3> edge_points(const Mesh &mesh, int e) {
  const Vec2 a = mesh.vertex(mesh.edge(e).v[0]);
  const Vec2 t = mesh.edge_tangent(e);
  std::array<Vec2, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = a + quadrature::edge_rule()[i].s * t;
  return out;
}

/// Trace of tr * w on one side of edge e: w . n_e for k = 1, the scalar for k = 2.
inline double trace_star(const Proxy &w, int k, const Vec2 &normal) { return k == 1 ? w.dot(normal) : w[0]; }

/// [[tr * w]] at the edge quadrature points: value on the plus side minus value
/// on the minus side, a missing side counting as zero. On boundary edges this
/// is the outward one-sided trace.
inline std::array<double, 3> trace_star_jump(const PiecewiseForm &w, const Mesh &mesh, int e) {
  if (e < 0 || e >= mesh.num_edges()) throw InputError("edge id out of range: " + std::to_string(e));
  if (w.k != 1 && w.k != 2) throw InputError("trace_star_jump needs a 1-form or 2-form");
  const Edge &edge = mesh.edge(e);
  const Vec2 n = mesh.edge_normal(e);
  const auto pts = edge_points(mesh, e);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    double v = 0.0;
    if (edge.plus >= 0) v += trace_star(w(edge.plus, pts[i]), w.k, n);
    if (edge.minus >= 0) v -= trace_star(w(edge.minus, pts[i]), w.k, n);
    out[i] = v;
  }
  return out;
}

/// Trace of a (k-1)-form on edge e seen from triangle t, relative to the
/// stored edge orientation: the scalar for k-1 = 0, w . t_e for k-1 = 1.
inline std::array<double, 3> edge_trace(const PiecewiseForm &w, const Mesh &mesh, int e, int t) {
  const Vec2 tangent = mesh.edge_tangent(e).normalized();
  const auto pts = edge_points(mesh, e);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const Proxy v = w(t, pts[i]);
    out[i] = w.k == 1 ? v.dot(tangent) : v[0];
  }
  return out;
}

struct FormNorms {
  double l2 = 0.0;
  double d_l2 = 0.0;
  double h_lambda() const { return std::sqrt(l2 * l2 + d_l2 * d_l2); }
};

/// ||v - ref|| and ||d(v - ref)|| by the 6-point rule.
inline FormNorms norms(const CoefficientVector &v, const AnalyticForm &reference) {
  if (reference.k != v.space.k) throw InputError("norms: form degree mismatch");
  const Mesh &mesh = *v.space.mesh;
  const AnalyticForm dref = v.space.k < 2 ? reference.exterior_derivative() : AnalyticForm::zero(3);
  std::vector<double> l2(mesh.num_triangles()), dl2(mesh.num_triangles());
  parallel_for(mesh.num_triangles(), [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    const ElementGeometry g(mesh, t);
    const Proxy dv = element_derivative(v, g, t);
    double a = 0.0, b = 0.0;
    for (const auto &q : quadrature::triangle_rule()) {
      const Vec2 x = g.point(q.bary);
      a += q.weight * (evaluate(v, g, t, q.bary) - reference(x)).squaredNorm();
      if (v.space.k < 2) b += q.weight * (dv - dref(x)).squaredNorm();
    }
    l2[t] = a * g.area;
    dl2[t] = b * g.area;
  });
  FormNorms out;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    out.l2 += l2[t];
    out.d_l2 += dl2[t];
  }
  out.l2 = std::sqrt(out.l2);
  out.d_l2 = std::sqrt(out.d_l2);
  return out;
}

inline double mass_norm(const SparseMatrix &M, const Eigen::VectorXd &v) { return std::sqrt(std::max(0.0, v.dot(M * v))); }

/// Exact transfer of a discrete form from a coarse mesh to a nested fine mesh.
/// ancestor[f] is the coarse triangle containing fine triangle f.
inline CoefficientVector prolong(const CoefficientVector &coarse, const MeshPtr &fine, std::span<const int> ancestor) {
  const Mesh &cm = *coarse.space.mesh;
  const Mesh &fm = *fine;
  if (static_cast<int>(ancestor.size()) != fm.num_triangles()) throw InputError("prolong: ancestor map size mismatch");
  const FormSpace space(coarse.space.k, fine);
  Eigen::VectorXd out(space.ndof());
  for (int f = 0; f < fm.num_triangles(); ++f) {
    const int c = ancestor[f];
    if (c < 0 || c >= cm.num_triangles()) throw InputError("prolong: ancestor id out of range");
    const ElementGeometry g(cm, c);
    const Vec2 centroid = (fm.vertex(fm.triangle(f).v[0]) + fm.vertex(fm.triangle(f).v[1]) + fm.vertex(fm.triangle(f).v[2])) / 3.0;
    const auto bary = g.barycentric(centroid);
    if (*std::min_element(bary.begin(), bary.end()) < -1e-10) throw GeometryError("prolong: meshes are not nested");
  }
  if (space.k == 0) {
    const auto &vt = fm.vertex_triangles();
    for (int i = 0; i < fm.num_vertices(); ++i) out[i] = evaluate_at(coarse, ancestor[vt[i].front()], fm.vertex(i))[0];
  } else if (space.k == 1) {
    for (int e = 0; e < fm.num_edges(); ++e) {
      const int c = ancestor[fm.edge(e).any_triangle()];
      const Vec2 mid = 0.5 * (fm.vertex(fm.edge(e).v[0]) + fm.vertex(fm.edge(e).v[1]));
      out[e] = evaluate_at(coarse, c, mid).dot(fm.edge_tangent(e));
    }
  } else {
    for (int f = 0; f < fm.num_triangles(); ++f) out[f] = coarse.values[ancestor[f]];
  }
  return {space, std::move(out)};
}

/// One coefficient per line, preceded by a "k ndof" header line.
inline void write_coefficients_csv(std::ostream &os, const CoefficientVector &v) {
  os.imbue(std::locale::classic());
  os << "# k=" << v.space.k << " ndof=" << v.space.ndof() << "\n";
  os << "index,value\n";
  os.precision(17);
  for (int i = 0; i < v.values.size(); ++i) os << i << ',' << v.values[i] << '\n';
}

inline CoefficientVector read_coefficients_csv(std::istream &is, const FormSpace &space) {
  is.imbue(std::locale::classic());
  std::string line;
  Eigen::VectorXd values = Eigen::VectorXd::Zero(space.ndof());
  std::vector<char> seen(space.ndof(), 0);
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    int i;
    char comma;
    double x;
    if (!(ls >> i >> comma >> x) || comma != ',') throw InputError("malformed coefficient line: " + line);
    if (i < 0 || i >= space.ndof()) throw InputError("coefficient index out of range");
    values[i] = x;
    seen[i] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw InputError("coefficient file misses entries");
  return {space, std::move(values)};
}

}  // namespace hodgefem
