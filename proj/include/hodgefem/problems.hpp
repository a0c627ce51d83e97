// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/estimators.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hodgefem {

struct ProblemSpec {
  std::string name;
  int k = 1;
  MeshPtr initial_mesh;
  AnalyticForm f;
  std::optional<ExactSolution> exact;
  int expected_betti = 0;
  std::string notes;
};

/// |f - d sigma - delta d u - p| at x for a problem with exact data.
inline double strong_residual(const ProblemSpec &problem, const Vec2 &x) {
  if (!problem.exact) throw InputError("strong residual needs an exact solution");
  const ExactSolution &ex = *problem.exact;
  Proxy r = problem.f(x) - ex.sigma.exterior_derivative()(x) - ex.p(x);
  if (problem.k < 2) r -= ex.u.exterior_derivative().coderivative()(x);
  return r.norm();
}

namespace detail {

inline constexpr double kPi = std::numbers::pi;

/// Rejects a problem whose exact data is inconsistent at sampled interior points.
inline void check_consistency(const ProblemSpec &problem, double tol) {
  if (!problem.exact) return;
  const Mesh &mesh = *problem.initial_mesh;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(mesh.num_triangles()));
    double a = unit(rng), b = unit(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const ElementGeometry g(mesh, t);
    const Vec2 x = g.point({1.0 - a - b, a, b});
    const double r = strong_residual(problem, x);
    if (!(r <= tol)) throw InputError(problem.name + ": exact data fails the strong-form check, residual " + std::to_string(r));
  }
}

}  // namespace detail

/// Unit square, 8 triangles with both diagonals through the centre of each quadrant pattern.
inline Mesh union_jack_square() {
  std::vector<Vec2> v;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) v.emplace_back(0.5 * i, 0.5 * j);
  // Vertex (i, j) has id 3 j + i; the centre is 4.
  std::vector<std::array<int, 3>> t = {{0, 1, 4}, {0, 4, 3}, {1, 2, 4}, {2, 5, 4},
                                       {3, 4, 6}, {4, 7, 6}, {4, 5, 8}, {4, 8, 7}};
  return Mesh::with_longest_edge_marking(std::move(v), std::move(t));
}

/// k = 2 on the unit square: u = sin(pi x) sin(pi y), sigma = delta u, f = 2 pi^2 u.
inline ProblemSpec make_square_smooth_k2() {
  using detail::kPi;
  ProblemSpec p;
  p.name = "square-k2";
  p.k = 2;
  p.initial_mesh = std::make_shared<const Mesh>(union_jack_square());
  auto u_fn = [](const Vec2 &x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); };
  auto f_fn = [u_fn](const Vec2 &x) { return 2.0 * kPi * kPi * u_fn(x); };
  auto sigma_fn = [](const Vec2 &x) {
    return Vec2(kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()), -kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()));
  };
  auto delta_f = [](const Vec2 &x) {
    const double c = 2.0 * kPi * kPi * kPi;
    return Vec2(c * std::sin(kPi * x.x()) * std::cos(kPi * x.y()), -c * std::cos(kPi * x.x()) * std::sin(kPi * x.y()));
  };
  p.f = AnalyticForm::scalar(2, f_fn).with_delta(AnalyticForm::vector(delta_f));
  ExactSolution ex;
  ex.sigma = AnalyticForm::vector(sigma_fn).with_d(AnalyticForm::scalar(2, f_fn)).with_delta(AnalyticForm::scalar(0, [](const Vec2 &) { return 0.0; }));
  ex.u = AnalyticForm::scalar(2, u_fn).with_delta(AnalyticForm::vector(sigma_fn));
  ex.p = AnalyticForm::zero(2);
  p.exact = std::move(ex);
  p.expected_betti = 0;
  p.notes = "u vanishes on the boundary; sigma = (d2 u, -d1 u); f = d sigma = -Laplace u";
  detail::check_consistency(p, 1e-8);
  return p;
}

namespace detail {

// G(t) = (t - t^2)^3 and its first three derivatives.
struct Flat {
  static double g(double t) { return t - t * t; }
  static double G0(double t) { return std::pow(g(t), 3); }
  static double G1(double t) { return 3.0 * g(t) * g(t) * (1.0 - 2.0 * t); }
  static double G2(double t) {
    const double gp = 1.0 - 2.0 * t;
    return 6.0 * g(t) * gp * gp - 6.0 * g(t) * g(t);
  }
  static double G3(double t) {
    const double gp = 1.0 - 2.0 * t;
    return 6.0 * gp * gp * gp - 36.0 * g(t) * gp;
  }
};

}  // namespace detail

/// k = 1 on the unit square: u = grad phi + rot-grad psi with phi = cos(pi x) cos(pi y)
/// and psi = [x(1-x) y(1-y)]^3; sigma = -Laplace phi, f = d sigma + delta d u.
inline ProblemSpec make_square_smooth_k1() {
  using detail::Flat;
  using detail::kPi;
  ProblemSpec p;
  p.name = "square-k1";
  p.k = 1;
  p.initial_mesh = std::make_shared<const Mesh>(union_jack_square());
  auto sigma_fn = [](const Vec2 &x) { return 2.0 * kPi * kPi * std::cos(kPi * x.x()) * std::cos(kPi * x.y()); };
  auto dsigma_fn = [](const Vec2 &x) {
    const double c = -2.0 * kPi * kPi * kPi;
    return Vec2(c * std::sin(kPi * x.x()) * std::cos(kPi * x.y()), c * std::cos(kPi * x.x()) * std::sin(kPi * x.y()));
  };
  auto u_fn = [](const Vec2 &x) {
    const double a = x.x(), b = x.y();
    return Vec2(-kPi * std::sin(kPi * a) * std::cos(kPi * b) - Flat::G0(a) * Flat::G1(b),
                -kPi * std::cos(kPi * a) * std::sin(kPi * b) + Flat::G1(a) * Flat::G0(b));
  };
  auto du_fn = [](const Vec2 &x) { return Flat::G2(x.x()) * Flat::G0(x.y()) + Flat::G0(x.x()) * Flat::G2(x.y()); };
  auto delta_du_fn = [](const Vec2 &x) {
    const double a = x.x(), b = x.y();
    const double dx = Flat::G3(a) * Flat::G0(b) + Flat::G1(a) * Flat::G2(b);
    const double dy = Flat::G2(a) * Flat::G1(b) + Flat::G0(a) * Flat::G3(b);
    return Vec2(dy, -dx);
  };
  auto f_fn = [dsigma_fn, delta_du_fn](const Vec2 &x) -> Vec2 { return dsigma_fn(x) + delta_du_fn(x); };
  auto delta_f_fn = [](const Vec2 &x) { return 4.0 * std::pow(kPi, 4) * std::cos(kPi * x.x()) * std::cos(kPi * x.y()); };

  p.f = AnalyticForm::vector(f_fn).with_delta(AnalyticForm::scalar(0, delta_f_fn));
  ExactSolution ex;
  ex.sigma = AnalyticForm::scalar(0, sigma_fn).with_d(AnalyticForm::vector(dsigma_fn));
  ex.u = AnalyticForm::vector(u_fn)
             .with_d(AnalyticForm::scalar(2, du_fn).with_delta(AnalyticForm::vector(delta_du_fn)))
             .with_delta(AnalyticForm::scalar(0, sigma_fn));
  ex.p = AnalyticForm::zero(1);
  p.exact = std::move(ex);
  p.expected_betti = 0;
  p.notes = "u . n = 0 and rot u = 0 on the boundary; f derived symbolically";
  detail::check_consistency(p, 1e-8);
  return p;
}

/// (-1,1)^2 minus [0,1] x [-1,0]; every square cell is split by a diagonal through the origin.
inline Mesh lshape_mesh() {
  std::vector<Vec2> v = {{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}};
  std::vector<std::array<int, 3>> t = {{0, 1, 2}, {0, 2, 7}, {7, 2, 6}, {2, 5, 6}, {2, 3, 4}, {2, 4, 5}};
  return Mesh::with_longest_edge_marking(std::move(v), std::move(t));
}

inline ProblemSpec make_lshape_k2() {
  ProblemSpec p;
  p.name = "lshape-k2";
  p.k = 2;
  p.initial_mesh = std::make_shared<const Mesh>(lshape_mesh());
  p.f = AnalyticForm::scalar(2, [](const Vec2 &) { return 1.0; })
            .with_delta(AnalyticForm::vector([](const Vec2 &) { return Vec2(0.0, 0.0); }));
  p.expected_betti = 0;
  p.notes = "f = 1; reentrant corner of angle 3 pi / 2 at the origin; errors against a reference solution";
  return p;
}

/// (-2,2)^2 minus [-1,1]^2: outer and inner squares sampled at corners and edge
/// midpoints, each quad split by the diagonal from an outer midpoint to an inner corner.
inline Mesh annulus_mesh() {
  std::vector<Vec2> v;
  const std::array<Vec2, 8> ring = {Vec2(1, 0), Vec2(1, 1), Vec2(0, 1), Vec2(-1, 1),
                                    Vec2(-1, 0), Vec2(-1, -1), Vec2(0, -1), Vec2(1, -1)};
  for (const auto &r : ring) v.push_back(2.0 * r);  // outer: ids 0..7
  for (const auto &r : ring) v.push_back(r);        // inner: ids 8..15
  std::vector<std::array<int, 3>> t;
  for (int i = 0; i < 8; ++i) {
    const int o0 = i, o1 = (i + 1) % 8, i0 = 8 + i, i1 = 8 + (i + 1) % 8;
    if (i % 2 == 0) {
      t.push_back({o0, o1, i1});
      t.push_back({o0, i1, i0});
    } else {
      t.push_back({o0, o1, i0});
      t.push_back({o1, i1, i0});
    }
  }
  return Mesh::with_longest_edge_marking(std::move(v), std::move(t));
}

inline ProblemSpec make_annulus_k1() {
  ProblemSpec p;
  p.name = "annulus-k1";
  p.k = 1;
  p.initial_mesh = std::make_shared<const Mesh>(annulus_mesh());
  auto f_fn = [](const Vec2 &x) -> Vec2 { return Vec2(-x.y(), x.x()) / x.squaredNorm(); };
  p.f = AnalyticForm::vector(f_fn)
            .with_d(AnalyticForm::scalar(2, [](const Vec2 &) { return 0.0; }))
            .with_delta(AnalyticForm::scalar(0, [](const Vec2 &) { return 0.0; }));
  p.expected_betti = 1;
  p.notes = "f = (-y, x) / |x|^2, circulation 2 pi around the hole; errors against a reference solution";
  return p;
}

inline std::vector<std::string> problem_names() { return {"square-k2", "square-k1", "lshape-k2", "annulus-k1"}; }

inline ProblemSpec make_problem(const std::string &name) {
  if (name == "square-k2") return make_square_smooth_k2();
  if (name == "square-k1") return make_square_smooth_k1();
  if (name == "lshape-k2") return make_lshape_k2();
  if (name == "annulus-k1") return make_annulus_k1();
  throw InputError("unknown problem: " + name);
}

/// Error norms of one discrete solution. Quantities undefined for the problem are NaN.
struct ErrorRecord {
  double sigma_l2 = std::nan("");
  double dsigma_l2 = std::nan("");
  double p = std::nan("");
  double du = std::nan("");

  double sigma_h_lambda() const { return std::sqrt(sigma_l2 * sigma_l2 + dsigma_l2 * dsigma_l2); }
};

inline ErrorRecord exact_error(const MixedSolution &sol, const ExactSolution &exact) {
  ErrorRecord e;
  const FormNorms s = norms(sol.sigma, exact.sigma);
  e.sigma_l2 = s.l2;
  e.dsigma_l2 = s.d_l2;
  e.p = norms(sol.p, exact.p).l2;
  e.du = sol.k < 2 ? norms(sol.u, exact.u).d_l2 : 0.0;
  return e;
}

/// Errors of sol against a reference solution on a nested finer mesh, in the
/// discrete norms of the reference complex. ancestor maps reference triangles
/// to triangles of sol's mesh.
inline ErrorRecord reference_error(const DiscreteComplex &ref_cx, const MixedSolution &sol, const MixedSolution &reference,
                                   std::span<const int> ancestor) {
  if (sol.k != reference.k) throw InputError("reference solution solves a different problem");
  const int k = sol.k;
  ErrorRecord e;
  const Eigen::VectorXd ws = prolong(sol.sigma, ref_cx.mesh, ancestor).values - reference.sigma.values;
  e.sigma_l2 = mass_norm(ref_cx.mass(k - 1), ws);
  e.dsigma_l2 = mass_norm(ref_cx.mass(k), ref_cx.d(k - 1) * ws);
  e.p = mass_norm(ref_cx.mass(k), prolong(sol.p, ref_cx.mesh, ancestor).values - reference.p.values);
  e.du = k < 2 ? mass_norm(ref_cx.mass(k + 1), ref_cx.d(k) * (prolong(sol.u, ref_cx.mesh, ancestor).values - reference.u.values)) : 0.0;
  return e;
}

}  // namespace hodgefem
