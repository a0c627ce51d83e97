// SPDX-License-Identifier: Apache-2.0
#pragma once

// Residual indicators for the mixed Hodge Laplacian with lowest-order spaces.
// Every field stores squared element values eta^2(K). Edge terms integrate the
// whole element boundary, so an interior edge contributes to both neighbours.

#include "hodgefem/solver.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace hodgefem {

enum class Flavor { dsigma, sigma, p, du, osc };

inline const char *flavor_name(Flavor f) {
  switch (f) {
    case Flavor::dsigma: return "dsigma";
    case Flavor::sigma: return "sigma";
    case Flavor::p: return "p";
    case Flavor::du: return "du";
    default: return "osc";
  }
}

struct IndicatorField {
  Flavor flavor = Flavor::sigma;
  int k = 0;
  MeshPtr mesh;
  std::vector<double> values;  // squared indicators
  std::string warning;

  double total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  double eta() const { return std::sqrt(total()); }
  double sum_over(std::span<const int> ids) const {
    double s = 0.0;
    for (int t : ids) s += values.at(t);
    return s;
  }
};

/// Exact (sigma, u, p) of a manufactured problem.
struct ExactSolution {
  AnalyticForm sigma;
  AnalyticForm u;
  AnalyticForm p;
};

namespace detail {

struct Moments {
  double full = 0.0;   // integral of |g|^2
  double fluct = 0.0;  // integral of |g - mean g|^2, same quadrature points
};

template <typename G>
Moments volume_moments(const ElementGeometry &geo, G &&value) {
  std::array<Proxy, 6> v;
  Proxy mean = Proxy::Zero();
  const auto &rule = quadrature::triangle_rule();
  for (std::size_t q = 0; q < rule.size(); ++q) {
    v[q] = value(rule[q].bary, geo.point(rule[q].bary));
    mean += rule[q].weight * v[q];
  }
  Moments m;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    m.full += rule[q].weight * v[q].squaredNorm();
    m.fluct += rule[q].weight * (v[q] - mean).squaredNorm();
  }
  m.full *= geo.area;
  m.fluct *= geo.area;
  return m;
}

/// Jump of tr * (side value) across edge e; side(t, x) returns the proxy on triangle t.
template <typename Side>
Moments edge_jump_moments(const Mesh &mesh, int e, int form_k, Side &&side) {
  const Edge &edge = mesh.edge(e);
  const Vec2 n = mesh.edge_normal(e);
  const auto pts = edge_points(mesh, e);
  const auto &rule = quadrature::edge_rule();
  std::array<double, 3> j{};
  double mean = 0.0;
  for (int i = 0; i < 3; ++i) {
    double v = 0.0;
    if (edge.plus >= 0) v += trace_star(side(edge.plus, pts[i]), form_k, n);
    if (edge.minus >= 0) v -= trace_star(side(edge.minus, pts[i]), form_k, n);
    j[i] = v;
    mean += rule[i].weight * v;
  }
  Moments m;
  for (int i = 0; i < 3; ++i) {
    m.full += rule[i].weight * j[i] * j[i];
    m.fluct += rule[i].weight * (j[i] - mean) * (j[i] - mean);
  }
  const double len = mesh.edge_length(e);
  m.full *= len;
  m.fluct *= len;
  return m;
}

template <typename Side>
std::vector<Moments> all_edge_moments(const Mesh &mesh, int form_k, Side &&side) {
  std::vector<Moments> out(mesh.num_edges());
  parallel_for(mesh.num_edges(), [&](std::size_t e) { out[e] = edge_jump_moments(mesh, static_cast<int>(e), form_k, side); });
  return out;
}

inline double boundary_sum(const Mesh &mesh, int t, const std::vector<Moments> &edges, bool fluct) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Moments &m = edges[mesh.triangle_edge(t, i)];
    s += fluct ? m.fluct : m.full;
  }
  return s;
}

inline IndicatorField make_field(Flavor flavor, const MixedSolution &sol) {
  IndicatorField out;
  out.flavor = flavor;
  out.k = sol.k;
  out.mesh = sol.u.space.mesh;
  out.values.assign(out.mesh->num_triangles(), 0.0);
  return out;
}

inline void require_solution(const MixedSolution &sol, const AnalyticForm *f) {
  if (!sol.u.space.mesh) throw InputError("indicator needs a solved MixedSolution");
  if (sol.k < 1 || sol.k > 2) throw InputError("indicators are defined for k = 1 and k = 2");
  if (f && f->k != sol.k) throw InputError("load degree does not match the solution");
}

inline std::vector<Vec2> element_gradients(const CoefficientVector &v) {
  const Mesh &mesh = *v.space.mesh;
  std::vector<Vec2> out(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) out[t] = element_derivative(v, ElementGeometry(mesh, t), t);
  return out;
}

/// Volume and edge moments of delta(f - d sigma_h) and [[tr *(f - d sigma_h)]] for k = 1.
/// d sigma_h is elementwise constant, so delta(d sigma_h) vanishes inside each element.
struct DsigmaTerms {
  std::vector<Moments> volume;
  std::vector<Moments> edges;
};

inline DsigmaTerms dsigma_terms(const MixedSolution &sol, const AnalyticForm &f) {
  const Mesh &mesh = *sol.u.space.mesh;
  const std::vector<Vec2> grad = element_gradients(sol.sigma);
  const AnalyticForm df = f.coderivative();
  DsigmaTerms out;
  out.volume.resize(mesh.num_triangles());
  parallel_for(mesh.num_triangles(), [&](std::size_t t) {
    const ElementGeometry geo(mesh, static_cast<int>(t));
    out.volume[t] = volume_moments(geo, [&](const auto &, const Vec2 &x) { return df(x); });
  });
  out.edges = all_edge_moments(mesh, 1, [&](int t, const Vec2 &x) -> Proxy { return f(x) - grad[t]; });
  return out;
}

}  // namespace detail

/// eta_dsigma^2(K) = h^2 ||delta(f - d sigma_h)||_K^2 + h ||[[tr *(f - d sigma_h)]]||_{dK}^2, k = 1.
inline IndicatorField eta_dsigma(const MixedSolution &sol, const AnalyticForm &f) {
  detail::require_solution(sol, &f);
  if (sol.k == 2) throw InputError("eta_dsigma is undefined for k = n; the data term of eta_sigma replaces it");
  const Mesh &mesh = *sol.u.space.mesh;
  const detail::DsigmaTerms terms = detail::dsigma_terms(sol, f);
  IndicatorField out = detail::make_field(Flavor::dsigma, sol);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double h = mesh.h(t);
    out.values[t] = h * h * terms.volume[t].full + h * detail::boundary_sum(mesh, t, terms.edges, false);
  }
  return out;
}

/// k = 1: eta_sigma = eta_dsigma. k = 2: h^2 ||delta sigma_h||^2 + h ||[[tr * sigma_h]]||^2 + ||f - f_T||^2.
inline IndicatorField eta_sigma(const MixedSolution &sol, const AnalyticForm &f) {
  detail::require_solution(sol, &f);
  if (sol.k == 1) {
    IndicatorField out = eta_dsigma(sol, f);
    out.flavor = Flavor::sigma;
    return out;
  }
  const Mesh &mesh = *sol.u.space.mesh;
  const std::vector<Proxy> delta = elementwise_coderivative(sol.sigma);
  const CoefficientVector &sigma = sol.sigma;
  const auto edges = detail::all_edge_moments(mesh, 1, [&](int t, const Vec2 &x) { return evaluate_at(sigma, t, x); });
  IndicatorField out = detail::make_field(Flavor::sigma, sol);
  parallel_for(mesh.num_triangles(), [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    const ElementGeometry geo(mesh, t);
    const double h = mesh.h(t);
    const double data = detail::volume_moments(geo, [&](const auto &, const Vec2 &x) { return f(x); }).fluct;
    out.values[t] = h * h * geo.area * delta[t].squaredNorm() + h * detail::boundary_sum(mesh, t, edges, false) + data;
  });
  return out;
}

/// eta_p^2(K) = h^2 ||delta p_h||^2 + h ||[[tr * p_h]]||^2 + eta_dsigma^2(K), k = 1.
/// For k = n the field is identically zero and carries a warning.
inline IndicatorField eta_p(const MixedSolution &sol, const AnalyticForm &f) {
  detail::require_solution(sol, &f);
  IndicatorField out = detail::make_field(Flavor::p, sol);
  if (sol.k == 2) {
    out.warning = "eta_p is identically zero for k = n";
    return out;
  }
  const Mesh &mesh = *sol.u.space.mesh;
  const IndicatorField ds = eta_dsigma(sol, f);
  const std::vector<Proxy> delta = elementwise_coderivative(sol.p);
  const CoefficientVector &p = sol.p;
  const auto edges = detail::all_edge_moments(mesh, 1, [&](int t, const Vec2 &x) { return evaluate_at(p, t, x); });
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double h = mesh.h(t);
    out.values[t] = h * h * mesh.area(t) * delta[t].squaredNorm() + h * detail::boundary_sum(mesh, t, edges, false) + ds.values[t];
  }
  return out;
}

/// eta_du^2(K) = h^2 ||f - d sigma_h - delta du_h - p_h||^2 + h^2 ||delta(f - d sigma_h - p_h)||^2
///             + h ||[[tr *(f - d sigma_h - p_h)]]||^2 + h ||[[tr * du_h]]||^2, k = 1.
/// du_h is elementwise constant, so delta du_h vanishes inside elements.
inline IndicatorField eta_du(const MixedSolution &sol, const AnalyticForm &f) {
  detail::require_solution(sol, &f);
  if (sol.k == 2) throw InputError("eta_du is undefined for k = n");
  const Mesh &mesh = *sol.u.space.mesh;
  const std::vector<Vec2> grad = detail::element_gradients(sol.sigma);
  const std::vector<Vec2> rot = detail::element_gradients(sol.u);  // rot u_h in component 0
  const std::vector<Proxy> delta_p = elementwise_coderivative(sol.p);
  const AnalyticForm df = f.coderivative();
  const CoefficientVector &p = sol.p;

  const auto residual_edges = detail::all_edge_moments(
      mesh, 1, [&](int t, const Vec2 &x) -> Proxy { return f(x) - grad[t] - evaluate_at(p, t, x); });
  const auto rot_edges = detail::all_edge_moments(mesh, 2, [&](int t, const Vec2 &) -> Proxy { return rot[t]; });

  IndicatorField out = detail::make_field(Flavor::du, sol);
  parallel_for(mesh.num_triangles(), [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    const ElementGeometry geo(mesh, t);
    const double h = mesh.h(t);
    const double r0 = detail::volume_moments(geo, [&](const auto &bary, const Vec2 &x) -> Proxy {
                        return f(x) - grad[t] - evaluate(p, geo, t, bary);
                      }).full;
    const double r1 = detail::volume_moments(geo, [&](const auto &, const Vec2 &x) -> Proxy { return df(x) - delta_p[t]; }).full;
    out.values[t] = h * h * (r0 + r1) + h * (detail::boundary_sum(mesh, t, residual_edges, false) +
                                              detail::boundary_sum(mesh, t, rot_edges, false));
  });
  return out;
}

/// Data oscillation with elementwise and edgewise mean projections. Zero for k = n.
inline IndicatorField oscillation(const MixedSolution &sol, const AnalyticForm &f) {
  detail::require_solution(sol, &f);
  IndicatorField out = detail::make_field(Flavor::osc, sol);
  if (sol.k == 2) return out;
  const Mesh &mesh = *sol.u.space.mesh;
  const detail::DsigmaTerms terms = detail::dsigma_terms(sol, f);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double h = mesh.h(t);
    out.values[t] = h * h * terms.volume[t].fluct + h * detail::boundary_sum(mesh, t, terms.edges, true);
  }
  return out;
}

/// ||sigma_h - P sigma_H||^2 in the H Lambda norm of the fine mesh, over the coarse
/// eta_sigma^2 restricted to the vertex one-ring extension of the refined set.
struct LocalizedBound {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
  int extended_size = 0;
  bool violation = false;  // nonzero numerator with empty extended set
};

inline LocalizedBound localized_bound_ratio(const DiscreteComplex &fine_cx, const MixedSolution &coarse,
                                            const MixedSolution &fine, const RefinementRecord &record,
                                            const IndicatorField &coarse_eta_sigma) {
  const int k = fine.k;
  if (coarse.k != k || k < 1) throw InputError("localized bound: solutions of different problems");
  const Mesh &cm = *coarse.u.space.mesh;
  const CoefficientVector Ps = prolong(coarse.sigma, fine_cx.mesh, record.parent);
  const Eigen::VectorXd w = fine.sigma.values - Ps.values;
  const Eigen::VectorXd dw = fine_cx.d(k - 1) * w;
  LocalizedBound out;
  out.numerator = w.dot(fine_cx.mass(k - 1) * w) + dw.dot(fine_cx.mass(k) * dw);
  const std::vector<int> ext = extended_refined_set(record, cm);
  out.extended_size = static_cast<int>(ext.size());
  out.denominator = coarse_eta_sigma.sum_over(ext);
  if (out.denominator > 0.0) {
    out.ratio = out.numerator / out.denominator;
  } else {
    out.ratio = 0.0;
    out.violation = out.numerator > 1e-24;
  }
  return out;
}

struct Effectivity {
  std::optional<double> sigma;  // eta_sigma / ||sigma - sigma_h||_{H Lambda}
  std::optional<double> p;      // eta_p / ||p - p_h||
  std::optional<double> du;     // eta_du / ||d(u - u_h)||
  bool degenerate = false;
};

inline Effectivity effectivity(const MixedSolution &sol, const AnalyticForm &f, const ExactSolution &exact) {
  constexpr double kTiny = 1e-14;
  Effectivity out;
  const double es = norms(sol.sigma, exact.sigma).h_lambda();
  const double ets = eta_sigma(sol, f).eta();
  if (es > kTiny) out.sigma = ets / es;
  if (sol.k == 1) {
    const double ep = norms(sol.p, exact.p).l2;
    const double edu = norms(sol.u, exact.u).d_l2;
    if (ep > kTiny) out.p = eta_p(sol, f).eta() / ep;
    if (edu > kTiny) out.du = eta_du(sol, f).eta() / edu;
  }
  out.degenerate = !out.sigma && !out.p && !out.du;
  return out;
}

inline void write_indicator_csv(std::ostream &os, const IndicatorField &field) {
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "triangle," << flavor_name(field.flavor) << "\n";
  for (std::size_t t = 0; t < field.values.size(); ++t) os << t << ',' << field.values[t] << '\n';
}

}  // namespace hodgefem
