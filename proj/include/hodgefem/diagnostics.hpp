// SPDX-License-Identifier: Apache-2.0
#pragma once

// Invariant suites behind `hodgefem diagnose`. Every suite is deterministic for a
// given seed and its tolerances do not depend on the seed.

#include "hodgefem/adaptivity.hpp"

#include <bit>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace hodgefem {

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

using JumpFunction = std::function<std::array<double, 3>(const PiecewiseForm &, const Mesh &, int)>;

struct DiagnoseOptions {
  std::uint64_t seed = 1;
  JumpFunction jump = trace_star_jump;  // replaced by test fixtures for mutation checks
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(3) << std::scientific << x;
  return os.str();
}

inline int first_betti(const std::string &problem) { return problem == "annulus-k1" ? 1 : 0; }

inline std::vector<Mesh> sample_meshes(const Mesh &start, std::mt19937_64 &rng, int steps) {
  std::vector<Mesh> out{start};
  for (int s = 0; s < steps; ++s) {
    const Mesh &m = out.back();
    std::uniform_int_distribution<int> pick(0, m.num_triangles() - 1);
    std::vector<int> marked;
    for (int i = 0; i < std::max(1, m.num_triangles() / 4); ++i) marked.push_back(pick(rng));
    out.push_back(bisect_marked(m, marked).first);
  }
  out.push_back(uniform_refine(out.back()).first);
  return out;
}

inline SuiteResult complex_exactness_suite(std::mt19937_64 &rng) {
  SuiteResult r{"complex-exactness", true, {}};
  int count = 0;
  double worst = 0.0;
  for (const auto &name : problem_names()) {
    for (const Mesh &m : sample_meshes(*make_problem(name).initial_mesh, rng, 4)) {
      const auto mesh = std::make_shared<const Mesh>(m);
      if (!incidence_product_zero(m)) r.pass = false;
      const SparseMatrix P = exterior_derivative_operator(FormSpace(1, mesh)) * exterior_derivative_operator(FormSpace(0, mesh));
      for (int c = 0; c < P.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(P, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
      ++count;
    }
  }
  if (worst > 0.0) r.pass = false;
  r.detail = std::to_string(count) + " meshes, max |d d| = " + fmt(worst);
  return r;
}

/// <d w, mu>_K - <w, delta mu>_K - sum_e int_e tr w [[tr * mu]] on one triangle.
inline double ip_defect(const Mesh &mesh, const AnalyticForm &w, const AnalyticForm &mu, const JumpFunction &jump) {
  const AnalyticForm dw = w.exterior_derivative();
  const AnalyticForm dmu = mu.coderivative();
  const ElementGeometry g(mesh, 0);
  double lhs = 0.0, vol = 0.0;
  for (const auto &q : quadrature::triangle_rule()) {
    const Vec2 x = g.point(q.bary);
    lhs += q.weight * g.area * dw(x).dot(mu(x));
    vol += q.weight * g.area * w(x).dot(dmu(x));
  }
  double bnd = 0.0;
  const PiecewiseForm pw = piecewise(w), pmu = piecewise(mu);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto tr = edge_trace(pw, mesh, e, 0);
    const auto jm = jump(pmu, mesh, e);
    for (int i = 0; i < 3; ++i) bnd += mesh.edge_length(e) * quadrature::edge_rule()[i].weight * tr[i] * jm[i];
  }
  const double scale = std::abs(lhs) + std::abs(vol) + std::abs(bnd);
  return scale > 0.0 ? std::abs(lhs - vol - bnd) / scale : 0.0;
}

inline SuiteResult ip_identity_suite(std::mt19937_64 &rng, const JumpFunction &jump) {
  SuiteResult r{"ip-identity", true, {}};
  // (k-1, k) = (0, 1): polynomial scalar against polynomial vector field.
  const AnalyticForm w0 = AnalyticForm::scalar(0, [](const Vec2 &x) { return 1.0 + x.x() + 2.0 * x.x() * x.y() - x.y() * x.y(); })
                              .with_d(AnalyticForm::vector([](const Vec2 &x) { return Vec2(1.0 + 2.0 * x.y(), 2.0 * x.x() - 2.0 * x.y()); }));
  const AnalyticForm mu1 = AnalyticForm::vector([](const Vec2 &x) { return Vec2(x.x() * x.x() + x.y(), x.x() * x.y() - x.x()); })
                               .with_delta(AnalyticForm::scalar(0, [](const Vec2 &x) { return -3.0 * x.x(); }));
  // (1, 2): polynomial vector field against polynomial density.
  const AnalyticForm w1 = AnalyticForm::vector([](const Vec2 &x) { return Vec2(x.x() * x.y() + 1.0, x.x() * x.x() - x.y()); })
                              .with_d(AnalyticForm::scalar(2, [](const Vec2 &x) { return x.x(); }));
  const AnalyticForm mu2 = AnalyticForm::scalar(2, [](const Vec2 &x) { return x.x() * x.x() + x.x() * x.y() + x.y(); })
                               .with_delta(AnalyticForm::vector([](const Vec2 &x) { return Vec2(x.x() + 1.0, -(2.0 * x.x() + x.y())); }));
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  double worst01 = 0.0, worst12 = 0.0;
  for (int trial = 0; trial < 20;) {
    std::vector<Vec2> v = {Vec2(coord(rng), coord(rng)), Vec2(coord(rng), coord(rng)), Vec2(coord(rng), coord(rng))};
    if (std::abs(cross(v[1] - v[0], v[2] - v[0])) < 0.1) continue;
    const Mesh mesh(std::move(v), {{0, 1, 2}});
    worst01 = std::max(worst01, ip_defect(mesh, w0, mu1, jump));
    worst12 = std::max(worst12, ip_defect(mesh, w1, mu2, jump));
    ++trial;
  }
  r.pass = worst01 <= 1e-10 && worst12 <= 1e-10;
  r.detail = "(0,1) " + fmt(worst01) + ", (1,2) " + fmt(worst12) + " relative";
  return r;
}

inline SuiteResult harmonic_dimension_suite() {
  SuiteResult r{"harmonic-dimension", true, {}};
  std::ostringstream os;
  for (const auto &name : problem_names()) {
    const Mesh m0 = *make_problem(name).initial_mesh;
    for (const Mesh &m : {m0, uniform_refine(m0).first}) {
      const DiscreteComplex cx(std::make_shared<const Mesh>(m));
      const int expected[3] = {1, first_betti(name), 0};
      for (int k = 0; k < 3; ++k) {
        try {
          if (harmonic_basis(cx, k, expected[k]).dim() != expected[k]) throw DimensionError("dimension mismatch");
        } catch (const Error &e) {
          r.pass = false;
          os << name << " k=" << k << ": " << e.what() << "; ";
        }
      }
    }
  }
  r.detail = r.pass ? "Betti numbers 1/b1/0 on 8 meshes" : os.str();
  return r;
}

inline SuiteResult hodge_decomposition_suite(std::mt19937_64 &rng) {
  SuiteResult r{"hodge-decomposition", true, {}};
  std::normal_distribution<double> gauss;
  double cross_rel = 0.0, recon = 0.0;
  for (const auto &name : problem_names()) {
    const auto mesh = std::make_shared<const Mesh>(uniform_refine(*make_problem(name).initial_mesh).first);
    const DiscreteComplex cx(mesh);
    for (int k = 1; k <= 2; ++k) {
      const HarmonicBasis basis = harmonic_basis(cx, k, k == 1 ? first_betti(name) : 0);
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd v(cx.ndof(k));
        for (auto &x : v) x = gauss(rng);
        const HodgeDecomposition hd = hodge_decompose(cx, CoefficientVector(cx.space(k), v), basis);
        cross_rel = std::max(cross_rel, hd.max_cross_relative);
        recon = std::max(recon, hd.reconstruction);
      }
    }
  }
  r.pass = cross_rel <= 1e-10 && recon <= 1e-10;
  r.detail = "max cross " + fmt(cross_rel) + ", reconstruction " + fmt(recon);
  return r;
}

/// Minimal-cardinality Dorfler set by exhaustive search: smallest size, then largest
/// sum, then lexicographically smallest sorted ids.
inline std::vector<int> dorfler_oracle(const std::vector<double> &values, double theta) {
  const int n = static_cast<int>(values.size());
  double total = 0.0;
  for (double v : values) total += v;
  if (total == 0.0) return {};
  const double target = theta * theta * total;
  std::vector<int> best;
  int best_size = n + 1;
  double best_sum = -1.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int size = std::popcount(mask);
    if (size > best_size) continue;
    double sum = 0.0;
    std::vector<int> ids;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += values[i];
        ids.push_back(i);
      }
    if (sum < target) continue;
    if (size < best_size || sum > best_sum || (sum == best_sum && ids < best)) {
      best_size = size;
      best_sum = sum;
      best = std::move(ids);
    }
  }
  return best;
}

inline SuiteResult dorfler_suite(std::mt19937_64 &rng) {
  SuiteResult r{"dorfler-minimality", true, {}};
  std::uniform_int_distribution<int> len(1, 12), small(0, 6), big(0, (1 << 20) - 1), coin(0, 2);
  std::uniform_real_distribution<double> th(0.05, 0.95);
  int mismatches = 0, invalid = 0, scale_changes = 0;
  for (int c = 0; c < 1000; ++c) {
    const int n = len(rng);
    const bool ties = coin(rng) == 0;
    // Dyadic values keep every partial sum exact, so oracle and greedy agree bitwise on the threshold.
    std::vector<double> values(n);
    for (auto &v : values) v = (ties ? small(rng) : big(rng)) / 1024.0;
    const double theta = th(rng);
    const std::vector<int> got = dorfler_mark(values, theta);
    if (got != dorfler_oracle(values, theta)) ++mismatches;
    double total = 0.0, sum = 0.0;
    for (double v : values) total += v;
    for (int id : got) sum += values[id];
    if (total > 0.0 && sum < theta * theta * total) ++invalid;
    for (double scale : {0.5, 4.0, 1024.0}) {
      std::vector<double> scaled = values;
      for (auto &v : scaled) v *= scale;
      if (dorfler_mark(scaled, theta) != got) ++scale_changes;
    }
  }
  r.pass = mismatches == 0 && invalid == 0 && scale_changes == 0;
  r.detail = "1000 cases: " + std::to_string(mismatches) + " oracle mismatches, " + std::to_string(invalid) + " invalid, " +
             std::to_string(scale_changes) + " scale changes";
  return r;
}

inline SuiteResult fit_rate_suite(std::mt19937_64 &rng) {
  SuiteResult r{"fit-rate", true, {}};
  std::vector<double> N, exact, constant, noisy;
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (int i = 0; i < 12; ++i) {
    N.push_back(std::round(10.0 * std::pow(2.0, i)));
    exact.push_back(3.0 / std::sqrt(N.back()));
    constant.push_back(2.5);
    noisy.push_back(exact.back() * (1.0 + noise(rng)));
  }
  const double s_exact = fit_rate(N, exact), s_const = fit_rate(N, constant), s_noisy = fit_rate(N, noisy);
  r.pass = std::abs(s_exact - 0.5) <= 1e-12 && std::abs(s_const) <= 1e-12 && std::abs(s_noisy - 0.5) <= 0.02;
  r.detail = "exact " + fmt(std::abs(s_exact - 0.5)) + ", noisy " + fmt(std::abs(s_noisy - 0.5)) + " off 0.5";
  return r;
}

struct RunCheck {
  std::string problem;
  RunReport report;
};

inline std::vector<RunCheck> short_runs() {
  RunOptions o;
  o.reference = false;
  o.keep_indicators = true;
  auto run = [&](const std::string &name, Algorithm a, int steps) {
    MarkingParams p;
    p.max_steps = steps;
    p.tol = 1e-12;
    return RunCheck{name, run_adaptive(make_problem(name), a, p, o)};
  };
  return {run("square-k2", Algorithm::amfem2, 5), run("square-k1", Algorithm::amfem2, 5),
          run("lshape-k2", Algorithm::amfem2, 12), run("annulus-k1", Algorithm::amfem1, 6)};
}

inline SuiteResult oscillation_suite(const std::vector<RunCheck> &runs) {
  SuiteResult r{"oscillation-dominance", true, {}};
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto &rc : runs)
    for (const auto &s : rc.report.steps)
      for (std::size_t t = 0; t < s.ind_sigma.size(); ++t)
        worst = std::max(worst, std::sqrt(s.ind_osc[t]) - std::sqrt(s.ind_sigma[t]));
  r.pass = worst <= 1e-12;
  r.detail = "max osc(K) - eta_sigma(K) = " + fmt(worst);
  return r;
}

inline SuiteResult galerkin_suite(const std::vector<RunCheck> &runs) {
  SuiteResult r{"galerkin-residuals", true, {}};
  double worst = 0.0;
  bool marks = true;
  for (const auto &rc : runs)
    for (const auto &s : rc.report.steps) {
      worst = std::max({worst, s.solve_residual, s.residual_sigma, s.residual_u, s.residual_harmonic});
      marks = marks && s.marks_ok;
    }
  r.pass = worst <= 1e-9 && marks;
  r.detail = "max residual " + fmt(worst) + (marks ? ", markings hold" : ", marking violated");
  return r;
}

inline SuiteResult orthogonality_suite(const std::vector<RunCheck> &runs) {
  SuiteResult r{"orthogonality", true, {}};
  double pyth = 0.0, r1 = 0.0;
  int pairs = 0;
  for (const auto &rc : runs)
    for (const auto &s : rc.report.steps) {
      if (!s.ortho) continue;
      ++pairs;
      if (rc.report.k == 2) pyth = std::max(pyth, s.ortho->pythagoras);
      else r1 = std::max(r1, std::abs(s.ortho->r1) / s.ortho->scale);
    }
  r.pass = pairs > 0 && pyth <= 1e-12 && r1 <= 1e-7;
  r.detail = std::to_string(pairs) + " pairs, k=2 Pythagoras " + fmt(pyth) + ", k=1 |r1|/|d sigma|^2 " + fmt(r1);
  return r;
}

inline SuiteResult gap_suite(const std::vector<RunCheck> &runs) {
  SuiteResult r{"gap-symmetry", true, {}};
  double asym = 0.0, largest = 0.0;
  int pairs = 0;
  for (const auto &rc : runs) {
    if (rc.problem != "annulus-k1") continue;
    for (const auto &s : rc.report.steps) {
      if (!std::isfinite(s.gap)) continue;
      ++pairs;
      asym = std::max(asym, std::abs(s.gap_ab - s.gap_ba));
      largest = std::max(largest, s.gap);
    }
  }
  const GapPair unit = gap(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 1.0) / std::sqrt(2.0),
                           SparseMatrix(Eigen::MatrixXd::Identity(2, 2).sparseView()));
  const bool unit_ok = std::abs(unit.ab - std::sqrt(0.5)) <= 1e-12 && std::abs(unit.ba - std::sqrt(0.5)) <= 1e-12;
  r.pass = pairs > 0 && asym <= 1e-8 && largest < 1.0 && unit_ok;
  r.detail = std::to_string(pairs) + " annulus pairs, asymmetry " + fmt(asym) + ", max gap " + fmt(largest);
  return r;
}

inline SuiteResult localized_suite(const std::vector<RunCheck> &runs) {
  SuiteResult r{"localized-bound", true, {}};
  for (const auto &rc : runs) {
    if (rc.problem != "lshape-k2") continue;
    std::vector<double> ratios;
    bool finite = true;
    for (const auto &s : rc.report.steps)
      if (s.localized) {
        finite = finite && std::isfinite(s.localized->ratio) && !s.localized->violation;
        ratios.push_back(s.localized->ratio);
      }
    const double mx = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    const double med = median(ratios);
    r.pass = ratios.size() >= 5 && finite && mx <= 10.0 * med;
    r.detail = std::to_string(ratios.size()) + " pairs, max " + fmt(mx) + ", median " + fmt(med);
  }
  return r;
}

}  // namespace detail

inline std::vector<SuiteResult> run_diagnostics(const DiagnoseOptions &options = {}) {
  std::mt19937_64 rng(options.seed);
  std::vector<SuiteResult> out;
  auto guarded = [&](const std::string &name, auto &&suite) {
    try {
      out.push_back(suite());
    } catch (const std::exception &e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  guarded("complex-exactness", [&] { return detail::complex_exactness_suite(rng); });
  guarded("ip-identity", [&] { return detail::ip_identity_suite(rng, options.jump); });
  guarded("harmonic-dimension", [&] { return detail::harmonic_dimension_suite(); });
  guarded("hodge-decomposition", [&] { return detail::hodge_decomposition_suite(rng); });
  guarded("dorfler-minimality", [&] { return detail::dorfler_suite(rng); });
  guarded("fit-rate", [&] { return detail::fit_rate_suite(rng); });
  std::vector<detail::RunCheck> runs;
  try {
    runs = detail::short_runs();
  } catch (const std::exception &e) {
    out.push_back({"adaptive-runs", false, std::string("exception: ") + e.what()});
    return out;
  }
  guarded("galerkin-residuals", [&] { return detail::galerkin_suite(runs); });
  guarded("oscillation-dominance", [&] { return detail::oscillation_suite(runs); });
  guarded("orthogonality", [&] { return detail::orthogonality_suite(runs); });
  guarded("gap-symmetry", [&] { return detail::gap_suite(runs); });
  guarded("localized-bound", [&] { return detail::localized_suite(runs); });
  return out;
}

inline bool all_passed(const std::vector<SuiteResult> &results) {
  return std::all_of(results.begin(), results.end(), [](const SuiteResult &r) { return r.pass; });
}

inline void print_table(std::ostream &os, const std::vector<SuiteResult> &results) {
  os << std::left << std::setw(24) << "suite" << std::setw(7) << "result" << "detail\n";
  for (const auto &r : results) os << std::setw(24) << r.name << std::setw(7) << (r.pass ? "PASS" : "FAIL") << r.detail << '\n';
}

}  // namespace hodgefem
