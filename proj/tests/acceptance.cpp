// SPDX-License-Identifier: Apache-2.0
// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "hodgefem/diagnostics.hpp"

#include <chrono>
#include <cstdio>
#include <random>

using namespace hodgefem;

namespace {

struct Run {
  std::string label;
  RunReport report;
  double seconds = 0.0;
};

int failures = 0;

void verdict(int id, bool pass, const std::string &detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) { return detail::fmt(x); }

Run execute(const std::string &label, const std::string &problem, Algorithm a, MarkingParams p, bool reference) {
  RunOptions o;
  o.reference = reference;
  o.keep_indicators = false;
  const auto t0 = std::chrono::steady_clock::now();
  Run r{label, run_adaptive(make_problem(problem), a, p, o), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "[%s] %zu steps, %d triangles, %.1f s\n", label.c_str(), r.report.steps.size(),
               r.report.steps.back().ntri, r.seconds);
  return r;
}

MarkingParams steps_only(int max_steps, double theta = 0.3) {
  MarkingParams p;
  p.theta = theta;
  p.tol = 1e-12;
  p.max_steps = max_steps;
  return p;
}

bool is_adaptive(const RunReport &r) { return r.algorithm != Algorithm::uniform; }

}  // namespace

int main() {
  // Step-0 estimator of the annulus problem fixes the AMFEM1 tolerance.
  MarkingParams a0;
  a0.max_steps = 0;
  a0.tol = 1e-12;
  const StepRecord annulus0 = execute("annulus-k1 step 0", "annulus-k1", Algorithm::amfem1, a0, false).report.steps[0];
  MarkingParams a1;
  a1.theta_sigma = a1.theta_p = a1.theta_du = 0.3;
  a1.tol = annulus0.eta / 20.0;
  a1.max_steps = 150;

  std::vector<Run> runs;
  runs.push_back(execute("square-k2 uniform", "square-k2", Algorithm::uniform, steps_only(5), false));
  runs.push_back(execute("square-k2 amfem2", "square-k2", Algorithm::amfem2, steps_only(20), false));
  runs.push_back(execute("square-k1 amfem2", "square-k1", Algorithm::amfem2, steps_only(20), false));
  runs.push_back(execute("lshape-k2 amfem2", "lshape-k2", Algorithm::amfem2, steps_only(60), false));
  runs.push_back(execute("lshape-k2 amfem2 reference", "lshape-k2", Algorithm::amfem2, steps_only(20), true));
  runs.push_back(execute("lshape-k2 uniform", "lshape-k2", Algorithm::uniform, steps_only(6), false));
  runs.push_back(execute("annulus-k1 amfem1", "annulus-k1", Algorithm::amfem1, a1, false));
  auto find = [&](const std::string &label) -> const Run & {
    for (const auto &r : runs)
      if (r.label == label) return r;
    throw std::logic_error("no run " + label);
  };

  // 1. d d = 0 with integer incidence matrices on every mesh.
  {
    int meshes = 0, bad = 0;
    for (const auto &r : runs)
      for (const auto &s : r.report.steps) {
        ++meshes;
        if (!s.complex_exact) ++bad;
      }
    verdict(1, bad == 0, std::to_string(meshes) + " meshes, " + std::to_string(bad) + " with D1 D0 != 0");
  }

  // 2. Hodge decomposition of 100 random vectors per benchmark mesh and degree.
  {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double cross = 0.0, recon = 0.0;
    int count = 0;
    for (const auto &name : problem_names()) {
      if (name == "square-k1") continue;  // same mesh as square-k2
      const ProblemSpec p = make_problem(name);
      for (int level = 0; level <= 2; level += 2) {
        Mesh m = *p.initial_mesh;
        for (int i = 0; i < level; ++i) m = uniform_refine(m).first;
        const DiscreteComplex cx(std::make_shared<const Mesh>(std::move(m)));
        for (int k = 0; k <= 2; ++k) {
          const int betti = k == 0 ? 1 : (k == 1 ? p.expected_betti : 0);
          const HarmonicBasis basis = harmonic_basis(cx, k, betti);
          for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd v(cx.ndof(k));
            for (auto &x : v) x = g(rng);
            const HodgeDecomposition h = hodge_decompose(cx, CoefficientVector(cx.space(k), v), basis);
            cross = std::max(cross, h.max_cross_relative);
            recon = std::max(recon, h.reconstruction);
            ++count;
          }
        }
      }
    }
    verdict(2, cross <= 1e-10 && recon <= 1e-10,
            std::to_string(count) + " vectors, max cross " + fmt(cross) + ", max reconstruction " + fmt(recon));
  }

  // 3. Harmonic dimensions on the initial and the finest mesh.
  {
    bool ok = true;
    std::string detail;
    for (const auto &r : runs) {
      const ProblemSpec p = make_problem(r.report.problem);
      for (const MeshPtr &m : {p.initial_mesh, r.report.final_mesh}) {
        const DiscreteComplex cx(m);
        const int expected = r.report.problem == "annulus-k1" ? 1 : 0;
        for (int k = 1; k <= 2; ++k) {
          try {
            (void)harmonic_basis(cx, k, k == 1 ? expected : 0);
          } catch (const DimensionError &e) {
            ok = false;
            detail += r.label + ": " + e.what() + "; ";
          }
        }
      }
      ok = ok && r.report.steps.front().harmonic_dim == r.report.steps.back().harmonic_dim;
    }
    verdict(3, ok, detail.empty() ? "square k=1 -> 0, annulus k=1 -> 1, k=2 -> 0 on T0 and finest meshes of all runs" : detail);
  }

  // 4. Galerkin residuals.
  {
    double worst = 0.0;
    for (const auto &r : runs)
      for (const auto &s : r.report.steps)
        worst = std::max({worst, s.residual_sigma, s.residual_u, s.residual_harmonic});
    verdict(4, worst <= 1e-9, "max relative residual " + fmt(worst));
  }

  // 5. Uniform convergence on square-k2.
  {
    const Run &r = find("square-k2 uniform");
    std::vector<double> N, e;
    for (const auto &s : r.report.steps) {
      N.push_back(s.ndof);
      e.push_back(s.error.sigma_l2);
    }
    const double h_rate = 2.0 * fit_rate(N, e);
    verdict(5, r.report.steps.size() == 6 && h_rate >= 0.85 && h_rate <= 1.15 && r.seconds < 120.0,
            "h-rate of ||sigma - sigma_h|| " + fmt(h_rate) + " over 5 uniform levels in " + fmt(r.seconds) + " s");
  }

  // 6. Effectivity stability on levels 2 to 5.
  {
    const Run &r = find("square-k2 uniform");
    double lo = 1e300, hi = 0.0;
    for (const auto &s : r.report.steps)
      if (s.step >= 2) {
        const double eff = s.eta_sigma / s.error.sigma_h_lambda();
        lo = std::min(lo, eff);
        hi = std::max(hi, eff);
      }
    verdict(6, hi / lo <= 10.0, "effectivity in [" + fmt(lo) + ", " + fmt(hi) + "], ratio " + fmt(hi / lo));
  }

  // 7. Oscillation dominance.
  {
    double worst = -1e300;
    for (const auto &r : runs)
      for (const auto &s : r.report.steps) worst = std::max(worst, s.osc_excess);
    verdict(7, worst <= 1e-12, "max_K osc(K) - eta_sigma(K) = " + fmt(worst));
  }

  // 8. Orthogonality.
  {
    double pyth = 0.0, cross = 0.0;
    int pairs = 0;
    for (const auto &s : find("square-k2 amfem2").report.steps)
      if (s.ortho) {
        pyth = std::max(pyth, s.ortho->pythagoras);
        ++pairs;
      }
    for (const auto &s : find("square-k1 amfem2").report.steps)
      if (s.ortho) {
        cross = std::max(cross, std::abs(s.ortho->r1) / s.ortho->scale);
        ++pairs;
      }
    verdict(8, pairs >= 2 && pyth <= 1e-12 && cross <= 1e-7,
            std::to_string(pairs) + " pairs, k=2 Pythagoras defect " + fmt(pyth) + ", k=1 |r1|/||d sigma||^2 " + fmt(cross));
  }

  // 9. Dorfler minimal cardinality against exhaustive search.
  {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> len(1, 12), small(0, 6), big(0, (1 << 20) - 1), coin(0, 2);
    std::uniform_real_distribution<double> th(0.05, 0.95);
    int mismatches = 0;
    for (int c = 0; c < 1000; ++c) {
      std::vector<double> values(len(rng));
      const bool ties = coin(rng) == 0;
      for (auto &v : values) v = (ties ? small(rng) : big(rng)) / 1024.0;
      const double theta = th(rng);
      if (dorfler_mark(values, theta) != detail::dorfler_oracle(values, theta)) ++mismatches;
    }
    verdict(9, mismatches == 0, "1000 cases, " + std::to_string(mismatches) + " mismatches with the exhaustive oracle");
  }

  // 10. Adaptive rate on the L-shape against uniform refinement.
  {
    const RunReport &ad = find("lshape-k2 amfem2").report;
    const RunReport &un = find("lshape-k2 uniform").report;
    const double s = ad.rate_eta_sigma, su = un.rate_eta_sigma;
    verdict(10, ad.steps.size() >= 16 && std::abs(s - 0.5) <= 0.1 && su <= 0.4 && s > su,
            "adaptive rate " + fmt(s) + " over the last " + std::to_string(ad.rate_window) + " of " +
                std::to_string(ad.steps.size() - 1) + " steps, uniform rate " + fmt(su));
  }

  // 11. Quasi-error contraction.
  {
    bool ok = true;
    std::string detail;
    for (const char *label : {"lshape-k2 amfem2 reference", "square-k1 amfem2"}) {
      const RunReport &r = find(label).report;
      const bool pass = r.quasi.evaluated && r.quasi.contractive && r.geometric_mean_ratio < 1.0;
      ok = ok && pass;
      detail += std::string(detail.empty() ? "" : "; ") + label + ": " + std::to_string(r.quasi.contractive_pairs) + " contractive pairs, worst ratio " +
                fmt(r.quasi.worst_ratio) + ", gm " + fmt(r.geometric_mean_ratio);
    }
    verdict(11, ok, detail);
  }

  // 12. AMFEM1 convergence on the annulus.
  {
    const Run &r = find("annulus-k1 amfem1");
    bool marks = true, dims = true;
    for (const auto &s : r.report.steps) {
      marks = marks && s.marks_ok;
      dims = dims && s.harmonic_dim == 1;
    }
    verdict(12, r.report.converged && r.report.steps.back().eta <= a1.tol && marks && dims,
            "eta " + fmt(r.report.steps.back().eta) + " <= tol " + fmt(a1.tol) + " after " +
                std::to_string(r.report.steps.size() - 1) + " steps, markings " + (marks ? "ok" : "violated") + ", dim H " +
                (dims ? "1 throughout" : "varies"));
  }

  // 13. Localized upper bound stability.
  {
    const RunReport &r = find("lshape-k2 amfem2").report;
    int pairs = 0;
    bool finite = true;
    for (const auto &s : r.steps)
      if (s.localized && s.localized->denominator > 0.0) {
        ++pairs;
        finite = finite && std::isfinite(s.localized->ratio);
      }
    verdict(13, pairs >= 5 && finite && r.localized_max <= 10.0 * r.localized_median,
            std::to_string(pairs) + " pairs, max " + fmt(r.localized_max) + ", median " + fmt(r.localized_median));
  }

  // 14. Gap symmetry between consecutive annulus meshes.
  {
    const RunReport &r = find("annulus-k1 amfem1").report;
    double asym = 0.0, worst = 0.0;
    int pairs = 0;
    for (std::size_t l = 1; l < r.steps.size(); ++l)
      if (r.steps[l].harmonic_dim == r.steps[l - 1].harmonic_dim) {
        asym = std::max(asym, std::abs(r.steps[l].gap_ab - r.steps[l].gap_ba));
        worst = std::max({worst, r.steps[l].gap_ab, r.steps[l].gap_ba});
        ++pairs;
      }
    verdict(14, pairs > 0 && asym <= 1e-8 && worst < 1.0,
            std::to_string(pairs) + " pairs, max asymmetry " + fmt(asym) + ", max gap " + fmt(worst));
  }

  // 15. NVB cardinality constant.
  {
    bool ok = true;
    std::string detail;
    for (const auto &r : runs)
      if (is_adaptive(r.report) && std::isfinite(r.report.c_card_max)) {
        ok = ok && r.report.c_card_max <= 20.0;
        detail += (detail.empty() ? "" : "; ") + r.label + " " + fmt(r.report.c_card_max);
      }
    verdict(15, ok && !detail.empty(), "max C_card after step 3: " + detail);
  }

  std::printf("%s: %d of 15 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
