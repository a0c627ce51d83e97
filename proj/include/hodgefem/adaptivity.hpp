// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/problems.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <numeric>

namespace hodgefem {

struct MarkingParams {
  double theta = 0.3;        // AMFEM2
  double theta_sigma = 0.3;  // AMFEM1
  double theta_p = 0.3;
  double theta_du = 0.3;
  double tol = 1e-3;
  int max_steps = 30;
  long ndof_cap = 200000;

  void validate() const {
    for (double t : {theta, theta_sigma, theta_p, theta_du})
      if (!(t > 0.0 && t < 1.0)) throw InputError("marking parameters must lie in (0, 1)");
    if (!(tol > 0.0)) throw InputError("tol must be positive");
    if (max_steps < 0) throw InputError("max_steps must be non-negative");
    if (ndof_cap <= 0) throw InputError("ndof_cap must be positive");
  }
};

/// Minimal-cardinality set with sum over M >= theta^2 * total. Descending order,
/// ties by ascending id; returned ids ascending.
inline std::vector<int> dorfler_mark(std::span<const double> values, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("Dorfler parameter must lie in (0, 1)");
  if (values.empty()) throw InputError("Dorfler marking needs a nonempty indicator");
  double total = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw InputError("indicator values must be non-negative");
    total += v;
  }
  if (total == 0.0) return {};
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  const double target = theta * theta * total;
  std::vector<int> out;
  double acc = 0.0;
  for (int id : order) {
    out.push_back(id);
    acc += values[id];
    if (acc >= target) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> dorfler_mark(const IndicatorField &field, double theta) { return dorfler_mark(field.values, theta); }

/// Enlarges `marked` by unmarked elements in descending order of `values` until
/// the Dorfler property holds for `values` as well.
inline std::vector<int> extend_marking(std::vector<int> marked, std::span<const double> values, double theta) {
  double total = 0.0, acc = 0.0;
  for (double v : values) total += v;
  std::vector<char> in(values.size(), 0);
  for (int id : marked) {
    in.at(id) = 1;
    acc += values[id];
  }
  const double target = theta * theta * total;
  if (acc >= target) return marked;
  std::vector<int> order;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!in[i]) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  for (int id : order) {
    if (acc >= target) break;
    marked.push_back(id);
    acc += values[id];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

/// Negated least-squares slope of log(value) against log(N).
inline double fit_rate(std::span<const double> N, std::span<const double> values) {
  if (N.size() != values.size()) throw InputError("fit_rate: size mismatch");
  if (N.size() < 3) throw InputError("fit_rate needs at least three points");
  const std::size_t n = N.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(N[i] > 0.0) || !(values[i] > 0.0)) throw InputError("fit_rate needs positive data");
    mx += std::log(N[i]);
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(N[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InputError("fit_rate needs at least two distinct N");
  return -sxy / sxx;
}

enum class Algorithm { amfem1, amfem2, uniform };

inline const char *algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::amfem1: return "amfem1";
    case Algorithm::amfem2: return "amfem2";
    default: return "uniform";
  }
}

inline Algorithm parse_algorithm(const std::string &s) {
  if (s == "amfem1") return Algorithm::amfem1;
  if (s == "amfem2") return Algorithm::amfem2;
  if (s == "uniform") return Algorithm::uniform;
  throw InputError("unknown algorithm: " + s);
}

enum class StopReason { tolerance, max_steps, ndof_cap };

inline const char *stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_steps: return "max_steps";
    default: return "ndof_cap";
  }
}

/// Orthogonality quantities between consecutive nested solutions, all evaluated
/// on the finer mesh. Squared quantities follow e_l = ||.||^2 and Delta_l = ||. - .||^2.
struct OrthogonalityCheck {
  double r1 = std::nan("");          // <d(sigma - sigma_{l+1}), d(sigma_l - sigma_{l+1})>
  double scale = std::nan("");       // ||d sigma||^2
  double pythagoras = std::nan("");  // |e_{dsigma,l+1} + Delta_{dsigma,l} - e_{dsigma,l}| / e_{dsigma,l}
  double e_dsigma_coarse = std::nan("");
  double e_dsigma_fine = std::nan("");
  double delta_dsigma = std::nan("");
  double delta_sigma = std::nan("");
  // Smallest constants making the sigma and du inequalities hold with eps = 1/2,
  // and the slack of the p inequality (non-negative when it holds).
  double c_qo_sigma = std::nan("");
  double slack_p = std::nan("");
  double c_qo_du = std::nan("");
};

struct StepRecord {
  int step = 0;
  int ntri = 0;
  int ndof = 0;
  double eta_sigma = 0.0;
  double eta_p = std::nan("");
  double eta_du = std::nan("");
  double eta_dsigma = std::nan("");
  double eta = 0.0;  // stopping quantity
  int marked = 0;
  ErrorRecord error;
  double gap = std::nan("");
  double gap_ab = std::nan("");
  double gap_ba = std::nan("");
  double seconds = 0.0;

  int harmonic_dim = 0;
  bool complex_exact = false;
  double residual_sigma = 0.0;
  double residual_u = 0.0;
  double residual_harmonic = 0.0;
  double solve_residual = 0.0;
  double p_membership = 0.0;  // max(||D_k p||, ||D_{k-1}^T M_k p||)
  double p_norm = 0.0;
  double osc = 0.0;
  double osc_excess = 0.0;  // max_K (osc(K) - eta_sigma(K))
  double min_angle = 0.0;
  bool marks_ok = true;
  double mark_ratio_sigma = std::nan("");  // eta(M) / eta(T) per flavor
  double mark_ratio_p = std::nan("");
  double mark_ratio_du = std::nan("");
  double c_card = std::nan("");
  std::optional<OrthogonalityCheck> ortho;
  std::optional<LocalizedBound> localized;  // this step as H, the next as h

  std::vector<double> ind_sigma, ind_p, ind_du, ind_osc;
};

struct QuasiErrorGrid {
  bool evaluated = false;
  bool contractive = false;
  int contractive_pairs = 0;
  double zeta = std::nan("");
  double rho = std::nan("");
  double worst_ratio = std::nan("");  // max_l Q_{l+1}/Q_l for the best pair
};

struct RunReport {
  std::string problem;
  Algorithm algorithm = Algorithm::amfem2;
  int k = 0;
  MarkingParams params;
  std::vector<StepRecord> steps;
  StopReason stop = StopReason::max_steps;
  bool converged = false;
  bool reference_based = false;
  int reference_ntri = 0;
  double rate_eta_sigma = std::nan("");
  int rate_window = 0;
  double geometric_mean_ratio = std::nan("");
  double c_card_max = std::nan("");  // after step 3
  double localized_max = std::nan("");
  double localized_median = std::nan("");
  QuasiErrorGrid quasi;
  double min_angle = std::nan("");
  std::vector<std::string> warnings;
  MeshPtr final_mesh;
};

struct RunOptions {
  bool timing = false;
  bool reference = true;          // reference solution for problems without exact data
  bool keep_indicators = true;    // per-step element indicators in the report
  int rate_window = 6;            // trailing steps used for the reported rate
  std::function<void(const StepRecord &)> on_step;
};

namespace detail {

inline bool incidence_product_zero(const Mesh &mesh) {
  const auto shared = std::make_shared<const Mesh>(mesh);
  const SparseMatrix P = derivative_matrix(FormSpace(1, shared)) * derivative_matrix(FormSpace(0, shared));
  for (int col = 0; col < P.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(P, col); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

inline double ratio(double part, double total) { return total > 0.0 ? std::sqrt(part / total) : 1.0; }

/// Elementwise constant d sigma_h for sigma_h in V^{k-1}.
inline Proxy element_d(const DiscreteComplex &cx, int k, const Eigen::VectorXd &dsigma_coeffs, const Eigen::VectorXd &sigma,
                       int t) {
  if (k == 2) return scalar_proxy(dsigma_coeffs[t]);
  const ElementGeometry g(*cx.mesh, t);
  const auto &v = cx.mesh->triangle(t).v;
  return sigma[v[0]] * g.grad[0] + sigma[v[1]] * g.grad[1] + sigma[v[2]] * g.grad[2];
}

}  // namespace detail

/// Orthogonality quantities for nested solutions coarse -> fine of a problem with
/// exact data, all integrals on the fine mesh and its quadrature.
inline OrthogonalityCheck check_orthogonality(const DiscreteComplex &fine_cx, const MixedSolution &coarse,
                                              const MixedSolution &fine, std::span<const int> ancestor,
                                              const ExactSolution &exact) {
  const int k = fine.k;
  if (coarse.k != k) throw InputError("orthogonality check: solutions of different problems");
  const Mesh &fm = *fine_cx.mesh;
  const AnalyticForm dsigma = exact.sigma.exterior_derivative();
  const CoefficientVector Pc = prolong(coarse.sigma, fine_cx.mesh, ancestor);
  const Eigen::VectorXd w = Pc.values - fine.sigma.values;
  const Eigen::VectorXd dw = fine_cx.d(k - 1) * w;
  const Eigen::VectorXd dfine = fine_cx.d(k - 1) * fine.sigma.values;
  const Eigen::VectorXd dcoarse = fine_cx.d(k - 1) * Pc.values;

  OrthogonalityCheck out;
  double r1 = 0.0, scale = 0.0, ec = 0.0, ef = 0.0;
  for (int t = 0; t < fm.num_triangles(); ++t) {
    const ElementGeometry g(fm, t);
    const Proxy df = detail::element_d(fine_cx, k, dfine, fine.sigma.values, t);
    const Proxy dc = detail::element_d(fine_cx, k, dcoarse, Pc.values, t);
    const Proxy dwt = dc - df;
    double a = 0.0, b = 0.0, c = 0.0, e = 0.0;
    for (const auto &q : quadrature::triangle_rule()) {
      const Proxy ds = dsigma(g.point(q.bary));
      a += q.weight * (ds - df).dot(dwt);
      b += q.weight * ds.squaredNorm();
      c += q.weight * (ds - dc).squaredNorm();
      e += q.weight * (ds - df).squaredNorm();
    }
    r1 += a * g.area;
    scale += b * g.area;
    ec += c * g.area;
    ef += e * g.area;
  }
  out.r1 = r1;
  out.scale = scale;
  out.e_dsigma_coarse = ec;
  out.e_dsigma_fine = ef;
  out.delta_dsigma = dw.dot(fine_cx.mass(k) * dw);
  out.delta_sigma = w.dot(fine_cx.mass(k - 1) * w);
  if (ec > 0.0) out.pythagoras = std::abs(ef + out.delta_dsigma - ec) / ec;

  const double es_c = std::pow(norms(Pc, exact.sigma).l2, 2);
  const double es_f = std::pow(norms(fine.sigma, exact.sigma).l2, 2);
  if (out.delta_dsigma > 0.0) out.c_qo_sigma = std::max(0.0, (es_f - 2.0 * es_c + out.delta_sigma) / (4.0 * out.delta_dsigma));
  if (k == 1) {
    const CoefficientVector Pp = prolong(coarse.p, fine_cx.mesh, ancestor);
    const CoefficientVector Pu = prolong(coarse.u, fine_cx.mesh, ancestor);
    const double ep_c = std::pow(norms(Pp, exact.p).l2, 2);
    const double ep_f = std::pow(norms(fine.p, exact.p).l2, 2);
    const Eigen::VectorXd wp = Pp.values - fine.p.values;
    const double dp = wp.dot(fine_cx.mass(1) * wp);
    out.slack_p = ep_c - 0.5 * dp + 2.0 * ef - ep_f;
    const double edu_c = std::pow(norms(Pu, exact.u).d_l2, 2);
    const double edu_f = std::pow(norms(fine.u, exact.u).d_l2, 2);
    const Eigen::VectorXd wdu = fine_cx.d(1) * (Pu.values - fine.u.values);
    const double ddu = wdu.dot(fine_cx.mass(2) * wdu);
    const double denom = 4.0 * (ef + ep_f);
    if (denom > 0.0) out.c_qo_du = std::max(0.0, (edu_f - edu_c + 0.5 * ddu) / denom);
  }
  return out;
}

/// Quasi-error Q_l = e_sigma^2 + zeta e_dsigma^2 + rho eta_sigma^2 over the grid
/// zeta, rho in {10^a : a = -3..3}. Contractive when some pair decreases strictly
/// at every recorded step.
inline QuasiErrorGrid quasi_error_grid(const std::vector<StepRecord> &steps) {
  QuasiErrorGrid out;
  if (steps.size() < 2) return out;
  for (const auto &s : steps)
    if (!std::isfinite(s.error.sigma_l2) || !std::isfinite(s.error.dsigma_l2)) return out;
  out.evaluated = true;
  double best = std::numeric_limits<double>::infinity();
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) {
      const double zeta = std::pow(10.0, a), rho = std::pow(10.0, b);
      auto Q = [&](const StepRecord &s) {
        return s.error.sigma_l2 * s.error.sigma_l2 + zeta * s.error.dsigma_l2 * s.error.dsigma_l2 + rho * s.eta_sigma * s.eta_sigma;
      };
      double worst = 0.0;
      bool strict = true;
      for (std::size_t l = 0; l + 1 < steps.size(); ++l) {
        const double q0 = Q(steps[l]), q1 = Q(steps[l + 1]);
        if (!(q1 < q0)) strict = false;
        worst = std::max(worst, q0 > 0.0 ? q1 / q0 : std::numeric_limits<double>::infinity());
      }
      if (strict) ++out.contractive_pairs;
      if (strict && worst < best) {
        best = worst;
        out.zeta = zeta;
        out.rho = rho;
        out.worst_ratio = worst;
      }
    }
  out.contractive = out.contractive_pairs > 0;
  return out;
}

namespace detail {

struct StepState {
  MeshPtr mesh;
  std::shared_ptr<DiscreteComplex> cx;
  HarmonicBasis basis;
  MixedSolution sol;
  IndicatorField eta_sigma;
};

inline std::vector<int> compose_ancestors(const std::vector<std::vector<int>> &parents, std::size_t from, std::size_t to,
                                          std::vector<int> start) {
  // start maps triangles of the mesh after step `to` onto that mesh; walk back to step `from`.
  for (std::size_t s = to; s > from; --s)
    for (int &a : start) a = parents[s - 1][a];
  return start;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Adaptive (or uniform) loop: solve, estimate, mark, refine.
inline RunReport run_adaptive(const ProblemSpec &problem, Algorithm algorithm, const MarkingParams &params,
                              const RunOptions &options = {}) {
  params.validate();
  RunReport report;
  report.problem = problem.name;
  report.algorithm = algorithm;
  report.k = problem.k;
  report.params = params;
  const int k = problem.k;
  const bool amfem1 = algorithm == Algorithm::amfem1 && k == 1;
  if (algorithm == Algorithm::amfem1 && k == 2)
    report.warnings.push_back("amfem1 with k = n reduces to amfem2: only eta_sigma is defined");

  std::vector<detail::StepState> states;
  std::vector<std::vector<int>> parents;  // parents[l]: triangles of mesh l+1 -> mesh l
  std::vector<RefinementRecord> records;
  MeshPtr mesh = problem.initial_mesh;
  const int nt0 = mesh->num_triangles();
  long marked_sum = 0;
  using clock = std::chrono::steady_clock;

  for (int step = 0;; ++step) {
    const auto t0 = clock::now();
    detail::StepState st;
    st.mesh = mesh;
    st.cx = std::make_shared<DiscreteComplex>(mesh);
    const DiscreteComplex &cx = *st.cx;
    StepRecord rec;
    rec.step = step;
    rec.ntri = mesh->num_triangles();
    rec.ndof = cx.ndof(k - 1) + cx.ndof(k);
    rec.complex_exact = detail::incidence_product_zero(*mesh);
    rec.min_angle = mesh_metrics(*mesh).min_angle;

    st.basis = harmonic_basis(cx, k, problem.expected_betti);
    rec.harmonic_dim = st.basis.dim();
    st.sol = solve_hodge_laplacian(cx, k, problem.f, st.basis);
    const MixedSolution &sol = st.sol;
    rec.residual_sigma = sol.residual_sigma;
    rec.residual_u = sol.residual_u;
    rec.residual_harmonic = sol.residual_harmonic;
    rec.solve_residual = sol.solve_residual;
    rec.p_norm = mass_norm(cx.mass(k), sol.p.values);
    {
      double mem = 0.0;
      if (k < 2) mem = (cx.d(k) * sol.p.values).norm();
      mem = std::max(mem, (cx.d(k - 1).transpose() * (cx.mass(k) * sol.p.values)).norm());
      rec.p_membership = mem;
    }

    st.eta_sigma = eta_sigma(sol, problem.f);
    const IndicatorField osc = oscillation(sol, problem.f);
    rec.eta_sigma = st.eta_sigma.eta();
    rec.osc = osc.eta();
    rec.osc_excess = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < rec.ntri; ++t)
      rec.osc_excess = std::max(rec.osc_excess, std::sqrt(osc.values[t]) - std::sqrt(st.eta_sigma.values[t]));
    IndicatorField ep, edu;
    if (k == 1) {
      rec.eta_dsigma = eta_dsigma(sol, problem.f).eta();
      ep = eta_p(sol, problem.f);
      edu = eta_du(sol, problem.f);
      rec.eta_p = ep.eta();
      rec.eta_du = edu.eta();
    } else {
      ep = eta_p(sol, problem.f);
      rec.eta_p = 0.0;
    }
    rec.eta = amfem1 ? std::sqrt(rec.eta_sigma * rec.eta_sigma + rec.eta_p * rec.eta_p + rec.eta_du * rec.eta_du)
                     : rec.eta_sigma;
    if (options.keep_indicators) {
      rec.ind_sigma = st.eta_sigma.values;
      rec.ind_osc = osc.values;
      if (k == 1) {
        rec.ind_p = ep.values;
        rec.ind_du = edu.values;
      }
    }
    if (problem.exact) rec.error = exact_error(sol, *problem.exact);

    if (step > 0) {
      const detail::StepState &prev = states.back();
      const std::vector<int> &par = parents.back();
      Eigen::MatrixXd prolonged(cx.ndof(k), prev.basis.dim());
      for (int j = 0; j < prev.basis.dim(); ++j)
        prolonged.col(j) = prolong(CoefficientVector(prev.basis.space, prev.basis.vectors.col(j)), mesh, par).values;
      const GapPair g = gap(st.basis.vectors, prolonged, cx.mass(k));
      rec.gap_ab = g.ab;
      rec.gap_ba = g.ba;
      rec.gap = std::max(g.ab, g.ba);
      if (problem.exact) rec.ortho = check_orthogonality(cx, prev.sol, sol, par, *problem.exact);
      report.steps.back().localized = localized_bound_ratio(cx, prev.sol, sol, records.back(), prev.eta_sigma);
      rec.c_card = static_cast<double>(rec.ntri - nt0) / static_cast<double>(std::max<long>(marked_sum, 1));
    }

    // Stopping tests, then marking.
    bool stop = false;
    if (rec.eta <= params.tol) {
      report.stop = StopReason::tolerance;
      report.converged = true;
      stop = true;
    } else if (step >= params.max_steps) {
      report.stop = StopReason::max_steps;
      stop = true;
    }
    std::vector<int> marked;
    if (!stop) {
      if (algorithm == Algorithm::uniform) {
        marked.resize(rec.ntri);
        std::iota(marked.begin(), marked.end(), 0);
      } else {
        marked = dorfler_mark(st.eta_sigma, amfem1 ? params.theta_sigma : params.theta);
        if (amfem1) {
          marked = extend_marking(std::move(marked), ep.values, params.theta_p);
          marked = extend_marking(std::move(marked), edu.values, params.theta_du);
        }
      }
      const double ts = st.eta_sigma.total();
      rec.mark_ratio_sigma = detail::ratio(st.eta_sigma.sum_over(marked), ts);
      rec.marks_ok = rec.mark_ratio_sigma >= (amfem1 ? params.theta_sigma : params.theta) - 1e-15 || ts == 0.0;
      if (k == 1) {
        rec.mark_ratio_p = detail::ratio(ep.sum_over(marked), ep.total());
        rec.mark_ratio_du = detail::ratio(edu.sum_over(marked), edu.total());
        if (amfem1) rec.marks_ok = rec.marks_ok && rec.mark_ratio_p >= params.theta_p - 1e-15 &&
                                   rec.mark_ratio_du >= params.theta_du - 1e-15;
      }
      if (algorithm == Algorithm::uniform) rec.marks_ok = true;
      rec.marked = static_cast<int>(marked.size());
    }
    rec.seconds = options.timing ? std::chrono::duration<double>(clock::now() - t0).count() : 0.0;
    report.steps.push_back(std::move(rec));
    if (options.on_step) options.on_step(report.steps.back());
    states.push_back(std::move(st));
    if (stop) break;

    auto [fine, record] = algorithm == Algorithm::uniform ? uniform_refine(*mesh) : bisect_marked(*mesh, marked);
    const FormSpace probe_k(k, std::make_shared<const Mesh>(fine));
    const long next_ndof = FormSpace(k - 1, probe_k.mesh).ndof() + probe_k.ndof();
    if (next_ndof > params.ndof_cap) {
      report.stop = StopReason::ndof_cap;
      report.steps.back().marked = 0;
      break;
    }
    marked_sum += static_cast<long>(marked.size());
    parents.push_back(record.parent);
    records.push_back(std::move(record));
    mesh = probe_k.mesh;
  }
  report.final_mesh = mesh;

  // Reference errors for problems without exact data.
  if (!problem.exact && options.reference) {
    const auto [r1, rec1] = uniform_refine(*mesh);
    const auto [r2, rec2] = uniform_refine(r1);
    const RefinementRecord ref_record = compose(rec1, rec2);
    auto ref_mesh = std::make_shared<const Mesh>(r2);
    const DiscreteComplex ref_cx(ref_mesh);
    const HarmonicBasis ref_basis = harmonic_basis(ref_cx, k, problem.expected_betti);
    const MixedSolution ref = solve_hodge_laplacian(ref_cx, k, problem.f, ref_basis);
    report.reference_based = true;
    report.reference_ntri = ref_mesh->num_triangles();
    const std::size_t last = states.size() - 1;
    for (std::size_t l = 0; l < states.size(); ++l) {
      const std::vector<int> anc = detail::compose_ancestors(parents, l, last, ref_record.parent);
      report.steps[l].error = reference_error(ref_cx, states[l].sol, ref, anc);
    }
  }

  // Summary quantities.
  const auto &steps = report.steps;
  if (steps.size() >= 2 && steps.front().eta > 0.0 && steps.back().eta > 0.0)
    report.geometric_mean_ratio = std::pow(steps.back().eta / steps.front().eta, 1.0 / (steps.size() - 1));
  {
    std::vector<double> N, v;
    for (const auto &s : steps)
      if (s.step >= 1 && s.eta_sigma > 0.0) {
        N.push_back(s.ntri - nt0);
        v.push_back(s.eta_sigma);
      }
    const std::size_t w = std::min<std::size_t>(N.size(), static_cast<std::size_t>(std::max(options.rate_window, 3)));
    if (N.size() >= 3 && w >= 3) {
      report.rate_window = static_cast<int>(w);
      report.rate_eta_sigma = fit_rate(std::span(N).last(w), std::span(v).last(w));
    }
  }
  for (const auto &s : steps)
    if (s.step > 3 && std::isfinite(s.c_card))
      report.c_card_max = std::isfinite(report.c_card_max) ? std::max(report.c_card_max, s.c_card) : s.c_card;
  std::vector<double> loc;
  for (const auto &s : steps)
    if (s.localized && s.localized->denominator > 0.0) loc.push_back(s.localized->ratio);
  if (!loc.empty()) {
    report.localized_max = *std::max_element(loc.begin(), loc.end());
    report.localized_median = detail::median(loc);
  }
  report.min_angle = std::numbers::pi;
  for (const auto &s : steps) report.min_angle = std::min(report.min_angle, s.min_angle);
  report.quasi = quasi_error_grid(steps);
  return report;
}

}  // namespace hodgefem
