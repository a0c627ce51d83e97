// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/adaptivity.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <ostream>
#include <string>

namespace hodgefem {

inline constexpr const char *kCsvHeader =
    "step,ntri,ndof,eta_sigma,eta_p,eta_du,eta_dsigma,marked,err_sigma_l2,err_dsigma_l2,err_p,err_du,gap,seconds";

/// Shortest round-trip decimal, independent of the global locale.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void write_report_csv(std::ostream &os, const RunReport &report) {
  os << kCsvHeader << '\n';
  for (const auto &s : report.steps) {
    const double cols[] = {s.eta_sigma,       s.eta_p,       s.eta_du,         s.eta_dsigma,
                           s.error.sigma_l2,  s.error.dsigma_l2, s.error.p,    s.error.du,
                           s.gap,             s.seconds};
    os << s.step << ',' << s.ntri << ',' << s.ndof;
    for (int i = 0; i < 4; ++i) os << ',' << format_number(cols[i]);
    os << ',' << s.marked;
    for (int i = 4; i < 10; ++i) os << ',' << format_number(cols[i]);
    os << '\n';
  }
}

namespace detail {

inline nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json step_json(const StepRecord &s) {
  using nlohmann::json;
  json j = {
      {"step", s.step},
      {"ntri", s.ntri},
      {"ndof", s.ndof},
      {"eta_sigma", number(s.eta_sigma)},
      {"eta_p", number(s.eta_p)},
      {"eta_du", number(s.eta_du)},
      {"eta_dsigma", number(s.eta_dsigma)},
      {"eta", number(s.eta)},
      {"marked", s.marked},
      {"err_sigma_l2", number(s.error.sigma_l2)},
      {"err_dsigma_l2", number(s.error.dsigma_l2)},
      {"err_p", number(s.error.p)},
      {"err_du", number(s.error.du)},
      {"gap", number(s.gap)},
      {"gap_ab", number(s.gap_ab)},
      {"gap_ba", number(s.gap_ba)},
      {"seconds", s.seconds},
      {"harmonic_dim", s.harmonic_dim},
      {"complex_exact", s.complex_exact},
      {"solve_residual", number(s.solve_residual)},
      {"residual_sigma", number(s.residual_sigma)},
      {"residual_u", number(s.residual_u)},
      {"residual_harmonic", number(s.residual_harmonic)},
      {"p_norm", number(s.p_norm)},
      {"p_membership", number(s.p_membership)},
      {"osc", number(s.osc)},
      {"osc_excess", number(s.osc_excess)},
      {"min_angle", number(s.min_angle)},
      {"marks_ok", s.marks_ok},
      {"mark_ratio_sigma", number(s.mark_ratio_sigma)},
      {"mark_ratio_p", number(s.mark_ratio_p)},
      {"mark_ratio_du", number(s.mark_ratio_du)},
      {"c_card", number(s.c_card)},
  };
  const double hl = s.error.sigma_h_lambda();
  j["err_sigma_h_lambda"] = number(hl);
  j["effectivity_sigma"] = number(hl > 0.0 ? s.eta_sigma / hl : std::nan(""));
  if (s.ortho) {
    const auto &o = *s.ortho;
    j["orthogonality"] = {{"r1", number(o.r1)},
                          {"scale", number(o.scale)},
                          {"pythagoras", number(o.pythagoras)},
                          {"e_dsigma_coarse", number(o.e_dsigma_coarse)},
                          {"e_dsigma_fine", number(o.e_dsigma_fine)},
                          {"delta_dsigma", number(o.delta_dsigma)},
                          {"delta_sigma", number(o.delta_sigma)},
                          {"c_qo_sigma", number(o.c_qo_sigma)},
                          {"slack_p", number(o.slack_p)},
                          {"c_qo_du", number(o.c_qo_du)}};
  }
  if (s.localized) {
    const auto &l = *s.localized;
    j["localized"] = {{"numerator", number(l.numerator)},
                      {"denominator", number(l.denominator)},
                      {"ratio", number(l.ratio)},
                      {"extended_size", l.extended_size},
                      {"violation", l.violation}};
  }
  if (!s.ind_sigma.empty()) {
    j["indicators"] = {{"eta_sigma", s.ind_sigma}, {"osc", s.ind_osc}};
    if (!s.ind_p.empty()) j["indicators"]["eta_p"] = s.ind_p;
    if (!s.ind_du.empty()) j["indicators"]["eta_du"] = s.ind_du;
  }
  return j;
}

}  // namespace detail

inline nlohmann::json report_json(const RunReport &r) {
  using nlohmann::json;
  json steps = json::array();
  for (const auto &s : r.steps) steps.push_back(detail::step_json(s));
  json j = {
      {"problem", r.problem},
      {"algorithm", algorithm_name(r.algorithm)},
      {"k", r.k},
      {"params",
       {{"theta", r.params.theta},
        {"theta_sigma", r.params.theta_sigma},
        {"theta_p", r.params.theta_p},
        {"theta_du", r.params.theta_du},
        {"tol", r.params.tol},
        {"max_steps", r.params.max_steps},
        {"ndof_cap", r.params.ndof_cap}}},
      {"stop", stop_reason_name(r.stop)},
      {"converged", r.converged},
      {"reference_based", r.reference_based},
      {"reference_ntri", r.reference_ntri},
      {"rate_eta_sigma", detail::number(r.rate_eta_sigma)},
      {"rate_window", r.rate_window},
      {"geometric_mean_ratio", detail::number(r.geometric_mean_ratio)},
      {"c_card_max", detail::number(r.c_card_max)},
      {"localized_max", detail::number(r.localized_max)},
      {"localized_median", detail::number(r.localized_median)},
      {"min_angle", detail::number(r.min_angle)},
      {"quasi_error",
       {{"evaluated", r.quasi.evaluated},
        {"contractive", r.quasi.contractive},
        {"contractive_pairs", r.quasi.contractive_pairs},
        {"zeta", detail::number(r.quasi.zeta)},
        {"rho", detail::number(r.quasi.rho)},
        {"worst_ratio", detail::number(r.quasi.worst_ratio)}}},
      {"warnings", r.warnings},
      {"steps", std::move(steps)},
  };
  return j;
}

struct SlopeAnnotation {
  std::string series;
  double slope = std::nan("");  // fit_rate of the series against ndof
};

namespace detail {

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x, y;
};

inline std::vector<Series> plot_series(const RunReport &r) {
  std::vector<Series> out = {{"eta_sigma", "#1f77b4", {}, {}}, {"eta_p", "#ff7f0e", {}, {}},
                             {"eta_du", "#2ca02c", {}, {}},    {"err_sigma_l2", "#d62728", {}, {}},
                             {"err_dsigma_l2", "#9467bd", {}, {}}};
  for (const auto &s : r.steps) {
    const double vals[] = {s.eta_sigma, s.eta_p, s.eta_du, s.error.sigma_l2, s.error.dsigma_l2};
    for (int i = 0; i < 5; ++i)
      if (std::isfinite(vals[i]) && vals[i] > 0.0) {
        out[i].x.push_back(s.ndof);
        out[i].y.push_back(vals[i]);
      }
  }
  std::erase_if(out, [](const Series &s) { return s.x.empty(); });
  return out;
}

inline bool distinct_x(const std::vector<double> &x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) != x.end();
}

inline std::string fixed12(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace detail

/// Fitted slope of every plotted series with at least three points.
inline std::vector<SlopeAnnotation> plot_slopes(const RunReport &r) {
  std::vector<SlopeAnnotation> out;
  for (const auto &s : detail::plot_series(r))
    if (s.x.size() >= 3 && detail::distinct_x(s.x)) out.push_back({s.name, fit_rate(s.x, s.y)});
  return out;
}

/// Self-contained log-log plot of estimators and errors against ndof.
inline void write_rates_svg(std::ostream &os, const RunReport &r) {
  const auto series = detail::plot_series(r);
  const double W = 640, H = 480, L = 70, R = 190, T = 30, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto &s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, std::log10(s.x[i]));
      x1 = std::max(x1, std::log10(s.x[i]));
      y0 = std::min(y0, std::log10(s.y[i]));
      y1 = std::max(y1, std::log10(s.y[i]));
    }
  if (series.empty()) x0 = y0 = 0.0, x1 = y1 = 1.0;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
     << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << r.problem << " / "
     << algorithm_name(r.algorithm) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
    const double x = px(std::pow(10.0, d));
    os << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e"
       << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(y0)); d <= static_cast<int>(std::floor(y1)); ++d) {
    const double y = py(std::pow(10.0, d));
    os << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e"
       << d << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">ndof</text>\n";

  const auto slopes = plot_slopes(r);
  double legend_y = T + 14;
  for (const auto &s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" data-series=\"" << s.name << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
    os << "\"/>\n";
    std::string label = s.name;
    for (const auto &a : slopes)
      if (a.series == s.name) label += " slope " + detail::fixed12(-a.slope);
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << legend_y << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
       << s.color << "\" data-series=\"" << s.name << "\"";
    for (const auto &a : slopes)
      if (a.series == s.name) os << " data-rate=\"" << detail::fixed12(a.slope) << "\"";
    os << ">" << label << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
}

}  // namespace hodgefem
