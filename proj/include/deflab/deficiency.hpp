#pragma once

#include "numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

namespace deflab {

template <class F>
concept LogDensity = std::invocable<F, double> &&
                     std::convertible_to<std::invoke_result_t<F, double>, double>;

//! 1 / (1/eps_1 + ... + 1/eps_n), i.e. the harmonic mean divided by n.
inline double
predicted_deficiency(std::span<const double> eps_list)
{
  if (eps_list.empty())
    throw std::invalid_argument("predicted_deficiency: empty list");
  double inv = 0.0;
  for (double e : eps_list) {
    if (!(e > 0.0) || !std::isfinite(e))
      throw std::invalid_argument("predicted_deficiency: entries must be positive");
    inv += 1.0 / e;
  }
  return 1.0 / inv;
}

struct DecayReport
{
  double lambda;
  double fitted_slope;
  double eps_hat; //!< lambda + fitted_slope
  double intercept;
  double max_residual;
  int j_lo;
  int j_hi;
  double poly_correction;
  double residual_limit;
  bool fit_ok; //!< max_residual <= residual_limit
};

//! Fits log p(j) + poly_alpha log(j^2 + 1) = a + b j over integers
//! j_lo..j_hi. For a density whose lattice peaks decay like
//! e^{-(lambda - eps) j} / (j^2+1)^alpha the slope is -(lambda - eps).
template <LogDensity F>
DecayReport
estimate_decay_slope(F&& log_eval,
                     double lambda,
                     double poly_alpha,
                     int j_lo,
                     int j_hi,
                     double residual_limit = 1.0)
{
  if (j_hi - j_lo < 10)
    throw std::invalid_argument("estimate_decay_slope: need j_hi - j_lo >= 10");
  std::vector<double> xs, ys;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double dj = j;
    const double lp = log_eval(dj);
    if (!std::isfinite(lp))
      throw std::domain_error("estimate_decay_slope: log density is not finite at j = " +
                              std::to_string(j));
    xs.push_back(dj);
    ys.push_back(lp + poly_alpha * std::log(dj * dj + 1.0));
  }
  const auto fit = fit_line(xs, ys);
  DecayReport r{};
  r.lambda = lambda;
  r.fitted_slope = fit.slope;
  r.eps_hat = lambda + fit.slope;
  r.intercept = fit.intercept;
  r.max_residual = fit.max_abs_residual;
  r.j_lo = j_lo;
  r.j_hi = j_hi;
  r.poly_correction = poly_alpha;
  r.residual_limit = residual_limit;
  r.fit_ok = r.max_residual <= residual_limit;
  return r;
}

struct EnvelopeOptions
{
  double threshold = 0.01; //!< per unit x
  double poly_alpha = 0.0; //!< adds poly_alpha log(x^2+1) to the trend
};

struct EnvelopeCheck
{
  double mu;
  double sup_value;
  double arg_sup;
  double trend_slope;
  bool diverges;
  double threshold;
  double x_lo;
  double x_hi;
  int n_points;
  double poly_alpha;
};

//! sup of p(x) e^{mu x} over a uniform grid plus the integer lattice, and a
//! growth trend of log p(j) + mu j over the lattice points in the last third
//! of the window. Between lattice peaks the extremal densities dip by
//! double-exponential factors, so the trend only looks at the peaks.
template <LogDensity F>
EnvelopeCheck
verify_envelope(F&& log_eval,
                double mu,
                double x_lo,
                double x_hi,
                int n_points,
                const EnvelopeOptions& opts = {})
{
  if (n_points < 64)
    throw std::invalid_argument("verify_envelope: need n_points >= 64");
  if (!(x_hi > x_lo))
    throw std::invalid_argument("verify_envelope: need x_hi > x_lo");

  EnvelopeCheck out{};
  out.mu = mu;
  out.threshold = opts.threshold;
  out.x_lo = x_lo;
  out.x_hi = x_hi;
  out.n_points = n_points;
  out.poly_alpha = opts.poly_alpha;

  double best = kNegInf;
  auto visit = [&](double x) {
    const double v = log_eval(x) + mu * x;
    if (v > best) {
      best = v;
      out.arg_sup = x;
    }
  };
  const double step = (x_hi - x_lo) / (n_points - 1);
  for (int i = 0; i < n_points; ++i)
    visit(x_lo + i * step);
  for (double j = std::ceil(x_lo); j <= x_hi; j += 1.0)
    visit(j);
  out.sup_value = std::exp(best);

  const double trend_lo = x_hi - (x_hi - x_lo) / 3.0;
  std::vector<double> xs, ys;
  for (double j = std::ceil(trend_lo); j <= x_hi; j += 1.0) {
    xs.push_back(j);
    ys.push_back(log_eval(j) + mu * j + opts.poly_alpha * std::log(j * j + 1.0));
  }
  if (xs.size() < 3)
    throw std::invalid_argument("verify_envelope: window too short for a lattice trend");
  out.trend_slope = fit_line(xs, ys).slope;
  out.diverges = out.trend_slope > opts.threshold;
  return out;
}

//! Largest mu whose envelope check does not diverge, by bisection.
template <LogDensity F>
double
critical_mu_search(F&& log_eval,
                   double mu_lo,
                   double mu_hi,
                   double tol,
                   double x_lo,
                   double x_hi,
                   int n_points,
                   const EnvelopeOptions& opts = {})
{
  if (!(tol > 0.0) || !(mu_hi > mu_lo))
    throw std::invalid_argument("critical_mu_search: need tol > 0 and mu_hi > mu_lo");
  auto diverges = [&](double mu) {
    return verify_envelope(log_eval, mu, x_lo, x_hi, n_points, opts).diverges;
  };
  if (diverges(mu_lo) || !diverges(mu_hi))
    throw std::invalid_argument(
      "critical_mu_search: bracket must diverge at mu_hi and not at mu_lo");
  double lo = mu_lo, hi = mu_hi;
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    (diverges(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

inline void
to_json(nlohmann::json& j, const DecayReport& r)
{
  j = nlohmann::json{ { "lambda", r.lambda },
                      { "fitted_slope", r.fitted_slope },
                      { "eps_hat", r.eps_hat },
                      { "intercept", r.intercept },
                      { "max_residual", r.max_residual },
                      { "j_range", { r.j_lo, r.j_hi } },
                      { "poly_correction", r.poly_correction },
                      { "residual_limit", r.residual_limit },
                      { "fit_ok", r.fit_ok } };
}

inline void
to_json(nlohmann::json& j, const EnvelopeCheck& e)
{
  j = nlohmann::json{ { "mu", e.mu },
                      { "sup_value", e.sup_value },
                      { "arg_sup", e.arg_sup },
                      { "trend_slope", e.trend_slope },
                      { "diverges", e.diverges },
                      { "divergence_threshold", e.threshold },
                      { "window", { e.x_lo, e.x_hi } },
                      { "n_points", e.n_points },
                      { "poly_alpha", e.poly_alpha } };
}

} // namespace deflab
