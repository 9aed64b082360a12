#pragma once

#include "mixture.hpp"
#include "numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace deflab {

//! n_t = ceil((lambda - mu) / (lambda - t)), the convolution order from which
//! the t-tilted n-fold convolution of a density with deficiency lambda - mu
//! is bounded.
inline int
min_n_for_bounded(double lambda, double mu, double t)
{
  if (!(lambda > 0.0) || !(mu >= 0.0) || !(mu < lambda))
    throw std::invalid_argument("min_n_for_bounded: need 0 <= mu < lambda");
  if (!(t >= 0.0) || !(t < lambda))
    throw std::invalid_argument("min_n_for_bounded: need 0 <= t < lambda");
  const double r = (lambda - mu) / (lambda - t);
  // (1 - 0) / (1 - 0.9) is 10.000000000000002 in floating point
  return std::max(1, static_cast<int>(std::ceil(r - 1e-9 * r)));
}

struct TiltSupOptions
{
  std::optional<double> lambda; //!< with mu, fills TiltReport::n_t
  std::optional<double> mu;
  double prune_log_tol = kDefaultPruneLogTol;
  double refinement_limit = 0.01;
};

struct TiltReport
{
  double t;
  int n;
  std::optional<int> n_t;
  double sup_density;
  double sup_location;
  double grid_h;
  double refinement_delta; //!< |sup(h/2) - sup(h)| / sup(h/2)
  double x_lo;
  double x_hi;
  bool interior;        //!< sup attained strictly inside the window
  double edge_ratio_lo; //!< density at x_lo relative to the sup
  double edge_ratio_hi;
  bool bounded; //!< refinement_delta < refinement_limit and interior
  double refinement_limit;
  std::size_t n_components;
};

namespace detail {

struct SupResult
{
  double log_value;
  double location;
};

inline SupResult
sup_on_grid(const MixtureDensity& mix,
            std::span<const double> means,
            double lo,
            double hi,
            double h)
{
  SupResult best{ kNegInf, lo };
  auto visit = [&](double x) {
    const double v = evaluate_log(mix, x);
    if (v > best.log_value)
      best = { v, x };
  };
  for (double x : uniform_nodes(lo, hi, h))
    visit(x);
  for (double m : means)
    visit(m);
  return best;
}

} // namespace detail

//! sup of the n-fold convolution of the t-tilted mixture over [x_lo, x_hi].
//!
//! Candidates are every component mean inside the window (narrow tilted
//! components are spikes a grid can step over) together with a uniform grid
//! of step h, repeated at h/2 for the refinement check.
inline TiltReport
tilted_nfold_sup(const MixtureDensity& mix,
                 double t,
                 int n,
                 double x_lo,
                 double x_hi,
                 double h,
                 const TiltSupOptions& opts = {})
{
  if (n < 1)
    throw std::invalid_argument("tilted_nfold_sup: n must be >= 1");
  if (!(x_hi > x_lo) || !(h > 0.0))
    throw std::invalid_argument("tilted_nfold_sup: need x_lo < x_hi and h > 0");
  const auto conv = n_fold(tilt(mix, t).tilted, n, opts.prune_log_tol);

  std::vector<double> means;
  for (const auto& c : conv.components())
    if (c.mean > x_lo && c.mean < x_hi)
      means.push_back(c.mean);
  std::sort(means.begin(), means.end());
  means.erase(std::unique(means.begin(), means.end()), means.end());

  const auto coarse = detail::sup_on_grid(conv, means, x_lo, x_hi, h);
  const auto fine = detail::sup_on_grid(conv, means, x_lo, x_hi, 0.5 * h);

  TiltReport r{};
  r.t = t;
  r.n = n;
  if (opts.lambda && opts.mu)
    r.n_t = min_n_for_bounded(*opts.lambda, *opts.mu, t);
  r.sup_density = std::exp(fine.log_value);
  r.sup_location = fine.location;
  r.grid_h = h;
  r.refinement_delta = std::abs(std::exp(fine.log_value) - std::exp(coarse.log_value)) /
                       std::exp(fine.log_value);
  r.x_lo = x_lo;
  r.x_hi = x_hi;
  r.interior = fine.location > x_lo && fine.location < x_hi;
  r.edge_ratio_lo = std::exp(evaluate_log(conv, x_lo) - fine.log_value);
  r.edge_ratio_hi = std::exp(evaluate_log(conv, x_hi) - fine.log_value);
  r.refinement_limit = opts.refinement_limit;
  r.bounded = r.refinement_delta < opts.refinement_limit && r.interior;
  r.n_components = conv.size();
  return r;
}

struct TailFitOptions
{
  //! Adds log_correction * ln ln s to log|f(s)| before the fit, removing a
  //! (ln s)^{-c} factor. The extremal family's polynomial weights produce
  //! c = 2 alpha.
  double log_correction = 0.0;
  //! > 0: sample at s = 2 pi k / lattice_period (integer k) so every sample
  //! sees the lattice phases aligned. <= 0: plain log spacing.
  double lattice_period = 0.0;
  int n_points = 400;
};

struct TailFit
{
  double exponent; //!< slope of the corrected log|f| against ln s
  double intercept;
  double exponent_lo; //!< fit on [s_lo, s_hi/3]
  double exponent_hi; //!< fit on [s_hi/3, s_hi]
  bool unreliable;    //!< split fits disagree by more than 10%
  std::size_t n_samples;
};

namespace detail {

inline std::vector<double>
tail_samples(double s_lo, double s_hi, const TailFitOptions& opts)
{
  std::vector<double> s;
  const double a = std::log(s_lo), b = std::log(s_hi);
  const int n = std::max(opts.n_points, 3);
  for (int i = 0; i < n; ++i) {
    const double v = std::exp(a + (b - a) * i / (n - 1));
    if (opts.lattice_period > 0.0) {
      const double unit = 2.0 * std::numbers::pi / opts.lattice_period;
      const double k = std::max(1.0, std::round(v / unit));
      s.push_back(k * unit);
    } else {
      s.push_back(v);
    }
  }
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline LineFit
corrected_loglog_fit(const MixtureDensity& mix,
                     double s_lo,
                     double s_hi,
                     const TailFitOptions& opts)
{
  const auto s = tail_samples(s_lo, s_hi, opts);
  if (s.size() < 3)
    throw std::invalid_argument("fit_cf_tail: fewer than 3 distinct sample points");
  std::vector<double> xs, ys;
  for (double v : s) {
    if (v <= 1.0)
      continue; // ln ln s undefined
    xs.push_back(std::log(v));
    ys.push_back(log_cf_magnitude(mix, v) + opts.log_correction * std::log(std::log(v)));
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_cf_tail: fewer than 3 sample points above s = 1");
  return fit_line(xs, ys);
}

} // namespace detail

//! Power-law fit of |f(s)| on [s_lo, s_hi], cross-checked by separate fits
//! on [s_lo, s_hi/3] and [s_hi/3, s_hi].
inline TailFit
fit_cf_tail(const MixtureDensity& mix,
            double s_lo,
            double s_hi,
            const TailFitOptions& opts = {})
{
  if (!(s_lo > 1.0) || !(s_hi > 3.0 * s_lo))
    throw std::invalid_argument("fit_cf_tail: need 1 < s_lo and s_hi > 3 s_lo");
  const auto all = detail::corrected_loglog_fit(mix, s_lo, s_hi, opts);
  const auto lo = detail::corrected_loglog_fit(mix, s_lo, s_hi / 3.0, opts);
  const auto hi = detail::corrected_loglog_fit(mix, s_hi / 3.0, s_hi, opts);
  TailFit out{};
  out.exponent = all.slope;
  out.intercept = all.intercept;
  out.exponent_lo = lo.slope;
  out.exponent_hi = hi.slope;
  out.unreliable = std::abs(lo.slope - hi.slope) >
                   0.1 * std::max(std::abs(lo.slope), std::abs(hi.slope));
  out.n_samples = detail::tail_samples(s_lo, s_hi, opts).size();
  return out;
}

struct CfIntegralOptions
{
  TailFitOptions tail;
  double fit_margin = 0.1;
};

struct CfIntegrabilityReport
{
  double gamma;
  double partial_integral; //!< int_{-S}^{S} |f|^gamma
  double S;
  double tail_exponent;
  bool converges; //!< gamma * (-tail_exponent) > 1 + fit_margin
  double extrapolated_tail; //!< infinite when the local power law is not integrable
  double fit_margin;
  double log_correction;
  double local_exponent; //!< tail_exponent - log_correction / ln S
  double tail_level;     //!< mean of |f|^gamma over [0.9 S, S]
  double tail_exponent_lo;
  double tail_exponent_hi;
  bool tail_fit_unreliable;
  int n_quad;
};

//! int |f(s)|^gamma ds over the real line, as a trapezoid sum on [-S, S]
//! (|f(-s)| = |f(s)|) plus a power-law tail beyond S.
//!
//! The tail uses the local exponent at S, which for a corrected fit
//! log|f| = a + b ln s - c ln ln s is b - c / ln S, and the average of
//! |f|^gamma over [0.9 S, S] as the level at S: a single sample at S can sit
//! on a cancellation of the lattice phases. The tail is finite whenever
//! the local power law decays faster than 1/s, which can hold at the
//! integrability boundary (gamma |b| = 1) where the verdict is still false.
inline CfIntegrabilityReport
cf_gamma_integral(const MixtureDensity& mix,
                  double gamma,
                  double S,
                  int n_quad,
                  const CfIntegralOptions& opts = {})
{
  if (!(gamma > 0.0))
    throw std::invalid_argument("cf_gamma_integral: gamma must be positive");
  if (!(S > 10.0))
    throw std::invalid_argument("cf_gamma_integral: S must exceed 10");
  if (n_quad < 4096)
    throw std::invalid_argument("cf_gamma_integral: n_quad must be >= 4096");

  const double h = S / n_quad;
  double sum = 0.0;
  double level = 0.0;
  int level_count = 0;
  for (int i = 0; i <= n_quad; ++i) {
    const double s = i * h;
    const double v = std::exp(gamma * log_cf_magnitude(mix, s));
    sum += (i == 0 || i == n_quad) ? 0.5 * v : v;
    if (s >= 0.9 * S) {
      level += v;
      ++level_count;
    }
  }
  const double partial = 2.0 * h * sum;

  const auto fit = fit_cf_tail(mix, S / 10.0, S, opts.tail);
  CfIntegrabilityReport r{};
  r.gamma = gamma;
  r.partial_integral = partial;
  r.S = S;
  r.tail_exponent = fit.exponent;
  r.fit_margin = opts.fit_margin;
  r.converges = gamma * (-fit.exponent) > 1.0 + opts.fit_margin;
  r.log_correction = opts.tail.log_correction;
  r.local_exponent = fit.exponent - opts.tail.log_correction / std::log(S);
  r.tail_level = level / level_count;
  r.tail_exponent_lo = fit.exponent_lo;
  r.tail_exponent_hi = fit.exponent_hi;
  r.tail_fit_unreliable = fit.unreliable;
  r.n_quad = n_quad;
  const double decay = gamma * (-r.local_exponent) - 1.0;
  if (decay > 0.0)
    r.extrapolated_tail = 2.0 * S * r.tail_level / decay;
  else
    r.extrapolated_tail = kInf;
  return r;
}

struct PlancherelResult
{
  double lhs; //!< int |f|^2, quadrature plus tail
  double rhs; //!< 2 pi int p^2 in closed form
  double rel_err;
  bool tail_fit_unreliable;
  CfIntegrabilityReport integral;
};

//! int |f(s)|^2 ds = 2 pi int p(x)^2 dx, the left side by quadrature with
//! tail extrapolation and the right side by l2_inner.
inline PlancherelResult
plancherel_check(const MixtureDensity& mix,
                 double S,
                 int n_quad,
                 const CfIntegralOptions& opts = {})
{
  if (!mix.is_normalized())
    throw std::invalid_argument("plancherel_check: mixture must be normalized");
  PlancherelResult out{};
  out.integral = cf_gamma_integral(mix, 2.0, S, n_quad, opts);
  const double tail =
    std::isfinite(out.integral.extrapolated_tail) ? out.integral.extrapolated_tail : 0.0;
  out.lhs = out.integral.partial_integral + tail;
  out.rhs = 2.0 * std::numbers::pi * l2_inner(mix, mix);
  out.rel_err = std::abs(out.lhs - out.rhs) / out.rhs;
  out.tail_fit_unreliable = out.integral.tail_fit_unreliable;
  return out;
}

//! (1 / 2 pi) int_{-S}^{S} f(s) e^{-isx} ds by the trapezoid rule; the
//! integrand is even in its real part, so this is (1/pi) int_0^S.
inline double
fourier_inversion(const MixtureDensity& mix, double x, double S, int n_quad)
{
  if (!(S > 0.0) || n_quad < 16)
    throw std::invalid_argument("fourier_inversion: need S > 0 and n_quad >= 16");
  const double h = S / n_quad;
  double sum = 0.0;
  for (int i = 0; i <= n_quad; ++i) {
    const double s = i * h;
    const auto v = cf(mix, s) * std::polar(1.0, -s * x);
    sum += (i == 0 || i == n_quad) ? 0.5 * v.real() : v.real();
  }
  return sum * h / std::numbers::pi / std::exp(mix.log_total_mass());
}

inline void
to_json(nlohmann::json& j, const TiltReport& r)
{
  j = nlohmann::json{ { "t", r.t },
                      { "n", r.n },
                      { "n_t", r.n_t ? nlohmann::json(*r.n_t) : nlohmann::json(nullptr) },
                      { "sup_density", r.sup_density },
                      { "sup_location", r.sup_location },
                      { "grid_h", r.grid_h },
                      { "refinement_delta", r.refinement_delta },
                      { "window", { r.x_lo, r.x_hi } },
                      { "interior", r.interior },
                      { "edge_ratio_lo", r.edge_ratio_lo },
                      { "edge_ratio_hi", r.edge_ratio_hi },
                      { "bounded", r.bounded },
                      { "refinement_limit", r.refinement_limit },
                      { "n_components", r.n_components } };
}

inline void
to_json(nlohmann::json& j, const CfIntegrabilityReport& r)
{
  j = nlohmann::json{
    { "gamma", r.gamma },
    { "partial_integral", r.partial_integral },
    { "S", r.S },
    { "tail_exponent", r.tail_exponent },
    { "converges", r.converges },
    { "extrapolated_tail",
      std::isfinite(r.extrapolated_tail) ? nlohmann::json(r.extrapolated_tail)
                                         : nlohmann::json("inf") },
    { "fit_margin", r.fit_margin },
    { "log_correction", r.log_correction },
    { "local_exponent", r.local_exponent },
    { "tail_level", r.tail_level },
    { "tail_exponent_split", { r.tail_exponent_lo, r.tail_exponent_hi } },
    { "tail_fit_unreliable", r.tail_fit_unreliable },
    { "n_quad", r.n_quad }
  };
}

inline void
to_json(nlohmann::json& j, const PlancherelResult& r)
{
  j = nlohmann::json{ { "lhs", r.lhs },
                      { "rhs", r.rhs },
                      { "rel_err", r.rel_err },
                      { "tail_fit_unreliable", r.tail_fit_unreliable },
                      { "integral", r.integral } };
}

} // namespace deflab
