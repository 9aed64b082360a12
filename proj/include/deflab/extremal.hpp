#pragma once

#include "mixture.hpp"
#include "numeric.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deflab {

//! Parameters of the lattice mixture
//!   p(x) = sum_j w_j f_{j, kappa e^{-eps |j|}}(x),  w_j = e^{-lambda |j|} / (j^2 + 1)^alpha
//! truncated to |j| <= J. mu = lambda - eps is always derived.
struct ExtremalParams
{
  double lambda = 0.55;
  double eps = 0.50;
  double kappa = 0.9;
  double alpha = 0.6;
  std::optional<int> trunc_J;

  double mu() const { return lambda - eps; }

  void validate() const
  {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("ExtremalParams: lambda must be positive");
    if (!(eps > 0.0) || eps > lambda)
      throw std::invalid_argument("ExtremalParams: need 0 < eps <= lambda");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
      throw std::invalid_argument("ExtremalParams: kappa must be positive");
    if (!(alpha > 0.5) || !std::isfinite(alpha))
      throw std::invalid_argument("ExtremalParams: alpha must exceed 1/2");
    if (trunc_J && *trunc_J < 1)
      throw std::invalid_argument("ExtremalParams: trunc_J must be >= 1");
  }
};

inline constexpr int kMaxAutoTruncation = 200;

//! Unnormalized log w_j.
inline double
extremal_log_weight(int j, double lambda, double alpha)
{
  const double dj = j;
  return -lambda * std::abs(dj) - alpha * std::log(dj * dj + 1.0);
}

//! Integral-comparison bound on sum_{|j| > J} w_j.
inline double
truncation_tail_bound(int J, double lambda, double alpha)
{
  return 2.0 * std::exp(-lambda * J) * std::pow(J, 1.0 - 2.0 * alpha) /
         (2.0 * alpha - 1.0);
}

//! Smallest J whose tail bound is below 1e-12 of the partial sum. Throws
//! when J = 200 does not get there (alpha close to 1/2 with small lambda).
inline int
choose_truncation(double lambda, double alpha)
{
  double partial = 1.0;
  for (int J = 1; J <= kMaxAutoTruncation; ++J) {
    partial += 2.0 * std::exp(extremal_log_weight(J, lambda, alpha));
    if (truncation_tail_bound(J, lambda, alpha) < 1e-12 * partial)
      return J;
  }
  throw std::domain_error(
    "choose_truncation: tail mass cannot be brought below 1e-12 with J <= " +
    std::to_string(kMaxAutoTruncation) + "; pass trunc_J explicitly");
}

inline int
resolved_truncation(const ExtremalParams& params)
{
  params.validate();
  return params.trunc_J ? *params.trunc_J
                        : choose_truncation(params.lambda, params.alpha);
}

struct ExtremalBuild
{
  MixtureDensity mix;
  double log_c;      //!< log of the truncated normalizing constant
  int trunc_J;
  double tail_bound; //!< bound on the omitted weight, relative to c
};

inline ExtremalBuild
build_extremal(const ExtremalParams& params)
{
  const int J = resolved_truncation(params);
  std::vector<GaussianComponent> comps;
  comps.reserve(2 * static_cast<std::size_t>(J) + 1);
  LogSumExp lc;
  for (int j = -J; j <= J; ++j) {
    const double lw = extremal_log_weight(j, params.lambda, params.alpha);
    lc.add(lw);
    comps.push_back({ lw, static_cast<double>(j),
                      params.kappa * std::exp(-params.eps * std::abs(j)) });
  }
  const double log_c = lc.value();
  for (auto& c : comps)
    c.log_weight -= log_c;
  return { MixtureDensity(std::move(comps)), log_c, J,
           truncation_tail_bound(J, params.lambda, params.alpha) /
             std::exp(log_c) };
}

//! Peak-sum constant C = sum_j W_j(j) of the unnormalized density, so that
//! p(x) <= C e^{-(lambda - eps) x}.
inline double
envelope_constant(const ExtremalParams& params)
{
  const int J = resolved_truncation(params);
  const double mu = params.mu();
  LogSumExp acc;
  for (int j = -J; j <= J; ++j) {
    const double dj = j;
    acc.add(-mu * std::abs(dj) - params.alpha * std::log(dj * dj + 1.0));
  }
  return std::exp(acc.value() - std::log(params.kappa) - kLogSqrt2Pi);
}

struct ClosedFormMgf
{
  double value;
  bool beyond_lambda; //!< |u| > lambda: finite only because of truncation
};

//! log E e^{uX} for the normalized truncated density, summed directly from
//! w_j exp(u j + u^2 kappa^2 e^{-2 eps |j|} / 2).
inline ClosedFormMgf
log_mgf_closed_form(const ExtremalParams& params, double u)
{
  const int J = resolved_truncation(params);
  LogSumExp num, den;
  for (int j = -J; j <= J; ++j) {
    const double lw = extremal_log_weight(j, params.lambda, params.alpha);
    const double width = params.kappa * std::exp(-params.eps * std::abs(j));
    den.add(lw);
    num.add(lw + u * j + 0.5 * u * u * width * width);
  }
  return { num.value() - den.value(), std::abs(u) > params.lambda };
}

struct SplitIndices
{
  int m;
  int i_m;
  int j_m;
};

//! i_m = floor(m delta / (eps + delta)), j_m = m - i_m for m >= 0, reflected
//! (i_m = -i_{-m}, j_m = -j_{-m}) for m < 0.
inline SplitIndices
split_indices(int m, double eps, double delta)
{
  if (!(eps > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("split_indices: eps and delta must be positive");
  if (m < 0) {
    const auto r = split_indices(-m, eps, delta);
    return { m, -r.i_m, -r.j_m };
  }
  const int i = static_cast<int>(std::floor(m * (delta / (eps + delta))));
  return { m, i, m - i };
}

struct LowerBoundParams
{
  double eps_tilde;
  double zeta;
  double zeta_tilde;
  double alpha_sum;
};

//! Parameters of the lattice mixture that bounds p * q from below:
//! eps~ = 1/(1/eps + 1/delta), zeta = sqrt(kappa^2 + xi^2 e^{-2 delta}),
//! zeta~ = sqrt(kappa^2 e^{2 eps} + xi^2), alpha + beta.
inline LowerBoundParams
lower_bound_params(double eps,
                   double delta,
                   double kappa,
                   double xi,
                   double alpha,
                   double beta)
{
  if (!(eps > 0.0) || !(delta > 0.0) || !(kappa > 0.0) || !(xi > 0.0))
    throw std::invalid_argument("lower_bound_params: inputs must be positive");
  if (!(alpha > 0.5) || !(beta > 0.5))
    throw std::invalid_argument("lower_bound_params: alpha, beta must exceed 1/2");
  LowerBoundParams out{};
  out.eps_tilde = 1.0 / (1.0 / eps + 1.0 / delta);
  out.zeta = std::sqrt(kappa * kappa + xi * xi * std::exp(-2.0 * delta));
  out.zeta_tilde = std::sqrt(kappa * kappa * std::exp(2.0 * eps) + xi * xi);
  out.alpha_sum = alpha + beta;
  if (out.zeta_tilde / out.zeta > std::exp(std::max(eps, delta)) * (1 + 1e-12))
    throw std::logic_error("lower_bound_params: zeta~/zeta exceeds e^{max(eps,delta)}");
  return out;
}

struct SplitWitness
{
  int m;
  int i_m;
  int j_m;
  double sigma_m;
  double zeta;
  double zeta_tilde;
  double eps_tilde;
};

//! Split indices together with the width sigma_m of f_{i_m,.} * f_{j_m,.}
//! and the constants sandwiching it.
inline SplitWitness
split_witness(int m, double eps, double delta, double kappa, double xi)
{
  const auto idx = split_indices(m, eps, delta);
  const double di = idx.i_m, dj = idx.j_m;
  const double sigma = std::sqrt(kappa * kappa * std::exp(-2.0 * eps * std::abs(di)) +
                                 xi * xi * std::exp(-2.0 * delta * std::abs(dj)));
  const double eps_tilde = 1.0 / (1.0 / eps + 1.0 / delta);
  return { m,
           idx.i_m,
           idx.j_m,
           sigma,
           std::sqrt(kappa * kappa + xi * xi * std::exp(-2.0 * delta)),
           std::sqrt(kappa * kappa * std::exp(2.0 * eps) + xi * xi),
           eps_tilde };
}

//! Checks i_m + j_m = m, the floor/ceiling sandwiches around m delta/(eps+delta)
//! and m eps/(eps+delta) (mirrored for m < 0), the width sandwich
//! zeta e^{-eps~|m|} <= sigma_m <= zeta~ e^{-eps~|m|} and zeta~/zeta <= e^{max(eps,delta)},
//! each up to a relative tolerance `tol`.
inline bool
split_invariants_hold(const SplitWitness& w, double eps, double delta, double tol = 1e-9)
{
  if (w.i_m + w.j_m != w.m)
    return false;
  const double am = std::abs(w.m);
  const double ai = std::abs(w.i_m), aj = std::abs(w.j_m);
  const double si = am * delta / (eps + delta), sj = am * eps / (eps + delta);
  const double slack = tol * std::max(1.0, am);
  if (ai < si - 1.0 - slack || ai > si + slack)
    return false;
  if (aj < sj - slack || aj > sj + 1.0 + slack)
    return false;
  if (w.m != 0 && ((w.i_m != 0 && (w.i_m > 0) != (w.m > 0)) ||
                   (w.j_m != 0 && (w.j_m > 0) != (w.m > 0))))
    return false;
  const double env = std::exp(-w.eps_tilde * am);
  if (w.sigma_m < w.zeta * env * (1.0 - tol) || w.sigma_m > w.zeta_tilde * env * (1.0 + tol))
    return false;
  return w.zeta_tilde / w.zeta <= std::exp(std::max(eps, delta)) * (1.0 + tol);
}

//! Integers in [lo, hi] with `subdivisions` equal steps between them.
inline std::vector<double>
lattice_grid(double lo, double hi, int subdivisions = 8)
{
  if (subdivisions < 1 || !(hi > lo))
    throw std::invalid_argument("lattice_grid: need hi > lo and subdivisions >= 1");
  const double h = 1.0 / subdivisions;
  const double start = std::ceil(lo * subdivisions) / subdivisions;
  std::vector<double> x;
  for (long k = 0;; ++k) {
    const double v = start + static_cast<double>(k) * h;
    if (v > hi + 1e-12)
      break;
    x.push_back(v);
  }
  return x;
}

struct WitnessRatio
{
  double min_log_ratio;
  double argmin;
};

//! min over the grid of log(conv(x)) - log(reference(x)).
inline WitnessRatio
witness_ratio(const MixtureDensity& conv,
              const MixtureDensity& reference,
              std::span<const double> x_grid)
{
  if (x_grid.empty())
    throw std::invalid_argument("witness_ratio: empty grid");
  WitnessRatio out{ kInf, x_grid.front() };
  for (double x : x_grid) {
    const double r = evaluate_log(conv, x) - evaluate_log(reference, x);
    if (r < out.min_log_ratio) {
      out.min_log_ratio = r;
      out.argmin = x;
    }
  }
  return out;
}

inline WitnessRatio
witness_ratio(const MixtureDensity& p,
              const MixtureDensity& q,
              const MixtureDensity& reference,
              std::span<const double> x_grid,
              double prune_log_tol = kDefaultPruneLogTol)
{
  return witness_ratio(convolve(p, q, prune_log_tol), reference, x_grid);
}

//! K_2 = D M lambda / delta + C N lambda / eps, the constant in
//! (p * q)(x) <= K_2 e^{-(lambda - eps~) x} built from the split of the
//! convolution integral at u = x eps / (eps + delta).
inline double
theoretical_k2(double lambda,
               double eps,
               double delta,
               double M,
               double N,
               double C,
               double D)
{
  if (!(lambda > 0.0) || !(eps > 0.0) || !(delta > 0.0) || !(M > 0.0) ||
      !(N > 0.0) || !(C > 0.0) || !(D > 0.0))
    throw std::invalid_argument("theoretical_k2: inputs must be positive");
  if (eps > lambda || delta > lambda)
    throw std::invalid_argument("theoretical_k2: eps, delta must be <= lambda");
  return D * M * lambda / delta + C * N * lambda / eps;
}

//! q(x) phi_{k-1}(y): the k-dimensional product density whose first
//! coordinate carries the mixture and whose remaining k-1 are standard normal.
inline double
product_density_eval(const MixtureDensity& q, double x, std::span<const double> y)
{
  double yy = 0.0;
  for (double v : y)
    yy += v * v;
  const double k1 = static_cast<double>(y.size());
  return std::exp(evaluate_log(q, x) - k1 * kLogSqrt2Pi - 0.5 * yy);
}

} // namespace deflab
