#pragma once

#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deflab {

//! Default relative pruning threshold for convolutions, in nats below the
//! largest component log-weight.
inline const double kDefaultPruneLogTol = -300.0 * std::numbers::ln10;

//! One weighted normal component w * f_{mean, std}, with w = exp(log_weight).
struct GaussianComponent
{
  double log_weight;
  double mean;
  double std;
};

//! Finite Gaussian mixture with log-domain weights.
//!
//! Weights of the extremal family span hundreds of orders of magnitude, so
//! nothing here ever materializes a weight in the linear domain. Values are
//! immutable after construction.
class MixtureDensity
{
public:
  explicit MixtureDensity(std::vector<GaussianComponent> components,
                          double log_pruned_mass = kNegInf);

  std::span<const GaussianComponent> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const GaussianComponent& operator[](std::size_t i) const
  {
    return components_[i];
  }

  double log_total_mass() const { return log_total_mass_; }

  //! Log of the weight dropped by pruning anywhere in this mixture's history
  //! (-inf if nothing was dropped).
  double log_pruned_mass() const { return log_pruned_mass_; }

  //! Pruned weight relative to the retained weight.
  double pruned_mass_fraction() const
  {
    return std::exp(log_pruned_mass_ - log_total_mass_);
  }

  bool is_normalized(double tol = 1e-9) const
  {
    return std::abs(log_total_mass_) <= tol;
  }

  MixtureDensity normalized() const;

  //! log(w_j / (std_j sqrt(2 pi))), the log of component j at its mean.
  double log_peak(std::size_t i) const { return log_peak_[i]; }
  //! 1 / (2 std_j^2)
  double inv_two_var(std::size_t i) const { return inv_two_var_[i]; }

private:
  std::vector<GaussianComponent> components_;
  double log_total_mass_;
  double log_pruned_mass_;
  std::vector<double> log_peak_;
  std::vector<double> inv_two_var_;
};

inline MixtureDensity::MixtureDensity(std::vector<GaussianComponent> components,
                                      double log_pruned_mass)
  : components_(std::move(components))
  , log_pruned_mass_(log_pruned_mass)
{
  if (components_.empty())
    throw std::invalid_argument("MixtureDensity: no components");
  LogSumExp total;
  log_peak_.reserve(components_.size());
  inv_two_var_.reserve(components_.size());
  for (const auto& c : components_) {
    if (!std::isfinite(c.log_weight))
      throw std::invalid_argument("MixtureDensity: non-finite log_weight");
    if (!std::isfinite(c.mean))
      throw std::invalid_argument("MixtureDensity: non-finite mean");
    if (!(c.std > 0.0) || !std::isfinite(c.std))
      throw std::invalid_argument("MixtureDensity: std must be positive");
    total.add(c.log_weight);
    log_peak_.push_back(c.log_weight - std::log(c.std) - kLogSqrt2Pi);
    inv_two_var_.push_back(0.5 / (c.std * c.std));
  }
  log_total_mass_ = total.value();
}

inline MixtureDensity
MixtureDensity::normalized() const
{
  std::vector<GaussianComponent> out = components_;
  for (auto& c : out)
    c.log_weight -= log_total_mass_;
  return MixtureDensity(std::move(out), log_pruned_mass_ - log_total_mass_);
}

//! Mixture with a single component of unit weight.
inline MixtureDensity
normal_density(double mean, double std)
{
  return MixtureDensity({ { 0.0, mean, std } });
}

//! log p(x), computed as a log-sum-exp of analytic per-component log terms,
//! so it stays finite however far x sits in the tails.
inline double
evaluate_log(const MixtureDensity& mix, double x)
{
  LogSumExp acc;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double d = x - mix[i].mean;
    acc.add(mix.log_peak(i) - d * d * mix.inv_two_var(i));
  }
  return acc.value();
}

inline double
evaluate(const MixtureDensity& mix, double x)
{
  return std::exp(evaluate_log(mix, x));
}

namespace detail {

//! Merges components whose (mean, std) agree to relative 1e-14 by adding
//! their weights in log space. Output is sorted by (mean, std).
inline std::vector<GaussianComponent>
merge_duplicates(std::vector<GaussianComponent> comps)
{
  constexpr double tol = 1e-14;
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    return a.mean < b.mean || (a.mean == b.mean && a.std < b.std);
  });
  std::vector<GaussianComponent> out;
  out.reserve(comps.size());
  std::size_t g = 0;
  while (g < comps.size()) {
    // group of (nearly) equal means
    std::size_t e = g + 1;
    const double m0 = comps[g].mean;
    while (e < comps.size() &&
           comps[e].mean - m0 <= tol * std::max(1.0, std::abs(m0)))
      ++e;
    std::sort(comps.begin() + static_cast<std::ptrdiff_t>(g),
              comps.begin() + static_cast<std::ptrdiff_t>(e),
              [](const auto& a, const auto& b) { return a.std < b.std; });
    std::size_t k = g;
    while (k < e) {
      GaussianComponent acc = comps[k];
      std::size_t r = k + 1;
      while (r < e && comps[r].std - acc.std <= tol * acc.std) {
        acc.log_weight = log_add_exp(acc.log_weight, comps[r].log_weight);
        ++r;
      }
      out.push_back(acc);
      k = r;
    }
    g = e;
  }
  return out;
}

} // namespace detail

//! Exact convolution of two mixtures: one component per pair, weights
//! multiply, means add, variances add.
//!
//! Components more than -prune_log_tol nats below the heaviest pair are
//! dropped and their mass is added to log_pruned_mass(). With
//! merge_duplicates, components sharing (mean, std) are combined.
inline MixtureDensity
convolve(const MixtureDensity& a,
         const MixtureDensity& b,
         double prune_log_tol = kDefaultPruneLogTol,
         bool merge_duplicates = true)
{
  if (std::isnan(prune_log_tol) || prune_log_tol > 0.0)
    throw std::invalid_argument("convolve: prune_log_tol must be <= 0");

  double max_lw = kNegInf;
  for (const auto& ca : a.components())
    for (const auto& cb : b.components())
      max_lw = std::max(max_lw, ca.log_weight + cb.log_weight);
  const double cutoff = max_lw + prune_log_tol;

  std::vector<GaussianComponent> out;
  out.reserve(a.size() * b.size());
  LogSumExp dropped;
  for (const auto& ca : a.components()) {
    const double va = ca.std * ca.std;
    for (const auto& cb : b.components()) {
      const double lw = ca.log_weight + cb.log_weight;
      if (lw < cutoff) {
        dropped.add(lw);
        continue;
      }
      out.push_back({ lw, ca.mean + cb.mean, std::sqrt(va + cb.std * cb.std) });
    }
  }
  if (merge_duplicates)
    out = detail::merge_duplicates(std::move(out));

  LogSumExp pruned;
  pruned.add(dropped.value());
  pruned.add(a.log_pruned_mass() + b.log_total_mass());
  pruned.add(b.log_pruned_mass() + a.log_total_mass());
  return MixtureDensity(std::move(out), pruned.value());
}

//! n-fold self-convolution by left fold, pruning after every step.
inline MixtureDensity
n_fold(const MixtureDensity& mix,
       int n,
       double prune_log_tol = kDefaultPruneLogTol)
{
  if (n < 1)
    throw std::invalid_argument("n_fold: n must be >= 1");
  MixtureDensity acc = mix;
  for (int k = 2; k <= n; ++k)
    acc = convolve(acc, mix, prune_log_tol);
  return acc;
}

struct TiltResult
{
  MixtureDensity tilted;
  double log_mgf;
};

//! Exponential tilt e^{tx} p(x) / E e^{tX}.
//!
//! Componentwise e^{tx} f_{a,b}(x) = e^{ta + t^2 b^2 / 2} f_{a + t b^2, b}(x),
//! so the tilted density is again a mixture with the same widths.
inline TiltResult
tilt(const MixtureDensity& mix, double t)
{
  if (!mix.is_normalized())
    throw std::invalid_argument("tilt: mixture must be normalized");
  std::vector<GaussianComponent> out(mix.components().begin(),
                                     mix.components().end());
  LogSumExp total;
  for (auto& c : out) {
    const double var = c.std * c.std;
    c.log_weight += t * c.mean + 0.5 * t * t * var;
    c.mean += t * var;
    total.add(c.log_weight);
  }
  const double lm = total.value();
  for (auto& c : out)
    c.log_weight -= lm;
  return { MixtureDensity(std::move(out)), lm - mix.log_total_mass() };
}

//! log of the moment generating function, log int e^{ux} p(x) dx / mass.
inline double
log_mgf(const MixtureDensity& mix, double u)
{
  LogSumExp acc;
  for (const auto& c : mix.components())
    acc.add(c.log_weight + u * c.mean + 0.5 * u * u * c.std * c.std);
  return acc.value() - mix.log_total_mass();
}

//! Characteristic function int e^{isx} p(x) dx.
inline std::complex<double>
cf(const MixtureDensity& mix, double s)
{
  double re = 0.0, im = 0.0;
  for (const auto& c : mix.components()) {
    const double sd = s * c.std;
    const double l = c.log_weight - 0.5 * sd * sd;
    if (l < -745.0)
      continue;
    const double amp = std::exp(l);
    re += amp * std::cos(s * c.mean);
    im += amp * std::sin(s * c.mean);
  }
  return { re, im };
}

//! log |cf(mix, s)| without underflow: the largest term is factored out
//! before the phases are summed.
inline double
log_cf_magnitude(const MixtureDensity& mix, double s)
{
  double lmax = kNegInf;
  for (const auto& c : mix.components()) {
    const double sd = s * c.std;
    lmax = std::max(lmax, c.log_weight - 0.5 * sd * sd);
  }
  double re = 0.0, im = 0.0;
  for (const auto& c : mix.components()) {
    const double sd = s * c.std;
    const double l = c.log_weight - 0.5 * sd * sd - lmax;
    if (l < -60.0)
      continue;
    const double amp = std::exp(l);
    re += amp * std::cos(s * c.mean);
    im += amp * std::sin(s * c.mean);
  }
  return lmax + 0.5 * std::log(re * re + im * im);
}

//! int p(x) q(x) dx in closed form: sum_ij w_i v_j f_{m_i, sqrt(s_i^2+s_j^2)}(m_j).
inline double
l2_inner(const MixtureDensity& a, const MixtureDensity& b)
{
  LogSumExp acc;
  for (const auto& ca : a.components()) {
    for (const auto& cb : b.components()) {
      const double var = ca.std * ca.std + cb.std * cb.std;
      const double d = ca.mean - cb.mean;
      acc.add(ca.log_weight + cb.log_weight - 0.5 * std::log(var) -
              kLogSqrt2Pi - 0.5 * d * d / var);
    }
  }
  return std::exp(acc.value());
}

//! log P(X >= x)
inline double
log_tail_prob(const MixtureDensity& mix, double x)
{
  LogSumExp acc;
  for (const auto& c : mix.components())
    acc.add(c.log_weight + log_normal_upper_tail((x - c.mean) / c.std));
  return acc.value() - mix.log_total_mass();
}

inline double
tail_prob(const MixtureDensity& mix, double x)
{
  return std::min(1.0, std::exp(log_tail_prob(mix, x)));
}

//! Tail probabilities against the Chebyshev bound M e^{-lambda x}, with
//! M = E e^{lambda X}.
struct TailBoundCheck
{
  std::vector<double> x_values;
  std::vector<double> tail_probs;
  std::vector<double> chebyshev_bounds;
  bool all_satisfied;
};

inline TailBoundCheck
check_chebyshev(const MixtureDensity& mix,
                double lambda,
                std::span<const double> x_values)
{
  TailBoundCheck out;
  out.x_values.assign(x_values.begin(), x_values.end());
  out.all_satisfied = true;
  const double log_m = log_mgf(mix, lambda);
  for (double x : x_values) {
    const double lt = log_tail_prob(mix, x);
    const double lb = log_m - lambda * x;
    out.tail_probs.push_back(std::min(1.0, std::exp(lt)));
    out.chebyshev_bounds.push_back(std::exp(lb));
    // tail <= bound * (1 + 1e-12), compared in log scale
    if (lt > lb + 1e-12)
      out.all_satisfied = false;
  }
  return out;
}

} // namespace deflab
