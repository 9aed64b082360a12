#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace deflab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

//! log(sqrt(2 pi))
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

namespace detail {

//! Terms this far below the running maximum are dropped. e^-50 ~ 2e-22, so
//! even a few million dropped terms stay below double precision of the sum.
inline constexpr double kLogSkip = -50.0;

} // namespace detail

//! Streaming log-sum-exp accumulator. Empty sums are log 0 = -inf.
class LogSumExp
{
public:
  void add(double v) noexcept
  {
    if (v == kNegInf)
      return;
    if (v > max_) {
      if (max_ != kNegInf)
        sum_ = sum_ * std::exp(max_ - v) + 1.0;
      else
        sum_ = 1.0;
      max_ = v;
    } else if (v - max_ > detail::kLogSkip) {
      sum_ += std::exp(v - max_);
    }
  }

  double value() const noexcept
  {
    return max_ == kNegInf ? kNegInf : max_ + std::log(sum_);
  }

private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double
log_sum_exp(std::span<const double> values) noexcept
{
  LogSumExp acc;
  for (double v : values)
    acc.add(v);
  return acc.value();
}

inline double
log_add_exp(double a, double b) noexcept
{
  LogSumExp acc;
  acc.add(a);
  acc.add(b);
  return acc.value();
}

//! log P(Z >= z) for a standard normal Z.
//!
//! Uses erfc where it is accurate and the Mills-ratio continued fraction
//! R(z) = 1/(z+1/(z+2/(z+3/(z+...)))) for z > 8, where erfc would underflow
//! long before the tail probability stops being meaningful in log scale.
inline double
log_normal_upper_tail(double z)
{
  if (std::isnan(z))
    return z;
  if (z < -8.0) {
    // Q(z) = 1 - Q(-z), and Q(-z) < 1e-15 here
    return std::log1p(-0.5 * std::erfc(-z / std::numbers::sqrt2));
  }
  if (z <= 8.0)
    return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z == kInf)
    return kNegInf;
  double frac = z;
  for (int k = 60; k >= 1; --k)
    frac = z + k / frac;
  return -0.5 * z * z - kLogSqrt2Pi - std::log(frac);
}

struct LineFit
{
  double slope;
  double intercept;
  double max_abs_residual;
};

//! Ordinary least squares y = intercept + slope * x.
inline LineFit
fit_line(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw std::invalid_argument("fit_line: x and y differ in length");
  if (x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0)
    throw std::invalid_argument("fit_line: x values are all equal");
  LineFit fit{};
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.max_abs_residual = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  return fit;
}

//! Uniform nodes lo, lo + h, ..., up to hi (inclusive within rounding).
inline std::vector<double>
uniform_nodes(double lo, double hi, double h)
{
  if (!(h > 0.0) || !(hi >= lo))
    throw std::invalid_argument("uniform_nodes: need h > 0 and hi >= lo");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / h + 1e-9));
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    x[i] = lo + static_cast<double>(i) * h;
  return x;
}

} // namespace deflab
