#pragma once

// Independent reference computations for the tests: brute-force quadrature
// straight from the definitions, and values frozen from 30-digit mpmath runs.

#include <deflab/mixture.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace oracle {

//! Composite Simpson rule with n (even) panels.
template <class F>
double
simpson(F&& f, double a, double b, int n)
{
  if (n % 2)
    ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i)
    s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

//! Mixture density summed term by term in the linear domain.
inline double
density(const deflab::MixtureDensity& m, double x)
{
  double s = 0.0;
  for (const auto& c : m.components()) {
    const double z = (x - c.mean) / c.std;
    s += std::exp(c.log_weight) * std::exp(-0.5 * z * z) /
         (c.std * std::sqrt(2.0 * std::numbers::pi));
  }
  return s;
}

//! (p * q)(x) = int p(y) q(x - y) dy over [lo, hi].
inline double
convolution_at(const deflab::MixtureDensity& p,
               const deflab::MixtureDensity& q,
               double x,
               double lo,
               double hi,
               int n = 20000)
{
  return simpson([&](double y) { return density(p, y) * density(q, x - y); }, lo, hi, n);
}

inline double
mgf(const deflab::MixtureDensity& p, double u, double lo, double hi, int n = 20000)
{
  return simpson([&](double x) { return std::exp(u * x) * density(p, x); }, lo, hi, n);
}

inline std::complex<double>
cf(const deflab::MixtureDensity& p, double s, double lo, double hi, int n = 20000)
{
  const double re =
    simpson([&](double x) { return std::cos(s * x) * density(p, x); }, lo, hi, n);
  const double im =
    simpson([&](double x) { return std::sin(s * x) * density(p, x); }, lo, hi, n);
  return { re, im };
}

// mpmath, 30 digits
inline constexpr double kLogPhiAt1 = -1.4189385332046727;      // log phi(1)
inline constexpr double kL2f01f41 = 0.0051667463385230;        // int f_{0,1} f_{4,1}
inline constexpr double kQ2 = 0.022750131948179207;            // P(Z >= 2)
inline constexpr double kQ10 = 7.6198530241605260e-24;         // P(Z >= 10)
inline constexpr double kLogQ40 = -804.6084420137538;          // log P(Z >= 40)
inline constexpr double kFig1W1 = 0.38064491945798674;         // e^{-0.55} / 2^{0.6}
inline constexpr double kFig1Std1 = 0.54587759374137;          // 0.9 e^{-0.5}
inline constexpr double kPiCothPiOverRoot2Pi = 1.258003879893745;
inline constexpr double kZetaFig1 = 1.0526074041867976;        // sqrt(0.81 (1 + e^{-1}))
inline constexpr double kFig1LogC40 = 0.7822708663025;         // log c, J = 40
inline constexpr double kFig1MgfBound40 = 1.22097019836066;    // part (I) bound at u = lambda

} // namespace oracle
