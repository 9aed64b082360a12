#pragma once

#include "io.hpp"
#include "mixture.hpp"
#include "numeric.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace deflab {

//! Density sampled at x0 + i h, i = 0..n-1.
class GridDensity
{
public:
  GridDensity(double x0, double h, std::vector<double> values)
    : x0_(x0)
    , h_(h)
    , values_(std::move(values))
  {
    if (!(h_ > 0.0) || !std::isfinite(h_))
      throw std::invalid_argument("GridDensity: step must be positive");
    if (values_.size() < 16)
      throw std::invalid_argument("GridDensity: need at least 16 samples");
    for (double v : values_)
      if (!(v >= 0.0))
        throw std::invalid_argument("GridDensity: negative or NaN sample");
  }

  double x0() const { return x0_; }
  double h() const { return h_; }
  std::size_t size() const { return values_.size(); }
  double x(std::size_t i) const { return x0_ + static_cast<double>(i) * h_; }
  double x_end() const { return x(values_.size() - 1); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

private:
  double x0_;
  double h_;
  std::vector<double> values_;
};

//! Samples the mixture density at x0, x0 + h, ..., x1.
inline GridDensity
rasterize(const MixtureDensity& mix, double x0, double x1, double h)
{
  if (!(x1 > x0) || !(h > 0.0))
    throw std::invalid_argument("rasterize: need x0 < x1 and h > 0");
  const auto nodes = uniform_nodes(x0, x1, h);
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    v[i] = evaluate(mix, nodes[i]);
  return GridDensity(x0, h, std::move(v));
}

namespace detail {

inline std::mutex&
fftw_planner_mutex()
{
  static std::mutex m;
  return m;
}

struct FftwFree
{
  void operator()(void* p) const { fftw_free(p); }
};

inline std::size_t
next_pow2(std::size_t n)
{
  std::size_t p = 1;
  while (p < n)
    p <<= 1;
  return p;
}

} // namespace detail

//! Linear convolution h * (a conv b) via zero-padded FFT; the output grid
//! starts at a.x0 + b.x0 and has len(a) + len(b) - 1 samples.
inline GridDensity
fft_convolve(const GridDensity& a, const GridDensity& b)
{
  const double h = a.h();
  if (std::abs(a.h() - b.h()) > 1e-12 * h)
    throw std::invalid_argument("fft_convolve: grids have different steps");
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = detail::next_pow2(out_len);
  const std::size_t nc = n / 2 + 1;

  using real_buf = std::unique_ptr<double[], detail::FftwFree>;
  using cplx_buf = std::unique_ptr<fftw_complex[], detail::FftwFree>;
  real_buf ra(fftw_alloc_real(n)), rb(fftw_alloc_real(n));
  cplx_buf ca(fftw_alloc_complex(nc)), cb(fftw_alloc_complex(nc));
  if (!ra || !rb || !ca || !cb)
    throw std::bad_alloc();

  fftw_plan pa, pb, pinv;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), ca.get(), FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), cb.get(), FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(n), ca.get(), ra.get(), FFTW_ESTIMATE);
  }
  std::fill(ra.get(), ra.get() + n, 0.0);
  std::fill(rb.get(), rb.get() + n, 0.0);
  std::copy(a.values().begin(), a.values().end(), ra.get());
  std::copy(b.values().begin(), b.values().end(), rb.get());
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> za(ca[k][0], ca[k][1]);
    const std::complex<double> zb(cb[k][0], cb[k][1]);
    const auto z = za * zb;
    ca[k][0] = z.real();
    ca[k][1] = z.imag();
  }
  fftw_execute(pinv);

  std::vector<double> out(out_len);
  const double scale = h / static_cast<double>(n);
  for (std::size_t i = 0; i < out_len; ++i)
    out[i] = std::max(0.0, ra[i] * scale); // roundoff can go slightly negative
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pinv);
  }
  return GridDensity(a.x0() + b.x0(), h, std::move(out));
}

//! Trapezoid value of int e^{u x} g(x) dx over the grid.
inline double
integrate(const GridDensity& g, double weight_exponent = 0.0)
{
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
    sum += w * std::exp(weight_exponent * g.x(i)) * g[i];
  }
  return sum * g.h();
}

//! |cf(mix, s)| at each s.
inline std::vector<double>
cf_magnitude_grid(const MixtureDensity& mix, std::span<const double> s_values)
{
  std::vector<double> out;
  out.reserve(s_values.size());
  for (double s : s_values)
    out.push_back(std::abs(cf(mix, s)));
  return out;
}

//! Resolvable half-width for the lattice family at step h: components with
//! std kappa e^{-eps |j|} < 2h are not resolved beyond (1/eps) ln(kappa/(2h)).
inline double
resolvable_window(double eps, double kappa, double h)
{
  return std::log(kappa / (2.0 * h)) / eps;
}

//! CSV with header "x,value", 17 significant digits.
inline std::string
grid_to_csv(const GridDensity& g)
{
  std::string out = "x,value\n";
  out.reserve(g.size() * 48);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += format_double(g.x(i));
    out += ',';
    out += format_double(g[i]);
    out += '\n';
  }
  return out;
}

inline GridDensity
grid_from_csv(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,value", 0) != 0)
    throw std::invalid_argument("grid CSV: missing \"x,value\" header");
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("grid CSV: malformed row: " + line);
    xs.push_back(std::stod(line.substr(0, comma)));
    vs.push_back(std::stod(line.substr(comma + 1)));
  }
  if (xs.size() < 2)
    throw std::invalid_argument("grid CSV: too few rows");
  const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  return GridDensity(xs.front(), h, std::move(vs));
}

} // namespace deflab
