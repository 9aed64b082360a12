//! Acceptance criteria: one PASS/FAIL line per criterion with its runtime
//! and limit. `acceptance` runs all ten; `acceptance --only N` runs one.

#include <deflab/deflab.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace deflab;
using nlohmann::json;

namespace {

struct Outcome
{
  bool pass;
  std::string detail;
};

struct Criterion
{
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome(const std::filesystem::path&)> check;
};

std::string
fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double
rel(double value, double target)
{
  return std::abs(value - target) / std::abs(target);
}

json
scenario_outputs(const std::string& name, const std::filesystem::path& out)
{
  auto cfg = parse_scenario_config(json{ { "scenario", name } });
  cfg.output_dir = out;
  return run_scenario(cfg).outputs;
}

Outcome
fig1(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("fig1", out);
  std::string missing;
  for (const auto& m : o.at("maxima_checks"))
    if (!m.at("found").get<bool>())
      missing += ' ' + fmt("%g", m.at("target").get<double>());
  const double slope = o.at("corrected_slope").get<double>();
  const bool maxima_ok = missing.empty();
  const bool slope_ok = std::abs(slope - (-0.05)) <= 0.01;
  std::string maxima = "maxima at";
  for (double m : o.at("local_maxima").get<std::vector<double>>())
    maxima += ' ' + fmt("%.3f", m);
  return { maxima_ok && slope_ok,
           maxima + (maxima_ok ? "" : "; no maximum within 0.05 of" + missing) +
             "; corrected slope " + fmt("%.6f", slope) };
}

Outcome
harmonic(const std::filesystem::path& out)
{
  const auto h = scenario_outputs("harmonic", out);
  const double e12 = h.at("decay").at("eps_hat").get<double>();
  bool pass = rel(e12, 0.1875) <= 0.05;
  std::string detail = "eps(0.5, 0.3) " + fmt("%.5f", e12) + " vs 0.1875";
  const auto iid = scenario_outputs("iid", out);
  for (const auto& f : iid.at("folds")) {
    const int n = f.at("n").get<int>();
    const double e = f.at("decay").at("eps_hat").get<double>();
    pass = pass && rel(e, 0.5 / n) <= 0.05;
    detail += "; " + std::to_string(n) + "-fold " + fmt("%.5f", e) + " vs " + fmt("%.5f", 0.5 / n);
  }
  return { pass, detail };
}

Outcome
tightness(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("tightness", out);
  const auto& at_mu = o.at("at_mu");
  const auto& at_d = o.at("at_mu_diamond");
  const bool ok = !at_mu.at("diverges").get<bool>() && at_d.at("diverges").get<bool>();
  return { ok,
           "trend at mu=" + fmt("%.2f", at_mu.at("mu").get<double>()) + ": " +
             fmt("%.4f", at_mu.at("trend_slope").get<double>()) + ", at mu=" +
             fmt("%.2f", at_d.at("mu").get<double>()) + ": " +
             fmt("%.4f", at_d.at("trend_slope").get<double>()) };
}

Outcome
k2_bound(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("k2-bound", out);
  const double ratio = o.at("max_ratio_to_K2").get<double>();
  return { ratio <= 1.0,
           "max scaled density / K2 = " + fmt("%.4g", ratio) + " (K2 = " +
             fmt("%.4g", o.at("K2").get<double>()) + ")" };
}

Outcome
tilt_bounded(const std::filesystem::path& out)
{
  const int n_t = min_n_for_bounded(0.55, 0.05, 0.3);
  const auto o = scenario_outputs("tilt-bounded", out).at("tilt");
  const double sup = o.at("sup_density").get<double>();
  const double delta = o.at("refinement_delta").get<double>();
  const bool ok = n_t == 2 && std::isfinite(sup) && delta < 0.01 && o.at("interior").get<bool>();
  return { ok, "n_t = " + std::to_string(n_t) + ", sup " + fmt("%.6g", sup) +
                 ", refinement change " + fmt("%.2e", delta) };
}

Outcome
cf_integrability(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("cf-integrability", out);
  bool pass = true;
  std::string detail;
  for (const auto& t : o.at("tilts")) {
    const double target = t.at("t").get<double>() == 0.0 ? -1.1 : -0.5;
    const double exponent = t.at("tail_exponent").get<double>();
    const int n_t = t.at("n_t").get<int>();
    pass = pass && rel(exponent, target) <= 0.1;
    std::string verdicts;
    for (const auto& g : t.at("gammas")) {
      const int n = g.at("n").get<int>();
      const bool conv = g.at("report").at("converges").get<bool>();
      pass = pass && conv == (n >= n_t);
      verdicts += conv ? 'Y' : 'n';
    }
    if (!detail.empty())
      detail += "; ";
    detail += "t=" + fmt("%.1f", t.at("t").get<double>()) + " exponent " +
              fmt("%.4f", exponent) + " vs " + fmt("%.1f", target) + ", L^{2n} verdicts " +
              verdicts + " (n_t=" + std::to_string(n_t) + ")";
  }
  return { pass, detail };
}

Outcome
plancherel(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("plancherel", out);
  const double root_pi = std::sqrt(std::numbers::pi);
  const auto& n = o.at("standard_normal");
  const double e_normal = std::max({ rel(n.at("lhs").get<double>(), root_pi),
                                     rel(n.at("rhs").get<double>(), root_pi),
                                     n.at("rel_err").get<double>() });
  const double e_two = o.at("two_component").at("rel_err").get<double>();
  const double e_pow = std::max(o.at("extremal_untilted").at("rel_err").get<double>(),
                                o.at("extremal_tilted").at("rel_err").get<double>());
  return { e_normal < 1e-8 && e_two < 1e-6 && e_pow < 1e-3,
           "normal " + fmt("%.2e", e_normal) + ", Gaussian-tailed " + fmt("%.2e", e_two) +
             ", power-law " + fmt("%.2e", e_pow) };
}

bool
same_components(const MixtureDensity& a, const MixtureDensity& b, double tol)
{
  if (a.size() != b.size())
    return false;
  auto key = [](const GaussianComponent& c) { return std::tie(c.mean, c.std); };
  std::vector<GaussianComponent> ca(a.components().begin(), a.components().end());
  std::vector<GaussianComponent> cb(b.components().begin(), b.components().end());
  auto by_key = [&](const auto& x, const auto& y) { return key(x) < key(y); };
  std::sort(ca.begin(), ca.end(), by_key);
  std::sort(cb.begin(), cb.end(), by_key);
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (std::abs(ca[i].log_weight - cb[i].log_weight) > tol ||
        std::abs(ca[i].mean - cb[i].mean) > tol || std::abs(ca[i].std - cb[i].std) > tol)
      return false;
  return true;
}

Outcome
property_suite(const std::filesystem::path&)
{
  const auto a = build_extremal(ExtremalParams{ 0.55, 0.5, 0.9, 0.6, 20 }).mix;
  const auto b = build_extremal(ExtremalParams{ 0.55, 0.3, 0.8, 0.7, 20 }).mix;
  const auto ab = convolve(a, b, kNegInf);
  std::vector<std::string> failed;

  if (rel(std::exp(ab.log_total_mass()), std::exp(a.log_total_mass() + b.log_total_mass())) >
      1e-12)
    failed.push_back("mass");

  double mgf_err = 0.0;
  for (double u : { -1.0, 0.0, 0.3, 0.55, 1.0 })
    mgf_err = std::max(mgf_err, std::abs(log_mgf(ab, u) - log_mgf(a, u) - log_mgf(b, u)));
  if (mgf_err > 1e-10)
    failed.push_back("mgf");

  double cf_err = 0.0;
  for (double s = -50.0; s <= 50.0; s += 0.25)
    cf_err = std::max(cf_err, std::abs(cf(ab, s) - cf(a, s) * cf(b, s)));
  if (cf_err > 1e-10)
    failed.push_back("cf");

  for (double t : { -0.4, 0.1, 0.3, 0.5 }) {
    const auto ta = tilt(a, t).tilted;
    if (!same_components(tilt(ta, -t).tilted, a, 1e-10))
      failed.push_back("inversion t=" + fmt("%g", t));
    if (!same_components(tilt(ab, t).tilted, convolve(ta, tilt(b, t).tilted, kNegInf), 1e-10))
      failed.push_back("commutation t=" + fmt("%g", t));
    const double t2 = 0.05;
    if (!same_components(tilt(ta, t2).tilted, tilt(a, t + t2).tilted, 1e-10))
      failed.push_back("composition t=" + fmt("%g", t));
  }

  const auto xs = uniform_nodes(0.0, 40.0, 0.5);
  for (const auto* mix : { &a, &ab })
    for (double lambda : { 0.1, 0.3, 0.5, 0.55 })
      if (!check_chebyshev(*mix, lambda, xs).all_satisfied)
        failed.push_back("chebyshev lambda=" + fmt("%g", lambda));

  std::string detail = "mgf err " + fmt("%.1e", mgf_err) + ", cf err " + fmt("%.1e", cf_err);
  for (const auto& f : failed)
    detail += "; failed " + f;
  return { failed.empty(), detail };
}

double
oracle_error(const MixtureDensity& p, int J, double h)
{
  const double L = J + 10.0;
  const auto a = rasterize(p, -L, L, h);
  const auto c = fft_convolve(a, a);
  const auto exact = convolve(p, p);
  const double window = resolvable_window(0.5, 0.9, h);
  double err = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = c.x(i);
    if (std::abs(x) > window)
      continue;
    const double e = evaluate(exact, x);
    err = std::max(err, std::abs(c[i] - e));
    peak = std::max(peak, e);
  }
  return err / peak;
}

Outcome
fft_oracle(const std::filesystem::path&)
{
  // |j| <= 9 keeps every component at least one grid step wide for h = 0.01
  const auto p = build_extremal(ExtremalParams{ 0.55, 0.5, 0.9, 0.6, 9 }).mix;
  const double coarse = oracle_error(p, 9, 0.01);
  const double fine = oracle_error(p, 9, 0.005);
  return { coarse < 1e-6 && fine * 3.0 <= coarse,
           "sup error / peak " + fmt("%.2e", coarse) + " at h=0.01, " + fmt("%.2e", fine) +
             " at h=0.005 (reduction " + fmt("%.1f", coarse / fine) + "x)" };
}

Outcome
witness(const std::filesystem::path& out)
{
  const auto o = scenario_outputs("witness", out);
  const auto violations = o.at("split_violations").get<std::size_t>();
  const double variation = o.at("min_log_ratio_variation").get<double>();
  return { violations == 0 && variation < 0.5,
           std::to_string(o.at("split_checks").get<std::size_t>()) + " splits, " +
             std::to_string(violations) + " violations; min log-ratio variation " +
             fmt("%.4f", variation) + " nats" };
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "acceptance criteria" };
  int only = 0;
  std::string out_dir = (std::filesystem::temp_directory_path() / "deflab_acceptance").string();
  app.add_option("--only", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--out-dir", out_dir, "directory for scenario artifacts");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
    { 1, "fig1 extremal density graph", 5, fig1 },
    { 2, "harmonic-mean deficiency law", 60, harmonic },
    { 3, "optimality of the harmonic exponent", 30, tightness },
    { 4, "explicit constant K2", 30, k2_bound },
    { 5, "tilted convolution bounded at n_t", 30, tilt_bounded },
    { 6, "CF tail exponent and L^gamma verdicts", 60, cf_integrability },
    { 7, "Plancherel isometry", 20, plancherel },
    { 8, "exact-calculus property suite", 10, property_suite },
    { 9, "FFT grid oracle equivalence", 20, fft_oracle },
    { 10, "split witness and lower bound", 60, witness },
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only)
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check(std::filesystem::path(out_dir) / ("ac" + std::to_string(c.id)));
    } catch (const std::exception& e) {
      o = { false, std::string("exception: ") + e.what() };
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("AC%-2d %s  %-40s %7.2f s (limit %g s)%s  %s\n", c.id, pass ? "PASS" : "FAIL",
                c.name, secs, c.limit_s, in_time ? "" : " OVER TIME", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
