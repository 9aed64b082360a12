#pragma once

#include "deficiency.hpp"
#include "extremal.hpp"
#include "io.hpp"
#include "mixture.hpp"
#include "tilt.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace deflab {

//! Invalid scenario configuration; the CLI maps it to exit status 2.
class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>&
scenario_names()
{
  static const std::vector<std::string> names{ "fig1",         "harmonic",
                                               "iid",          "tightness",
                                               "tilt-bounded", "cf-integrability",
                                               "plancherel",   "witness",
                                               "k2-bound",     "chebyshev" };
  return names;
}

//! Full parameter set of a scenario with every default spelled out, so a
//! report's inputs_echo is enough to rerun it.
inline nlohmann::json
default_params(const std::string& scenario)
{
  using nlohmann::json;
  const json fig1_family = { { "lambda", 0.55 }, { "eps", 0.5 }, { "kappa", 0.9 }, { "alpha", 0.6 } };
  auto with_family = [&](json extra) {
    json out = fig1_family;
    out.update(extra);
    return out;
  };
  if (scenario == "fig1")
    return with_family({ { "trunc_J", 40 },
                         { "x_lo", 0.0 },
                         { "x_hi", 7.5 },
                         { "h", 0.001 },
                         { "expected_maxima", { 1, 2, 3, 4, 5, 6, 7 } },
                         { "maxima_tol", 0.05 },
                         { "slope_tol", 0.01 } });
  if (scenario == "harmonic")
    return { { "lambda", 0.55 },   { "eps", { 0.5, 0.3 } }, { "kappa", 0.9 },
             { "alpha", 0.6 },     { "trunc_J", 100 },      { "j_lo", 40 },
             { "j_hi", 80 },       { "rel_tol", 0.05 },     { "prune_nats", 150.0 } };
  if (scenario == "iid")
    return with_family({ { "trunc_J", 100 },
                         { "folds", { 2, 3 } },
                         { "windows", { { 40, 80 }, { 50, 90 } } },
                         { "rel_tol", 0.05 },
                         { "prune_nats", 150.0 } });
  if (scenario == "tightness")
    return { { "lambda", 0.55 },    { "eps", { 0.5, 0.5 } },  { "kappa", 0.9 },
             { "alpha", 0.6 },      { "trunc_J", 80 },        { "window", { 0.0, 60.0 } },
             { "n_points", 601 },   { "margin", 0.1 },        { "threshold", 0.01 },
             { "poly_alpha", 0.0 }, { "prune_nats", 150.0 },  { "critical_tol", 0.005 },
             { "critical_poly_alpha", 1.2 }, { "critical_consistency", 0.03 },
             { "decay_window", { 30, 60 } } };
  if (scenario == "tilt-bounded")
    return with_family({ { "trunc_J", 60 },
                         { "t", 0.3 },
                         { "n", 2 },
                         { "expected_n_t", 2 },
                         { "window", { -30.0, 90.0 } },
                         { "h", 0.05 },
                         { "refinement_limit", 0.01 } });
  if (scenario == "cf-integrability")
    return with_family({ { "trunc_J", 60 },
                         { "tilts", { 0.0, 0.3 } },
                         { "folds", { 1, 2, 3 } },
                         { "S", 1e4 },
                         { "n_quad", 131072 },
                         { "log_correction", 1.2 },
                         { "lattice_period", 1.0 },
                         { "fit_margin", 0.1 },
                         { "exponent_rel_tol", 0.1 } });
  if (scenario == "plancherel")
    return with_family({ { "trunc_J", 60 },
                         { "t", 0.3 },
                         { "gaussian_S", 50.0 },
                         { "gaussian_n_quad", 4096 },
                         { "mixture_shift", 2.0 },
                         { "power_S", 1e4 },
                         { "power_n_quad", 262144 },
                         { "log_correction", 1.2 },
                         { "lattice_period", 1.0 },
                         { "tol_normal", 1e-8 },
                         { "tol_gaussian_cf", 1e-6 },
                         { "tol_power_cf", 1e-3 } });
  if (scenario == "witness")
    return { { "split_eps", { 0.2, 0.3, 0.5 } },
             { "m_max", 200 },
             { "float_tol", 1e-9 },
             { "lambda", 0.55 },
             { "eps", 0.5 },
             { "delta", 0.5 },
             { "kappa", 0.9 },
             { "xi", 0.9 },
             { "alpha", 0.6 },
             { "beta", 0.6 },
             { "trunc_J", 80 },
             { "windows", { { 0.0, 40.0 }, { 0.0, 60.0 } } },
             { "subdivisions", 8 },
             { "stability_nats", 0.5 } };
  if (scenario == "k2-bound")
    return { { "lambda", 0.55 }, { "eps", 0.5 },    { "delta", 0.3 },   { "kappa", 0.9 },
             { "xi", 0.9 },      { "alpha", 0.6 },  { "beta", 0.6 },    { "trunc_J", 80 },
             { "x_lo", -40.0 },  { "x_hi", 60.0 },  { "h", 0.05 } };
  if (scenario == "chebyshev")
    return with_family({ { "trunc_J", 60 },
                         { "folds", { 1, 2 } },
                         { "x_lo", 0.0 },
                         { "x_hi", 40.0 },
                         { "x_step", 1.0 } });
  throw ConfigError("unknown scenario \"" + scenario + "\"");
}

struct ScenarioConfig
{
  std::string scenario;
  nlohmann::json params = nlohmann::json::object(); //!< merged over default_params
  std::filesystem::path output_dir = "out";
  std::string report_stem; //!< file stem for artifacts; empty means the scenario name
  bool seedless = true;

  std::string stem() const { return report_stem.empty() ? scenario : report_stem; }
};

struct ScenarioReport
{
  std::string scenario;
  std::string paper_claim;
  nlohmann::json inputs_echo;
  nlohmann::json outputs;
  bool pass = false;
  std::int64_t runtime_ms = 0;
};

namespace detail {

inline bool
same_kind(const nlohmann::json& def, const nlohmann::json& user)
{
  if (def.is_number())
    return user.is_number();
  return def.type() == user.type();
}

} // namespace detail

//! Validates a config object {"scenario": s, "params": {...}, "output_dir": p}
//! and merges params over the scenario defaults. Unknown keys are errors.
inline ScenarioConfig
parse_scenario_config(const nlohmann::json& j)
{
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "scenario" && key != "params" && key != "output_dir" && key != "seedless")
      throw ConfigError("unknown config key \"" + key + "\"");
  if (!j.contains("scenario") || !j.at("scenario").is_string())
    throw ConfigError("config needs a string \"scenario\"");
  ScenarioConfig cfg;
  cfg.scenario = j.at("scenario").get<std::string>();
  if (std::find(scenario_names().begin(), scenario_names().end(), cfg.scenario) ==
      scenario_names().end())
    throw ConfigError("unknown scenario \"" + cfg.scenario + "\"");
  if (j.contains("seedless") && j.at("seedless") != true)
    throw ConfigError("\"seedless\" must be true: no scenario uses randomness");
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string())
      throw ConfigError("\"output_dir\" must be a string");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }
  cfg.params = default_params(cfg.scenario);
  if (j.contains("params")) {
    const auto& user = j.at("params");
    if (!user.is_object())
      throw ConfigError("\"params\" must be an object");
    for (const auto& [key, value] : user.items()) {
      if (!cfg.params.contains(key))
        throw ConfigError("scenario " + cfg.scenario + ": unknown parameter \"" + key + "\"");
      const bool auto_J = key == "trunc_J" && value.is_null();
      if (!auto_J && !detail::same_kind(cfg.params.at(key), value))
        throw ConfigError("scenario " + cfg.scenario + ": parameter \"" + key +
                          "\" has the wrong type");
      cfg.params[key] = value;
    }
  }
  return cfg;
}

inline nlohmann::json
config_to_json(const ScenarioConfig& cfg)
{
  return { { "scenario", cfg.scenario },
           { "params", cfg.params },
           { "output_dir", cfg.output_dir.string() },
           { "seedless", cfg.seedless } };
}

namespace detail {

inline double
num(const nlohmann::json& p, const std::string& key)
{
  const auto& v = p.at(key);
  if (!v.is_number())
    throw ConfigError("parameter \"" + key + "\" must be a number");
  return v.get<double>();
}

inline int
integer_value(const nlohmann::json& v, const std::string& key)
{
  if (!v.is_number() || v.get<double>() != std::floor(v.get<double>()))
    throw ConfigError("parameter \"" + key + "\" must be an integer");
  return static_cast<int>(v.get<double>());
}

inline int
integer(const nlohmann::json& p, const char* key)
{
  return integer_value(p.at(key), key);
}

inline std::vector<double>
nums(const nlohmann::json& p, const std::string& key)
{
  const auto& v = p.at(key);
  std::vector<double> out;
  if (!v.is_array())
    throw ConfigError("parameter \"" + key + "\" must be an array");
  for (const auto& e : v) {
    if (!e.is_number())
      throw ConfigError("parameter \"" + key + "\" must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::vector<int>
ints(const nlohmann::json& p, const std::string& key)
{
  std::vector<int> out;
  for (double v : nums(p, key)) {
    if (v != std::floor(v))
      throw ConfigError("parameter \"" + key + "\" must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::pair<double, double>
interval(const nlohmann::json& v, const std::string& key)
{
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError("parameter \"" + key + "\" must be [lo, hi]");
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!(hi > lo))
    throw ConfigError("parameter \"" + key + "\" needs lo < hi");
  return { lo, hi };
}

inline std::optional<int>
trunc(const nlohmann::json& p)
{
  if (p.at("trunc_J").is_null())
    return std::nullopt;
  return integer(p, "trunc_J");
}

inline ExtremalParams
family(const nlohmann::json& p, double eps)
{
  ExtremalParams e;
  e.lambda = num(p, "lambda");
  e.eps = eps;
  e.kappa = num(p, "kappa");
  e.alpha = num(p, "alpha");
  e.trunc_J = trunc(p);
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return e;
}

inline double
prune_tol(const nlohmann::json& p)
{
  const double nats = num(p, "prune_nats");
  if (!(nats > 0.0))
    throw ConfigError("parameter \"prune_nats\" must be positive");
  return -nats;
}

inline auto
log_density(const MixtureDensity& mix)
{
  return [&mix](double x) { return evaluate_log(mix, x); };
}

} // namespace detail

struct Fig1Summary
{
  std::vector<double> maxima;
  double slope_closed_form; //!< corrected slope of log W_j(j), j = 1..7
  double slope_at_integers; //!< same regression on the evaluated density
  double slope_at_maxima;   //!< and on the detected maxima
  std::size_t n_rows;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

//! Writes x, p(x), log p(x) for the normalized extremal density at nodes
//! x_lo + h, x_lo + 2h, ..., up to x_hi, plus a companion JSON (same stem)
//! with the detected local maxima and corrected log-peak slopes.
inline Fig1Summary
fig1_export(const ExtremalParams& params,
            double x_lo,
            double x_hi,
            double h,
            const std::filesystem::path& out_csv)
{
  if (!(h > 0.0) || !(x_hi > x_lo + h))
    throw std::invalid_argument("fig1_export: need h > 0 and x_hi > x_lo + h");
  const auto build = build_extremal(params);
  const auto& p = build.mix;

  std::vector<double> xs, lp;
  for (long k = 1;; ++k) {
    const double x = x_lo + static_cast<double>(k) * h;
    if (x > x_hi + 1e-9 * h)
      break;
    xs.push_back(x);
    lp.push_back(evaluate_log(p, x));
  }
  std::string csv = "x,p,log_p\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    csv += format_double(xs[i]) + ',' + format_double(std::exp(lp[i])) + ',' +
           format_double(lp[i]) + '\n';

  Fig1Summary out{};
  for (std::size_t i = 1; i + 1 < xs.size(); ++i)
    if (lp[i] > lp[i - 1] && lp[i] >= lp[i + 1])
      out.maxima.push_back(xs[i]);

  // log W_j(j) = log w_j - log(kappa e^{-eps j}) - log sqrt(2 pi) - log c
  const auto corrected = [&](double j, double log_value) {
    return log_value + params.alpha * std::log(j * j + 1.0);
  };
  std::vector<double> js, closed, at_int;
  for (int j = 1; j <= 7; ++j) {
    const double dj = j;
    const double log_peak = extremal_log_weight(j, params.lambda, params.alpha) -
                            std::log(params.kappa) + params.eps * dj - kLogSqrt2Pi -
                            build.log_c;
    js.push_back(dj);
    closed.push_back(corrected(dj, log_peak));
    at_int.push_back(corrected(dj, evaluate_log(p, dj)));
  }
  out.slope_closed_form = fit_line(js, closed).slope;
  out.slope_at_integers = fit_line(js, at_int).slope;
  if (out.maxima.size() >= 2) {
    std::vector<double> ym;
    for (double m : out.maxima)
      ym.push_back(corrected(m, evaluate_log(p, m)));
    out.slope_at_maxima = fit_line(out.maxima, ym).slope;
  } else {
    out.slope_at_maxima = std::nan("");
  }
  out.n_rows = xs.size();
  out.csv_path = out_csv;
  out.json_path = std::filesystem::path(out_csv).replace_extension(".json");

  nlohmann::json companion = {
    { "params",
      { { "lambda", params.lambda },
        { "eps", params.eps },
        { "kappa", params.kappa },
        { "alpha", params.alpha },
        { "trunc_J", build.trunc_J } } },
    { "x_range", { x_lo, x_hi } },
    { "h", h },
    { "local_maxima", out.maxima },
    { "corrected_slope_closed_form", out.slope_closed_form },
    { "corrected_slope_at_integers", out.slope_at_integers },
    { "corrected_slope_at_maxima",
      std::isfinite(out.slope_at_maxima) ? nlohmann::json(out.slope_at_maxima)
                                         : nlohmann::json(nullptr) },
    { "expected_slope", -(params.lambda - params.eps) }
  };
  write_file_atomic(out_csv, csv);
  write_file_atomic(out.json_path, companion.dump(2) + "\n");
  return out;
}

namespace detail {

using ScenarioFn = std::function<bool(const ScenarioConfig&, nlohmann::json&)>;

inline bool
run_fig1(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto params = family(p, num(p, "eps"));
  const auto summary = fig1_export(params, num(p, "x_lo"), num(p, "x_hi"), num(p, "h"),
                                   cfg.output_dir / (cfg.stem() + ".csv"));
  const double tol = num(p, "maxima_tol");
  nlohmann::json matches = nlohmann::json::array();
  bool all_found = true;
  for (double target : nums(p, "expected_maxima")) {
    double nearest = kNegInf, dist = kInf;
    for (double m : summary.maxima)
      if (std::abs(m - target) < dist) {
        dist = std::abs(m - target);
        nearest = m;
      }
    const bool ok = dist <= tol;
    all_found = all_found && ok;
    matches.push_back({ { "target", target },
                        { "nearest_maximum", std::isfinite(nearest) ? nlohmann::json(nearest)
                                                                    : nlohmann::json(nullptr) },
                        { "found", ok } });
  }
  const double expected_slope = -(params.lambda - params.eps);
  const bool slope_ok =
    std::abs(summary.slope_closed_form - expected_slope) <= num(p, "slope_tol");
  out = { { "local_maxima", summary.maxima },
          { "maxima_checks", matches },
          { "maxima_ok", all_found },
          { "corrected_slope", summary.slope_closed_form },
          { "corrected_slope_at_integers", summary.slope_at_integers },
          { "corrected_slope_at_maxima",
            std::isfinite(summary.slope_at_maxima) ? nlohmann::json(summary.slope_at_maxima)
                                                   : nlohmann::json(nullptr) },
          { "expected_slope", expected_slope },
          { "slope_ok", slope_ok },
          { "csv", summary.csv_path.filename().string() },
          { "companion_json", summary.json_path.filename().string() },
          { "rows", summary.n_rows } };
  return all_found && slope_ok;
}

inline bool
run_harmonic(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto eps = nums(p, "eps");
  if (eps.empty())
    throw ConfigError("parameter \"eps\" must be nonempty");
  const double tol = prune_tol(p);
  std::optional<MixtureDensity> acc;
  for (double e : eps) {
    auto m = build_extremal(family(p, e)).mix;
    acc = acc ? convolve(*acc, m, tol) : m;
  }
  const double alpha = num(p, "alpha");
  const auto decay =
    estimate_decay_slope(log_density(*acc), num(p, "lambda"), alpha * eps.size(),
                         integer(p, "j_lo"), integer(p, "j_hi"));
  const double predicted = predicted_deficiency(eps);
  const double rel = std::abs(decay.eps_hat - predicted) / predicted;
  out = { { "decay", decay },
          { "predicted_eps", predicted },
          { "relative_error", rel },
          { "n_components", acc->size() },
          { "pruned_mass_fraction", acc->pruned_mass_fraction() } };
  return rel <= num(p, "rel_tol");
}

inline bool
run_iid(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const double eps = num(p, "eps");
  const auto folds = ints(p, "folds");
  const auto& windows = p.at("windows");
  if (!windows.is_array() || windows.size() != folds.size())
    throw ConfigError("\"windows\" needs one [j_lo, j_hi] per fold");
  const double tol = prune_tol(p);
  const auto base = build_extremal(family(p, eps)).mix;
  const int max_fold = folds.empty() ? 1 : *std::max_element(folds.begin(), folds.end());
  std::map<int, MixtureDensity> by_fold;
  MixtureDensity acc = base;
  for (int n = 1; n <= max_fold; ++n) {
    if (n > 1)
      acc = convolve(acc, base, tol);
    if (std::find(folds.begin(), folds.end(), n) != folds.end())
      by_fold.emplace(n, acc);
  }
  bool pass = true;
  out = { { "folds", nlohmann::json::array() } };
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const int n = folds[k];
    if (n < 1)
      throw ConfigError("folds must be >= 1");
    const auto [lo, hi] = interval(windows[k], "windows");
    const auto& mix = by_fold.at(n);
    const auto decay = estimate_decay_slope(log_density(mix), num(p, "lambda"),
                                            num(p, "alpha") * n, static_cast<int>(lo),
                                            static_cast<int>(hi));
    const double predicted = eps / n;
    const double rel = std::abs(decay.eps_hat - predicted) / predicted;
    const bool ok = rel <= num(p, "rel_tol");
    pass = pass && ok;
    out["folds"].push_back({ { "n", n },
                             { "decay", decay },
                             { "predicted_eps", predicted },
                             { "relative_error", rel },
                             { "n_components", mix.size() },
                             { "pruned_mass_fraction", mix.pruned_mass_fraction() },
                             { "pass", ok } });
  }
  return pass;
}

inline bool
run_tightness(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto eps = nums(p, "eps");
  if (eps.empty())
    throw ConfigError("parameter \"eps\" must be nonempty");
  const double tol = prune_tol(p);
  std::optional<MixtureDensity> acc;
  for (double e : eps) {
    auto m = build_extremal(family(p, e)).mix;
    acc = acc ? convolve(*acc, m, tol) : m;
  }
  const double lambda = num(p, "lambda");
  const double predicted = predicted_deficiency(eps);
  const double mu = lambda - predicted;
  const double mu_diamond = mu + num(p, "margin");
  const auto [x_lo, x_hi] = interval(p.at("window"), "window");
  const int n_points = integer(p, "n_points");
  const EnvelopeOptions env{ num(p, "threshold"), num(p, "poly_alpha") };
  const auto logp = log_density(*acc);
  const auto at_mu = verify_envelope(logp, mu, x_lo, x_hi, n_points, env);
  const auto at_diamond = verify_envelope(logp, mu_diamond, x_lo, x_hi, n_points, env);

  const EnvelopeOptions corrected{ num(p, "threshold"), num(p, "critical_poly_alpha") };
  const double critical = critical_mu_search(logp, mu - 0.1, mu_diamond + 0.1,
                                             num(p, "critical_tol"), x_lo, x_hi, n_points,
                                             corrected);
  const auto [d_lo, d_hi] = interval(p.at("decay_window"), "decay_window");
  const auto decay =
    estimate_decay_slope(logp, lambda, num(p, "critical_poly_alpha"),
                         static_cast<int>(d_lo), static_cast<int>(d_hi));
  const double gap = std::abs(critical - (lambda - decay.eps_hat));
  out = { { "predicted_eps", predicted },
          { "at_mu", at_mu },
          { "at_mu_diamond", at_diamond },
          { "critical_mu", critical },
          { "decay", decay },
          { "critical_vs_decay_gap", gap } };
  return !at_mu.diverges && at_diamond.diverges && gap <= num(p, "critical_consistency");
}

inline bool
run_tilt_bounded(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto params = family(p, num(p, "eps"));
  const double t = num(p, "t");
  const int n = integer(p, "n");
  const auto [lo, hi] = interval(p.at("window"), "window");
  TiltSupOptions opts;
  opts.lambda = params.lambda;
  opts.mu = params.mu();
  opts.refinement_limit = num(p, "refinement_limit");
  const auto report =
    tilted_nfold_sup(build_extremal(params).mix, t, n, lo, hi, num(p, "h"), opts);
  const int expected = integer(p, "expected_n_t");
  out = { { "tilt", report }, { "expected_n_t", expected } };
  return report.bounded && report.n_t == expected && n >= *report.n_t;
}

inline bool
run_cf_integrability(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto params = family(p, num(p, "eps"));
  const auto base = build_extremal(params).mix;
  CfIntegralOptions opts;
  opts.tail.log_correction = num(p, "log_correction");
  opts.tail.lattice_period = num(p, "lattice_period");
  opts.fit_margin = num(p, "fit_margin");
  const double S = num(p, "S");
  const int n_quad = integer(p, "n_quad");
  bool pass = true;
  out = { { "tilts", nlohmann::json::array() } };
  for (double t : nums(p, "tilts")) {
    const auto mix = t == 0.0 ? base : tilt(base, t).tilted;
    const double expected = -(params.lambda - t) / params.eps;
    const int n_t = min_n_for_bounded(params.lambda, params.mu(), t);
    nlohmann::json entry = { { "t", t },
                             { "expected_exponent", expected },
                             { "n_t", n_t },
                             { "gammas", nlohmann::json::array() } };
    bool exponent_ok = true;
    for (int n : ints(p, "folds")) {
      const auto r = cf_gamma_integral(mix, 2.0 * n, S, n_quad, opts);
      const bool verdict_ok = r.converges == (n >= n_t);
      const double rel = std::abs(r.tail_exponent - expected) / std::abs(expected);
      exponent_ok = exponent_ok && rel <= num(p, "exponent_rel_tol");
      pass = pass && verdict_ok && exponent_ok;
      entry["gammas"].push_back(
        { { "n", n }, { "report", r }, { "verdict_matches_n_t", verdict_ok } });
      entry["tail_exponent"] = r.tail_exponent;
      entry["exponent_relative_error"] = rel;
    }
    entry["exponent_ok"] = exponent_ok;
    out["tilts"].push_back(entry);
  }
  return pass;
}

inline bool
run_plancherel(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const double gS = num(p, "gaussian_S");
  const int gq = integer(p, "gaussian_n_quad");
  const double shift = num(p, "mixture_shift");
  const double root_pi = std::sqrt(std::numbers::pi);

  const auto normal = plancherel_check(normal_density(0.0, 1.0), gS, gq);
  const MixtureDensity pair({ { std::log(0.5), -shift, 1.0 }, { std::log(0.5), shift, 1.0 } });
  const auto two = plancherel_check(pair, gS, gq);

  const auto params = family(p, num(p, "eps"));
  const auto ext = build_extremal(params).mix;
  const double pS = num(p, "power_S");
  const int pq = integer(p, "power_n_quad");
  CfIntegralOptions opts;
  opts.tail.log_correction = num(p, "log_correction");
  opts.tail.lattice_period = num(p, "lattice_period");
  const auto untilted = plancherel_check(ext, pS, pq, opts);
  const auto tilted = plancherel_check(tilt(ext, num(p, "t")).tilted, pS, pq, opts);

  const double tn = num(p, "tol_normal");
  const bool normal_ok = std::abs(normal.lhs - root_pi) / root_pi < tn &&
                         std::abs(normal.rhs - root_pi) / root_pi < tn && normal.rel_err < tn;
  const bool two_ok = two.rel_err < num(p, "tol_gaussian_cf");
  const double tp = num(p, "tol_power_cf");
  const bool power_ok = untilted.rel_err < tp && tilted.rel_err < tp;
  out = { { "standard_normal", normal },
          { "standard_normal_ok", normal_ok },
          { "two_component", two },
          { "two_component_ok", two_ok },
          { "extremal_untilted", untilted },
          { "extremal_tilted", tilted },
          { "power_law_ok", power_ok } };
  return normal_ok && two_ok && power_ok;
}

inline bool
run_witness(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const int m_max = integer(p, "m_max");
  const double ftol = num(p, "float_tol");
  const double kappa = num(p, "kappa"), xi = num(p, "xi");
  std::size_t checked = 0, violations = 0;
  nlohmann::json first_violation = nullptr;
  for (double e : nums(p, "split_eps"))
    for (double d : nums(p, "split_eps"))
      for (int m = -m_max; m <= m_max; ++m) {
        ++checked;
        const auto w = split_witness(m, e, d, kappa, xi);
        if (!split_invariants_hold(w, e, d, ftol)) {
          ++violations;
          if (first_violation.is_null())
            first_violation = { { "m", m }, { "eps", e }, { "delta", d } };
        }
      }

  const double lambda = num(p, "lambda");
  const double eps = num(p, "eps"), delta = num(p, "delta");
  const double alpha = num(p, "alpha"), beta = num(p, "beta");
  const auto lb = lower_bound_params(eps, delta, kappa, xi, alpha, beta);
  ExtremalParams pp{ lambda, eps, kappa, alpha, trunc(p) };
  ExtremalParams qp{ lambda, delta, xi, beta, trunc(p) };
  ExtremalParams rp{ lambda, lb.eps_tilde, lb.zeta, lb.alpha_sum, trunc(p) };
  const auto conv = convolve(build_extremal(pp).mix, build_extremal(qp).mix);
  const auto reference = build_extremal(rp).mix;

  const int sub = integer(p, "subdivisions");
  nlohmann::json windows = nlohmann::json::array();
  std::vector<double> mins;
  std::string csv = "x,log_ratio\n";
  for (const auto& wv : p.at("windows")) {
    const auto [lo, hi] = interval(wv, "windows");
    const auto grid = lattice_grid(lo, hi, sub);
    const auto r = witness_ratio(conv, reference, grid);
    mins.push_back(r.min_log_ratio);
    windows.push_back({ { "window", { lo, hi } },
                        { "min_log_ratio", r.min_log_ratio },
                        { "argmin", r.argmin } });
  }
  if (mins.empty())
    throw ConfigError("\"windows\" must be nonempty");
  {
    const auto [lo, hi] = interval(p.at("windows").back(), "windows");
    for (double x : lattice_grid(lo, hi, sub))
      csv += format_double(x) + ',' +
             format_double(evaluate_log(conv, x) - evaluate_log(reference, x)) + '\n';
  }
  write_file_atomic(cfg.output_dir / (cfg.stem() + ".csv"), csv);
  const auto [mn, mx] = std::minmax_element(mins.begin(), mins.end());
  const double variation = *mx - *mn;
  out = { { "split_checks", checked },
          { "split_violations", violations },
          { "first_violation", first_violation },
          { "lower_bound_params",
            { { "eps_tilde", lb.eps_tilde },
              { "zeta", lb.zeta },
              { "zeta_tilde", lb.zeta_tilde },
              { "alpha_sum", lb.alpha_sum } } },
          { "windows", windows },
          { "min_log_ratio_variation", variation },
          { "csv", cfg.stem() + ".csv" } };
  return violations == 0 && variation < num(p, "stability_nats");
}

inline bool
run_k2_bound(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const double lambda = num(p, "lambda");
  const double eps = num(p, "eps"), delta = num(p, "delta");
  ExtremalParams pp{ lambda, eps, num(p, "kappa"), num(p, "alpha"), trunc(p) };
  ExtremalParams qp{ lambda, delta, num(p, "xi"), num(p, "beta"), trunc(p) };
  const auto pb = build_extremal(pp), qb = build_extremal(qp);
  // envelope constants of the normalized densities
  const double C = envelope_constant(pp) / std::exp(pb.log_c);
  const double D = envelope_constant(qp) / std::exp(qb.log_c);
  const double M = std::exp(log_mgf_closed_form(pp, lambda).value);
  const double N = std::exp(log_mgf_closed_form(qp, lambda).value);
  const double K2 = theoretical_k2(lambda, eps, delta, M, N, C, D);
  const double rate = lambda - predicted_deficiency(std::vector<double>{ eps, delta });

  const auto conv = convolve(pb.mix, qb.mix);
  double worst = kNegInf, arg = 0.0;
  std::string csv = "x,scaled_density,k2\n";
  const auto grid = uniform_nodes(num(p, "x_lo"), num(p, "x_hi"), num(p, "h"));
  for (double x : grid) {
    const double v = evaluate_log(conv, x) + rate * x;
    if (v > worst) {
      worst = v;
      arg = x;
    }
    csv += format_double(x) + ',' + format_double(std::exp(v)) + ',' + format_double(K2) + '\n';
  }
  write_file_atomic(cfg.output_dir / (cfg.stem() + ".csv"), csv);
  const double ratio = std::exp(worst) / K2;
  out = { { "C", C },
          { "D", D },
          { "M", M },
          { "N", N },
          { "K2", K2 },
          { "rate", rate },
          { "max_scaled_density", std::exp(worst) },
          { "argmax", arg },
          { "max_ratio_to_K2", ratio },
          { "grid_points", grid.size() },
          { "csv", cfg.stem() + ".csv" } };
  return ratio <= 1.0;
}

inline bool
run_chebyshev(const ScenarioConfig& cfg, nlohmann::json& out)
{
  const auto& p = cfg.params;
  const auto params = family(p, num(p, "eps"));
  const auto base = build_extremal(params).mix;
  const auto xs = uniform_nodes(num(p, "x_lo"), num(p, "x_hi"), num(p, "x_step"));
  bool pass = true;
  out = { { "folds", nlohmann::json::array() } };
  for (int n : ints(p, "folds")) {
    if (n < 1)
      throw ConfigError("folds must be >= 1");
    const auto mix = n_fold(base, n);
    const auto check = check_chebyshev(mix, params.lambda, xs);
    double worst = kNegInf;
    for (std::size_t i = 0; i < xs.size(); ++i)
      worst = std::max(worst, check.tail_probs[i] / check.chebyshev_bounds[i]);
    pass = pass && check.all_satisfied;
    out["folds"].push_back({ { "n", n },
                             { "x_values", check.x_values },
                             { "tail_probs", check.tail_probs },
                             { "chebyshev_bounds", check.chebyshev_bounds },
                             { "max_tail_to_bound", worst },
                             { "all_satisfied", check.all_satisfied } });
  }
  return pass;
}

struct ScenarioEntry
{
  const char* claim;
  ScenarioFn fn;
};

inline const std::map<std::string, ScenarioEntry>&
scenario_table()
{
  static const std::map<std::string, ScenarioEntry> table{
    { "fig1",
      { "graph of the extremal density on (0, 7.5]: lattice peaks whose corrected "
        "heights decay like e^{-(lambda - eps) x}",
        run_fig1 } },
    { "harmonic",
      { "deficiency of a convolution is the harmonic combination "
        "1/(1/eps_1 + ... + 1/eps_n)",
        run_harmonic } },
    { "iid", { "n-fold self-convolution has deficiency eps/n", run_iid } },
    { "tightness",
      { "the harmonic exponent is optimal: the envelope fails for any larger mu",
        run_tightness } },
    { "tilt-bounded",
      { "the t-tilted n-fold convolution is bounded once n >= ceil((lambda - mu)/(lambda - t))",
        run_tilt_bounded } },
    { "cf-integrability",
      { "the tilted characteristic function is in L^gamma for gamma large enough; "
        "integrability at gamma = 2n matches boundedness of the n-fold convolution",
        run_cf_integrability } },
    { "plancherel",
      { "Plancherel isometry int |f|^2 = 2 pi int p^2 links bounded convolutions to "
        "square-integrable characteristic functions",
        run_plancherel } },
    { "witness",
      { "lower bound p * q >= c p_{lambda, eps~, zeta, alpha + beta} via the split "
        "m = i_m + j_m",
        run_witness } },
    { "k2-bound",
      { "explicit constant (p * q)(x) <= K_2 e^{-(lambda - eps~) x} with "
        "K_2 = D M lambda/delta + C N lambda/eps",
        run_k2_bound } },
    { "chebyshev",
      { "exponential integrability gives the tail bound P(X >= x) <= M e^{-lambda x}",
        run_chebyshev } },
  };
  return table;
}

} // namespace detail

inline std::string
report_to_json(const ScenarioReport& r)
{
  const nlohmann::json j = { { "scenario", r.scenario },
                             { "paper_claim", r.paper_claim },
                             { "inputs_echo", r.inputs_echo },
                             { "outputs", r.outputs },
                             { "pass", r.pass },
                             { "runtime_ms", r.runtime_ms } };
  return j.dump(2) + "\n";
}

//! Runs one scenario and writes <output_dir>/<stem>.report.json (plus any
//! CSV artifacts). ConfigError for invalid parameters; other exceptions
//! propagate unchanged.
inline ScenarioReport
run_scenario(const ScenarioConfig& cfg)
{
  const auto& table = detail::scenario_table();
  const auto it = table.find(cfg.scenario);
  if (it == table.end())
    throw ConfigError("unknown scenario \"" + cfg.scenario + "\"");
  ScenarioReport report;
  report.scenario = cfg.scenario;
  report.paper_claim = it->second.claim;
  report.inputs_echo = config_to_json(cfg);
  const auto start = std::chrono::steady_clock::now();
  try {
    report.pass = it->second.fn(cfg, report.outputs);
  } catch (const std::domain_error& e) {
    throw ConfigError(cfg.scenario + ": " + e.what());
  }
  report.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  write_file_atomic(cfg.output_dir / (cfg.stem() + ".report.json"), report_to_json(report));
  return report;
}

struct RunAllEntry
{
  std::string scenario;
  std::string stem;
  bool pass = false;
  std::int64_t runtime_ms = 0;
  std::string error; //!< nonempty when the scenario could not run
};

struct RunAllSummary
{
  std::vector<RunAllEntry> entries;
  bool all_pass() const
  {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
  }
};

//! Manifest: a JSON array of configs, or {"scenarios": [...]}. Malformed
//! manifests throw ConfigError; a malformed or failing entry is recorded
//! and the rest still run.
inline std::vector<nlohmann::json>
manifest_entries(const nlohmann::json& manifest)
{
  const nlohmann::json* list = &manifest;
  if (manifest.is_object()) {
    if (!manifest.contains("scenarios"))
      throw ConfigError("manifest object needs a \"scenarios\" array");
    list = &manifest.at("scenarios");
  }
  if (!list->is_array())
    throw ConfigError("manifest must be an array of scenario configs");
  return { list->begin(), list->end() };
}

inline RunAllSummary
run_all(const nlohmann::json& manifest, const std::filesystem::path& out_dir)
{
  RunAllSummary summary;
  std::map<std::string, int> seen;
  for (const auto& raw : manifest_entries(manifest)) {
    RunAllEntry entry;
    entry.scenario = raw.is_object() && raw.contains("scenario") && raw["scenario"].is_string()
                       ? raw["scenario"].get<std::string>()
                       : "?";
    const int k = seen[entry.scenario]++;
    entry.stem = k == 0 ? entry.scenario : entry.scenario + "-" + std::to_string(k + 1);
    try {
      auto cfg = parse_scenario_config(raw);
      cfg.output_dir = out_dir;
      cfg.report_stem = entry.stem;
      const auto report = run_scenario(cfg);
      entry.pass = report.pass;
      entry.runtime_ms = report.runtime_ms;
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    summary.entries.push_back(entry);
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& e : summary.entries)
    table.push_back({ { "scenario", e.scenario },
                      { "report", e.stem + ".report.json" },
                      { "pass", e.pass },
                      { "error", e.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.error) } });
  write_file_atomic(out_dir / "summary.json",
                    nlohmann::json{ { "all_pass", summary.all_pass() }, { "scenarios", table } }
                        .dump(2) +
                      "\n");
  return summary;
}

} // namespace deflab
