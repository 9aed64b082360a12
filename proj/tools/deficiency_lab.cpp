#include <deflab/deflab.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

nlohmann::json
load_json(const std::filesystem::path& path)
{
  try {
    return nlohmann::json::parse(deflab::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw deflab::ConfigError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw deflab::ConfigError(e.what());
  }
}

int
cmd_run(const std::filesystem::path& config_path, const std::optional<std::string>& out_dir)
{
  auto cfg = deflab::parse_scenario_config(load_json(config_path));
  if (out_dir)
    cfg.output_dir = *out_dir;
  const auto report = deflab::run_scenario(cfg);
  std::printf("%s: %s (%lld ms) -> %s\n", report.scenario.c_str(),
              report.pass ? "PASS" : "FAIL", static_cast<long long>(report.runtime_ms),
              (cfg.output_dir / (cfg.stem() + ".report.json")).string().c_str());
  return report.pass ? kExitPass : kExitFail;
}

int
cmd_fig1(const deflab::ExtremalParams& params,
         double x_lo,
         double x_hi,
         double h,
         const std::filesystem::path& out)
{
  const auto s = deflab::fig1_export(params, x_lo, x_hi, h, out);
  std::printf("wrote %zu rows to %s\n", s.n_rows, s.csv_path.string().c_str());
  std::printf("local maxima:");
  for (double m : s.maxima)
    std::printf(" %.4f", m);
  std::printf("\ncorrected log-peak slope %.6f (expected %.6f)\n", s.slope_closed_form,
              -(params.lambda - params.eps));
  std::printf("summary in %s\n", s.json_path.string().c_str());
  return kExitPass;
}

int
cmd_all(const std::filesystem::path& manifest, const std::filesystem::path& out_dir)
{
  const auto summary = deflab::run_all(load_json(manifest), out_dir);
  for (const auto& e : summary.entries) {
    if (e.error.empty())
      std::printf("%-18s %s  %8lld ms\n", e.stem.c_str(), e.pass ? "PASS" : "FAIL",
                  static_cast<long long>(e.runtime_ms));
    else
      std::printf("%-18s ERROR %s\n", e.stem.c_str(), e.error.c_str());
  }
  std::printf("%zu scenarios, summary in %s\n", summary.entries.size(),
              (out_dir / "summary.json").string().c_str());
  return summary.all_pass() ? kExitPass : kExitFail;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "deficiency-lab: exact Gaussian-mixture experiments on exponential "
                "deficiency of convolutions" };
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "run one scenario from a JSON config");
  run->add_option("--config", config_path, "scenario config (JSON)")->required();
  run->add_option("--out-dir", run_out, "override the config's output_dir");

  deflab::ExtremalParams fig_params;
  fig_params.trunc_J = 40;
  int fig_J = 40;
  double x_lo = 0.0, x_hi = 7.5, h = 0.001;
  std::string fig_out = "fig1.csv";
  auto* fig1 = app.add_subcommand("fig1", "export the extremal density graph as CSV");
  fig1->add_option("--lambda", fig_params.lambda, "exponential-moment order")
    ->capture_default_str();
  fig1->add_option("--eps", fig_params.eps, "deficiency")->capture_default_str();
  fig1->add_option("--kappa", fig_params.kappa, "base component width")
    ->capture_default_str();
  fig1->add_option("--alpha", fig_params.alpha, "polynomial weight exponent")
    ->capture_default_str();
  fig1->add_option("--trunc-J", fig_J, "truncation |j| <= J")->capture_default_str();
  fig1->add_option("--x-lo", x_lo, "left end (first node at x_lo + h)")
    ->capture_default_str();
  fig1->add_option("--x-hi", x_hi, "right end")->capture_default_str();
  fig1->add_option("--step", h, "grid step h")->capture_default_str();
  fig1->add_option("--out", fig_out, "CSV path; a .json summary is written next to it")
    ->capture_default_str();

  std::string manifest_path, all_out;
  auto* all = app.add_subcommand("all", "run every scenario of a manifest");
  all->add_option("--manifest", manifest_path, "manifest (JSON)")->required();
  all->add_option("--out-dir", all_out, "directory for reports")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run)
      return cmd_run(config_path, run_out);
    if (*fig1) {
      fig_params.trunc_J = fig_J;
      fig_params.validate();
      return cmd_fig1(fig_params, x_lo, x_hi, h, fig_out);
    }
    return cmd_all(manifest_path, all_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "deficiency-lab: %s\n", e.what());
    return kExitUsage;
  }
}
