// mas: run declarative restoration experiments.
//
//   mas solve <config> [--out DIR] [--seed S] [--quiet]
//   mas sweep <config> --param {eta1,eta2,k} --grid v1,v2,... [--out DIR] [--quiet]
//
// Exit status: 0 success, 1 config error, 2 solver error. MAS_THREADS sets
// the worker count.

#include "mas/config.hpp"
#include "mas/experiment.hpp"
#include "mas/image_io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kSolverError = 2;

struct Common {
  std::string config_path;
  std::string out_dir;
  bool quiet = false;
};

mas::ExperimentConfig load(const Common& c) {
  auto cfg = mas::load_config(c.config_path);
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  return cfg;
}

int solve(const Common& common, std::optional<std::uint64_t> seed) {
  auto cfg = load(common);
  if (seed) cfg.seeds = {*seed};
  mas::RunSettings settings;
  settings.threads = mas::threads_from_env();
  const auto result = mas::run_experiment(cfg, settings);
  mas::write_artifacts(cfg, result, cfg.output_dir);

  int status = kOk;
  for (const auto& c : result.cells) {
    if (c.ok) continue;
    std::cerr << "solver error: " << mas::method_label(cfg.methods[c.method]) << " image " << c.image << " seed "
              << c.seed << ": " << c.error << "\n";
    status = kSolverError;
  }
  if (!common.quiet) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      double sum = 0;
      std::size_t n = 0, identical = 0;
      for (const auto& c : result.cells) {
        if (c.method != mi || !c.ok) continue;
        if (c.identical) ++identical;
        else sum += c.psnr, ++n;
      }
      std::cout << mas::method_label(cfg.methods[mi]) << ": mean PSNR "
                << (n ? std::to_string(sum / double(n)) + " dB" : std::string("n/a")) << " over " << n << " runs";
      if (identical) std::cout << " (" << identical << " identical)";
      std::cout << "\n";
    }
    std::cout << "artifacts in " << cfg.output_dir << "\n";
  }
  return status;
}

int sweep(const Common& common, const std::string& param_name, const std::vector<double>& grid) {
  const auto cfg = load(common);
  const auto param = mas::parse_sweep_param(param_name);
  mas::RunSettings settings;
  settings.threads = mas::threads_from_env();
  const auto result = mas::run_sweep(cfg, param, grid, settings);
  namespace fs = std::filesystem;
  const std::string sweep_name = "sweep_" + param_name + ".csv";
  const std::string toy_name = "toy2d_" + param_name + ".csv";
  mas::write_file_atomic((fs::path(cfg.output_dir) / sweep_name).string(), mas::sweep_csv(param, result));
  mas::write_file_atomic((fs::path(cfg.output_dir) / toy_name).string(), mas::toy_csv(param, result));
  mas::write_file_atomic((fs::path(cfg.output_dir) / "config.json").string(), mas::to_json(cfg).dump(2) + "\n");
  mas::write_manifest(cfg.output_dir, {"config.json", sweep_name, toy_name});
  if (!common.quiet) {
    std::size_t failed = 0;
    for (const auto& r : result.rows) failed += r.ok ? 0 : 1;
    std::cout << result.rows.size() << " rows (" << failed << " failed) in "
              << (fs::path(cfg.output_dir) / sweep_name).string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-aligned sampling for linear inverse problems"};
  app.require_subcommand(1);

  Common solve_opts;
  std::optional<std::uint64_t> seed;
  auto* solve_cmd = app.add_subcommand("solve", "Run every method of a config and write artifacts");
  solve_cmd->add_option("config", solve_opts.config_path, "Experiment config (JSON)")->required();
  solve_cmd->add_option("--out", solve_opts.out_dir, "Output directory (overrides output_dir)");
  solve_cmd->add_option("--seed", seed, "Run a single seed instead of the config's seed list");
  solve_cmd->add_flag("--quiet", solve_opts.quiet, "Suppress the summary");

  Common sweep_opts;
  std::string param;
  std::vector<double> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep eta1, eta2 or k on the first mas method");
  sweep_cmd->add_option("config", sweep_opts.config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--param", param, "eta1, eta2 or k")->required();
  sweep_cmd->add_option("--grid", grid, "Comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", sweep_opts.out_dir, "Output directory (overrides output_dir)");
  sweep_cmd->add_flag("--quiet", sweep_opts.quiet, "Suppress the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve_cmd) return solve(solve_opts, seed);
    return sweep(sweep_opts, param, grid);
  } catch (const mas::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverError;
  }
}
