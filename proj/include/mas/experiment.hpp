#pragma once

// End-to-end runner: config -> operator, prior, ground truths, measurements,
// one solver run per (image, seed, method) cell, then artifacts on disk.

#include "mas/config.hpp"
#include "mas/prior.hpp"
#include "mas/sampler.hpp"
#include "mas/spectral_ops.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mas {

struct Instance {
  SpectralOperatorD op;
  std::optional<ImageShape> measurement_shape;  // unset for masks
  GaussianMixturePriorD prior;
  DiffusionScheduleD schedule;
  std::vector<Image> truths;
};

/// Builds everything that does not depend on the run seed. Throws ConfigError.
Instance build_instance(const ExperimentConfig& cfg);

MethodConfigD to_method_config(const MethodSpec& spec);

std::string method_label(const MethodSpec& spec);

struct CellResult {
  Index image = 0;
  std::uint64_t seed = 0;
  std::size_t method = 0;
  bool ok = false;
  std::string error;
  Index failed_step = -1;
  double psnr = 0;
  bool identical = false;
  std::optional<double> ssim;  // unset when the image is smaller than the window
  double residual = 0;         // ||y - H x0||
  Image estimate;
  std::vector<StepRecord<double>> trajectory;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<Image> backprojections;  // H^dagger y per (image, seed), image-major
  std::vector<CellResult> cells;       // (image, seed, method), image-major
  bool all_ok() const;
};

struct RunSettings {
  unsigned threads = 1;
  bool keep_trajectories = true;
};

/// Thread count from MAS_THREADS, else hardware concurrency (at least 1).
unsigned threads_from_env();

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunSettings& settings = {});

/// Deterministic metrics table: per-run values plus mean and std over runs.
std::string metrics_json(const ExperimentConfig& cfg, const ExperimentResult& result);
std::string trajectories_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Writes images, metrics.json, trajectories.json, config.json and manifest.json.
void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& result, const std::string& out_dir);

/// manifest.json over every listed file under out_dir.
void write_manifest(const std::string& out_dir, const std::vector<std::string>& relative_paths);

enum class SweepParam { eta1, eta2, k };

SweepParam parse_sweep_param(const std::string& name);

struct SweepRow {
  double value = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double psnr = 0;
  bool identical = false;
  std::optional<double> ssim;
  double residual = 0;
};

struct ToyPoint {
  double value = 0;
  bool ok = false;
  std::string error;
  VectorXd x0_star;
};

struct SweepResult {
  std::vector<SweepRow> rows;    // grid-major, then seed; metrics averaged over images
  std::vector<ToyPoint> toy;     // one per grid value
  VectorXd toy_prior_mean;
  VectorXd toy_measurement;
};

/// Sweeps the parameter on the first "mas" method of the config.
SweepResult run_sweep(const ExperimentConfig& cfg, SweepParam param, const std::vector<double>& grid,
                      const RunSettings& settings = {});

std::string sweep_csv(SweepParam param, const SweepResult& result);
std::string toy_csv(SweepParam param, const SweepResult& result);

/// The 2-D instance behind toy_csv: H = [1, 0.5], m = (0.2, 0.8), y = 1.
struct ToyInstance {
  SpectralOperatorD op;
  VectorXd m;
  VectorXd y;
};
ToyInstance toy_instance();

}  // namespace mas
