#pragma once

// Declarative experiment description. One JSON file fully determines a run;
// unknown keys are rejected and every error names the offending JSON path.

#include "mas/degradations.hpp"
#include "mas/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mas {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error("config error at " + (path.empty() ? std::string("/") : path) + ": " + message),
        path_(path.empty() ? "/" : path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct OperatorSpec {
  std::string kind = "identity";  // identity | mask | block_downsample | circular_blur | channel_average
  std::string mask = "box";       // box | random
  Index box_height = 0;
  Index box_width = 0;
  double masked_fraction = 0.0;
  std::uint64_t mask_seed = 0;
  Index factor = 1;
  Index kernel_size = 1;
  bool operator==(const OperatorSpec&) const = default;
};

struct PriorSpec {
  using Mean = std::variant<std::string, std::vector<double>>;  // image file or inline values

  std::string kind = "template_bank";  // template_bank | gaussian | bank
  Index templates = 8;
  double tau = 0.05;                    // per-pixel std of every component
  std::uint64_t seed = 7;
  double mean_value = 0.5;              // gaussian: constant mean
  std::vector<double> weights;          // bank
  std::vector<Mean> means;              // bank
  std::vector<double> variances;        // bank
  bool operator==(const PriorSpec&) const = default;
};

struct GroundTruthSpec {
  Index count = 1;
  std::uint64_t seed = 1000;
  std::vector<std::string> files;  // when non-empty, replaces prior samples
  bool operator==(const GroundTruthSpec&) const = default;
};

struct ScheduleSpec {
  Index steps = 20;
  std::string variant = "ddim";  // ddim | simple_ancestral
  double eta = 0.85;
  bool operator==(const ScheduleSpec&) const = default;
};

struct NoiseSpec {
  std::string kind = "noise_free";  // noise_free | known_gaussian | unknown
  double sigma_y = 0.0;
  double inflation = 1.2;
  double k = 0.0;
  double eta1_base = 0.0;
  bool operator==(const NoiseSpec&) const = default;
};

struct MethodSpec {
  std::string name = "mas";  // mas | ddnm | tmpd_scalar | unconditional
  std::string label;         // defaults to name; unique per config
  double eta1 = 0.0;
  double eta2 = 0.0;
  bool allow_negative_eta2 = false;
  NoiseSpec noise;
  std::string rt2 = "ratio";  // ratio | tweedie_scalar
  bool operator==(const MethodSpec&) const = default;
};

struct ExperimentConfig {
  ImageShape image;
  OperatorSpec op;
  CorruptionSpecD corruption;
  PriorSpec prior;
  GroundTruthSpec ground_truth;
  ScheduleSpec schedule;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError with the JSON path of the first problem found.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical form: every field written, fixed key order.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Hex SHA-256 of the canonical serialization.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& bytes);

}  // namespace mas
