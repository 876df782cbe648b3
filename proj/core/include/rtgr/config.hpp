#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rtgr/dataset.hpp"
#include "rtgr/network.hpp"

namespace rtgr {

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.001;
  std::size_t batch_size = 8;
  std::size_t iterations = 1500;
  std::size_t checkpoint_interval = 500;
  std::size_t log_interval = 100;
  std::vector<double> loss_weights;  // empty = all steps weighted 1
  double boundary_pos_weight = 1.0;  // 1 = plain BCE
  bool augment = true;
  std::uint64_t seed = 11;

  bool operator==(const TrainConfig&) const = default;
};

/// Everything a run needs, parsed from a sectioned key = value file.
/// Parsing rejects unknown sections/keys and reports the offending line;
/// to_string() emits the canonical form, and parse(to_string(c)) == c.
struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;  // model.image_size mirrors data.image_size
  TrainConfig train;
  std::string out_dir = "runs/default";

  bool operator==(const ExperimentConfig&) const = default;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_string() const;

  /// The canonical file with defaults, used by `--help` and `config init`.
  static std::string describe_keys();
};

}  // namespace rtgr
