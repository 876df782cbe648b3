#pragma once

#include <cstdint>
#include <vector>

#include "rtgr/tensor.hpp"

namespace rtgr {

/// Synthetic shapes-on-textured-background generator settings.
struct DataConfig {
  std::size_t image_size = 64;  // divisible by 8
  std::size_t train_count = 2000;
  std::size_t eval_count = 200;
  std::uint64_t seed = 7;
  double contrast = 0.35;      // |foreground - background| luminance gap
  double noise = 0.08;         // low-frequency texture amplitude
  double min_coverage = 0.05;  // bounds on the gt foreground fraction
  double max_coverage = 0.6;

  bool operator==(const DataConfig&) const = default;
};

/// One generated example. Maps are [H,W]; the image is [3,H,W] in [0,1].
struct Sample {
  TensorT<double> image;
  TensorT<double> saliency;  // binary
  TensorT<double> boundary;  // binary, extract_boundary(saliency)
  std::uint64_t seed = 0;    // per-sample stream, recorded in manifests
};

/// Deterministic sample for (config.seed, index). Training uses indices
/// [0, train_count); the held-out split uses [train_count,
/// train_count + eval_count). 1-3 filled shapes (ellipse / rectangle /
/// triangle) over low-frequency textured background; foreground polarity is
/// random per image. Coverage is rejection-sampled into
/// [min_coverage, max_coverage].
Sample make_sample(const DataConfig& config, std::size_t index);

std::vector<Sample> make_split(const DataConfig& config, std::size_t first, std::size_t count);

}  // namespace rtgr
