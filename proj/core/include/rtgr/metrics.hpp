#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rtgr/tensor.hpp"

namespace rtgr::metrics {

inline constexpr double kBetaSquared = 0.3;
inline constexpr std::size_t kNumThresholds = 256;  // thresholds k/256, k = 0..255

/// Grayscale map with values in [0,1], rank 2 [H,W].
using Map = TensorT<double>;

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

using PrCurve = std::array<PrPoint, kNumThresholds>;

struct SaliencyEval {
  double f_beta_max = 0.0;
  double f_beta_adaptive = 0.0;
  double mae = 0.0;
  PrCurve pr_curve{};
};

/// Mean absolute per-pixel error, (1/(W*H)) * sum |P - Y|.
double mae(const Map& pred, const Map& gt);

/// Binarizes pred at `pred >= threshold` and counts the four classes
/// against a strictly binary gt.
ConfusionCounts confusion(const Map& pred, const Map& gt, double threshold);

/// Weighted harmonic mean (1+b2)*P*R / (b2*P + R); 0 when the denominator
/// vanishes.
double f_beta(double precision, double recall, double beta2 = kBetaSquared);

/// Per-threshold precision/recall at thresholds k/256, k=0..255, with the
/// degenerate rule precision := 1 when nothing is predicted positive.
/// Requires non-empty gt foreground.
PrCurve pr_curve(const Map& pred, const Map& gt);

/// F_beta at threshold min(2*mean(pred), 1).
double f_beta_adaptive(const Map& pred, const Map& gt, double beta2 = kBetaSquared);

/// Full per-image evaluation (max-F over the curve, adaptive F, MAE).
SaliencyEval evaluate_pair(const Map& pred, const Map& gt);

/// Morphological gradient of a binary mask: dilate(mask, 3x3 cross) minus
/// erode(mask, 3x3 cross). Pixels outside the image are treated as 0, so a
/// mask flush against the border still produces an edge there.
Map extract_boundary(const Map& mask);

/// Aggregate over a dataset: MAE is the mean of per-image MAE over all
/// images; the PR curve averages per-threshold P and R over images with
/// non-empty gt, and max-F is taken over that averaged curve. Adaptive F is
/// the mean of per-image adaptive F over non-empty-gt images.
class DatasetAccumulator {
 public:
  void add(const Map& pred, const Map& gt);
  std::size_t images() const { return mae_count_; }
  std::size_t pr_images() const { return pr_count_; }
  SaliencyEval finish() const;

 private:
  std::size_t mae_count_ = 0;
  std::size_t pr_count_ = 0;
  double mae_sum_ = 0.0;
  double adaptive_sum_ = 0.0;
  std::array<double, kNumThresholds> precision_sum_{};
  std::array<double, kNumThresholds> recall_sum_{};
};

struct DatasetReport {
  SaliencyEval aggregate;
  std::vector<std::pair<std::string, SaliencyEval>> per_image;  // sorted by filename
  std::vector<std::string> skipped;                             // unmatched filenames
};

/// Evaluates matching 8-bit grayscale files (PNG/PGM) from two directories.
/// Unmatched files are listed and skipped with a warning; an empty
/// intersection is an error. gt maps are binarized at 0.5.
DatasetReport evaluate_dataset(const std::filesystem::path& pred_dir,
                               const std::filesystem::path& gt_dir);

/// Writes report.json and report.csv into out_dir.
void write_report(const DatasetReport& report, const std::filesystem::path& out_dir);

}  // namespace rtgr::metrics
