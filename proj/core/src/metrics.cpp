#include "rtgr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "rtgr/image_io.hpp"

namespace rtgr::metrics {

namespace {

void check_map(const char* op, const Map& m) {
  if (m.rank() != 2) fail(std::string(op) + ": map must be rank 2 [H,W], got " + shape_str(m.shape()));
}

void check_same(const char* op, const Map& a, const Map& b) {
  check_map(op, a);
  check_map(op, b);
  if (a.shape() != b.shape())
    fail(std::string(op) + ": shape mismatch, " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
}

void check_binary(const char* op, const Map& m) {
  for (const double v : m.data()) {
    if (v != 0.0 && v != 1.0)
      fail(std::string(op) + ": ground truth must be binary, found value " + std::to_string(v));
  }
}

bool has_foreground(const Map& gt) {
  return std::any_of(gt.data().begin(), gt.data().end(), [](double v) { return v != 0.0; });
}

double mean_value(const Map& m) {
  double acc = 0.0;
  for (const double v : m.data()) acc += v;
  return acc / static_cast<double>(m.numel());
}

/// One pass over the map yields counts for all 256 thresholds: a prediction
/// p falls in bucket floor(p*256), meaning it is predicted positive for
/// every threshold k/256 <= p.
void threshold_histograms(const Map& pred, const Map& gt,
                          std::array<std::uint64_t, kNumThresholds + 1>& pos,
                          std::array<std::uint64_t, kNumThresholds + 1>& pos_gt) {
  pos.fill(0);
  pos_gt.fill(0);
  const auto& p = pred.data();
  const auto& t = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = std::clamp(p[i], 0.0, 1.0);
    auto bucket = static_cast<std::size_t>(v * static_cast<double>(kNumThresholds));
    bucket = std::min(bucket, kNumThresholds);
    pos[bucket] += 1;
    if (t[i] != 0.0) pos_gt[bucket] += 1;
  }
}

}  // namespace

double mae(const Map& pred, const Map& gt) {
  check_same("mae", pred, gt);
  double acc = 0.0;
  const auto& p = pred.data();
  const auto& y = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - y[i]);
  return acc / static_cast<double>(p.size());
}

ConfusionCounts confusion(const Map& pred, const Map& gt, double threshold) {
  check_same("confusion", pred, gt);
  check_binary("confusion", gt);
  if (threshold < 0.0 || threshold > 1.0)
    fail("confusion: threshold must lie in [0,1], got " + std::to_string(threshold));
  ConfusionCounts c;
  const auto& p = pred.data();
  const auto& t = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool predicted = p[i] >= threshold;
    const bool actual = t[i] != 0.0;
    if (predicted && actual)
      ++c.tp;
    else if (predicted && !actual)
      ++c.fp;
    else if (!predicted && actual)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double f_beta(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

PrCurve pr_curve(const Map& pred, const Map& gt) {
  check_same("pr_curve", pred, gt);
  check_binary("pr_curve", gt);
  if (!has_foreground(gt)) fail("pr_curve: ground truth has no foreground pixels");

  std::array<std::uint64_t, kNumThresholds + 1> pos{}, pos_gt{};
  threshold_histograms(pred, gt, pos, pos_gt);

  std::uint64_t gt_total = 0;
  for (const double v : gt.data()) gt_total += v != 0.0 ? 1 : 0;

  PrCurve curve{};
  // Suffix sums turn the histograms into per-threshold tp / predicted counts.
  std::uint64_t predicted = 0, tp = 0;
  for (std::size_t k = kNumThresholds + 1; k-- > 0;) {
    predicted += pos[k];
    tp += pos_gt[k];
    if (k < kNumThresholds) {
      curve[k].precision = predicted == 0 ? 1.0
                                          : static_cast<double>(tp) / static_cast<double>(predicted);
      curve[k].recall = static_cast<double>(tp) / static_cast<double>(gt_total);
    }
  }
  return curve;
}

double f_beta_adaptive(const Map& pred, const Map& gt, double beta2) {
  check_same("f_beta_adaptive", pred, gt);
  check_binary("f_beta_adaptive", gt);
  const double threshold = std::min(2.0 * mean_value(pred), 1.0);
  const ConfusionCounts c = confusion(pred, gt, threshold);
  const double precision =
      c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn == 0) return 0.0;
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return f_beta(precision, recall, beta2);
}

SaliencyEval evaluate_pair(const Map& pred, const Map& gt) {
  SaliencyEval eval;
  eval.mae = mae(pred, gt);
  eval.pr_curve = pr_curve(pred, gt);
  for (const PrPoint& pt : eval.pr_curve)
    eval.f_beta_max = std::max(eval.f_beta_max, f_beta(pt.precision, pt.recall));
  eval.f_beta_adaptive = f_beta_adaptive(pred, gt);
  return eval;
}

Map extract_boundary(const Map& mask) {
  check_map("extract_boundary", mask);
  check_binary("extract_boundary", mask);
  const std::size_t h = mask.dim(0), w = mask.dim(1);
  const auto& m = mask.data();
  Map out(Shape{h, w});
  auto value = [&](std::ptrdiff_t y, std::ptrdiff_t x) -> double {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) || x >= static_cast<std::ptrdiff_t>(w))
      return 0.0;
    return m[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto sy = static_cast<std::ptrdiff_t>(y);
      const auto sx = static_cast<std::ptrdiff_t>(x);
      double dilated = value(sy, sx);
      double eroded = value(sy, sx);
      constexpr std::pair<int, int> kCross[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (const auto& [dy, dx] : kCross) {
        const double v = value(sy + dy, sx + dx);
        dilated = std::max(dilated, v);
        eroded = std::min(eroded, v);
      }
      out.data()[y * w + x] = dilated - eroded;
    }
  }
  return out;
}

void DatasetAccumulator::add(const Map& pred, const Map& gt) {
  mae_sum_ += mae(pred, gt);
  ++mae_count_;
  if (!has_foreground(gt)) return;  // recall undefined; excluded from PR aggregation
  const PrCurve curve = pr_curve(pred, gt);
  for (std::size_t k = 0; k < kNumThresholds; ++k) {
    precision_sum_[k] += curve[k].precision;
    recall_sum_[k] += curve[k].recall;
  }
  adaptive_sum_ += f_beta_adaptive(pred, gt);
  ++pr_count_;
}

SaliencyEval DatasetAccumulator::finish() const {
  if (mae_count_ == 0) fail("evaluate: no images accumulated");
  SaliencyEval eval;
  eval.mae = mae_sum_ / static_cast<double>(mae_count_);
  if (pr_count_ > 0) {
    for (std::size_t k = 0; k < kNumThresholds; ++k) {
      eval.pr_curve[k].precision = precision_sum_[k] / static_cast<double>(pr_count_);
      eval.pr_curve[k].recall = recall_sum_[k] / static_cast<double>(pr_count_);
      eval.f_beta_max =
          std::max(eval.f_beta_max, f_beta(eval.pr_curve[k].precision, eval.pr_curve[k].recall));
    }
    eval.f_beta_adaptive = adaptive_sum_ / static_cast<double>(pr_count_);
  }
  return eval;
}

namespace {

std::map<std::string, std::filesystem::path> list_maps(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    fail("evaluate: '" + dir.string() + "' is not a directory");
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm")
      out.emplace(entry.path().filename().string(), entry.path());
  }
  return out;
}

Map binarize(const Map& m) {
  Map out(m.shape());
  for (std::size_t i = 0; i < m.numel(); ++i) out.data()[i] = m.data()[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

}  // namespace

DatasetReport evaluate_dataset(const std::filesystem::path& pred_dir,
                               const std::filesystem::path& gt_dir) {
  const auto preds = list_maps(pred_dir);
  const auto gts = list_maps(gt_dir);

  DatasetReport report;
  std::set<std::string> matched;
  for (const auto& [name, path] : preds) {
    if (gts.count(name))
      matched.insert(name);
    else
      report.skipped.push_back("pred-only: " + name);
  }
  for (const auto& [name, path] : gts) {
    if (!preds.count(name)) report.skipped.push_back("gt-only: " + name);
  }
  for (const auto& s : report.skipped) std::cerr << "warning: skipping unmatched file (" << s << ")\n";
  if (matched.empty()) fail("evaluate: no matching prediction/ground-truth filenames");

  DatasetAccumulator acc;
  for (const auto& name : matched) {
    const Map pred = image_to_map(read_image(preds.at(name)));
    const Map gt = binarize(image_to_map(read_image(gts.at(name))));
    if (pred.shape() != gt.shape())
      fail("evaluate: '" + name + "' prediction " + shape_str(pred.shape()) +
           " does not match ground truth " + shape_str(gt.shape()));
    SaliencyEval eval;
    eval.mae = mae(pred, gt);
    if (has_foreground(gt)) {
      eval = evaluate_pair(pred, gt);
    }
    acc.add(pred, gt);
    report.per_image.emplace_back(name, eval);
  }
  report.aggregate = acc.finish();
  return report;
}

void write_report(const DatasetReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::ofstream csv(out_dir / "report.csv");
  if (!csv) fail("evaluate: cannot write " + (out_dir / "report.csv").string());
  csv << "image,f_beta_max,f_beta_adaptive,mae\n";
  csv.precision(17);
  for (const auto& [name, eval] : report.per_image)
    csv << name << "," << eval.f_beta_max << "," << eval.f_beta_adaptive << "," << eval.mae << "\n";
  csv << "aggregate," << report.aggregate.f_beta_max << "," << report.aggregate.f_beta_adaptive
      << "," << report.aggregate.mae << "\n";

  std::ofstream json(out_dir / "report.json");
  if (!json) fail("evaluate: cannot write " + (out_dir / "report.json").string());
  json.precision(17);
  json << "{\n  \"aggregate\": {\"f_beta_max\": " << report.aggregate.f_beta_max
       << ", \"f_beta_adaptive\": " << report.aggregate.f_beta_adaptive
       << ", \"mae\": " << report.aggregate.mae << ", \"images\": " << report.per_image.size()
       << "},\n  \"images\": {\n";
  for (std::size_t i = 0; i < report.per_image.size(); ++i) {
    const auto& [name, eval] = report.per_image[i];
    json << "    \"" << name << "\": {\"f_beta_max\": " << eval.f_beta_max
         << ", \"f_beta_adaptive\": " << eval.f_beta_adaptive << ", \"mae\": " << eval.mae << "}"
         << (i + 1 < report.per_image.size() ? "," : "") << "\n";
  }
  json << "  },\n  \"skipped\": [";
  for (std::size_t i = 0; i < report.skipped.size(); ++i)
    json << "\"" << report.skipped[i] << "\"" << (i + 1 < report.skipped.size() ? ", " : "");
  json << "]\n}\n";
}

}  // namespace rtgr::metrics
