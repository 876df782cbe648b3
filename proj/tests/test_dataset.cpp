#include <algorithm>

#include "doctest.h"
#include "rtgr/dataset.hpp"
#include "rtgr/metrics.hpp"
#include "test_util.hpp"

using namespace rtgr;

namespace {

double coverage(const TensorT<double>& mask) {
  double acc = 0.0;
  for (const double v : mask.data()) acc += v;
  return acc / static_cast<double>(mask.numel());
}

/// Grayscale intensity as a saliency prediction: the no-learning baseline.
TensorT<double> luminance(const Sample& s) {
  const std::size_t plane = s.saliency.numel();
  TensorT<double> out(s.saliency.shape());
  for (std::size_t i = 0; i < plane; ++i) {
    out.data()[i] =
        (s.image.data()[i] + s.image.data()[plane + i] + s.image.data()[2 * plane + i]) / 3.0;
  }
  return out;
}

}  // namespace

TEST_CASE("same seed and index reproduce the sample bit-exactly") {
  DataConfig cfg;
  cfg.image_size = 32;
  const Sample a = make_sample(cfg, 5);
  const Sample b = make_sample(cfg, 5);
  CHECK(a.image.data() == b.image.data());
  CHECK(a.saliency.data() == b.saliency.data());
  CHECK(a.boundary.data() == b.boundary.data());
  CHECK(a.seed == b.seed);

  const Sample c = make_sample(cfg, 6);
  CHECK(a.image.data() != c.image.data());
}

TEST_CASE("sample tensors are well-formed") {
  DataConfig cfg;
  cfg.image_size = 32;
  for (std::size_t i = 0; i < 10; ++i) {
    const Sample s = make_sample(cfg, i);
    CHECK(s.image.shape() == Shape{3, 32, 32});
    CHECK(s.saliency.shape() == Shape{32, 32});
    for (const double v : s.image.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (const double v : s.saliency.data()) CHECK((v == 0.0 || v == 1.0));
    // The boundary gt is the mask's morphological gradient.
    const auto boundary = metrics::extract_boundary(s.saliency);
    CHECK(boundary.data() == s.boundary.data());
  }
}

TEST_CASE("coverage stays inside the configured range over 1000 samples") {
  DataConfig cfg;
  cfg.image_size = 32;
  double lo = 1.0, hi = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const double c = coverage(make_sample(cfg, i).saliency);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(lo >= cfg.min_coverage);
  CHECK(hi <= cfg.max_coverage);
  CHECK(hi > lo);  // not degenerate
}

TEST_CASE("rejected coverage ranges fail loudly") {
  DataConfig cfg;
  cfg.image_size = 32;
  cfg.min_coverage = 0.99;  // unreachable with the shape size bounds
  cfg.max_coverage = 1.0;
  CHECK_THROWS_WITH_AS(make_sample(cfg, 0), doctest::Contains("coverage"), Error);
}

TEST_CASE("low-contrast split defeats the plain intensity-threshold baseline") {
  DataConfig cfg;
  cfg.image_size = 64;
  cfg.contrast = 0.08;  // low-contrast mode: gap below 0.1
  metrics::DatasetAccumulator acc;
  for (std::size_t i = 0; i < 100; ++i) {
    const Sample s = make_sample(cfg, i);
    acc.add(luminance(s), s.saliency);
  }
  const auto eval = acc.finish();
  INFO("baseline max-F on low contrast: ", eval.f_beta_max);
  CHECK(eval.f_beta_max < 0.6);
}

TEST_CASE("default contrast is separable enough to be learnable in principle") {
  // The same baseline on the default split scores clearly better than on
  // the low-contrast split, but polarity still keeps it far from perfect.
  DataConfig low_cfg, default_cfg;
  low_cfg.contrast = 0.08;
  metrics::DatasetAccumulator low_acc, def_acc;
  for (std::size_t i = 0; i < 50; ++i) {
    const Sample lo = make_sample(low_cfg, i);
    low_acc.add(luminance(lo), lo.saliency);
    const Sample hi = make_sample(default_cfg, i);
    def_acc.add(luminance(hi), hi.saliency);
  }
  CHECK(def_acc.finish().f_beta_max > low_acc.finish().f_beta_max);
}
