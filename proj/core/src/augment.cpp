#include "rtgr/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rtgr/metrics.hpp"

namespace rtgr {

namespace {

struct Planes {
  std::size_t channels, h, w;
};

Planes plane_dims(const TensorT<double>& t, const char* op) {
  if (t.rank() == 2) return {1, t.dim(0), t.dim(1)};
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  fail(std::string(op) + ": expected [H,W] or [C,H,W], got " + shape_str(t.shape()));
}

double sample_bilinear_clamped(const double* plane, std::size_t h, std::size_t w, double sy,
                               double sx) {
  const double fy = std::floor(sy), fx = std::floor(sx);
  const double ay = sy - fy, ax = sx - fx;
  const auto clamp_y = [h](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(h - 1)));
  };
  const auto clamp_x = [w](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(w - 1)));
  };
  const std::size_t y0 = clamp_y(fy), y1 = clamp_y(fy + 1);
  const std::size_t x0 = clamp_x(fx), x1 = clamp_x(fx + 1);
  const double top = (1.0 - ax) * plane[y0 * w + x0] + ax * plane[y0 * w + x1];
  const double bot = (1.0 - ax) * plane[y1 * w + x0] + ax * plane[y1 * w + x1];
  return (1.0 - ay) * top + ay * bot;
}

double sample_nearest_zero(const double* plane, std::size_t h, std::size_t w, double sy,
                           double sx) {
  const auto y = static_cast<std::ptrdiff_t>(std::lround(sy));
  const auto x = static_cast<std::ptrdiff_t>(std::lround(sx));
  if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) || x >= static_cast<std::ptrdiff_t>(w))
    return 0.0;
  return plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
}

template <typename SampleFn>
TensorT<double> rotate_impl(const TensorT<double>& t, double degrees, SampleFn sample) {
  const Planes p = plane_dims(t, "rotate");
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cy = (static_cast<double>(p.h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(p.w) - 1.0) / 2.0;

  TensorT<double> out(t.shape());
  for (std::size_t ch = 0; ch < p.channels; ++ch) {
    const double* src = t.data().data() + ch * p.h * p.w;
    double* dst = out.data().data() + ch * p.h * p.w;
    for (std::size_t y = 0; y < p.h; ++y) {
      for (std::size_t x = 0; x < p.w; ++x) {
        const double dy = static_cast<double>(y) - cy;
        const double dx = static_cast<double>(x) - cx;
        // Inverse rotation maps output pixels onto source coordinates.
        const double sy = cy + (-s * dx + c * dy);
        const double sx = cx + (c * dx + s * dy);
        dst[y * p.w + x] = sample(src, p.h, p.w, sy, sx);
      }
    }
  }
  return out;
}

template <typename SampleFn>
TensorT<double> crop_resize_impl(const TensorT<double>& t, std::size_t y0, std::size_t x0,
                                 std::size_t crop_h, std::size_t crop_w, SampleFn sample) {
  const Planes p = plane_dims(t, "crop_resize");
  if (crop_h == 0 || crop_w == 0 || y0 + crop_h > p.h || x0 + crop_w > p.w)
    fail("crop_resize: window [" + std::to_string(y0) + "," + std::to_string(x0) + ")+" +
         std::to_string(crop_h) + "x" + std::to_string(crop_w) + " exceeds " +
         std::to_string(p.h) + "x" + std::to_string(p.w));

  const double scale_y = static_cast<double>(crop_h) / static_cast<double>(p.h);
  const double scale_x = static_cast<double>(crop_w) / static_cast<double>(p.w);
  TensorT<double> out(t.shape());
  for (std::size_t ch = 0; ch < p.channels; ++ch) {
    const double* src = t.data().data() + ch * p.h * p.w;
    double* dst = out.data().data() + ch * p.h * p.w;
    for (std::size_t y = 0; y < p.h; ++y) {
      const double sy = static_cast<double>(y0) + (static_cast<double>(y) + 0.5) * scale_y - 0.5;
      for (std::size_t x = 0; x < p.w; ++x) {
        const double sx = static_cast<double>(x0) + (static_cast<double>(x) + 0.5) * scale_x - 0.5;
        dst[y * p.w + x] = sample(src, p.h, p.w, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace

TensorT<double> flip_horizontal(const TensorT<double>& t) {
  const Planes p = plane_dims(t, "flip_horizontal");
  TensorT<double> out(t.shape());
  for (std::size_t ch = 0; ch < p.channels; ++ch) {
    const double* src = t.data().data() + ch * p.h * p.w;
    double* dst = out.data().data() + ch * p.h * p.w;
    for (std::size_t y = 0; y < p.h; ++y) {
      for (std::size_t x = 0; x < p.w; ++x) dst[y * p.w + x] = src[y * p.w + (p.w - 1 - x)];
    }
  }
  return out;
}

TensorT<double> rotate_bilinear(const TensorT<double>& t, double degrees) {
  return rotate_impl(t, degrees, sample_bilinear_clamped);
}

TensorT<double> rotate_nearest(const TensorT<double>& t, double degrees) {
  return rotate_impl(t, degrees, sample_nearest_zero);
}

TensorT<double> crop_resize_bilinear(const TensorT<double>& t, std::size_t y0, std::size_t x0,
                                     std::size_t crop_h, std::size_t crop_w) {
  return crop_resize_impl(t, y0, x0, crop_h, crop_w, sample_bilinear_clamped);
}

TensorT<double> crop_resize_nearest(const TensorT<double>& t, std::size_t y0, std::size_t x0,
                                    std::size_t crop_h, std::size_t crop_w) {
  return crop_resize_impl(t, y0, x0, crop_h, crop_w, sample_nearest_zero);
}

TensorT<double> binarize(const TensorT<double>& t, double threshold) {
  TensorT<double> out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i)
    out.data()[i] = t.data()[i] >= threshold ? 1.0 : 0.0;
  return out;
}

Sample augment(const Sample& sample, Rng& rng) {
  Sample out;
  out.seed = sample.seed;
  out.image = sample.image;
  out.saliency = sample.saliency;

  if (rng.uniform() < 0.5) {
    out.image = flip_horizontal(out.image);
    out.saliency = flip_horizontal(out.saliency);
  }

  const double degrees = rng.uniform(-10.0, 10.0);
  out.image = rotate_bilinear(out.image, degrees);
  out.saliency = binarize(rotate_nearest(out.saliency, degrees));

  const std::size_t h = out.saliency.dim(0), w = out.saliency.dim(1);
  const std::size_t crop_h = h * 7 / 8, crop_w = w * 7 / 8;
  const std::size_t y0 = rng.below(h - crop_h + 1);
  const std::size_t x0 = rng.below(w - crop_w + 1);
  out.image = crop_resize_bilinear(out.image, y0, x0, crop_h, crop_w);
  out.saliency = binarize(crop_resize_nearest(out.saliency, y0, x0, crop_h, crop_w));

  out.boundary = metrics::extract_boundary(out.saliency);
  return out;
}

}  // namespace rtgr
