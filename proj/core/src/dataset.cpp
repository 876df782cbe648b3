#include "rtgr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rtgr/metrics.hpp"
#include "rtgr/rng.hpp"

namespace rtgr {

namespace {

constexpr std::uint64_t kDataTag = 0x64617461u;  // per-sample stream tag

/// Coarse random grid upsampled bilinearly: a smooth field in [-1, 1].
TensorT<double> noise_field(std::size_t size, Rng& rng) {
  constexpr std::size_t kGrid = 6;
  std::vector<double> grid(kGrid * kGrid);
  for (auto& v : grid) v = rng.uniform(-1.0, 1.0);

  TensorT<double> field(Shape{size, size});
  const double scale = static_cast<double>(kGrid) / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * scale - 0.5;
    const double fy = sy - std::floor(sy);
    const auto y0 = static_cast<std::size_t>(std::clamp(std::floor(sy), 0.0, double(kGrid - 1)));
    const std::size_t y1 = std::min(y0 + 1, kGrid - 1);
    for (std::size_t x = 0; x < size; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * scale - 0.5;
      const double fx = sx - std::floor(sx);
      const auto x0 = static_cast<std::size_t>(std::clamp(std::floor(sx), 0.0, double(kGrid - 1)));
      const std::size_t x1 = std::min(x0 + 1, kGrid - 1);
      const double top = (1.0 - fx) * grid[y0 * kGrid + x0] + fx * grid[y0 * kGrid + x1];
      const double bot = (1.0 - fx) * grid[y1 * kGrid + x0] + fx * grid[y1 * kGrid + x1];
      field.data()[y * size + x] = (1.0 - fy) * top + fy * bot;
    }
  }
  return field;
}

struct ShapeSpec {
  enum Kind { kEllipse, kRectangle, kTriangle } kind;
  double cx, cy;      // center, pixels
  double a, b;        // half extents, pixels
  double angle;       // radians
  double vx[3], vy[3];  // triangle vertices
};

ShapeSpec draw_shape(std::size_t size, Rng& rng) {
  ShapeSpec s{};
  const double fsize = static_cast<double>(size);
  const std::uint64_t kind = rng.below(3);
  s.kind = static_cast<ShapeSpec::Kind>(kind);
  s.cx = rng.uniform(0.2, 0.8) * fsize;
  s.cy = rng.uniform(0.2, 0.8) * fsize;
  s.a = rng.uniform(0.12, 0.32) * fsize;
  s.b = rng.uniform(0.12, 0.32) * fsize;
  s.angle = rng.uniform(0.0, std::numbers::pi);
  if (s.kind == ShapeSpec::kTriangle) {
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < 3; ++k) {
      const double r = rng.uniform(0.14, 0.36) * fsize;
      s.vx[k] = s.cx + r * std::cos(phi);
      s.vy[k] = s.cy + r * std::sin(phi);
      phi += rng.uniform(0.6, 1.4) * (2.0 * std::numbers::pi / 3.0);
    }
  }
  return s;
}

bool inside(const ShapeSpec& s, double x, double y) {
  switch (s.kind) {
    case ShapeSpec::kEllipse: {
      const double dx = x - s.cx, dy = y - s.cy;
      const double u = dx * std::cos(s.angle) + dy * std::sin(s.angle);
      const double v = -dx * std::sin(s.angle) + dy * std::cos(s.angle);
      return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
    }
    case ShapeSpec::kRectangle: {
      const double dx = x - s.cx, dy = y - s.cy;
      const double u = dx * std::cos(s.angle) + dy * std::sin(s.angle);
      const double v = -dx * std::sin(s.angle) + dy * std::cos(s.angle);
      return std::abs(u) <= s.a && std::abs(v) <= s.b;
    }
    case ShapeSpec::kTriangle: {
      auto side = [&](int i, int j) {
        return (s.vx[j] - s.vx[i]) * (y - s.vy[i]) - (s.vy[j] - s.vy[i]) * (x - s.vx[i]);
      };
      const double d0 = side(0, 1), d1 = side(1, 2), d2 = side(2, 0);
      const bool any_neg = d0 < 0 || d1 < 0 || d2 < 0;
      const bool any_pos = d0 > 0 || d1 > 0 || d2 > 0;
      return !(any_neg && any_pos);
    }
  }
  return false;
}

/// Union mask of 1-3 shapes, redrawn until coverage lands in range.
TensorT<double> draw_mask(const DataConfig& cfg, Rng& rng) {
  const std::size_t size = cfg.image_size;
  TensorT<double> mask(Shape{size, size});
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::fill(mask.data().begin(), mask.data().end(), 0.0);
    const std::uint64_t count = 1 + rng.below(3);
    std::vector<ShapeSpec> shapes;
    for (std::uint64_t k = 0; k < count; ++k) shapes.push_back(draw_shape(size, rng));
    std::size_t covered = 0;
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        for (const auto& s : shapes) {
          if (inside(s, px, py)) {
            mask.data()[y * size + x] = 1.0;
            ++covered;
            break;
          }
        }
      }
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(size * size);
    if (coverage >= cfg.min_coverage && coverage <= cfg.max_coverage) return mask;
  }
  fail("dataset: could not reach the configured coverage range");
}

}  // namespace

Sample make_sample(const DataConfig& config, std::size_t index) {
  if (config.image_size % 8 != 0)
    fail("dataset: image size must be divisible by 8, got " + std::to_string(config.image_size));

  Sample sample;
  sample.seed = Rng::derive(config.seed, kDataTag, index);
  Rng rng(sample.seed);

  const std::size_t size = config.image_size;
  const std::size_t plane = size * size;

  sample.saliency = draw_mask(config, rng);

  // Background and foreground luminance; polarity is random so a plain
  // intensity threshold cannot separate them across the dataset.
  const double base = rng.uniform(0.3, 0.7);
  const double sign = rng.coin() ? 1.0 : -1.0;
  const double fg_base = std::clamp(base + sign * config.contrast, 0.02, 0.98);

  const TensorT<double> bg_field = noise_field(size, rng);
  const TensorT<double> fg_field = noise_field(size, rng);

  double bg_tint[3], fg_tint[3];
  for (int c = 0; c < 3; ++c) bg_tint[c] = rng.uniform(-0.04, 0.04);
  for (int c = 0; c < 3; ++c) fg_tint[c] = rng.uniform(-0.04, 0.04);

  sample.image = TensorT<double>(Shape{3, size, size});
  for (std::size_t i = 0; i < plane; ++i) {
    const bool fg = sample.saliency.data()[i] != 0.0;
    const double field = fg ? fg_field.data()[i] : bg_field.data()[i];
    const double lum = (fg ? fg_base : base) + config.noise * field;
    for (std::size_t c = 0; c < 3; ++c) {
      const double tint = fg ? fg_tint[c] : bg_tint[c];
      const double grain = 0.015 * rng.uniform(-1.0, 1.0);
      sample.image.data()[c * plane + i] = std::clamp(lum + tint + grain, 0.0, 1.0);
    }
  }

  sample.boundary = metrics::extract_boundary(sample.saliency);
  return sample;
}

std::vector<Sample> make_split(const DataConfig& config, std::size_t first, std::size_t count) {
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_sample(config, first + i));
  return out;
}

}  // namespace rtgr
