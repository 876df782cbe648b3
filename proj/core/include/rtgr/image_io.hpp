#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rtgr/tensor.hpp"

namespace rtgr {

/// 8-bit interleaved image, 1 (gray) or 3 (rgb) channels.
struct ImageU8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Reads PNG/PGM/PPM by file magic. PNG support covers non-interlaced 8-bit
/// gray, gray+alpha, RGB and RGBA (alpha is dropped); anything else is
/// rejected with a descriptive error.
ImageU8 read_image(const std::filesystem::path& path);

/// Deterministic PNG writer (filter 0, zlib level 6): identical pixels yield
/// identical bytes.
void write_png(const std::filesystem::path& path, const ImageU8& image);

/// Binary PGM (1 channel) or PPM (3 channels).
void write_pnm(const std::filesystem::path& path, const ImageU8& image);

/// [H,W] map in [0,1] from a gray image; RGB collapses via channel mean.
TensorT<double> image_to_map(const ImageU8& image);

/// Gray image from an [H,W] map in [0,1]; values are clamped then rounded
/// to v*255.
ImageU8 map_to_image(const TensorT<double>& map);

/// RGB image from a [3,H,W] tensor in [0,1].
ImageU8 rgb_to_image(const TensorT<double>& planes);

/// [3,H,W] tensor in [0,1] from a gray or RGB image (gray replicates).
TensorT<double> image_to_rgb(const ImageU8& image);

}  // namespace rtgr
