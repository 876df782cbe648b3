#pragma once

#include "rtgr/dataset.hpp"
#include "rtgr/rng.hpp"

namespace rtgr {

/// Resampling primitives used by augment(); exposed for direct testing.
/// All take [H,W] maps or [C,H,W] images.

TensorT<double> flip_horizontal(const TensorT<double>& t);

/// Rotation about the image center by `degrees`. Bilinear sampling clamps to
/// the edge; nearest sampling treats out-of-frame as 0 (background).
TensorT<double> rotate_bilinear(const TensorT<double>& t, double degrees);
TensorT<double> rotate_nearest(const TensorT<double>& t, double degrees);

/// Crops [y0, y0+crop_h) x [x0, x0+crop_w) and resizes back to the source
/// extent (align-corners=false for bilinear; rounded source index for
/// nearest).
TensorT<double> crop_resize_bilinear(const TensorT<double>& t, std::size_t y0, std::size_t x0,
                                     std::size_t crop_h, std::size_t crop_w);
TensorT<double> crop_resize_nearest(const TensorT<double>& t, std::size_t y0, std::size_t x0,
                                    std::size_t crop_h, std::size_t crop_w);

TensorT<double> binarize(const TensorT<double>& t, double threshold = 0.5);

/// Horizontal flip with p = 0.5, rotation uniform in +-10 degrees, random
/// crop to 7/8 of each side resized back. The image path is bilinear, the
/// mask path nearest + re-binarization, and the boundary gt is regenerated
/// from the augmented mask.
Sample augment(const Sample& sample, Rng& rng);

}  // namespace rtgr
