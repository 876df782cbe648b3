#include "rtgr/encoder.hpp"

namespace rtgr {

template <typename T>
std::array<typename GraphT<T>::Id, 4> encode(GraphT<T>& g, typename GraphT<T>::Id image,
                                             EncoderParamsT<T>& params) {
  const TensorT<T>& img = g.val(image);
  if (img.rank() != 4) fail("encode: image must be [N,3,H,W], got " + shape_str(img.shape()));
  if (img.dim(2) % 8 != 0 || img.dim(3) % 8 != 0)
    fail("encode: spatial extents must be divisible by 8, got " + std::to_string(img.dim(2)) +
         "x" + std::to_string(img.dim(3)));

  std::array<typename GraphT<T>::Id, 4> outs{};
  typename GraphT<T>::Id x = image;
  std::size_t h = img.dim(2), w = img.dim(3);
  for (std::size_t s = 0; s < 4; ++s) {
    auto& stage = params.stages[s];
    if (EncoderParamsT<T>::kStrides[s] == 2) {
      // Halving via align-corners=false bilinear resize (2x2 mean pooling);
      // a 3x3 stride-2 conv cannot halve an even extent under the exact
      // output-size contract.
      h /= 2;
      w /= 2;
      x = ops::resize_bilinear(g, x, h, w);
    }
    x = ops::conv2d(g, x, g.leaf(stage.conv1.weight), g.leaf(stage.conv1.bias), 1, 1);
    x = ops::relu(g, x);
    x = ops::conv2d(g, x, g.leaf(stage.conv2.weight), g.leaf(stage.conv2.bias), 1, 1);
    x = ops::relu(g, x);
    outs[s] = x;
  }
  return outs;
}

template <typename T>
typename GraphT<T>::Id integrate(GraphT<T>& g, const std::array<typename GraphT<T>::Id, 4>& stages,
                                 MergeLevel level, Conv2dParamsT<T>& merge) {
  // Working resolution is stage 2's output, H/4 x W/4.
  const std::size_t work_h = g.val(stages[2]).dim(2);
  const std::size_t work_w = g.val(stages[2]).dim(3);

  const std::size_t first = level == MergeLevel::kLow ? 0 : 2;
  std::vector<typename GraphT<T>::Id> resized;
  for (std::size_t s = first; s < first + 2; ++s)
    resized.push_back(ops::resize_bilinear(g, stages[s], work_h, work_w));

  auto merged = ops::concat_channels(g, std::move(resized));
  merged = ops::conv2d(g, merged, g.leaf(merge.weight), g.leaf(merge.bias), 1, 1);
  return ops::relu(g, merged);
}

template std::array<GraphT<float>::Id, 4> encode<float>(GraphT<float>&, GraphT<float>::Id,
                                                        EncoderParamsT<float>&);
template std::array<GraphT<double>::Id, 4> encode<double>(GraphT<double>&, GraphT<double>::Id,
                                                          EncoderParamsT<double>&);
template GraphT<float>::Id integrate<float>(GraphT<float>&, const std::array<GraphT<float>::Id, 4>&,
                                            MergeLevel, Conv2dParamsT<float>&);
template GraphT<double>::Id integrate<double>(GraphT<double>&,
                                              const std::array<GraphT<double>::Id, 4>&, MergeLevel,
                                              Conv2dParamsT<double>&);

template struct Conv2dParamsT<float>;
template struct Conv2dParamsT<double>;
template struct EncoderParamsT<float>;
template struct EncoderParamsT<double>;

}  // namespace rtgr
