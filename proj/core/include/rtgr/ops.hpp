#pragma once

#include <cstdint>
#include <vector>

#include "rtgr/graph.hpp"

namespace rtgr::ops {

/// 2-D cross-correlation (deep-learning convention, no kernel flip).
/// x: [N,Cin,H,W], weight: [Cout,Cin,kh,kw] with kh,kw odd, bias: [Cout].
/// The output extent (H + 2*padding - kh) / stride + 1 must divide exactly.
template <typename T>
typename GraphT<T>::Id conv2d(GraphT<T>& g, typename GraphT<T>::Id x, typename GraphT<T>::Id weight,
                              typename GraphT<T>::Id bias, int stride = 1, int padding = 0);

/// Element-wise sum of two identically shaped tensors.
template <typename T>
typename GraphT<T>::Id add(GraphT<T>& g, typename GraphT<T>::Id a, typename GraphT<T>::Id b);

/// Concatenation along the channel axis of rank-4 tensors.
template <typename T>
typename GraphT<T>::Id concat_channels(GraphT<T>& g, std::vector<typename GraphT<T>::Id> xs);

/// Channel slice [c0, c1) of a rank-4 tensor.
template <typename T>
typename GraphT<T>::Id slice_channels(GraphT<T>& g, typename GraphT<T>::Id x, std::size_t c0,
                                      std::size_t c1);

template <typename T>
typename GraphT<T>::Id relu(GraphT<T>& g, typename GraphT<T>::Id x);

/// Numerically stable logistic; output is strictly inside (0,1).
template <typename T>
typename GraphT<T>::Id sigmoid(GraphT<T>& g, typename GraphT<T>::Id x);

/// Bilinear resize of a rank-4 tensor to (out_h, out_w), align-corners=false:
/// source coordinate = (dst + 0.5) * in/out - 0.5, edges clamped. Linear in
/// x, so the backward pass is its transpose.
template <typename T>
typename GraphT<T>::Id resize_bilinear(GraphT<T>& g, typename GraphT<T>::Id x, std::size_t out_h,
                                       std::size_t out_w);

/// Mean binary cross-entropy. pred is clamped to [kBceEps, 1-kBceEps] before
/// the logs; pos_weight scales the positive-class term (1 = plain BCE).
template <typename T>
typename GraphT<T>::Id bce_loss(GraphT<T>& g, typename GraphT<T>::Id pred,
                                typename GraphT<T>::Id target, T pos_weight = T{1});

inline constexpr double kBceEps = 1e-7;

/// x * factor.
template <typename T>
typename GraphT<T>::Id scale(GraphT<T>& g, typename GraphT<T>::Id x, T factor);

/// Sum of all elements, as a [1] tensor.
template <typename T>
typename GraphT<T>::Id sum(GraphT<T>& g, typename GraphT<T>::Id x);

/// Worker threads used by the heavy kernels (conv2d, resize). Values < 1
/// select the hardware default. Results are bit-identical for any setting.
void set_num_threads(int n);
int num_threads();

}  // namespace rtgr::ops
