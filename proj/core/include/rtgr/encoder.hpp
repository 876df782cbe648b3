#pragma once

#include <array>
#include <functional>
#include <string>

#include "rtgr/graph.hpp"
#include "rtgr/ops.hpp"
#include "rtgr/rng.hpp"

namespace rtgr {

/// Weight initialization for fresh parameters. Both draw from a Gaussian;
/// kHeFanIn scales the deviation by sqrt(2/fan_in) so deep stacks keep unit
/// activation variance, kFixedStd uses the configured deviation everywhere.
enum class InitScheme { kHeFanIn, kFixedStd };

struct InitSpec {
  InitScheme scheme = InitScheme::kHeFanIn;
  double stddev = 0.01;       // used by kFixedStd
  double bias_stddev = 0.0;   // training default: zero biases; gradcheck
                              // perturbs them to keep pre-activations off
                              // the ReLU kink, where central differences
                              // are invalid

  bool operator==(const InitSpec&) const = default;
};

template <typename T>
struct Conv2dParamsT {
  TensorT<T> weight;  // [Cout,Cin,k,k]
  TensorT<T> bias;    // [Cout], zero-initialized

  static Conv2dParamsT init(std::size_t cout, std::size_t cin, std::size_t k, Rng& rng,
                            const InitSpec& spec) {
    const double stddev = spec.scheme == InitScheme::kHeFanIn
                              ? std::sqrt(2.0 / static_cast<double>(cin * k * k))
                              : spec.stddev;
    Conv2dParamsT p;
    p.weight = TensorT<T>::gaussian(Shape{cout, cin, k, k}, rng, 0.0, stddev);
    p.bias = spec.bias_stddev > 0.0
                 ? TensorT<T>::gaussian(Shape{cout}, rng, 0.0, spec.bias_stddev)
                 : TensorT<T>::zeros(Shape{cout});
    p.weight.set_requires_grad(true);
    p.bias.set_requires_grad(true);
    return p;
  }
};

/// Visitor over named parameter tensors, in a stable order shared by the
/// optimizer and the checkpoint writer.
template <typename T>
using ParamVisitor = std::function<void(const std::string&, TensorT<T>&)>;

/// Four plain conv stages (two 3x3 convs + ReLU each) with downsampling
/// factors (1,2,2,2); a small trainable stand-in for a pretrained backbone.
/// Downsampling is bilinear halving (equal to 2x2 mean pooling) ahead of
/// the stage's convs, so every conv keeps stride 1.
template <typename T>
struct EncoderParamsT {
  struct Stage {
    Conv2dParamsT<T> conv1, conv2;
  };
  std::array<Stage, 4> stages;

  static constexpr std::array<int, 4> kStrides{1, 2, 2, 2};

  static EncoderParamsT init(std::size_t in_channels, const std::array<std::size_t, 4>& channels,
                             Rng& rng, const InitSpec& spec) {
    EncoderParamsT e;
    std::size_t cin = in_channels;
    for (std::size_t s = 0; s < 4; ++s) {
      e.stages[s].conv1 = Conv2dParamsT<T>::init(channels[s], cin, 3, rng, spec);
      e.stages[s].conv2 = Conv2dParamsT<T>::init(channels[s], channels[s], 3, rng, spec);
      cin = channels[s];
    }
    return e;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& fn) {
    for (std::size_t s = 0; s < 4; ++s) {
      const std::string base = prefix + ".stage" + std::to_string(s);
      fn(base + ".conv1.weight", stages[s].conv1.weight);
      fn(base + ".conv1.bias", stages[s].conv1.bias);
      fn(base + ".conv2.weight", stages[s].conv2.weight);
      fn(base + ".conv2.bias", stages[s].conv2.bias);
    }
  }
};

/// The two integrated feature tensors at the shared working resolution
/// (H/4 x W/4, guide-width channels).
template <typename T>
struct FeatureBundleT {
  typename GraphT<T>::Id low = GraphT<T>::npos;   // detail-rich shallow merge
  typename GraphT<T>::Id high = GraphT<T>::npos;  // semantics-rich deep merge
};

/// Applies conv-ReLU-conv-ReLU with the stage stride on the first conv.
/// Input must be [N,3,H,W] with H and W divisible by 8; stage s output has
/// spatial extent H / 2^s.
template <typename T>
std::array<typename GraphT<T>::Id, 4> encode(GraphT<T>& g, typename GraphT<T>::Id image,
                                             EncoderParamsT<T>& params);

enum class MergeLevel { kLow, kHigh };

/// Resizes the selected stages (1-2 for low, 3-4 for high) to H/4 x W/4,
/// concatenates them and applies a 3x3 conv + ReLU down to the guide width.
template <typename T>
typename GraphT<T>::Id integrate(GraphT<T>& g, const std::array<typename GraphT<T>::Id, 4>& stages,
                                 MergeLevel level, Conv2dParamsT<T>& merge);

extern template struct Conv2dParamsT<float>;
extern template struct Conv2dParamsT<double>;
extern template struct EncoderParamsT<float>;
extern template struct EncoderParamsT<double>;

}  // namespace rtgr
