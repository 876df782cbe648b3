#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtgr/encoder.hpp"

namespace rtgr {

/// Which refinement module the recurrence stacks.
enum class Recurrence { kTgrm, kSgrm, kRrb };

/// Which integrated features feed the refinement steps. kLow is the default
/// strategy (low-level features as the per-step reference); kHighHigh and
/// kLowLow substitute the other stream; kHighLow2 alternates per step.
/// The RRB module always alternates high/low regardless of this setting.
enum class Reference { kLow, kHighHigh, kLowLow, kHighLow2 };

struct VariantSelector {
  Recurrence recurrence = Recurrence::kTgrm;
  Reference reference = Reference::kLow;
  int steps = 4;  // n >= 0; the forward pass emits n+1 two-stream maps

  bool operator==(const VariantSelector&) const = default;
};

std::string to_string(Recurrence r);
std::string to_string(Reference r);
Recurrence recurrence_from_string(const std::string& s);
Reference reference_from_string(const std::string& s);

struct ModelConfig {
  std::size_t image_size = 64;
  std::size_t guide_width = 16;
  std::array<std::size_t, 4> encoder_channels{16, 32, 64, 64};
  VariantSelector variant;
  bool share_step_params = false;  // reuse step-1 stream/head weights for i >= 1
  InitSpec init;

  bool operator==(const ModelConfig&) const = default;
};

/// Conv-ReLU-conv-ReLU feature stream (both convs 3x3, guide-width output).
template <typename T>
struct StreamBlockT {
  Conv2dParamsT<T> conv1, conv2;

  static StreamBlockT init(std::size_t cin, std::size_t width, Rng& rng, const InitSpec& spec) {
    StreamBlockT s;
    s.conv1 = Conv2dParamsT<T>::init(width, cin, 3, rng, spec);
    s.conv2 = Conv2dParamsT<T>::init(width, width, 3, rng, spec);
    return s;
  }
};

/// Per-step parameters. For SGRM and RRB the boundary members stay empty.
template <typename T>
struct StepParamsT {
  StreamBlockT<T> saliency_stream;
  StreamBlockT<T> boundary_stream;
  Conv2dParamsT<T> saliency_head;  // 1x1 down to one channel
  Conv2dParamsT<T> boundary_head;
};

template <typename T>
struct NetworkT {
  ModelConfig config;
  EncoderParamsT<T> encoder;
  Conv2dParamsT<T> merge_low, merge_high;
  std::vector<StepParamsT<T>> steps;

  static NetworkT init(const ModelConfig& config, std::uint64_t seed);

  /// Step parameters honoring share_step_params (steps >= 1 collapse to one
  /// entry when sharing is on).
  StepParamsT<T>& step_params(std::size_t i);

  /// Stable name -> tensor enumeration (optimizer + checkpoint order).
  void visit(const ParamVisitor<T>& fn);

  std::size_t param_count();
};

/// Saliency/boundary probability maps at full input resolution for one
/// recurrent step; boundary is npos for the saliency-only variants.
template <typename T>
struct TwoStreamMapIds {
  typename GraphT<T>::Id saliency = GraphT<T>::npos;
  typename GraphT<T>::Id boundary = GraphT<T>::npos;
};

/// Intermediate value ids exposed for structural tests.
template <typename T>
struct ForwardTraceT {
  using Id = typename GraphT<T>::Id;
  Id feat_low = GraphT<T>::npos;
  Id feat_high = GraphT<T>::npos;
  Id init_source = GraphT<T>::npos;
  struct Step {
    Id reference = GraphT<T>::npos;  // npos at i = 0
    Id guide_sal = GraphT<T>::npos;  // stream output feeding the guide block
    Id guide_bnd = GraphT<T>::npos;
    Id feat_sal = GraphT<T>::npos;  // guide block state
    Id feat_bnd = GraphT<T>::npos;
    Id guide_cat = GraphT<T>::npos;
    Id state = GraphT<T>::npos;  // RRB: one-channel pre-sigmoid carrier
  };
  std::vector<Step> steps;
};

/// Guide block state at one step.
template <typename T>
struct GuideStateIds {
  typename GraphT<T>::Id sal = GraphT<T>::npos;
  typename GraphT<T>::Id bnd = GraphT<T>::npos;
  typename GraphT<T>::Id cat = GraphT<T>::npos;
};

/// Fuses the stream outputs with the previous state: with no previous state
/// the stream outputs pass through unchanged; otherwise both features gain
/// the shared cross term prev.sal + prev.bnd. cat holds the channel concat
/// of the two results.
template <typename T>
GuideStateIds<T> guide_block(GraphT<T>& g, typename GraphT<T>::Id guide_sal,
                             typename GraphT<T>::Id guide_bnd, const GuideStateIds<T>* prev);

/// Applies a feature stream to the prepared input.
template <typename T>
typename GraphT<T>::Id stream_forward(GraphT<T>& g, StreamBlockT<T>& block,
                                      typename GraphT<T>::Id input);

/// Assembles the stream input for step i: the initial step consumes the
/// initial features directly; later steps concatenate the previous guide
/// features with the per-step reference features.
template <typename T>
typename GraphT<T>::Id stream_input(GraphT<T>& g, std::size_t step,
                                    std::optional<typename GraphT<T>::Id> prev_guide,
                                    typename GraphT<T>::Id init_features,
                                    typename GraphT<T>::Id reference);

/// Full forward pass: encoder, feature integration, and n+1 refinement
/// steps of the selected variant. Emits one two-stream map per step.
template <typename T>
std::vector<TwoStreamMapIds<T>> forward(GraphT<T>& g, NetworkT<T>& net,
                                        typename GraphT<T>::Id image,
                                        ForwardTraceT<T>* trace = nullptr);

extern template struct NetworkT<float>;
extern template struct NetworkT<double>;

using Network = NetworkT<double>;

}  // namespace rtgr
