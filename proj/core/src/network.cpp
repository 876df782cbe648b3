#include "rtgr/network.hpp"

namespace rtgr {

std::string to_string(Recurrence r) {
  switch (r) {
    case Recurrence::kTgrm: return "tgrm";
    case Recurrence::kSgrm: return "sgrm";
    case Recurrence::kRrb: return "rrb";
  }
  fail("unknown recurrence");
}

std::string to_string(Reference r) {
  switch (r) {
    case Reference::kLow: return "low";
    case Reference::kHighHigh: return "hh";
    case Reference::kLowLow: return "ll";
    case Reference::kHighLow2: return "hl2";
  }
  fail("unknown reference");
}

Recurrence recurrence_from_string(const std::string& s) {
  if (s == "tgrm") return Recurrence::kTgrm;
  if (s == "sgrm") return Recurrence::kSgrm;
  if (s == "rrb") return Recurrence::kRrb;
  fail("recurrence must be tgrm|sgrm|rrb, got '" + s + "'");
}

Reference reference_from_string(const std::string& s) {
  if (s == "low") return Reference::kLow;
  if (s == "hh") return Reference::kHighHigh;
  if (s == "ll") return Reference::kLowLow;
  if (s == "hl2") return Reference::kHighLow2;
  fail("reference must be low|hh|ll|hl2, got '" + s + "'");
}

namespace {

/// Stream input channels at step i (see stream_input for the layout).
std::size_t stream_in_channels(const ModelConfig& cfg, std::size_t step) {
  const std::size_t g = cfg.guide_width;
  if (step == 0) return g;
  switch (cfg.variant.recurrence) {
    case Recurrence::kTgrm: return 3 * g;  // guide cat (2g) + reference (g)
    case Recurrence::kSgrm: return 2 * g;  // guide (g) + reference (g)
    case Recurrence::kRrb: return g + 1;   // reference (g) + one-channel map
  }
  fail("unknown recurrence");
}

}  // namespace

template <typename T>
NetworkT<T> NetworkT<T>::init(const ModelConfig& config, std::uint64_t seed) {
  if (config.variant.steps < 0) fail("network: steps must be >= 0");
  if (config.guide_width == 0) fail("network: guide width must be positive");

  NetworkT net;
  net.config = config;
  Rng rng(Rng::derive(seed, /*tag=*/0x6e6574u));  // independent init stream

  net.encoder = EncoderParamsT<T>::init(3, config.encoder_channels, rng, config.init);
  const std::size_t g = config.guide_width;
  const std::size_t low_in = config.encoder_channels[0] + config.encoder_channels[1];
  const std::size_t high_in = config.encoder_channels[2] + config.encoder_channels[3];
  net.merge_low = Conv2dParamsT<T>::init(g, low_in, 3, rng, config.init);
  net.merge_high = Conv2dParamsT<T>::init(g, high_in, 3, rng, config.init);

  const std::size_t stored_steps =
      config.share_step_params ? std::min<std::size_t>(config.variant.steps + 1, 2)
                               : static_cast<std::size_t>(config.variant.steps) + 1;
  const bool two_stream = config.variant.recurrence == Recurrence::kTgrm;
  for (std::size_t i = 0; i < stored_steps; ++i) {
    StepParamsT<T> step;
    const std::size_t cin = stream_in_channels(config, i);
    step.saliency_stream = StreamBlockT<T>::init(cin, g, rng, config.init);
    step.saliency_head = Conv2dParamsT<T>::init(1, g, 1, rng, config.init);
    if (two_stream) {
      step.boundary_stream = StreamBlockT<T>::init(cin, g, rng, config.init);
      step.boundary_head = Conv2dParamsT<T>::init(1, g, 1, rng, config.init);
    }
    net.steps.push_back(std::move(step));
  }
  return net;
}

template <typename T>
StepParamsT<T>& NetworkT<T>::step_params(std::size_t i) {
  const std::size_t idx = config.share_step_params ? std::min<std::size_t>(i, 1) : i;
  if (idx >= steps.size()) fail("network: no parameters for step " + std::to_string(i));
  return steps[idx];
}

template <typename T>
void NetworkT<T>::visit(const ParamVisitor<T>& fn) {
  encoder.visit("encoder", fn);
  fn("merge_low.weight", merge_low.weight);
  fn("merge_low.bias", merge_low.bias);
  fn("merge_high.weight", merge_high.weight);
  fn("merge_high.bias", merge_high.bias);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string base = "step" + std::to_string(i);
    auto stream = [&](const std::string& name, StreamBlockT<T>& block) {
      fn(base + "." + name + ".conv1.weight", block.conv1.weight);
      fn(base + "." + name + ".conv1.bias", block.conv1.bias);
      fn(base + "." + name + ".conv2.weight", block.conv2.weight);
      fn(base + "." + name + ".conv2.bias", block.conv2.bias);
    };
    stream("saliency_stream", steps[i].saliency_stream);
    fn(base + ".saliency_head.weight", steps[i].saliency_head.weight);
    fn(base + ".saliency_head.bias", steps[i].saliency_head.bias);
    if (steps[i].boundary_stream.conv1.weight.numel() > 0) {
      stream("boundary_stream", steps[i].boundary_stream);
      fn(base + ".boundary_head.weight", steps[i].boundary_head.weight);
      fn(base + ".boundary_head.bias", steps[i].boundary_head.bias);
    }
  }
}

template <typename T>
std::size_t NetworkT<T>::param_count() {
  std::size_t count = 0;
  visit([&](const std::string&, TensorT<T>& t) { count += t.numel(); });
  return count;
}

template <typename T>
GuideStateIds<T> guide_block(GraphT<T>& g, typename GraphT<T>::Id guide_sal,
                             typename GraphT<T>::Id guide_bnd, const GuideStateIds<T>* prev) {
  GuideStateIds<T> state;
  if (prev == nullptr) {
    state.sal = guide_sal;
    state.bnd = guide_bnd;
  } else {
    // The cross term is computed once so both updates share it bit-exactly.
    const auto cross = ops::add(g, prev->sal, prev->bnd);
    state.sal = ops::add(g, cross, guide_sal);
    state.bnd = ops::add(g, cross, guide_bnd);
  }
  state.cat = ops::concat_channels(g, {state.sal, state.bnd});
  return state;
}

template <typename T>
typename GraphT<T>::Id stream_forward(GraphT<T>& g, StreamBlockT<T>& block,
                                      typename GraphT<T>::Id input) {
  auto x = ops::conv2d(g, input, g.leaf(block.conv1.weight), g.leaf(block.conv1.bias), 1, 1);
  x = ops::relu(g, x);
  x = ops::conv2d(g, x, g.leaf(block.conv2.weight), g.leaf(block.conv2.bias), 1, 1);
  return ops::relu(g, x);
}

template <typename T>
typename GraphT<T>::Id stream_input(GraphT<T>& g, std::size_t step,
                                    std::optional<typename GraphT<T>::Id> prev_guide,
                                    typename GraphT<T>::Id init_features,
                                    typename GraphT<T>::Id reference) {
  if (step == 0) {
    if (prev_guide.has_value()) fail("stream_input: step 0 takes no previous guide features");
    return init_features;
  }
  if (!prev_guide.has_value())
    fail("stream_input: step " + std::to_string(step) + " needs the previous guide features");
  return ops::concat_channels(g, {*prev_guide, reference});
}

namespace {

template <typename T>
typename GraphT<T>::Id emit_map(GraphT<T>& g, typename GraphT<T>::Id features,
                                Conv2dParamsT<T>& head, std::size_t full_h, std::size_t full_w) {
  auto logits = ops::conv2d(g, features, g.leaf(head.weight), g.leaf(head.bias), 1, 0);
  auto prob = ops::sigmoid(g, logits);
  return ops::resize_bilinear(g, prob, full_h, full_w);
}

/// Reference features for step i >= 1 under the selector. RRB always
/// alternates low/high (its original design), starting from low at step 1.
template <typename T>
typename GraphT<T>::Id reference_for_step(const VariantSelector& variant, std::size_t i,
                                          const FeatureBundleT<T>& bundle) {
  if (variant.recurrence == Recurrence::kRrb) return i % 2 == 1 ? bundle.low : bundle.high;
  switch (variant.reference) {
    case Reference::kLow:
    case Reference::kLowLow: return bundle.low;
    case Reference::kHighHigh: return bundle.high;
    case Reference::kHighLow2: return i % 2 == 1 ? bundle.low : bundle.high;
  }
  fail("unknown reference strategy");
}

}  // namespace

template <typename T>
std::vector<TwoStreamMapIds<T>> forward(GraphT<T>& g, NetworkT<T>& net,
                                        typename GraphT<T>::Id image,
                                        ForwardTraceT<T>* trace) {
  using Id = typename GraphT<T>::Id;
  const std::size_t full_h = g.val(image).dim(2);
  const std::size_t full_w = g.val(image).dim(3);

  const auto stages = encode(g, image, net.encoder);
  FeatureBundleT<T> bundle;
  bundle.low = integrate(g, stages, MergeLevel::kLow, net.merge_low);
  bundle.high = integrate(g, stages, MergeLevel::kHigh, net.merge_high);

  const VariantSelector& variant = net.config.variant;
  const Id init_source =
      variant.recurrence != Recurrence::kRrb && variant.reference == Reference::kLowLow
          ? bundle.low
          : bundle.high;

  if (trace) {
    trace->feat_low = bundle.low;
    trace->feat_high = bundle.high;
    trace->init_source = init_source;
    trace->steps.clear();
  }

  std::vector<TwoStreamMapIds<T>> maps;
  const std::size_t n = static_cast<std::size_t>(variant.steps);

  if (variant.recurrence == Recurrence::kRrb) {
    Id state = GraphT<T>::npos;
    for (std::size_t i = 0; i <= n; ++i) {
      StepParamsT<T>& params = net.step_params(i);
      Id ref = GraphT<T>::npos;
      Id input;
      if (i == 0) {
        input = stream_input<T>(g, 0, std::nullopt, init_source, GraphT<T>::npos);
      } else {
        ref = reference_for_step(variant, i, bundle);
        input = ops::concat_channels(g, {ref, state});
      }
      auto features = stream_forward(g, params.saliency_stream, input);
      auto residual = ops::conv2d(g, features, g.leaf(params.saliency_head.weight),
                                  g.leaf(params.saliency_head.bias), 1, 0);
      // The inter-step carrier is this one-channel map.
      state = i == 0 ? residual : ops::add(g, state, residual);

      TwoStreamMapIds<T> map;
      map.saliency = ops::resize_bilinear(g, ops::sigmoid(g, state), full_h, full_w);
      maps.push_back(map);
      if (trace) {
        typename ForwardTraceT<T>::Step ts;
        ts.reference = ref;
        ts.state = state;
        trace->steps.push_back(ts);
      }
    }
    return maps;
  }

  const bool two_stream = variant.recurrence == Recurrence::kTgrm;
  GuideStateIds<T> prev;
  for (std::size_t i = 0; i <= n; ++i) {
    StepParamsT<T>& params = net.step_params(i);
    Id ref = GraphT<T>::npos;
    Id input;
    if (i == 0) {
      input = stream_input<T>(g, 0, std::nullopt, init_source, GraphT<T>::npos);
    } else {
      ref = reference_for_step(variant, i, bundle);
      input = stream_input<T>(g, i, prev.cat, init_source, ref);
    }

    const Id guide_sal = stream_forward(g, params.saliency_stream, input);
    GuideStateIds<T> state;
    if (two_stream) {
      const Id guide_bnd = stream_forward(g, params.boundary_stream, input);
      state = guide_block(g, guide_sal, guide_bnd, i == 0 ? nullptr : &prev);
      if (trace) {
        typename ForwardTraceT<T>::Step ts;
        ts.reference = ref;
        ts.guide_sal = guide_sal;
        ts.guide_bnd = guide_bnd;
        ts.feat_sal = state.sal;
        ts.feat_bnd = state.bnd;
        ts.guide_cat = state.cat;
        trace->steps.push_back(ts);
      }
    } else {
      // SGRM: single stream, the guide features are the saliency features.
      state.sal = i == 0 ? guide_sal : ops::add(g, prev.sal, guide_sal);
      state.cat = state.sal;
      if (trace) {
        typename ForwardTraceT<T>::Step ts;
        ts.reference = ref;
        ts.guide_sal = guide_sal;
        ts.feat_sal = state.sal;
        ts.guide_cat = state.cat;
        trace->steps.push_back(ts);
      }
    }

    TwoStreamMapIds<T> map;
    map.saliency = emit_map(g, state.sal, params.saliency_head, full_h, full_w);
    if (two_stream) map.boundary = emit_map(g, state.bnd, params.boundary_head, full_h, full_w);
    maps.push_back(map);
    prev = state;
  }
  return maps;
}

#define RTGR_INSTANTIATE_NETWORK(T)                                                            \
  template struct NetworkT<T>;                                                                 \
  template GuideStateIds<T> guide_block<T>(GraphT<T>&, GraphT<T>::Id, GraphT<T>::Id,           \
                                           const GuideStateIds<T>*);                           \
  template GraphT<T>::Id stream_forward<T>(GraphT<T>&, StreamBlockT<T>&, GraphT<T>::Id);       \
  template GraphT<T>::Id stream_input<T>(GraphT<T>&, std::size_t, std::optional<GraphT<T>::Id>, \
                                         GraphT<T>::Id, GraphT<T>::Id);                        \
  template std::vector<TwoStreamMapIds<T>> forward<T>(GraphT<T>&, NetworkT<T>&, GraphT<T>::Id, \
                                                      ForwardTraceT<T>*);

RTGR_INSTANTIATE_NETWORK(float)
RTGR_INSTANTIATE_NETWORK(double)

}  // namespace rtgr
