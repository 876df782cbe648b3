#include "doctest.h"
#include "rtgr/encoder.hpp"
#include "rtgr/gradcheck.hpp"
#include "test_util.hpp"

using namespace rtgr;
namespace tu = rtgr::testutil;

namespace {

constexpr std::array<std::size_t, 4> kTinyChannels{4, 4, 8, 8};

}  // namespace

TEST_CASE("stage spatial sizes follow the stride schedule") {
  Rng rng(1);
  auto enc = EncoderParamsT<double>::init(3, {16, 32, 64, 64}, rng, InitSpec{});
  Graph g;
  auto image = g.constant(tu::uniform_tensor(Shape{1, 3, 64, 64}, rng, 0.0, 1.0));
  const auto stages = encode(g, image, enc);
  CHECK(g.val(stages[0]).shape() == Shape{1, 16, 64, 64});
  CHECK(g.val(stages[1]).shape() == Shape{1, 32, 32, 32});
  CHECK(g.val(stages[2]).shape() == Shape{1, 64, 16, 16});
  CHECK(g.val(stages[3]).shape() == Shape{1, 64, 8, 8});
}

TEST_CASE("indivisible input sizes are rejected") {
  Rng rng(2);
  auto enc = EncoderParamsT<double>::init(3, kTinyChannels, rng, InitSpec{});
  Graph g;
  auto image = g.constant(Tensor(Shape{1, 3, 20, 20}));
  CHECK_THROWS_WITH_AS(encode(g, image, enc), doctest::Contains("divisible by 8"), Error);
}

TEST_CASE("zero image with zero biases yields all-zero features") {
  Rng rng(3);
  auto enc = EncoderParamsT<double>::init(3, kTinyChannels, rng, InitSpec{});  // biases start at 0
  Graph g;
  auto image = g.constant(Tensor(Shape{1, 3, 16, 16}));
  const auto stages = encode(g, image, enc);
  for (const auto id : stages) {
    for (const double v : g.val(id).data()) CHECK(v == 0.0);
  }
}

TEST_CASE("low and high integrated features share shape and width") {
  Rng rng(4);
  const std::size_t guide = 8;
  for (const std::size_t size : {std::size_t{16}, std::size_t{32}, std::size_t{64}}) {
    auto enc = EncoderParamsT<double>::init(3, kTinyChannels, rng, InitSpec{});
    auto merge_low = Conv2dParamsT<double>::init(guide, kTinyChannels[0] + kTinyChannels[1], 3,
                                                 rng, InitSpec{});
    auto merge_high = Conv2dParamsT<double>::init(guide, kTinyChannels[2] + kTinyChannels[3], 3,
                                                  rng, InitSpec{});
    Graph g;
    auto image = g.constant(tu::uniform_tensor(Shape{2, 3, size, size}, rng, 0.0, 1.0));
    const auto stages = encode(g, image, enc);
    const auto low = integrate(g, stages, MergeLevel::kLow, merge_low);
    const auto high = integrate(g, stages, MergeLevel::kHigh, merge_high);
    CHECK(g.val(low).shape() == Shape{2, guide, size / 4, size / 4});
    CHECK(g.val(low).shape() == g.val(high).shape());
  }
}

TEST_CASE("encode is deterministic for fixed inputs and parameters") {
  Rng rng(5);
  auto enc = EncoderParamsT<double>::init(3, kTinyChannels, rng, InitSpec{});
  const Tensor image = tu::uniform_tensor(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
  auto run = [&]() {
    Graph g;
    const auto stages = encode(g, g.constant(image), enc);
    return g.val(stages[3]).data();
  };
  CHECK(run() == run());
}

TEST_CASE("gradients reach every encoder parameter") {
  Rng rng(6);
  auto enc = EncoderParamsT<double>::init(3, kTinyChannels, rng, InitSpec{});
  const std::size_t guide = 4;
  auto merge_low =
      Conv2dParamsT<double>::init(guide, kTinyChannels[0] + kTinyChannels[1], 3, rng, InitSpec{});
  auto merge_high =
      Conv2dParamsT<double>::init(guide, kTinyChannels[2] + kTinyChannels[3], 3, rng, InitSpec{});

  std::vector<std::pair<std::string, Tensor*>> params;
  enc.visit("encoder", [&](const std::string& n, Tensor& t) { params.emplace_back(n, &t); });
  params.emplace_back("merge_low.weight", &merge_low.weight);
  params.emplace_back("merge_low.bias", &merge_low.bias);
  params.emplace_back("merge_high.weight", &merge_high.weight);
  params.emplace_back("merge_high.bias", &merge_high.bias);
  for (auto& [name, t] : params) t->zero_grad();

  Graph g;
  auto image = g.constant(tu::uniform_tensor(Shape{2, 3, 16, 16}, rng, 0.0, 1.0));
  const auto stages = encode(g, image, enc);
  const auto low = integrate(g, stages, MergeLevel::kLow, merge_low);
  const auto high = integrate(g, stages, MergeLevel::kHigh, merge_high);
  auto joined = ops::concat_channels(g, {low, high});
  g.backward(ops::sum(g, ops::sigmoid(g, joined)));

  for (auto& [name, t] : params) {
    bool any_nonzero = false;
    for (const double v : t->grad()) any_nonzero = any_nonzero || v != 0.0;
    INFO("parameter ", name);
    CHECK(any_nonzero);
  }
}

TEST_CASE("gradcheck through encode + integrate passes at 1e-4") {
  Rng rng(7);
  auto enc = EncoderParamsT<double>::init(3, {2, 2, 4, 4}, rng, InitSpec{});
  auto merge_low = Conv2dParamsT<double>::init(4, 4, 3, rng, InitSpec{});
  const Tensor image = tu::uniform_tensor(Shape{1, 3, 8, 8}, rng, 0.0, 1.0);

  std::vector<GradcheckParam> params;
  enc.visit("encoder", [&](const std::string& n, Tensor& t) { params.push_back({n, &t}); });
  params.push_back({"merge_low.weight", &merge_low.weight});
  params.push_back({"merge_low.bias", &merge_low.bias});

  auto build = [&](Graph& g) {
    const auto stages = encode(g, g.constant(image), enc);
    const auto low = integrate(g, stages, MergeLevel::kLow, merge_low);
    return ops::sum(g, ops::sigmoid(g, low));
  };
  const auto report = gradcheck(build, params, 1e-5, 1e-4);
  INFO(report.summary());
  CHECK(report.pass);
}
