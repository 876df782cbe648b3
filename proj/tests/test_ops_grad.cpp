// Finite-difference oracles for every differentiable op. The checks run in
// float64 with h = 1e-5; inputs near kinks (relu, the bce clamp) are kept
// away from the non-smooth points so central differences are valid.

#include "doctest.h"
#include "rtgr/gradcheck.hpp"
#include "rtgr/ops.hpp"
#include "test_util.hpp"

using namespace rtgr;
namespace tu = rtgr::testutil;

namespace {

/// Reduces a tensor to a scalar with well-scaled, element-dependent
/// gradients: d/dx_i sum(sigmoid(x)) = s_i (1 - s_i).
Graph::Id scalar_probe(Graph& g, Graph::Id x) { return ops::sum(g, ops::sigmoid(g, x)); }

}  // namespace

TEST_CASE("conv2d gradients match central differences on three shapes") {
  struct Case {
    Shape x, w;
    int stride, padding;
  };
  const Case cases[] = {
      {{1, 1, 5, 5}, {1, 1, 3, 3}, 1, 1},
      {{2, 3, 7, 7}, {4, 3, 3, 3}, 2, 1},
      {{1, 2, 7, 5}, {3, 2, 1, 1}, 1, 0},
  };
  int idx = 0;
  for (const auto& c : cases) {
    Rng rng(10 + idx);
    Tensor x = tu::uniform_tensor(c.x, rng);
    Tensor w = tu::uniform_tensor(c.w, rng, -0.5, 0.5);
    Tensor b = tu::uniform_tensor(Shape{c.w[0]}, rng, -0.2, 0.2);

    auto build = [&](Graph& g) {
      auto y = ops::conv2d(g, g.leaf(x), g.leaf(w), g.leaf(b), c.stride, c.padding);
      return scalar_probe(g, y);
    };
    const auto report = gradcheck(build, {{"x", &x}, {"w", &w}, {"b", &b}}, 1e-5, 1e-5);
    INFO(report.summary());
    CHECK(report.pass);
    ++idx;
  }
}

TEST_CASE("conv2d random 2x3x5x5 against 4x3x3x3 meets the 1e-6 bound") {
  Rng rng(20);
  Tensor x = tu::uniform_tensor(Shape{2, 3, 5, 5}, rng);
  Tensor w = tu::uniform_tensor(Shape{4, 3, 3, 3}, rng, -0.5, 0.5);
  Tensor b = tu::uniform_tensor(Shape{4}, rng, -0.2, 0.2);

  auto build = [&](Graph& g) {
    auto y = ops::conv2d(g, g.leaf(x), g.leaf(w), g.leaf(b), 1, 1);
    return scalar_probe(g, y);
  };
  const auto report = gradcheck(build, {{"x", &x}, {"w", &w}, {"b", &b}}, 1e-5, 1e-6);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("add backward passes gradients through unchanged") {
  for (const Shape& shape : {Shape{7}, Shape{2, 5}, Shape{1, 2, 3, 4}}) {
    Rng rng(30 + shape.size());
    Tensor a = tu::uniform_tensor(shape, rng);
    Tensor b = tu::uniform_tensor(shape, rng);
    auto build = [&](Graph& g) { return scalar_probe(g, ops::add(g, g.leaf(a), g.leaf(b))); };
    const auto report = gradcheck(build, {{"a", &a}, {"b", &b}}, 1e-5, 1e-5);
    INFO(report.summary());
    CHECK(report.pass);
  }
}

TEST_CASE("concat backward splits the gradient at the channel offsets") {
  Rng rng(40);
  Tensor a = tu::uniform_tensor(Shape{2, 2, 3, 3}, rng);
  Tensor b = tu::uniform_tensor(Shape{2, 3, 3, 3}, rng);
  Tensor c = tu::uniform_tensor(Shape{2, 1, 3, 3}, rng);
  auto build = [&](Graph& g) {
    auto cat = ops::concat_channels(g, {g.leaf(a), g.leaf(b), g.leaf(c)});
    return scalar_probe(g, cat);
  };
  const auto report = gradcheck(build, {{"a", &a}, {"b", &b}, {"c", &c}}, 1e-5, 1e-5);
  INFO(report.summary());
  CHECK(report.pass);

  // The exact split: grad through slice k recovers ones exactly there.
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  c.set_requires_grad(true);
  a.zero_grad();
  b.zero_grad();
  c.zero_grad();
  Graph g;
  auto cat = ops::concat_channels(g, {g.leaf(a), g.leaf(b), g.leaf(c)});
  auto mid = ops::slice_channels(g, cat, 2, 5);  // exactly b's block
  g.backward(ops::sum(g, mid));
  for (const double v : a.grad()) CHECK(v == 0.0);
  for (const double v : b.grad()) CHECK(v == 1.0);
  for (const double v : c.grad()) CHECK(v == 0.0);
}

TEST_CASE("slice_channels gradients match central differences") {
  Rng rng(45);
  Tensor x = tu::uniform_tensor(Shape{2, 6, 3, 3}, rng);
  auto build = [&](Graph& g) {
    return scalar_probe(g, ops::slice_channels(g, g.leaf(x), 1, 4));
  };
  const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-5);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("relu gradients away from the kink") {
  for (const Shape& shape : {Shape{9}, Shape{3, 4}, Shape{2, 2, 4, 4}}) {
    Rng rng(50 + shape.size());
    Tensor x = tu::nonzero_tensor(shape, rng, 0.05);
    auto build = [&](Graph& g) { return scalar_probe(g, ops::relu(g, g.leaf(x))); };
    const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-5);
    INFO(report.summary());
    CHECK(report.pass);
  }
}

TEST_CASE("sigmoid gradients match central differences") {
  for (const Shape& shape : {Shape{9}, Shape{3, 4}, Shape{1, 2, 4, 4}}) {
    Rng rng(60 + shape.size());
    Tensor x = tu::uniform_tensor(shape, rng, -3.0, 3.0);
    Tensor target(shape);
    Rng trng(61);
    for (auto& v : target.data()) v = trng.uniform();
    auto build = [&](Graph& g) {
      return ops::bce_loss(g, ops::sigmoid(g, g.leaf(x)), g.constant(target));
    };
    const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-5);
    INFO(report.summary());
    CHECK(report.pass);
  }
}

TEST_CASE("resize_bilinear gradients match central differences both ways") {
  struct Case {
    Shape in;
    std::size_t oh, ow;
  };
  const Case cases[] = {
      {{1, 1, 4, 4}, 8, 8},    // upsample
      {{1, 2, 8, 8}, 3, 5},    // downsample, non-integral ratio
      {{2, 1, 5, 7}, 5, 7},    // identity
  };
  int idx = 0;
  for (const auto& c : cases) {
    Rng rng(70 + idx);
    Tensor x = tu::uniform_tensor(c.in, rng);
    auto build = [&](Graph& g) {
      return scalar_probe(g, ops::resize_bilinear(g, g.leaf(x), c.oh, c.ow));
    };
    const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-6);
    INFO(report.summary());
    CHECK(report.pass);
    ++idx;
  }
}

TEST_CASE("bce_loss gradients for prediction and target") {
  for (int round = 0; round < 3; ++round) {
    Rng rng(90 + round);
    // Keep predictions clear of the clamp boundaries.
    Tensor pred(Shape{2, 1, 4, 4});
    for (auto& v : pred.data()) v = rng.uniform(0.05, 0.95);
    Tensor target(pred.shape());
    for (auto& v : target.data()) v = rng.uniform();
    auto build = [&](Graph& g) { return ops::bce_loss(g, g.leaf(pred), g.leaf(target)); };
    const auto report = gradcheck(build, {{"pred", &pred}, {"target", &target}}, 1e-5, 1e-5);
    INFO(report.summary());
    CHECK(report.pass);
  }
}

TEST_CASE("weighted bce gradcheck with a positive-class weight") {
  Rng rng(95);
  Tensor pred(Shape{10});
  for (auto& v : pred.data()) v = rng.uniform(0.05, 0.95);
  Tensor target = tu::binary_tensor(Shape{10}, rng);
  auto build = [&](Graph& g) {
    return ops::bce_loss(g, g.leaf(pred), g.constant(target), 3.0);
  };
  const auto report = gradcheck(build, {{"pred", &pred}}, 1e-5, 1e-5);
  INFO(report.summary());
  CHECK(report.pass);
}

TEST_CASE("scale and sum gradients") {
  Rng rng(96);
  Tensor x = tu::uniform_tensor(Shape{3, 5}, rng);
  auto build = [&](Graph& g) { return ops::sum(g, ops::scale(g, g.leaf(x), -2.5)); };
  const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-8);
  INFO(report.summary());
  CHECK(report.pass);  // linear: agreement to rounding noise
}

TEST_CASE("gradcheck on a linear map is exact to rounding") {
  Rng rng(97);
  Tensor x = tu::uniform_tensor(Shape{6}, rng);
  auto build = [&](Graph& g) { return ops::sum(g, ops::scale(g, g.leaf(x), 3.0)); };
  const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-9);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-9);
}

TEST_CASE("gradcheck flags a corrupted backward") {
  // A deliberately wrong node: forward is scale-by-2, backward claims 3.
  Rng rng(98);
  Tensor x = tu::uniform_tensor(Shape{4}, rng);
  auto build = [&](Graph& g) {
    auto xid = g.leaf(x);
    Tensor out(g.val(xid).shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 2.0 * g.val(xid).data()[i];
    auto bad = g.record("bad_scale", {xid}, std::move(out), [xid](Graph& gr, Graph::Id out_id) {
      const auto& go = gr.val(out_id).grad();
      auto& gi = gr.grad(xid);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += 3.0 * go[i];
    });
    return ops::sum(g, bad);
  };
  const auto report = gradcheck(build, {{"x", &x}}, 1e-5, 1e-4);
  CHECK(!report.pass);
  CHECK(report.max_rel_err > 0.3);  // 3 vs 2
}

TEST_CASE("conv+relu+bce stack passes at 1e-5") {
  Rng rng(99);
  Tensor x = tu::uniform_tensor(Shape{1, 2, 6, 6}, rng);
  Tensor w = tu::uniform_tensor(Shape{2, 2, 3, 3}, rng, -0.5, 0.5);
  Tensor b = tu::uniform_tensor(Shape{2}, rng, 0.1, 0.3);
  Tensor target(Shape{1, 2, 6, 6});
  for (auto& v : target.data()) v = rng.uniform();

  auto build = [&](Graph& g) {
    auto y = ops::conv2d(g, g.leaf(x), g.leaf(w), g.leaf(b), 1, 1);
    auto r = ops::relu(g, y);
    return ops::bce_loss(g, ops::sigmoid(g, r), g.constant(target));
  };
  const auto report = gradcheck(build, {{"x", &x}, {"w", &w}, {"b", &b}}, 1e-5, 1e-5);
  INFO(report.summary());
  CHECK(report.pass);
}
