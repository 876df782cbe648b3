#include <cmath>

#include "doctest.h"
#include "rtgr/graph.hpp"
#include "rtgr/ops.hpp"
#include "test_util.hpp"

using namespace rtgr;
namespace tu = rtgr::testutil;

TEST_CASE("tensor shape and data agree") {
  Tensor t(Shape{2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.rank() == 2);
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<double>(5, 0.0)), Error);
  CHECK_THROWS_AS(Tensor(Shape{2, 0, 3}), Error);
}

TEST_CASE("gradient buffer matches the data length") {
  Tensor t(Shape{4});
  t.set_requires_grad(true);
  CHECK(!t.has_grad());
  t.grad()[1] = 2.0;
  CHECK(t.grad().size() == t.numel());
  t.zero_grad();
  CHECK(t.grad()[1] == 0.0);
}

TEST_CASE("add matches the identity examples") {
  Graph g;
  auto x = g.constant(Tensor(Shape{2}, {1.0, 2.0}));
  auto zeros = g.constant(Tensor(Shape{2}));
  auto y = g.constant(Tensor(Shape{2}, {3.0, 4.0}));

  CHECK(g.val(ops::add(g, x, zeros)).data() == std::vector<double>{1.0, 2.0});
  CHECK(g.val(ops::add(g, x, y)).data() == std::vector<double>{4.0, 6.0});

  auto bad = g.constant(Tensor(Shape{3}));
  CHECK_THROWS_WITH_AS(ops::add(g, x, bad), doctest::Contains("shape mismatch"), Error);
}

TEST_CASE("grad of sum(x+y) w.r.t. x is all ones") {
  Rng rng(1);
  Tensor x = tu::uniform_tensor(Shape{5}, rng);
  Tensor y = tu::uniform_tensor(Shape{5}, rng);
  x.set_requires_grad(true);
  x.zero_grad();

  Graph g;
  auto loss = ops::sum(g, ops::add(g, g.leaf(x), g.constant(y)));
  g.backward(loss);
  for (const double v : x.grad()) CHECK(v == 1.0);
}

TEST_CASE("fan-out accumulates: d(x+x)/dx = 2") {
  Tensor x(Shape{3}, {1.0, -2.0, 0.5});
  x.set_requires_grad(true);
  x.zero_grad();

  Graph g;
  auto xid = g.leaf(x);
  auto loss = ops::sum(g, ops::add(g, xid, xid));
  g.backward(loss);
  for (const double v : x.grad()) CHECK(v == 2.0);
}

TEST_CASE("backward requires a scalar root") {
  Tensor x(Shape{2}, {1.0, 2.0});
  x.set_requires_grad(true);
  Graph g;
  auto xid = g.leaf(x);
  CHECK_THROWS_WITH_AS(g.backward(xid), doctest::Contains("scalar"), Error);
}

TEST_CASE("backward can only run once per graph") {
  Tensor x(Shape{2}, {1.0, 2.0});
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g;
  auto loss = ops::sum(g, g.leaf(x));
  g.backward(loss);
  CHECK_THROWS_AS(g.backward(loss), Error);
}

TEST_CASE("non-finite forward values are rejected") {
  Graph g;
  auto x = g.constant(Tensor(Shape{1}, {1e308}));
  CHECK_THROWS_WITH_AS(ops::add(g, x, x), doctest::Contains("non-finite"), Error);
  Graph g2;
  CHECK_THROWS_AS(g2.constant(Tensor(Shape{1}, {std::nan("")})), Error);
}

TEST_CASE("conv2d full-overlap and identity examples") {
  Graph g;
  auto x = g.constant(Tensor(Shape{1, 1, 3, 3}, std::vector<double>(9, 1.0)));
  auto w = g.constant(Tensor(Shape{1, 1, 3, 3}, std::vector<double>(9, 1.0)));
  auto b = g.constant(Tensor(Shape{1}));
  auto y = ops::conv2d(g, x, w, b, 1, 1);
  CHECK(g.val(y).shape() == Shape{1, 1, 3, 3});
  CHECK(g.val(y).data()[4] == 9.0);  // center: all nine ones overlap

  Rng rng(2);
  Tensor input = tu::uniform_tensor(Shape{2, 1, 4, 5}, rng);
  auto xid = g.constant(input);
  auto wid = g.constant(Tensor(Shape{1, 1, 1, 1}, {1.0}));
  auto out = ops::conv2d(g, xid, wid, b, 1, 0);
  CHECK(g.val(out).data() == input.data());
}

TEST_CASE("conv2d rejects bad geometry with named dimensions") {
  Graph g;
  auto x = g.constant(Tensor(Shape{1, 5, 6, 6}));
  auto w = g.constant(Tensor(Shape{2, 3, 3, 3}));
  auto b = g.constant(Tensor(Shape{2}));
  CHECK_THROWS_WITH_AS(ops::conv2d(g, x, w, b, 1, 1),
                       doctest::Contains("5 channels but weight expects 3"), Error);

  auto x2 = g.constant(Tensor(Shape{1, 3, 6, 6}));
  CHECK_THROWS_WITH_AS(ops::conv2d(g, x2, w, b, 2, 0),
                       doctest::Contains("does not yield an exact output size"), Error);

  auto w_even = g.constant(Tensor(Shape{2, 3, 2, 2}));
  CHECK_THROWS_WITH_AS(ops::conv2d(g, x2, w_even, b, 1, 0), doctest::Contains("odd"), Error);

  auto b_bad = g.constant(Tensor(Shape{3}));
  CHECK_THROWS_WITH_AS(ops::conv2d(g, x2, w, b_bad, 1, 1),
                       doctest::Contains("does not match output channels"), Error);
}

TEST_CASE("conv2d is linear in its input") {
  Rng rng(3);
  Tensor x = tu::uniform_tensor(Shape{1, 2, 6, 6}, rng);
  Tensor y = tu::uniform_tensor(Shape{1, 2, 6, 6}, rng);
  Tensor w = tu::uniform_tensor(Shape{3, 2, 3, 3}, rng);
  const double a = 1.7, c = -0.6;

  Graph g;
  auto wid = g.constant(w);
  auto bid = g.constant(Tensor(Shape{3}));
  auto mixed = ops::add(g, ops::scale(g, g.constant(x), a), ops::scale(g, g.constant(y), c));
  auto lhs = ops::conv2d(g, mixed, wid, bid, 1, 1);
  auto rhs = ops::add(g, ops::scale(g, ops::conv2d(g, g.constant(x), wid, bid, 1, 1), a),
                      ops::scale(g, ops::conv2d(g, g.constant(y), wid, bid, 1, 1), c));
  for (std::size_t i = 0; i < g.val(lhs).numel(); ++i)
    CHECK(g.val(lhs).data()[i] == doctest::Approx(g.val(rhs).data()[i]).epsilon(1e-10));
}

TEST_CASE("concat shapes and single-input identity") {
  Graph g;
  Rng rng(4);
  Tensor a = tu::uniform_tensor(Shape{2, 2, 3, 3}, rng);
  Tensor b = tu::uniform_tensor(Shape{2, 3, 3, 3}, rng);
  auto cat = ops::concat_channels(g, {g.constant(a), g.constant(b)});
  CHECK(g.val(cat).shape() == Shape{2, 5, 3, 3});

  auto single = ops::concat_channels(g, {g.constant(a)});
  CHECK(g.val(single).data() == a.data());

  auto odd = g.constant(Tensor(Shape{2, 1, 4, 3}));
  CHECK_THROWS_WITH_AS(ops::concat_channels(g, {g.constant(a), odd}), doctest::Contains("dim 2"),
                       Error);
}

TEST_CASE("concat then slice recovers the inputs bit-exactly") {
  Rng rng(5);
  for (int round = 0; round < 10; ++round) {
    const std::size_t c1 = 1 + rng.below(4), c2 = 1 + rng.below(4), c3 = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(5), w = 1 + rng.below(5), n = 1 + rng.below(3);
    Tensor a = tu::uniform_tensor(Shape{n, c1, h, w}, rng);
    Tensor b = tu::uniform_tensor(Shape{n, c2, h, w}, rng);
    Tensor c = tu::uniform_tensor(Shape{n, c3, h, w}, rng);

    Graph g;
    auto cat = ops::concat_channels(g, {g.constant(a), g.constant(b), g.constant(c)});
    CHECK(g.val(ops::slice_channels(g, cat, 0, c1)).data() == a.data());
    CHECK(g.val(ops::slice_channels(g, cat, c1, c1 + c2)).data() == b.data());
    CHECK(g.val(ops::slice_channels(g, cat, c1 + c2, c1 + c2 + c3)).data() == c.data());
  }
}

TEST_CASE("relu and sigmoid pointwise examples") {
  Graph g;
  auto x = g.constant(Tensor(Shape{3}, {-1.0, 0.0, 2.0}));
  CHECK(g.val(ops::relu(g, x)).data() == std::vector<double>{0.0, 0.0, 2.0});

  auto s = ops::sigmoid(g, g.constant(Tensor(Shape{1}, {0.0})));
  CHECK(g.val(s).data()[0] == 0.5);
}

TEST_CASE("sigmoid extreme arguments stay inside (0,1)") {
  Graph g;
  auto s = ops::sigmoid(g, g.constant(Tensor(Shape{2}, {40.0, -40.0})));
  const double hi = g.val(s).data()[0];
  const double lo = g.val(s).data()[1];
  CHECK(hi > 0.0);
  CHECK(hi <= 1.0);
  CHECK(lo > 0.0);
  CHECK(lo < 1.0);
  // Long-double reference for the stable form.
  const long double ref_lo = expl(-40.0L) / (1.0L + expl(-40.0L));
  CHECK(lo == doctest::Approx(static_cast<double>(ref_lo)).epsilon(1e-14));
  CHECK(hi == doctest::Approx(static_cast<double>(1.0L - ref_lo)).epsilon(1e-14));
}

TEST_CASE("resize_bilinear identity and hand-evaluated 2x upsample") {
  Graph g;
  Rng rng(6);
  Tensor x = tu::uniform_tensor(Shape{1, 2, 3, 4}, rng);
  auto same = ops::resize_bilinear(g, g.constant(x), 3, 4);
  CHECK(g.val(same).data() == x.data());

  auto two = g.constant(Tensor(Shape{1, 1, 2, 2}, {0.0, 1.0, 2.0, 3.0}));
  auto up = ops::resize_bilinear(g, two, 4, 4);
  // align-corners=false: row samples fall at -0.25, 0.25, 0.75, 1.25.
  const std::vector<double> expected = {
      0.0, 0.25, 0.75, 1.0,  //
      0.5, 0.75, 1.25, 1.5,  //
      1.5, 1.75, 2.25, 2.5,  //
      2.0, 2.25, 2.75, 3.0,
  };
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(g.val(up).data()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("bce_loss analytic examples") {
  Graph g;
  auto half = g.constant(Tensor(Shape{4}, std::vector<double>(4, 0.5)));
  auto loss = ops::bce_loss(g, half, half);
  CHECK(g.val(loss).data()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Perfect prediction: the clamp leaves -ln(1-eps) per element.
  auto ones = g.constant(Tensor(Shape{4}, std::vector<double>(4, 1.0)));
  auto perfect = ops::bce_loss(g, ones, ones);
  CHECK(g.val(perfect).data()[0] ==
        doctest::Approx(-std::log1p(-ops::kBceEps)).epsilon(1e-9));

  auto wide = g.constant(Tensor(Shape{2}));
  CHECK_THROWS_WITH_AS(ops::bce_loss(g, half, wide), doctest::Contains("shape mismatch"), Error);
}

TEST_CASE("identical seeds give bit-identical outputs and grads") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = tu::uniform_tensor(Shape{2, 3, 7, 7}, rng);
    Tensor w = tu::uniform_tensor(Shape{2, 3, 3, 3}, rng, -0.5, 0.5);
    Tensor b = tu::uniform_tensor(Shape{2}, rng, -0.1, 0.1);
    w.set_requires_grad(true);
    w.zero_grad();
    b.set_requires_grad(true);
    b.zero_grad();

    Graph g;
    auto y = ops::conv2d(g, g.constant(x), g.leaf(w), g.leaf(b), 2, 1);
    auto s = ops::sigmoid(g, y);
    auto target = g.constant(Tensor(g.val(s).shape(), std::vector<double>(g.val(s).numel(), 1.0)));
    auto loss = ops::bce_loss(g, s, target);
    g.backward(loss);
    return std::tuple{g.val(loss).data()[0], w.grad(), b.grad()};
  };

  const auto [l1, wg1, bg1] = run(99);
  const auto [l2, wg2, bg2] = run(99);
  CHECK(l1 == l2);
  CHECK(wg1 == wg2);
  CHECK(bg1 == bg2);
}

TEST_CASE("graph records nodes and replays them in reverse") {
  Tensor x(Shape{2}, {0.25, -0.5});
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g;
  auto a = g.leaf(x);
  auto r = ops::relu(g, a);
  auto s = ops::sum(g, r);
  (void)s;
  REQUIRE(g.num_nodes() == 2);
  CHECK(std::string(g.node_op(0)) == "relu");
  CHECK(std::string(g.node_op(1)) == "sum");
}
