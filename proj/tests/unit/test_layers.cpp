// Copyright 2026 The ninkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../oracles.hpp"
#include "ninkit/layers.hpp"

using namespace ninkit;

namespace {

Tensor4 randn(Rng& rng, Dims d) { return gaussian(rng, d, Real{1}); }

}  // namespace

TEST(Conv, MatchesNaiveLoopExactlyOnDyadicInputs) {
  Rng rng(100);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(5);
    const std::size_t pad = rng.below(k);
    const std::size_t stride = 1 + rng.below(2);
    const std::size_t h = k + rng.below(6);
    const std::size_t w = k + rng.below(6);
    const Dims xd{1 + rng.below(3), 1 + rng.below(4), h, w};
    const Tensor4 x = oracle::dyadic(rng, xd);
    const Tensor4 wt = oracle::dyadic(rng, {1 + rng.below(4), xd.c, k, k});
    const Tensor4 b = oracle::dyadic(rng, {1, wt.dims().n, 1, 1});
    ASSERT_EQ(conv2d_forward(x, wt, b, pad, stride), oracle::conv2d(x, wt, b, pad, stride))
        << "trial " << trial;
  }
}

TEST(Conv, OutputExtent) {
  EXPECT_EQ(conv_output_extent(32, 5, 2, 1), 32u);
  EXPECT_EQ(conv_output_extent(8, 3, 1, 1), 8u);
  EXPECT_EQ(conv_output_extent(7, 3, 0, 2), 3u);
  EXPECT_THROW(conv_output_extent(2, 5, 0, 1), ShapeError);
}

TEST(Conv, ChannelMismatchThrows) {
  Rng rng(1);
  const Tensor4 x = randn(rng, {1, 2, 4, 4});
  const Tensor4 w = randn(rng, {3, 1, 3, 3});
  EXPECT_THROW(conv2d_forward(x, w, Tensor4::zeros({1, 3, 1, 1}), 1, 1), ShapeError);
}

TEST(Conv, BackwardAccumulates) {
  Rng rng(2);
  const Tensor4 x = randn(rng, {2, 2, 4, 4});
  const Tensor4 w = randn(rng, {3, 2, 3, 3});
  const Tensor4 gy = randn(rng, {2, 3, 4, 4});
  Tensor4 gw1 = Tensor4::zeros_like(w), gb1 = Tensor4::zeros({1, 3, 1, 1});
  conv2d_backward(x, w, 1, 1, gy, nullptr, gw1, gb1);
  Tensor4 gw2 = gw1, gb2 = gb1;
  conv2d_backward(x, w, 1, 1, gy, nullptr, gw2, gb2);
  EXPECT_LT(max_abs_diff(gw2, scale(gw1, 2)), 1e-12);
  EXPECT_LT(max_abs_diff(gb2, scale(gb1, 2)), 1e-12);
}

TEST(Conv, BiasGradientIsSumOfOutputGradient) {
  Rng rng(3);
  const Tensor4 x = randn(rng, {2, 1, 3, 3});
  const Tensor4 w = randn(rng, {2, 1, 3, 3});
  const Tensor4 gy = randn(rng, {2, 2, 3, 3});
  Tensor4 gw = Tensor4::zeros_like(w), gb = Tensor4::zeros({1, 2, 1, 1});
  conv2d_backward(x, w, 1, 1, gy, nullptr, gw, gb);
  for (std::size_t o = 0; o < 2; ++o) {
    double s = 0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 9; ++i) s += gy(n, o, i / 3, i % 3);
    EXPECT_NEAR(gb[o], s, 1e-12);
  }
}

TEST(Cccp, EqualsOneByOneConvolution) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims xd{1 + rng.below(3), 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6)};
    const Tensor4 x = randn(rng, xd);
    const Tensor4 w = randn(rng, {1 + rng.below(6), xd.c, 1, 1});
    const Tensor4 b = randn(rng, {1, w.dims().n, 1, 1});
    EXPECT_LT(max_abs_diff(cccp_forward(x, w, b), conv2d_forward(x, w, b, 0, 1)), 1e-12);
  }
}

TEST(Relu, ForwardAndSubgradientAtZero) {
  const Tensor4 x = Tensor4::from_slice({1, 1, 1, 3}, std::vector<Real>{-1, 0, 2});
  const Tensor4 y = relu_forward(x);
  EXPECT_EQ(y[0], 0);
  EXPECT_EQ(y[1], 0);
  EXPECT_EQ(y[2], 2);
  const Tensor4 g = relu_backward(x, Tensor4::fill({1, 1, 1, 3}, 5));
  EXPECT_EQ(g[0], 0);
  EXPECT_EQ(g[1], 0);
  EXPECT_EQ(g[2], 5);
}

TEST(Pool, CeilingModeExtents) {
  EXPECT_EQ(pool_output_extent(32, 3, 2), 16u);
  EXPECT_EQ(pool_output_extent(16, 3, 2), 8u);
  EXPECT_EQ(pool_output_extent(28, 3, 2), 14u);
  EXPECT_EQ(pool_output_extent(14, 3, 2), 7u);
  for (std::size_t in = 1; in < 40; ++in)
    for (std::size_t k = 1; k <= 4; ++k)
      for (std::size_t s = 1; s <= 3 && k <= in; ++s)
        ASSERT_EQ(pool_output_extent(in, k, s), oracle::pool_extent(in, k, s))
            << in << " " << k << " " << s;
}

TEST(Pool, MatchesNaiveLoop) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(3), s = 1 + rng.below(3);
    const Dims d{1 + rng.below(2), 1 + rng.below(3), k + rng.below(9), k + rng.below(9)};
    const Tensor4 x = randn(rng, d);
    ASSERT_EQ(maxpool_forward(x, k, s), oracle::maxpool(x, k, s));
  }
}

TEST(Pool, KernelLargerThanInputRejected) {
  EXPECT_THROW(maxpool_forward(Tensor4::zeros({1, 1, 2, 2}), 3, 2), ShapeError);
}

TEST(Pool, TiesRouteToFirstPosition) {
  const Tensor4 x = Tensor4::fill({1, 1, 3, 3}, 1);
  std::vector<std::uint32_t> argmax;
  const Tensor4 y = maxpool_forward(x, 3, 2, &argmax);
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(argmax[0], 0u);
  const Tensor4 g = maxpool_backward(Tensor4::fill(y.dims(), 1), argmax, x.dims());
  EXPECT_EQ(g[0], 1);
  EXPECT_EQ(std::accumulate(g.data().begin(), g.data().end(), Real{0}), 1);
}

TEST(Pool, BackwardSumsOverlappingWindows) {
  // The center element of a 3x3 input wins both 2x2 windows with stride 1 in
  // each direction, so it receives four gradients.
  Tensor4 x = Tensor4::zeros({1, 1, 3, 3});
  x(0, 0, 1, 1) = 9;
  std::vector<std::uint32_t> argmax;
  const Tensor4 y = maxpool_forward(x, 2, 1, &argmax);
  const Tensor4 g = maxpool_backward(Tensor4::fill(y.dims(), 1), argmax, x.dims());
  EXPECT_EQ(g(0, 0, 1, 1), 4);
}

TEST(Dropout, MaskValuesAndRate) {
  const Tensor4 m = dropout_mask({4, 8, 16, 16}, 0.5, 7, 3, 1, 0);
  std::size_t kept = 0;
  for (Real v : m.data()) {
    ASSERT_TRUE(v == 0 || v == 2);
    kept += v != 0;
  }
  EXPECT_NEAR(static_cast<double>(kept) / m.size(), 0.5, 0.02);
}

TEST(Dropout, MaskDependsOnlyOnGlobalSampleIndex) {
  const Tensor4 whole = dropout_mask({4, 2, 3, 3}, 0.3, 1, 2, 5, 0);
  const Tensor4 tail = dropout_mask({2, 2, 3, 3}, 0.3, 1, 2, 5, 2);
  EXPECT_EQ(whole.slice_batch(2, 2), tail);
  EXPECT_NE(whole, dropout_mask({4, 2, 3, 3}, 0.3, 1, 2, 6, 0));
}

TEST(Dropout, EvalModeIsIdentity) {
  Rng rng(6);
  const Tensor4 x = randn(rng, {2, 3, 4, 4});
  Dropout d(0.5, 0);
  LayerCache cache;
  ForwardContext ctx;
  ctx.mode = Mode::eval;
  EXPECT_EQ(d.forward(x, ctx, cache), x);
}

TEST(Dropout, RejectsBadRatio) {
  EXPECT_THROW(Dropout(1.0, 0), ArgumentError);
  EXPECT_THROW(Dropout(-0.1, 0), ArgumentError);
}

TEST(Gap, EqualsBlockDiagonalMatrix) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{1 + rng.below(3), 1 + rng.below(5), 1 + rng.below(6), 1 + rng.below(6)};
    const Tensor4 x = randn(rng, d);
    const Tensor4 w = gap_as_fc_weights(d);
    const Tensor4 via_fc = fc_forward(x, w, Tensor4::zeros({1, d.c, 1, 1}));
    EXPECT_LT(max_abs_diff(gap_forward(x), via_fc), 1e-12);
  }
}

TEST(Gap, BlockDiagonalStructure) {
  const Tensor4 w = gap_as_fc_weights({1, 3, 2, 2});
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 12; ++j)
      EXPECT_EQ(w[k * 12 + j], j / 4 == k ? Real{0.25} : Real{0});
}

TEST(Gap, BackwardSpreadsEvenly) {
  const Tensor4 g = gap_backward(Tensor4::fill({1, 2, 1, 1}, 8), {1, 2, 2, 2});
  for (Real v : g.data()) EXPECT_EQ(v, 2);
}

TEST(Fc, MatchesExplicitSum) {
  Rng rng(8);
  const Tensor4 x = randn(rng, {2, 3, 2, 2});
  const Tensor4 w = randn(rng, {4, 12, 1, 1});
  const Tensor4 b = randn(rng, {1, 4, 1, 1});
  const Tensor4 y = fc_forward(x, w, b);
  ASSERT_EQ(y.dims(), (Dims{2, 4, 1, 1}));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 4; ++o) {
      double s = b[o];
      for (std::size_t j = 0; j < 12; ++j) s += w[o * 12 + j] * x[n * 12 + j];
      EXPECT_NEAR(y(n, o, 0, 0), s, 1e-12);
    }
}

TEST(Softmax, LossAndGradientMatchClosedForm) {
  const Tensor4 z = Tensor4::from_slice({2, 3, 1, 1}, std::vector<Real>{1, 2, 3, 0, 0, 0});
  const std::vector<Label> labels{2, 1};
  const auto r = softmax_xent(z, labels);
  const double e = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const double expected = (-(3 - std::log(e)) + std::log(3.0)) / 2;
  EXPECT_NEAR(r.loss, expected, 1e-12);
  EXPECT_NEAR(r.grad_logits[2], (std::exp(3.0) / e - 1) / 2, 1e-12);
  EXPECT_NEAR(r.grad_logits[4], (1.0 / 3 - 1) / 2, 1e-12);
  EXPECT_NEAR(r.probs[0], std::exp(1.0) / e, 1e-12);
}

TEST(Softmax, StableForHugeLogits) {
  const Tensor4 z = Tensor4::from_slice({1, 2, 1, 1}, std::vector<Real>{1000, -1000});
  const auto r = softmax_xent(z, std::vector<Label>{0});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
}

TEST(Softmax, NormalizerScalesLossAndGradient) {
  Rng rng(9);
  const Tensor4 z = randn(rng, {2, 4, 1, 1});
  const std::vector<Label> labels{0, 3};
  const auto a = softmax_xent(z, labels);
  const auto b = softmax_xent(z, labels, 8);
  EXPECT_NEAR(b.loss * 4, a.loss, 1e-12);
  EXPECT_LT(max_abs_diff(scale(b.grad_logits, 4), a.grad_logits), 1e-12);
}

TEST(Softmax, LabelOutOfRangeThrows) {
  const Tensor4 z = Tensor4::zeros({1, 3, 1, 1});
  EXPECT_THROW(softmax_xent(z, std::vector<Label>{3}), ArgumentError);
}

TEST(LayerObjects, CloneIsDeep) {
  Conv2d conv(1, 2, 3, 1);
  conv.weights()[0] = 1;
  auto copy = conv.clone();
  conv.weights()[0] = 2;
  EXPECT_EQ(copy->params()[0].value[0], 1);
}

TEST(LayerObjects, BiasesAreExemptFromDecay) {
  Cccp c(2, 3);
  ASSERT_EQ(c.params().size(), 2u);
  EXPECT_TRUE(c.params()[0].decay);
  EXPECT_FALSE(c.params()[1].decay);
}
