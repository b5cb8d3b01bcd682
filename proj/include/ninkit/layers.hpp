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

#ifndef NINKIT_LAYERS_HPP_
#define NINKIT_LAYERS_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/tensor.hpp"

NINKIT_BEGIN_NAMESPACE

using Label = std::uint32_t;

enum class Mode { train, eval };

/// Per-call state for a forward pass. Dropout masks are a pure function of
/// (seed, layer stream, step, global sample index), so splitting a batch into
/// chunks or replaying a step reproduces the same masks.
struct ForwardContext {
  Mode mode = Mode::train;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  /// Global index of batch item 0 within the step's full batch.
  std::size_t sample_offset = 0;
};

/// A learnable tensor with its momentum buffer. Biases are exempt from
/// weight decay.
struct Parameter {
  std::string name;
  Tensor4 value;
  Tensor4 velocity;
  bool decay = true;
};

/// What a layer's backward needs from its forward. Owned by the caller so
/// several passes over one network never share state.
struct LayerCache {
  Dims input_dims;
  Tensor4 input;
  Tensor4 mask;
  std::vector<std::uint32_t> argmax;
};

// ---------------------------------------------------------------------------
// Functional kernels. Biases are (1, out_c, 1, 1); conv weights are
// (out_c, in_c, k, k); cccp weights are (out_c, in_c, 1, 1) so they are
// literally 1x1 convolution kernels; fc weights are (classes, features, 1, 1).
// Every *_backward accumulates (+=) into parameter gradients and returns the
// input gradient.
// ---------------------------------------------------------------------------

/// Spatial extent after a k x k convolution; throws if it would be < 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t pad,
                               std::size_t stride);

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias,
                       std::size_t pad, std::size_t stride);
/// grad_x may be null when the input gradient is not needed.
void conv2d_backward(const Tensor4& x, const Tensor4& weights, std::size_t pad,
                     std::size_t stride, const Tensor4& grad_out, Tensor4* grad_x,
                     Tensor4& grad_weights, Tensor4& grad_bias);

Tensor4 cccp_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias);
void cccp_backward(const Tensor4& x, const Tensor4& weights, const Tensor4& grad_out,
                   Tensor4* grad_x, Tensor4& grad_weights, Tensor4& grad_bias);

Tensor4 relu_forward(const Tensor4& x);
/// Passes grad where x > 0; the subgradient at exactly 0 is 0.
Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out);

/// Ceiling-mode output extent ceil((s - k) / stride) + 1, dropping a last
/// window that would start past the border.
std::size_t pool_output_extent(std::size_t in, std::size_t kernel, std::size_t stride);

/// Max pooling with border-clipped windows. `argmax` (optional) receives,
/// for every output element, the flat input index that won; ties go to the
/// first position in row-major window order.
Tensor4 maxpool_forward(const Tensor4& x, std::size_t kernel, std::size_t stride,
                        std::vector<std::uint32_t>* argmax = nullptr);
Tensor4 maxpool_backward(const Tensor4& grad_out, std::span<const std::uint32_t> argmax,
                         const Dims& input_dims);

/// Inverted-dropout mask with entries in {0, 1/(1-ratio)}.
Tensor4 dropout_mask(const Dims& dims, double ratio, std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t step, std::size_t sample_offset);

Tensor4 gap_forward(const Tensor4& x);
Tensor4 gap_backward(const Tensor4& grad_out, const Dims& input_dims);

Tensor4 fc_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias);
void fc_backward(const Tensor4& x, const Tensor4& weights, const Tensor4& grad_out,
                 Tensor4* grad_x, Tensor4& grad_weights, Tensor4& grad_bias);

struct SoftmaxResult {
  double loss = 0.0;
  Tensor4 probs;
  Tensor4 grad_logits;
};

/// Softmax cross-entropy over (n, K, 1, 1) logits. The loss is the sum of
/// per-sample losses divided by `normalizer` (0 means the batch size), and
/// grad_logits = (probs - onehot) / normalizer.
SoftmaxResult softmax_xent(const Tensor4& logits, std::span<const Label> labels,
                           std::size_t normalizer = 0);

// ---------------------------------------------------------------------------
// Layer objects.
// ---------------------------------------------------------------------------

enum class LayerKind { conv, cccp, relu, pool, dropout, fc, gap };

const char* to_string(LayerKind kind);

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Dims output_dims(const Dims& in) const = 0;
  virtual Tensor4 forward(const Tensor4& x, const ForwardContext& ctx,
                          LayerCache& cache) const = 0;
  /// Accumulates parameter gradients into `grad_params` (one per params()
  /// entry) and returns the input gradient, or an empty tensor when
  /// `want_input_grad` is false.
  virtual Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                           std::span<Tensor4> grad_params, bool want_input_grad) const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual std::span<Parameter> params() { return {}; }
  virtual std::span<const Parameter> params() const { return {}; }

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

 private:
  std::string name_;
};

class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t pad, std::size_t stride = 1);

  LayerKind kind() const override { return LayerKind::conv; }
  Dims output_dims(const Dims& in) const override;
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::span<Parameter> params() override { return params_; }
  std::span<const Parameter> params() const override { return params_; }

  std::size_t kernel() const { return kernel_; }
  std::size_t pad() const { return pad_; }
  std::size_t stride() const { return stride_; }
  Tensor4& weights() { return params_[0].value; }
  Tensor4& bias() { return params_[1].value; }

 private:
  std::size_t kernel_;
  std::size_t pad_;
  std::size_t stride_;
  std::vector<Parameter> params_;
};

/// Cascaded cross-channel parametric pooling: a per-pixel linear
/// recombination of channels.
class Cccp final : public Layer {
 public:
  Cccp(std::size_t in_channels, std::size_t out_channels);

  LayerKind kind() const override { return LayerKind::cccp; }
  Dims output_dims(const Dims& in) const override;
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Cccp>(*this); }
  std::span<Parameter> params() override { return params_; }
  std::span<const Parameter> params() const override { return params_; }

  Tensor4& weights() { return params_[0].value; }
  Tensor4& bias() { return params_[1].value; }

 private:
  std::vector<Parameter> params_;
};

class Relu final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  Dims output_dims(const Dims& in) const override { return in; }
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
};

class MaxPool final : public Layer {
 public:
  MaxPool(std::size_t kernel, std::size_t stride);

  LayerKind kind() const override { return LayerKind::pool; }
  Dims output_dims(const Dims& in) const override;
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(*this); }

 private:
  std::size_t kernel_;
  std::size_t stride_;
};

/// Inverted dropout. Identity in eval mode. `stream` identifies the layer so
/// two dropout layers never share a mask.
class Dropout final : public Layer {
 public:
  Dropout(double ratio, std::uint64_t stream);

  LayerKind kind() const override { return LayerKind::dropout; }
  Dims output_dims(const Dims& in) const override { return in; }
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

  double ratio() const { return ratio_; }

 private:
  double ratio_;
  std::uint64_t stream_;
};

class GlobalAvgPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::gap; }
  Dims output_dims(const Dims& in) const override { return {in.n, in.c, 1, 1}; }
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
};

class FullyConnected final : public Layer {
 public:
  FullyConnected(std::size_t features, std::size_t outputs);

  LayerKind kind() const override { return LayerKind::fc; }
  Dims output_dims(const Dims& in) const override;
  Tensor4 forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const override;
  Tensor4 backward(const Tensor4& grad_out, const LayerCache& cache,
                   std::span<Tensor4> grad_params, bool want_input_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<FullyConnected>(*this); }
  std::span<Parameter> params() override { return params_; }
  std::span<const Parameter> params() const override { return params_; }

  Tensor4& weights() { return params_[0].value; }
  Tensor4& bias() { return params_[1].value; }

 private:
  std::vector<Parameter> params_;
};

/// Explicit (c*h*w) -> c averaging matrix, shaped as fc weights
/// (c, c*h*w, 1, 1): row k holds 1/(h*w) on the block of channel k and zero
/// elsewhere.
Tensor4 gap_as_fc_weights(const Dims& input_dims);

NINKIT_END_NAMESPACE

#endif  // NINKIT_LAYERS_HPP_
