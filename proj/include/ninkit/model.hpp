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

#ifndef NINKIT_MODEL_HPP_
#define NINKIT_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/layers.hpp"
#include "ninkit/tensor.hpp"

NINKIT_BEGIN_NAMESPACE

inline constexpr double kDefaultInitStd = 0.05;

/// One line of a network config. Only the attributes meaningful for `kind`
/// are set; the rest keep their defaults.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t kernel = 0;
  std::size_t output = 0;
  std::size_t pad = 0;
  std::size_t stride = 1;
  double ratio = 0.0;
  std::optional<double> init_std;
  std::size_t line = 0;
};

/// Optional `train` directive carried by a config file.
struct TrainHints {
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::optional<std::size_t> batch;
};

struct NetworkConfig {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<LayerSpec> layers;
  TrainHints hints;
  /// Inferred output dims of every layer for a batch of one.
  std::vector<Dims> shapes;

  Dims input_dims(std::size_t batch = 1) const { return {batch, channels, height, width}; }
  /// Index of the terminal gap layer, if the network ends in one.
  std::optional<std::size_t> gap_index() const;
  /// Structure-only text form (no comments, init stds or train hints).
  std::string canonical() const;
  /// FNV-1a over canonical(); checkpoints use it to refuse mismatched nets.
  std::uint64_t hash() const;
};

/// Parses the line-oriented config format:
///
///   # comment
///   input channels=3 height=32 width=32 classes=10
///   train lr=0.1 momentum=0.9 weight_decay=0.0001 batch=128
///   conv kernel=5 output=192 pad=2 [stride=1] [init_std=0.05]
///   relu
///   cccp output=160
///   pool kernel=3 stride=2
///   dropout ratio=0.5
///   gap                      (or: fc [output=<classes>])
///
/// Kinds are case-insensitive ("convolution" and "pooling" are accepted as
/// in the published tables). Shapes are inferred eagerly; every error names
/// its line.
NetworkConfig parse_config(std::string_view text);
NetworkConfig load_config(const std::filesystem::path& path);

/// Re-runs validation and shape inference after programmatic edits.
void validate_config(NetworkConfig& config);

/// Replaces the terminal gap with [dropout(head_dropout)] + fc(classes).
/// head_dropout == 0 adds no dropout layer.
NetworkConfig with_fc_head(const NetworkConfig& config, double head_dropout);

/// Gradients for every parameter of a network, in parameters() order.
using GradientSet = std::vector<Tensor4>;

/// A config bound to live layers and parameters. Copies are deep.
class Network {
 public:
  /// Gaussian(0, std) weights and zero biases. `std` comes from the layer's
  /// init_std when given, else `default_init_std`. Each layer draws from its
  /// own stream of `seed`, so the result does not depend on layer order
  /// beyond the index.
  static Network init(const NetworkConfig& config, std::uint64_t seed,
                      double default_init_std = kDefaultInitStd);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network();

  const NetworkConfig& config() const { return config_; }
  /// Fresh networks start in train mode. Mode only affects dropout.
  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  /// Swaps in a different implementation for one layer (used by harness
  /// sensitivity tests). Parameter shapes must match.
  void replace_layer(std::size_t i, std::unique_ptr<Layer> layer);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  /// Total learnable scalar count.
  std::size_t parameter_count() const;
  GradientSet zero_gradients() const;

  /// Context for a pass in the network's current mode.
  ForwardContext context(std::uint64_t seed, std::uint64_t step,
                         std::size_t sample_offset = 0) const {
    return {mode_, seed, step, sample_offset};
  }

  struct Pass {
    Tensor4 logits;
    std::vector<LayerCache> caches;
  };

  /// Runs every layer in order. The returned caches feed backward().
  Pass forward(const Tensor4& batch, const ForwardContext& ctx) const;

  /// Runs layers [0, stop) and returns the input that layer `stop` would see.
  Tensor4 forward_prefix(const Tensor4& batch, const ForwardContext& ctx,
                         std::size_t stop) const;

  /// Consumes the caches of one forward pass and returns parameter gradients.
  GradientSet backward(const Tensor4& grad_logits, std::vector<LayerCache>&& caches) const;

  struct BatchResult {
    double loss = 0.0;
    std::size_t correct = 0;
    GradientSet grads;
  };

  /// Forward + softmax loss + backward over a whole batch. The batch is cut
  /// into fixed chunks of kGradientChunk items; chunk gradients are summed by
  /// a fixed pairwise tree, so the result is bit-identical for any `workers`.
  BatchResult compute_gradients(const Tensor4& images, std::span<const Label> labels,
                                const ForwardContext& ctx, std::size_t workers = 1) const;

  static constexpr std::size_t kGradientChunk = 16;

 private:
  Network() = default;

  NetworkConfig config_;
  std::vector<std::unique_ptr<Layer>> layers_;
  Mode mode_ = Mode::train;
};

/// Index of the largest value in each row of (n, K, 1, 1) logits; ties go to
/// the lowest class index.
std::vector<Label> argmax_rows(const Tensor4& logits);

NINKIT_END_NAMESPACE

#endif  // NINKIT_MODEL_HPP_
