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

#ifndef NINKIT_GRADCHECK_HPP_
#define NINKIT_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/layers.hpp"
#include "ninkit/model.hpp"

NINKIT_BEGIN_NAMESPACE

struct GradcheckOptions {
  /// Central-difference step.
  double step = 1e-5;
  double tolerance = 1e-6;
  /// Error is |analytic - numeric| / max(|analytic|, |numeric|, scale_floor).
  double scale_floor = 1e-3;
};

/// Relative error with the floor from `options`.
double gradcheck_error(double analytic, double numeric, const GradcheckOptions& options);

/// Worst error seen over a set of checked coordinates. Coordinates whose
/// +/- perturbations land on different sides of a ReLU kink or flip a
/// pooling argmax are not differentiable there and are counted as skipped.
struct CheckStat {
  double max_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;

  void merge(const CheckStat& other);
};

/// Checks one layer in isolation against the scalar objective sum(y * R) for
/// a fixed random R. Covers the input gradient and every parameter gradient.
CheckStat check_layer(const Layer& layer, const Tensor4& input, const ForwardContext& ctx,
                      std::uint64_t seed, const GradcheckOptions& options = {});

/// Checks the softmax cross-entropy gradient with respect to the logits.
CheckStat check_softmax(const Tensor4& logits, const std::vector<Label>& labels,
                        const GradcheckOptions& options = {});

/// Checks d(loss)/d(params) of the whole network for one parameter tensor
/// set. Returns one stat per parameterized layer, in layer order.
std::vector<CheckStat> check_network(const Network& net, const Tensor4& images,
                                     const std::vector<Label>& labels, const ForwardContext& ctx,
                                     const GradcheckOptions& options = {});

struct GradcheckRow {
  std::string name;
  /// The layer checked on its own, at the input it sees inside the network.
  CheckStat local;
  /// Parameter gradients through the full network and loss (parameterized
  /// layers only).
  bool has_end_to_end = false;
  CheckStat end_to_end;

  double max_error() const;
};

struct GradcheckReport {
  /// One row per layer in network order, then a final "loss" row.
  std::vector<GradcheckRow> rows;
  double tolerance = 0.0;

  bool passed() const;
  /// Name of the first row over tolerance, or empty.
  std::string first_failure() const;
  std::string format() const;
};

/// Small instance of `config` with the same layer sequence: square input of
/// side `spatial`, at most `max_channels` channels per hidden layer and at
/// most `max_classes` classes. Weight init stds are replaced by
/// sqrt(2 / fan_in).
NetworkConfig downscale_config(const NetworkConfig& config, std::size_t spatial = 8,
                               std::size_t max_channels = 4, std::size_t max_classes = 4);

/// Runs the full check on an existing (already small) network with a random
/// batch of `batch` images drawn from `seed`. Dropout runs in train mode with
/// a fixed mask.
GradcheckReport gradcheck_network(const Network& net, std::uint64_t seed, std::size_t batch = 2,
                                  const GradcheckOptions& options = {});

/// downscale_config + init + gradcheck_network.
GradcheckReport run_gradcheck(const NetworkConfig& config, std::uint64_t seed,
                              const GradcheckOptions& options = {});

NINKIT_END_NAMESPACE

#endif  // NINKIT_GRADCHECK_HPP_
