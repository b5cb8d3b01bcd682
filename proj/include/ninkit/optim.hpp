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

#ifndef NINKIT_OPTIM_HPP_
#define NINKIT_OPTIM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/data.hpp"
#include "ninkit/model.hpp"

NINKIT_BEGIN_NAMESPACE

enum class ScheduleKind {
  /// Drop the rate when training accuracy stops improving; stop on the
  /// plateau after the last drop.
  plateau,
  /// Drop the rate after fixed epochs; run exactly max_epochs.
  fixed,
};

struct SgdConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch = 128;

  ScheduleKind schedule = ScheduleKind::plateau;
  std::size_t plateau_patience = 3;
  double min_delta = 1e-4;
  std::size_t max_drops = 2;
  double drop_factor = 10.0;
  /// Fixed schedule: the rate drops once after each listed epoch count.
  std::vector<std::size_t> drop_epochs;
  std::size_t max_epochs = 200;

  void validate() const;
};

struct TrainState {
  std::uint64_t epoch = 0;
  double lr = 0.0;
  double best_train_accuracy = -1.0;
  std::uint64_t epochs_since_improvement = 0;
  std::uint32_t drops_done = 0;
  double best_val_accuracy = -1.0;
  /// Optimizer steps taken so far; keys the dropout streams.
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  bool finished = false;

  static TrainState initial(const SgdConfig& cfg, std::uint64_t seed);
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

/// v <- momentum * v - lr * (g + weight_decay * w); w <- w + v.
/// Parameters with decay == false (biases) skip the weight-decay term.
void sgd_step(std::span<Parameter* const> params, const GradientSet& grads, double lr,
              const SgdConfig& cfg);

struct TickResult {
  bool dropped = false;
  bool stop = false;
};

/// Called once per finished epoch, after state.epoch has been advanced.
///
/// Plateau: accuracy counts as an improvement when it beats the best so far
/// by more than min_delta. After plateau_patience epochs without one the
/// rate is divided by drop_factor and the counter resets; a plateau with
/// max_drops already spent stops training. Fixed: the rate drops after each
/// listed epoch. Either way training stops at max_epochs, and the rate is
/// always lr0 / drop_factor^drops_done.
TickResult schedule_tick(TrainState& state, const SgdConfig& cfg, double train_accuracy);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t count = 0;
  double error_rate() const { return 1.0 - accuracy; }
};

/// Eval-mode accuracy and mean loss. Takes the network by const reference:
/// nothing about it changes.
EvalResult evaluate(const Network& net, const Dataset& data, std::size_t batch = 256);

struct EpochMetrics {
  std::uint64_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  double seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,lr,train_loss,train_acc,val_loss,val_acc,seconds";
/// One CSV row (no newline). Values are printed with fixed precision so equal
/// runs give equal bytes.
std::string format_metrics_row(const EpochMetrics& m);

struct TrainOptions {
  SgdConfig sgd;
  std::uint64_t seed = 1;
  Augmentation augmentation;
  std::size_t workers = 1;
  /// Training-set prefix evaluated each epoch to drive the schedule
  /// (0 = whole set).
  std::size_t train_measure = 10000;
  std::size_t eval_batch = 256;
  /// When set, metrics.csv, last.ckpt and best.ckpt are written here.
  std::optional<std::filesystem::path> out_dir;
  /// Wall-clock seconds in the metrics rows; off keeps files reproducible.
  bool record_time = false;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// Runs the epoch loop from `state` until the schedule stops or max_epochs
/// is reached: shuffle, mini-batch SGD, eval-mode accuracy on train (and
/// val), schedule tick, metrics row, checkpoints. Returns the final state.
TrainState train(Network& net, const Dataset& train_set, const Dataset* val_set,
                 const TrainOptions& options, TrainState state);

// -------------------------------------------------------------- checkpoints

/// Binary layout, little-endian: "NINCKPT1", u64 config hash, u32 real width,
/// the TrainState fields, u32 parameter count, then value and velocity of
/// every parameter in declaration order (tensor encoding), then a u64
/// FNV-1a checksum over everything before it.
void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainState& state);

/// Restores parameters and momentum into `net`, which must have been built
/// from the same config, and returns the stored state.
TrainState load_checkpoint(const std::filesystem::path& path, Network& net);

NINKIT_END_NAMESPACE

#endif  // NINKIT_OPTIM_HPP_
