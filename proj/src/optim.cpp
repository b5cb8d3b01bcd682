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

#include "ninkit/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

NINKIT_BEGIN_NAMESPACE

void SgdConfig::validate() const {
  if (!(lr0 > 0.0)) throw ArgumentError("lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight decay must be >= 0");
  if (!(drop_factor > 1.0)) throw ArgumentError("drop factor must be > 1");
  if (batch == 0) throw ArgumentError("batch size must be >= 1");
  if (plateau_patience == 0) throw ArgumentError("plateau patience must be >= 1");
  if (drop_epochs.size() > max_drops) {
    throw ArgumentError("fixed schedule lists more drops than max_drops");
  }
  for (std::size_t i = 1; i < drop_epochs.size(); ++i) {
    if (drop_epochs[i] <= drop_epochs[i - 1]) {
      throw ArgumentError("fixed schedule drop epochs must be strictly increasing");
    }
  }
}

TrainState TrainState::initial(const SgdConfig& cfg, std::uint64_t seed) {
  TrainState s;
  s.lr = cfg.lr0;
  s.seed = seed;
  return s;
}

void sgd_step(std::span<Parameter* const> params, const GradientSet& grads, double lr,
              const SgdConfig& cfg) {
  if (params.size() != grads.size()) {
    throw ShapeError("sgd_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  const Real rate = static_cast<Real>(lr);
  const Real mu = static_cast<Real>(cfg.momentum);
  const Real wd = static_cast<Real>(cfg.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    const Tensor4& g = grads[i];
    if (g.dims() != p.value.dims()) {
      throw ShapeError("sgd_step: gradient " + g.dims().str() + " for parameter " +
                       p.value.dims().str());
    }
    if (p.velocity.dims() != p.value.dims()) p.velocity = Tensor4::zeros(p.value.dims());
    Real* w = p.value.raw();
    Real* v = p.velocity.raw();
    const Real* gp = g.raw();
    const bool decay = p.decay && wd != 0;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const Real step_grad = decay ? gp[k] + wd * w[k] : gp[k];
      v[k] = mu * v[k] - rate * step_grad;
      w[k] += v[k];
    }
  }
}

TickResult schedule_tick(TrainState& state, const SgdConfig& cfg, double train_accuracy) {
  TickResult r;
  const bool improved = train_accuracy > state.best_train_accuracy + cfg.min_delta;
  if (improved) {
    state.best_train_accuracy = train_accuracy;
    state.epochs_since_improvement = 0;
  } else {
    ++state.epochs_since_improvement;
  }

  if (cfg.schedule == ScheduleKind::plateau) {
    if (state.epochs_since_improvement >= cfg.plateau_patience) {
      if (state.drops_done < cfg.max_drops) {
        ++state.drops_done;
        state.epochs_since_improvement = 0;
        r.dropped = true;
      } else {
        r.stop = true;
      }
    }
  } else {
    for (std::size_t e : cfg.drop_epochs) {
      if (e == state.epoch && state.drops_done < cfg.max_drops) {
        ++state.drops_done;
        r.dropped = true;
      }
    }
  }
  state.lr = cfg.lr0 / std::pow(cfg.drop_factor, static_cast<double>(state.drops_done));
  if (state.epoch >= cfg.max_epochs) r.stop = true;
  return r;
}

EvalResult evaluate(const Network& net, const Dataset& data, std::size_t batch) {
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  if (batch == 0) batch = 256;
  ForwardContext ctx;
  ctx.mode = Mode::eval;
  EvalResult r;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < data.size(); first += batch) {
    const std::size_t count = std::min(batch, data.size() - first);
    const Tensor4 images = data.images.slice_batch(first, count);
    const auto labels = std::span<const Label>(data.labels).subspan(first, count);
    const Tensor4 logits = net.forward(images, ctx).logits;
    loss_sum += softmax_xent(logits, labels, 1).loss;
    const auto predicted = argmax_rows(logits);
    for (std::size_t i = 0; i < count; ++i) correct += predicted[i] == labels[i];
  }
  r.count = data.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  r.loss = loss_sum / static_cast<double>(data.size());
  return r;
}

std::string format_metrics_row(const EpochMetrics& m) {
  char buf[256];
  char val_loss[32] = "";
  char val_acc[32] = "";
  if (m.val_loss) std::snprintf(val_loss, sizeof(val_loss), "%.9f", *m.val_loss);
  if (m.val_accuracy) std::snprintf(val_acc, sizeof(val_acc), "%.6f", *m.val_accuracy);
  std::snprintf(buf, sizeof(buf), "%llu,%.9g,%.9f,%.6f,%s,%s,%.3f",
                static_cast<unsigned long long>(m.epoch), m.lr, m.train_loss, m.train_accuracy,
                val_loss, val_acc, m.seconds);
  return buf;
}

TrainState train(Network& net, const Dataset& train_set, const Dataset* val_set,
                 const TrainOptions& options, TrainState state) {
  const SgdConfig& cfg = options.sgd;
  cfg.validate();
  train_set.validate();
  const std::size_t measure_count =
      options.train_measure == 0 ? train_set.size()
                                 : std::min(options.train_measure, train_set.size());
  const Dataset measure = train_set.head(measure_count);

  std::optional<std::filesystem::path> metrics_path;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    metrics_path = *options.out_dir / "metrics.csv";
    // On resume keep only the rows the checkpoint has already seen, so a
    // crash after the last checkpoint cannot leave duplicate epochs behind.
    std::string kept = std::string(kMetricsHeader) + '\n';
    if (state.epoch > 0 && std::filesystem::exists(*metrics_path)) {
      std::ifstream old(*metrics_path);
      std::string line;
      std::getline(old, line);
      while (std::getline(old, line)) {
        if (std::strtoull(line.c_str(), nullptr, 10) <= state.epoch) kept += line + '\n';
      }
    }
    std::ofstream header(*metrics_path, std::ios::trunc);
    if (!header) throw DataError("cannot write " + metrics_path->string());
    header << kept;
  }

  auto params = net.parameters();
  while (!state.finished && state.epoch < cfg.max_epochs) {
    const auto started = std::chrono::steady_clock::now();
    const double epoch_lr = state.lr;
    BatchIterator batches(train_set, cfg.batch, state.seed, state.epoch, true,
                          options.augmentation);
    while (auto b = batches.next()) {
      ForwardContext ctx{Mode::train, state.seed, state.step, 0};
      auto result = net.compute_gradients(b->images, b->labels, ctx, options.workers);
      if (!std::isfinite(result.loss)) {
        throw Error("training diverged: non-finite loss at step " + std::to_string(state.step));
      }
      sgd_step(params, result.grads, state.lr, cfg);
      ++state.step;
    }
    ++state.epoch;

    const EvalResult tr = evaluate(net, measure, options.eval_batch);
    std::optional<EvalResult> va;
    if (val_set) va = evaluate(net, *val_set, options.eval_batch);
    const TickResult tick = schedule_tick(state, cfg, tr.accuracy);
    if (tick.stop && state.epoch < cfg.max_epochs) state.finished = true;

    EpochMetrics m;
    m.epoch = state.epoch;
    m.lr = epoch_lr;
    m.train_loss = tr.loss;
    m.train_accuracy = tr.accuracy;
    if (va) {
      m.val_loss = va->loss;
      m.val_accuracy = va->accuracy;
    }
    if (options.record_time) {
      m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                      .count();
    }

    const double score = va ? va->accuracy : tr.accuracy;
    const bool best = score > state.best_val_accuracy;
    if (best) state.best_val_accuracy = score;

    if (options.out_dir) {
      std::ofstream rows(*metrics_path, std::ios::app);
      rows << format_metrics_row(m) << '\n';
      if (!rows) throw DataError("cannot append to " + metrics_path->string());
      save_checkpoint(*options.out_dir / "last.ckpt", net, state);
      if (best) save_checkpoint(*options.out_dir / "best.ckpt", net, state);
    }
    if (options.on_epoch) options.on_epoch(m);
  }
  return state;
}

NINKIT_END_NAMESPACE
