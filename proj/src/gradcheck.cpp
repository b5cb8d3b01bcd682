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

#include "ninkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

NINKIT_BEGIN_NAMESPACE

namespace {

constexpr std::uint64_t kProbeStream = 0x67726164ULL;  // "grad"

/// sum((a - b) * r), differencing before summing so the small change in a
/// layer's output is not lost against the size of the whole objective.
double diff_dot(const Tensor4& a, const Tensor4& b, const Tensor4& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (static_cast<double>(a[i]) - static_cast<double>(b[i])) * r[i];
  }
  return s;
}

/// Which side of every kink a forward pass landed on.
struct KinkState {
  std::vector<bool> relu_active;
  std::vector<std::uint32_t> argmax;

  void record(LayerKind kind, const LayerCache& cache) {
    if (kind == LayerKind::relu) {
      for (Real v : cache.input.data()) relu_active.push_back(v > 0);
    } else if (kind == LayerKind::pool) {
      argmax.insert(argmax.end(), cache.argmax.begin(), cache.argmax.end());
    }
  }
  friend bool operator==(const KinkState&, const KinkState&) = default;
};

void score(CheckStat& stat, double analytic, double delta, bool smooth,
           const GradcheckOptions& options) {
  if (!smooth) {
    ++stat.skipped;
    return;
  }
  const double numeric = delta / (2.0 * options.step);
  stat.max_error = std::max(stat.max_error, gradcheck_error(analytic, numeric, options));
  ++stat.checked;
}

struct LayerProbe {
  Tensor4 output;
  KinkState kinks;
};

LayerProbe probe_layer(const Layer& layer, const Tensor4& x, const ForwardContext& ctx) {
  LayerCache cache;
  LayerProbe p{layer.forward(x, ctx, cache), {}};
  p.kinks.record(layer.kind(), cache);
  return p;
}

struct NetProbe {
  double loss;
  KinkState kinks;
};

NetProbe probe_network(const Network& net, const Tensor4& images, const std::vector<Label>& labels,
                       const ForwardContext& ctx) {
  auto pass = net.forward(images, ctx);
  NetProbe p{softmax_xent(pass.logits, labels).loss, {}};
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    p.kinks.record(net.layer(i).kind(), pass.caches[i]);
  }
  return p;
}

}  // namespace

double gradcheck_error(double analytic, double numeric, const GradcheckOptions& options) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), options.scale_floor});
  return std::abs(analytic - numeric) / scale;
}

void CheckStat::merge(const CheckStat& other) {
  max_error = std::max(max_error, other.max_error);
  checked += other.checked;
  skipped += other.skipped;
}

CheckStat check_layer(const Layer& layer, const Tensor4& input, const ForwardContext& ctx,
                      std::uint64_t seed, const GradcheckOptions& options) {
  Rng rng(seed, kProbeStream);
  const Tensor4 r = gaussian(rng, layer.output_dims(input.dims()), Real{1});

  LayerCache cache;
  layer.forward(input, ctx, cache);
  std::vector<Tensor4> grads;
  for (const auto& p : layer.params()) grads.push_back(Tensor4::zeros_like(p.value));
  const Tensor4 grad_x = layer.backward(r, cache, grads, true);

  CheckStat stat;
  const auto h = static_cast<Real>(options.step);
  Tensor4 x = input;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real saved = x[i];
    x[i] = saved + h;
    const auto plus = probe_layer(layer, x, ctx);
    x[i] = saved - h;
    const auto minus = probe_layer(layer, x, ctx);
    x[i] = saved;
    score(stat, grad_x[i], diff_dot(plus.output, minus.output, r), plus.kinks == minus.kinks,
          options);
  }

  auto copy = layer.clone();
  for (std::size_t p = 0; p < grads.size(); ++p) {
    Tensor4& w = copy->params()[p].value;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Real saved = w[i];
      w[i] = saved + h;
      const auto plus = probe_layer(*copy, input, ctx);
      w[i] = saved - h;
      const auto minus = probe_layer(*copy, input, ctx);
      w[i] = saved;
      score(stat, grads[p][i], diff_dot(plus.output, minus.output, r),
            plus.kinks == minus.kinks, options);
    }
  }
  return stat;
}

CheckStat check_softmax(const Tensor4& logits, const std::vector<Label>& labels,
                        const GradcheckOptions& options) {
  const auto base = softmax_xent(logits, labels);
  CheckStat stat;
  const auto h = static_cast<Real>(options.step);
  Tensor4 z = logits;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Real saved = z[i];
    z[i] = saved + h;
    const double plus = softmax_xent(z, labels).loss;
    z[i] = saved - h;
    const double minus = softmax_xent(z, labels).loss;
    z[i] = saved;
    score(stat, base.grad_logits[i], plus - minus, true, options);
  }
  return stat;
}

std::vector<CheckStat> check_network(const Network& net, const Tensor4& images,
                                     const std::vector<Label>& labels, const ForwardContext& ctx,
                                     const GradcheckOptions& options) {
  auto pass = net.forward(images, ctx);
  const auto loss = softmax_xent(pass.logits, labels);
  const GradientSet grads = net.backward(loss.grad_logits, std::move(pass.caches));

  Network work = net;
  const auto h = static_cast<Real>(options.step);
  std::vector<CheckStat> stats;
  std::size_t flat = 0;
  for (std::size_t l = 0; l < work.layer_count(); ++l) {
    auto params = work.layer(l).params();
    if (params.empty()) continue;
    CheckStat stat;
    for (auto& param : params) {
      Tensor4& w = param.value;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const Real saved = w[i];
        w[i] = saved + h;
        const auto plus = probe_network(work, images, labels, ctx);
        w[i] = saved - h;
        const auto minus = probe_network(work, images, labels, ctx);
        w[i] = saved;
        score(stat, grads[flat][i], plus.loss - minus.loss, plus.kinks == minus.kinks,
              options);
      }
      ++flat;
    }
    stats.push_back(stat);
  }
  return stats;
}

double GradcheckRow::max_error() const {
  return has_end_to_end ? std::max(local.max_error, end_to_end.max_error) : local.max_error;
}

bool GradcheckReport::passed() const { return first_failure().empty(); }

std::string GradcheckReport::first_failure() const {
  for (const auto& row : rows) {
    if (!(row.max_error() < tolerance)) return row.name;
  }
  return {};
}

std::string GradcheckReport::format() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %12s %12s %8s %8s  %s\n", "layer", "local",
                "end_to_end", "checked", "skipped", "status");
  out += buf;
  for (const auto& row : rows) {
    char e2e[32] = "-";
    if (row.has_end_to_end) std::snprintf(e2e, sizeof(e2e), "%.3e", row.end_to_end.max_error);
    const std::size_t checked = row.local.checked + row.end_to_end.checked;
    const std::size_t skipped = row.local.skipped + row.end_to_end.skipped;
    std::snprintf(buf, sizeof(buf), "%-12s %12.3e %12s %8zu %8zu  %s\n", row.name.c_str(),
                  row.local.max_error, e2e, checked, skipped,
                  row.max_error() < tolerance ? "ok" : "FAIL");
    out += buf;
  }
  return out;
}

NetworkConfig downscale_config(const NetworkConfig& config, std::size_t spatial,
                               std::size_t max_channels, std::size_t max_classes) {
  NetworkConfig small = config;
  small.height = spatial;
  small.width = spatial;
  small.classes = std::min(config.classes, max_classes);
  // The last conv/cccp before a terminal gap produces the class maps.
  std::optional<std::size_t> class_layer;
  if (const auto gap = config.gap_index()) {
    for (std::size_t i = *gap; i-- > 0;) {
      const LayerKind k = config.layers[i].kind;
      if (k == LayerKind::conv || k == LayerKind::cccp) {
        class_layer = i;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < small.layers.size(); ++i) {
    LayerSpec& spec = small.layers[i];
    if (spec.kind == LayerKind::fc || (class_layer && i == *class_layer)) {
      spec.output = small.classes;
    } else if (spec.kind == LayerKind::conv || spec.kind == LayerKind::cccp) {
      spec.output = std::min(spec.output, max_channels);
    }
  }
  validate_config(small);
  // Fan-in scaled weights keep activations near unit size at any depth, so
  // finite differences are not swamped by rounding in large outputs.
  for (std::size_t i = 0; i < small.layers.size(); ++i) {
    LayerSpec& spec = small.layers[i];
    const std::size_t in_c = i == 0 ? small.channels : small.shapes[i - 1].c;
    if (spec.kind == LayerKind::conv) {
      spec.init_std = std::sqrt(2.0 / static_cast<double>(in_c * spec.kernel * spec.kernel));
    } else if (spec.kind == LayerKind::cccp) {
      spec.init_std = std::sqrt(2.0 / static_cast<double>(in_c));
    } else if (spec.kind == LayerKind::fc) {
      const Dims& in = small.shapes[i - 1];
      spec.init_std = std::sqrt(2.0 / static_cast<double>(in.sample_count()));
    }
  }
  return small;
}

GradcheckReport gradcheck_network(const Network& net, std::uint64_t seed, std::size_t batch,
                                  const GradcheckOptions& options) {
  const NetworkConfig& config = net.config();
  Rng rng(seed, kProbeStream + 1);
  const Tensor4 images = gaussian(rng, config.input_dims(batch), Real{1});
  std::vector<Label> labels(batch);
  for (auto& label : labels) label = static_cast<Label>(rng.below(config.classes));

  ForwardContext ctx;
  ctx.mode = Mode::train;
  ctx.seed = seed;
  ctx.step = 1;

  GradcheckReport report;
  report.tolerance = options.tolerance;
  const auto end_to_end = check_network(net, images, labels, ctx, options);
  std::size_t param_layer = 0;
  Tensor4 x = images;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Layer& layer = net.layer(l);
    GradcheckRow row;
    row.name = layer.name();
    row.local = check_layer(layer, x, ctx, hash_combine(seed, l), options);
    if (!layer.params().empty()) {
      row.has_end_to_end = true;
      row.end_to_end = end_to_end[param_layer++];
    }
    report.rows.push_back(std::move(row));
    LayerCache cache;
    x = layer.forward(x, ctx, cache);
  }
  GradcheckRow loss;
  loss.name = "loss";
  loss.local = check_softmax(x, labels, options);
  report.rows.push_back(std::move(loss));
  return report;
}

GradcheckReport run_gradcheck(const NetworkConfig& config, std::uint64_t seed,
                              const GradcheckOptions& options) {
  const Network net = Network::init(downscale_config(config), seed);
  return gradcheck_network(net, seed, 2, options);
}

NINKIT_END_NAMESPACE
