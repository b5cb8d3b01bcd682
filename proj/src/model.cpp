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

#include "ninkit/model.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

NINKIT_BEGIN_NAMESPACE

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<LayerKind> kind_from_name(const std::string& name) {
  static const std::map<std::string, LayerKind> kinds = {
      {"conv", LayerKind::conv},       {"convolution", LayerKind::conv},
      {"cccp", LayerKind::cccp},       {"relu", LayerKind::relu},
      {"pool", LayerKind::pool},       {"pooling", LayerKind::pool},
      {"dropout", LayerKind::dropout}, {"fc", LayerKind::fc},
      {"gap", LayerKind::gap},
  };
  auto it = kinds.find(name);
  if (it == kinds.end()) return std::nullopt;
  return it->second;
}

/// key=value attributes of one line, consumed as they are read so leftovers
/// can be reported as unknown.
class Attributes {
 public:
  Attributes(const std::vector<std::string>& tokens, std::size_t line) : line_(line) {
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const auto eq = tokens[i].find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == tokens[i].size()) {
        throw ConfigError(line, "expected key=value, got '" + tokens[i] + "'");
      }
      auto key = lower(std::string_view(tokens[i]).substr(0, eq));
      if (!values_.emplace(key, tokens[i].substr(eq + 1)).second) {
        throw ConfigError(line, "duplicate attribute '" + key + "'");
      }
    }
  }

  std::optional<std::size_t> count(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc() || ptr != raw->data() + raw->size()) {
      throw ConfigError(line_, key + " must be a non-negative integer, got '" + *raw + "'");
    }
    return v;
  }

  std::size_t required_count(const std::string& key, const std::string& kind) {
    auto v = count(key);
    if (!v) throw ConfigError(line_, kind + " requires " + key + "=");
    return *v;
  }

  std::optional<double> real(const std::string& key) {
    auto raw = take(key);
    if (!raw) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc() || ptr != raw->data() + raw->size()) {
      throw ConfigError(line_, key + " must be a number, got '" + *raw + "'");
    }
    return v;
  }

  std::optional<std::string> text(const std::string& key) { return take(key); }

  void finish(const std::string& kind) const {
    if (!values_.empty()) {
      throw ConfigError(line_, "unknown attribute '" + values_.begin()->first + "' for " + kind);
    }
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  std::map<std::string, std::string> values_;
  std::size_t line_;
};

LayerSpec parse_layer(LayerKind kind, const std::string& kind_name, Attributes& attrs,
                      std::size_t line) {
  LayerSpec spec;
  spec.kind = kind;
  spec.line = line;
  switch (kind) {
    case LayerKind::conv:
      spec.kernel = attrs.required_count("kernel", kind_name);
      spec.output = attrs.required_count("output", kind_name);
      spec.pad = attrs.count("pad").value_or(0);
      spec.stride = attrs.count("stride").value_or(1);
      spec.init_std = attrs.real("init_std");
      break;
    case LayerKind::cccp:
      spec.output = attrs.required_count("output", kind_name);
      spec.init_std = attrs.real("init_std");
      break;
    case LayerKind::pool: {
      if (auto type = attrs.text("pool"); type && lower(*type) != "max") {
        throw ConfigError(line, "only max pooling is supported, got pool=" + *type);
      }
      spec.kernel = attrs.required_count("kernel", kind_name);
      spec.stride = attrs.required_count("stride", kind_name);
      break;
    }
    case LayerKind::dropout: {
      auto ratio = attrs.real("ratio");
      if (!ratio) throw ConfigError(line, "dropout requires ratio=");
      spec.ratio = *ratio;
      if (!(spec.ratio >= 0.0 && spec.ratio < 1.0)) {
        throw ConfigError(line, "dropout ratio must be in [0, 1)");
      }
      break;
    }
    case LayerKind::fc:
      spec.output = attrs.count("output").value_or(0);
      spec.init_std = attrs.real("init_std");
      break;
    case LayerKind::relu:
    case LayerKind::gap:
      break;
  }
  if (spec.init_std && !(*spec.init_std > 0.0)) {
    throw ConfigError(line, "init_std must be > 0");
  }
  attrs.finish(kind_name);
  return spec;
}

std::unique_ptr<Layer> build_layer(const LayerSpec& spec, const Dims& in, std::size_t index) {
  switch (spec.kind) {
    case LayerKind::conv:
      return std::make_unique<Conv2d>(in.c, spec.output, spec.kernel, spec.pad, spec.stride);
    case LayerKind::cccp:
      return std::make_unique<Cccp>(in.c, spec.output);
    case LayerKind::relu:
      return std::make_unique<Relu>();
    case LayerKind::pool:
      return std::make_unique<MaxPool>(spec.kernel, spec.stride);
    case LayerKind::dropout:
      return std::make_unique<Dropout>(spec.ratio, index);
    case LayerKind::fc:
      return std::make_unique<FullyConnected>(in.sample_count(), spec.output);
    case LayerKind::gap:
      return std::make_unique<GlobalAvgPool>();
  }
  throw ShapeError("unknown layer kind");
}

}  // namespace

std::optional<std::size_t> NetworkConfig::gap_index() const {
  if (!layers.empty() && layers.back().kind == LayerKind::gap) return layers.size() - 1;
  return std::nullopt;
}

std::string NetworkConfig::canonical() const {
  std::ostringstream out;
  out << "input " << channels << ' ' << height << ' ' << width << ' ' << classes << '\n';
  for (const LayerSpec& l : layers) {
    out << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv:
        out << " k" << l.kernel << " o" << l.output << " p" << l.pad << " s" << l.stride;
        break;
      case LayerKind::cccp:
      case LayerKind::fc:
        out << " o" << l.output;
        break;
      case LayerKind::pool:
        out << " k" << l.kernel << " s" << l.stride;
        break;
      case LayerKind::dropout:
        out << " r" << l.ratio;
        break;
      default:
        break;
    }
    out << '\n';
  }
  return out.str();
}

std::uint64_t NetworkConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void validate_config(NetworkConfig& config) {
  if (config.channels < 1 || config.height < 1 || config.width < 1) {
    throw ConfigError(0, "missing or invalid 'input channels=.. height=.. width=..' line");
  }
  if (config.classes < 1) throw ConfigError(0, "input line must give classes= (>= 1)");
  if (config.layers.empty()) throw ConfigError(0, "config has no layers");

  config.shapes.clear();
  Dims dims = config.input_dims(1);
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    LayerSpec& spec = config.layers[i];
    const bool last = i + 1 == config.layers.size();
    if ((spec.kind == LayerKind::gap || spec.kind == LayerKind::fc) && !last) {
      throw ConfigError(spec.line, std::string(to_string(spec.kind)) +
                                       " must be the last layer of the feature stack");
    }
    try {
      switch (spec.kind) {
        case LayerKind::conv:
          if (spec.kernel < 1 || spec.output < 1 || spec.stride < 1) {
            throw ConfigError(spec.line, "conv kernel, output and stride must be >= 1");
          }
          dims = {1, spec.output, conv_output_extent(dims.h, spec.kernel, spec.pad, spec.stride),
                  conv_output_extent(dims.w, spec.kernel, spec.pad, spec.stride)};
          break;
        case LayerKind::cccp:
          if (spec.output < 1) throw ConfigError(spec.line, "cccp output must be >= 1");
          dims.c = spec.output;
          break;
        case LayerKind::pool:
          if (spec.kernel < 1 || spec.stride < 1) {
            throw ConfigError(spec.line, "pool kernel and stride must be >= 1");
          }
          dims = {1, dims.c, pool_output_extent(dims.h, spec.kernel, spec.stride),
                  pool_output_extent(dims.w, spec.kernel, spec.stride)};
          break;
        case LayerKind::gap:
          if (dims.c != config.classes) {
            throw ConfigError(spec.line, "gap averages " + std::to_string(dims.c) +
                                             " feature maps but the network has " +
                                             std::to_string(config.classes) + " classes");
          }
          dims = {1, dims.c, 1, 1};
          break;
        case LayerKind::fc:
          if (spec.output == 0) spec.output = config.classes;
          if (spec.output != config.classes) {
            throw ConfigError(spec.line, "fc output " + std::to_string(spec.output) +
                                             " differs from class count " +
                                             std::to_string(config.classes));
          }
          dims = {1, spec.output, 1, 1};
          break;
        case LayerKind::relu:
        case LayerKind::dropout:
          break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(spec.line, e.what());
    }
    config.shapes.push_back(dims);
  }
  const LayerKind tail = config.layers.back().kind;
  if (tail != LayerKind::gap && tail != LayerKind::fc) {
    throw ConfigError(config.layers.back().line,
                      "the feature stack must end in exactly one gap or fc layer");
  }
}

NetworkConfig parse_config(std::string_view text) {
  NetworkConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  bool have_input = false;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream words(raw);
    std::vector<std::string> tokens;
    for (std::string t; words >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;

    const std::string head = lower(tokens[0]);
    Attributes attrs(tokens, line);
    if (head == "input") {
      if (have_input) throw ConfigError(line, "duplicate input line");
      have_input = true;
      config.channels = attrs.required_count("channels", head);
      if (auto size = attrs.count("size")) {
        config.height = config.width = *size;
      } else {
        config.height = attrs.required_count("height", head);
        config.width = attrs.required_count("width", head);
      }
      config.classes = attrs.required_count("classes", head);
      attrs.finish(head);
      continue;
    }
    if (head == "train") {
      config.hints.lr = attrs.real("lr");
      config.hints.momentum = attrs.real("momentum");
      config.hints.weight_decay = attrs.real("weight_decay");
      config.hints.batch = attrs.count("batch");
      attrs.finish(head);
      continue;
    }
    auto kind = kind_from_name(head);
    if (!kind) throw ConfigError(line, "unknown layer kind '" + tokens[0] + "'");
    config.layers.push_back(parse_layer(*kind, head, attrs, line));
  }
  if (!have_input) throw ConfigError(0, "missing 'input' line");
  validate_config(config);
  return config;
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), path.string() + ": " + e.detail());
  }
}

NetworkConfig with_fc_head(const NetworkConfig& config, double head_dropout) {
  if (!config.gap_index()) throw ConfigError(0, "with_fc_head: network does not end in gap");
  NetworkConfig out = config;
  const std::size_t line = out.layers.back().line;
  out.layers.pop_back();
  if (head_dropout > 0.0) {
    LayerSpec drop;
    drop.kind = LayerKind::dropout;
    drop.ratio = head_dropout;
    drop.line = line;
    out.layers.push_back(drop);
  }
  LayerSpec fc;
  fc.kind = LayerKind::fc;
  fc.output = config.classes;
  fc.line = line;
  out.layers.push_back(fc);
  validate_config(out);
  return out;
}

// ------------------------------------------------------------------- Network

Network Network::init(const NetworkConfig& config, std::uint64_t seed, double default_init_std) {
  if (!(default_init_std > 0.0)) {
    throw ArgumentError("init std must be > 0, got " + std::to_string(default_init_std));
  }
  NetworkConfig checked = config;
  validate_config(checked);

  Network net;
  net.config_ = std::move(checked);
  std::map<LayerKind, std::size_t> ordinals;
  Dims dims = net.config_.input_dims(1);
  const Rng root(seed, 0x696e6974ULL);  // "init"
  for (std::size_t i = 0; i < net.config_.layers.size(); ++i) {
    const LayerSpec& spec = net.config_.layers[i];
    auto layer = build_layer(spec, dims, i);
    layer->set_name(std::string(to_string(spec.kind)) + std::to_string(++ordinals[spec.kind]));
    auto params = layer->params();
    if (!params.empty()) {
      Rng rng = root.split(i);
      const double std = spec.init_std.value_or(default_init_std);
      params[0].value = gaussian(rng, params[0].value.dims(), static_cast<Real>(std));
    }
    dims = net.config_.shapes[i];
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Network::Network(const Network& other) : config_(other.config_), mode_(other.mode_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Network::~Network() = default;

void Network::replace_layer(std::size_t i, std::unique_ptr<Layer> layer) {
  auto& slot = layers_.at(i);
  auto old_params = slot->params();
  auto new_params = layer->params();
  if (old_params.size() != new_params.size()) {
    throw ShapeError("replace_layer: parameter count differs");
  }
  for (std::size_t p = 0; p < old_params.size(); ++p) {
    if (old_params[p].value.dims() != new_params[p].value.dims()) {
      throw ShapeError("replace_layer: parameter shape differs");
    }
  }
  if (layer->name().empty()) layer->set_name(slot->name());
  slot = std::move(layer);
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (Parameter& p : l->params()) out.push_back(&p);
  }
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    for (const Parameter& p : std::as_const(*l).params()) out.push_back(&p);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter* p : parameters()) total += p->value.size();
  return total;
}

GradientSet Network::zero_gradients() const {
  GradientSet grads;
  for (const Parameter* p : parameters()) grads.push_back(Tensor4::zeros(p->value.dims()));
  return grads;
}

Network::Pass Network::forward(const Tensor4& batch, const ForwardContext& ctx) const {
  const Dims expected = config_.input_dims(batch.dims().n);
  if (batch.dims() != expected) {
    throw ShapeError("network input " + batch.dims().str() + " does not match config " +
                     expected.str());
  }
  Pass pass;
  pass.caches.resize(layers_.size());
  Tensor4 x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, ctx, pass.caches[i]);
  }
  pass.logits = std::move(x);
  return pass;
}

Tensor4 Network::forward_prefix(const Tensor4& batch, const ForwardContext& ctx,
                                std::size_t stop) const {
  if (stop > layers_.size()) throw ShapeError("forward_prefix: stop past the last layer");
  const Dims expected = config_.input_dims(batch.dims().n);
  if (batch.dims() != expected) {
    throw ShapeError("network input " + batch.dims().str() + " does not match config " +
                     expected.str());
  }
  Tensor4 x = batch;
  for (std::size_t i = 0; i < stop; ++i) {
    LayerCache scratch;
    x = layers_[i]->forward(x, ctx, scratch);
  }
  return x;
}

GradientSet Network::backward(const Tensor4& grad_logits,
                              std::vector<LayerCache>&& caches) const {
  if (caches.size() != layers_.size()) {
    throw ShapeError("backward: cache count does not match layer count");
  }
  std::vector<LayerCache> owned = std::move(caches);
  GradientSet grads = zero_gradients();
  // Parameter slots of each layer, in parameters() order.
  std::vector<std::size_t> first_param(layers_.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    first_param[i] = next;
    next += std::as_const(*layers_[i]).params().size();
  }
  Tensor4 grad = grad_logits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::size_t count = std::as_const(*layers_[i]).params().size();
    std::span<Tensor4> slots(grads.data() + first_param[i], count);
    grad = layers_[i]->backward(grad, owned[i], slots, i > 0);
    owned[i] = LayerCache{};
  }
  return grads;
}

std::vector<Label> argmax_rows(const Tensor4& logits) {
  std::vector<Label> out(logits.dims().n);
  for (std::size_t n = 0; n < out.size(); ++n) {
    auto row = logits.sample(n);
    out[n] = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Network::BatchResult Network::compute_gradients(const Tensor4& images,
                                                std::span<const Label> labels,
                                                const ForwardContext& ctx,
                                                std::size_t workers) const {
  const std::size_t n = images.dims().n;
  if (labels.size() != n) throw ShapeError("compute_gradients: label count mismatch");
  const std::size_t chunks = (n + kGradientChunk - 1) / kGradientChunk;

  struct ChunkResult {
    double loss = 0.0;
    std::size_t correct = 0;
    GradientSet grads;
  };
  std::vector<ChunkResult> results(chunks);
  std::vector<std::exception_ptr> errors(chunks);

  auto run_chunk = [&](std::size_t c) {
    try {
      const std::size_t first = c * kGradientChunk;
      const std::size_t count = std::min(kGradientChunk, n - first);
      ForwardContext chunk_ctx = ctx;
      chunk_ctx.sample_offset = ctx.sample_offset + first;
      Pass pass = forward(images.slice_batch(first, count), chunk_ctx);
      auto loss = softmax_xent(pass.logits, labels.subspan(first, count), n);
      const auto predicted = argmax_rows(pass.logits);
      for (std::size_t i = 0; i < count; ++i) {
        if (predicted[i] == labels[first + i]) ++results[c].correct;
      }
      results[c].loss = loss.loss;
      results[c].grads = backward(loss.grad_logits, std::move(pass.caches));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(workers, 1, chunks);
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Fixed pairwise tree: level by level, chunk i absorbs chunk i + width.
  for (std::size_t width = 1; width < chunks; width *= 2) {
    for (std::size_t i = 0; i + width < chunks; i += 2 * width) {
      for (std::size_t p = 0; p < results[i].grads.size(); ++p) {
        axpy(Real{1}, results[i + width].grads[p], results[i].grads[p]);
      }
      results[i].loss += results[i + width].loss;
      results[i].correct += results[i + width].correct;
    }
  }
  BatchResult out;
  out.loss = results[0].loss;
  out.correct = results[0].correct;
  out.grads = std::move(results[0].grads);
  return out;
}

NINKIT_END_NAMESPACE
