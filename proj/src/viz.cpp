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

#include "ninkit/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "ninkit/layers.hpp"

NINKIT_BEGIN_NAMESPACE

FeatureMapDump extract_maps(const Network& net, const Tensor4& image, Label ground_truth) {
  const auto gap = net.config().gap_index();
  if (!gap) throw ShapeError("extract_maps: network does not end in global average pooling");
  if (image.dims().n != 1) throw ShapeError("extract_maps: expected a batch of one image");

  ForwardContext ctx;
  ctx.mode = Mode::eval;
  FeatureMapDump dump;
  dump.image = image;
  dump.ground_truth = ground_truth;
  dump.maps = net.forward_prefix(image, ctx, *gap);
  const Tensor4 logits = net.forward(image, ctx).logits;
  dump.logits = logits.flatten();

  const Tensor4 pooled = gap_forward(dump.maps);
  const double tol = kRealIsDouble ? 1e-12 : 1e-5;
  for (std::size_t k = 0; k < dump.logits.size(); ++k) {
    const double scale = std::max(1.0, std::abs(static_cast<double>(dump.logits[k])));
    if (std::abs(static_cast<double>(pooled[k]) - dump.logits[k]) > tol * scale) {
      throw Error("extract_maps: GAP of captured maps disagrees with logits at class " +
                  std::to_string(k));
    }
  }
  dump.predicted = argmax_rows(logits)[0];
  return dump;
}

std::size_t threshold_keep_count(std::size_t cells, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ArgumentError("threshold fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  // fraction * cells can land a hair above an integer (0.1 * 70); the slack
  // keeps ceil from rounding that up.
  const double exact = fraction * static_cast<double>(cells);
  auto keep = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(keep, 1, cells);
}

std::vector<std::size_t> top_indices(std::span<const Real> map, double fraction) {
  const std::size_t keep = threshold_keep_count(map.size(), fraction);
  std::vector<std::size_t> order(map.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return map[a] > map[b]; });
  order.resize(keep);
  return order;
}

std::vector<Real> threshold_top(std::span<const Real> map, double fraction) {
  std::vector<Real> out(map.size(), Real{0});
  for (std::size_t i : top_indices(map, fraction)) out[i] = map[i];
  return out;
}

std::vector<double> resize_bilinear(std::span<const double> plane, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w) {
  std::vector<double> out(out_h * out_w);
  auto coord = [](std::size_t o, std::size_t in, std::size_t out_n) {
    const double s = (static_cast<double>(o) + 0.5) * static_cast<double>(in) /
                         static_cast<double>(out_n) -
                     0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = coord(y, h, out_h);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = coord(x, w, out_w);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = plane[y0 * w + x0] * (1 - fx) + plane[y0 * w + x1] * fx;
      const double bottom = plane[y1 * w + x0] * (1 - fx) + plane[y1 * w + x1] * fx;
      out[y * out_w + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void put_pixel(Raster& r, std::size_t x, std::size_t y, std::uint8_t red, std::uint8_t green,
               std::uint8_t blue) {
  const std::size_t o = (y * r.width + x) * 3;
  r.rgb[o] = red;
  r.rgb[o + 1] = green;
  r.rgb[o + 2] = blue;
}

/// Min-max normalization to [0, 1]; a flat plane maps to zeros.
std::vector<double> normalized(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.0);
  const double range = *hi - *lo;
  if (range > 0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  }
  return out;
}

}  // namespace

Raster render_panel(const FeatureMapDump& dump, const PanelOptions& options) {
  const Dims& md = dump.maps.dims();
  const Dims& id = dump.image.dims();
  if (md.n != 1 || id.n != 1) throw ShapeError("render_panel: dump must hold one image");
  const std::size_t classes = md.c;
  const std::size_t cells = md.h * md.w;
  const std::size_t cell = options.cell;
  if (cell == 0) throw ArgumentError("render_panel: cell size must be >= 1");

  Raster r;
  r.width = (classes + 1) * (cell + options.gutter);
  r.height = cell + options.gutter;
  r.rgb.assign(r.width * r.height * 3, 32);

  // Input image: one normalization over all channels keeps colors intact.
  {
    std::vector<double> pixels(dump.image.data().begin(), dump.image.data().end());
    const auto norm = normalized(pixels);
    const std::size_t plane = id.h * id.w;
    std::vector<std::vector<double>> channels;
    for (std::size_t c = 0; c < std::min<std::size_t>(id.c, 3); ++c) {
      std::span<const double> src(norm.data() + c * plane, plane);
      channels.push_back(resize_bilinear(src, id.h, id.w, cell, cell));
    }
    for (std::size_t y = 0; y < cell; ++y) {
      for (std::size_t x = 0; x < cell; ++x) {
        const std::size_t i = y * cell + x;
        const std::uint8_t red = to_byte(channels[0][i]);
        const std::uint8_t green = to_byte(channels[channels.size() > 1 ? 1 : 0][i]);
        const std::uint8_t blue = to_byte(channels[channels.size() > 2 ? 2 : 0][i]);
        put_pixel(r, x, y, red, green, blue);
      }
    }
  }

  // Which cells survive the threshold, per map or over the whole panel.
  std::vector<std::uint8_t> kept(classes * cells, 0);
  if (options.scope == ThresholdScope::map) {
    for (std::size_t k = 0; k < classes; ++k) {
      auto map = dump.maps.data().subspan(k * cells, cells);
      for (std::size_t i : top_indices(map, options.fraction)) kept[k * cells + i] = 1;
    }
  } else {
    for (std::size_t i : top_indices(dump.maps.data(), options.fraction)) kept[i] = 1;
  }

  for (std::size_t k = 0; k < classes; ++k) {
    std::vector<double> map(dump.maps.data().begin() + static_cast<std::ptrdiff_t>(k * cells),
                            dump.maps.data().begin() + static_cast<std::ptrdiff_t>((k + 1) * cells));
    auto norm = normalized(map);
    for (std::size_t i = 0; i < cells; ++i) {
      if (!kept[k * cells + i]) norm[i] = 0.0;
    }
    const auto up = resize_bilinear(norm, md.h, md.w, cell, cell);
    const std::size_t x0 = (k + 1) * (cell + options.gutter);
    for (std::size_t y = 0; y < cell; ++y) {
      for (std::size_t x = 0; x < cell; ++x) {
        // Black -> red -> yellow -> white.
        const double t = up[y * cell + x];
        put_pixel(r, x0 + x, y, to_byte(3 * t), to_byte(3 * t - 1), to_byte(3 * t - 2));
      }
    }
    if (k == dump.ground_truth) {
      const std::size_t b = std::min(options.border, cell / 2);
      for (std::size_t y = 0; y < cell; ++y) {
        for (std::size_t x = 0; x < cell; ++x) {
          if (x < b || y < b || x + b >= cell || y + b >= cell) put_pixel(r, x0 + x, y, 0, 255, 0);
        }
      }
    }
  }
  return r;
}

void write_ppm(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P6\n" << raster.width << ' ' << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.rgb.data()),
            static_cast<std::streamsize>(raster.rgb.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::size_t export_curves(std::span<const std::filesystem::path> metrics_files,
                          const std::filesystem::path& out_csv) {
  if (metrics_files.empty()) throw ArgumentError("export_curves: no metrics files given");
  std::ostringstream rows;
  rows << "run,epoch,split,error\n";
  std::size_t written = 0;
  std::map<std::string, std::size_t> seen;
  for (const auto& path : metrics_files) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string run = path.parent_path().filename().string();
    if (run.empty()) run = path.stem().string();
    if (const std::size_t n = seen[run]++; n > 0) run += "#" + std::to_string(n + 1);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line_no == 1 && line.rfind("epoch,", 0) == 0) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
      if (!line.empty() && line.back() == ',') fields.emplace_back();
      const auto bad = [&](const std::string& why) {
        return DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
      };
      if (fields.size() != 7) throw bad("expected 7 fields, got " + std::to_string(fields.size()));
      auto number = [&](const std::string& s, const char* what) {
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != s.size()) throw bad(std::string("malformed ") + what);
        return v;
      };
      const auto epoch = static_cast<long long>(number(fields[0], "epoch"));
      char buf[128];
      const double train_acc = number(fields[3], "train_acc");
      std::snprintf(buf, sizeof(buf), "%s,%lld,train,%.6f\n", run.c_str(), epoch, 1.0 - train_acc);
      rows << buf;
      ++written;
      if (!fields[5].empty()) {
        const double val_acc = number(fields[5], "val_acc");
        std::snprintf(buf, sizeof(buf), "%s,%lld,val,%.6f\n", run.c_str(), epoch, 1.0 - val_acc);
        rows << buf;
        ++written;
      }
    }
  }
  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw DataError("cannot write " + out_csv.string());
  out << rows.str();
  return written;
}

NINKIT_END_NAMESPACE
