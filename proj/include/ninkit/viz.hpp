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

#ifndef NINKIT_VIZ_HPP_
#define NINKIT_VIZ_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/model.hpp"
#include "ninkit/tensor.hpp"

NINKIT_BEGIN_NAMESPACE

/// Category confidence maps of one image: the activations entering the
/// terminal gap layer.
struct FeatureMapDump {
  Tensor4 image;  // (1, c, h, w)
  Tensor4 maps;   // (1, K, h', w')
  std::vector<Real> logits;
  Label ground_truth = 0;
  Label predicted = 0;
};

/// Runs `image` (batch of one) through a gap-terminated network in eval mode
/// and captures the gap input. Throws if the network does not end in gap, or
/// if GAP(maps) disagrees with the logits of a full forward pass.
FeatureMapDump extract_maps(const Network& net, const Tensor4& image, Label ground_truth);

/// Number of cells kept by a top-fraction threshold: ceil(fraction * cells),
/// at least 1. fraction must be in (0, 1].
std::size_t threshold_keep_count(std::size_t cells, double fraction);

/// Flat indices of the kept cells, largest values first; equal values keep
/// row-major order.
std::vector<std::size_t> top_indices(std::span<const Real> map, double fraction);

/// Copy of `map` with everything outside the top fraction set to zero.
std::vector<Real> threshold_top(std::span<const Real> map, double fraction);

enum class ThresholdScope {
  /// Each category map keeps its own top fraction.
  map,
  /// The top fraction is taken over all category maps of the panel jointly.
  panel,
};

struct PanelOptions {
  double fraction = 0.10;
  ThresholdScope scope = ThresholdScope::map;
  std::size_t cell = 64;
  std::size_t gutter = 4;
  std::size_t border = 2;
};

/// 8-bit RGB image.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Lays out the input image followed by the K thresholded maps in one row of
/// cells, each `cell` pixels square and followed by a `gutter`. Every map is
/// min-max normalized on its own and bilinearly upscaled. The ground-truth
/// category's cell gets a green border. Width is (K + 1) * (cell + gutter),
/// height is cell + gutter.
Raster render_panel(const FeatureMapDump& dump, const PanelOptions& options = {});

/// Binary PPM (P6).
void write_ppm(const Raster& raster, const std::filesystem::path& path);

/// Bilinear resize of one h x w plane to out_h x out_w (pixel-center
/// aligned, edge clamped).
std::vector<double> resize_bilinear(std::span<const double> plane, std::size_t h, std::size_t w,
                                    std::size_t out_h, std::size_t out_w);

/// Merges metrics.csv files into long-format rows `run,epoch,split,error`
/// with error = 1 - accuracy, one row per epoch and split present. The run
/// name is the file's parent directory name, made unique with a suffix.
/// Returns the number of data rows written.
std::size_t export_curves(std::span<const std::filesystem::path> metrics_files,
                          const std::filesystem::path& out_csv);

NINKIT_END_NAMESPACE

#endif  // NINKIT_VIZ_HPP_
