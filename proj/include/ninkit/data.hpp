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

#ifndef NINKIT_DATA_HPP_
#define NINKIT_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/layers.hpp"
#include "ninkit/rng.hpp"
#include "ninkit/tensor.hpp"

NINKIT_BEGIN_NAMESPACE

/// Decoded images with one label each.
struct Dataset {
  Tensor4 images;
  std::vector<Label> labels;
  std::size_t classes = 0;
  std::string split;

  std::size_t size() const { return labels.size(); }
  /// Checks labels.size() == N, labels < classes and finite pixels.
  void validate() const;
  /// Items [first, first + count) in order.
  Dataset head(std::size_t count) const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Concatenates along the batch axis; image dims and class counts must agree.
Dataset concat(const Dataset& a, const Dataset& b);

// ------------------------------------------------------------------ loaders

/// MNIST IDX pair (magic 0x00000803 images, 0x00000801 labels, big-endian
/// dims). Pixels are scaled to [0, 1] when `scale` is set.
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, bool scale = true);

/// CIFAR binary batches. classes == 10: 3073-byte records (label, pixels);
/// classes == 100: 3074-byte records (coarse, fine), the fine label is used.
/// Pixels are scaled to [0, 1].
Dataset load_cifar(std::span<const std::filesystem::path> paths, std::size_t classes);

/// Generic raw-record reader: each record is `label_bytes` label bytes
/// followed by c*h*w pixel bytes in (c, h, w) order. The label is byte
/// `label_index`. SVHN converted to CIFAR-10 layout uses (1, 0, 3, 32, 32).
Dataset load_records(std::span<const std::filesystem::path> paths, std::size_t label_bytes,
                     std::size_t label_index, Dims pixel_dims, std::size_t classes);

/// Preprocessed dataset file ("NINDSET1"): magic, u32 n, c, h, w, classes,
/// n u32 labels, then n*c*h*w float32 pixels, all little-endian.
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// ------------------------------------------------------------------- splits

/// Last `n_tail` items in file order become validation; no shuffling.
std::pair<Dataset, Dataset> split_validation(const Dataset& d, std::size_t n_tail);

/// Stratified hold-out: `per_class_train` items of every class from `train`
/// and `per_class_extra` from `extra` form the validation set; the remainders
/// of both form the training set. Selection is a seeded shuffle per class.
std::pair<Dataset, Dataset> stratified_validation(const Dataset& train, const Dataset* extra,
                                                  std::size_t per_class_train,
                                                  std::size_t per_class_extra,
                                                  std::uint64_t seed);

// -------------------------------------------------------------- preprocessing

struct GcnOptions {
  double scale = 55.0;
  double sqrt_bias = 10.0;
  double min_divisor = 1e-8;
};

/// Global contrast normalization of every image: subtract the image mean,
/// then multiply by scale / max(sqrt(sqrt_bias + mean(x^2)), min_divisor).
void gcn(Tensor4& images, const GcnOptions& options = {});

/// ZCA whitening transform. W = U (L + eps I)^(-1/2) U^T of the training
/// covariance, stored in double precision and symmetric by construction.
class ZcaModel {
 public:
  ZcaModel() = default;

  /// Fits on the given (training) images only. Dimension = c*h*w.
  static ZcaModel fit(const Tensor4& images, double epsilon = 1e-5);

  bool fitted() const { return dim_ > 0; }
  std::size_t dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  std::span<const double> mean() const { return mean_; }
  /// Row-major dim x dim whitening matrix.
  std::span<const double> matrix() const { return matrix_; }

  /// Subtracts the stored mean and multiplies by W; never re-estimates.
  void apply(Tensor4& images) const;

  void save(const std::filesystem::path& path) const;
  static ZcaModel load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  double epsilon_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> matrix_;
};

struct LcnOptions {
  std::size_t kernel = 7;
  /// Gaussian sigma; <= 0 means kernel / 4.
  double sigma = 0.0;
  /// Divisors below this are treated as 1 (flat images).
  double min_divisor = 1e-4;
};

/// Local contrast normalization per image and channel: subtract the
/// Gaussian-weighted local mean, then divide by max(local weighted std,
/// image mean of that std). Weights are renormalized at borders.
void lcn(Tensor4& images, const LcnOptions& options = {});

/// Normalized 1-D Gaussian taps for `lcn`.
std::vector<double> gaussian_taps(std::size_t kernel, double sigma);

// ----------------------------------------------------------------- batching

struct Augmentation {
  /// Maximum shift in pixels; offsets are uniform in [-translate, translate]
  /// with zero fill.
  std::size_t translate = 0;
  /// Probability of a horizontal flip.
  double flip_probability = 0.0;

  bool enabled() const { return translate > 0 || flip_probability > 0.0; }
};

/// Shifts image n by (dy, dx) in place, filling vacated pixels with zero.
void translate_image(Tensor4& images, std::size_t n, std::ptrdiff_t dy, std::ptrdiff_t dx);
/// Mirrors image n left-right in place.
void flip_image(Tensor4& images, std::size_t n);

struct Batch {
  Tensor4 images;
  std::vector<Label> labels;
  /// Dataset indices of the items, in batch order.
  std::vector<std::size_t> indices;
};

/// Serves one epoch of mini-batches. The visiting order and augmentation
/// draws are functions of (seed, epoch) only; the final short batch is kept.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                std::uint64_t epoch, bool shuffle = true, Augmentation augmentation = {});

  std::optional<Batch> next();
  std::size_t batches_per_epoch() const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_;
  Augmentation augmentation_;
  std::vector<std::size_t> order_;
  std::size_t position_ = 0;
};

NINKIT_END_NAMESPACE

#endif  // NINKIT_DATA_HPP_
