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

#include "ninkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

#include "ninkit/binary_io.hpp"

NINKIT_BEGIN_NAMESPACE

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;  // "shuf"
constexpr std::uint64_t kAugmentStream = 0x61756721ULL;
constexpr char kDatasetMagic[8] = {'N', 'I', 'N', 'D', 'S', 'E', 'T', '1'};

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::string hex32(std::uint32_t v) {
  std::ostringstream out;
  out << "0x" << std::hex;
  out.width(8);
  out.fill('0');
  out << v;
  return out.str();
}

}  // namespace

void Dataset::validate() const {
  if (images.dims().n != labels.size()) {
    throw DataError("dataset has " + std::to_string(images.dims().n) + " images but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                      " is outside [0, " + std::to_string(classes) + ")");
    }
  }
  if (!images.all_finite()) throw DataError("dataset contains non-finite pixels");
}

Dataset Dataset::head(std::size_t count) const {
  Dataset out;
  out.images = images.slice_batch(0, count);
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  out.classes = classes;
  out.split = split;
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("subset: empty index list");
  Dims d = images.dims();
  d.n = indices.size();
  Dataset out;
  out.images = Tensor4::zeros(d);
  out.classes = classes;
  out.split = split;
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw DataError("subset: index out of range");
    auto src = images.sample(indices[i]);
    std::copy(src.begin(), src.end(), out.images.sample(i).begin());
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dims da = a.images.dims();
  const Dims& db = b.images.dims();
  if (da.c != db.c || da.h != db.h || da.w != db.w || a.classes != b.classes) {
    throw DataError("concat: datasets have different image dims or class counts");
  }
  da.n += db.n;
  Dataset out;
  out.images = Tensor4::zeros(da);
  std::copy(a.images.data().begin(), a.images.data().end(), out.images.data().begin());
  std::copy(b.images.data().begin(), b.images.data().end(),
            out.images.data().begin() + static_cast<std::ptrdiff_t>(a.images.size()));
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.classes = a.classes;
  out.split = a.split;
  return out;
}

// ------------------------------------------------------------------ loaders

Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, bool scale) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw DataError(images_path.string() + ": truncated IDX header");
  if (lab.size() < 8) throw DataError(labels_path.string() + ": truncated IDX header");

  const std::uint32_t img_magic = binio::read_be32(img.data());
  if (img_magic != 0x00000803) {
    throw DataError(images_path.string() + ": bad IDX image magic " + hex32(img_magic) +
                    " (expected 0x00000803)");
  }
  const std::uint32_t lab_magic = binio::read_be32(lab.data());
  if (lab_magic != 0x00000801) {
    throw DataError(labels_path.string() + ": bad IDX label magic " + hex32(lab_magic) +
                    " (expected 0x00000801)");
  }
  const std::size_t n = binio::read_be32(img.data() + 4);
  const std::size_t rows = binio::read_be32(img.data() + 8);
  const std::size_t cols = binio::read_be32(img.data() + 12);
  const std::size_t n_labels = binio::read_be32(lab.data() + 4);
  if (n == 0 || rows == 0 || cols == 0) throw DataError(images_path.string() + ": empty IDX");
  if (img.size() != 16 + n * rows * cols) {
    throw DataError(images_path.string() + ": expected " + std::to_string(16 + n * rows * cols) +
                    " bytes, file has " + std::to_string(img.size()));
  }
  if (lab.size() != 8 + n_labels) {
    throw DataError(labels_path.string() + ": expected " + std::to_string(8 + n_labels) +
                    " bytes, file has " + std::to_string(lab.size()));
  }
  if (n != n_labels) {
    throw DataError("image/label count mismatch: " + std::to_string(n) + " images vs " +
                    std::to_string(n_labels) + " labels");
  }

  Dataset d;
  d.classes = 10;
  d.images = Tensor4::zeros({n, 1, rows, cols});
  const Real k = scale ? Real{1} / Real{255} : Real{1};
  for (std::size_t i = 0; i < n * rows * cols; ++i) {
    d.images[i] = static_cast<Real>(img[16 + i]) * k;
  }
  d.labels.assign(lab.begin() + 8, lab.end());
  d.validate();
  return d;
}

Dataset load_records(std::span<const std::filesystem::path> paths, std::size_t label_bytes,
                     std::size_t label_index, Dims pixel_dims, std::size_t classes) {
  if (paths.empty()) throw DataError("no record files given");
  if (label_index >= label_bytes) throw DataError("label index outside label bytes");
  const std::size_t pixels = pixel_dims.c * pixel_dims.h * pixel_dims.w;
  const std::size_t record = label_bytes + pixels;

  std::vector<std::vector<unsigned char>> files;
  std::size_t total = 0;
  for (const auto& p : paths) {
    auto bytes = read_file(p);
    if (bytes.empty() || bytes.size() % record != 0) {
      throw DataError(p.string() + ": truncated record at byte offset " +
                      std::to_string(bytes.size() / record * record) + " (record size " +
                      std::to_string(record) + ", file size " + std::to_string(bytes.size()) +
                      ")");
    }
    total += bytes.size() / record;
    files.push_back(std::move(bytes));
  }

  Dataset d;
  d.classes = classes;
  d.images = Tensor4::zeros({total, pixel_dims.c, pixel_dims.h, pixel_dims.w});
  d.labels.reserve(total);
  std::size_t item = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& bytes = files[f];
    for (std::size_t off = 0; off < bytes.size(); off += record, ++item) {
      const Label label = bytes[off + label_index];
      if (label >= classes) {
        throw DataError(paths[f].string() + ": label " + std::to_string(label) +
                        " at byte offset " + std::to_string(off + label_index) +
                        " outside [0, " + std::to_string(classes) + ")");
      }
      d.labels.push_back(label);
      auto dst = d.images.sample(item);
      for (std::size_t i = 0; i < pixels; ++i) {
        dst[i] = static_cast<Real>(bytes[off + label_bytes + i]) / Real{255};
      }
    }
  }
  return d;
}

Dataset load_cifar(std::span<const std::filesystem::path> paths, std::size_t classes) {
  if (classes == 10) return load_records(paths, 1, 0, {1, 3, 32, 32}, 10);
  if (classes == 100) return load_records(paths, 2, 1, {1, 3, 32, 32}, 100);
  throw DataError("CIFAR class count must be 10 or 100, got " + std::to_string(classes));
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  d.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  const Dims& dims = d.images.dims();
  for (std::size_t v : {dims.n, dims.c, dims.h, dims.w, d.classes}) {
    binio::put_u32(out, static_cast<std::uint32_t>(v));
  }
  for (Label l : d.labels) binio::put_u32(out, l);
  for (Real v : d.images.data()) binio::put_f32(out, static_cast<float>(v));
  if (!out) throw DataError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[sizeof(kDatasetMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kDatasetMagic)) {
    throw DataError(path.string() + ": not a NINDSET1 dataset file");
  }
  Dims dims;
  dims.n = binio::get_u32(in, "dataset header");
  dims.c = binio::get_u32(in, "dataset header");
  dims.h = binio::get_u32(in, "dataset header");
  dims.w = binio::get_u32(in, "dataset header");
  Dataset d;
  d.classes = binio::get_u32(in, "dataset header");
  if (!dims.valid() || d.classes == 0) throw DataError(path.string() + ": corrupt header");
  d.labels.resize(dims.n);
  for (Label& l : d.labels) l = binio::get_u32(in, "dataset labels");
  d.images = Tensor4::zeros(dims);
  for (Real& v : d.images.data()) v = binio::get_f32(in, "dataset pixels");
  d.validate();
  return d;
}

// ------------------------------------------------------------------- splits

std::pair<Dataset, Dataset> split_validation(const Dataset& d, std::size_t n_tail) {
  if (n_tail == 0) throw DataError("split_validation: validation set would be empty");
  if (n_tail >= d.size()) {
    throw DataError("split_validation: n_tail " + std::to_string(n_tail) +
                    " must be smaller than dataset size " + std::to_string(d.size()));
  }
  const std::size_t keep = d.size() - n_tail;
  std::vector<std::size_t> head(keep), tail(n_tail);
  std::iota(head.begin(), head.end(), 0);
  std::iota(tail.begin(), tail.end(), keep);
  Dataset train = d.subset(head);
  Dataset val = d.subset(tail);
  train.split = "train";
  val.split = "val";
  return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> stratified_validation(const Dataset& train, const Dataset* extra,
                                                  std::size_t per_class_train,
                                                  std::size_t per_class_extra,
                                                  std::uint64_t seed) {
  auto pick = [&](const Dataset& d, std::size_t per_class, std::uint64_t stream,
                  std::vector<std::size_t>& held, std::vector<std::size_t>& kept) {
    std::map<Label, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < d.size(); ++i) by_class[d.labels[i]].push_back(i);
    std::vector<char> is_held(d.size(), 0);
    Rng rng(seed, stream);
    for (auto& [label, idx] : by_class) {
      if (idx.size() < per_class) {
        throw DataError("stratified_validation: class " + std::to_string(label) + " has only " +
                        std::to_string(idx.size()) + " items, need " +
                        std::to_string(per_class));
      }
      Rng r = rng.split(label);
      for (std::size_t i = 0; i < per_class; ++i) {
        std::swap(idx[i], idx[i + r.below(idx.size() - i)]);
        is_held[idx[i]] = 1;
      }
    }
    for (std::size_t i = 0; i < d.size(); ++i) (is_held[i] ? held : kept).push_back(i);
  };

  std::vector<std::size_t> held, kept;
  pick(train, per_class_train, 1, held, kept);
  Dataset val = train.subset(held);
  Dataset rest = train.subset(kept);
  if (extra) {
    std::vector<std::size_t> xheld, xkept;
    pick(*extra, per_class_extra, 2, xheld, xkept);
    val = concat(val, extra->subset(xheld));
    rest = concat(rest, extra->subset(xkept));
  }
  rest.split = "train";
  val.split = "val";
  return {std::move(rest), std::move(val)};
}

// ----------------------------------------------------------------- batching

void translate_image(Tensor4& images, std::size_t n, std::ptrdiff_t dy, std::ptrdiff_t dx) {
  if (dy == 0 && dx == 0) return;
  const Dims& d = images.dims();
  const auto h = static_cast<std::ptrdiff_t>(d.h);
  const auto w = static_cast<std::ptrdiff_t>(d.w);
  std::vector<Real> src(images.sample(n).begin(), images.sample(n).end());
  auto dst = images.sample(n);
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        const std::ptrdiff_t sy = y - dy;
        const std::ptrdiff_t sx = x - dx;
        const std::size_t o = (c * d.h + static_cast<std::size_t>(y)) * d.w +
                              static_cast<std::size_t>(x);
        dst[o] = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                     ? src[(c * d.h + static_cast<std::size_t>(sy)) * d.w +
                           static_cast<std::size_t>(sx)]
                     : Real{0};
      }
    }
  }
}

void flip_image(Tensor4& images, std::size_t n) {
  const Dims& d = images.dims();
  auto s = images.sample(n);
  for (std::size_t row = 0; row < d.c * d.h; ++row) {
    std::reverse(s.begin() + static_cast<std::ptrdiff_t>(row * d.w),
                 s.begin() + static_cast<std::ptrdiff_t>((row + 1) * d.w));
  }
}

BatchIterator::BatchIterator(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                             std::uint64_t epoch, bool shuffle, Augmentation augmentation)
    : data_(&data),
      batch_size_(batch_size),
      seed_(seed),
      epoch_(epoch),
      augmentation_(augmentation),
      order_(data.size()) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), 0);
  if (shuffle) {
    Rng rng = Rng(seed, kShuffleStream).split(epoch);
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.below(i)]);
    }
  }
}

std::size_t BatchIterator::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchIterator::next() {
  if (position_ >= order_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, order_.size() - position_);
  Batch b;
  b.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(position_),
                   order_.begin() + static_cast<std::ptrdiff_t>(position_ + count));
  Dims d = data_->images.dims();
  d.n = count;
  b.images = Tensor4::zeros(d);
  b.labels.reserve(count);
  const Rng aug_root = Rng(seed_, kAugmentStream).split(epoch_);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = b.indices[i];
    auto from = data_->images.sample(src);
    std::copy(from.begin(), from.end(), b.images.sample(i).begin());
    b.labels.push_back(data_->labels[src]);
    if (augmentation_.enabled()) {
      Rng rng = aug_root.split(position_ + i);
      const auto t = static_cast<std::int64_t>(augmentation_.translate);
      const std::int64_t dy = rng.between(-t, t);
      const std::int64_t dx = rng.between(-t, t);
      const bool flip = rng.uniform() < augmentation_.flip_probability;
      translate_image(b.images, i, dy, dx);
      if (flip) flip_image(b.images, i);
    }
  }
  position_ += count;
  return b;
}

NINKIT_END_NAMESPACE
