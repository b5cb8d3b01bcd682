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

#ifndef NINKIT_TENSOR_HPP_
#define NINKIT_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ninkit/common.hpp"
#include "ninkit/rng.hpp"

NINKIT_BEGIN_NAMESPACE

/// Extents of a batch x channel x height x width array.
struct Dims {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t count() const { return n * c * h * w; }
  /// Elements per batch item.
  std::size_t sample_count() const { return c * h * w; }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  std::string str() const;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense 4-D array in (n, c, h, w) row-major layout.
///
/// A default-constructed tensor is empty (all dims 0); every factory requires
/// dims >= 1. Copies are deep.
class Tensor4 {
 public:
  Tensor4() = default;

  static Tensor4 zeros(Dims dims);
  static Tensor4 fill(Dims dims, Real value);
  static Tensor4 from_slice(Dims dims, std::span<const Real> values);
  /// Same dims as `like`, all zeros.
  static Tensor4 zeros_like(const Tensor4& like) { return zeros(like.dims()); }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * dims_.c + c) * dims_.h + h) * dims_.w + w;
  }
  Real& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[offset(n, c, h, w)];
  }
  Real operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[offset(n, c, h, w)];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  /// Elements of batch item n.
  std::span<Real> sample(std::size_t n) {
    return std::span<Real>(data_).subspan(n * dims_.sample_count(), dims_.sample_count());
  }
  std::span<const Real> sample(std::size_t n) const {
    return std::span<const Real>(data_).subspan(n * dims_.sample_count(),
                                                dims_.sample_count());
  }

  /// Copies batch items [first, first + count) into a new tensor.
  Tensor4 slice_batch(std::size_t first, std::size_t count) const;

  /// Returns the same data with new dims of equal element count.
  Tensor4 reshaped(Dims dims) const;

  std::vector<Real> flatten() const { return data_; }

  void set_zero();
  bool all_finite() const;

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  Tensor4(Dims dims, std::vector<Real> data) : dims_(dims), data_(std::move(data)) {}

  Dims dims_;
  std::vector<Real> data_;
};

Tensor4 add(const Tensor4& a, const Tensor4& b);
Tensor4 sub(const Tensor4& a, const Tensor4& b);
Tensor4 scale(const Tensor4& a, Real s);
Tensor4 hadamard(const Tensor4& a, const Tensor4& b);

/// y += alpha * x, in place on y.
void axpy(Real alpha, const Tensor4& x, Tensor4& y);

/// i.i.d. N(0, std^2) entries, drawn in flat order from `rng`.
Tensor4 gaussian(Rng& rng, Dims dims, Real std);

/// Largest |a - b| over all elements; dims must match.
double max_abs_diff(const Tensor4& a, const Tensor4& b);

/// Checkpoint encoding: four little-endian u32 dims, then the elements as
/// little-endian IEEE values of width sizeof(Real). read_tensor takes the
/// width the data was written with (4 or 8 bytes).
void write_tensor(std::ostream& out, const Tensor4& t);
Tensor4 read_tensor(std::istream& in, std::uint32_t width = sizeof(Real));

NINKIT_END_NAMESPACE

#endif  // NINKIT_TENSOR_HPP_
