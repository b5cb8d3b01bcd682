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

#include "ninkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ninkit/binary_io.hpp"

NINKIT_BEGIN_NAMESPACE

namespace {

void require_valid(const Dims& dims) {
  if (!dims.valid()) {
    throw ShapeError("tensor dims must all be >= 1, got " + dims.str());
  }
}

void require_same(const Tensor4& a, const Tensor4& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.dims().str() + " vs " +
                     b.dims().str());
  }
}

}  // namespace

std::string Dims::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor4 Tensor4::zeros(Dims dims) {
  require_valid(dims);
  return Tensor4(dims, std::vector<Real>(dims.count(), Real{0}));
}

Tensor4 Tensor4::fill(Dims dims, Real value) {
  require_valid(dims);
  return Tensor4(dims, std::vector<Real>(dims.count(), value));
}

Tensor4 Tensor4::from_slice(Dims dims, std::span<const Real> values) {
  require_valid(dims);
  if (values.size() != dims.count()) {
    throw ShapeError("from_slice: " + std::to_string(values.size()) +
                     " values for dims " + dims.str());
  }
  return Tensor4(dims, std::vector<Real>(values.begin(), values.end()));
}

Tensor4 Tensor4::slice_batch(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > dims_.n) {
    throw ShapeError("slice_batch: range [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside batch of " +
                     std::to_string(dims_.n));
  }
  Dims d = dims_;
  d.n = count;
  const std::size_t per = dims_.sample_count();
  auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * per);
  return Tensor4(d, std::vector<Real>(begin, begin + static_cast<std::ptrdiff_t>(count * per)));
}

Tensor4 Tensor4::reshaped(Dims dims) const {
  require_valid(dims);
  if (dims.count() != data_.size()) {
    throw ShapeError("reshape " + dims_.str() + " -> " + dims.str() + " changes element count");
  }
  return Tensor4(dims, data_);
}

void Tensor4::set_zero() { std::fill(data_.begin(), data_.end(), Real{0}); }

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "add");
  Tensor4 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor4 sub(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "sub");
  Tensor4 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor4 scale(const Tensor4& a, Real s) {
  Tensor4 out = a;
  for (Real& v : out.data()) v *= s;
  return out;
}

Tensor4 hadamard(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "hadamard");
  Tensor4 out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

void axpy(Real alpha, const Tensor4& x, Tensor4& y) {
  require_same(x, y, "axpy");
  Real* py = y.raw();
  const Real* px = x.raw();
  for (std::size_t i = 0; i < y.size(); ++i) py[i] += alpha * px[i];
}

Tensor4 gaussian(Rng& rng, Dims dims, Real std) {
  if (!(std > 0)) {
    throw ArgumentError("gaussian: std must be > 0, got " + std::to_string(std));
  }
  Tensor4 out = Tensor4::zeros(dims);
  for (Real& v : out.data()) v = static_cast<Real>(rng.normal() * std);
  return out;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

void write_tensor(std::ostream& out, const Tensor4& t) {
  const Dims& d = t.dims();
  binio::put_u32(out, static_cast<std::uint32_t>(d.n));
  binio::put_u32(out, static_cast<std::uint32_t>(d.c));
  binio::put_u32(out, static_cast<std::uint32_t>(d.h));
  binio::put_u32(out, static_cast<std::uint32_t>(d.w));
  for (Real v : t.data()) {
    if constexpr (kRealIsDouble) {
      binio::put_f64(out, v);
    } else {
      binio::put_f32(out, v);
    }
  }
}

Tensor4 read_tensor(std::istream& in, std::uint32_t width) {
  if (width != 4 && width != 8) throw DataError("unsupported real width " + std::to_string(width));
  Dims d;
  d.n = binio::get_u32(in, "tensor dims");
  d.c = binio::get_u32(in, "tensor dims");
  d.h = binio::get_u32(in, "tensor dims");
  d.w = binio::get_u32(in, "tensor dims");
  if (!d.valid() || d.count() > (std::size_t{1} << 32)) {
    throw DataError("corrupt tensor header with dims " + d.str());
  }
  Tensor4 t = Tensor4::zeros(d);
  for (Real& v : t.data()) {
    if (width == 8) {
      v = static_cast<Real>(binio::get_f64(in, "tensor data"));
    } else {
      v = binio::get_f32(in, "tensor data");
    }
  }
  return t;
}

NINKIT_END_NAMESPACE
