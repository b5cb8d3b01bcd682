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

#include "ninkit/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

NINKIT_BEGIN_NAMESPACE

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<Mat>;
using CMapMat = Eigen::Map<const Mat>;
using CMapVec = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
using MapVec = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

/// gb[r] += sum of row r of a rows x cols row-major block. A plain loop:
/// Eigen's vectorized reductions peel by address alignment, which would make
/// the summation order depend on where the heap put the buffer.
void add_row_sums(const Real* m, std::size_t rows, std::size_t cols, Real* gb) {
  for (std::size_t r = 0; r < rows; ++r) {
    Real acc = 0;
    for (std::size_t c = 0; c < cols; ++c) acc += m[r * cols + c];
    gb[r] += acc;
  }
}

struct ConvGeometry {
  std::size_t channels, height, width, kernel, pad, stride, out_h, out_w;
  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_h * out_w; }
};

void im2col(const Real* x, const ConvGeometry& g, Real* col) {
  const std::size_t cols = g.cols();
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto height = static_cast<std::ptrdiff_t>(g.height);
  const auto width = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const Real* plane = x + c * g.height * g.width;
    for (std::size_t u = 0; u < g.kernel; ++u) {
      for (std::size_t v = 0; v < g.kernel; ++v) {
        Real* row = col + ((c * g.kernel + u) * g.kernel + v) * cols;
        for (std::size_t i = 0; i < g.out_h; ++i) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * g.stride + u) - pad;
          Real* dst = row + i * g.out_w;
          if (ih < 0 || ih >= height) {
            std::fill(dst, dst + g.out_w, Real{0});
            continue;
          }
          const Real* src = plane + ih * width;
          for (std::size_t j = 0; j < g.out_w; ++j) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * g.stride + v) - pad;
            dst[j] = (iw >= 0 && iw < width) ? src[iw] : Real{0};
          }
        }
      }
    }
  }
}

void col2im_add(const Real* col, const ConvGeometry& g, Real* x) {
  const std::size_t cols = g.cols();
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto height = static_cast<std::ptrdiff_t>(g.height);
  const auto width = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    Real* plane = x + c * g.height * g.width;
    for (std::size_t u = 0; u < g.kernel; ++u) {
      for (std::size_t v = 0; v < g.kernel; ++v) {
        const Real* row = col + ((c * g.kernel + u) * g.kernel + v) * cols;
        for (std::size_t i = 0; i < g.out_h; ++i) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * g.stride + u) - pad;
          if (ih < 0 || ih >= height) continue;
          const Real* src = row + i * g.out_w;
          Real* dst = plane + ih * width;
          for (std::size_t j = 0; j < g.out_w; ++j) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * g.stride + v) - pad;
            if (iw >= 0 && iw < width) dst[iw] += src[j];
          }
        }
      }
    }
  }
}

ConvGeometry conv_geometry(const Dims& x, const Dims& w, std::size_t pad, std::size_t stride) {
  if (w.h != w.w) throw ShapeError("conv: kernel must be square, got " + w.str());
  if (x.c != w.c) {
    throw ShapeError("conv: input has " + std::to_string(x.c) + " channels, kernel expects " +
                     std::to_string(w.c));
  }
  ConvGeometry g{x.c, x.h, x.w, w.h, pad, stride, 0, 0};
  g.out_h = conv_output_extent(x.h, w.h, pad, stride);
  g.out_w = conv_output_extent(x.w, w.w, pad, stride);
  return g;
}

void check_bias(const Tensor4& bias, std::size_t out_c, const char* op) {
  if (bias.size() != out_c) {
    throw ShapeError(std::string(op) + ": bias has " + std::to_string(bias.size()) +
                     " entries, expected " + std::to_string(out_c));
  }
}

Parameter make_param(std::string name, Dims dims, bool decay) {
  Parameter p;
  p.name = std::move(name);
  p.value = Tensor4::zeros(dims);
  p.velocity = Tensor4::zeros(dims);
  p.decay = decay;
  return p;
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::cccp: return "cccp";
    case LayerKind::relu: return "relu";
    case LayerKind::pool: return "pool";
    case LayerKind::dropout: return "dropout";
    case LayerKind::fc: return "fc";
    case LayerKind::gap: return "gap";
  }
  return "?";
}

// ---------------------------------------------------------------- convolution

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t pad,
                               std::size_t stride) {
  if (kernel < 1 || stride < 1) throw ShapeError("conv: kernel and stride must be >= 1");
  if (in + 2 * pad < kernel) {
    throw ShapeError("conv: kernel " + std::to_string(kernel) + " larger than padded input " +
                     std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

Tensor4 conv2d_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias,
                       std::size_t pad, std::size_t stride) {
  const ConvGeometry g = conv_geometry(x.dims(), weights.dims(), pad, stride);
  const std::size_t out_c = weights.dims().n;
  check_bias(bias, out_c, "conv");
  Tensor4 out = Tensor4::zeros({x.dims().n, out_c, g.out_h, g.out_w});
  std::vector<Real> col(g.rows() * g.cols());
  CMapMat w(weights.raw(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(g.rows()));
  CMapVec b(bias.raw(), static_cast<Eigen::Index>(out_c));
  for (std::size_t n = 0; n < x.dims().n; ++n) {
    im2col(x.sample(n).data(), g, col.data());
    CMapMat cm(col.data(), static_cast<Eigen::Index>(g.rows()),
               static_cast<Eigen::Index>(g.cols()));
    MapMat y(out.sample(n).data(), static_cast<Eigen::Index>(out_c),
             static_cast<Eigen::Index>(g.cols()));
    y.noalias() = w * cm;
    y.colwise() += b;
  }
  return out;
}

void conv2d_backward(const Tensor4& x, const Tensor4& weights, std::size_t pad,
                     std::size_t stride, const Tensor4& grad_out, Tensor4* grad_x,
                     Tensor4& grad_weights, Tensor4& grad_bias) {
  const ConvGeometry g = conv_geometry(x.dims(), weights.dims(), pad, stride);
  const std::size_t out_c = weights.dims().n;
  const Dims expected{x.dims().n, out_c, g.out_h, g.out_w};
  if (grad_out.dims() != expected) {
    throw ShapeError("conv backward: upstream gradient " + grad_out.dims().str() +
                     ", expected " + expected.str());
  }
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const auto cols = static_cast<Eigen::Index>(g.cols());
  const auto oc = static_cast<Eigen::Index>(out_c);
  std::vector<Real> col(g.rows() * g.cols());
  std::vector<Real> grad_col(grad_x ? g.rows() * g.cols() : 0);
  CMapMat w(weights.raw(), oc, rows);
  MapMat gw(grad_weights.raw(), oc, rows);
  if (grad_x) *grad_x = Tensor4::zeros(x.dims());
  for (std::size_t n = 0; n < x.dims().n; ++n) {
    im2col(x.sample(n).data(), g, col.data());
    CMapMat cm(col.data(), rows, cols);
    CMapMat gy(grad_out.sample(n).data(), oc, cols);
    gw.noalias() += gy * cm.transpose();
    add_row_sums(grad_out.sample(n).data(), out_c, g.cols(), grad_bias.raw());
    if (grad_x) {
      MapMat gc(grad_col.data(), rows, cols);
      gc.noalias() = w.transpose() * gy;
      col2im_add(grad_col.data(), g, grad_x->sample(n).data());
    }
  }
}

// ----------------------------------------------------------------------- cccp

Tensor4 cccp_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias) {
  const Dims& d = x.dims();
  const std::size_t out_c = weights.dims().n;
  if (weights.dims().c != d.c || weights.dims().h != 1 || weights.dims().w != 1) {
    throw ShapeError("cccp: weights " + weights.dims().str() + " do not fit input " + d.str());
  }
  check_bias(bias, out_c, "cccp");
  const auto pixels = static_cast<Eigen::Index>(d.h * d.w);
  Tensor4 out = Tensor4::zeros({d.n, out_c, d.h, d.w});
  CMapMat w(weights.raw(), static_cast<Eigen::Index>(out_c), static_cast<Eigen::Index>(d.c));
  CMapVec b(bias.raw(), static_cast<Eigen::Index>(out_c));
  for (std::size_t n = 0; n < d.n; ++n) {
    CMapMat xm(x.sample(n).data(), static_cast<Eigen::Index>(d.c), pixels);
    MapMat y(out.sample(n).data(), static_cast<Eigen::Index>(out_c), pixels);
    y.noalias() = w * xm;
    y.colwise() += b;
  }
  return out;
}

void cccp_backward(const Tensor4& x, const Tensor4& weights, const Tensor4& grad_out,
                   Tensor4* grad_x, Tensor4& grad_weights, Tensor4& grad_bias) {
  const Dims& d = x.dims();
  const std::size_t out_c = weights.dims().n;
  if (grad_out.dims() != Dims{d.n, out_c, d.h, d.w}) {
    throw ShapeError("cccp backward: upstream gradient " + grad_out.dims().str());
  }
  const auto pixels = static_cast<Eigen::Index>(d.h * d.w);
  const auto oc = static_cast<Eigen::Index>(out_c);
  const auto ic = static_cast<Eigen::Index>(d.c);
  CMapMat w(weights.raw(), oc, ic);
  MapMat gw(grad_weights.raw(), oc, ic);
  if (grad_x) *grad_x = Tensor4::zeros(d);
  for (std::size_t n = 0; n < d.n; ++n) {
    CMapMat xm(x.sample(n).data(), ic, pixels);
    CMapMat gy(grad_out.sample(n).data(), oc, pixels);
    gw.noalias() += gy * xm.transpose();
    add_row_sums(grad_out.sample(n).data(), out_c, d.h * d.w, grad_bias.raw());
    if (grad_x) {
      MapMat gx(grad_x->sample(n).data(), ic, pixels);
      gx.noalias() = w.transpose() * gy;
    }
  }
}

// ----------------------------------------------------------------------- relu

Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 out = x;
  for (Real& v : out.data()) v = v > 0 ? v : Real{0};
  return out;
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out) {
  if (x.dims() != grad_out.dims()) throw ShapeError("relu backward: shape mismatch");
  Tensor4 out = grad_out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x[i] > 0)) out[i] = 0;
  }
  return out;
}

// -------------------------------------------------------------------- pooling

std::size_t pool_output_extent(std::size_t in, std::size_t kernel, std::size_t stride) {
  if (kernel < 1 || stride < 1) throw ShapeError("pool: kernel and stride must be >= 1");
  if (kernel > in) {
    throw ShapeError("pool: kernel " + std::to_string(kernel) + " larger than input extent " +
                     std::to_string(in));
  }
  std::size_t out = (in - kernel + stride - 1) / stride + 1;
  if ((out - 1) * stride >= in) --out;
  return out;
}

Tensor4 maxpool_forward(const Tensor4& x, std::size_t kernel, std::size_t stride,
                        std::vector<std::uint32_t>* argmax) {
  const Dims& d = x.dims();
  const std::size_t oh = pool_output_extent(d.h, kernel, stride);
  const std::size_t ow = pool_output_extent(d.w, kernel, stride);
  if (x.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("pool: input too large for 32-bit argmax indices");
  }
  Tensor4 out = Tensor4::zeros({d.n, d.c, oh, ow});
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const std::size_t base = x.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < oh; ++i) {
        const std::size_t h0 = i * stride;
        const std::size_t h1 = std::min(h0 + kernel, d.h);
        for (std::size_t j = 0; j < ow; ++j, ++o) {
          const std::size_t w0 = j * stride;
          const std::size_t w1 = std::min(w0 + kernel, d.w);
          std::size_t best = base + h0 * d.w + w0;
          Real best_value = x[best];
          for (std::size_t h = h0; h < h1; ++h) {
            for (std::size_t w = w0; w < w1; ++w) {
              const std::size_t idx = base + h * d.w + w;
              if (x[idx] > best_value) {
                best_value = x[idx];
                best = idx;
              }
            }
          }
          out[o] = best_value;
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return out;
}

Tensor4 maxpool_backward(const Tensor4& grad_out, std::span<const std::uint32_t> argmax,
                         const Dims& input_dims) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("pool backward: argmax table does not match upstream gradient");
  }
  Tensor4 grad_x = Tensor4::zeros(input_dims);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_x[argmax[o]] += grad_out[o];
  return grad_x;
}

// -------------------------------------------------------------------- dropout

Tensor4 dropout_mask(const Dims& dims, double ratio, std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t step, std::size_t sample_offset) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ArgumentError("dropout ratio must be in [0, 1), got " + std::to_string(ratio));
  }
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - ratio));
  Tensor4 mask = Tensor4::zeros(dims);
  const std::size_t per = dims.sample_count();
  Rng rng(seed, hash_combine(stream, step));
  for (std::size_t n = 0; n < dims.n; ++n) {
    rng.seek(static_cast<std::uint64_t>((sample_offset + n) * per));
    auto s = mask.sample(n);
    for (Real& m : s) m = rng.uniform() < ratio ? Real{0} : keep_scale;
  }
  return mask;
}

// ------------------------------------------------------------------------ gap

Tensor4 gap_forward(const Tensor4& x) {
  const Dims& d = x.dims();
  Tensor4 out = Tensor4::zeros({d.n, d.c, 1, 1});
  const std::size_t plane = d.h * d.w;
  for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
    const Real* p = x.raw() + nc * plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    out[nc] = static_cast<Real>(sum / static_cast<double>(plane));
  }
  return out;
}

Tensor4 gap_backward(const Tensor4& grad_out, const Dims& input_dims) {
  if (grad_out.dims() != Dims{input_dims.n, input_dims.c, 1, 1}) {
    throw ShapeError("gap backward: upstream gradient " + grad_out.dims().str());
  }
  Tensor4 grad_x = Tensor4::zeros(input_dims);
  const std::size_t plane = input_dims.h * input_dims.w;
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t nc = 0; nc < input_dims.n * input_dims.c; ++nc) {
    const Real g = static_cast<Real>(grad_out[nc] * inv);
    std::fill_n(grad_x.raw() + nc * plane, plane, g);
  }
  return grad_x;
}

Tensor4 gap_as_fc_weights(const Dims& input_dims) {
  const std::size_t plane = input_dims.h * input_dims.w;
  const std::size_t features = input_dims.c * plane;
  Tensor4 w = Tensor4::zeros({input_dims.c, features, 1, 1});
  const Real v = static_cast<Real>(1.0 / static_cast<double>(plane));
  for (std::size_t k = 0; k < input_dims.c; ++k) {
    for (std::size_t i = 0; i < plane; ++i) w[k * features + k * plane + i] = v;
  }
  return w;
}

// ------------------------------------------------------------------------- fc

Tensor4 fc_forward(const Tensor4& x, const Tensor4& weights, const Tensor4& bias) {
  const Dims& d = x.dims();
  const std::size_t outputs = weights.dims().n;
  const std::size_t features = weights.dims().c * weights.dims().h * weights.dims().w;
  if (d.sample_count() != features) {
    throw ShapeError("fc: input has " + std::to_string(d.sample_count()) +
                     " features per sample, weights expect " + std::to_string(features));
  }
  check_bias(bias, outputs, "fc");
  Tensor4 out = Tensor4::zeros({d.n, outputs, 1, 1});
  CMapMat xm(x.raw(), static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(features));
  CMapMat w(weights.raw(), static_cast<Eigen::Index>(outputs),
            static_cast<Eigen::Index>(features));
  MapMat y(out.raw(), static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(outputs));
  y.noalias() = xm * w.transpose();
  y.rowwise() += CMapVec(bias.raw(), static_cast<Eigen::Index>(outputs)).transpose();
  return out;
}

void fc_backward(const Tensor4& x, const Tensor4& weights, const Tensor4& grad_out,
                 Tensor4* grad_x, Tensor4& grad_weights, Tensor4& grad_bias) {
  const Dims& d = x.dims();
  const std::size_t outputs = weights.dims().n;
  const std::size_t features = d.sample_count();
  if (grad_out.dims() != Dims{d.n, outputs, 1, 1}) {
    throw ShapeError("fc backward: upstream gradient " + grad_out.dims().str());
  }
  const auto n = static_cast<Eigen::Index>(d.n);
  const auto o = static_cast<Eigen::Index>(outputs);
  const auto f = static_cast<Eigen::Index>(features);
  CMapMat xm(x.raw(), n, f);
  CMapMat w(weights.raw(), o, f);
  CMapMat gy(grad_out.raw(), n, o);
  MapMat gw(grad_weights.raw(), o, f);
  gw.noalias() += gy.transpose() * xm;
  for (std::size_t k = 0; k < outputs; ++k) {
    Real acc = 0;
    for (std::size_t i = 0; i < d.n; ++i) acc += grad_out.raw()[i * outputs + k];
    grad_bias.raw()[k] += acc;
  }
  if (grad_x) {
    *grad_x = Tensor4::zeros(d);
    MapMat gx(grad_x->raw(), n, f);
    gx.noalias() = gy * w;
  }
}

// -------------------------------------------------------------------- softmax

SoftmaxResult softmax_xent(const Tensor4& logits, std::span<const Label> labels,
                           std::size_t normalizer) {
  const Dims& d = logits.dims();
  if (d.h != 1 || d.w != 1) {
    throw ShapeError("softmax: logits must be (n, K, 1, 1), got " + d.str());
  }
  if (labels.size() != d.n) {
    throw ShapeError("softmax: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(d.n));
  }
  const std::size_t classes = d.c;
  const double norm = static_cast<double>(normalizer ? normalizer : d.n);
  SoftmaxResult r;
  r.probs = Tensor4::zeros(d);
  r.grad_logits = Tensor4::zeros(d);
  double total = 0.0;
  std::vector<double> p(classes);
  for (std::size_t n = 0; n < d.n; ++n) {
    const Label label = labels[n];
    if (label >= classes) {
      throw ArgumentError("softmax: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
    const Real* z = logits.raw() + n * classes;
    double zmax = z[0];
    for (std::size_t k = 1; k < classes; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      p[k] = std::exp(static_cast<double>(z[k]) - zmax);
      sum += p[k];
    }
    for (std::size_t k = 0; k < classes; ++k) {
      p[k] /= sum;
      r.probs[n * classes + k] = static_cast<Real>(p[k]);
      r.grad_logits[n * classes + k] =
          static_cast<Real>((p[k] - (k == label ? 1.0 : 0.0)) / norm);
    }
    // log p[label] computed from the shifted logits so it stays finite.
    total += -(static_cast<double>(z[label]) - zmax - std::log(sum));
  }
  r.loss = total / norm;
  return r;
}

// --------------------------------------------------------------- layer objects

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t pad, std::size_t stride)
    : kernel_(kernel), pad_(pad), stride_(stride) {
  if (kernel < 1 || stride < 1 || in_channels < 1 || out_channels < 1) {
    throw ShapeError("conv: channels, kernel and stride must be >= 1");
  }
  params_.push_back(make_param("weights", {out_channels, in_channels, kernel, kernel}, true));
  params_.push_back(make_param("bias", {1, out_channels, 1, 1}, false));
}

Dims Conv2d::output_dims(const Dims& in) const {
  const Dims& w = params_[0].value.dims();
  if (in.c != w.c) {
    throw ShapeError("conv: input has " + std::to_string(in.c) + " channels, expected " +
                     std::to_string(w.c));
  }
  return {in.n, w.n, conv_output_extent(in.h, kernel_, pad_, stride_),
          conv_output_extent(in.w, kernel_, pad_, stride_)};
}

Tensor4 Conv2d::forward(const Tensor4& x, const ForwardContext&, LayerCache& cache) const {
  cache.input = x;
  return conv2d_forward(x, params_[0].value, params_[1].value, pad_, stride_);
}

Tensor4 Conv2d::backward(const Tensor4& grad_out, const LayerCache& cache,
                         std::span<Tensor4> grad_params, bool want_input_grad) const {
  Tensor4 grad_x;
  conv2d_backward(cache.input, params_[0].value, pad_, stride_, grad_out,
                  want_input_grad ? &grad_x : nullptr, grad_params[0], grad_params[1]);
  return grad_x;
}

Cccp::Cccp(std::size_t in_channels, std::size_t out_channels) {
  if (in_channels < 1 || out_channels < 1) throw ShapeError("cccp: channels must be >= 1");
  params_.push_back(make_param("weights", {out_channels, in_channels, 1, 1}, true));
  params_.push_back(make_param("bias", {1, out_channels, 1, 1}, false));
}

Dims Cccp::output_dims(const Dims& in) const {
  const Dims& w = params_[0].value.dims();
  if (in.c != w.c) {
    throw ShapeError("cccp: input has " + std::to_string(in.c) + " channels, expected " +
                     std::to_string(w.c));
  }
  return {in.n, w.n, in.h, in.w};
}

Tensor4 Cccp::forward(const Tensor4& x, const ForwardContext&, LayerCache& cache) const {
  cache.input = x;
  return cccp_forward(x, params_[0].value, params_[1].value);
}

Tensor4 Cccp::backward(const Tensor4& grad_out, const LayerCache& cache,
                       std::span<Tensor4> grad_params, bool want_input_grad) const {
  Tensor4 grad_x;
  cccp_backward(cache.input, params_[0].value, grad_out, want_input_grad ? &grad_x : nullptr,
                grad_params[0], grad_params[1]);
  return grad_x;
}

Tensor4 Relu::forward(const Tensor4& x, const ForwardContext&, LayerCache& cache) const {
  cache.input = x;
  return relu_forward(x);
}

Tensor4 Relu::backward(const Tensor4& grad_out, const LayerCache& cache, std::span<Tensor4>,
                       bool want_input_grad) const {
  return want_input_grad ? relu_backward(cache.input, grad_out) : Tensor4{};
}

MaxPool::MaxPool(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {
  if (kernel < 1 || stride < 1) throw ShapeError("pool: kernel and stride must be >= 1");
}

Dims MaxPool::output_dims(const Dims& in) const {
  return {in.n, in.c, pool_output_extent(in.h, kernel_, stride_),
          pool_output_extent(in.w, kernel_, stride_)};
}

Tensor4 MaxPool::forward(const Tensor4& x, const ForwardContext&, LayerCache& cache) const {
  cache.input_dims = x.dims();
  return maxpool_forward(x, kernel_, stride_, &cache.argmax);
}

Tensor4 MaxPool::backward(const Tensor4& grad_out, const LayerCache& cache, std::span<Tensor4>,
                          bool want_input_grad) const {
  if (!want_input_grad) return {};
  return maxpool_backward(grad_out, cache.argmax, cache.input_dims);
}

Dropout::Dropout(double ratio, std::uint64_t stream) : ratio_(ratio), stream_(stream) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ArgumentError("dropout ratio must be in [0, 1), got " + std::to_string(ratio));
  }
}

Tensor4 Dropout::forward(const Tensor4& x, const ForwardContext& ctx, LayerCache& cache) const {
  if (ctx.mode == Mode::eval || ratio_ == 0.0) {
    cache.mask = Tensor4{};
    return x;
  }
  cache.mask = dropout_mask(x.dims(), ratio_, ctx.seed, stream_, ctx.step, ctx.sample_offset);
  return hadamard(x, cache.mask);
}

Tensor4 Dropout::backward(const Tensor4& grad_out, const LayerCache& cache, std::span<Tensor4>,
                          bool want_input_grad) const {
  if (!want_input_grad) return {};
  return cache.mask.empty() ? grad_out : hadamard(grad_out, cache.mask);
}

Tensor4 GlobalAvgPool::forward(const Tensor4& x, const ForwardContext&,
                               LayerCache& cache) const {
  cache.input_dims = x.dims();
  return gap_forward(x);
}

Tensor4 GlobalAvgPool::backward(const Tensor4& grad_out, const LayerCache& cache,
                                std::span<Tensor4>, bool want_input_grad) const {
  return want_input_grad ? gap_backward(grad_out, cache.input_dims) : Tensor4{};
}

FullyConnected::FullyConnected(std::size_t features, std::size_t outputs) {
  if (features < 1 || outputs < 1) throw ShapeError("fc: sizes must be >= 1");
  params_.push_back(make_param("weights", {outputs, features, 1, 1}, true));
  params_.push_back(make_param("bias", {1, outputs, 1, 1}, false));
}

Dims FullyConnected::output_dims(const Dims& in) const {
  const Dims& w = params_[0].value.dims();
  if (in.sample_count() != w.c) {
    throw ShapeError("fc: input has " + std::to_string(in.sample_count()) +
                     " features, expected " + std::to_string(w.c));
  }
  return {in.n, w.n, 1, 1};
}

Tensor4 FullyConnected::forward(const Tensor4& x, const ForwardContext&,
                                LayerCache& cache) const {
  cache.input = x;
  return fc_forward(x, params_[0].value, params_[1].value);
}

Tensor4 FullyConnected::backward(const Tensor4& grad_out, const LayerCache& cache,
                                 std::span<Tensor4> grad_params, bool want_input_grad) const {
  Tensor4 grad_x;
  fc_backward(cache.input, params_[0].value, grad_out, want_input_grad ? &grad_x : nullptr,
              grad_params[0], grad_params[1]);
  return grad_x;
}

NINKIT_END_NAMESPACE
