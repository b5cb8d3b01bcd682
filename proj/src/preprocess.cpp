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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "ninkit/binary_io.hpp"
#include "ninkit/data.hpp"

NINKIT_BEGIN_NAMESPACE

namespace {

constexpr char kZcaMagic[8] = {'N', 'I', 'N', 'Z', 'C', 'A', '0', '1'};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix to_matrix(const Tensor4& images) {
  const auto n = static_cast<Eigen::Index>(images.dims().n);
  const auto d = static_cast<Eigen::Index>(images.dims().sample_count());
  RowMatrix x(n, d);
  for (Eigen::Index i = 0; i < n * d; ++i) x.data()[i] = images.raw()[i];
  return x;
}

}  // namespace

void gcn(Tensor4& images, const GcnOptions& options) {
  const std::size_t dim = images.dims().sample_count();
  for (std::size_t n = 0; n < images.dims().n; ++n) {
    auto s = images.sample(n);
    // Shifted by the first pixel: exact for constant images and better
    // conditioned when the mean is large relative to the spread.
    const double shift = s[0];
    double mean = 0.0;
    for (Real v : s) mean += v - shift;
    mean = shift + mean / static_cast<double>(dim);
    double sq = 0.0;
    for (Real v : s) sq += (v - mean) * (v - mean);
    double divisor = std::sqrt(options.sqrt_bias + sq / static_cast<double>(dim));
    if (divisor < options.min_divisor) divisor = 1.0;
    const double k = options.scale / divisor;
    for (Real& v : s) v = static_cast<Real>((v - mean) * k);
  }
}

// ---------------------------------------------------------------------- ZCA

ZcaModel ZcaModel::fit(const Tensor4& images, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("ZCA epsilon must be > 0");
  RowMatrix x = to_matrix(images);
  const auto d = x.cols();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("ZCA: eigendecomposition failed");
  const Eigen::VectorXd scale =
      (eig.eigenvalues().cwiseMax(0.0).array() + epsilon).rsqrt().matrix();
  const Eigen::MatrixXd& u = eig.eigenvectors();
  Eigen::MatrixXd w = u * scale.asDiagonal() * u.transpose();
  w = 0.5 * (w + w.transpose()).eval();

  ZcaModel m;
  m.dim_ = static_cast<std::size_t>(d);
  m.epsilon_ = epsilon;
  m.mean_.assign(mean.data(), mean.data() + d);
  m.matrix_.resize(m.dim_ * m.dim_);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m.matrix_[static_cast<std::size_t>(r * d + c)] = w(r, c);
  }
  return m;
}

void ZcaModel::apply(Tensor4& images) const {
  if (!fitted()) throw Error("ZCA: apply called before fit");
  if (images.dims().sample_count() != dim_) {
    throw ShapeError("ZCA: model has dimension " + std::to_string(dim_) + ", images have " +
                     std::to_string(images.dims().sample_count()));
  }
  RowMatrix x = to_matrix(images);
  const auto d = static_cast<Eigen::Index>(dim_);
  x.rowwise() -= Eigen::Map<const Eigen::RowVectorXd>(mean_.data(), d);
  Eigen::Map<const RowMatrix> w(matrix_.data(), d, d);
  const RowMatrix y = x * w;
  for (Eigen::Index i = 0; i < y.size(); ++i) images.raw()[i] = static_cast<Real>(y.data()[i]);
}

void ZcaModel::save(const std::filesystem::path& path) const {
  if (!fitted()) throw Error("ZCA: cannot save an unfitted model");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kZcaMagic, sizeof(kZcaMagic));
  binio::put_u64(out, dim_);
  binio::put_f64(out, epsilon_);
  for (double v : mean_) binio::put_f64(out, v);
  for (double v : matrix_) binio::put_f64(out, v);
  if (!out) throw DataError("write failed for " + path.string());
}

ZcaModel ZcaModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kZcaMagic)) {
    throw DataError(path.string() + ": not a ZCA model file");
  }
  ZcaModel m;
  m.dim_ = binio::get_u64(in, "ZCA header");
  if (m.dim_ == 0 || m.dim_ > (1u << 16)) throw DataError(path.string() + ": corrupt header");
  m.epsilon_ = binio::get_f64(in, "ZCA header");
  m.mean_.resize(m.dim_);
  for (double& v : m.mean_) v = binio::get_f64(in, "ZCA mean");
  m.matrix_.resize(m.dim_ * m.dim_);
  for (double& v : m.matrix_) v = binio::get_f64(in, "ZCA matrix");
  return m;
}

// ---------------------------------------------------------------------- LCN

std::vector<double> gaussian_taps(std::size_t kernel, double sigma) {
  if (kernel % 2 == 0) {
    throw ArgumentError("LCN kernel must be odd, got " + std::to_string(kernel));
  }
  if (sigma <= 0.0) sigma = static_cast<double>(kernel) / 4.0;
  const auto radius = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<double> taps(kernel);
  double sum = 0.0;
  for (std::ptrdiff_t u = -radius; u <= radius; ++u) {
    const double g = std::exp(-static_cast<double>(u * u) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(u + radius)] = g;
    sum += g;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

/// Gaussian-weighted local average with weights renormalized to the part of
/// the window inside the image. The 2-D weights factor, so two normalized
/// 1-D passes give exactly the 2-D normalized average.
std::vector<double> local_average(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                  const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  std::vector<double> tmp(h * w), out(h * w);
  for (std::ptrdiff_t y = 0; y < hh; ++y) {
    for (std::ptrdiff_t x = 0; x < ww; ++x) {
      double acc = 0.0, norm = 0.0;
      for (std::ptrdiff_t u = -radius; u <= radius; ++u) {
        const std::ptrdiff_t yy = y + u;
        if (yy < 0 || yy >= hh) continue;
        const double g = taps[static_cast<std::size_t>(u + radius)];
        acc += g * plane[static_cast<std::size_t>(yy * ww + x)];
        norm += g;
      }
      tmp[static_cast<std::size_t>(y * ww + x)] = acc / norm;
    }
  }
  for (std::ptrdiff_t y = 0; y < hh; ++y) {
    for (std::ptrdiff_t x = 0; x < ww; ++x) {
      double acc = 0.0, norm = 0.0;
      for (std::ptrdiff_t v = -radius; v <= radius; ++v) {
        const std::ptrdiff_t xx = x + v;
        if (xx < 0 || xx >= ww) continue;
        const double g = taps[static_cast<std::size_t>(v + radius)];
        acc += g * tmp[static_cast<std::size_t>(y * ww + xx)];
        norm += g;
      }
      out[static_cast<std::size_t>(y * ww + x)] = acc / norm;
    }
  }
  return out;
}

}  // namespace

void lcn(Tensor4& images, const LcnOptions& options) {
  const auto taps = gaussian_taps(options.kernel, options.sigma);
  const Dims& d = images.dims();
  const std::size_t plane_size = d.h * d.w;
  std::vector<double> plane(plane_size), centered(plane_size), sq(plane_size);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      Real* p = images.raw() + images.offset(n, c, 0, 0);
      // Shifting by the first pixel changes nothing mathematically but makes a
      // constant plane exactly zero before the weighted average.
      const double ref = p[0];
      for (std::size_t i = 0; i < plane_size; ++i) plane[i] = p[i] - ref;
      const auto mean = local_average(plane, d.h, d.w, taps);
      for (std::size_t i = 0; i < plane_size; ++i) {
        centered[i] = plane[i] - mean[i];
        sq[i] = centered[i] * centered[i];
      }
      auto sigma = local_average(sq, d.h, d.w, taps);
      double sigma_mean = 0.0;
      for (double& s : sigma) {
        s = std::sqrt(std::max(s, 0.0));
        sigma_mean += s;
      }
      sigma_mean /= static_cast<double>(plane_size);
      for (std::size_t i = 0; i < plane_size; ++i) {
        double divisor = std::max(sigma[i], sigma_mean);
        if (divisor < options.min_divisor) divisor = 1.0;
        p[i] = static_cast<Real>(centered[i] / divisor);
      }
    }
  }
}

NINKIT_END_NAMESPACE
