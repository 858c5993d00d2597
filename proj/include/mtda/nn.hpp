// Copyright 2026 The MTDA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal layer library with explicit forward/backward passes.
//
// Conventions:
//  * Dense activations are row-per-sample matrices (N x features).
//  * Spatial activations are FeatureMaps: a (C x B*H*W) matrix, so the
//    channels of one pixel are contiguous in memory.
//  * backward() accumulates into Parameter::grad and returns the gradient
//    w.r.t. the layer input. Layers cache whatever the last forward needs.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mtda/error.hpp"

namespace mtda::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

/// A named tensor with an accumulated gradient. Non-trainable state (batch
/// norm running statistics) uses the same type with an unused gradient.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

using InitRng = std::mt19937_64;

template <typename T>
void uniform_init(Matrix<T>& m, double bound, InitRng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
}

/// Fully connected layer, y = x W^T + b with W stored (out x in).
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1) {}

  void reset(InitRng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight_.value.cols()));
    uniform_init(weight_.value, bound, rng);
    uniform_init(bias_.value, bound, rng);
  }

  Matrix<T> forward(const Matrix<T>& x) {
    MTDA_REQUIRE(x.cols() == weight_.value.cols(), "linear input width mismatch in " + weight_.name);
    input_ = x;
    Matrix<T> y = x * weight_.value.transpose();
    y.rowwise() += bias_.value.col(0).transpose();
    return y;
  }

  Matrix<T> backward(const Matrix<T>& dy) {
    weight_.grad.noalias() += dy.transpose() * input_;
    bias_.grad.col(0) += dy.colwise().sum().transpose();
    return dy * weight_.value;
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  int in_features() const { return static_cast<int>(weight_.value.cols()); }
  int out_features() const { return static_cast<int>(weight_.value.rows()); }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  const Parameter<T>& weight() const { return weight_; }
  const Parameter<T>& bias() const { return bias_; }

 private:
  Parameter<T> weight_;
  Parameter<T> bias_;
  Matrix<T> input_;
};

/// Leaky rectifier; slope 0 gives a plain ReLU.
template <typename T>
class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.0) : slope_(static_cast<T>(slope)) {}

  Matrix<T> forward(const Matrix<T>& x) {
    positive_ = (x.array() > T(0));
    return positive_.select(x, x * slope_);
  }

  Matrix<T> backward(const Matrix<T>& dy) const { return positive_.select(dy, dy * slope_); }

 private:
  T slope_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> positive_;
};

/// Tanh-approximated GELU.
template <typename T>
class Gelu {
 public:
  Matrix<T> forward(const Matrix<T>& x) {
    input_ = x;
    return x.unaryExpr([](T v) {
      const T inner = kC * (v + T(0.044715) * v * v * v);
      return T(0.5) * v * (T(1) + std::tanh(inner));
    });
  }

  Matrix<T> backward(const Matrix<T>& dy) const {
    Matrix<T> d = input_.unaryExpr([](T v) {
      const T inner = kC * (v + T(0.044715) * v * v * v);
      const T th = std::tanh(inner);
      const T dinner = kC * (T(1) + T(3) * T(0.044715) * v * v);
      return T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * dinner;
    });
    return dy.cwiseProduct(d);
  }

 private:
  static constexpr T kC = T(0.7978845608028654);
  Matrix<T> input_;
};

/// Batch normalization over the rows of an N x F matrix.
template <typename T>
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, int features)
      : gamma_(name + ".gamma", 1, features),
        beta_(name + ".beta", 1, features),
        running_mean_(name + ".running_mean", 1, features),
        running_var_(name + ".running_var", 1, features) {
    gamma_.value.setOnes();
    running_var_.value.setOnes();
  }

  void reset() {
    gamma_.value.setOnes();
    beta_.value.setZero();
    running_mean_.value.setZero();
    running_var_.value.setOnes();
  }

  Matrix<T> forward(const Matrix<T>& x, bool training) {
    const Eigen::Index n = x.rows();
    RowVector<T> mean, var;
    if (training) {
      MTDA_REQUIRE(n >= 2, "batch norm in training mode needs at least two rows");
      mean = x.colwise().mean();
      var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
      const T unbias = static_cast<T>(n) / static_cast<T>(n - 1);
      running_mean_.value = (T(1) - kMomentum) * running_mean_.value + kMomentum * mean;
      running_var_.value = (T(1) - kMomentum) * running_var_.value + kMomentum * unbias * var;
    } else {
      mean = running_mean_.value;
      var = running_var_.value;
    }
    inv_std_ = (var.array() + kEps).rsqrt().matrix();
    normalized_ = (x.rowwise() - mean);
    normalized_ = normalized_.array().rowwise() * inv_std_.array();
    Matrix<T> y = normalized_.array().rowwise() * gamma_.value.row(0).array();
    y.rowwise() += beta_.value.row(0);
    training_ = training;
    return y;
  }

  Matrix<T> backward(const Matrix<T>& dy) {
    gamma_.grad += dy.cwiseProduct(normalized_).colwise().sum();
    beta_.grad += dy.colwise().sum();
    Matrix<T> dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
    if (!training_) return dxhat.array().rowwise() * inv_std_.array();
    const T n = static_cast<T>(dy.rows());
    const RowVector<T> sum_dxhat = dxhat.colwise().sum();
    const RowVector<T> sum_dxhat_xhat = dxhat.cwiseProduct(normalized_).colwise().sum();
    Matrix<T> dx = (dxhat * n).rowwise() - sum_dxhat;
    dx.array() -= normalized_.array().rowwise() * sum_dxhat_xhat.array();
    return (dx.array().rowwise() * (inv_std_.array() / n)).matrix();
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_buffers(ParameterList<T>& out) {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

 private:
  static constexpr T kEps = T(1e-5);
  static constexpr T kMomentum = T(0.1);
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  Matrix<T> normalized_;
  RowVector<T> inv_std_;
  bool training_ = false;
};

/// Per-row layer normalization.
template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, int features)
      : gamma_(name + ".gamma", 1, features), beta_(name + ".beta", 1, features) {
    gamma_.value.setOnes();
  }

  void reset() {
    gamma_.value.setOnes();
    beta_.value.setZero();
  }

  Matrix<T> forward(const Matrix<T>& x) {
    const Vector<T> mean = x.rowwise().mean();
    Matrix<T> centered = x.colwise() - mean;
    const Vector<T> var = centered.array().square().rowwise().mean();
    inv_std_ = (var.array() + kEps).rsqrt().matrix();
    normalized_ = centered.array().colwise() * inv_std_.array();
    Matrix<T> y = normalized_.array().rowwise() * gamma_.value.row(0).array();
    y.rowwise() += beta_.value.row(0);
    return y;
  }

  Matrix<T> backward(const Matrix<T>& dy) {
    gamma_.grad += dy.cwiseProduct(normalized_).colwise().sum();
    beta_.grad += dy.colwise().sum();
    const Matrix<T> dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
    const T f = static_cast<T>(dy.cols());
    const Vector<T> sum_dxhat = dxhat.rowwise().sum();
    const Vector<T> sum_dxhat_xhat = dxhat.cwiseProduct(normalized_).rowwise().sum();
    Matrix<T> dx = (dxhat * f).colwise() - sum_dxhat;
    dx -= (normalized_.array().colwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().colwise() * (inv_std_.array() / f)).matrix();
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  static constexpr T kEps = T(1e-5);
  Parameter<T> gamma_, beta_;
  Matrix<T> normalized_;
  Vector<T> inv_std_;
};

/// Spatial activation for a batch: data is (channels x batch*height*width).
template <typename T>
struct FeatureMap {
  Matrix<T> data;
  int batch = 0;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }
};

/// Square convolution with stride 1 and "same" zero padding, via im2col.
/// The weight is (out x k*k*in) with column index (ky*k + kx)*in + c.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in, int out, int kernel)
      : in_(in), kernel_(kernel), weight_(name + ".weight", out, kernel * kernel * in), bias_(name + ".bias", out, 1) {}

  void reset(InitRng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weight_.value.cols()));
    uniform_init(weight_.value, bound, rng);
    uniform_init(bias_.value, bound, rng);
  }

  FeatureMap<T> forward(const FeatureMap<T>& x) {
    MTDA_REQUIRE(x.channels() == in_, "conv input channel mismatch in " + weight_.name);
    shape_ = x;
    shape_.data.resize(0, 0);
    im2col(x);
    FeatureMap<T> y{Matrix<T>(weight_.value.rows(), columns_.cols()), x.batch, x.height, x.width};
    y.data.noalias() = weight_.value * columns_;
    y.data.colwise() += bias_.value.col(0);
    return y;
  }

  /// Returns the input gradient, or an empty map when need_input_grad is false.
  FeatureMap<T> backward(const FeatureMap<T>& dy, bool need_input_grad = true) {
    weight_.grad.noalias() += dy.data * columns_.transpose();
    bias_.grad.col(0) += dy.data.rowwise().sum();
    FeatureMap<T> dx{Matrix<T>(), shape_.batch, shape_.height, shape_.width};
    if (!need_input_grad) return dx;
    const Matrix<T> dcols = weight_.value.transpose() * dy.data;
    dx.data = Matrix<T>::Zero(in_, static_cast<Eigen::Index>(shape_.batch) * shape_.pixels());
    const int pad = kernel_ / 2;
    const int h = shape_.height, w = shape_.width;
    for (int b = 0; b < shape_.batch; ++b)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          const Eigen::Index col = (static_cast<Eigen::Index>(b) * h + oy) * w + ox;
          for (int ky = 0; ky < kernel_; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kernel_; ++kx) {
              const int ix = ox + kx - pad;
              if (ix < 0 || ix >= w) continue;
              const Eigen::Index src = (static_cast<Eigen::Index>(b) * h + iy) * w + ix;
              dx.data.col(src) += dcols.col(col).segment((ky * kernel_ + kx) * in_, in_);
            }
          }
        }
    return dx;
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  void im2col(const FeatureMap<T>& x) {
    const int pad = kernel_ / 2;
    const int h = x.height, w = x.width;
    columns_.setZero(static_cast<Eigen::Index>(kernel_) * kernel_ * in_, static_cast<Eigen::Index>(x.batch) * h * w);
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          const Eigen::Index col = (static_cast<Eigen::Index>(b) * h + oy) * w + ox;
          for (int ky = 0; ky < kernel_; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kernel_; ++kx) {
              const int ix = ox + kx - pad;
              if (ix < 0 || ix >= w) continue;
              const Eigen::Index src = (static_cast<Eigen::Index>(b) * h + iy) * w + ix;
              columns_.col(col).segment((ky * kernel_ + kx) * in_, in_) = x.data.col(src);
            }
          }
        }
  }

  int in_ = 0;
  int kernel_ = 3;
  Parameter<T> weight_, bias_;
  Matrix<T> columns_;
  FeatureMap<T> shape_;
};

/// Elementwise rectifier on feature maps.
template <typename T>
class MapRelu {
 public:
  FeatureMap<T> forward(FeatureMap<T> x) {
    positive_ = (x.data.array() > T(0));
    x.data = positive_.select(x.data, T(0));
    return x;
  }
  FeatureMap<T> backward(FeatureMap<T> dy) const {
    dy.data = positive_.select(dy.data, T(0));
    return dy;
  }

 private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> positive_;
};

/// 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped.
template <typename T>
class MaxPool2 {
 public:
  FeatureMap<T> forward(const FeatureMap<T>& x) {
    in_ = {Matrix<T>(), x.batch, x.height, x.width};
    const int oh = x.height / 2, ow = x.width / 2;
    const int c = x.channels();
    FeatureMap<T> y{Matrix<T>(c, static_cast<Eigen::Index>(x.batch) * oh * ow), x.batch, oh, ow};
    argmax_.resize(static_cast<std::size_t>(y.data.size()));
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const Eigen::Index out_col = (static_cast<Eigen::Index>(b) * oh + oy) * ow + ox;
          for (int ch = 0; ch < c; ++ch) {
            Eigen::Index best = -1;
            T best_value = T(0);
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const Eigen::Index src = (static_cast<Eigen::Index>(b) * x.height + 2 * oy + dy) * x.width + 2 * ox + dx;
                const T v = x.data(ch, src);
                if (best < 0 || v > best_value) {
                  best = src;
                  best_value = v;
                }
              }
            y.data(ch, out_col) = best_value;
            argmax_[static_cast<std::size_t>(out_col * c + ch)] = best;
          }
        }
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& dy) const {
    const int c = dy.channels();
    FeatureMap<T> dx{Matrix<T>::Zero(c, static_cast<Eigen::Index>(in_.batch) * in_.pixels()), in_.batch, in_.height,
                     in_.width};
    for (Eigen::Index col = 0; col < dy.data.cols(); ++col)
      for (int ch = 0; ch < c; ++ch) dx.data(ch, argmax_[static_cast<std::size_t>(col * c + ch)]) += dy.data(ch, col);
    return dx;
  }

 private:
  FeatureMap<T> in_;
  std::vector<Eigen::Index> argmax_;
};

/// Mean over spatial positions; returns a (batch x channels) matrix.
template <typename T>
Matrix<T> global_average_pool(const FeatureMap<T>& x) {
  const int p = x.pixels();
  Matrix<T> y(x.batch, x.channels());
  for (int b = 0; b < x.batch; ++b) y.row(b) = x.data.middleCols(static_cast<Eigen::Index>(b) * p, p).rowwise().mean().transpose();
  return y;
}

template <typename T>
FeatureMap<T> global_average_pool_backward(const Matrix<T>& dy, int height, int width) {
  const int p = height * width;
  const int batch = static_cast<int>(dy.rows());
  FeatureMap<T> dx{Matrix<T>(dy.cols(), static_cast<Eigen::Index>(batch) * p), batch, height, width};
  for (int b = 0; b < batch; ++b)
    dx.data.middleCols(static_cast<Eigen::Index>(b) * p, p).colwise() = dy.row(b).transpose() / static_cast<T>(p);
  return dx;
}

/// Converts a (batch x C*H*W) image matrix (channel-major per sample) into a
/// feature map, and back.
template <typename T>
FeatureMap<T> images_to_map(const Matrix<T>& images, int channels, int height, int width) {
  const int p = height * width;
  MTDA_REQUIRE(images.cols() == static_cast<Eigen::Index>(channels) * p, "image batch width does not match shape");
  const int batch = static_cast<int>(images.rows());
  FeatureMap<T> m{Matrix<T>(channels, static_cast<Eigen::Index>(batch) * p), batch, height, width};
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < channels; ++c)
      for (int i = 0; i < p; ++i) m.data(c, static_cast<Eigen::Index>(b) * p + i) = images(b, static_cast<Eigen::Index>(c) * p + i);
  return m;
}

template <typename T>
Matrix<T> map_to_images(const FeatureMap<T>& m) {
  const int p = m.pixels();
  Matrix<T> images(m.batch, static_cast<Eigen::Index>(m.channels()) * p);
  for (int b = 0; b < m.batch; ++b)
    for (int c = 0; c < m.channels(); ++c)
      for (int i = 0; i < p; ++i) images(b, static_cast<Eigen::Index>(c) * p + i) = m.data(c, static_cast<Eigen::Index>(b) * p + i);
  return images;
}

/// Row-wise softmax.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
std::size_t parameter_count(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->size());
  return n;
}

}  // namespace mtda::nn
