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

// Feature extractors mapping an image batch to a (B x d_f) feature matrix.

#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtda/data.hpp"
#include "mtda/nn.hpp"

namespace mtda {

enum class BackboneKind { kSmallConv, kHybridConvAttention };

std::string to_string(BackboneKind kind);
BackboneKind backbone_kind_from_string(const std::string& name);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::kSmallConv;
  int feature_dim = 256;
  ImageShape input{};
  std::optional<std::string> pretrained_weights;

  // small_conv: one conv3x3 + ReLU + maxpool block per entry.
  std::vector<int> conv_widths{16, 32, 64};

  // hybrid_conv_attention
  int stem_channels = 64;
  int embed_dim = 64;
  int encoder_blocks = 2;
  int attention_heads = 4;
  int mlp_ratio = 2;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

template <typename T>
class FeatureExtractor {
 public:
  explicit FeatureExtractor(BackboneSpec spec) : spec_(std::move(spec)) {}
  virtual ~FeatureExtractor() = default;

  /// images: (B x C*H*W) channel-major rows. Returns (B x d_f).
  virtual nn::Matrix<T> forward(const nn::Matrix<T>& images, bool training) = 0;
  /// Back-propagates the last forward. Returns the image gradient when
  /// requested, otherwise an empty matrix.
  virtual nn::Matrix<T> backward(const nn::Matrix<T>& grad_features, bool need_input_grad = false) = 0;
  virtual void reset(nn::InitRng& rng) = 0;
  virtual void collect_parameters(nn::ParameterList<T>& out) = 0;
  virtual void collect_buffers(nn::ParameterList<T>& out) = 0;

  const BackboneSpec& spec() const { return spec_; }

 protected:
  void check_input(const nn::Matrix<T>& images) const {
    MTDA_REQUIRE(images.rows() >= 1, "feature extraction needs a non-empty batch");
    MTDA_REQUIRE(images.cols() == spec_.input.size(), "image size does not match the backbone input shape");
  }

  BackboneSpec spec_;
};

/// Stacked conv blocks, global average pooling and a linear + batch-norm
/// bottleneck to d_f.
template <typename T>
class SmallConvBackbone final : public FeatureExtractor<T> {
 public:
  explicit SmallConvBackbone(BackboneSpec spec) : FeatureExtractor<T>(std::move(spec)) {
    int in = this->spec_.input.channels;
    for (std::size_t i = 0; i < this->spec_.conv_widths.size(); ++i) {
      const int out = this->spec_.conv_widths[i];
      blocks_.push_back({nn::Conv2d<T>("backbone.conv" + std::to_string(i + 1), in, out, 3), {}, {}});
      in = out;
    }
    bottleneck_ = nn::Linear<T>("backbone.bottleneck", in, this->spec_.feature_dim);
    norm_ = nn::BatchNorm1d<T>("backbone.bottleneck_bn", this->spec_.feature_dim);
  }

  void reset(nn::InitRng& rng) override {
    for (auto& b : blocks_) b.conv.reset(rng);
    bottleneck_.reset(rng);
    norm_.reset();
  }

  nn::Matrix<T> forward(const nn::Matrix<T>& images, bool training) override {
    this->check_input(images);
    const auto& shape = this->spec_.input;
    auto map = nn::images_to_map<T>(images, shape.channels, shape.height, shape.width);
    for (auto& b : blocks_) map = b.pool.forward(b.relu.forward(b.conv.forward(map)));
    pooled_h_ = map.height;
    pooled_w_ = map.width;
    return norm_.forward(bottleneck_.forward(nn::global_average_pool(map)), training);
  }

  nn::Matrix<T> backward(const nn::Matrix<T>& grad_features, bool need_input_grad) override {
    auto map = nn::global_average_pool_backward<T>(bottleneck_.backward(norm_.backward(grad_features)), pooled_h_,
                                                   pooled_w_);
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      auto& b = blocks_[i];
      map = b.conv.backward(b.relu.backward(b.pool.backward(map)), i > 0 || need_input_grad);
    }
    if (!need_input_grad) return {};
    return nn::map_to_images(map);
  }

  void collect_parameters(nn::ParameterList<T>& out) override {
    for (auto& b : blocks_) b.conv.collect(out);
    bottleneck_.collect(out);
    norm_.collect(out);
  }
  void collect_buffers(nn::ParameterList<T>& out) override { norm_.collect_buffers(out); }

 private:
  struct Block {
    nn::Conv2d<T> conv;
    nn::MapRelu<T> relu;
    nn::MaxPool2<T> pool;
  };
  std::vector<Block> blocks_;
  nn::Linear<T> bottleneck_;
  nn::BatchNorm1d<T> norm_;
  int pooled_h_ = 0;
  int pooled_w_ = 0;
};

/// Multi-head self-attention over per-sample token sets. Rows of the token
/// matrix are ordered sample-major: row b*P + p.
template <typename T>
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(const std::string& name, int dim, int heads)
      : heads_(heads), qkv_(name + ".qkv", dim, 3 * dim), proj_(name + ".proj", dim, dim) {}

  void reset(nn::InitRng& rng) {
    qkv_.reset(rng);
    proj_.reset(rng);
  }

  nn::Matrix<T> forward(const nn::Matrix<T>& x, int tokens) {
    const int dim = qkv_.in_features();
    const int dh = dim / heads_;
    const int batch = static_cast<int>(x.rows()) / tokens;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    qkv_out_ = qkv_.forward(x);
    attention_.assign(static_cast<std::size_t>(batch) * heads_, {});
    nn::Matrix<T> mixed(x.rows(), dim);
    for (int b = 0; b < batch; ++b)
      for (int h = 0; h < heads_; ++h) {
        const auto rows = qkv_out_.middleRows(static_cast<Eigen::Index>(b) * tokens, tokens);
        const nn::Matrix<T> scores = rows.middleCols(h * dh, dh) * rows.middleCols(dim + h * dh, dh).transpose() * scale;
        auto& a = attention_[static_cast<std::size_t>(b * heads_ + h)];
        a = nn::softmax_rows<T>(scores);
        mixed.block(static_cast<Eigen::Index>(b) * tokens, h * dh, tokens, dh).noalias() =
            a * rows.middleCols(2 * dim + h * dh, dh);
      }
    tokens_ = tokens;
    return proj_.forward(mixed);
  }

  nn::Matrix<T> backward(const nn::Matrix<T>& dy) {
    const int dim = qkv_.in_features();
    const int dh = dim / heads_;
    const int batch = static_cast<int>(dy.rows()) / tokens_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    const nn::Matrix<T> dmixed = proj_.backward(dy);
    nn::Matrix<T> dqkv = nn::Matrix<T>::Zero(qkv_out_.rows(), qkv_out_.cols());
    for (int b = 0; b < batch; ++b)
      for (int h = 0; h < heads_; ++h) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * tokens_;
        const auto rows = qkv_out_.middleRows(r0, tokens_);
        const auto& a = attention_[static_cast<std::size_t>(b * heads_ + h)];
        const nn::Matrix<T> dout = dmixed.block(r0, h * dh, tokens_, dh);
        const nn::Matrix<T> da = dout * rows.middleCols(2 * dim + h * dh, dh).transpose();
        dqkv.block(r0, 2 * dim + h * dh, tokens_, dh).noalias() = a.transpose() * dout;
        const nn::Vector<T> row_dot = da.cwiseProduct(a).rowwise().sum();
        const nn::Matrix<T> ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
        dqkv.block(r0, h * dh, tokens_, dh).noalias() = ds * rows.middleCols(dim + h * dh, dh);
        dqkv.block(r0, dim + h * dh, tokens_, dh).noalias() = ds.transpose() * rows.middleCols(h * dh, dh);
      }
    return qkv_.backward(dqkv);
  }

  void collect(nn::ParameterList<T>& out) {
    qkv_.collect(out);
    proj_.collect(out);
  }

  /// Attention probabilities of the last forward, one (P x P) per (sample, head).
  const std::vector<nn::Matrix<T>>& attention() const { return attention_; }

 private:
  int heads_ = 1;
  int tokens_ = 0;
  nn::Linear<T> qkv_, proj_;
  nn::Matrix<T> qkv_out_;
  std::vector<nn::Matrix<T>> attention_;
};

/// Pre-norm transformer encoder block.
template <typename T>
class EncoderBlock {
 public:
  EncoderBlock(const std::string& name, int dim, int heads, int hidden)
      : norm1_(name + ".norm1", dim),
        attention_(name + ".attn", dim, heads),
        norm2_(name + ".norm2", dim),
        fc1_(name + ".mlp.fc1", dim, hidden),
        fc2_(name + ".mlp.fc2", hidden, dim) {}

  void reset(nn::InitRng& rng) {
    norm1_.reset();
    norm2_.reset();
    attention_.reset(rng);
    fc1_.reset(rng);
    fc2_.reset(rng);
  }

  nn::Matrix<T> forward(const nn::Matrix<T>& x, int tokens) {
    const nn::Matrix<T> h = x + attention_.forward(norm1_.forward(x), tokens);
    return h + fc2_.forward(gelu_.forward(fc1_.forward(norm2_.forward(h))));
  }

  nn::Matrix<T> backward(const nn::Matrix<T>& dy) {
    const nn::Matrix<T> dh = dy + norm2_.backward(fc1_.backward(gelu_.backward(fc2_.backward(dy))));
    return dh + norm1_.backward(attention_.backward(dh));
  }

  void collect(nn::ParameterList<T>& out) {
    norm1_.collect(out);
    attention_.collect(out);
    norm2_.collect(out);
    fc1_.collect(out);
    fc2_.collect(out);
  }

  const MultiHeadSelfAttention<T>& attention() const { return attention_; }

 private:
  nn::LayerNorm<T> norm1_;
  MultiHeadSelfAttention<T> attention_;
  nn::LayerNorm<T> norm2_;
  nn::Linear<T> fc1_, fc2_;
  nn::Gelu<T> gelu_;
};

/// Conv stem, 1x1 patch embedding of the stem feature map, self-attention
/// encoder blocks, token mean-pooling and a linear + batch-norm bottleneck.
template <typename T>
class HybridConvAttentionBackbone final : public FeatureExtractor<T> {
 public:
  explicit HybridConvAttentionBackbone(BackboneSpec spec) : FeatureExtractor<T>(std::move(spec)) {
    const auto& s = this->spec_;
    stem_ = nn::Conv2d<T>("backbone.stem", s.input.channels, s.stem_channels, 3);
    tokens_ = (s.input.height / 4) * (s.input.width / 4);
    embed_ = nn::Linear<T>("backbone.patch_embed", s.stem_channels, s.embed_dim);
    position_ = nn::Parameter<T>("backbone.pos_embed", tokens_, s.embed_dim);
    for (int i = 0; i < s.encoder_blocks; ++i)
      blocks_.emplace_back("backbone.block" + std::to_string(i + 1), s.embed_dim, s.attention_heads,
                           s.embed_dim * s.mlp_ratio);
    final_norm_ = nn::LayerNorm<T>("backbone.final_norm", s.embed_dim);
    bottleneck_ = nn::Linear<T>("backbone.bottleneck", s.embed_dim, s.feature_dim);
    norm_ = nn::BatchNorm1d<T>("backbone.bottleneck_bn", s.feature_dim);
  }

  void reset(nn::InitRng& rng) override {
    stem_.reset(rng);
    embed_.reset(rng);
    nn::uniform_init(position_.value, 0.02, rng);
    for (auto& b : blocks_) b.reset(rng);
    final_norm_.reset();
    bottleneck_.reset(rng);
    norm_.reset();
  }

  nn::Matrix<T> forward(const nn::Matrix<T>& images, bool training) override {
    this->check_input(images);
    const auto& s = this->spec_.input;
    auto map = pool2_.forward(pool1_.forward(relu_.forward(stem_.forward(nn::images_to_map<T>(images, s.channels, s.height, s.width)))));
    batch_ = map.batch;
    map_h_ = map.height;
    map_w_ = map.width;
    // (C x B*P) -> (B*P x C): one token per stem pixel.
    nn::Matrix<T> x = embed_.forward(map.data.transpose());
    for (int b = 0; b < batch_; ++b) x.middleRows(static_cast<Eigen::Index>(b) * tokens_, tokens_) += position_.value;
    for (auto& blk : blocks_) x = blk.forward(x, tokens_);
    x = final_norm_.forward(x);
    nn::Matrix<T> pooled(batch_, x.cols());
    for (int b = 0; b < batch_; ++b)
      pooled.row(b) = x.middleRows(static_cast<Eigen::Index>(b) * tokens_, tokens_).colwise().mean();
    return norm_.forward(bottleneck_.forward(pooled), training);
  }

  nn::Matrix<T> backward(const nn::Matrix<T>& grad_features, bool need_input_grad) override {
    const nn::Matrix<T> dpooled = bottleneck_.backward(norm_.backward(grad_features));
    nn::Matrix<T> dx(static_cast<Eigen::Index>(batch_) * tokens_, dpooled.cols());
    for (int b = 0; b < batch_; ++b)
      dx.middleRows(static_cast<Eigen::Index>(b) * tokens_, tokens_).rowwise() =
          dpooled.row(b) / static_cast<T>(tokens_);
    dx = final_norm_.backward(dx);
    for (std::size_t i = blocks_.size(); i-- > 0;) dx = blocks_[i].backward(dx);
    for (int b = 0; b < batch_; ++b) position_.grad += dx.middleRows(static_cast<Eigen::Index>(b) * tokens_, tokens_);
    nn::FeatureMap<T> dmap{embed_.backward(dx).transpose(), batch_, map_h_, map_w_};
    auto dstem = stem_.backward(relu_.backward(pool1_.backward(pool2_.backward(dmap))), need_input_grad);
    if (!need_input_grad) return {};
    return nn::map_to_images(dstem);
  }

  void collect_parameters(nn::ParameterList<T>& out) override {
    stem_.collect(out);
    embed_.collect(out);
    out.push_back(&position_);
    for (auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
    bottleneck_.collect(out);
    norm_.collect(out);
  }
  void collect_buffers(nn::ParameterList<T>& out) override { norm_.collect_buffers(out); }

  const std::vector<EncoderBlock<T>>& blocks() const { return blocks_; }
  int tokens() const { return tokens_; }

 private:
  nn::Conv2d<T> stem_;
  nn::MapRelu<T> relu_;
  nn::MaxPool2<T> pool1_, pool2_;
  nn::Linear<T> embed_;
  nn::Parameter<T> position_;
  std::vector<EncoderBlock<T>> blocks_;
  nn::LayerNorm<T> final_norm_;
  nn::Linear<T> bottleneck_;
  nn::BatchNorm1d<T> norm_;
  int tokens_ = 0;
  int batch_ = 0;
  int map_h_ = 0;
  int map_w_ = 0;
};

/// Closed-form parameter count of the hybrid backbone for `spec`.
std::size_t hybrid_parameter_count(const BackboneSpec& spec);

/// Builds the extractor described by `spec` and initializes it from `rng`.
template <typename T>
std::unique_ptr<FeatureExtractor<T>> make_backbone(const BackboneSpec& spec, nn::InitRng& rng);

/// Builds the hybrid extractor; when spec.pretrained_weights is set, the
/// named tensors are loaded from that checkpoint (IoError if missing).
template <typename T>
std::unique_ptr<HybridConvAttentionBackbone<T>> build_hybrid_stub(const BackboneSpec& spec, nn::InitRng& rng);

}  // namespace mtda
