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

#include "mtda/backbone.hpp"

#include <filesystem>

#include "mtda/checkpoint.hpp"
#include "mtda/error.hpp"

namespace mtda {

std::string to_string(BackboneKind kind) {
  return kind == BackboneKind::kSmallConv ? "small_conv" : "hybrid_conv_attention";
}

BackboneKind backbone_kind_from_string(const std::string& name) {
  if (name == "small_conv") return BackboneKind::kSmallConv;
  if (name == "hybrid_conv_attention") return BackboneKind::kHybridConvAttention;
  throw ConfigError("unknown backbone kind '" + name + "'", "backbone.kind");
}

void BackboneSpec::validate() const {
  if (feature_dim <= 0) throw ConfigError("feature width must be positive", "backbone.d_f");
  if (feature_dim % 2 != 0) throw ConfigError("feature width must be even (edge network halves it)", "backbone.d_f");
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0)
    throw ConfigError("input shape must be positive", "backbone.input");
  if (kind == BackboneKind::kSmallConv) {
    if (conv_widths.empty()) throw ConfigError("small_conv needs at least one conv block", "backbone.conv_widths");
    for (int w : conv_widths)
      if (w <= 0) throw ConfigError("conv widths must be positive", "backbone.conv_widths");
    const int shrink = 1 << conv_widths.size();
    if (input.height < shrink || input.width < shrink)
      throw ConfigError("input too small for the number of pooling stages", "backbone.conv_widths");
    if (pretrained_weights) throw ConfigError("small_conv takes no external weights", "backbone.pretrained");
  } else {
    if (stem_channels <= 0) throw ConfigError("stem channels must be positive", "backbone.stem_channels");
    if (embed_dim <= 0 || attention_heads <= 0 || embed_dim % attention_heads != 0)
      throw ConfigError("embed_dim must be a positive multiple of attention_heads", "backbone.attention_heads");
    if (encoder_blocks < 0) throw ConfigError("encoder block count must be >= 0", "backbone.encoder_blocks");
    if (mlp_ratio <= 0) throw ConfigError("mlp ratio must be positive", "backbone.mlp_ratio");
    if (input.height % 4 != 0 || input.width % 4 != 0 || input.height < 4 || input.width < 4)
      throw ConfigError("hybrid input sides must be multiples of 4", "backbone.input");
  }
}

std::size_t hybrid_parameter_count(const BackboneSpec& s) {
  const std::size_t c = static_cast<std::size_t>(s.input.channels);
  const std::size_t stem = static_cast<std::size_t>(s.stem_channels);
  const std::size_t e = static_cast<std::size_t>(s.embed_dim);
  const std::size_t m = e * static_cast<std::size_t>(s.mlp_ratio);
  const std::size_t tokens = static_cast<std::size_t>(s.input.height / 4) * static_cast<std::size_t>(s.input.width / 4);
  const std::size_t f = static_cast<std::size_t>(s.feature_dim);
  const std::size_t per_block = 2 * e            // norm1
                                + 3 * e * e + 3 * e  // qkv
                                + e * e + e          // proj
                                + 2 * e              // norm2
                                + e * m + m          // fc1
                                + m * e + e;         // fc2
  return 9 * c * stem + stem        // stem conv
         + stem * e + e             // patch embedding
         + tokens * e               // positions
         + static_cast<std::size_t>(s.encoder_blocks) * per_block + 2 * e  // final norm
         + e * f + f                // bottleneck
         + 2 * f;                   // bottleneck batch norm
}

template <typename T>
std::unique_ptr<HybridConvAttentionBackbone<T>> build_hybrid_stub(const BackboneSpec& spec, nn::InitRng& rng) {
  if (spec.kind != BackboneKind::kHybridConvAttention)
    throw ConfigError("build_hybrid_stub needs kind hybrid_conv_attention", "backbone.kind");
  spec.validate();
  auto net = std::make_unique<HybridConvAttentionBackbone<T>>(spec);
  net->reset(rng);
  if (spec.pretrained_weights) {
    if (!std::filesystem::exists(*spec.pretrained_weights))
      throw IoError("pretrained weights not found: " + *spec.pretrained_weights);
    const auto file = read_checkpoint(*spec.pretrained_weights);
    nn::ParameterList<T> params;
    net->collect_parameters(params);
    net->collect_buffers(params);
    load_named_tensors(file, params, /*require_all=*/false);
  }
  return net;
}

template <typename T>
std::unique_ptr<FeatureExtractor<T>> make_backbone(const BackboneSpec& spec, nn::InitRng& rng) {
  spec.validate();
  if (spec.kind == BackboneKind::kHybridConvAttention) return build_hybrid_stub<T>(spec, rng);
  auto net = std::make_unique<SmallConvBackbone<T>>(spec);
  net->reset(rng);
  return net;
}

template std::unique_ptr<FeatureExtractor<float>> make_backbone<float>(const BackboneSpec&, nn::InitRng&);
template std::unique_ptr<FeatureExtractor<double>> make_backbone<double>(const BackboneSpec&, nn::InitRng&);
template std::unique_ptr<HybridConvAttentionBackbone<float>> build_hybrid_stub<float>(const BackboneSpec&,
                                                                                      nn::InitRng&);
template std::unique_ptr<HybridConvAttentionBackbone<double>> build_hybrid_stub<double>(const BackboneSpec&,
                                                                                        nn::InitRng&);

}  // namespace mtda
