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

#include "mtda/model.hpp"

namespace mtda {

nlohmann::json model_config_to_json(const ModelConfig& config) {
  const auto& b = config.backbone;
  nlohmann::json j;
  j["num_classes"] = config.num_classes;
  j["backbone"] = {{"kind", to_string(b.kind)},
                   {"d_f", b.feature_dim},
                   {"input", {b.input.channels, b.input.height, b.input.width}},
                   {"conv_widths", b.conv_widths},
                   {"stem_channels", b.stem_channels},
                   {"embed_dim", b.embed_dim},
                   {"encoder_blocks", b.encoder_blocks},
                   {"attention_heads", b.attention_heads},
                   {"mlp_ratio", b.mlp_ratio}};
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig config;
    config.num_classes = j.at("num_classes").get<int>();
    const auto& b = j.at("backbone");
    config.backbone.kind = backbone_kind_from_string(b.at("kind").get<std::string>());
    config.backbone.feature_dim = b.at("d_f").get<int>();
    const auto input = b.at("input").get<std::vector<int>>();
    if (input.size() != 3) throw IoError("checkpoint input shape must have three entries");
    config.backbone.input = {input[0], input[1], input[2]};
    config.backbone.conv_widths = b.at("conv_widths").get<std::vector<int>>();
    config.backbone.stem_channels = b.at("stem_channels").get<int>();
    config.backbone.embed_dim = b.at("embed_dim").get<int>();
    config.backbone.encoder_blocks = b.at("encoder_blocks").get<int>();
    config.backbone.attention_heads = b.at("attention_heads").get<int>();
    config.backbone.mlp_ratio = b.at("mlp_ratio").get<int>();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model metadata: " + std::string(e.what()));
  }
}

}  // namespace mtda
