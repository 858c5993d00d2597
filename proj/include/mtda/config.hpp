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

// Run configuration: a flat dotted-key JSON object (e.g. "hp.K": 1500)
// with command-line overrides layered on top.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtda/backbone.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/data.hpp"

namespace mtda {

enum class RunMode { kFull, kDryRun };

struct RunConfig {
  HyperParams hp;
  BackboneSpec backbone;
  std::optional<std::filesystem::path> data_dir;  // unset: synthetic data
  SyntheticSpec synthetic;
  bool synthetic_seed_set = false;  // otherwise the synthetic seed follows hp.seed
  std::filesystem::path output_dir = "runs/latest";
  RunMode mode = RunMode::kFull;

  /// Checks every field; throws ConfigError naming the offending key.
  void validate() const;
  /// Flat dotted-key echo; feeding it back through apply_config_json
  /// reproduces this configuration.
  nlohmann::json to_json() const;
  std::uint64_t synthetic_seed() const { return synthetic_seed_set ? synthetic.seed : hp.seed; }
};

/// Every key apply_setting understands.
const std::vector<std::string>& config_keys();

/// Sets one dotted key. Throws ConfigError on an unknown key or a bad value.
void apply_setting(RunConfig& config, const std::string& key, const nlohmann::json& value);

/// Same, with the value given as command-line text: JSON if it parses,
/// otherwise a plain string (comma lists are accepted for list keys).
void apply_setting_text(RunConfig& config, const std::string& key, const std::string& text);

void apply_config_json(RunConfig& config, const nlohmann::json& flat);
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

/// Parses generator tokens such as {"n_c=4", "N=3", "shifts=0.1,0.3,0.6"}.
void apply_synthetic_tokens(RunConfig& config, const std::vector<std::string>& tokens);

/// The dataset a configuration points at.
DatasetRegistry load_dataset(const RunConfig& config);

ModelConfig model_config(const RunConfig& config, int num_classes);

}  // namespace mtda
