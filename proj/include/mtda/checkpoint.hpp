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

// Checkpoint file layout (all integers little-endian u32):
//
//   "MTDACKPT"                      8-byte magic
//   schema_version                  currently kCheckpointSchemaVersion
//   meta_length, meta               JSON object (model config, class names)
//   tensor_count
//   tensor_count x {
//     name_length, name             e.g. "backbone.conv1.weight"
//     rows, cols
//     rows*cols float32             column-major
//   }
//
// Tensor names are the layer parameter names: backbone.*, heads.mlp.*,
// heads.edge.fc{1,2,3}.*, heads.node.fc{1,2}.*, discriminator.fc{1,2}.*,
// plus batch-norm running statistics (*.running_mean, *.running_var).

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtda/nn.hpp"

namespace mtda {

inline constexpr std::uint32_t kCheckpointSchemaVersion = 1;

struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;
};

struct CheckpointFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& file);

/// IoError when unreadable, SchemaVersionError on a version mismatch.
CheckpointFile read_checkpoint(const std::filesystem::path& path);

template <typename T>
NamedTensor to_named_tensor(const nn::Parameter<T>& p) {
  NamedTensor t{p.name, static_cast<int>(p.value.rows()), static_cast<int>(p.value.cols()), {}};
  t.data.resize(static_cast<std::size_t>(p.value.size()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(p.value.data()[i]);
  return t;
}

/// Copies matching tensors into `params`. With `require_all`, a parameter
/// missing from the file is an IoError; a shape mismatch always is.
template <typename T>
std::size_t load_named_tensors(const CheckpointFile& file, const nn::ParameterList<T>& params, bool require_all) {
  std::size_t loaded = 0;
  for (auto* p : params) {
    const NamedTensor* t = file.find(p->name);
    if (!t) {
      if (require_all) throw IoError("checkpoint lacks tensor " + p->name);
      continue;
    }
    if (t->rows != p->value.rows() || t->cols != p->value.cols())
      throw IoError("checkpoint tensor " + p->name + " has shape " + std::to_string(t->rows) + "x" +
                    std::to_string(t->cols));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<T>(t->data[static_cast<std::size_t>(i)]);
    ++loaded;
  }
  return loaded;
}

}  // namespace mtda
