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

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mtda {

struct ImageShape {
  int channels = 3;
  int height = 32;
  int width = 32;

  int size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Stable identity of a sample: its domain (0 = source) and position.
struct SampleId {
  int domain = 0;
  int index = 0;
  auto operator<=>(const SampleId&) const = default;
};

struct Sample {
  std::vector<float> image;  // channel-major C*H*W, values in [0,1]
  std::optional<int> label;  // absent for target samples
  int domain_id = 0;
  int index = 0;

  SampleId id() const { return {domain_id, index}; }
};

struct Dataset {
  std::string name;
  int domain_id = 0;
  ImageShape shape;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// One labeled source domain plus N unlabeled target domains sharing a label
/// space. Target ground truth, when known, is kept apart from the samples in
/// `hidden_truth` and only consulted by evaluation and auditing.
struct DatasetRegistry {
  Dataset source;
  std::vector<Dataset> targets;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::vector<std::optional<int>>> hidden_truth;

  int num_targets() const { return static_cast<int>(targets.size()); }
  const Dataset& domain(int domain_id) const;
  std::optional<int> truth(SampleId id) const;
  bool has_truth(int domain_id) const;
  /// Throws ContractViolation when any registry invariant is broken.
  void validate() const;
};

struct SyntheticSpec {
  int num_classes = 4;
  int num_targets = 3;
  std::vector<double> shifts{0.1, 0.3, 0.6};
  int per_class = 50;
  std::uint64_t seed = 7;
  ImageShape shape{};
};

/// Largest class count the glyph renderer can distinguish.
inline constexpr int kMaxSyntheticClasses = 16;

/// Procedurally rendered shape glyphs. Domain j applies a rotation, hue
/// shift, contrast fade and additive noise whose strength grows with
/// shifts[j]; the source is magnitude 0. A pure function of `spec`.
DatasetRegistry make_synthetic(const SyntheticSpec& spec);
DatasetRegistry make_synthetic(int num_classes, int num_targets, const std::vector<double>& shifts, int per_class,
                               std::uint64_t seed);

/// Renders one glyph; exposed for tests and tooling.
std::vector<float> render_glyph(int class_index, double shift, std::uint64_t sample_seed, const ImageShape& shape);

/// Reads `source/<class>/<img>` and `target_<name>/<class|unlabeled>/<img>`
/// (PNG or binary PPM). Images are resized to `shape`.
DatasetRegistry ingest_directory(const std::filesystem::path& root, const ImageShape& shape = {});

/// Writes a registry in the layout ingest_directory reads. Target samples go
/// under their hidden class when known, otherwise under `unlabeled/`.
void export_directory(const DatasetRegistry& registry, const std::filesystem::path& root);

}  // namespace mtda
