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

// The model-facing interface the curriculum engine drives, with the real
// network implementation and a deterministic dry-run stand-in.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtda/losses.hpp"
#include "mtda/model.hpp"
#include "mtda/sampler.hpp"

namespace mtda {

class Learner {
 public:
  virtual ~Learner() = default;

  virtual double source_step(const std::vector<LabeledSample>& batch) = 0;
  virtual LossReport adapt_step(const Minibatch& batch, double lambda_adv) = 0;
  virtual LossReport finetune_step(const std::vector<LabeledSample>& batch) = 0;

  /// Eval-mode MLP class probabilities, one row per sample.
  virtual Eigen::MatrixXd mlp_probabilities(const std::vector<const Sample*>& samples) = 0;
  /// Eval-mode graph-head probabilities for one context batch; rows follow
  /// the batch order (pseudo-source rows, then target rows).
  virtual Eigen::MatrixXd graph_probabilities(const Minibatch& batch) = 0;

  virtual void reset_optimizers() = 0;
  virtual void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta) = 0;
  virtual std::uint64_t parameter_hash() = 0;
  virtual int num_classes() const = 0;
};

/// Stacks sample images into a (B x C*H*W) matrix.
template <typename T>
nn::Matrix<T> stack_images(const std::vector<const Sample*>& samples) {
  MTDA_REQUIRE(!samples.empty(), "cannot stack an empty batch");
  const auto width = static_cast<Eigen::Index>(samples.front()->image.size());
  nn::Matrix<T> out(static_cast<Eigen::Index>(samples.size()), width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    MTDA_REQUIRE(static_cast<Eigen::Index>(samples[i]->image.size()) == width, "mixed image sizes in one batch");
    for (Eigen::Index k = 0; k < width; ++k)
      out(static_cast<Eigen::Index>(i), k) = static_cast<T>(samples[i]->image[static_cast<std::size_t>(k)]);
  }
  return out;
}

/// The real model: a float32 Network driven through a Trainer.
class NetworkLearner final : public Learner {
 public:
  NetworkLearner(const ModelConfig& config, const OptimizerConfig& optimizer, const GraphLossWeights& weights,
                 std::uint64_t seed, int eval_batch = 256);

  /// Restores parameters and model configuration from a checkpoint.
  static std::unique_ptr<NetworkLearner> from_checkpoint(const std::filesystem::path& path, int eval_batch = 256);

  double source_step(const std::vector<LabeledSample>& batch) override;
  LossReport adapt_step(const Minibatch& batch, double lambda_adv) override;
  LossReport finetune_step(const std::vector<LabeledSample>& batch) override;
  Eigen::MatrixXd mlp_probabilities(const std::vector<const Sample*>& samples) override;
  Eigen::MatrixXd graph_probabilities(const Minibatch& batch) override;
  void reset_optimizers() override { trainer_.reset_optimizers(); }
  void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta) override;
  std::uint64_t parameter_hash() override;
  int num_classes() const override { return network_->config().num_classes; }

  Network<float>& network() { return *network_; }

 private:
  std::unique_ptr<Network<float>> network_;
  Trainer<float> trainer_;
  int eval_batch_;
};

/// A model-free learner for exercising the engine's bookkeeping quickly.
/// Uncertainty grows with the mean image intensity of a domain, graph
/// confidences are a hash of (sample, call count), and steps only count.
class DryRunLearner final : public Learner {
 public:
  DryRunLearner(int num_classes, std::uint64_t seed) : num_classes_(num_classes), seed_(seed) {}

  double source_step(const std::vector<LabeledSample>& batch) override;
  LossReport adapt_step(const Minibatch& batch, double lambda_adv) override;
  LossReport finetune_step(const std::vector<LabeledSample>& batch) override;
  Eigen::MatrixXd mlp_probabilities(const std::vector<const Sample*>& samples) override;
  Eigen::MatrixXd graph_probabilities(const Minibatch& batch) override;
  void reset_optimizers() override {}
  void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta) override;
  std::uint64_t parameter_hash() override { return steps_; }
  int num_classes() const override { return num_classes_; }

  long long adapt_steps() const { return adapt_steps_; }
  long long source_steps() const { return source_steps_; }
  long long finetune_steps() const { return finetune_steps_; }

 private:
  int num_classes_;
  std::uint64_t seed_;
  std::uint64_t steps_ = 0;
  long long adapt_steps_ = 0;
  long long source_steps_ = 0;
  long long finetune_steps_ = 0;
};

}  // namespace mtda
