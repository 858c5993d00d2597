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

#include "mtda/learner.hpp"

#include <algorithm>
#include <cmath>

#include "mtda/checkpoint.hpp"
#include "mtda/random.hpp"

namespace mtda {
namespace {

std::vector<const Sample*> samples_of(const std::vector<LabeledSample>& batch) {
  std::vector<const Sample*> out;
  out.reserve(batch.size());
  for (const auto& b : batch) out.push_back(b.sample);
  return out;
}

std::vector<int> labels_of(const std::vector<LabeledSample>& batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  for (const auto& b : batch) out.push_back(b.label);
  return out;
}

}  // namespace

NetworkLearner::NetworkLearner(const ModelConfig& config, const OptimizerConfig& optimizer,
                               const GraphLossWeights& weights, std::uint64_t seed, int eval_batch)
    : network_(std::make_unique<Network<float>>(config, seed)),
      trainer_(*network_, optimizer, weights),
      eval_batch_(std::max(1, eval_batch)) {}

std::unique_ptr<NetworkLearner> NetworkLearner::from_checkpoint(const std::filesystem::path& path, int eval_batch) {
  const auto file = read_checkpoint(path);
  if (!file.meta.contains("model")) throw IoError("checkpoint " + path.string() + " has no model description");
  auto learner = std::make_unique<NetworkLearner>(model_config_from_json(file.meta["model"]), OptimizerConfig{},
                                                  GraphLossWeights{}, 0, eval_batch);
  learner->network_->load_checkpoint(file);
  return learner;
}

double NetworkLearner::source_step(const std::vector<LabeledSample>& batch) {
  return trainer_.source_step(stack_images<float>(samples_of(batch)), labels_of(batch));
}

LossReport NetworkLearner::adapt_step(const Minibatch& batch, double lambda_adv) {
  auto rows = samples_of(batch.pseudo_source);
  rows.insert(rows.end(), batch.target.begin(), batch.target.end());
  auto labels = labels_of(batch.pseudo_source);
  labels.resize(rows.size(), 0);
  return trainer_.adapt_step(stack_images<float>(rows), labels, static_cast<int>(batch.pseudo_source.size()),
                             lambda_adv);
}

LossReport NetworkLearner::finetune_step(const std::vector<LabeledSample>& batch) {
  return trainer_.finetune_step(stack_images<float>(samples_of(batch)), labels_of(batch));
}

Eigen::MatrixXd NetworkLearner::mlp_probabilities(const std::vector<const Sample*>& samples) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), num_classes());
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(eval_batch_)) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(eval_batch_));
    const std::vector<const Sample*> chunk(samples.begin() + static_cast<std::ptrdiff_t>(start),
                                           samples.begin() + static_cast<std::ptrdiff_t>(end));
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
        trainer_.mlp_probabilities(stack_images<float>(chunk)).cast<double>();
  }
  return out;
}

Eigen::MatrixXd NetworkLearner::graph_probabilities(const Minibatch& batch) {
  auto rows = samples_of(batch.pseudo_source);
  rows.insert(rows.end(), batch.target.begin(), batch.target.end());
  return trainer_.graph_probabilities(stack_images<float>(rows)).cast<double>();
}

void NetworkLearner::save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta) {
  auto file = network_->to_checkpoint();
  for (const auto& [k, v] : meta.items())
    if (k != "model") file.meta[k] = v;
  write_checkpoint(path, file);
}

std::uint64_t NetworkLearner::parameter_hash() {
  auto params = network_->all_parameters();
  for (auto* b : network_->buffers()) params.push_back(b);
  return hash_parameters<float>(params);
}

// ---------------------------------------------------------------------------

double DryRunLearner::source_step(const std::vector<LabeledSample>& batch) {
  ++steps_;
  ++source_steps_;
  return 1.0 / static_cast<double>(source_steps_ + batch.size());
}

LossReport DryRunLearner::adapt_step(const Minibatch& batch, double lambda_adv) {
  MTDA_REQUIRE(!batch.pseudo_source.empty() && !batch.target.empty(), "dry-run adaptation needs both batch parts");
  ++steps_;
  ++adapt_steps_;
  LossReport r;
  r.lambda_adv = lambda_adv;
  r.l_ce_mlp = 1.0 / static_cast<double>(adapt_steps_);
  r.l_adv = std::log(2.0);
  return r;
}

LossReport DryRunLearner::finetune_step(const std::vector<LabeledSample>& batch) {
  MTDA_REQUIRE(!batch.empty(), "dry-run fine-tuning needs a batch");
  ++steps_;
  ++finetune_steps_;
  return {};
}

Eigen::MatrixXd DryRunLearner::mlp_probabilities(const std::vector<const Sample*>& samples) {
  // Sharper predictions for darker images, so domain uncertainty tracks the
  // mean intensity of the domain.
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), num_classes_);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& img = samples[i]->image;
    double mean = 0.0;
    for (float v : img) mean += v;
    mean = img.empty() ? 0.0 : mean / static_cast<double>(img.size());
    const double sharp = 8.0 * (1.0 - mean);
    const int top = samples[i]->index % num_classes_;
    double z = 0.0;
    for (int c = 0; c < num_classes_; ++c) z += std::exp(c == top ? sharp : 0.0);
    for (int c = 0; c < num_classes_; ++c)
      out(static_cast<Eigen::Index>(i), c) = std::exp(c == top ? sharp : 0.0) / z;
  }
  return out;
}

Eigen::MatrixXd DryRunLearner::graph_probabilities(const Minibatch& batch) {
  const auto rows = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(rows, num_classes_, 0.0);
  Eigen::Index r = 0;
  for (const auto& ls : batch.pseudo_source) out(r++, ls.label) = 1.0;
  for (const Sample* s : batch.target) {
    const auto id = s->id();
    const std::uint64_t h = derive_seed(seed_, "dry_run", {id.domain, id.index, static_cast<std::int64_t>(steps_)});
    const double w = static_cast<double>(h >> 11) * 0x1.0p-53;
    const int top = static_cast<int>(h % static_cast<std::uint64_t>(num_classes_));
    const double rest = num_classes_ > 1 ? (1.0 - w) / (num_classes_ - 1) : 0.0;
    for (int c = 0; c < num_classes_; ++c) out(r, c) = c == top ? std::max(w, rest) : std::min(w, rest);
    out.row(r) /= out.row(r).sum();
    ++r;
  }
  return out;
}

void DryRunLearner::save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta) {
  CheckpointFile file;
  file.meta = meta;
  file.meta["dry_run"] = true;
  file.meta["steps"] = steps_;
  write_checkpoint(path, file);
}

}  // namespace mtda
