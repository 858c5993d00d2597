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

// The model bundle (extractor, MLP head, graph head, discriminator) and the
// per-iteration training procedures that update it.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <sstream>
#include <vector>

#include "mtda/adversarial.hpp"
#include "mtda/backbone.hpp"
#include "mtda/checkpoint.hpp"
#include "mtda/heads.hpp"
#include "mtda/losses.hpp"
#include "mtda/optimizer.hpp"

namespace mtda {

struct ModelConfig {
  BackboneSpec backbone;
  int num_classes = 0;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

template <typename T>
class Network {
 public:
  Network(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    MTDA_REQUIRE(config_.num_classes >= 1, "model needs at least one class");
    nn::InitRng rng(seed);
    backbone_ = make_backbone<T>(config_.backbone, rng);
    const int d = config_.backbone.feature_dim;
    mlp_ = MlpHead<T>(d, config_.num_classes);
    edge_ = EdgeNetwork<T>(d);
    node_ = NodeNetwork<T>(d, config_.num_classes);
    discriminator_ = Discriminator<T>(d);
    mlp_.reset(rng);
    edge_.reset(rng);
    node_.reset(rng);
    discriminator_.reset(rng);
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const ModelConfig& config() const { return config_; }
  FeatureExtractor<T>& backbone() { return *backbone_; }
  MlpHead<T>& mlp() { return mlp_; }
  EdgeNetwork<T>& edge() { return edge_; }
  NodeNetwork<T>& node() { return node_; }
  Discriminator<T>& discriminator() { return discriminator_; }

  /// Extractor parameters.
  nn::ParameterList<T> theta() {
    nn::ParameterList<T> out;
    backbone_->collect_parameters(out);
    return out;
  }
  /// MLP head.
  nn::ParameterList<T> phi() {
    nn::ParameterList<T> out;
    mlp_.collect(out);
    return out;
  }
  /// Graph head: edge network and node classifier.
  nn::ParameterList<T> graph() {
    nn::ParameterList<T> out;
    edge_.collect(out);
    node_.collect(out);
    return out;
  }
  /// Discriminator.
  nn::ParameterList<T> psi() {
    nn::ParameterList<T> out;
    discriminator_.collect(out);
    return out;
  }
  nn::ParameterList<T> all_parameters() {
    auto out = theta();
    for (auto* p : phi()) out.push_back(p);
    for (auto* p : graph()) out.push_back(p);
    for (auto* p : psi()) out.push_back(p);
    return out;
  }
  nn::ParameterList<T> buffers() {
    nn::ParameterList<T> out;
    backbone_->collect_buffers(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : all_parameters()) p->zero_grad();
  }

  CheckpointFile to_checkpoint() {
    CheckpointFile file;
    file.meta["model"] = model_config_to_json(config_);
    for (auto* p : all_parameters()) file.tensors.push_back(to_named_tensor(*p));
    for (auto* p : buffers()) file.tensors.push_back(to_named_tensor(*p));
    return file;
  }

  void load_checkpoint(const CheckpointFile& file) {
    auto params = all_parameters();
    for (auto* b : buffers()) params.push_back(b);
    load_named_tensors(file, params, /*require_all=*/true);
  }

 private:
  ModelConfig config_;
  std::unique_ptr<FeatureExtractor<T>> backbone_;
  MlpHead<T> mlp_;
  EdgeNetwork<T> edge_;
  NodeNetwork<T> node_;
  Discriminator<T> discriminator_;
};

struct OptimizerConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double head_lr_mult = 10.0;
};

struct GraphLossWeights {
  double edge = 1.0;
  double node = 0.3;
};

/// Gradient-step procedures on a Network. Each procedure owns a separate
/// optimizer so momentum never leaks between update groups:
///   source      (theta, phi)      supervised source training
///   adversary   (psi)             phase 1 of an adaptation iteration
///   classifier  (theta, phi)      phase 2
///   graph       (theta, graph)    phase 3
///   finetune    (theta, phi, graph)
template <typename T>
class Trainer {
 public:
  Trainer(Network<T>& net, OptimizerConfig opt, GraphLossWeights weights) : net_(net), weights_(weights) {
    const typename Sgd<T>::Options o{opt.momentum, opt.weight_decay};
    const double head_lr = opt.lr * opt.head_lr_mult;
    source_ = Sgd<T>(o);
    source_.add_group(net.theta(), opt.lr);
    source_.add_group(net.phi(), head_lr);
    adversary_ = Sgd<T>(o);
    adversary_.add_group(net.psi(), head_lr);
    classifier_ = Sgd<T>(o);
    classifier_.add_group(net.theta(), opt.lr);
    classifier_.add_group(net.phi(), head_lr);
    graph_ = Sgd<T>(o);
    graph_.add_group(net.theta(), opt.lr);
    graph_.add_group(net.graph(), head_lr);
    finetune_ = Sgd<T>(o);
    finetune_.add_group(net.theta(), opt.lr);
    finetune_.add_group(net.phi(), head_lr);
    finetune_.add_group(net.graph(), head_lr);
  }

  Network<T>& network() { return net_; }
  const GraphLossWeights& weights() const { return weights_; }

  void reset_optimizers() {
    for (auto* o : {&source_, &adversary_, &classifier_, &graph_, &finetune_}) o->reset_state();
  }

  /// One supervised step on labeled images; returns the cross-entropy.
  double source_step(const nn::Matrix<T>& images, const std::vector<int>& labels) {
    net_.zero_grad();
    const nn::Matrix<T> features = net_.backbone().forward(images, true);
    const auto ce = ce_mlp<T>(net_.mlp().forward(features), labels, all_rows(labels.size()));
    check_finite(ce.value, "source cross-entropy");
    net_.backbone().backward(net_.mlp().backward(ce.grad));
    source_.step();
    return ce.value;
  }

  /// One adaptation iteration. Rows [0, labeled_rows) are pseudo-source
  /// samples with `labels`; the remaining rows are target samples whose
  /// entries in `labels` are ignored. Phases run in order:
  ///   1. psi   <- min lambda_adv * l_adv                 (features detached)
  ///   2. theta, phi <- min l_ce_mlp - lambda_adv * l_adv  (gradient reversal)
  ///   3. theta, graph <- min lambda_edge * l_edge + lambda_node * l_node
  /// A phase whose objective weight is zero performs no update.
  LossReport adapt_step(const nn::Matrix<T>& images, const std::vector<int>& labels, int labeled_rows,
                        double lambda_adv) {
    LossReport report;
    report.lambda_adv = lambda_adv;
    const nn::Matrix<T> features = net_.backbone().forward(images, true);
    report.l_adv = discriminator_phase(features, labeled_rows, lambda_adv);
    report.l_ce_mlp = classifier_phase(features, labels, labeled_rows, lambda_adv);
    graph_phase(images, labels, labeled_rows, report);
    return report;
  }

  /// Phase 1. `features` must come from the latest training-mode backbone
  /// forward. Steps psi only; returns l_adv.
  double discriminator_phase(const nn::Matrix<T>& features, int labeled_rows, double lambda_adv) {
    const auto flags = domain_flags(features.rows(), labeled_rows);
    net_.zero_grad();
    const auto adv = adversarial_loss<T>(net_.discriminator().forward(features), flags);
    check_finite(adv.value, "adversarial loss");
    if (lambda_adv != 0.0) {
      net_.discriminator().backward(adv.grad.col(0) * static_cast<T>(lambda_adv));
      adversary_.step();
    }
    return adv.value;
  }

  /// Phase 2, on the same backbone forward as phase 1. Steps theta and phi;
  /// returns l_ce_mlp.
  double classifier_phase(const nn::Matrix<T>& features, const std::vector<int>& labels, int labeled_rows,
                          double lambda_adv) {
    const auto rows = features.rows();
    MTDA_REQUIRE(static_cast<Eigen::Index>(labels.size()) == rows, "one label slot per row is required");
    const auto flags = domain_flags(rows, labeled_rows);
    net_.zero_grad();
    const auto ce = ce_mlp<T>(net_.mlp().forward(features), labels, labeled_mask(rows, labeled_rows));
    check_finite(ce.value, "MLP cross-entropy");
    nn::Matrix<T> dfeatures = net_.mlp().backward(ce.grad);
    if (lambda_adv != 0.0) {
      const GradientReversal<T> grl{lambda_adv};
      const auto adv = adversarial_loss<T>(net_.discriminator().forward(grl.forward(features)), flags);
      dfeatures += grl.backward(net_.discriminator().backward(adv.grad.col(0)));
    }
    net_.backbone().backward(dfeatures);
    classifier_.step();
    return ce.value;
  }

  /// Phase 3: graph head with MLP pseudo-labels for the target rows. Runs
  /// its own backbone forward. Steps theta and the graph head; fills the
  /// graph fields of `report`.
  void graph_phase(const nn::Matrix<T>& images, const std::vector<int>& labels, int labeled_rows,
                   LossReport& report) {
    const auto rows = images.rows();
    MTDA_REQUIRE(static_cast<Eigen::Index>(labels.size()) == rows, "one label slot per row is required");
    const auto mask = labeled_mask(rows, labeled_rows);
    net_.zero_grad();
    const nn::Matrix<T> features = net_.backbone().forward(images, true);
    std::vector<int> pair_labels = labels;
    const nn::Matrix<T> logits = net_.mlp().forward(features);
    for (Eigen::Index i = labeled_rows; i < rows; ++i) {
      Eigen::Index best;
      logits.row(i).maxCoeff(&best);
      pair_labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    const nn::Matrix<T> affinity = net_.edge().forward(features);
    const auto edge_loss = bce_edge<T>(affinity, build_edge_targets(pair_labels));
    const auto node_loss = ce_node<T>(net_.node().forward(features, affinity), labels, mask);
    report.l_bce_edge = edge_loss.value;
    report.l_ce_node = node_loss.value;
    report.weighted_gnn = weights_.edge * edge_loss.value + weights_.node * node_loss.value;
    check_finite(report.weighted_gnn, "graph loss");
    if (weights_.edge != 0.0 || weights_.node != 0.0) {
      const auto node_grads = net_.node().backward(node_loss.grad * static_cast<T>(weights_.node));
      const nn::Matrix<T> daffinity = edge_loss.grad * static_cast<T>(weights_.edge) + node_grads.affinity;
      net_.backbone().backward(node_grads.features + net_.edge().backward(daffinity));
      graph_.step();
    }
  }

  /// Supervised step on pseudo-source rows only: MLP cross-entropy plus the
  /// weighted graph losses, with assigned labels as ground truth.
  LossReport finetune_step(const nn::Matrix<T>& images, const std::vector<int>& labels) {
    const auto mask = all_rows(labels.size());
    net_.zero_grad();
    LossReport report;
    const nn::Matrix<T> features = net_.backbone().forward(images, true);
    const auto ce = ce_mlp<T>(net_.mlp().forward(features), labels, mask);
    const nn::Matrix<T> affinity = net_.edge().forward(features);
    const auto edge_loss = bce_edge<T>(affinity, build_edge_targets(labels));
    const auto node_loss = ce_node<T>(net_.node().forward(features, affinity), labels, mask);
    report.l_ce_mlp = ce.value;
    report.l_bce_edge = edge_loss.value;
    report.l_ce_node = node_loss.value;
    report.weighted_gnn = weights_.edge * edge_loss.value + weights_.node * node_loss.value;
    check_finite(ce.value + report.weighted_gnn, "fine-tuning loss");
    const auto node_grads = net_.node().backward(node_loss.grad * static_cast<T>(weights_.node));
    const nn::Matrix<T> daffinity = edge_loss.grad * static_cast<T>(weights_.edge) + node_grads.affinity;
    nn::Matrix<T> dfeatures = net_.mlp().backward(ce.grad) + node_grads.features + net_.edge().backward(daffinity);
    net_.backbone().backward(dfeatures);
    finetune_.step();
    return report;
  }

  /// Eval-mode MLP softmax.
  nn::Matrix<T> mlp_probabilities(const nn::Matrix<T>& images) {
    return nn::softmax_rows<T>(net_.mlp().forward(net_.backbone().forward(images, false)));
  }

  /// Eval-mode graph-head softmax; every row is classified in the context
  /// of the whole batch.
  nn::Matrix<T> graph_probabilities(const nn::Matrix<T>& images) {
    const nn::Matrix<T> features = net_.backbone().forward(images, false);
    const nn::Matrix<T> affinity = net_.edge().forward(features);
    return nn::softmax_rows<T>(net_.node().forward(features, affinity));
  }

 private:
  static std::vector<std::uint8_t> all_rows(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

  static std::vector<int> domain_flags(Eigen::Index rows, int labeled_rows) {
    MTDA_REQUIRE(labeled_rows >= 1 && labeled_rows <= rows, "bad labeled row count");
    std::vector<int> flags(static_cast<std::size_t>(rows), 1);
    std::fill_n(flags.begin(), labeled_rows, 0);
    return flags;
  }

  static std::vector<std::uint8_t> labeled_mask(Eigen::Index rows, int labeled_rows) {
    MTDA_REQUIRE(labeled_rows >= 1 && labeled_rows <= rows, "bad labeled row count");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows), 0);
    std::fill_n(mask.begin(), labeled_rows, 1);
    return mask;
  }

  static void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << what << " is not finite (" << v << ")";
      throw RuntimeAbort(msg.str());
    }
  }

  Network<T>& net_;
  GraphLossWeights weights_;
  Sgd<T> source_, adversary_, classifier_, graph_, finetune_;
};

}  // namespace mtda
