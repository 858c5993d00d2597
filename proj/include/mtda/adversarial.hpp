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

#include <cmath>
#include <vector>

#include "mtda/losses.hpp"
#include "mtda/nn.hpp"

namespace mtda {

/// Domain discriminator d_f -> d_f -> 1. Scores near 1 mean "target",
/// near 0 mean "source / pseudo-source".
template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(int feature_dim)
      : fc1_("discriminator.fc1", feature_dim, feature_dim), fc2_("discriminator.fc2", feature_dim, 1) {}

  void reset(nn::InitRng& rng) {
    fc1_.reset(rng);
    fc2_.reset(rng);
  }

  /// Sigmoid domain scores, one per row.
  nn::Vector<T> forward(const nn::Matrix<T>& features) {
    const nn::Matrix<T> logits = fc2_.forward(relu_.forward(fc1_.forward(features)));
    scores_ = logits.col(0).unaryExpr([](T v) { return nn::sigmoid(v); });
    return scores_;
  }

  /// Gradient w.r.t. the features, given the gradient w.r.t. the scores.
  nn::Matrix<T> backward(const nn::Vector<T>& dscores) {
    nn::Matrix<T> dlogits = dscores.cwiseProduct(scores_.cwiseProduct((T(1) - scores_.array()).matrix()));
    return fc1_.backward(relu_.backward(fc2_.backward(dlogits)));
  }

  void collect(nn::ParameterList<T>& out) {
    fc1_.collect(out);
    fc2_.collect(out);
  }

  nn::Linear<T>& output_layer() { return fc2_; }

 private:
  nn::Linear<T> fc1_, fc2_;
  nn::LeakyRelu<T> relu_{0.0};
  nn::Vector<T> scores_;
};

/// Gradient reversal: identity forward, gradient scaled by -lambda backward.
template <typename T>
struct GradientReversal {
  double lambda = 1.0;

  const nn::Matrix<T>& forward(const nn::Matrix<T>& x) const { return x; }
  nn::Matrix<T> backward(const nn::Matrix<T>& grad) const { return grad * static_cast<T>(-lambda); }
};

/// Mean binary cross-entropy between domain scores and flags (0 for the
/// pseudo-source part, 1 for the target part).
template <typename T>
LossValue<T> adversarial_loss(const nn::Vector<T>& scores, const std::vector<int>& domain_flags) {
  if (scores.size() == 0) throw ContractViolation("adversarial loss on an empty batch");
  nn::Matrix<T> probs = scores;
  Eigen::MatrixXd targets(scores.size(), 1);
  for (Eigen::Index i = 0; i < scores.size(); ++i) targets(i, 0) = domain_flags.at(static_cast<std::size_t>(i));
  return binary_cross_entropy<T>(probs, targets, Eigen::MatrixXd::Ones(scores.size(), 1));
}

/// Adversarial weight schedule.
struct AdversarialSchedule {
  enum class Mode { kRamp, kFixed };
  Mode mode = Mode::kRamp;
  double ceiling = 1.0;

  /// progress: fraction of the current domain's adaptation iterations done.
  double weight(double progress) const {
    if (mode == Mode::kFixed) return ceiling;
    return ceiling * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
  }
};

}  // namespace mtda
