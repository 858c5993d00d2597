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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mtda/error.hpp"
#include "mtda/heads.hpp"
#include "mtda/nn.hpp"

namespace mtda {

/// Probability clamp used in every log term.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// A scalar loss and its gradient w.r.t. the loss input.
template <typename T>
struct LossValue {
  double value = 0.0;
  nn::Matrix<T> grad;
};

/// Per-iteration loss snapshot.
struct LossReport {
  double l_ce_mlp = 0.0;
  double l_bce_edge = 0.0;
  double l_ce_node = 0.0;
  double l_adv = 0.0;
  double weighted_gnn = 0.0;  // lambda_edge * l_bce_edge + lambda_node * l_ce_node
  double lambda_adv = 0.0;

  bool finite() const {
    return std::isfinite(l_ce_mlp) && std::isfinite(l_bce_edge) && std::isfinite(l_ce_node) && std::isfinite(l_adv);
  }
};

/// Mean cross-entropy over the rows selected by `mask`. The value clamps
/// p_y at epsilon; the gradient is the unclamped softmax gradient w.r.t. the
/// logits. Rows outside the mask get zero gradient.
template <typename T>
LossValue<T> cross_entropy(const nn::Matrix<T>& logits, const std::vector<int>& labels,
                           const std::vector<std::uint8_t>& mask) {
  MTDA_REQUIRE(static_cast<Eigen::Index>(labels.size()) == logits.rows() &&
                   static_cast<Eigen::Index>(mask.size()) == logits.rows(),
               "cross-entropy labels/mask do not match the logits");
  const auto rows = std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
  if (rows == 0) throw ContractViolation("cross-entropy mask selects no labeled rows");
  LossValue<T> out;
  out.grad = nn::Matrix<T>::Zero(logits.rows(), logits.cols());
  const double log_eps = std::log(kProbabilityEpsilon);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const int y = labels[static_cast<std::size_t>(i)];
    MTDA_REQUIRE(y >= 0 && y < logits.cols(), "cross-entropy label out of range");
    const Eigen::VectorXd z = logits.row(i).transpose().template cast<double>();
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    const double log_p = z(y) - lse;
    total += -std::max(log_p, log_eps);
    const Eigen::VectorXd p = (z.array() - lse).exp();
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      out.grad(i, c) = static_cast<T>((p(c) - (c == y ? 1.0 : 0.0)) / static_cast<double>(rows));
  }
  out.value = total / static_cast<double>(rows);
  return out;
}

/// Mean binary cross-entropy over entries where mask != 0, optionally
/// skipping the diagonal. Gradient is w.r.t. the probabilities, evaluated at
/// the clamped probability.
template <typename T>
LossValue<T> binary_cross_entropy(const nn::Matrix<T>& probs, const Eigen::MatrixXd& targets,
                                  const Eigen::MatrixXd& mask, bool skip_diagonal = false) {
  MTDA_REQUIRE(probs.rows() == targets.rows() && probs.cols() == targets.cols() && mask.rows() == probs.rows() &&
                   mask.cols() == probs.cols(),
               "binary cross-entropy shape mismatch");
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
      if (mask(i, j) != 0.0 && !(skip_diagonal && i == j)) ++count;
  if (count == 0) throw ContractViolation("binary cross-entropy mask selects no entries");
  LossValue<T> out;
  out.grad = nn::Matrix<T>::Zero(probs.rows(), probs.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      if (mask(i, j) == 0.0 || (skip_diagonal && i == j)) continue;
      const double p = std::clamp(static_cast<double>(probs(i, j)), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
      const double t = targets(i, j);
      total += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
      out.grad(i, j) = static_cast<T>((p - t) / (p * (1.0 - p)) / static_cast<double>(count));
    }
  out.value = total / static_cast<double>(count);
  return out;
}

/// MLP-head classification loss over the labeled (pseudo-source) rows.
template <typename T>
LossValue<T> ce_mlp(const nn::Matrix<T>& logits, const std::vector<int>& labels, const std::vector<std::uint8_t>& mask) {
  return cross_entropy<T>(logits, labels, mask);
}

/// Node-classifier loss; the same functional as ce_mlp on the graph logits.
template <typename T>
LossValue<T> ce_node(const nn::Matrix<T>& logits, const std::vector<int>& labels, const std::vector<std::uint8_t>& mask) {
  return cross_entropy<T>(logits, labels, mask);
}

/// Edge loss: mean BCE over the off-diagonal entries of the masked pair set.
template <typename T>
LossValue<T> bce_edge(const nn::Matrix<T>& affinity, const EdgeTargetMatrix& targets) {
  return binary_cross_entropy<T>(affinity, targets.values, targets.mask, /*skip_diagonal=*/true);
}

}  // namespace mtda
