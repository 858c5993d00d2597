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

// The dual classifier: a per-sample MLP head and a batch graph head made of
// a pairwise edge network and a node classifier over aggregated features.

#pragma once

#include <optional>
#include <vector>

#include "mtda/nn.hpp"

namespace mtda {

/// Leaky slope used by the hidden layers of the graph head.
inline constexpr double kGraphLeakySlope = 0.2;

/// Single fully connected layer d_f -> n_c producing pre-softmax logits.
template <typename T>
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(int feature_dim, int num_classes) : fc_("heads.mlp", feature_dim, num_classes) {}

  void reset(nn::InitRng& rng) { fc_.reset(rng); }
  nn::Matrix<T> forward(const nn::Matrix<T>& features) { return fc_.forward(features); }
  nn::Matrix<T> backward(const nn::Matrix<T>& dlogits) { return fc_.backward(dlogits); }
  void collect(nn::ParameterList<T>& out) { fc_.collect(out); }
  nn::Linear<T>& layer() { return fc_; }

 private:
  nn::Linear<T> fc_;
};

/// Scores every pair (i, j) of a batch from |f_i - f_j| with a three-layer
/// per-pair MLP (d -> d -> d/2 -> 1) and a sigmoid. Because the input is
/// symmetric, only pairs i < j are evaluated and mirrored; the diagonal is
/// the score of the zero difference vector.
template <typename T>
class EdgeNetwork {
 public:
  EdgeNetwork() = default;
  explicit EdgeNetwork(int feature_dim)
      : fc1_("heads.edge.fc1", feature_dim, feature_dim),
        fc2_("heads.edge.fc2", feature_dim, feature_dim / 2),
        fc3_("heads.edge.fc3", feature_dim / 2, 1),
        act1_(kGraphLeakySlope),
        act2_(kGraphLeakySlope) {}

  void reset(nn::InitRng& rng) {
    fc1_.reset(rng);
    fc2_.reset(rng);
    fc3_.reset(rng);
  }

  /// Returns the (B x B) affinity matrix with entries in (0, 1).
  nn::Matrix<T> forward(const nn::Matrix<T>& features) {
    const auto b = features.rows();
    if (b < 2) throw ContractViolation("edge network needs a batch of at least two samples");
    features_t_ = features.transpose();
    const Eigen::Index pairs = b * (b - 1) / 2;
    nn::Matrix<T> diffs_t = nn::Matrix<T>::Zero(features.cols(), pairs + 1);
    pair_i_.resize(static_cast<std::size_t>(pairs));
    pair_j_.resize(static_cast<std::size_t>(pairs));
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = i + 1; j < b; ++j, ++p) {
        pair_i_[static_cast<std::size_t>(p)] = i;
        pair_j_[static_cast<std::size_t>(p)] = j;
        diffs_t.col(p) = (features_t_.col(i) - features_t_.col(j)).cwiseAbs();
      }
    const nn::Matrix<T> scores = fc3_.forward(act2_.forward(fc2_.forward(act1_.forward(fc1_.forward(diffs_t.transpose())))));
    affinity_.resize(b, b);
    for (Eigen::Index q = 0; q < pairs; ++q) {
      const T a = nn::sigmoid(scores(q, 0));
      affinity_(pair_i_[static_cast<std::size_t>(q)], pair_j_[static_cast<std::size_t>(q)]) = a;
      affinity_(pair_j_[static_cast<std::size_t>(q)], pair_i_[static_cast<std::size_t>(q)]) = a;
    }
    affinity_.diagonal().setConstant(nn::sigmoid(scores(pairs, 0)));
    return affinity_;
  }

  /// Gradient w.r.t. the features of the last forward.
  nn::Matrix<T> backward(const nn::Matrix<T>& daffinity) {
    const Eigen::Index b = affinity_.rows();
    const Eigen::Index pairs = static_cast<Eigen::Index>(pair_i_.size());
    nn::Matrix<T> dscores(pairs + 1, 1);
    for (Eigen::Index q = 0; q < pairs; ++q) {
      const auto i = pair_i_[static_cast<std::size_t>(q)], j = pair_j_[static_cast<std::size_t>(q)];
      const T a = affinity_(i, j);
      dscores(q, 0) = (daffinity(i, j) + daffinity(j, i)) * a * (T(1) - a);
    }
    const T a0 = affinity_(0, 0);
    dscores(pairs, 0) = daffinity.diagonal().sum() * a0 * (T(1) - a0);
    const nn::Matrix<T> ddiffs_t =
        fc1_.backward(act1_.backward(fc2_.backward(act2_.backward(fc3_.backward(dscores))))).transpose();
    nn::Matrix<T> dfeatures_t = nn::Matrix<T>::Zero(features_t_.rows(), b);
    for (Eigen::Index q = 0; q < pairs; ++q) {
      const auto i = pair_i_[static_cast<std::size_t>(q)], j = pair_j_[static_cast<std::size_t>(q)];
      const nn::Vector<T> sign = (features_t_.col(i) - features_t_.col(j)).array().sign();
      const nn::Vector<T> g = ddiffs_t.col(q).cwiseProduct(sign);
      dfeatures_t.col(i) += g;
      dfeatures_t.col(j) -= g;
    }
    return dfeatures_t.transpose();
  }

  void collect(nn::ParameterList<T>& out) {
    fc1_.collect(out);
    fc2_.collect(out);
    fc3_.collect(out);
  }

 private:
  nn::Linear<T> fc1_, fc2_, fc3_;
  nn::LeakyRelu<T> act1_, act2_;
  nn::Matrix<T> features_t_;
  nn::Matrix<T> affinity_;
  std::vector<Eigen::Index> pair_i_, pair_j_;
};

/// Forces a unit self-affinity and row-normalizes, so every row is a convex
/// combination weight vector.
template <typename T>
nn::Matrix<T> normalize_affinity(const nn::Matrix<T>& affinity) {
  MTDA_REQUIRE(affinity.rows() == affinity.cols(), "affinity matrix must be square");
  nn::Matrix<T> a = affinity;
  a.diagonal().setOnes();
  const nn::Vector<T> sums = a.rowwise().sum();
  MTDA_REQUIRE((sums.array() > T(0)).all(), "affinity row sums to zero");
  return a.array().colwise() / sums.array();
}

/// Node classifier: concat(f_i, sum_j Anorm_ij f_j) -> 2 n_c -> n_c.
template <typename T>
class NodeNetwork {
 public:
  struct Gradients {
    nn::Matrix<T> features;
    nn::Matrix<T> affinity;
  };

  NodeNetwork() = default;
  NodeNetwork(int feature_dim, int num_classes)
      : fc1_("heads.node.fc1", 2 * feature_dim, 2 * num_classes),
        fc2_("heads.node.fc2", 2 * num_classes, num_classes),
        act_(kGraphLeakySlope) {}

  void reset(nn::InitRng& rng) {
    fc1_.reset(rng);
    fc2_.reset(rng);
  }

  nn::Matrix<T> forward(const nn::Matrix<T>& features, const nn::Matrix<T>& affinity) {
    MTDA_REQUIRE(affinity.rows() == features.rows() && affinity.cols() == features.rows(),
                 "affinity shape does not match the batch");
    features_ = features;
    self_looped_ = affinity;
    self_looped_.diagonal().setOnes();
    row_sums_ = self_looped_.rowwise().sum();
    MTDA_REQUIRE((row_sums_.array() > T(0)).all(), "affinity row sums to zero");
    normalized_ = self_looped_.array().colwise() / row_sums_.array();
    const auto d = features.cols();
    nn::Matrix<T> node_input(features.rows(), 2 * d);
    node_input.leftCols(d) = features;
    node_input.rightCols(d).noalias() = normalized_ * features;
    return fc2_.forward(act_.forward(fc1_.forward(node_input)));
  }

  Gradients backward(const nn::Matrix<T>& dlogits) {
    const auto d = features_.cols();
    const nn::Matrix<T> dinput = fc1_.backward(act_.backward(fc2_.backward(dlogits)));
    const nn::Matrix<T> daggregate = dinput.rightCols(d);
    Gradients g;
    g.features = dinput.leftCols(d);
    g.features.noalias() += normalized_.transpose() * daggregate;
    const nn::Matrix<T> dnormalized = daggregate * features_.transpose();
    const nn::Vector<T> row_dot = dnormalized.cwiseProduct(normalized_).rowwise().sum();
    g.affinity = (dnormalized.colwise() - row_dot).array().colwise() / row_sums_.array();
    g.affinity.diagonal().setZero();
    return g;
  }

  void collect(nn::ParameterList<T>& out) {
    fc1_.collect(out);
    fc2_.collect(out);
  }

  /// Row-normalized affinity used by the last forward.
  const nn::Matrix<T>& normalized_affinity() const { return normalized_; }

 private:
  nn::Linear<T> fc1_, fc2_;
  nn::LeakyRelu<T> act_;
  nn::Matrix<T> features_, self_looped_, normalized_;
  nn::Vector<T> row_sums_;
};

/// Pairwise "same class" targets for the edge loss.
struct EdgeTargetMatrix {
  Eigen::MatrixXd values;
  Eigen::MatrixXd mask;
};

/// values(i, j) = 1 iff labels i and j agree; every label must be present.
EdgeTargetMatrix build_edge_targets(const std::vector<std::optional<int>>& labels);
EdgeTargetMatrix build_edge_targets(const std::vector<int>& labels);

}  // namespace mtda
