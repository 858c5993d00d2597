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

#include "doctest.h"
#include "gen.hpp"
#include "mtda/backbone.hpp"

using mtda::nn::Matrix;
using mtda::testing::Gen;

namespace {

mtda::BackboneSpec tiny_conv() {
  mtda::BackboneSpec s;
  s.input = {3, 8, 8};
  s.conv_widths = {4, 6};
  s.feature_dim = 10;
  return s;
}

mtda::BackboneSpec hybrid(int blocks) {
  mtda::BackboneSpec s;
  s.kind = mtda::BackboneKind::kHybridConvAttention;
  s.stem_channels = 64;
  s.embed_dim = 64;
  s.encoder_blocks = blocks;
  s.attention_heads = 4;
  s.mlp_ratio = 2;
  return s;
}

}  // namespace

TEST_SUITE("backbone") {
  TEST_CASE("small_conv output shape") {
    Gen g(31);
    mtda::nn::InitRng rng(1);
    mtda::BackboneSpec spec;
    auto net = mtda::make_backbone<float>(spec, rng);
    CHECK(net->forward(g.matrix(64, spec.input.size(), 0.0, 1.0).cast<float>(), false).cols() == 256);
    CHECK(net->forward(g.matrix(64, spec.input.size(), 0.0, 1.0).cast<float>(), false).rows() == 64);
    CHECK(net->forward(g.matrix(1, spec.input.size(), 0.0, 1.0).cast<float>(), false).rows() == 1);
    CHECK_THROWS_AS(net->forward(Matrix<float>::Zero(2, 10), false), mtda::ContractViolation);
  }

  TEST_CASE("eval mode is deterministic and per sample") {
    Gen g(32);
    mtda::nn::InitRng rng(2);
    auto net = mtda::make_backbone<double>(tiny_conv(), rng);
    Matrix<double> x = g.matrix(5, 3 * 64, 0.0, 1.0);
    x.row(4) = x.row(1);
    net->forward(x, true);  // moves the running statistics away from their init
    const Matrix<double> a = net->forward(x, false);
    const Matrix<double> b = net->forward(x, false);
    CHECK(a == b);
    CHECK(a.row(1) == a.row(4));
    CHECK(net->forward(x.topRows(1), false).row(0).isApprox(a.row(0), 1e-12));
  }

  TEST_CASE("small_conv parameter and input gradients match finite differences") {
    Gen g(33);
    mtda::nn::InitRng rng(3);
    auto net = mtda::make_backbone<double>(tiny_conv(), rng);
    Matrix<double> x = g.matrix(4, 3 * 64, 0.0, 1.0);
    const Matrix<double> w = g.matrix(4, 10);
    auto loss = [&] { return (net->forward(x, true).array() * w.array()).sum(); };
    mtda::nn::ParameterList<double> params;
    net->collect_parameters(params);
    for (auto* p : params) p->zero_grad();
    loss();
    const Matrix<double> dx = net->backward(w, true);
    // Probe set: first conv, bottleneck and batch-norm scale.
    struct Probe {
      std::size_t param;
      Eigen::Index i, j;
    };
    const std::vector<Probe> probes{{0, 1, 5}, {params.size() - 4, 3, 2}, {params.size() - 2, 0, 7}};
    for (const auto& pr : probes) {
      auto* p = params[pr.param];
      const double fd = mtda::testing::central_difference(p->value, pr.i, pr.j, loss);
      CHECK_MESSAGE(mtda::testing::rel_err(p->grad(pr.i, pr.j), fd) <= 1e-3, p->name);
    }
    for (Eigen::Index k : {3, 70, 150}) {
      const double fd = mtda::testing::central_difference(x, 2, k, loss);
      CHECK(mtda::testing::rel_err(dx(2, k), fd) <= 1e-3);
    }
  }

  TEST_CASE("hybrid parameter count matches the layer dimensions") {
    mtda::nn::InitRng rng(4);
    const auto spec = hybrid(2);
    auto net = mtda::build_hybrid_stub<double>(spec, rng);
    mtda::nn::ParameterList<double> params;
    net->collect_parameters(params);
    // stem 1792, embedding 4160, positions 4096, two blocks of 33472,
    // final norm 128, bottleneck 16640, batch norm 512.
    CHECK(mtda::nn::parameter_count(params) == 94272);
    CHECK(mtda::hybrid_parameter_count(spec) == 94272);
    mtda::nn::InitRng again(4);
    auto twin = mtda::build_hybrid_stub<double>(spec, again);
    mtda::nn::ParameterList<double> twin_params;
    twin->collect_parameters(twin_params);
    for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i]->value == twin_params[i]->value);
  }

  TEST_CASE("hybrid output width and row-stochastic attention") {
    Gen g(34);
    for (int blocks : {1, 3}) {
      mtda::nn::InitRng rng(5);
      const auto spec = hybrid(blocks);
      auto net = mtda::build_hybrid_stub<double>(spec, rng);
      const Matrix<double> f = net->forward(g.matrix(2, spec.input.size(), 0.0, 1.0), false);
      CHECK(f.rows() == 2);
      CHECK(f.cols() == 256);
      for (const auto& blk : net->blocks())
        for (const auto& a : blk.attention().attention()) {
          CHECK(a.rows() == net->tokens());
          CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
        }
    }
  }

  TEST_CASE("missing pretrained weights is a load error") {
    mtda::nn::InitRng rng(6);
    auto spec = hybrid(1);
    spec.pretrained_weights = "/nonexistent/weights.ckpt";
    CHECK_THROWS_AS(mtda::build_hybrid_stub<double>(spec, rng), mtda::IoError);
  }
}
