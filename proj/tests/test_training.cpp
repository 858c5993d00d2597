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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "gen.hpp"
#include "mtda/bench.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/eval.hpp"
#include "mtda/model.hpp"

using mtda::nn::Matrix;
using mtda::testing::Gen;

namespace {

mtda::ModelConfig tiny_model() {
  mtda::ModelConfig c;
  c.backbone.input = {3, 8, 8};
  c.backbone.conv_widths = {4, 6};
  c.backbone.feature_dim = 12;
  c.num_classes = 3;
  return c;
}

struct Hashes {
  std::uint64_t theta, phi, graph, psi;
  explicit Hashes(mtda::Network<double>& n)
      : theta(mtda::hash_parameters<double>(n.theta())),
        phi(mtda::hash_parameters<double>(n.phi())),
        graph(mtda::hash_parameters<double>(n.graph())),
        psi(mtda::hash_parameters<double>(n.psi())) {}
};

struct Fixture {
  Gen g{51};
  mtda::Network<double> net{tiny_model(), 5};
  mtda::Trainer<double> trainer;
  Matrix<double> images;
  std::vector<int> labels{0, 1, 2, 0, 1, 0, 0, 0};
  int labeled = 5;

  explicit Fixture(mtda::GraphLossWeights w = {}) : trainer(net, {1e-2, 0.9, 5e-4, 10.0}, w) {
    images = g.matrix(8, 3 * 64, 0.0, 1.0);
  }
};

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("discriminator phase touches only the discriminator") {
    Fixture f;
    const Hashes before(f.net);
    const Matrix<double> feats = f.net.backbone().forward(f.images, true);
    f.trainer.discriminator_phase(feats, f.labeled, 0.7);
    const Hashes after(f.net);
    CHECK(after.theta == before.theta);
    CHECK(after.phi == before.phi);
    CHECK(after.graph == before.graph);
    CHECK(after.psi != before.psi);
  }

  TEST_CASE("classifier phase touches only the extractor and MLP head") {
    Fixture f;
    const Hashes before(f.net);
    const Matrix<double> feats = f.net.backbone().forward(f.images, true);
    f.trainer.classifier_phase(feats, f.labels, f.labeled, 0.7);
    const Hashes after(f.net);
    CHECK(after.theta != before.theta);
    CHECK(after.phi != before.phi);
    CHECK(after.graph == before.graph);
    CHECK(after.psi == before.psi);
  }

  TEST_CASE("graph phase touches only the extractor and graph head") {
    Fixture f;
    const Hashes before(f.net);
    mtda::LossReport report;
    f.trainer.graph_phase(f.images, f.labels, f.labeled, report);
    const Hashes after(f.net);
    CHECK(after.theta != before.theta);
    CHECK(after.phi == before.phi);
    CHECK(after.graph != before.graph);
    CHECK(after.psi == before.psi);
    CHECK(report.weighted_gnn == doctest::Approx(report.l_bce_edge + 0.3 * report.l_ce_node));
  }

  TEST_CASE("zero graph weights leave the graph head unchanged") {
    Fixture f({0.0, 0.0});
    const Hashes before(f.net);
    f.trainer.adapt_step(f.images, f.labels, f.labeled, 1.0);
    CHECK(Hashes(f.net).graph == before.graph);
  }

  TEST_CASE("zero adversarial weight leaves the discriminator unchanged") {
    Fixture f;
    const Hashes before(f.net);
    const auto report = f.trainer.adapt_step(f.images, f.labels, f.labeled, 0.0);
    CHECK(Hashes(f.net).psi == before.psi);
    CHECK(report.lambda_adv == 0.0);
  }

  TEST_CASE("one iteration is bit-reproducible") {
    Fixture a, b;
    a.trainer.adapt_step(a.images, a.labels, a.labeled, 0.5);
    b.trainer.adapt_step(b.images, b.labels, b.labeled, 0.5);
    CHECK(mtda::hash_parameters<double>(a.net.all_parameters()) ==
          mtda::hash_parameters<double>(b.net.all_parameters()));
  }

  TEST_CASE("a non-finite loss aborts") {
    Fixture f;
    f.net.mlp().layer().bias().value(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(f.trainer.source_step(f.images, f.labels), mtda::RuntimeAbort);
  }

  TEST_CASE("source training, uncertainty and fine-tuning degenerate cases") {
    const auto reg = mtda::make_synthetic(4, 2, {0.1, 0.5}, 10, 3);
    mtda::HyperParams hp = mtda::desk_scale_hyperparams();
    hp.seed = 3;
    hp.source.max_iters = 0;
    auto learner = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    const auto h0 = learner->parameter_hash();
    CHECK(mtda::train_source(*learner, reg, hp).iterations == 0);
    CHECK(learner->parameter_hash() == h0);

    const mtda::PseudoSourceLedger ledger(reg.source, 4);
    CHECK(mtda::finetune(*learner, ledger, 0, hp).iterations == 0);
    CHECK(learner->parameter_hash() == h0);

    // Zero MLP head: uniform softmax, entropy ln 4 on every domain.
    learner->network().mlp().layer().weight().value.setZero();
    learner->network().mlp().layer().bias().value.setZero();
    for (const auto& t : reg.targets) CHECK(mtda::domain_uncertainty(*learner, t) == doctest::Approx(std::log(4.0)));
  }

  TEST_CASE("same seed gives the same source-trained parameters") {
    const auto reg = mtda::make_synthetic(4, 1, {0.2}, 10, 4);
    mtda::HyperParams hp = mtda::desk_scale_hyperparams();
    hp.seed = 4;
    hp.source.max_iters = 10;
    auto a = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    auto b = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    mtda::train_source(*a, reg, hp);
    mtda::train_source(*b, reg, hp);
    CHECK(a->parameter_hash() == b->parameter_hash());
  }

  TEST_CASE("fine-tuning on the source ledger does not lower ledger accuracy") {
    for (std::uint64_t seed : {5, 6, 7}) {
      const auto reg = mtda::make_synthetic(4, 1, {0.2}, 20, seed);
      mtda::HyperParams hp;
      hp.seed = seed;
      hp.source.max_iters = 60;
      auto learner = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
      mtda::train_source(*learner, reg, hp);
      const mtda::PseudoSourceLedger ledger(reg.source, 4);
      const auto r = mtda::finetune(*learner, ledger, 40, hp);
      REQUIRE(r.ledger_accuracy_before);
      REQUIRE(r.ledger_accuracy_after);
      MESSAGE("seed " << seed << ": ledger accuracy " << *r.ledger_accuracy_before << " -> " << *r.ledger_accuracy_after);
      CHECK(*r.ledger_accuracy_after >= *r.ledger_accuracy_before);
    }
  }

  TEST_CASE("fine-tuning at the end of a run does not lower ledger accuracy") {
    mtda::BenchSetup setup;
    setup.data.num_classes = 4;
    setup.data.num_targets = 3;
    setup.data.shifts = {0.1, 0.3, 0.6};
    setup.data.per_class = 20;
    auto hp = mtda::desk_scale_hyperparams();
    hp.K = 300;
    hp.K_star = 3;
    hp.K_prime = 60;
    hp.source.max_iters = 300;
    for (std::uint64_t seed : {3, 5}) {
      const auto cell = mtda::run_cell(setup, hp, seed);
      const auto& f = cell.result.finetune;
      REQUIRE(f.ledger_accuracy_before);
      REQUIRE(f.ledger_accuracy_after);
      MESSAGE("seed " << seed << ": ledger accuracy " << *f.ledger_accuracy_before << " -> " << *f.ledger_accuracy_after);
      CHECK(*f.ledger_accuracy_after >= *f.ledger_accuracy_before);
    }
  }

  TEST_CASE("bench rows are deterministic per seed") {
    mtda::BenchSetup setup;
    setup.data.num_classes = 3;
    setup.data.num_targets = 2;
    setup.data.shifts = {0.2, 0.5};
    setup.data.per_class = 10;
    setup.hp = mtda::desk_scale_hyperparams();
    setup.hp.K = 12;
    setup.hp.K_prime = 4;
    setup.hp.batch_source = 12;
    setup.hp.batch_target = 4;
    setup.hp.source.max_iters = 10;
    const auto a = mtda::bench_reiteration(setup, {1, 2}, {1, 3});
    const auto b = mtda::bench_reiteration(setup, {1, 2}, {1, 3});
    REQUIRE(a.size() == 2);
    CHECK(a[0].label == "1");
    CHECK(a[1].label == "3");
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].accuracy == b[i].accuracy);
    CHECK(mtda::bench_csv(a, "K_star") == mtda::bench_csv(b, "K_star"));
  }

  TEST_CASE("prediction is batch-size independent and works on one sample") {
    const auto reg = mtda::make_synthetic(4, 1, {0.3}, 10, 6);
    mtda::HyperParams hp;
    hp.seed = 6;
    hp.eval_batch = 7;
    auto small = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    hp.eval_batch = 256;
    auto large = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    const auto samples = mtda::sample_pointers(reg.targets[0]);
    CHECK(mtda::predict(*small, samples) == mtda::predict(*large, samples));
    const auto one = mtda::predict(*large, {samples[3]});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == mtda::predict(*large, samples)[3]);
  }
}
