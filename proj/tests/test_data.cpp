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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "doctest.h"
#include "gen.hpp"
#include "mtda/bench.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/data.hpp"
#include "mtda/eval.hpp"
#include "mtda/sampler.hpp"

namespace fs = std::filesystem;
using mtda::testing::Gen;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mtda_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void touch_ppm(const fs::path& file) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << "P6\n2 2\n255\n";
  for (int i = 0; i < 12; ++i) out.put(static_cast<char>(i * 20));
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("synthetic sizes and determinism") {
    const auto a = mtda::make_synthetic(4, 3, {0.1, 0.3, 0.6}, 50, 7);
    CHECK(a.source.size() == 200);
    REQUIRE(a.targets.size() == 3);
    for (const auto& t : a.targets) CHECK(t.size() == 200);
    const auto b = mtda::make_synthetic(4, 3, {0.1, 0.3, 0.6}, 50, 7);
    for (std::size_t i = 0; i < a.source.size(); ++i) CHECK(a.source.samples[i].image == b.source.samples[i].image);
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 200; ++i) REQUIRE(a.targets[t].samples[i].image == b.targets[t].samples[i].image);
    const auto c = mtda::make_synthetic(4, 3, {0.1, 0.3, 0.6}, 50, 8);
    CHECK(a.source.samples[0].image != c.source.samples[0].image);
  }

  TEST_CASE("synthetic argument errors") {
    CHECK_THROWS_AS(mtda::make_synthetic(4, 3, {0.1, 0.3}, 50, 7), mtda::ConfigError);
    CHECK_THROWS_AS(mtda::make_synthetic(1, 1, {0.1}, 50, 7), mtda::ConfigError);
    CHECK_THROWS_AS(mtda::make_synthetic(4, 1, {0.1}, 9, 7), mtda::ConfigError);
  }

  TEST_CASE("target samples never carry labels") {
    const auto r = mtda::make_synthetic(3, 2, {0.2, 0.4}, 10, 1);
    for (const auto& t : r.targets)
      for (const auto& s : t.samples) CHECK_FALSE(s.label.has_value());
    CHECK(r.has_truth(1));
    CHECK(r.truth({2, 4}).has_value());
  }

  TEST_CASE("shift magnitude zero matches the source distribution") {
    const auto train = mtda::make_synthetic(4, 3, {0.0, 0.0, 0.0}, 50, 3);
    const auto held_out = mtda::make_synthetic(4, 1, {0.0}, 150, 4);
    mtda::HyperParams hp = mtda::desk_scale_hyperparams();
    hp.seed = 3;
    hp.source.max_iters = 300;
    auto learner = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    mtda::train_source(*learner, train, hp);
    std::vector<std::optional<int>> truth;
    for (const auto& s : held_out.source.samples) truth.push_back(s.label);
    const double source_acc = *mtda::accuracy(*learner, mtda::sample_pointers(held_out.source), truth);
    const double target_acc = mtda::evaluate(*learner, train).average_target_accuracy;
    MESSAGE("held-out source accuracy " << source_acc << ", target accuracy " << target_acc);
    CHECK(std::abs(source_acc - target_acc) <= 0.03);
  }

  TEST_CASE("source training converges on the synthetic benchmark") {
    const auto reg = mtda::make_synthetic(4, 3, {0.1, 0.3, 0.6}, 50, 7);
    const auto held_out = mtda::make_synthetic(4, 1, {0.0}, 50, 99);
    mtda::HyperParams hp = mtda::desk_scale_hyperparams();
    hp.seed = 7;
    auto learner = mtda::make_learner({mtda::BackboneSpec{}, 4}, hp);
    std::vector<std::optional<int>> truth;
    for (const auto& s : held_out.source.samples) truth.push_back(s.label);
    const auto untrained = *mtda::accuracy(*learner, mtda::sample_pointers(held_out.source), truth);
    const auto report = mtda::train_source(*learner, reg, hp);
    CHECK(report.iterations <= 2000);

    const double validation = *mtda::accuracy(*learner, mtda::sample_pointers(held_out.source), truth);
    std::vector<std::optional<int>> origin_truth;
    for (const auto& s : reg.source.samples) origin_truth.push_back(s.label);
    const double origin = *mtda::accuracy(*learner, mtda::sample_pointers(reg.source), origin_truth);
    const double h_same = mtda::domain_uncertainty(*learner, held_out.targets[0]);
    MESSAGE("untrained " << untrained << ", " << report.iterations << " iters, validation " << validation
                         << ", ledger origin " << origin << ", H(unshifted) " << h_same);
    CHECK(std::abs(untrained - 0.25) <= 0.15);
    CHECK(validation >= 0.90);
    CHECK(origin >= 0.95);
    CHECK(h_same <= 0.1);
  }

  TEST_CASE("minibatch composition") {
    const auto r = mtda::make_synthetic(4, 1, {0.3}, 20, 2);
    const mtda::PseudoSourceLedger ledger(r.source, 4);
    for (auto [bs, bt] : {std::pair{48, 16}, std::pair{32, 32}}) {
      mtda::MinibatchSampler s(ledger, r.targets[0], bs, bt, 9);
      for (int k = 0; k < 5; ++k) {
        const auto mb = s.next();
        CHECK(mb.pseudo_source.size() == static_cast<std::size_t>(bs));
        CHECK(mb.target.size() == static_cast<std::size_t>(bt));
        for (const auto& ls : mb.pseudo_source) CHECK(ls.label == *ls.sample->label);
      }
    }
  }

  TEST_CASE("ledger of 10 with B_s=48: each sample drawn 4 or 5 times") {
    const auto r = mtda::make_synthetic(2, 1, {0.3}, 10, 2);
    mtda::Dataset small = r.source;
    small.samples.resize(10);
    const mtda::PseudoSourceLedger ledger(small, 2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      mtda::LedgerSampler s(ledger, seed);
      std::map<int, int> counts;
      for (const auto& ls : s.next(48)) ++counts[ls.sample->index];
      REQUIRE(counts.size() == 10);
      for (const auto& [idx, n] : counts) CHECK((n == 4 || n == 5));
    }
  }

  TEST_CASE("epoch sampler draws every element equally often, plus or minus one") {
    Gen g(41);
    for (int trial = 0; trial < 50; ++trial) {
      const auto n = static_cast<std::size_t>(g.integer(1, 40));
      mtda::EpochSampler s(n, static_cast<std::uint64_t>(trial));
      std::vector<int> counts(n, 0);
      std::size_t drawn = 0;
      const int calls = g.integer(1, 30);
      for (int c = 0; c < calls; ++c) {
        const auto batch = s.draw(static_cast<std::size_t>(g.integer(1, 50)));
        for (auto i : batch) ++counts[i];
        drawn += batch.size();
      }
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
      CHECK(static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0)) == drawn);
    }
  }

  TEST_CASE("export then ingest round-trips images and hidden labels") {
    TempDir dir("roundtrip");
    mtda::SyntheticSpec spec;
    spec.num_classes = 3;
    spec.num_targets = 2;
    spec.shifts = {0.2, 0.5};
    spec.per_class = 10;
    spec.shape = {3, 8, 8};
    const auto original = mtda::make_synthetic(spec);
    mtda::export_directory(original, dir.path);
    const auto back = mtda::ingest_directory(dir.path, spec.shape);
    CHECK(back.num_classes == 3);
    REQUIRE(back.num_targets() == 2);
    CHECK(back.source.size() == original.source.size());

    // Group both registries by (domain, class name); order within a class is by index.
    auto group = [](const mtda::DatasetRegistry& r) {
      std::map<std::pair<int, std::string>, std::vector<std::vector<float>>> out;
      for (const auto& s : r.source.samples) out[{0, r.class_names[static_cast<std::size_t>(*s.label)]}].push_back(s.image);
      for (const auto& t : r.targets)
        for (const auto& s : t.samples)
          out[{t.domain_id, r.class_names[static_cast<std::size_t>(*r.truth(s.id()))]}].push_back(s.image);
      return out;
    };
    const auto a = group(original), b = group(back);
    REQUIRE(a.size() == b.size());
    for (const auto& [key, images] : a) {
      const auto& other = b.at(key);
      REQUIRE(images.size() == other.size());
      for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t k = 0; k < images[i].size(); ++k) REQUIRE(std::abs(images[i][k] - other[i][k]) <= 0.5f / 255.0f + 1e-6f);
    }
    for (const auto& t : back.targets)
      for (const auto& s : t.samples) CHECK_FALSE(s.label.has_value());
  }

  TEST_CASE("ingest counts and errors") {
    TempDir dir("ingest");
    for (const char* c : {"a", "b", "c"}) touch_ppm(dir.path / "source" / c / "0.ppm");
    touch_ppm(dir.path / "target_x" / "a" / "0.ppm");
    touch_ppm(dir.path / "target_y" / "unlabeled" / "0.ppm");
    const auto r = mtda::ingest_directory(dir.path, {3, 4, 4});
    CHECK(r.num_classes == 3);
    CHECK(r.num_targets() == 2);
    CHECK(r.has_truth(1));
    CHECK_FALSE(r.has_truth(2));

    touch_ppm(dir.path / "target_z" / "zebra" / "0.ppm");
    CHECK_THROWS_AS(mtda::ingest_directory(dir.path, {3, 4, 4}), mtda::LabelSpaceError);

    TempDir empty("nosource");
    touch_ppm(empty.path / "target_x" / "a" / "0.ppm");
    try {
      mtda::ingest_directory(empty.path);
      FAIL("expected a config error");
    } catch (const mtda::ConfigError& e) {
      CHECK(std::string(e.what()).find("label space undefined") != std::string::npos);
    }
  }
}
