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

// Desk-scale ablation suite on synthetic data. Every cell is an
// independent run seeded only by its own seed.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mtda/curriculum.hpp"
#include "mtda/data.hpp"

namespace mtda {

struct BenchSetup {
  SyntheticSpec data;  // data.seed is replaced by the cell seed
  HyperParams hp;      // hp.seed is replaced by the cell seed
  BackboneSpec backbone;
  /// Optional progress sink, called once per finished cell.
  std::function<void(const std::string&)> log;
};

/// Defaults with base LR 1e-2: the small_conv backbone trains from scratch
/// on the synthetic benchmark and stalls at 1e-3 within the desk budget.
HyperParams desk_scale_hyperparams();

/// The model a cell trains: seeded from derive_seed(hp.seed, "init").
std::unique_ptr<NetworkLearner> make_learner(const ModelConfig& model, const HyperParams& hp);

/// One finished run with the registry its ledger points into.
struct CellRun {
  std::unique_ptr<DatasetRegistry> registry;
  RunResult result;
  double seconds = 0.0;
};

CellRun run_cell(const BenchSetup& setup, const HyperParams& hp, std::uint64_t seed);

struct BenchRow {
  std::string label;   // "1", "3", ... or "48,16"
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracy;  // final average target accuracy per seed
  std::vector<double> baseline;  // source-only average target accuracy per seed
  double mean() const;
  double mean_baseline() const;
};

/// Average target accuracy for each K* at fixed K.
std::vector<BenchRow> bench_reiteration(const BenchSetup& setup, const std::vector<std::uint64_t>& seeds,
                                        const std::vector<int>& k_stars = {1, 3, 5});

/// Average target accuracy for each (B_s, B_t).
std::vector<BenchRow> bench_batch_composition(const BenchSetup& setup, const std::vector<std::uint64_t>& seeds,
                                              const std::vector<std::pair<int, int>>& batches = {{32, 32}, {48, 16}});

/// `key_column` names the first column ("K_star" or "B_s,B_t").
std::string bench_csv(const std::vector<BenchRow>& rows, const std::string& key_column);

}  // namespace mtda
