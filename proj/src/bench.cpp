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

#include "mtda/bench.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

#include "mtda/random.hpp"

namespace mtda {
namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

HyperParams desk_scale_hyperparams() {
  HyperParams hp;
  hp.optimizer.lr = 1e-2;
  return hp;
}

std::unique_ptr<NetworkLearner> make_learner(const ModelConfig& model, const HyperParams& hp) {
  return std::make_unique<NetworkLearner>(model, hp.optimizer, hp.graph_weights(), derive_seed(hp.seed, "init"),
                                          hp.eval_batch);
}

CellRun run_cell(const BenchSetup& setup, const HyperParams& hp_in, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticSpec data = setup.data;
  data.seed = seed;
  data.shape = setup.backbone.input;
  HyperParams hp = hp_in;
  hp.seed = seed;
  CellRun cell;
  cell.registry = std::make_unique<DatasetRegistry>(make_synthetic(data));
  auto learner = make_learner({setup.backbone, cell.registry->num_classes}, hp);
  cell.result = run(*cell.registry, hp, *learner);
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cell;
}

double BenchRow::mean() const { return mean_of(accuracy); }
double BenchRow::mean_baseline() const { return mean_of(baseline); }

namespace {

void record(BenchRow& row, const BenchSetup& setup, const HyperParams& hp, std::uint64_t seed) {
  const CellRun cell = run_cell(setup, hp, seed);
  row.seeds.push_back(seed);
  row.accuracy.push_back(cell.result.final_report.average_target_accuracy);
  row.baseline.push_back(cell.result.source_only ? cell.result.source_only->average_target_accuracy : 0.0);
  if (setup.log) {
    std::ostringstream msg;
    msg << "cell " << row.label << " seed " << seed << ": accuracy " << row.accuracy.back() << " (source-only "
        << row.baseline.back() << ", " << cell.seconds << " s)";
    setup.log(msg.str());
  }
}

}  // namespace

std::vector<BenchRow> bench_reiteration(const BenchSetup& setup, const std::vector<std::uint64_t>& seeds,
                                        const std::vector<int>& k_stars) {
  std::vector<BenchRow> rows;
  for (int ks : k_stars) {
    HyperParams hp = setup.hp;
    hp.K_star = ks;
    hp.validate();
    BenchRow row;
    row.label = std::to_string(ks);
    for (auto seed : seeds) record(row, setup, hp, seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BenchRow> bench_batch_composition(const BenchSetup& setup, const std::vector<std::uint64_t>& seeds,
                                              const std::vector<std::pair<int, int>>& batches) {
  std::vector<BenchRow> rows;
  for (const auto& [bs, bt] : batches) {
    HyperParams hp = setup.hp;
    hp.batch_source = bs;
    hp.batch_target = bt;
    hp.validate();
    BenchRow row;
    row.label = std::to_string(bs) + "," + std::to_string(bt);
    for (auto seed : seeds) record(row, setup, hp, seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows, const std::string& key_column) {
  std::ostringstream out;
  out << '"' << key_column << "\",seeds,mean_accuracy,mean_source_only";
  std::size_t max_seeds = 0;
  for (const auto& r : rows) max_seeds = std::max(max_seeds, r.accuracy.size());
  for (std::size_t i = 0; i < max_seeds; ++i) out << ",seed_" << i;
  out << '\n';
  for (const auto& r : rows) {
    out << '"' << r.label << "\"," << r.seeds.size() << ',' << r.mean() << ',' << r.mean_baseline();
    for (double a : r.accuracy) out << ',' << a;
    out << '\n';
  }
  return out.str();
}

}  // namespace mtda
