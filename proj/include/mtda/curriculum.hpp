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

// Source training, uncertainty-ordered reiterative adaptation over the
// target domains, pseudo-source growth and final fine-tuning.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtda/adversarial.hpp"
#include "mtda/data.hpp"
#include "mtda/eval.hpp"
#include "mtda/learner.hpp"
#include "mtda/ledger.hpp"
#include "mtda/model.hpp"

namespace mtda {

inline constexpr int kManifestSchemaVersion = 1;

struct SourceConvergence {
  int patience = 5;
  double min_delta = 1e-3;
  int max_iters = 2000;
  int check_every = 25;  // iterations per moving-average window
};

struct HyperParams {
  int batch_source = 48;
  int batch_target = 16;
  double tau = 0.7;
  int K = 1500;
  int K_star = 3;
  int K_prime = 150;
  double lambda_edge = 1.0;
  double lambda_node = 0.3;
  double lambda_adv = 1.0;
  AdversarialSchedule::Mode lambda_schedule = AdversarialSchedule::Mode::kRamp;
  OptimizerConfig optimizer{};
  std::uint64_t seed = 7;
  SourceConvergence source{};
  bool reset_optimizers_each_pass = false;
  int eval_batch = 256;
  /// Fractions of each adaptation visit at which to record which samples
  /// would be accepted right then (diagnostics; does not change training).
  std::vector<double> probe_fractions;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  int iterations_per_visit() const { return K / K_star; }
  GraphLossWeights graph_weights() const { return {lambda_edge, lambda_node}; }
};

nlohmann::json hyperparams_to_json(const HyperParams& hp);

struct SourceTrainingReport {
  int iterations = 0;
  bool converged = false;
  double final_loss = 0.0;
};

/// Mean Shannon entropy of the MLP softmax over every sample of a domain.
double domain_uncertainty(Learner& learner, const Dataset& domain);

/// Argmin over `uncertainty`; ties go to the lowest domain id.
int select_domain(const std::map<int, double>& uncertainty);

/// Trains the extractor and MLP head on the labeled source until the
/// windowed mean loss stops improving by min_delta for `patience` windows,
/// or max_iters is reached.
SourceTrainingReport train_source(Learner& learner, const DatasetRegistry& registry, const HyperParams& hp);

/// A sample the graph head would accept, with its confidence.
struct Candidate {
  const Sample* sample = nullptr;
  int label = 0;
  double confidence = 0.0;
};

/// Scores every domain sample not yet in the ledger with the graph head.
/// Context batches hold batch_source ledger rows and up to batch_target
/// domain rows; the ledger rows come from a stream seeded by `seed`.
std::vector<Candidate> score_domain(Learner& learner, const Dataset& domain, const PseudoSourceLedger& ledger,
                                    const HyperParams& hp, std::uint64_t seed);

struct ProbeRecord {
  long long iteration = 0;  // adaptation iterations completed in this visit
  long long selected = 0;
  long long correct = 0;
  long long incorrect = 0;
};

struct IterationLog {
  long long iter = 0;  // global adaptation iteration, 1-based
  int pass = 0;
  int domain = 0;
  LossReport losses;
};

struct AdaptHooks {
  std::function<void(const IterationLog&)> on_iteration;
  /// Called before the first iteration and after iteration k when k is a probe point.
  std::function<void(long long completed)> on_probe;
  std::vector<long long> probe_points;
};

/// Runs `iterations` adaptation steps on one domain. `global_iter` is
/// advanced by the number of steps taken.
void adapt_domain(Learner& learner, const PseudoSourceLedger& ledger, const Dataset& domain, int iterations,
                  const HyperParams& hp, int pass, long long& global_iter, const AdaptHooks& hooks = {});

/// Adds every candidate above tau; returns the number added.
long long pseudo_label_domain(Learner& learner, const Dataset& domain, PseudoSourceLedger& ledger,
                              const HyperParams& hp, int pass, long long iteration);

struct FinetuneReport {
  int iterations = 0;
  std::optional<double> ledger_accuracy_before;
  std::optional<double> ledger_accuracy_after;
};

/// K' steps on ledger-only batches of batch_source + batch_target rows.
FinetuneReport finetune(Learner& learner, const PseudoSourceLedger& ledger, int iterations, const HyperParams& hp,
                        bool measure_ledger_accuracy = true);

struct DomainVisit {
  int pass = 0;
  int position = 0;
  int domain = 0;
  int iterations = 0;
  long long added = 0;
  long long correct = 0;
  long long incorrect = 0;
  std::size_t ledger_size = 0;  // after pseudo-labeling
  std::vector<ProbeRecord> probes;
};

struct PassSummary {
  int pass = 0;
  std::vector<int> order;
  std::map<int, double> uncertainty;  // measured at the start of the pass
  std::optional<double> average_target_accuracy;
};

struct RunOptions {
  std::ostream* metrics_csv = nullptr;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  nlohmann::json checkpoint_meta = nlohmann::json::object();  // merged into every checkpoint
  bool evaluate_each_pass = true;
  /// Receives the manifest after each stage (for crash-safe persistence).
  std::function<void(const nlohmann::json&)> on_manifest;
};

struct RunResult {
  PseudoSourceLedger ledger;
  SourceTrainingReport source;
  std::optional<EvalReport> source_only;
  std::vector<PassSummary> passes;
  std::vector<DomainVisit> visits;
  long long total_adaptation_iterations = 0;
  FinetuneReport finetune;
  EvalReport final_report;
  nlohmann::json manifest;

  std::vector<int> domain_sequence() const;
};

/// Writes the metrics CSV header.
void write_metrics_header(std::ostream& out);

/// Source training, K* passes over the targets in uncertainty order, then
/// fine-tuning. The registry must outlive the result (the ledger points
/// into it).
RunResult run(const DatasetRegistry& registry, const HyperParams& hp, Learner& learner, const RunOptions& options = {});

}  // namespace mtda
