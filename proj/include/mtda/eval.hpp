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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtda/data.hpp"
#include "mtda/learner.hpp"
#include "mtda/ledger.hpp"

namespace mtda {

/// Correct/incorrect pseudo-labels accepted for one domain in one pass.
struct AuditCell {
  int pass = 0;
  int domain = 0;
  long long correct = 0;
  long long incorrect = 0;
};

struct LedgerAudit {
  bool available = true;  // false when some accepted sample has no hidden truth
  std::vector<AuditCell> cells;

  long long total() const;
};

struct DomainAccuracy {
  int domain = 0;
  std::string name;
  double accuracy = 0.0;
  long long samples = 0;
};

struct EvalReport {
  std::vector<DomainAccuracy> per_domain;
  double average_target_accuracy = 0.0;
  LedgerAudit ledger_audit;
  std::vector<std::vector<long long>> confusion;  // [truth][predicted], over all scored target samples
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Argmax of the MLP head in eval mode; one sample at a time works.
std::vector<int> predict(Learner& learner, const std::vector<const Sample*>& samples);

std::vector<const Sample*> sample_pointers(const Dataset& dataset);

/// Accuracy of MLP predictions against `truth`; rows with unknown truth are skipped.
std::optional<double> accuracy(Learner& learner, const std::vector<const Sample*>& samples,
                               const std::vector<std::optional<int>>& truth);

/// Counts assigned-vs-true labels per (pass, domain) over the non-origin entries.
LedgerAudit audit_ledger(const PseudoSourceLedger& ledger, const DatasetRegistry& registry);

/// Per-target-domain MLP accuracy against hidden truth. Domains without
/// truth are reported in `warnings` and left out of the average.
EvalReport evaluate(Learner& learner, const DatasetRegistry& registry, const PseudoSourceLedger* ledger = nullptr);

void write_eval_report(const EvalReport& report, const std::filesystem::path& dir);

/// Average target accuracy after each pass as a standalone SVG line chart.
/// `baseline` draws a dashed reference line.
std::string accuracy_curve_svg(const std::vector<double>& per_pass_accuracy, std::optional<double> baseline);

}  // namespace mtda
