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

#include <set>
#include <vector>

#include "mtda/data.hpp"

namespace mtda {

struct LedgerEntry {
  const Sample* sample = nullptr;
  SampleId id;
  int label = 0;
  double confidence = 1.0;
  int source_domain = 0;
  int reiteration = 0;  // 0 for true source samples
  long long accepted_at_iteration = 0;
};

/// The pseudo-source set: every labeled source sample plus the target
/// samples accepted so far. Append-only; a target sample enters at most once.
class PseudoSourceLedger {
 public:
  PseudoSourceLedger() = default;
  PseudoSourceLedger(const Dataset& source, int num_classes);

  /// Appends an accepted pseudo-sample. Throws ContractViolation on a
  /// duplicate, an out-of-range label, a source sample, or confidence <= tau.
  void accept(const Sample& sample, int label, double confidence, double tau, int reiteration,
              long long iteration);

  bool contains(SampleId id) const { return members_.contains(id); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const LedgerEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t origin_count() const { return origin_count_; }
  int num_classes() const { return num_classes_; }

 private:
  std::vector<LedgerEntry> entries_;
  std::set<SampleId> members_;
  std::size_t origin_count_ = 0;
  int num_classes_ = 0;
};

}  // namespace mtda
