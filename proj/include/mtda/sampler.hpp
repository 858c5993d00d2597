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

#include <cstdint>
#include <vector>

#include "mtda/data.hpp"
#include "mtda/ledger.hpp"
#include "mtda/random.hpp"

namespace mtda {

/// Draws indices in [0, n) without replacement within an epoch; when an
/// epoch runs out it reshuffles and keeps going.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed);

  std::vector<std::size_t> draw(std::size_t count);
  std::size_t population() const { return order_.size(); }
  std::size_t epochs_started() const { return epochs_; }

 private:
  void reshuffle();

  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epochs_ = 0;
  Rng rng_;
};

struct LabeledSample {
  const Sample* sample = nullptr;
  int label = 0;
};

/// B_s labeled rows from the pseudo-source and B_t unlabeled rows from the
/// domain being adapted. Target rows never carry labels.
struct Minibatch {
  std::vector<LabeledSample> pseudo_source;
  std::vector<const Sample*> target;

  std::size_t size() const { return pseudo_source.size() + target.size(); }
};

/// Source-heavy minibatch sampler over a fixed ledger snapshot and one
/// target domain. Single consumer.
class MinibatchSampler {
 public:
  MinibatchSampler(const PseudoSourceLedger& ledger, const Dataset& domain, int batch_source, int batch_target,
                   std::uint64_t seed);

  Minibatch next();

 private:
  const PseudoSourceLedger& ledger_;
  const Dataset& domain_;
  std::size_t ledger_size_;
  int batch_source_;
  int batch_target_;
  EpochSampler ledger_sampler_;
  EpochSampler target_sampler_;
};

/// Draws `count` labeled rows uniformly over the ledger (no target part).
class LedgerSampler {
 public:
  LedgerSampler(const PseudoSourceLedger& ledger, std::uint64_t seed);
  std::vector<LabeledSample> next(std::size_t count);

 private:
  const PseudoSourceLedger& ledger_;
  EpochSampler sampler_;
};

}  // namespace mtda
