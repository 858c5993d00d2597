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

#include "mtda/sampler.hpp"

#include <numeric>

#include "mtda/error.hpp"

namespace mtda {
namespace {

std::size_t require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw ContractViolation(what);
  return n;
}

}  // namespace

PseudoSourceLedger::PseudoSourceLedger(const Dataset& source, int num_classes) : num_classes_(num_classes) {
  for (const auto& s : source.samples) {
    MTDA_REQUIRE(s.label.has_value(), "pseudo-source must start from labeled source samples");
    entries_.push_back({&s, s.id(), *s.label, 1.0, s.domain_id, 0, 0});
    members_.insert(s.id());
  }
  origin_count_ = entries_.size();
}

void PseudoSourceLedger::accept(const Sample& sample, int label, double confidence, double tau, int reiteration,
                                long long iteration) {
  MTDA_REQUIRE(sample.domain_id != 0, "source samples are already in the pseudo-source");
  MTDA_REQUIRE(label >= 0 && label < num_classes_, "pseudo-label out of range");
  MTDA_REQUIRE(confidence > tau, "pseudo-sample confidence must exceed tau");
  MTDA_REQUIRE(!members_.contains(sample.id()), "target sample already in the pseudo-source");
  entries_.push_back({&sample, sample.id(), label, confidence, sample.domain_id, reiteration, iteration});
  members_.insert(sample.id());
}

EpochSampler::EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
  MTDA_REQUIRE(n > 0, "cannot sample from an empty population");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  reshuffle();
}

void EpochSampler::reshuffle() {
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[uniform_index(rng_, i)]);
  cursor_ = 0;
  ++epochs_;
}

std::vector<std::size_t> EpochSampler::draw(std::size_t count) {
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    if (cursor_ == order_.size()) reshuffle();
    out.push_back(order_[cursor_++]);
  }
  return out;
}

MinibatchSampler::MinibatchSampler(const PseudoSourceLedger& ledger, const Dataset& domain, int batch_source,
                                   int batch_target, std::uint64_t seed)
    : ledger_(ledger),
      domain_(domain),
      ledger_size_(ledger.size()),
      batch_source_(batch_source),
      batch_target_(batch_target),
      ledger_sampler_(require_nonempty(ledger.size(), "pseudo-source is empty"), derive_seed(seed, "ledger")),
      target_sampler_(require_nonempty(domain.size(), "target domain is empty"), derive_seed(seed, "target")) {
  MTDA_REQUIRE(batch_source >= 1 && batch_target >= 1, "batch sizes must be positive");
}

Minibatch MinibatchSampler::next() {
  MTDA_REQUIRE(ledger_.size() == ledger_size_, "pseudo-source changed while a sampler was live");
  Minibatch mb;
  for (auto i : ledger_sampler_.draw(static_cast<std::size_t>(batch_source_))) {
    const auto& e = ledger_[i];
    mb.pseudo_source.push_back({e.sample, e.label});
  }
  for (auto i : target_sampler_.draw(static_cast<std::size_t>(batch_target_))) mb.target.push_back(&domain_.samples[i]);
  return mb;
}

LedgerSampler::LedgerSampler(const PseudoSourceLedger& ledger, std::uint64_t seed)
    : ledger_(ledger), sampler_(require_nonempty(ledger.size(), "pseudo-source is empty"), seed) {}

std::vector<LabeledSample> LedgerSampler::next(std::size_t count) {
  std::vector<LabeledSample> out;
  for (auto i : sampler_.draw(count)) out.push_back({ledger_[i].sample, ledger_[i].label});
  return out;
}

}  // namespace mtda
