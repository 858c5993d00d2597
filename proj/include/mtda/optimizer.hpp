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
#include <cstring>
#include <vector>

#include "mtda/nn.hpp"

namespace mtda {

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- mu * v + (g + wd * w);  w <- w - lr * v
template <typename T>
class Sgd {
 public:
  struct Options {
    double momentum = 0.9;
    double weight_decay = 5e-4;
  };

  Sgd() = default;
  explicit Sgd(Options options) : options_(options) {}

  void add_group(const nn::ParameterList<T>& params, double lr) {
    for (auto* p : params) {
      entries_.push_back({p, lr, nn::Matrix<T>::Zero(p->value.rows(), p->value.cols())});
    }
  }

  void step() {
    const T mu = static_cast<T>(options_.momentum);
    const T wd = static_cast<T>(options_.weight_decay);
    for (auto& e : entries_) {
      e.velocity = mu * e.velocity + e.param->grad + wd * e.param->value;
      e.param->value -= static_cast<T>(e.lr) * e.velocity;
    }
  }

  void zero_grad() {
    for (auto& e : entries_) e.param->zero_grad();
  }

  void reset_state() {
    for (auto& e : entries_) e.velocity.setZero();
  }

 private:
  struct Entry {
    nn::Parameter<T>* param;
    double lr;
    nn::Matrix<T> velocity;
  };
  Options options_;
  std::vector<Entry> entries_;
};

/// FNV-1a over the raw bytes of the parameter values.
template <typename T>
std::uint64_t hash_parameters(const nn::ParameterList<T>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(p->value.size()) * sizeof(T); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace mtda
