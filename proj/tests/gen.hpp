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

// Hand-rolled generators and a central-difference helper for the unit tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mtda/data.hpp"
#include "mtda/nn.hpp"
#include "mtda/random.hpp"

namespace mtda::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return lo + static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(hi - lo + 1))); }
  double real(double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng_); }

  std::vector<int> labels(int n, int classes) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = integer(0, classes - 1);
    return out;
  }

  nn::Matrix<double> matrix(Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
    nn::Matrix<double> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = real(lo, hi);
    return m;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

/// Relative error that tolerates tiny magnitudes.
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

/// Central difference of `loss` w.r.t. one entry of `value`.
inline double central_difference(nn::Matrix<double>& value, Eigen::Index i, Eigen::Index j,
                                 const std::function<double()>& loss, double h = 1e-6) {
  const double keep = value(i, j);
  value(i, j) = keep + h;
  const double up = loss();
  value(i, j) = keep - h;
  const double down = loss();
  value(i, j) = keep;
  return (up - down) / (2.0 * h);
}

/// A tiny registry with hand-set images, for tests that need real Samples.
inline DatasetRegistry toy_registry(int num_classes, int per_class, int targets, int per_target, std::uint64_t seed) {
  Gen g(seed);
  DatasetRegistry r;
  r.num_classes = num_classes;
  for (int c = 0; c < num_classes; ++c) r.class_names.push_back("c" + std::to_string(c));
  const ImageShape shape{1, 4, 4};
  r.source.name = "source";
  r.source.domain_id = 0;
  r.source.shape = shape;
  int idx = 0;
  for (int c = 0; c < num_classes; ++c)
    for (int k = 0; k < per_class; ++k) {
      Sample s;
      s.image.resize(static_cast<std::size_t>(shape.size()));
      for (auto& v : s.image) v = static_cast<float>(g.real(0.0, 1.0));
      s.label = c;
      s.domain_id = 0;
      s.index = idx++;
      r.source.samples.push_back(std::move(s));
    }
  for (int t = 1; t <= targets; ++t) {
    Dataset d;
    d.name = "t" + std::to_string(t);
    d.domain_id = t;
    d.shape = shape;
    std::vector<std::optional<int>> truth;
    for (int k = 0; k < per_target; ++k) {
      Sample s;
      s.image.resize(static_cast<std::size_t>(shape.size()));
      for (auto& v : s.image) v = static_cast<float>(g.real(0.0, 1.0));
      s.domain_id = t;
      s.index = k;
      d.samples.push_back(std::move(s));
      truth.emplace_back(k % num_classes);
    }
    r.targets.push_back(std::move(d));
    r.hidden_truth.push_back(std::move(truth));
  }
  return r;
}

}  // namespace mtda::testing
