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

#include "mtda/heads.hpp"

namespace mtda {

EdgeTargetMatrix build_edge_targets(const std::vector<std::optional<int>>& labels) {
  std::vector<int> known;
  known.reserve(labels.size());
  for (const auto& l : labels) {
    if (!l) throw ContractViolation("edge targets need a label or pseudo-label for every row");
    known.push_back(*l);
  }
  return build_edge_targets(known);
}

EdgeTargetMatrix build_edge_targets(const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  EdgeTargetMatrix out{Eigen::MatrixXd(n, n), Eigen::MatrixXd::Ones(n, n)};
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      out.values(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  return out;
}

}  // namespace mtda
