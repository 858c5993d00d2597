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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mtda {

/// Pass-by-pass pseudo-sample ingestion rendered from a run manifest.
/// Pure: nothing is recomputed from checkpoints or data.
struct PassReport {
  std::string table;  // fixed-width text, one row per pass
  std::string csv;
  std::string svg;    // average target accuracy after each pass
  std::vector<std::string> warnings;
  bool complete = false;
};

PassReport render_report(const nlohmann::json& manifest);

/// Reads <run_dir>/manifest.json and writes report.txt, report.csv and
/// accuracy_curve.svg next to it.
PassReport report_run_directory(const std::filesystem::path& run_dir);

}  // namespace mtda
