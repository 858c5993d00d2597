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

#include "mtda/report.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "mtda/curriculum.hpp"
#include "mtda/error.hpp"
#include "mtda/eval.hpp"

namespace mtda {
namespace {

std::string percent(const nlohmann::json& v) {
  if (!v.is_number()) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v.get<double>();
  return s.str();
}

}  // namespace

PassReport render_report(const nlohmann::json& manifest) {
  PassReport out;
  if (!manifest.is_object() || !manifest.contains("passes"))
    throw IoError("manifest has no 'passes' array; not a run manifest");
  if (manifest.value("schema_version", 0) != kManifestSchemaVersion)
    throw SchemaVersionError("manifest schema version " + manifest.value("schema_version", nlohmann::json()).dump() +
                             " is not supported (expected " + std::to_string(kManifestSchemaVersion) + ")");
  out.complete = manifest.value("status", "") == "complete";
  if (!out.complete)
    out.warnings.push_back("run status is '" + manifest.value("status", std::string("unknown")) +
                           "'; report covers the passes recorded so far");

  // Column order: domain id ascending.
  std::map<int, std::string> names;
  if (manifest.contains("dataset"))
    for (const auto& t : manifest["dataset"]["targets"]) names[t["domain"].get<int>()] = t["name"].get<std::string>();
  for (const auto& pass : manifest["passes"])
    for (const auto& v : pass["visits"]) names.emplace(v["domain"].get<int>(), v["name"].get<std::string>());

  int expected_passes = 0;
  if (manifest.contains("hyperparameters")) expected_passes = manifest["hyperparameters"].value("K_star", 0);

  std::ostringstream table, csv;
  table << std::left << std::setw(6) << "pass";
  csv << "pass";
  for (const auto& [id, name] : names) {
    table << std::right << std::setw(14) << name;
    csv << ',' << name << "_added," << name << "_correct," << name << "_incorrect";
  }
  table << std::setw(10) << "total" << std::setw(12) << "avg acc %" << '\n';
  csv << ",total,average_target_accuracy\n";

  std::vector<double> curve;
  for (const auto& pass : manifest["passes"]) {
    std::map<int, nlohmann::json> by_domain;
    for (const auto& v : pass["visits"]) by_domain[v["domain"].get<int>()] = v;
    long long total = 0;
    table << std::left << std::setw(6) << pass["pass"].get<int>();
    csv << pass["pass"].get<int>();
    for (const auto& [id, name] : names) {
      const auto it = by_domain.find(id);
      if (it == by_domain.end()) {
        table << std::right << std::setw(14) << "-";
        csv << ",,,";
        continue;
      }
      const long long added = it->second["added"].get<long long>();
      total += added;
      std::string cell = std::to_string(added);
      const auto& inc = it->second["incorrect"];
      if (inc.is_number()) cell += " (" + std::to_string(inc.get<long long>()) + "x)";
      table << std::right << std::setw(14) << cell;
      csv << ',' << added << ',' << (it->second["correct"].is_number() ? it->second["correct"].dump() : "") << ','
          << (inc.is_number() ? inc.dump() : "");
    }
    const auto& acc = pass["average_target_accuracy"];
    table << std::setw(10) << total << std::setw(12) << percent(acc) << '\n';
    csv << ',' << total << ',' << (acc.is_number() ? acc.dump() : "") << '\n';
    if (acc.is_number()) curve.push_back(acc.get<double>());
  }
  const auto recorded = static_cast<int>(manifest["passes"].size());
  if (expected_passes > recorded)
    out.warnings.push_back(std::to_string(expected_passes - recorded) + " of " + std::to_string(expected_passes) +
                           " passes missing");

  table << "\n(n x) = pseudo-samples whose assigned label disagrees with the hidden ground truth\n";
  if (manifest.contains("source_only") && manifest["source_only"].is_object())
    table << "source-only average accuracy: " << percent(manifest["source_only"]["average"]) << "%\n";
  if (manifest.contains("final") && manifest["final"].is_object())
    table << "final average accuracy:       " << percent(manifest["final"]["average"]) << "%\n";

  std::optional<double> baseline;
  if (manifest.contains("source_only") && manifest["source_only"].is_object() &&
      manifest["source_only"]["average"].is_number())
    baseline = manifest["source_only"]["average"].get<double>();
  out.table = table.str();
  out.csv = csv.str();
  out.svg = accuracy_curve_svg(curve, baseline);
  return out;
}

PassReport report_run_directory(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("no manifest at " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
  auto report = render_report(manifest);
  std::ofstream(run_dir / "report.txt") << report.table;
  std::ofstream(run_dir / "report.csv") << report.csv;
  std::ofstream(run_dir / "accuracy_curve.svg") << report.svg;
  return report;
}

}  // namespace mtda
