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

#include "mtda/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "mtda/error.hpp"

namespace mtda {

long long LedgerAudit::total() const {
  long long n = 0;
  for (const auto& c : cells) n += c.correct + c.incorrect;
  return n;
}

std::vector<int> predict(Learner& learner, const std::vector<const Sample*>& samples) {
  std::vector<int> out;
  if (samples.empty()) return out;
  const Eigen::MatrixXd p = learner.mlp_probabilities(samples);
  out.reserve(samples.size());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best;
    p.row(i).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

std::vector<const Sample*> sample_pointers(const Dataset& dataset) {
  std::vector<const Sample*> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.push_back(&s);
  return out;
}

std::optional<double> accuracy(Learner& learner, const std::vector<const Sample*>& samples,
                               const std::vector<std::optional<int>>& truth) {
  MTDA_REQUIRE(samples.size() == truth.size(), "one truth slot per sample is required");
  const auto pred = predict(learner, samples);
  long long hit = 0, seen = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!truth[i]) continue;
    ++seen;
    hit += pred[i] == *truth[i];
  }
  if (seen == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(seen);
}

LedgerAudit audit_ledger(const PseudoSourceLedger& ledger, const DatasetRegistry& registry) {
  LedgerAudit audit;
  std::map<std::pair<int, int>, AuditCell> cells;
  for (std::size_t i = ledger.origin_count(); i < ledger.size(); ++i) {
    const auto& e = ledger[i];
    const auto truth = registry.truth(e.id);
    if (!truth) {
      audit.available = false;
      continue;
    }
    auto& cell = cells[{e.reiteration, e.source_domain}];
    cell.pass = e.reiteration;
    cell.domain = e.source_domain;
    (e.label == *truth ? cell.correct : cell.incorrect) += 1;
  }
  for (const auto& [key, cell] : cells) audit.cells.push_back(cell);
  return audit;
}

EvalReport evaluate(Learner& learner, const DatasetRegistry& registry, const PseudoSourceLedger* ledger) {
  EvalReport report;
  const int nc = registry.num_classes;
  report.confusion.assign(static_cast<std::size_t>(nc), std::vector<long long>(static_cast<std::size_t>(nc), 0));
  double sum = 0.0;
  for (const auto& domain : registry.targets) {
    if (!registry.has_truth(domain.domain_id)) {
      report.warnings.push_back("domain '" + domain.name + "' has no ground truth; accuracy skipped");
      continue;
    }
    const auto samples = sample_pointers(domain);
    const auto pred = predict(learner, samples);
    long long hit = 0, seen = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto truth = registry.truth(samples[i]->id());
      if (!truth) continue;
      ++seen;
      hit += pred[i] == *truth;
      if (*truth >= 0 && *truth < nc && pred[i] >= 0 && pred[i] < nc)
        ++report.confusion[static_cast<std::size_t>(*truth)][static_cast<std::size_t>(pred[i])];
    }
    DomainAccuracy acc{domain.domain_id, domain.name, seen ? static_cast<double>(hit) / seen : 0.0, seen};
    sum += acc.accuracy;
    report.per_domain.push_back(acc);
  }
  report.average_target_accuracy = report.per_domain.empty() ? 0.0 : sum / static_cast<double>(report.per_domain.size());
  if (ledger) {
    report.ledger_audit = audit_ledger(*ledger, registry);
    if (!report.ledger_audit.available)
      report.warnings.push_back("some pseudo-samples have no ground truth; ledger audit is partial");
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["per_domain_accuracy"] = nlohmann::json::array();
  for (const auto& d : per_domain)
    j["per_domain_accuracy"].push_back(
        {{"domain", d.domain}, {"name", d.name}, {"accuracy", d.accuracy}, {"samples", d.samples}});
  j["average_target_accuracy"] = average_target_accuracy;
  j["ledger_audit"] = {{"available", ledger_audit.available}, {"cells", nlohmann::json::array()}};
  for (const auto& c : ledger_audit.cells)
    j["ledger_audit"]["cells"].push_back(
        {{"pass", c.pass}, {"domain", c.domain}, {"correct", c.correct}, {"incorrect", c.incorrect}});
  j["confusion"] = confusion;
  j["warnings"] = warnings;
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "domain,name,accuracy,samples\n";
  for (const auto& d : per_domain) out << d.domain << ',' << d.name << ',' << d.accuracy << ',' << d.samples << '\n';
  out << "average,," << average_target_accuracy << ",\n";
  return out.str();
}

void write_eval_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream json(dir / "eval_report.json");
  std::ofstream csv(dir / "eval_report.csv");
  if (!json || !csv) throw IoError("cannot write eval report under " + dir.string());
  json << report.to_json().dump(2) << '\n';
  csv << report.to_csv();
}

std::string accuracy_curve_svg(const std::vector<double>& per_pass_accuracy, std::optional<double> baseline) {
  constexpr double kW = 480, kH = 300, kLeft = 50, kRight = 20, kTop = 20, kBottom = 40;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const auto n = per_pass_accuracy.size();
  auto x = [&](std::size_t i) { return kLeft + (n <= 1 ? pw / 2 : pw * static_cast<double>(i) / (n - 1)); };
  auto y = [&](double a) { return kTop + ph * (1.0 - std::clamp(a, 0.0, 1.0)); };
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double a = t / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(a) + 4 << "\" font-size=\"10\" text-anchor=\"end\">"
      << static_cast<int>(a * 100) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i)
    s << "<text x=\"" << x(i) << "\" y=\"" << kTop + ph + 14 << "\" font-size=\"10\" text-anchor=\"middle\">"
      << i + 1 << "</text>\n";
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 6
    << "\" font-size=\"11\" text-anchor=\"middle\">pass</text>\n";
  s << "<text x=\"12\" y=\"" << kTop + ph / 2 << "\" font-size=\"11\" transform=\"rotate(-90 12 " << kTop + ph / 2
    << ")\" text-anchor=\"middle\">avg target accuracy (%)</text>\n";
  if (baseline)
    s << "<line x1=\"" << kLeft << "\" y1=\"" << y(*baseline) << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << y(*baseline) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  if (n > 0) {
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) s << x(i) << ',' << y(per_pass_accuracy[i]) << ' ';
    s << "\"/>\n";
    for (std::size_t i = 0; i < n; ++i)
      s << "<circle cx=\"" << x(i) << "\" cy=\"" << y(per_pass_accuracy[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace mtda
