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

#include "mtda/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "mtda/error.hpp"
#include "mtda/random.hpp"
#include "mtda/sampler.hpp"

namespace mtda {

void HyperParams::validate() const {
  if (batch_source < 1) throw ConfigError("B_s must be >= 1", "hp.B_s");
  if (batch_target < 1) throw ConfigError("B_t must be >= 1", "hp.B_t");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)", "hp.tau");
  if (K < 0) throw ConfigError("K must be >= 0", "hp.K");
  if (K_star < 1) throw ConfigError("K* must be >= 1", "hp.K_star");
  if (K % K_star != 0) throw ConfigError("K not divisible by K*", "hp.K");
  if (K_prime < 0) throw ConfigError("K' must be >= 0", "hp.K_prime");
  if (lambda_edge < 0.0) throw ConfigError("lambda_edge must be >= 0", "hp.lambda_edge");
  if (lambda_node < 0.0) throw ConfigError("lambda_node must be >= 0", "hp.lambda_node");
  if (lambda_adv < 0.0) throw ConfigError("lambda_adv must be >= 0", "hp.lambda_adv");
  if (!(optimizer.lr > 0.0)) throw ConfigError("learning rate must be positive", "optim.lr");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0)
    throw ConfigError("momentum must lie in [0, 1)", "optim.momentum");
  if (optimizer.weight_decay < 0.0) throw ConfigError("weight decay must be >= 0", "optim.weight_decay");
  if (!(optimizer.head_lr_mult > 0.0)) throw ConfigError("head LR multiplier must be positive", "optim.head_lr_mult");
  if (source.patience < 1) throw ConfigError("patience must be >= 1", "source.patience");
  if (source.max_iters < 0) throw ConfigError("max_iters must be >= 0", "source.max_iters");
  if (source.check_every < 1) throw ConfigError("check_every must be >= 1", "source.check_every");
  if (eval_batch < 1) throw ConfigError("eval batch must be >= 1", "hp.eval_batch");
  for (double f : probe_fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("probe fractions must lie in [0, 1]", "hp.probe_fractions");
}

nlohmann::json hyperparams_to_json(const HyperParams& hp) {
  return {{"B_s", hp.batch_source},
          {"B_t", hp.batch_target},
          {"tau", hp.tau},
          {"K", hp.K},
          {"K_star", hp.K_star},
          {"K_prime", hp.K_prime},
          {"lambda_edge", hp.lambda_edge},
          {"lambda_node", hp.lambda_node},
          {"lambda_adv", hp.lambda_adv},
          {"lambda_schedule", hp.lambda_schedule == AdversarialSchedule::Mode::kRamp ? "ramp" : "fixed"},
          {"lr", hp.optimizer.lr},
          {"momentum", hp.optimizer.momentum},
          {"weight_decay", hp.optimizer.weight_decay},
          {"head_lr_mult", hp.optimizer.head_lr_mult},
          {"seed", hp.seed},
          {"source",
           {{"patience", hp.source.patience},
            {"min_delta", hp.source.min_delta},
            {"max_iters", hp.source.max_iters},
            {"check_every", hp.source.check_every}}},
          {"reset_optimizers_each_pass", hp.reset_optimizers_each_pass},
          {"probe_fractions", hp.probe_fractions}};
}

double domain_uncertainty(Learner& learner, const Dataset& domain) {
  if (domain.empty()) throw ContractViolation("cannot measure uncertainty of an empty domain '" + domain.name + "'");
  const Eigen::MatrixXd p = learner.mlp_probabilities(sample_pointers(domain));
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      if (p(i, c) > 0.0) total -= p(i, c) * std::log(p(i, c));
  return total / static_cast<double>(p.rows());
}

int select_domain(const std::map<int, double>& uncertainty) {
  MTDA_REQUIRE(!uncertainty.empty(), "no remaining domain to select");
  // std::map iterates in ascending id order, so strict < keeps the lowest id on ties.
  auto best = uncertainty.begin();
  for (auto it = uncertainty.begin(); it != uncertainty.end(); ++it)
    if (it->second < best->second) best = it;
  return best->first;
}

SourceTrainingReport train_source(Learner& learner, const DatasetRegistry& registry, const HyperParams& hp) {
  SourceTrainingReport report;
  if (hp.source.max_iters == 0) return report;
  const PseudoSourceLedger source(registry.source, registry.num_classes);
  LedgerSampler sampler(source, derive_seed(hp.seed, "source"));
  const auto batch = static_cast<std::size_t>(hp.batch_source + hp.batch_target);
  double best = std::numeric_limits<double>::infinity();
  double window = 0.0;
  int in_window = 0, stale = 0;
  while (report.iterations < hp.source.max_iters) {
    const double loss = learner.source_step(sampler.next(batch));
    ++report.iterations;
    report.final_loss = loss;
    window += loss;
    if (++in_window < hp.source.check_every) continue;
    const double mean = window / in_window;
    window = 0.0;
    in_window = 0;
    if (best - mean < hp.source.min_delta) {
      if (++stale >= hp.source.patience) {
        report.converged = true;
        break;
      }
    } else {
      stale = 0;
    }
    best = std::min(best, mean);
  }
  return report;
}

std::vector<Candidate> score_domain(Learner& learner, const Dataset& domain, const PseudoSourceLedger& ledger,
                                    const HyperParams& hp, std::uint64_t seed) {
  std::vector<const Sample*> pending;
  for (const auto& s : domain.samples)
    if (!ledger.contains(s.id())) pending.push_back(&s);
  std::vector<Candidate> out;
  if (pending.empty()) return out;
  LedgerSampler context(ledger, seed);
  const auto bt = static_cast<std::size_t>(hp.batch_target);
  for (std::size_t start = 0; start < pending.size(); start += bt) {
    Minibatch mb;
    mb.pseudo_source = context.next(static_cast<std::size_t>(hp.batch_source));
    mb.target.assign(pending.begin() + static_cast<std::ptrdiff_t>(start),
                     pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), start + bt)));
    const Eigen::MatrixXd p = learner.graph_probabilities(mb);
    const auto offset = static_cast<Eigen::Index>(mb.pseudo_source.size());
    for (std::size_t k = 0; k < mb.target.size(); ++k) {
      Eigen::Index best;
      const double w = p.row(offset + static_cast<Eigen::Index>(k)).maxCoeff(&best);
      out.push_back({mb.target[k], static_cast<int>(best), w});
    }
  }
  return out;
}

void adapt_domain(Learner& learner, const PseudoSourceLedger& ledger, const Dataset& domain, int iterations,
                  const HyperParams& hp, int pass, long long& global_iter, const AdaptHooks& hooks) {
  auto probe = [&](long long k) {
    if (hooks.on_probe && std::find(hooks.probe_points.begin(), hooks.probe_points.end(), k) != hooks.probe_points.end())
      hooks.on_probe(k);
  };
  if (iterations <= 0) {
    probe(0);
    return;
  }
  MinibatchSampler sampler(ledger, domain, hp.batch_source, hp.batch_target,
                           derive_seed(hp.seed, "adapt", {pass, domain.domain_id}));
  const AdversarialSchedule schedule{hp.lambda_schedule, hp.lambda_adv};
  for (int k = 0; k < iterations; ++k) {
    probe(k);
    const double lambda = schedule.weight(static_cast<double>(k) / iterations);
    const LossReport losses = learner.adapt_step(sampler.next(), lambda);
    ++global_iter;
    if (hooks.on_iteration) hooks.on_iteration({global_iter, pass, domain.domain_id, losses});
  }
  probe(iterations);
}

long long pseudo_label_domain(Learner& learner, const Dataset& domain, PseudoSourceLedger& ledger,
                              const HyperParams& hp, int pass, long long iteration) {
  const auto candidates =
      score_domain(learner, domain, ledger, hp, derive_seed(hp.seed, "plabel", {pass, domain.domain_id}));
  long long added = 0;
  for (const auto& c : candidates) {
    if (c.confidence > hp.tau) {
      ledger.accept(*c.sample, c.label, c.confidence, hp.tau, pass, iteration);
      ++added;
    }
  }
  return added;
}

namespace {

std::optional<double> ledger_accuracy(Learner& learner, const PseudoSourceLedger& ledger) {
  if (ledger.empty()) return std::nullopt;
  std::vector<const Sample*> samples;
  std::vector<std::optional<int>> labels;
  for (const auto& e : ledger.entries()) {
    samples.push_back(e.sample);
    labels.emplace_back(e.label);
  }
  return accuracy(learner, samples, labels);
}

}  // namespace

FinetuneReport finetune(Learner& learner, const PseudoSourceLedger& ledger, int iterations, const HyperParams& hp,
                        bool measure_ledger_accuracy) {
  FinetuneReport report;
  if (iterations <= 0) return report;
  if (measure_ledger_accuracy) report.ledger_accuracy_before = ledger_accuracy(learner, ledger);
  LedgerSampler sampler(ledger, derive_seed(hp.seed, "finetune"));
  const auto batch = static_cast<std::size_t>(hp.batch_source + hp.batch_target);
  for (int k = 0; k < iterations; ++k) {
    learner.finetune_step(sampler.next(batch));
    ++report.iterations;
  }
  if (measure_ledger_accuracy) report.ledger_accuracy_after = ledger_accuracy(learner, ledger);
  return report;
}

std::vector<int> RunResult::domain_sequence() const {
  std::vector<int> out;
  for (const auto& v : visits) out.push_back(v.domain);
  return out;
}

void write_metrics_header(std::ostream& out) {
  out << "iter,pass,domain,l_ce_mlp,l_bce_edge,l_ce_node,l_adv,lambda_adv\n";
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json uncertainty_json(const std::map<int, double>& h) {
  auto out = nlohmann::json::array();
  for (const auto& [d, v] : h) out.push_back({{"domain", d}, {"entropy", v}});
  return out;
}

nlohmann::json accuracy_json(const EvalReport& r) {
  nlohmann::json j;
  j["per_domain"] = nlohmann::json::array();
  for (const auto& d : r.per_domain)
    j["per_domain"].push_back({{"domain", d.domain}, {"name", d.name}, {"accuracy", d.accuracy}});
  j["average"] = r.average_target_accuracy;
  return j;
}

class ManifestBuilder {
 public:
  ManifestBuilder(const DatasetRegistry& registry, const HyperParams& hp) {
    m_["schema_version"] = kManifestSchemaVersion;
    m_["status"] = "running";
    m_["hyperparameters"] = hyperparams_to_json(hp);
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : registry.targets)
      targets.push_back({{"domain", t.domain_id}, {"name", t.name}, {"samples", t.size()}});
    m_["dataset"] = {{"num_classes", registry.num_classes},
                     {"source_samples", registry.source.size()},
                     {"targets", targets}};
    m_["passes"] = nlohmann::json::array();
  }

  nlohmann::json& json() { return m_; }

  void set_source(const SourceTrainingReport& s, const std::optional<EvalReport>& baseline) {
    m_["source_training"] = {{"iterations", s.iterations}, {"converged", s.converged}, {"final_loss", s.final_loss}};
    m_["source_only"] = baseline ? accuracy_json(*baseline) : nlohmann::json();
  }

  void add_pass(const PassSummary& p, const std::vector<DomainVisit>& visits,
                const std::vector<std::map<int, double>>& uncertainties, const DatasetRegistry& registry,
                bool has_truth) {
    nlohmann::json j;
    j["pass"] = p.pass;
    j["order"] = p.order;
    std::vector<std::string> names;
    for (int d : p.order) names.push_back(registry.domain(d).name);
    j["order_names"] = names;
    j["visits"] = nlohmann::json::array();
    for (std::size_t i = 0; i < visits.size(); ++i) {
      const auto& v = visits[i];
      nlohmann::json vj = {{"position", v.position},
                           {"domain", v.domain},
                           {"name", registry.domain(v.domain).name},
                           {"uncertainty", uncertainty_json(uncertainties[i])},
                           {"iterations", v.iterations},
                           {"added", v.added},
                           {"ledger_size", v.ledger_size}};
      vj["correct"] = has_truth ? nlohmann::json(v.correct) : nlohmann::json();
      vj["incorrect"] = has_truth ? nlohmann::json(v.incorrect) : nlohmann::json();
      if (!v.probes.empty()) {
        vj["probes"] = nlohmann::json::array();
        for (const auto& pr : v.probes)
          vj["probes"].push_back({{"iteration", pr.iteration},
                                  {"selected", pr.selected},
                                  {"correct", pr.correct},
                                  {"incorrect", pr.incorrect}});
      }
      j["visits"].push_back(vj);
    }
    j["average_target_accuracy"] = optional_json(p.average_target_accuracy);
    m_["passes"].push_back(j);
  }

 private:
  nlohmann::json m_;
};

struct Where {
  std::string stage = "setup";
  int pass = 0;
  int domain = 0;
  long long iteration = 0;
};

}  // namespace

RunResult run(const DatasetRegistry& registry, const HyperParams& hp, Learner& learner, const RunOptions& options) {
  hp.validate();
  registry.validate();
  if (registry.num_targets() < 1) throw ConfigError("at least one target domain is required", "data");
  if (learner.num_classes() != registry.num_classes)
    throw ConfigError("model class count does not match the dataset", "data");

  bool has_truth = true;
  for (const auto& t : registry.targets) has_truth = has_truth && registry.has_truth(t.domain_id);

  RunResult result;
  result.ledger = PseudoSourceLedger(registry.source, registry.num_classes);
  ManifestBuilder manifest(registry, hp);
  auto publish = [&] {
    result.manifest = manifest.json();
    if (options.on_manifest) options.on_manifest(result.manifest);
  };
  auto checkpoint = [&](const std::string& name, nlohmann::json meta) {
    if (options.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(options.checkpoint_dir);
    meta["ledger_size"] = result.ledger.size();
    for (const auto& [k, v] : options.checkpoint_meta.items()) meta[k] = v;
    learner.save_checkpoint(options.checkpoint_dir / name, meta);
  };
  if (options.metrics_csv) write_metrics_header(*options.metrics_csv);

  Where where;
  try {
    where.stage = "source_training";
    result.source = train_source(learner, registry, hp);
    if (has_truth) result.source_only = evaluate(learner, registry);
    manifest.set_source(result.source, result.source_only);
    checkpoint("source.ckpt", {{"stage", "source"}});
    publish();

    const int per_visit = hp.iterations_per_visit();
    for (int pass = 1; pass <= hp.K_star; ++pass) {
      where = {"adaptation", pass, 0, result.total_adaptation_iterations};
      if (hp.reset_optimizers_each_pass && pass > 1) learner.reset_optimizers();
      PassSummary summary;
      summary.pass = pass;
      std::vector<DomainVisit> visits;
      std::vector<std::map<int, double>> uncertainties;
      std::set<int> remaining;
      for (const auto& t : registry.targets) remaining.insert(t.domain_id);

      for (int q = 0; !remaining.empty(); ++q) {
        std::map<int, double> h;
        for (int d : remaining) h[d] = domain_uncertainty(learner, registry.domain(d));
        if (q == 0) summary.uncertainty = h;
        const int chosen = select_domain(h);
        const Dataset& domain = registry.domain(chosen);
        where.domain = chosen;

        DomainVisit visit;
        visit.pass = pass;
        visit.position = q;
        visit.domain = chosen;
        visit.iterations = per_visit;

        AdaptHooks hooks;
        hooks.on_iteration = [&](const IterationLog& log) {
          where.iteration = log.iter;
          if (!options.metrics_csv) return;
          auto& out = *options.metrics_csv;
          out << log.iter << ',' << log.pass << ',' << domain.name << ',' << log.losses.l_ce_mlp << ','
              << log.losses.l_bce_edge << ',' << log.losses.l_ce_node << ',' << log.losses.l_adv << ','
              << log.losses.lambda_adv << '\n';
        };
        if (!hp.probe_fractions.empty()) {
          for (double f : hp.probe_fractions) hooks.probe_points.push_back(std::llround(f * per_visit));
          hooks.on_probe = [&](long long completed) {
            ProbeRecord rec;
            rec.iteration = completed;
            const auto cands =
                score_domain(learner, domain, result.ledger, hp, derive_seed(hp.seed, "plabel", {pass, chosen}));
            for (const auto& c : cands) {
              if (!(c.confidence > hp.tau)) continue;
              ++rec.selected;
              if (const auto truth = registry.truth(c.sample->id())) (*truth == c.label ? rec.correct : rec.incorrect) += 1;
            }
            visit.probes.push_back(rec);
          };
        }

        adapt_domain(learner, result.ledger, domain, per_visit, hp, pass, result.total_adaptation_iterations, hooks);

        where.stage = "pseudo_labeling";
        const std::size_t before = result.ledger.size();
        visit.added =
            pseudo_label_domain(learner, domain, result.ledger, hp, pass, result.total_adaptation_iterations);
        for (std::size_t i = before; i < result.ledger.size(); ++i) {
          const auto& e = result.ledger[i];
          if (const auto truth = registry.truth(e.id)) (*truth == e.label ? visit.correct : visit.incorrect) += 1;
        }
        visit.ledger_size = result.ledger.size();
        where.stage = "adaptation";

        summary.order.push_back(chosen);
        uncertainties.push_back(h);
        visits.push_back(visit);
        remaining.erase(chosen);
      }

      if (options.evaluate_each_pass && has_truth)
        summary.average_target_accuracy = evaluate(learner, registry).average_target_accuracy;
      manifest.add_pass(summary, visits, uncertainties, registry, has_truth);
      result.passes.push_back(summary);
      result.visits.insert(result.visits.end(), visits.begin(), visits.end());
      checkpoint("pass_" + std::to_string(pass) + ".ckpt", {{"stage", "pass"}, {"pass", pass}});
      publish();
    }
    manifest.json()["total_adaptation_iterations"] = result.total_adaptation_iterations;

    where = {"finetune", 0, 0, result.total_adaptation_iterations};
    result.finetune = finetune(learner, result.ledger, hp.K_prime, hp);
    manifest.json()["finetune"] = {{"iterations", result.finetune.iterations},
                                   {"ledger_accuracy_before", optional_json(result.finetune.ledger_accuracy_before)},
                                   {"ledger_accuracy_after", optional_json(result.finetune.ledger_accuracy_after)}};

    where.stage = "evaluation";
    result.final_report = evaluate(learner, registry, &result.ledger);
    auto& m = manifest.json();
    m["final"] = accuracy_json(result.final_report);
    m["final"]["warnings"] = result.final_report.warnings;
    m["ledger"] = {{"size", result.ledger.size()},
                   {"origin_count", result.ledger.origin_count()},
                   {"pseudo_samples", result.ledger.size() - result.ledger.origin_count()}};
    m["ledger_audit"] = result.final_report.to_json()["ledger_audit"];
    m["domain_sequence"] = result.domain_sequence();
    m["status"] = "complete";
    checkpoint("final.ckpt", {{"stage", "final"}});
    publish();
  } catch (const RuntimeAbort& e) {
    auto& m = manifest.json();
    m["status"] = "aborted";
    m["abort"] = {{"stage", where.stage},
                  {"pass", where.pass},
                  {"domain", where.domain},
                  {"iteration", where.iteration},
                  {"ledger_size", result.ledger.size()},
                  {"message", e.what()}};
    publish();
    std::ostringstream msg;
    msg << e.what() << " [stage " << where.stage << ", pass " << where.pass << ", domain " << where.domain
        << ", iteration " << where.iteration << ", pseudo-source size " << result.ledger.size() << "]";
    throw RuntimeAbort(msg.str());
  }
  return result;
}

}  // namespace mtda
