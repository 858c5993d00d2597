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

// mtda: train / eval / report / bench.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime abort, 4 I/O error.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mtda/bench.hpp"
#include "mtda/checkpoint.hpp"
#include "mtda/config.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/error.hpp"
#include "mtda/eval.hpp"
#include "mtda/report.hpp"

namespace fs = std::filesystem;
using namespace mtda;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_json_atomically(const fs::path& path, const nlohmann::json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Flags shared by train and eval for picking configuration and data.
struct CommonFlags {
  std::string config_file;
  std::vector<std::string> synthetic;
  std::string data_dir;
  std::vector<std::string> overrides;
  std::string out;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "Flat dotted-key JSON configuration");
    cmd.add_option("--synthetic", synthetic, "Synthetic generator spec, e.g. n_c=4 N=3 shifts=0.1,0.3,0.6")
        ->expected(1, -1);
    cmd.add_option("--data", data_dir, "Dataset directory (source/ and target_<name>/ trees)");
    cmd.add_option("--set", overrides, "Override any config key: key=value")->expected(1, -1);
    cmd.add_option("--out", out, "Output directory");
  }

  /// Config file first, then flags; flags win.
  void apply(RunConfig& config) const {
    if (!config_file.empty()) config = load_config_file(config_file, config);
    if (!synthetic.empty()) apply_synthetic_tokens(config, synthetic);
    if (!data_dir.empty()) config.data_dir = data_dir;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'", kv);
      apply_setting_text(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out.empty()) config.output_dir = out;
  }
};

struct TrainFlags {
  CommonFlags common;
  std::optional<int> K, K_star, K_prime, B_s, B_t;
  std::optional<double> tau, lr;
  std::optional<std::uint64_t> seed;
  std::string mode;
  bool dry_run = false;
};

int cmd_train(const TrainFlags& f) {
  RunConfig config;
  f.common.apply(config);
  if (f.K) config.hp.K = *f.K;
  if (f.K_star) config.hp.K_star = *f.K_star;
  if (f.K_prime) config.hp.K_prime = *f.K_prime;
  if (f.B_s) config.hp.batch_source = *f.B_s;
  if (f.B_t) config.hp.batch_target = *f.B_t;
  if (f.tau) config.hp.tau = *f.tau;
  if (f.lr) config.hp.optimizer.lr = *f.lr;
  if (f.seed) config.hp.seed = *f.seed;
  if (!f.mode.empty()) apply_setting(config, "run.mode", f.mode);
  if (f.dry_run) config.mode = RunMode::kDryRun;
  config.validate();

  const DatasetRegistry registry = load_dataset(config);
  const fs::path out = config.output_dir;
  fs::create_directories(out / "checkpoints");
  const auto echo = config.to_json();
  write_json_atomically(out / "config.json", echo);

  std::unique_ptr<Learner> learner;
  if (config.mode == RunMode::kDryRun)
    learner = std::make_unique<DryRunLearner>(registry.num_classes, config.hp.seed);
  else
    learner = make_learner(model_config(config, registry.num_classes), config.hp);

  std::ofstream metrics(out / "metrics.csv");
  if (!metrics) throw IoError("cannot write " + (out / "metrics.csv").string());
  const std::string started = utc_now();
  RunOptions options;
  options.metrics_csv = &metrics;
  options.checkpoint_dir = out / "checkpoints";
  options.checkpoint_meta = {{"config", echo}};
  options.on_manifest = [&](const nlohmann::json& engine) {
    nlohmann::json m = engine;
    m["config"] = echo;
    m["timestamps"] = {{"started", started}, {"updated", utc_now()}};
    write_json_atomically(out / "manifest.json", m);
    metrics.flush();
  };

  std::cerr << "training on " << registry.num_targets() << " target domain(s), " << registry.num_classes
            << " classes -> " << out.string() << '\n';
  const RunResult result = run(registry, config.hp, *learner, options);
  write_eval_report(result.final_report, out / "eval");
  std::vector<double> curve;
  for (const auto& p : result.passes)
    if (p.average_target_accuracy) curve.push_back(*p.average_target_accuracy);
  std::ofstream(out / "accuracy_curve.svg")
      << accuracy_curve_svg(curve, result.source_only ? std::optional<double>(result.source_only->average_target_accuracy)
                                                      : std::nullopt);

  std::cout << "domain order:";
  for (const auto& p : result.passes) {
    std::cout << " [";
    for (std::size_t i = 0; i < p.order.size(); ++i)
      std::cout << (i ? " " : "") << registry.domain(p.order[i]).name;
    std::cout << "]";
  }
  std::cout << "\npseudo-source size: " << result.ledger.size() << " (" << result.ledger.origin_count()
            << " source)\n";
  if (result.source_only)
    std::cout << "source-only average accuracy: " << std::fixed << std::setprecision(4)
              << result.source_only->average_target_accuracy << '\n';
  for (const auto& d : result.final_report.per_domain)
    std::cout << d.name << " accuracy: " << std::fixed << std::setprecision(4) << d.accuracy << '\n';
  std::cout << "average target accuracy: " << std::fixed << std::setprecision(4)
            << result.final_report.average_target_accuracy << '\n';
  for (const auto& w : result.final_report.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint) {
  if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint);
  const auto file = read_checkpoint(checkpoint);
  if (!file.meta.contains("model")) throw IoError("checkpoint " + checkpoint + " holds no model (dry-run checkpoint?)");
  RunConfig config;
  // Default to the data the checkpoint was trained on.
  if (file.meta.contains("config")) apply_config_json(config, file.meta["config"]);
  f.apply(config);
  if (f.out.empty()) config.output_dir = fs::path(checkpoint).parent_path() / "eval";
  const ModelConfig model = model_config_from_json(file.meta["model"]);
  config.backbone.input = model.backbone.input;
  const DatasetRegistry registry = load_dataset(config);
  if (registry.num_classes != model.num_classes)
    throw ConfigError("dataset has " + std::to_string(registry.num_classes) + " classes, checkpoint expects " +
                          std::to_string(model.num_classes),
                      "data");
  auto learner = NetworkLearner::from_checkpoint(checkpoint, config.hp.eval_batch);
  const EvalReport report = evaluate(*learner, registry);
  write_eval_report(report, config.output_dir);
  for (const auto& d : report.per_domain)
    std::cout << d.name << " accuracy: " << std::fixed << std::setprecision(4) << d.accuracy << '\n';
  std::cout << "average target accuracy: " << std::fixed << std::setprecision(4) << report.average_target_accuracy
            << '\n';
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const PassReport report = report_run_directory(run_dir);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << report.table;
  return 0;
}

struct BenchFlags {
  std::string which;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<int> k_stars{1, 3, 5};
  CommonFlags common;
  std::string csv;
};

int cmd_bench(const BenchFlags& f) {
  RunConfig config;
  config.hp = desk_scale_hyperparams();
  f.common.apply(config);
  config.validate();
  if (config.data_dir) throw ConfigError("benchmarks run on synthetic data only", "data.dir");
  BenchSetup setup;
  setup.data = config.synthetic;
  setup.hp = config.hp;
  setup.backbone = config.backbone;
  setup.log = [](const std::string& line) { std::cerr << line << '\n'; };
  std::string csv;
  if (f.which == "reiteration") {
    csv = bench_csv(bench_reiteration(setup, f.seeds, f.k_stars), "K_star");
  } else {
    csv = bench_csv(bench_batch_composition(setup, f.seeds), "B_s,B_t");
  }
  std::cout << csv;
  if (!f.csv.empty()) {
    std::ofstream out(f.csv);
    if (!out) throw IoError("cannot write " + f.csv);
    out << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-target domain adaptation with curriculum graph co-teaching"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Run the full training procedure");
  train.common.add_to(*train_cmd);
  train_cmd->add_option("--K", train.K, "Adaptation iterations per domain, summed over passes");
  train_cmd->add_option("--Kstar", train.K_star, "Number of passes over the target domains");
  train_cmd->add_option("--Kprime", train.K_prime, "Fine-tuning iterations");
  train_cmd->add_option("--Bs", train.B_s, "Pseudo-source rows per minibatch");
  train_cmd->add_option("--Bt", train.B_t, "Target rows per minibatch");
  train_cmd->add_option("--tau", train.tau, "Pseudo-label confidence threshold");
  train_cmd->add_option("--lr", train.lr, "Base learning rate");
  train_cmd->add_option("--seed", train.seed, "Run seed");
  train_cmd->add_option("--mode", train.mode, "full or dry_run");
  train_cmd->add_flag("--dry-run", train.dry_run, "Use the model-free stand-in learner");

  CommonFlags eval;
  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with the MLP head");
  eval.add_to(*eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  std::string run_dir;
  auto* report_cmd = app.add_subcommand("report", "Render the pass-by-pass table of a run");
  report_cmd->add_option("run_dir", run_dir, "Run directory")->required();

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Synthetic ablation suite");
  bench_cmd->add_option("which", bench.which, "reiteration or batch")
      ->required()
      ->check(CLI::IsMember({"reiteration", "batch"}));
  bench_cmd->add_option("--seeds", bench.seeds, "Seeds")->delimiter(',');
  bench_cmd->add_option("--kstars", bench.k_stars, "K* values for the reiteration suite")->delimiter(',');
  bench_cmd->add_option("--csv", bench.csv, "Also write the table here");
  bench.common.add_to(*bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval, checkpoint);
    if (*report_cmd) return cmd_report(run_dir);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const RuntimeAbort& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
