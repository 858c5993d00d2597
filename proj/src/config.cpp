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

#include "mtda/config.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "mtda/error.hpp"

namespace mtda {
namespace {

using Json = nlohmann::json;
using Setter = std::function<void(RunConfig&, const Json&, const std::string&)>;

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw ConfigError("invalid value for '" + key + "': " + why, key);
}

long long as_int(const Json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  bad_value(key, "expected an integer");
}

int as_i32(const Json& v, const std::string& key) {
  const long long n = as_int(v, key);
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) bad_value(key, "out of range");
  return static_cast<int>(n);
}

double as_real(const Json& v, const std::string& key) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  if (v.is_number_integer() && (v == 0 || v == 1)) return v == 1;
  bad_value(key, "expected a boolean");
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) bad_value(key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> as_reals(const Json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(as_real(x, key));
  } else if (v.is_string()) {
    for (const auto& tok : split(v.get<std::string>(), ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) bad_value(key, "'" + tok + "' is not a number");
      } catch (const std::logic_error&) {
        bad_value(key, "'" + tok + "' is not a number");
      }
    }
  } else if (v.is_number()) {
    out.push_back(v.get<double>());
  } else {
    bad_value(key, "expected a list of numbers");
  }
  return out;
}

std::vector<int> as_ints(const Json& v, const std::string& key) {
  std::vector<int> out;
  for (double d : as_reals(v, key)) {
    if (d != static_cast<double>(static_cast<int>(d))) bad_value(key, "expected integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

std::uint64_t as_seed(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const long long n = as_int(v, key);
  if (n < 0) bad_value(key, "seeds are non-negative");
  return static_cast<std::uint64_t>(n);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.dir", [](RunConfig& c, const Json& v, const std::string& k) { c.data_dir = as_string(v, k); }},
      {"synthetic.n_c", [](RunConfig& c, const Json& v, const std::string& k) { c.synthetic.num_classes = as_i32(v, k); }},
      {"synthetic.N", [](RunConfig& c, const Json& v, const std::string& k) { c.synthetic.num_targets = as_i32(v, k); }},
      {"synthetic.shifts", [](RunConfig& c, const Json& v, const std::string& k) { c.synthetic.shifts = as_reals(v, k); }},
      {"synthetic.per_class",
       [](RunConfig& c, const Json& v, const std::string& k) { c.synthetic.per_class = as_i32(v, k); }},
      {"synthetic.seed",
       [](RunConfig& c, const Json& v, const std::string& k) {
         c.synthetic.seed = as_seed(v, k);
         c.synthetic_seed_set = true;
       }},
      {"hp.B_s", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.batch_source = as_i32(v, k); }},
      {"hp.B_t", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.batch_target = as_i32(v, k); }},
      {"hp.tau", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.tau = as_real(v, k); }},
      {"hp.K", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.K = as_i32(v, k); }},
      {"hp.K_star", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.K_star = as_i32(v, k); }},
      {"hp.K_prime", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.K_prime = as_i32(v, k); }},
      {"hp.lambda_edge", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.lambda_edge = as_real(v, k); }},
      {"hp.lambda_node", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.lambda_node = as_real(v, k); }},
      {"hp.lambda_adv", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.lambda_adv = as_real(v, k); }},
      {"hp.lambda_schedule",
       [](RunConfig& c, const Json& v, const std::string& k) {
         const auto s = as_string(v, k);
         if (s == "ramp") c.hp.lambda_schedule = AdversarialSchedule::Mode::kRamp;
         else if (s == "fixed") c.hp.lambda_schedule = AdversarialSchedule::Mode::kFixed;
         else bad_value(k, "expected 'ramp' or 'fixed'");
       }},
      {"hp.seed", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.seed = as_seed(v, k); }},
      {"hp.reset_optimizers",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.reset_optimizers_each_pass = as_bool(v, k); }},
      {"hp.eval_batch", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.eval_batch = as_i32(v, k); }},
      {"hp.probe_fractions",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.probe_fractions = as_reals(v, k); }},
      {"optim.lr", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.optimizer.lr = as_real(v, k); }},
      {"optim.momentum",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.optimizer.momentum = as_real(v, k); }},
      {"optim.weight_decay",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.optimizer.weight_decay = as_real(v, k); }},
      {"optim.head_lr_mult",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.optimizer.head_lr_mult = as_real(v, k); }},
      {"source.patience", [](RunConfig& c, const Json& v, const std::string& k) { c.hp.source.patience = as_i32(v, k); }},
      {"source.min_delta",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.source.min_delta = as_real(v, k); }},
      {"source.max_iters",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.source.max_iters = as_i32(v, k); }},
      {"source.check_every",
       [](RunConfig& c, const Json& v, const std::string& k) { c.hp.source.check_every = as_i32(v, k); }},
      {"backbone.kind",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.kind = backbone_kind_from_string(as_string(v, k)); }},
      {"backbone.d_f", [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.feature_dim = as_i32(v, k); }},
      {"backbone.pretrained",
       [](RunConfig& c, const Json& v, const std::string& k) {
         if (v.is_null()) c.backbone.pretrained_weights.reset();
         else c.backbone.pretrained_weights = as_string(v, k);
       }},
      {"backbone.conv_widths",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.conv_widths = as_ints(v, k); }},
      {"backbone.stem_channels",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.stem_channels = as_i32(v, k); }},
      {"backbone.embed_dim",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.embed_dim = as_i32(v, k); }},
      {"backbone.encoder_blocks",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.encoder_blocks = as_i32(v, k); }},
      {"backbone.attention_heads",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.attention_heads = as_i32(v, k); }},
      {"backbone.mlp_ratio",
       [](RunConfig& c, const Json& v, const std::string& k) { c.backbone.mlp_ratio = as_i32(v, k); }},
      {"run.output", [](RunConfig& c, const Json& v, const std::string& k) { c.output_dir = as_string(v, k); }},
      {"run.mode",
       [](RunConfig& c, const Json& v, const std::string& k) {
         const auto s = as_string(v, k);
         if (s == "full") c.mode = RunMode::kFull;
         else if (s == "dry_run") c.mode = RunMode::kDryRun;
         else bad_value(k, "expected 'full' or 'dry_run'");
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const nlohmann::json& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'", key);
  it->second(config, value, key);
}

void apply_setting_text(RunConfig& config, const std::string& key, const std::string& text) {
  Json value = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  apply_setting(config, key, value);
}

void apply_config_json(RunConfig& config, const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("configuration must be a JSON object of dotted keys", "config");
  for (const auto& [key, value] : flat.items()) apply_setting(config, key, value);
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what(), "config");
  }
  apply_config_json(base, j);
  return base;
}

void apply_synthetic_tokens(RunConfig& config, const std::vector<std::string>& tokens) {
  config.data_dir.reset();
  for (const auto& tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("synthetic spec entries look like name=value, got '" + tok + "'", "synthetic");
    apply_setting_text(config, "synthetic." + tok.substr(0, eq), tok.substr(eq + 1));
  }
}

void RunConfig::validate() const {
  hp.validate();
  backbone.validate();
  if (data_dir) {
    if (!std::filesystem::is_directory(*data_dir))
      throw ConfigError("data directory " + data_dir->string() + " does not exist", "data.dir");
  } else {
    if (synthetic.num_targets != static_cast<int>(synthetic.shifts.size()))
      throw ConfigError("expected " + std::to_string(synthetic.num_targets) + " shift magnitudes, got " +
                            std::to_string(synthetic.shifts.size()),
                        "synthetic.shifts");
    if (synthetic.num_classes < 2 || synthetic.num_classes > kMaxSyntheticClasses)
      throw ConfigError("class count must be in [2, " + std::to_string(kMaxSyntheticClasses) + "]", "synthetic.n_c");
    if (synthetic.num_targets < 1) throw ConfigError("at least one target domain is required", "synthetic.N");
    if (synthetic.per_class < 10) throw ConfigError("per_class must be >= 10", "synthetic.per_class");
    for (double s : synthetic.shifts)
      if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("shift magnitudes must lie in [0, 1]", "synthetic.shifts");
  }
  if (output_dir.empty()) throw ConfigError("output directory must be set", "run.output");
}

nlohmann::json RunConfig::to_json() const {
  Json j;
  if (data_dir) {
    j["data.dir"] = data_dir->string();
  } else {
    j["synthetic.n_c"] = synthetic.num_classes;
    j["synthetic.N"] = synthetic.num_targets;
    j["synthetic.shifts"] = synthetic.shifts;
    j["synthetic.per_class"] = synthetic.per_class;
    j["synthetic.seed"] = synthetic_seed();
  }
  j["hp.B_s"] = hp.batch_source;
  j["hp.B_t"] = hp.batch_target;
  j["hp.tau"] = hp.tau;
  j["hp.K"] = hp.K;
  j["hp.K_star"] = hp.K_star;
  j["hp.K_prime"] = hp.K_prime;
  j["hp.lambda_edge"] = hp.lambda_edge;
  j["hp.lambda_node"] = hp.lambda_node;
  j["hp.lambda_adv"] = hp.lambda_adv;
  j["hp.lambda_schedule"] = hp.lambda_schedule == AdversarialSchedule::Mode::kRamp ? "ramp" : "fixed";
  j["hp.seed"] = hp.seed;
  j["hp.reset_optimizers"] = hp.reset_optimizers_each_pass;
  j["hp.eval_batch"] = hp.eval_batch;
  j["hp.probe_fractions"] = hp.probe_fractions;
  j["optim.lr"] = hp.optimizer.lr;
  j["optim.momentum"] = hp.optimizer.momentum;
  j["optim.weight_decay"] = hp.optimizer.weight_decay;
  j["optim.head_lr_mult"] = hp.optimizer.head_lr_mult;
  j["source.patience"] = hp.source.patience;
  j["source.min_delta"] = hp.source.min_delta;
  j["source.max_iters"] = hp.source.max_iters;
  j["source.check_every"] = hp.source.check_every;
  j["backbone.kind"] = to_string(backbone.kind);
  j["backbone.d_f"] = backbone.feature_dim;
  j["backbone.pretrained"] = backbone.pretrained_weights ? Json(*backbone.pretrained_weights) : Json();
  j["backbone.conv_widths"] = backbone.conv_widths;
  j["backbone.stem_channels"] = backbone.stem_channels;
  j["backbone.embed_dim"] = backbone.embed_dim;
  j["backbone.encoder_blocks"] = backbone.encoder_blocks;
  j["backbone.attention_heads"] = backbone.attention_heads;
  j["backbone.mlp_ratio"] = backbone.mlp_ratio;
  j["run.output"] = output_dir.string();
  j["run.mode"] = mode == RunMode::kFull ? "full" : "dry_run";
  return j;
}

DatasetRegistry load_dataset(const RunConfig& config) {
  if (config.data_dir) return ingest_directory(*config.data_dir, config.backbone.input);
  SyntheticSpec spec = config.synthetic;
  spec.seed = config.synthetic_seed();
  spec.shape = config.backbone.input;
  return make_synthetic(spec);
}

ModelConfig model_config(const RunConfig& config, int num_classes) { return {config.backbone, num_classes}; }

}  // namespace mtda
