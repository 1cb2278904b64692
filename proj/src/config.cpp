// Copyright 2026 The repkd Authors.
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

#include "repkd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "repkd/errors.hpp"

namespace repkd::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw InvalidConfig(key + ": expected a non-negative integer, got '" + v + "'");
  }
  if (out > std::numeric_limits<T>::max()) throw InvalidConfig(key + ": value out of range");
  return static_cast<T>(out);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidConfig(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidConfig(key + ": expected true or false, got '" + v + "'");
}

std::string format_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define REPKD_STRING(k, m)                                                 \
  Field{k, [](RunConfig& c, const std::string& v) { c.m = v; },           \
        [](const RunConfig& c) { return c.m; }}
#define REPKD_UNSIGNED(k, m)                                               \
  Field{k,                                                                 \
        [](RunConfig& c, const std::string& v) {                           \
          c.m = parse_unsigned<decltype(c.m)>(k, v);                       \
        },                                                                 \
        [](const RunConfig& c) { return std::to_string(c.m); }}
#define REPKD_DOUBLE(k, m)                                                 \
  Field{k, [](RunConfig& c, const std::string& v) { c.m = parse_double(k, v); }, \
        [](const RunConfig& c) { return format_double(c.m); }}
#define REPKD_BOOL(k, m)                                                   \
  Field{k, [](RunConfig& c, const std::string& v) { c.m = parse_bool(k, v); }, \
        [](const RunConfig& c) { return std::string(c.m ? "true" : "false"); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      REPKD_STRING("data.train", train_manifest),
      REPKD_STRING("data.dev", dev_manifest),
      REPKD_STRING("data.vocab", vocab),
      REPKD_STRING("data.out", out_dir),
      REPKD_UNSIGNED("model.input_dim", model.input_dim),
      REPKD_UNSIGNED("model.subsample", model.subsample),
      REPKD_UNSIGNED("model.encoder_layers", model.encoder_layers),
      REPKD_UNSIGNED("model.encoder_dim", model.encoder_dim),
      REPKD_UNSIGNED("model.vocab_size", model.vocab_size),
      REPKD_UNSIGNED("model.embed_dim", model.embed_dim),
      REPKD_UNSIGNED("model.prediction_dim", model.prediction_dim),
      REPKD_UNSIGNED("model.joint_dim", model.joint_dim),
      REPKD_UNSIGNED("model.seed", model_seed),
      REPKD_DOUBLE("kd.lambda", lambda),
      Field{"kd.strategy",
            [](RunConfig& c, const std::string& v) { c.strategy = strategies::parse_layer_strategy(v); },
            [](const RunConfig& c) { return strategies::to_string(c.strategy); }},
      REPKD_UNSIGNED("kd.layers_k", layers_k),
      Field{"kd.models", [](RunConfig& c, const std::string& v) { c.teachers = split_list(v); },
            [](const RunConfig& c) { return join_list(c.teachers); }},
      REPKD_STRING("kd.reps_dir", reps_dir),
      Field{"kd.distance",
            [](RunConfig& c, const std::string& v) { c.distance = distill::parse_distance(v); },
            [](const RunConfig& c) { return distill::to_string(c.distance); }},
      REPKD_BOOL("kd.normalize", kd_normalize),
      REPKD_UNSIGNED("kd.context_variants", context_variants),
      REPKD_DOUBLE("kd.mask_rate", mask_rate),
      REPKD_UNSIGNED("kd.seed", kd_seed),
      REPKD_UNSIGNED("train.epochs", epochs),
      Field{"train.optimizer",
            [](RunConfig& c, const std::string& v) {
              if (v == "sgd") c.optimizer = Optimizer::kSgd;
              else if (v == "adam") c.optimizer = Optimizer::kAdam;
              else throw InvalidConfig("train.optimizer: expected sgd or adam, got '" + v + "'");
            },
            [](const RunConfig& c) { return to_string(c.optimizer); }},
      REPKD_DOUBLE("train.lr", learning_rate),
      REPKD_DOUBLE("train.momentum", momentum),
      REPKD_DOUBLE("train.beta1", adam_beta1),
      REPKD_DOUBLE("train.beta2", adam_beta2),
      REPKD_UNSIGNED("train.batch", batch_size),
      REPKD_UNSIGNED("train.seed", train_seed),
      REPKD_DOUBLE("train.clip", clip_norm),
      REPKD_UNSIGNED("train.threads", threads),
      REPKD_BOOL("iter2.fresh_init", fresh_init),
      REPKD_UNSIGNED("iter2.epochs", iter2_epochs),
      REPKD_UNSIGNED("eval.max_symbols", max_symbols_per_frame),
      REPKD_STRING("eval.manifest", eval_manifest),
      REPKD_STRING("eval.report", eval_report),
  };
  return table;
}

#undef REPKD_STRING
#undef REPKD_UNSIGNED
#undef REPKD_DOUBLE
#undef REPKD_BOOL

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw InvalidConfig("unknown configuration key '" + key + "'");
}

}  // namespace

std::string to_string(Optimizer o) { return o == Optimizer::kSgd ? "sgd" : "adam"; }

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, trim(value));
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  model.validate();
  if (!(lambda >= 0.0)) throw InvalidConfig("kd.lambda must be non-negative");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw InvalidConfig("kd.mask_rate must be in [0, 1]");
  if (context_variants < 1) throw InvalidConfig("kd.context_variants must be at least 1");
  if (strategy != strategies::LayerStrategy::kMeanPool && layers_k < 1) {
    throw InvalidConfig("kd.layers_k must be at least 1");
  }
  if (epochs == 0) throw InvalidConfig("train.epochs must be positive");
  if (batch_size == 0) throw InvalidConfig("train.batch must be positive");
  if (!(learning_rate >= 0.0)) throw InvalidConfig("train.lr must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidConfig("train.momentum must be in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidConfig("train.beta1 and train.beta2 must be in [0, 1)");
  }
  if (!(clip_norm >= 0.0)) throw InvalidConfig("train.clip must be non-negative");
  if (max_symbols_per_frame == 0) throw InvalidConfig("eval.max_symbols must be positive");
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InvalidConfig("expected key=value, got '" + text + "'");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      const auto [key, value] = split_assignment(line);
      cfg.set(key, value);
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace repkd::config
