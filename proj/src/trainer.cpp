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

#include "repkd/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "repkd/decode.hpp"
#include "repkd/errors.hpp"
#include "repkd/objective.hpp"
#include "repkd/random.hpp"
#include "repkd/strategies.hpp"

namespace repkd::trainer {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_metrics(const EpochMetrics& m) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << m.epoch << '\t' << m.asr_loss << '\t' << m.kd_loss
     << '\t' << m.combined << '\t' << m.dev_wer;
  return os.str();
}

// --- corpus -------------------------------------------------------------------------

void check_utterances(const std::vector<data::Utterance>& utts, const nn::ModelConfig& model) {
  for (const auto& u : utts) {
    for (int tok : u.tokens) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= model.vocab_size) {
        throw InvalidInput("utterance " + u.id + ": token " + std::to_string(tok) +
                           " outside model.vocab_size " + std::to_string(model.vocab_size));
      }
    }
    if (u.frames.rank() != 2 || u.frames.rows() == 0) {
      throw InvalidInput("utterance " + u.id + " has no frames");
    }
    if (u.frames.cols() != model.input_dim) {
      throw InvalidInput("utterance " + u.id + ": frames have dimension " +
                         std::to_string(u.frames.cols()) + ", model.input_dim is " +
                         std::to_string(model.input_dim));
    }
  }
}

Corpus load_corpus(const config::RunConfig& cfg) {
  if (cfg.train_manifest.empty()) throw InvalidConfig("data.train is not set");
  Corpus corpus;
  corpus.train = data::read_manifest(cfg.train_manifest);
  if (!cfg.dev_manifest.empty()) corpus.dev = data::read_manifest(cfg.dev_manifest);
  fs::path vocab = cfg.vocab;
  if (vocab.empty()) {
    const fs::path beside = fs::path(cfg.train_manifest).parent_path() / "vocab.txt";
    if (fs::exists(beside)) vocab = beside;
  }
  corpus.vocab = vocab.empty() ? data::Vocabulary::plain(cfg.model.vocab_size)
                               : data::Vocabulary::read(vocab);
  if (corpus.vocab.size() != cfg.model.vocab_size) {
    throw InvalidConfig("vocabulary has " + std::to_string(corpus.vocab.size()) +
                        " entries but model.vocab_size is " +
                        std::to_string(cfg.model.vocab_size));
  }
  check_utterances(corpus.train, cfg.model);
  check_utterances(corpus.dev, cfg.model);
  if (corpus.train.empty()) throw InvalidInput("training manifest is empty");
  for (const auto& u : corpus.train) {
    if (u.tokens.empty()) throw InvalidInput("training utterance " + u.id + " has no tokens");
  }
  return corpus;
}

fs::path iteration_dir(const config::RunConfig& cfg, int iteration) {
  return fs::path(cfg.out_dir) / ("iter" + std::to_string(iteration));
}

fs::path alignments_path(const config::RunConfig& cfg) {
  return fs::path(cfg.out_dir) / "alignments.alnq";
}

// --- teachers and targets -------------------------------------------------------------

std::vector<teacher::TeacherRepSet> load_teachers(const config::RunConfig& cfg,
                                                  const std::vector<data::Utterance>& utts) {
  std::vector<teacher::TeacherRepSet> out;
  for (const auto& id : cfg.teachers) {
    const fs::path path = fs::path(cfg.reps_dir) / (id + ".trep");
    if (!fs::exists(path)) throw MissingArtifact("teacher representations not found: " + path.string());
    auto set = teacher::read_teacher_reps(path);
    if (set.teacher_id() != id) {
      throw ConsistencyError(path.string() + " holds teacher '" + set.teacher_id() +
                             "', expected '" + id + "'");
    }
    set.check_against(utts);
    out.push_back(std::move(set));
  }
  return out;
}

namespace {

strategies::StrategySpec strategy_for(const config::RunConfig& cfg,
                                      const teacher::TeacherRepSet& t) {
  strategies::StrategySpec spec;
  spec.kind = cfg.strategy;
  spec.layers_k = cfg.layers_k;
  spec.total_layers = t.layers();
  spec.seed = cfg.kd_seed;
  spec.validate();
  return spec;
}

strategies::ContextVariantPolicy variant_policy(const config::RunConfig& cfg) {
  strategies::ContextVariantPolicy p;
  p.variants = cfg.context_variants;
  p.mask_rate = cfg.mask_rate;
  p.seed = cfg.kd_seed;
  p.validate();
  return p;
}

}  // namespace

std::size_t target_dim(const config::RunConfig& cfg,
                       const std::vector<teacher::TeacherRepSet>& teachers) {
  std::size_t dim = 0;
  for (const auto& t : teachers) {
    const auto layers = strategies::select_layers(strategy_for(cfg, t), 1);
    dim += t.dim() * (cfg.strategy == strategies::LayerStrategy::kMeanPool ? 1 : layers.size());
  }
  return dim;
}

distill::MultiRep build_targets(const config::RunConfig& cfg,
                                const std::vector<teacher::TeacherRepSet>& teachers,
                                const std::string& utterance_id, std::uint64_t epoch) {
  const auto policy = variant_policy(cfg);
  const std::uint32_t variant = strategies::sample_context_variant(policy, utterance_id, epoch);
  std::vector<distill::RepComponent> parts;
  for (const auto& t : teachers) {
    if (variant >= t.variants()) {
      throw ConsistencyError("teacher " + t.teacher_id() + " has " +
                             std::to_string(t.variants()) + " context variants, need " +
                             std::to_string(variant + 1));
    }
    const auto layers = strategies::select_layers(strategy_for(cfg, t), epoch);
    if (cfg.strategy == strategies::LayerStrategy::kMeanPool) {
      std::vector<Tensor<float>> all;
      for (auto l : layers) all.push_back(t.matrix(utterance_id, variant, l));
      parts.push_back({{t.teacher_id(), variant, 0}, strategies::mean_pool_layers(all)});
    } else {
      for (auto l : layers) {
        parts.push_back({{t.teacher_id(), variant, l}, t.matrix(utterance_id, variant, l)});
      }
    }
  }
  return distill::concat_representations(std::move(parts));
}

// --- posteriors and evaluation ------------------------------------------------------------

PosteriorSet compute_posteriors(const nn::Model<float>& model,
                                const std::vector<data::Utterance>& utts) {
  PosteriorSet set;
  for (const auto& u : utts) {
    const auto cache = nn::forward(model, u.frames, std::span<const int>(u.tokens));
    set.add(u.id, lattice::alignment_posterior(cache.grid, std::span<const int>(u.tokens)));
  }
  set.round_to_f32();
  return set;
}

namespace {
std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? " " : "") + words[i];
  return out;
}
}  // namespace

EvalResult evaluate(const nn::Model<float>& model, const std::vector<data::Utterance>& utts,
                    const data::Vocabulary& vocab, std::size_t max_symbols,
                    const fs::path& report) {
  EvalResult result;
  std::ofstream out;
  if (!report.empty()) {
    if (report.has_parent_path()) fs::create_directories(report.parent_path());
    out.open(report, std::ios::trunc);
    if (!out) throw MissingArtifact("cannot write report " + report.string());
    out << "id\treference\thypothesis\tedits\treference_words\n";
  }
  if (utts.empty()) throw InvalidInput("no utterances to evaluate");
  for (const auto& u : utts) {
    auto hyp = decode::greedy_decode(model, u.frames, max_symbols);
    const auto ref_words = vocab.detokenize(u.tokens);
    const auto hyp_words = vocab.detokenize(hyp);
    if (ref_words.empty()) {
      // Not scored; listed in the report with "-" edits.
      ++result.skipped;
      if (out) out << u.id << "\t\t" << join_words(hyp_words) << "\t-\t0\n";
      result.hypotheses.push_back(std::move(hyp));
      continue;
    }
    const auto counts = wer::align(ref_words, hyp_words);
    result.counts += counts;
    if (out) {
      out << u.id << '\t' << join_words(ref_words) << '\t' << join_words(hyp_words) << '\t'
          << counts.edits() << '\t' << counts.reference_words << '\n';
    }
    result.hypotheses.push_back(std::move(hyp));
  }
  result.wer = wer::word_error_rate(result.counts);
  return result;
}

// --- optimization ---------------------------------------------------------------------------

namespace {

std::vector<Tensor<float>*> tensors_of(nn::Model<float>& m) {
  std::vector<Tensor<float>*> out;
  m.visit([&](const std::string&, Tensor<float>& t) { out.push_back(&t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor<float>*>> named_tensors(const nn::Model<float>& m) {
  std::vector<std::pair<std::string, const Tensor<float>*>> out;
  m.visit([&](const std::string& name, const Tensor<float>& t) { out.emplace_back(name, &t); });
  return out;
}

void add_model(nn::Model<float>& into, const nn::Model<float>& from) {
  auto dst = tensors_of(into);
  const auto src = named_tensors(from);
  if (dst.size() != src.size()) throw ContractViolation("gradient layouts differ");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    auto d = dst[k]->flat();
    const auto s = src[k].second->flat();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }
}

void scale_model(nn::Model<float>& m, float factor) {
  for (auto* t : tensors_of(m)) {
    for (auto& v : t->flat()) v *= factor;
  }
}

}  // namespace

double clip_gradients(nn::Model<float>& grads, double max_norm) {
  double sq = 0.0;
  for (auto* t : tensors_of(grads)) {
    for (float v : t->flat()) sq += static_cast<double>(v) * v;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw DegenerateModel("gradient norm is not finite");
  if (max_norm > 0.0 && norm > max_norm) scale_model(grads, static_cast<float>(max_norm / norm));
  return norm;
}

Optimizer::Optimizer(const config::RunConfig& cfg, const nn::Model<float>& like)
    : kind_(cfg.optimizer),
      lr_(cfg.learning_rate),
      momentum_(cfg.momentum),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      first_(like.zeros_like()),
      second_(like.zeros_like()) {}

void Optimizer::step(nn::Model<float>& model, const nn::Model<float>& grads) {
  auto params = tensors_of(model);
  const auto g = named_tensors(grads);
  auto m = tensors_of(first_);
  auto v = tensors_of(second_);
  if (params.size() != g.size() || params.size() != m.size()) {
    throw ContractViolation("optimizer state does not match the model");
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->flat();
    const auto gk = g[k].second->flat();
    auto mk = m[k]->flat();
    auto vk = v[k]->flat();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gk[i];
      if (kind_ == config::Optimizer::kSgd) {
        const double vel = momentum_ * mk[i] + gi;
        mk[i] = static_cast<float>(vel);
        p[i] = static_cast<float>(p[i] - lr_ * vel);
      } else {
        const double m1 = beta1_ * mk[i] + (1.0 - beta1_) * gi;
        const double m2 = beta2_ * vk[i] + (1.0 - beta2_) * gi * gi;
        mk[i] = static_cast<float>(m1);
        vk[i] = static_cast<float>(m2);
        p[i] = static_cast<float>(p[i] - lr_ * (m1 / bc1) / (std::sqrt(m2 / bc2) + 1e-8));
      }
    }
  }
}

void Optimizer::save(CheckpointFile& file) const {
  for (const auto& [prefix, state] : {std::pair{"optimizer.first.", &first_},
                                      std::pair{"optimizer.second.", &second_}}) {
    for (const auto& [name, t] : named_tensors(*state)) {
      file.blobs.push_back({prefix + name, t->dims(),
                            std::vector<float>(t->flat().begin(), t->flat().end())});
    }
  }
}

void Optimizer::load(const CheckpointFile& file, std::uint64_t steps) {
  for (const auto& [prefix, state] : {std::pair{"optimizer.first.", &first_},
                                      std::pair{"optimizer.second.", &second_}}) {
    state->visit([&](const std::string& name, Tensor<float>& t) {
      const auto* blob = file.find(prefix + name);
      if (!blob || blob->dims != t.dims()) {
        throw FormatError("optimizer state " + std::string(prefix) + name + " missing or misshapen");
      }
      std::copy(blob->data.begin(), blob->data.end(), t.flat().begin());
    });
  }
  steps_ = steps;
}

std::size_t worker_threads(const config::RunConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("REPKD_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// --- epoch loop -------------------------------------------------------------------------------

namespace {

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct UtteranceLoss {
  double asr = 0.0;
  double kd = 0.0;
};

// Computes one utterance's losses and accumulates its gradient into `grads`.
using UtteranceStep = std::function<UtteranceLoss(const data::Utterance&, std::uint64_t epoch,
                                                  const nn::Model<float>& model,
                                                  nn::Model<float>& grads)>;

// Settings whose change makes a saved state unusable.
std::uint64_t resume_digest(const config::RunConfig& cfg) {
  std::uint64_t h = rng::fnv1a("resume");
  for (const auto& key : config::RunConfig::keys()) {
    if (key == "train.epochs" || key == "iter2.epochs" || key == "train.threads" ||
        key.rfind("eval.", 0) == 0) {
      continue;
    }
    h = rng::fnv1a(key + "=" + cfg.get(key) + "\n", h);
  }
  return h;
}

json history_to_json(const std::vector<EpochMetrics>& history) {
  json out = json::array();
  for (const auto& m : history) {
    out.push_back({{"epoch", m.epoch}, {"asr_loss", m.asr_loss}, {"kd_loss", m.kd_loss},
                   {"combined", m.combined},
                   {"dev_wer", std::isfinite(m.dev_wer) ? json(m.dev_wer) : json(nullptr)}});
  }
  return out;
}

std::vector<EpochMetrics> history_from_json(const json& j) {
  std::vector<EpochMetrics> out;
  for (const auto& e : j) {
    EpochMetrics m;
    m.epoch = e.at("epoch").get<std::size_t>();
    m.asr_loss = e.at("asr_loss").get<double>();
    m.kd_loss = e.at("kd_loss").get<double>();
    m.combined = e.at("combined").get<double>();
    m.dev_wer = e.at("dev_wer").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : e.at("dev_wer").get<double>();
    out.push_back(m);
  }
  return out;
}

void write_metrics(const fs::path& path, const std::vector<EpochMetrics>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MissingArtifact("cannot write metrics " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& m : history) out << format_metrics(m) << '\n';
}

struct LoopSpec {
  int iteration = 1;
  std::size_t epochs = 0;
  double lambda = 0.0;
  std::uint64_t extra_digest = 0;  // e.g. the posterior hash
};

IterationResult train_loop(const config::RunConfig& cfg, const Corpus& corpus,
                           nn::Model<float> model, const LoopSpec& loop,
                           const UtteranceStep& step, const RunOptions& options) {
  const fs::path dir = iteration_dir(cfg, loop.iteration);
  fs::create_directories(dir);
  const fs::path state_model = dir / "state.tkdm", state_json = dir / "state.json";
  const std::uint64_t digest = rng::derive(resume_digest(cfg), loop.extra_digest);

  IterationResult result;
  {
    auto transducer = model;
    transducer.regression = {};
    result.initial_hash = transducer.hash();
  }
  Optimizer optimizer(cfg, model);
  std::size_t first_epoch = 1;

  if (options.resume && fs::exists(state_json)) {
    std::ifstream in(state_json);
    json state;
    try {
      state = json::parse(in);
      if (state.at("digest").get<std::uint64_t>() != digest) {
        throw ConsistencyError(state_json.string() + " was written with a different configuration");
      }
      const auto file = read_checkpoint_file(state_model);
      model = model_from_checkpoint<float>(file, cfg.model);
      optimizer = Optimizer(cfg, model);
      optimizer.load(file, state.at("steps").get<std::uint64_t>());
      result.history = history_from_json(state.at("history"));
      result.initial_hash = state.at("initial_hash").get<std::uint64_t>();
      first_epoch = state.at("epoch").get<std::size_t>() + 1;
    } catch (const json::exception& e) {
      throw FormatError(state_json.string() + ": " + e.what());
    }
    if (options.log) {
      *options.log << "iter" << loop.iteration << ": resuming after epoch " << first_epoch - 1
                   << "\n";
    }
  }

  const std::size_t n = corpus.train.size();
  const std::size_t threads = worker_threads(cfg);
  for (std::size_t epoch = first_epoch; epoch <= loop.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng::Generator shuffle(rng::derive(cfg.train_seed, rng::Stream::kShuffle,
                                       static_cast<std::uint64_t>(loop.iteration), epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

    double asr_sum = 0.0, kd_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t B = std::min(cfg.batch_size, n - start);
      std::vector<nn::Model<float>> slots(B);
      std::vector<UtteranceLoss> losses(B);
      parallel_for(B, threads, [&](std::size_t b) {
        slots[b] = model.zeros_like();
        losses[b] = step(corpus.train[order[start + b]], epoch, model, slots[b]);
      });
      // Fixed-order reduction keeps results independent of the thread count.
      nn::Model<float> grads = std::move(slots[0]);
      for (std::size_t b = 1; b < B; ++b) add_model(grads, slots[b]);
      scale_model(grads, 1.0f / static_cast<float>(B));
      clip_gradients(grads, cfg.clip_norm);
      optimizer.step(model, grads);
      for (const auto& l : losses) {
        asr_sum += l.asr;
        kd_sum += l.kd;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.asr_loss = asr_sum / static_cast<double>(n);
    m.kd_loss = kd_sum / static_cast<double>(n);
    m.combined = distill::combined_loss(m.asr_loss, m.kd_loss, loop.lambda);
    m.dev_wer = corpus.dev.empty()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : evaluate(model, corpus.dev, corpus.vocab, cfg.max_symbols_per_frame).wer;
    if (!std::isfinite(m.asr_loss) || !std::isfinite(m.kd_loss)) {
      throw DegenerateModel("iteration " + std::to_string(loop.iteration) + " epoch " +
                            std::to_string(epoch) + " produced a non-finite loss");
    }
    result.history.push_back(m);
    if (options.log) {
      *options.log << "iter" << loop.iteration << " epoch " << epoch << "/" << loop.epochs
                   << std::fixed << std::setprecision(4) << " asr=" << m.asr_loss
                   << " kd=" << m.kd_loss << " combined=" << m.combined
                   << " dev_wer=" << m.dev_wer << std::defaultfloat << "\n";
    }

    write_metrics(dir / "metrics.tsv", result.history);
    auto file = checkpoint_from_model(model);
    optimizer.save(file);
    write_checkpoint_file(state_model, file);
    const json state = {{"iteration", loop.iteration}, {"epoch", epoch},
                        {"steps", optimizer.steps()}, {"digest", digest},
                        {"initial_hash", result.initial_hash},
                        {"history", history_to_json(result.history)}};
    std::ofstream(state_json, std::ios::trunc) << state.dump(1) << '\n';

    if (options.stop_after_epoch != 0 && epoch == options.stop_after_epoch && epoch < loop.epochs) {
      result.model = std::move(model);
      return result;
    }
  }
  save_model(dir / "model.tkdm", model);
  result.model = std::move(model);
  result.completed = true;
  return result;
}

}  // namespace

IterationResult run_iteration1(const config::RunConfig& cfg, const Corpus& corpus,
                               const RunOptions& options) {
  cfg.validate();
  auto model = nn::Model<float>::init(cfg.model, cfg.model_seed);
  const UtteranceStep step = [](const data::Utterance& u, std::uint64_t,
                                const nn::Model<float>& m, nn::Model<float>& grads) {
    UtteranceLoss loss;
    loss.asr = nn::asr_loss_and_grad(m, u.frames, std::span<const int>(u.tokens), &grads);
    return loss;
  };
  LoopSpec loop;
  loop.iteration = 1;
  loop.epochs = cfg.epochs;
  return train_loop(cfg, corpus, std::move(model), loop, step, options);
}

IterationResult run_iteration2(const config::RunConfig& cfg, const Corpus& corpus,
                               const nn::Model<float>& iteration1_model,
                               const PosteriorSet& posteriors,
                               const std::vector<teacher::TeacherRepSet>& teachers,
                               const RunOptions& options) {
  cfg.validate();
  const bool use_kd = cfg.lambda > 0.0;
  nn::Model<float> model = cfg.fresh_init
                               ? nn::Model<float>::init(cfg.model, rng::derive(cfg.model_seed, 2))
                               : iteration1_model;
  model.regression = {};
  if (use_kd) {
    if (teachers.empty()) throw InvalidConfig("kd.lambda > 0 needs at least one entry in kd.models");
    for (const auto& t : teachers) {
      if (cfg.context_variants > t.variants()) {
        throw InvalidConfig("kd.context_variants = " + std::to_string(cfg.context_variants) +
                            " but teacher " + t.teacher_id() + " provides " +
                            std::to_string(t.variants()));
      }
      t.check_against(corpus.train);
    }
    for (const auto& u : corpus.train) {
      const auto* q = posteriors.find(u.id);
      if (!q) throw ConsistencyError("no alignment posterior for utterance " + u.id);
      if (!q->frozen) throw ContractViolation("iteration 2 needs frozen posteriors");
      if (q->tokens != u.tokens.size() || q->frames != cfg.model.output_frames(u.frames.rows())) {
        throw ConsistencyError("alignment posterior for " + u.id + " is " +
                               std::to_string(q->tokens) + "x" + std::to_string(q->frames) +
                               ", the utterance needs " + std::to_string(u.tokens.size()) + "x" +
                               std::to_string(cfg.model.output_frames(u.frames.rows())));
      }
    }
    model.add_regression(target_dim(cfg, teachers),
                         rng::derive(cfg.kd_seed, rng::Stream::kRegressionInit));
  }
  const std::uint64_t q_hash = posteriors.hash();

  const UtteranceStep step = [&](const data::Utterance& u, std::uint64_t epoch,
                                 const nn::Model<float>& m, nn::Model<float>& grads) {
    const std::span<const int> y(u.tokens);
    if (!use_kd) {
      return UtteranceLoss{nn::asr_loss_and_grad(m, u.frames, y, &grads), 0.0};
    }
    const auto targets = build_targets(cfg, teachers, u.id, epoch);
    objective::KdTerm kd;
    kd.posterior = posteriors.find(u.id);
    kd.targets = &targets.targets;
    kd.distance = cfg.distance;
    kd.normalize = cfg.kd_normalize;
    kd.lambda = cfg.lambda;
    const auto losses = objective::utterance_loss(m, u.frames, y, &kd, &grads);
    return UtteranceLoss{losses.asr, losses.kd};
  };

  LoopSpec loop;
  loop.iteration = 2;
  loop.epochs = cfg.second_iteration_epochs();
  loop.lambda = use_kd ? cfg.lambda : 0.0;
  loop.extra_digest = rng::derive(q_hash, iteration1_model.hash());
  auto result = train_loop(cfg, corpus, std::move(model), loop, step, options);
  if (posteriors.hash() != q_hash) {
    throw ConsistencyError("alignment posteriors changed during iteration 2");
  }
  return result;
}

IterationResult run_both(const config::RunConfig& cfg, const Corpus& corpus,
                         const RunOptions& options) {
  auto first = run_iteration1(cfg, corpus, options);
  if (!first.completed) return first;
  write_alnq(alignments_path(cfg), compute_posteriors(first.model, corpus.train));
  const PosteriorSet q = read_alnq(alignments_path(cfg));
  const auto teachers =
      cfg.lambda > 0.0 ? load_teachers(cfg, corpus.train) : std::vector<teacher::TeacherRepSet>{};
  return run_iteration2(cfg, corpus, first.model, q, teachers, options);
}

}  // namespace repkd::trainer
