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


// Two-iteration training.
//
// Iteration 1 trains the student on the transducer loss alone, then exports
// the alignment posterior of the final model for every training utterance.
// Iteration 2 starts from that model (or afresh), freezes the posteriors and
// adds the distillation term
//
//   loss = asr + lambda * sum_i dist(R([E_q phi]_i ; psi_i), teacher targets_i)
//
// Output layout under cfg.out_dir:
//   iter<k>/model.tkdm      final parameters
//   iter<k>/metrics.tsv     one line per epoch
//   iter<k>/state.tkdm      parameters and optimizer state after the last epoch
//   iter<k>/state.json      epoch counter and history, for --resume
//   alignments.alnq         posteriors written after iteration 1

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "repkd/checkpoint.hpp"
#include "repkd/config.hpp"
#include "repkd/data.hpp"
#include "repkd/distill.hpp"
#include "repkd/nn.hpp"
#include "repkd/posterior_io.hpp"
#include "repkd/teacher_reps.hpp"
#include "repkd/wer.hpp"

namespace repkd::trainer {

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double asr_loss = 0.0;  // mean per utterance
  double kd_loss = 0.0;   // mean per utterance, before lambda
  double combined = 0.0;
  double dev_wer = 0.0;   // NaN without a dev set
};

inline constexpr const char* kMetricsHeader = "epoch\tasr_loss\tkd_loss\tcombined\tdev_wer";
std::string format_metrics(const EpochMetrics& m);

struct Corpus {
  std::vector<data::Utterance> train;
  std::vector<data::Utterance> dev;
  data::Vocabulary vocab;
};

/// Loads manifests and frames named in cfg and checks them against the model
/// dimensions.
Corpus load_corpus(const config::RunConfig& cfg);
void check_utterances(const std::vector<data::Utterance>& utts, const nn::ModelConfig& model);

std::filesystem::path iteration_dir(const config::RunConfig& cfg, int iteration);
std::filesystem::path alignments_path(const config::RunConfig& cfg);

/// Loads <reps_dir>/<teacher>.trep for every kd.models entry and checks them
/// against the training utterances.
std::vector<teacher::TeacherRepSet> load_teachers(const config::RunConfig& cfg,
                                                  const std::vector<data::Utterance>& utts);

/// Total regression output dimension for the configured strategy.
std::size_t target_dim(const config::RunConfig& cfg,
                       const std::vector<teacher::TeacherRepSet>& teachers);

/// Concatenated teacher targets (N x target_dim) for one utterance and epoch.
distill::MultiRep build_targets(const config::RunConfig& cfg,
                                const std::vector<teacher::TeacherRepSet>& teachers,
                                const std::string& utterance_id, std::uint64_t epoch);

/// Posteriors of `model` on each utterance, rounded to f32.
PosteriorSet compute_posteriors(const nn::Model<float>& model,
                                const std::vector<data::Utterance>& utts);

struct EvalResult {
  wer::EditCounts counts;
  double wer = 0.0;
  std::size_t skipped = 0;  // utterances with an empty reference
  std::vector<std::vector<int>> hypotheses;
};

/// Greedy decoding plus corpus WER over detokenized words. Writes a TSV report
/// (id, reference, hypothesis, edits, reference words) when `report` is set.
/// Utterances without reference words are skipped and reported with "-" edits.
EvalResult evaluate(const nn::Model<float>& model, const std::vector<data::Utterance>& utts,
                    const data::Vocabulary& vocab, std::size_t max_symbols,
                    const std::filesystem::path& report = {});

/// SGD with momentum or Adam over the parameters of a model.
class Optimizer {
 public:
  Optimizer(const config::RunConfig& cfg, const nn::Model<float>& like);

  void step(nn::Model<float>& model, const nn::Model<float>& grads);
  std::uint64_t steps() const { return steps_; }

  /// Appends optimizer.* blobs / restores them.
  void save(CheckpointFile& file) const;
  void load(const CheckpointFile& file, std::uint64_t steps);

 private:
  config::Optimizer kind_;
  double lr_, momentum_, beta1_, beta2_;
  std::uint64_t steps_ = 0;
  nn::Model<float> first_;   // velocity or Adam first moment
  nn::Model<float> second_;  // Adam second moment
};

/// Scales grads so that their global L2 norm is at most `max_norm`; returns
/// the norm before scaling.
double clip_gradients(nn::Model<float>& grads, double max_norm);

struct RunOptions {
  bool resume = false;
  std::size_t stop_after_epoch = 0;  // 0: run all epochs
  std::ostream* log = nullptr;
};

struct IterationResult {
  nn::Model<float> model;
  std::vector<EpochMetrics> history;
  std::uint64_t initial_hash = 0;  // transducer parameters at the first epoch
  bool completed = false;
};

IterationResult run_iteration1(const config::RunConfig& cfg, const Corpus& corpus,
                               const RunOptions& options = {});

/// `posteriors` must be frozen (read back from ALNQ).
IterationResult run_iteration2(const config::RunConfig& cfg, const Corpus& corpus,
                               const nn::Model<float>& iteration1_model,
                               const PosteriorSet& posteriors,
                               const std::vector<teacher::TeacherRepSet>& teachers,
                               const RunOptions& options = {});

/// Iteration 1, alignment export and reload, then iteration 2.
IterationResult run_both(const config::RunConfig& cfg, const Corpus& corpus,
                         const RunOptions& options = {});

/// Number of worker threads for cfg: train.threads, else REPKD_THREADS, else
/// hardware concurrency.
std::size_t worker_threads(const config::RunConfig& cfg);

}  // namespace repkd::trainer
