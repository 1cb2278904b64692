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

// repkd: synthetic data, mock teachers, training, evaluation and file inspection.
//
// Exit codes: 0 success, 1 training failure, 2 usage or configuration error,
// 3 missing or incompatible artifact.

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "repkd/binio.hpp"
#include "repkd/checkpoint.hpp"
#include "repkd/config.hpp"
#include "repkd/data.hpp"
#include "repkd/errors.hpp"
#include "repkd/posterior_io.hpp"
#include "repkd/teacher_reps.hpp"
#include "repkd/trainer.hpp"

namespace fs = std::filesystem;
using namespace repkd;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitArtifact = 3;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> dotted;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "Configuration file (section.key = value lines)");
  cmd->add_option("--set", args.sets, "Override one key, e.g. --set kd.lambda=0.1");
  for (const auto& key : config::RunConfig::keys()) {
    cmd->add_option("--" + key, args.dotted[key], "Override " + key)->group("Config keys")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

config::RunConfig resolve_config(CLI::App* cmd, const ConfigArgs& args) {
  config::RunConfig cfg;
  if (!args.file.empty()) config::apply_file(cfg, args.file);
  for (const auto& key : config::RunConfig::keys()) {
    if (cmd->count("--" + key) > 0) cfg.set(key, args.dotted.at(key));
  }
  for (const auto& s : args.sets) {
    const auto [key, value] = config::split_assignment(s);
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

std::string printable_magic(const std::string& m) {
  std::ostringstream os;
  for (unsigned char c : m) {
    if (c >= 0x20 && c < 0x7f) {
      os << c;
    } else {
      os << "\\x" << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    }
  }
  return os.str();
}

struct InspectRequest {
  std::string utterance;
  std::uint32_t layer = 1;
  std::uint32_t variant = 0;
};

void print_trep_header(const teacher::TeacherRepSet& set) {
  std::cout << "TREP v" << teacher::kTrepVersion << " teacher=" << set.teacher_id()
            << " L=" << set.layers() << " D=" << set.dim() << " variants=" << set.variants()
            << " utts=" << set.size() << "\n";
}

int inspect(const fs::path& path, const InspectRequest& req) {
  const std::string magic = binio::peek_magic(path);
  std::cout << std::fixed;
  if (magic == "TREP") {
    const auto set = teacher::read_teacher_reps(path);
    print_trep_header(set);
    if (!req.utterance.empty()) {
      if (req.layer < 1 || req.layer > set.layers() || req.variant >= set.variants()) {
        throw InvalidInput("no layer " + std::to_string(req.layer) + ", variant " +
                           std::to_string(req.variant) + " in " + path.string());
      }
      const auto m = set.matrix(req.utterance, req.variant, req.layer);
      std::cout << std::setprecision(6);
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double sq = 0.0;
        for (float v : m.row(i)) sq += double{v} * v;
        std::cout << req.utterance << " layer=" << req.layer << " variant=" << req.variant
                  << " token=" << i << " norm=" << std::sqrt(sq) << "\n";
      }
    }
  } else if (magic == "ALNQ") {
    const auto set = read_alnq(path);
    std::cout << "ALNQ v" << kAlnqVersion << " utts=" << set.size() << "\n";
    for (std::size_t k = 0; k < set.size(); ++k) {
      const auto& q = set.at(k);
      double lo = q.tokens ? 1e300 : 1.0, hi = q.tokens ? -1e300 : 1.0;
      for (std::size_t i = 0; i < q.tokens; ++i) {
        double s = 0.0;
        for (double v : q.row(i)) s += v;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
      std::cout << set.ids()[k] << " N=" << q.tokens << " T=" << q.frames << " rows sum to "
                << std::setprecision(3) << lo;
      if (std::abs(hi - lo) >= 5e-4) std::cout << ".." << hi;
      std::cout << "\n";
    }
  } else if (magic == "TKDM") {
    const auto file = read_checkpoint_file(path);
    std::size_t params = 0;
    for (const auto& b : file.blobs) params += b.data.size();
    std::cout << "TKDM v" << file.version << " digest=" << std::hex << std::setw(16)
              << std::setfill('0') << file.config_digest << std::dec << std::setfill(' ')
              << " blobs=" << file.blobs.size() << " values=" << params << "\n";
    for (const auto& b : file.blobs) std::cout << b.name << " " << shape_string(b.dims) << "\n";
  } else if (magic == "FRMS") {
    const auto frames = data::read_frames(path);
    std::cout << "FRMS T=" << frames.rows() << " D=" << frames.cols() << "\n";
  } else {
    std::cerr << "repkd: " << path.string() << ": unknown file type, first bytes '"
              << printable_magic(magic) << "'\n";
    return kExitUsage;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repkd: multi-representation distillation for transducer ASR"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  data::SynthSpec synth_spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_spec.seed);
  synth->add_option("--train", synth_spec.train_utterances, "Training utterances");
  synth->add_option("--dev", synth_spec.dev_utterances, "Dev utterances");
  synth->add_option("--vocab-size", synth_spec.vocab_size);
  synth->add_option("--input-dim", synth_spec.input_dim);
  synth->add_option("--min-tokens", synth_spec.min_tokens);
  synth->add_option("--max-tokens", synth_spec.max_tokens);
  synth->add_option("--min-frames", synth_spec.min_frames, "Frames per token, lower bound");
  synth->add_option("--max-frames", synth_spec.max_frames, "Frames per token, upper bound");
  synth->add_option("--noise", synth_spec.noise, "Frame noise scale");
  bool synth_force = false;
  synth->add_flag("--force", synth_force, "Replace an existing corpus in --out");

  // mockteacher
  auto* mock = app.add_subcommand("mockteacher", "Write mock teacher representations (TREP)");
  teacher::MockTeacherSpec mock_spec;
  std::vector<std::string> mock_manifests;
  std::string mock_out;
  mock->add_option("--manifest", mock_manifests, "Manifest(s) to cover")->required();
  mock->add_option("--out", mock_out, "Output .trep file")->required();
  mock->add_option("--id", mock_spec.teacher_id, "Teacher id");
  mock->add_option("--layers", mock_spec.layers);
  mock->add_option("--dim", mock_spec.dim);
  mock->add_option("--lookahead", mock_spec.lookahead, "Context window half-width");
  mock->add_option("--variants", mock_spec.variants, "Context variants");
  mock->add_option("--mask-rate", mock_spec.mask_rate);
  mock->add_option("--seed", mock_spec.seed);
  bool mock_force = false;
  mock->add_flag("--force", mock_force, "Overwrite an existing --out file");

  // train
  auto* train = app.add_subcommand("train", "Run iteration 1, 2 or both");
  ConfigArgs train_args;
  std::string iter = "both";
  bool resume = false;
  add_config_options(train, train_args);
  train->add_option("--iter", iter, "1, 2 or both")->check(CLI::IsMember({"1", "2", "both"}));
  train->add_flag("--resume", resume, "Continue from the last saved epoch");

  // eval
  auto* eval = app.add_subcommand("eval", "Greedy-decode a manifest and report WER");
  ConfigArgs eval_args;
  std::string eval_model;
  add_config_options(eval, eval_args);
  eval->add_option("--model", eval_model, "Model checkpoint (.tkdm)")->required();
  std::string eval_report;
  eval->add_option("--report", eval_report, "Per-utterance TSV report (same as --eval.report)");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Summarize a TREP, ALNQ, TKDM or FRMS file");
  std::string inspect_path;
  insp->add_option("file", inspect_path)->required();
  InspectRequest inspect_req;
  insp->add_option("--utt", inspect_req.utterance, "TREP: utterance whose vectors to show");
  insp->add_option("--layer", inspect_req.layer, "TREP: 1-based layer for --utt")->needs("--utt");
  insp->add_option("--variant", inspect_req.variant, "TREP: context variant for --utt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) {
      const fs::path out = synth_out;
      const char* produced[] = {"train.tsv", "dev.tsv", "vocab.txt", "frames"};
      for (const char* name : produced) {
        if (!fs::exists(out / name)) continue;
        if (!synth_force) {
          throw InvalidInput((out / name).string() + " already exists; pass --force to replace it");
        }
        fs::remove_all(out / name);
      }
      const auto corpus = data::generate_synth_corpus(synth_spec);
      data::write_corpus(out, corpus);
      std::size_t tokens = 0, frames = 0;
      for (const auto& u : corpus.train) {
        tokens += u.tokens.size();
        frames += u.frames.rows();
      }
      const double n = static_cast<double>(std::max<std::size_t>(1, corpus.train.size()));
      std::cout << (out / "train.tsv").string() << ": " << corpus.train.size() << " utterances\n"
                << (out / "dev.tsv").string() << ": " << corpus.dev.size() << " utterances\n"
                << std::fixed << std::setprecision(2) << "vocabulary " << corpus.vocab.size()
                << ", tokens/utt " << tokens / n << ", frames/utt " << frames / n
                << ", input dim " << synth_spec.input_dim << "\n"
                << "train hash " << std::hex << std::setw(16) << std::setfill('0')
                << data::corpus_hash(corpus.train) << "\n";
    } else if (*mock) {
      if (fs::exists(mock_out) && !mock_force) {
        throw InvalidInput(mock_out + " already exists; pass --force to overwrite it");
      }
      std::vector<data::Utterance> utts;
      for (const auto& m : mock_manifests) {
        if (!fs::exists(m)) throw InvalidInput("manifest not found: " + m);
        auto part = data::read_manifest(m, false);
        utts.insert(utts.end(), part.begin(), part.end());
      }
      const auto reps = teacher::generate_mock_reps(utts, mock_spec);
      if (fs::path(mock_out).has_parent_path()) fs::create_directories(fs::path(mock_out).parent_path());
      teacher::write_teacher_reps(mock_out, reps);
      std::cout << mock_out << ": ";
      print_trep_header(reps);
    } else if (*train) {
      const auto cfg = resolve_config(train, train_args);
      std::cerr << "resolved configuration:\n" << cfg.dump();
      const auto corpus = trainer::load_corpus(cfg);
      trainer::RunOptions options;
      options.resume = resume;
      options.log = &std::cerr;
      if (iter == "1") {
        const auto first = trainer::run_iteration1(cfg, corpus, options);
        write_alnq(trainer::alignments_path(cfg),
                   trainer::compute_posteriors(first.model, corpus.train));
      } else if (iter == "2") {
        const fs::path first = trainer::iteration_dir(cfg, 1) / "model.tkdm";
        if (!fs::exists(first)) throw MissingArtifact("iteration 1 model not found: " + first.string());
        if (!fs::exists(trainer::alignments_path(cfg))) {
          throw MissingArtifact("alignments not found: " + trainer::alignments_path(cfg).string());
        }
        const auto model = load_model<float>(first, cfg.model);
        const auto q = read_alnq(trainer::alignments_path(cfg));
        const auto teachers = cfg.lambda > 0.0 ? trainer::load_teachers(cfg, corpus.train)
                                               : std::vector<teacher::TeacherRepSet>{};
        trainer::run_iteration2(cfg, corpus, model, q, teachers, options);
      } else {
        trainer::run_both(cfg, corpus, options);
      }
    } else if (*eval) {
      auto cfg = resolve_config(eval, eval_args);
      if (!eval_report.empty()) cfg.eval_report = eval_report;
      const std::string manifest = cfg.eval_manifest.empty() ? cfg.dev_manifest : cfg.eval_manifest;
      if (manifest.empty()) throw InvalidConfig("set eval.manifest or data.dev");
      auto utts = data::read_manifest(manifest);
      trainer::check_utterances(utts, cfg.model);
      const auto model = load_model<float>(eval_model, cfg.model);
      fs::path vocab = cfg.vocab;
      if (vocab.empty() && fs::exists(fs::path(manifest).parent_path() / "vocab.txt")) {
        vocab = fs::path(manifest).parent_path() / "vocab.txt";
      }
      const auto v = vocab.empty() ? data::Vocabulary::plain(cfg.model.vocab_size)
                                   : data::Vocabulary::read(vocab);
      const auto result = trainer::evaluate(model, utts, v, cfg.max_symbols_per_frame,
                                            cfg.eval_report);
      if (result.skipped) {
        std::cerr << "repkd: warning: skipped " << result.skipped
                  << " utterance(s) with an empty reference\n";
      }
      std::cout << std::fixed << std::setprecision(4) << "WER " << result.wer << " ("
                << result.counts.edits() << "/" << result.counts.reference_words << ")\n";
    } else if (*insp) {
      return inspect(inspect_path, inspect_req);
    }
  } catch (const InvalidConfig& e) {
    std::cerr << "repkd: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "repkd: invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MissingArtifact& e) {
    std::cerr << "repkd: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const FormatError& e) {
    std::cerr << "repkd: malformed file: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const ConsistencyError& e) {
    std::cerr << "repkd: incompatible artifacts: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const Error& e) {
    std::cerr << "repkd: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
