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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "repkd/config.hpp"
#include "repkd/data.hpp"
#include "repkd/distill.hpp"
#include "repkd/errors.hpp"
#include "repkd/lattice.hpp"
#include "repkd/posterior_io.hpp"
#include "repkd/strategies.hpp"
#include "repkd/teacher_reps.hpp"
#include "repkd/trainer.hpp"
#include "repkd/wer.hpp"

namespace py = pybind11;
using namespace repkd;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

lattice::JointLogProbGrid grid_from(const F64& logprobs, int blank) {
  if (logprobs.ndim() != 3) throw InvalidInput("log-probabilities must be T x (N+1) x C");
  const auto T = static_cast<std::size_t>(logprobs.shape(0));
  const auto U = static_cast<std::size_t>(logprobs.shape(1));
  const auto C = static_cast<std::size_t>(logprobs.shape(2));
  if (U == 0) throw InvalidInput("second axis must have N+1 >= 1 entries");
  if (blank < 0) blank += static_cast<int>(C);
  lattice::JointLogProbGrid grid(T, U - 1, C, static_cast<std::size_t>(blank));
  std::memcpy(grid.values().data(), logprobs.data(), grid.values().size() * sizeof(double));
  return grid;
}

py::array_t<double> posterior_array(const lattice::AlignmentPosterior& q) {
  py::array_t<double> out({q.tokens, q.frames});
  std::memcpy(out.mutable_data(), q.q.data(), q.q.size() * sizeof(double));
  return out;
}

lattice::AlignmentPosterior posterior_from(const F64& a) {
  if (a.ndim() != 2) throw InvalidInput("posterior must be N x T");
  lattice::AlignmentPosterior q;
  q.tokens = static_cast<std::size_t>(a.shape(0));
  q.frames = static_cast<std::size_t>(a.shape(1));
  q.q.assign(a.data(), a.data() + a.size());
  return q;
}

template <typename S, typename A>
Tensor<S> tensor_from(const A& a) {
  if (a.ndim() == 1) {
    Tensor<S> t = Tensor<S>::vector(static_cast<std::size_t>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), t.flat().begin());
    return t;
  }
  if (a.ndim() != 2) throw InvalidInput("expected a 1-D or 2-D array");
  Tensor<S> t = Tensor<S>::matrix(static_cast<std::size_t>(a.shape(0)),
                                  static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), t.flat().begin());
  return t;
}

template <typename S>
py::array_t<S> array_from(const Tensor<S>& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  py::array_t<S> out(shape);
  std::copy(t.flat().begin(), t.flat().end(), out.mutable_data());
  return out;
}

config::RunConfig config_from(const std::map<std::string, std::string>& values) {
  config::RunConfig cfg;
  for (const auto& [k, v] : values) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

py::list history_list(const std::vector<trainer::EpochMetrics>& h) {
  py::list out;
  for (const auto& m : h) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["asr_loss"] = m.asr_loss;
    d["kd_loss"] = m.kd_loss;
    d["combined"] = m.combined;
    d["dev_wer"] = m.dev_wer;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "repkd C++ core";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_ValueError);
  py::register_exception<InvalidConfig>(m, "InvalidConfig", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<MissingArtifact>(m, "MissingArtifact", PyExc_FileNotFoundError);

  // lattice
  m.def("transducer_nll",
        [](const F64& lp, const std::vector<int>& y, int blank) {
          return lattice::transducer_nll(grid_from(lp, blank), y);
        },
        py::arg("logprobs"), py::arg("tokens"), py::arg("blank") = -1,
        "Negative log-likelihood of `tokens` under a T x (N+1) x C log-probability grid.");
  m.def("transducer_grad",
        [](const F64& lp, const std::vector<int>& y, int blank) {
          const auto grid = grid_from(lp, blank);
          const auto g = lattice::transducer_grad(grid, y);
          py::array_t<double> grad({lp.shape(0), lp.shape(1), lp.shape(2)});
          std::memcpy(grad.mutable_data(), g.grad.data(), g.grad.size() * sizeof(double));
          return py::make_tuple(g.nll, grad);
        },
        py::arg("logprobs"), py::arg("tokens"), py::arg("blank") = -1);
  m.def("alignment_posterior",
        [](const F64& lp, const std::vector<int>& y, int blank) {
          return posterior_array(lattice::alignment_posterior(grid_from(lp, blank), y));
        },
        py::arg("logprobs"), py::arg("tokens"), py::arg("blank") = -1);
  m.def("enumerated_nll",
        [](const F64& lp, const std::vector<int>& y, int blank) {
          return lattice::enumerated_nll(grid_from(lp, blank), y);
        },
        py::arg("logprobs"), py::arg("tokens"), py::arg("blank") = -1,
        "Brute-force reference over all alignments (small grids only).");
  m.def("enumerated_posterior",
        [](const F64& lp, const std::vector<int>& y, int blank) {
          return posterior_array(lattice::enumerated_posterior(grid_from(lp, blank), y));
        },
        py::arg("logprobs"), py::arg("tokens"), py::arg("blank") = -1);

  // distillation
  m.def("expected_phi",
        [](const F64& q, const F64& phi) {
          return array_from(distill::expected_phi(posterior_from(q), tensor_from<double>(phi)));
        },
        py::arg("q"), py::arg("phi"));
  m.def("kd_loss",
        [](const F64& phibar, const F64& psi, const F32& targets, const F64& weight,
           const F64& bias, const std::string& distance, bool normalize) {
          nn::RegressionParams<double> r{tensor_from<double>(weight), tensor_from<double>(bias)};
          return distill::kd_loss(tensor_from<double>(phibar), tensor_from<double>(psi),
                                  tensor_from<float>(targets), r, distill::parse_distance(distance),
                                  normalize);
        },
        py::arg("phibar"), py::arg("psi"), py::arg("targets"), py::arg("weight"), py::arg("bias"),
        py::arg("distance") = "l1", py::arg("normalize") = false);
  m.def("select_layers",
        [](const std::string& strategy, std::uint32_t k, std::uint32_t total, std::uint64_t seed,
           std::uint64_t epoch) {
          strategies::StrategySpec spec{strategies::parse_layer_strategy(strategy), k, total, seed};
          return strategies::select_layers(spec, epoch);
        },
        py::arg("strategy"), py::arg("k"), py::arg("total_layers"), py::arg("seed") = 0,
        py::arg("epoch") = 1);
  m.def("sample_context_variant",
        [](std::uint32_t variants, double mask_rate, std::uint64_t seed, const std::string& id,
           std::uint64_t epoch) {
          strategies::ContextVariantPolicy p{variants, mask_rate, seed};
          p.validate();
          return strategies::sample_context_variant(p, id, epoch);
        },
        py::arg("variants"), py::arg("mask_rate"), py::arg("seed"), py::arg("utterance_id"),
        py::arg("epoch"));

  // files
  m.def("read_trep",
        [](const std::string& path) {
          const auto set = teacher::read_teacher_reps(path);
          py::dict utts;
          for (const auto& u : set.utterances()) {
            py::array_t<float> a({static_cast<py::ssize_t>(set.variants()),
                                  static_cast<py::ssize_t>(set.layers()),
                                  static_cast<py::ssize_t>(u.tokens),
                                  static_cast<py::ssize_t>(set.dim())});
            std::copy(u.values.begin(), u.values.end(), a.mutable_data());
            utts[py::str(u.id)] = a;
          }
          py::dict out;
          out["teacher_id"] = set.teacher_id();
          out["layers"] = set.layers();
          out["dim"] = set.dim();
          out["variants"] = set.variants();
          out["utterances"] = utts;
          return out;
        },
        py::arg("path"), "Returns a dict; each utterance maps to an M x L x N x D array.");
  m.def("write_trep",
        [](const std::string& path, const std::string& teacher_id,
           const std::vector<std::pair<std::string, F32>>& utterances) {
          if (utterances.empty()) throw InvalidInput("no utterances to write");
          const auto& first = utterances.front().second;
          if (first.ndim() != 4) throw InvalidInput("arrays must be M x L x N x D");
          teacher::TeacherRepSet set(teacher_id, static_cast<std::uint32_t>(first.shape(1)),
                                     static_cast<std::uint32_t>(first.shape(3)),
                                     static_cast<std::uint32_t>(first.shape(0)));
          for (const auto& [id, a] : utterances) {
            if (a.ndim() != 4) throw InvalidInput("arrays must be M x L x N x D");
            teacher::UtteranceReps u{id, static_cast<std::uint32_t>(a.shape(2)),
                                     std::vector<float>(a.data(), a.data() + a.size())};
            set.add(std::move(u));
          }
          teacher::write_teacher_reps(path, set);
        },
        py::arg("path"), py::arg("teacher_id"), py::arg("utterances"));
  m.def("read_alnq",
        [](const std::string& path) {
          const auto set = read_alnq(path);
          py::dict out;
          for (std::size_t k = 0; k < set.size(); ++k) out[py::str(set.ids()[k])] = posterior_array(set.at(k));
          return out;
        },
        py::arg("path"));
  m.def("write_alnq",
        [](const std::string& path, const std::vector<std::pair<std::string, F64>>& items) {
          PosteriorSet set;
          for (const auto& [id, a] : items) set.add(id, posterior_from(a));
          set.round_to_f32();
          write_alnq(path, set);
        },
        py::arg("path"), py::arg("posteriors"));

  m.def("word_error_rate",
        [](const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
          return wer::word_error_rate(wer::align(ref, hyp));
        },
        py::arg("reference"), py::arg("hypothesis"));

  // pipeline
  m.def("generate_synth_corpus",
        [](const std::string& out, std::uint64_t seed, std::size_t train, std::size_t dev,
           double noise) {
          data::SynthSpec spec;
          spec.seed = seed;
          spec.train_utterances = train;
          spec.dev_utterances = dev;
          spec.noise = noise;
          const auto corpus = data::generate_synth_corpus(spec);
          data::write_corpus(out, corpus);
          return data::corpus_hash(corpus.train);
        },
        py::arg("out"), py::arg("seed") = 1, py::arg("train") = 500, py::arg("dev") = 100,
        py::arg("noise") = data::SynthSpec{}.noise,
        "Writes a synthetic corpus and returns the hash of its training split.");
  m.def("generate_mock_teacher",
        [](const std::vector<std::string>& manifests, const std::string& out,
           const std::string& teacher_id, std::uint32_t layers, std::uint32_t dim,
           std::uint32_t lookahead, std::uint32_t variants, double mask_rate, std::uint64_t seed) {
          std::vector<data::Utterance> utts;
          for (const auto& path : manifests) {
            auto part = data::read_manifest(path, false);
            utts.insert(utts.end(), part.begin(), part.end());
          }
          teacher::MockTeacherSpec spec{teacher_id, layers, dim, lookahead, variants, mask_rate, seed};
          const auto parent = std::filesystem::path(out).parent_path();
          if (!parent.empty()) std::filesystem::create_directories(parent);
          teacher::write_teacher_reps(out, teacher::generate_mock_reps(utts, spec));
        },
        py::arg("manifests"), py::arg("out"), py::arg("teacher_id") = "mock",
        py::arg("layers") = 12, py::arg("dim") = 768, py::arg("lookahead") = 1,
        py::arg("variants") = 1, py::arg("mask_rate") = 0.1, py::arg("seed") = 0);
  m.def("train",
        [](const std::map<std::string, std::string>& values, const std::string& iteration,
           bool resume) {
          const auto cfg = config_from(values);
          trainer::Corpus corpus;
          trainer::IterationResult result;
          {
            py::gil_scoped_release release;
            corpus = trainer::load_corpus(cfg);
            trainer::RunOptions options;
            options.resume = resume;
            if (iteration == "1") {
              result = trainer::run_iteration1(cfg, corpus, options);
              write_alnq(trainer::alignments_path(cfg),
                         trainer::compute_posteriors(result.model, corpus.train));
            } else if (iteration == "both") {
              result = trainer::run_both(cfg, corpus, options);
            } else {
              throw InvalidConfig("iteration must be '1' or 'both', got '" + iteration + "'");
            }
          }
          return history_list(result.history);
        },
        py::arg("config"), py::arg("iteration") = "both", py::arg("resume") = false,
        "Trains with flat `section.key` settings and returns the per-epoch metrics.");
  m.def("evaluate",
        [](const std::map<std::string, std::string>& values, const std::string& model_path,
           const std::string& manifest) {
          const auto cfg = config_from(values);
          auto utts = data::read_manifest(manifest);
          trainer::check_utterances(utts, cfg.model);
          const auto model = load_model<float>(model_path, cfg.model);
          const auto vocab_path = std::filesystem::path(manifest).parent_path() / "vocab.txt";
          const auto vocab = std::filesystem::exists(vocab_path)
                                 ? data::Vocabulary::read(vocab_path)
                                 : data::Vocabulary::plain(cfg.model.vocab_size);
          return trainer::evaluate(model, utts, vocab, cfg.max_symbols_per_frame).wer;
        },
        py::arg("config"), py::arg("model"), py::arg("manifest"));
}
