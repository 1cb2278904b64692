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

// Student network: a strided affine/tanh acoustic encoder, a causal GRU
// prediction network and a multiplicative-integration joint network
//
//   logits(t, u) = W tanh((A phi_t) * (B psi_u) + b)
//
// followed by log-softmax over the vocabulary plus blank (blank is the last
// class). Every component has a hand-written backward pass; instantiated for
// float (training) and double (gradient checks).

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "repkd/lattice.hpp"
#include "repkd/tensor.hpp"

namespace repkd::nn {

struct ModelConfig {
  std::size_t input_dim = 16;
  std::size_t subsample = 2;
  std::size_t encoder_layers = 2;
  std::size_t encoder_dim = 64;  // D_Trs
  std::size_t vocab_size = 20;   // |V|, blank excluded
  std::size_t embed_dim = 32;
  std::size_t prediction_dim = 64;  // D_Prd
  std::size_t joint_dim = 64;       // D_J

  std::size_t classes() const { return vocab_size + 1; }
  int blank() const { return static_cast<int>(vocab_size); }
  /// Frames after subsampling: ceil(raw / subsample).
  std::size_t output_frames(std::size_t raw_frames) const {
    return (raw_frames + subsample - 1) / subsample;
  }

  void validate() const;
  /// Stable textual form; the digest stored in checkpoints hashes it.
  std::string canonical() const;
  std::uint64_t digest() const;
};

template <typename S>
struct EncoderParams {
  std::vector<Tensor<S>> weights;  // layer l: (out x in)
  std::vector<Tensor<S>> biases;
};

template <typename S>
struct PredictionParams {
  Tensor<S> embedding;      // |V| x E
  Tensor<S> start;          // H, the state that produces psi_1
  Tensor<S> input_weight;   // 3H x E, gate order (reset, update, candidate)
  Tensor<S> hidden_weight;  // 3H x H
  Tensor<S> bias;           // 3H
};

template <typename S>
struct JointParams {
  Tensor<S> acoustic_proj;  // A: D_J x D_Trs
  Tensor<S> text_proj;      // B: D_J x D_Prd
  Tensor<S> output;         // W: (|V|+1) x D_J
  Tensor<S> bias;           // D_J
};

/// Linear regression head used by distillation: (D_Trs + D_Prd) -> D_out.
template <typename S>
struct RegressionParams {
  Tensor<S> weight;
  Tensor<S> bias;

  bool empty() const { return weight.empty(); }
  std::size_t output_dim() const { return weight.rows(); }
};

template <typename S>
struct Model {
  ModelConfig config;
  EncoderParams<S> encoder;
  PredictionParams<S> prediction;
  JointParams<S> joint;
  RegressionParams<S> regression;  // empty until distillation adds it

  /// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  static Model init(const ModelConfig& config, std::uint64_t seed);

  void add_regression(std::size_t output_dim, std::uint64_t seed);

  /// Same shapes, all zeros. Used as a gradient accumulator.
  Model zeros_like() const;

  /// Calls f(name, tensor) for every parameter in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const;
  /// FNV-1a over names and raw parameter bytes.
  std::uint64_t hash() const;

  template <typename T>
  Model<T> cast() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& m, F& f) {
    for (std::size_t l = 0; l < m.encoder.weights.size(); ++l) {
      f("encoder." + std::to_string(l) + ".weight", m.encoder.weights[l]);
      f("encoder." + std::to_string(l) + ".bias", m.encoder.biases[l]);
    }
    f(std::string("prediction.embedding"), m.prediction.embedding);
    f(std::string("prediction.start"), m.prediction.start);
    f(std::string("prediction.input_weight"), m.prediction.input_weight);
    f(std::string("prediction.hidden_weight"), m.prediction.hidden_weight);
    f(std::string("prediction.bias"), m.prediction.bias);
    f(std::string("joint.acoustic_proj"), m.joint.acoustic_proj);
    f(std::string("joint.text_proj"), m.joint.text_proj);
    f(std::string("joint.output"), m.joint.output);
    f(std::string("joint.bias"), m.joint.bias);
    if (!m.regression.empty()) {
      f(std::string("regression.weight"), m.regression.weight);
      f(std::string("regression.bias"), m.regression.bias);
    }
  }
};

// --- encoder ---------------------------------------------------------------

template <typename S>
struct EncoderCache {
  std::vector<Tensor<S>> activations;  // [0] stacked input, [l+1] layer l output
  bool valid = false;
};

/// frames: T_raw x D_in. Returns phi: ceil(T_raw / s) x D_Trs. Consecutive
/// groups of s frames are concatenated (the last group zero-padded) before the
/// first affine layer.
template <typename S>
Tensor<S> encode_acoustic(const Tensor<S>& frames, const EncoderParams<S>& params,
                          const ModelConfig& config, EncoderCache<S>* cache = nullptr);

template <typename S>
void encoder_backward(const EncoderParams<S>& params, const EncoderCache<S>& cache,
                      const Tensor<S>& d_phi, EncoderParams<S>& grads);

// --- prediction network ----------------------------------------------------

template <typename S>
struct PredictionCache {
  std::vector<int> tokens;
  Tensor<S> states;  // (N+1) x H
  Tensor<S> reset, update, candidate, hidden_candidate;  // N x H each
  bool valid = false;
};

/// Returns (N+1) x H prediction states. Row u depends on y[0..u) only, so
/// row i-1 is psi_i in 1-based notation and row N feeds the final blank.
template <typename S>
Tensor<S> encode_prefix(std::span<const int> tokens, const PredictionParams<S>& params,
                        PredictionCache<S>* cache = nullptr);

/// One recurrence step: the state after consuming `token`.
template <typename S>
std::vector<S> prediction_step(const PredictionParams<S>& params, std::span<const S> state,
                               int token);

/// d_states: (N+1) x H adjoint of the encode_prefix output.
template <typename S>
void prediction_backward(const PredictionParams<S>& params, const PredictionCache<S>& cache,
                         const Tensor<S>& d_states, PredictionParams<S>& grads);

// --- joint network -----------------------------------------------------------

/// Log-distribution over |V| + 1 classes for one (phi_t, psi_u) pair.
template <typename S>
std::vector<double> joint(std::span<const S> phi_t, std::span<const S> psi_u,
                          const JointParams<S>& params);

template <typename S>
struct JointCache {
  Tensor<S> phi;       // T x D_Trs
  Tensor<S> states;    // (N+1) x D_Prd
  Tensor<S> acoustic;  // T x D_J, A phi_t
  Tensor<S> text;      // (N+1) x D_J, B psi_u
  Tensor<S> hidden;    // T(N+1) x D_J, tanh(...)
  bool valid = false;
};

/// Evaluates the joint on every lattice cell.
template <typename S>
lattice::JointLogProbGrid joint_grid(const Tensor<S>& phi, const Tensor<S>& states,
                                     const JointParams<S>& params, int blank,
                                     JointCache<S>* cache = nullptr);

/// d_logits: adjoint of the unnormalized logits, laid out like the grid.
/// Accumulates into grads, d_phi (T x D_Trs) and d_states ((N+1) x D_Prd).
template <typename S>
void joint_backward(const JointParams<S>& params, const JointCache<S>& cache,
                    std::span<const double> d_logits, JointParams<S>& grads,
                    Tensor<S>& d_phi, Tensor<S>& d_states);

// --- whole model -------------------------------------------------------------

template <typename S>
struct ForwardCache {
  EncoderCache<S> encoder;
  PredictionCache<S> prediction;
  JointCache<S> joint;
  Tensor<S> phi;
  Tensor<S> states;
  lattice::JointLogProbGrid grid;
  bool valid = false;
};

template <typename S>
ForwardCache<S> forward(const Model<S>& model, const Tensor<S>& frames,
                        std::span<const int> tokens);

/// Reverse pass through joint, encoder and prediction network. `d_logprob` is
/// the adjoint of grid log-probabilities (may be empty for none); `d_phi` and
/// `d_states` carry extra adjoints from other heads (may be empty tensors).
/// Gradients are accumulated into `grads`.
template <typename S>
void backward(const Model<S>& model, const ForwardCache<S>& cache,
              std::span<const double> d_logprob, const Tensor<S>& d_phi_extra,
              const Tensor<S>& d_states_extra, Model<S>& grads);

/// Transducer NLL and its gradient for one utterance; returns the NLL.
template <typename S>
double asr_loss_and_grad(const Model<S>& model, const Tensor<S>& frames,
                         std::span<const int> tokens, std::type_identity_t<Model<S>>* grads);

}  // namespace repkd::nn
