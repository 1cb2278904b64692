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

#include "repkd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "repkd/random.hpp"

namespace repkd::nn {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InvalidConfig(std::string("model.") + name + " must be positive");
  };
  positive(input_dim, "input_dim");
  positive(subsample, "subsample");
  positive(encoder_layers, "encoder_layers");
  positive(encoder_dim, "encoder_dim");
  positive(embed_dim, "embed_dim");
  positive(prediction_dim, "prediction_dim");
  positive(joint_dim, "joint_dim");
  if (vocab_size < 2) throw InvalidConfig("model.vocab_size must be at least 2");
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os << "input_dim=" << input_dim << ";subsample=" << subsample
     << ";encoder_layers=" << encoder_layers << ";encoder_dim=" << encoder_dim
     << ";vocab_size=" << vocab_size << ";embed_dim=" << embed_dim
     << ";prediction_dim=" << prediction_dim << ";joint_dim=" << joint_dim;
  return os.str();
}

std::uint64_t ModelConfig::digest() const { return rng::fnv1a(canonical()); }

namespace {

template <typename S>
void fill_uniform(Tensor<S>& t, std::size_t fan_in, rng::Generator& gen) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(gen.uniform(-bound, bound));
}

template <typename S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <typename S>
void add_into(Tensor<S>& dst, const Tensor<S>& src) {
  if (src.empty()) return;
  if (!dst.same_shape(src)) {
    throw ContractViolation("adjoint shape " + shape_string(src.dims()) +
                            " does not match " + shape_string(dst.dims()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename S>
Model<S> Model<S>::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  rng::Generator gen(rng::derive(seed, rng::Stream::kInit));
  Model m;
  m.config = config;
  std::size_t in = config.input_dim * config.subsample;
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const std::size_t out = config.encoder_dim;
    m.encoder.weights.push_back(Tensor<S>::matrix(out, in));
    m.encoder.biases.push_back(Tensor<S>::vector(out));
    fill_uniform(m.encoder.weights.back(), in, gen);
    fill_uniform(m.encoder.biases.back(), in, gen);
    in = out;
  }
  const std::size_t H = config.prediction_dim, E = config.embed_dim;
  auto& p = m.prediction;
  p.embedding = Tensor<S>::matrix(config.vocab_size, E);
  p.start = Tensor<S>::vector(H);
  p.input_weight = Tensor<S>::matrix(3 * H, E);
  p.hidden_weight = Tensor<S>::matrix(3 * H, H);
  p.bias = Tensor<S>::vector(3 * H);
  fill_uniform(p.embedding, E, gen);
  fill_uniform(p.start, H, gen);
  fill_uniform(p.input_weight, E, gen);
  fill_uniform(p.hidden_weight, H, gen);
  fill_uniform(p.bias, H, gen);

  const std::size_t J = config.joint_dim;
  auto& j = m.joint;
  j.acoustic_proj = Tensor<S>::matrix(J, config.encoder_dim);
  j.text_proj = Tensor<S>::matrix(J, H);
  j.output = Tensor<S>::matrix(config.classes(), J);
  j.bias = Tensor<S>::vector(J);
  fill_uniform(j.acoustic_proj, config.encoder_dim, gen);
  fill_uniform(j.text_proj, H, gen);
  fill_uniform(j.output, J, gen);
  fill_uniform(j.bias, J, gen);
  return m;
}

template <typename S>
void Model<S>::add_regression(std::size_t output_dim, std::uint64_t seed) {
  if (output_dim == 0) throw InvalidConfig("regression output dimension must be positive");
  rng::Generator gen(rng::derive(seed, rng::Stream::kRegressionInit));
  const std::size_t in = config.encoder_dim + config.prediction_dim;
  regression.weight = Tensor<S>::matrix(output_dim, in);
  regression.bias = Tensor<S>::vector(output_dim);
  fill_uniform(regression.weight, in, gen);
  fill_uniform(regression.bias, in, gen);
}

template <typename S>
Model<S> Model<S>::zeros_like() const {
  Model z = *this;
  z.visit([](const std::string&, Tensor<S>& t) { t.fill(S(0)); });
  return z;
}

template <typename S>
std::size_t Model<S>::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Tensor<S>& t) { n += t.size(); });
  return n;
}

template <typename S>
std::uint64_t Model<S>::hash() const {
  std::uint64_t h = rng::fnv1a(config.canonical());
  visit([&](const std::string& name, const Tensor<S>& t) {
    h = rng::fnv1a(name, h);
    h = rng::fnv1a_bytes(t.data(), t.size() * sizeof(S), h);
  });
  return h;
}

template <typename S>
template <typename T>
Model<T> Model<S>::cast() const {
  Model<T> out;
  out.config = config;
  for (const auto& w : encoder.weights) out.encoder.weights.push_back(w.template cast<T>());
  for (const auto& b : encoder.biases) out.encoder.biases.push_back(b.template cast<T>());
  out.prediction.embedding = prediction.embedding.template cast<T>();
  out.prediction.start = prediction.start.template cast<T>();
  out.prediction.input_weight = prediction.input_weight.template cast<T>();
  out.prediction.hidden_weight = prediction.hidden_weight.template cast<T>();
  out.prediction.bias = prediction.bias.template cast<T>();
  out.joint.acoustic_proj = joint.acoustic_proj.template cast<T>();
  out.joint.text_proj = joint.text_proj.template cast<T>();
  out.joint.output = joint.output.template cast<T>();
  out.joint.bias = joint.bias.template cast<T>();
  out.regression.weight = regression.weight.template cast<T>();
  out.regression.bias = regression.bias.template cast<T>();
  return out;
}

// --- encoder ---------------------------------------------------------------

template <typename S>
Tensor<S> encode_acoustic(const Tensor<S>& frames, const EncoderParams<S>& params,
                          const ModelConfig& config, EncoderCache<S>* cache) {
  if (frames.rank() != 2 || frames.rows() == 0) {
    throw InvalidInput("acoustic input is empty");
  }
  if (frames.cols() != config.input_dim) {
    throw ContractViolation("frames have dimension " + std::to_string(frames.cols()) +
                            ", encoder expects " + std::to_string(config.input_dim));
  }
  const std::size_t s = config.subsample;
  if (frames.rows() < s) {
    throw InvalidInput("utterance has " + std::to_string(frames.rows()) +
                       " frames, fewer than the subsampling factor " + std::to_string(s));
  }
  if (params.weights.size() != config.encoder_layers || params.biases.size() != config.encoder_layers) {
    throw ContractViolation("encoder parameters do not match the configured layer count");
  }
  const std::size_t T = config.output_frames(frames.rows());
  const std::size_t D = config.input_dim;
  Tensor<S> x = Tensor<S>::matrix(T, s * D);
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    const std::size_t t = r / s, slot = r % s;
    for (std::size_t d = 0; d < D; ++d) x(t, slot * D + d) = frames(r, d);
  }
  std::vector<Tensor<S>> acts;
  acts.push_back(std::move(x));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& w = params.weights[l];
    const auto& b = params.biases[l];
    const Tensor<S>& in = acts.back();
    if (w.cols() != in.cols()) throw ContractViolation("encoder layer shape mismatch");
    Tensor<S> out = Tensor<S>::matrix(T, w.rows());
    for (std::size_t t = 0; t < T; ++t) {
      auto o = out.row(t);
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = b[i];
      linalg::gemv_add(w, in.row(t), o);
      for (auto& v : o) v = std::tanh(v);
    }
    acts.push_back(std::move(out));
  }
  Tensor<S> phi = acts.back();
  if (cache) {
    cache->activations = std::move(acts);
    cache->valid = true;
  }
  return phi;
}

template <typename S>
void encoder_backward(const EncoderParams<S>& params, const EncoderCache<S>& cache,
                      const Tensor<S>& d_phi, EncoderParams<S>& grads) {
  if (!cache.valid) throw ContractViolation("encoder backward called without a forward cache");
  Tensor<S> d = d_phi;
  for (std::size_t l = params.weights.size(); l-- > 0;) {
    const Tensor<S>& y = cache.activations[l + 1];
    const Tensor<S>& x = cache.activations[l];
    if (!d.same_shape(y)) throw ContractViolation("encoder adjoint shape mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= S(1) - y[i] * y[i];
    Tensor<S> d_in = Tensor<S>::matrix(x.rows(), x.cols());
    for (std::size_t t = 0; t < d.rows(); ++t) {
      auto g = d.row(t);
      for (std::size_t i = 0; i < g.size(); ++i) grads.biases[l][i] += g[i];
      linalg::outer_add(grads.weights[l], std::span<const S>(g), x.row(t));
      if (l > 0) linalg::gemv_t_add(params.weights[l], std::span<const S>(g), d_in.row(t));
    }
    d = std::move(d_in);
  }
}

// --- prediction network ----------------------------------------------------

namespace {

template <typename S>
void check_tokens(std::span<const int> tokens, const PredictionParams<S>& params) {
  for (int tok : tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= params.embedding.rows()) {
      throw InvalidInput("token id " + std::to_string(tok) + " is outside the vocabulary of " +
                         std::to_string(params.embedding.rows()));
    }
  }
}

template <typename S>
struct GruStep {
  std::vector<S> reset, update, candidate, hidden_candidate, next;
};

template <typename S>
GruStep<S> gru_step(const PredictionParams<S>& p, std::span<const S> h, int token) {
  const std::size_t H = p.start.size();
  std::vector<S> gx(3 * H, S(0)), gh(3 * H, S(0));
  linalg::gemv_add(p.input_weight, p.embedding.row(static_cast<std::size_t>(token)),
                   std::span<S>(gx));
  linalg::gemv_add(p.hidden_weight, h, std::span<S>(gh));
  GruStep<S> s;
  s.reset.resize(H);
  s.update.resize(H);
  s.candidate.resize(H);
  s.hidden_candidate.resize(H);
  s.next.resize(H);
  for (std::size_t i = 0; i < H; ++i) {
    s.reset[i] = sigmoid(gx[i] + gh[i] + p.bias[i]);
    s.update[i] = sigmoid(gx[H + i] + gh[H + i] + p.bias[H + i]);
    s.hidden_candidate[i] = gh[2 * H + i];
    s.candidate[i] = std::tanh(gx[2 * H + i] + p.bias[2 * H + i] + s.reset[i] * gh[2 * H + i]);
    s.next[i] = (S(1) - s.update[i]) * s.candidate[i] + s.update[i] * h[i];
  }
  return s;
}

}  // namespace

template <typename S>
Tensor<S> encode_prefix(std::span<const int> tokens, const PredictionParams<S>& params,
                        PredictionCache<S>* cache) {
  check_tokens(tokens, params);
  const std::size_t H = params.start.size(), N = tokens.size();
  Tensor<S> states = Tensor<S>::matrix(N + 1, H);
  for (std::size_t i = 0; i < H; ++i) states(0, i) = params.start[i];
  PredictionCache<S> local;
  if (cache) {
    local.tokens.assign(tokens.begin(), tokens.end());
    local.reset = Tensor<S>::matrix(N, H);
    local.update = Tensor<S>::matrix(N, H);
    local.candidate = Tensor<S>::matrix(N, H);
    local.hidden_candidate = Tensor<S>::matrix(N, H);
  }
  for (std::size_t k = 0; k < N; ++k) {
    auto step = gru_step(params, std::span<const S>(states.row(k)), tokens[k]);
    std::copy(step.next.begin(), step.next.end(), states.row(k + 1).begin());
    if (cache) {
      std::copy(step.reset.begin(), step.reset.end(), local.reset.row(k).begin());
      std::copy(step.update.begin(), step.update.end(), local.update.row(k).begin());
      std::copy(step.candidate.begin(), step.candidate.end(), local.candidate.row(k).begin());
      std::copy(step.hidden_candidate.begin(), step.hidden_candidate.end(),
                local.hidden_candidate.row(k).begin());
    }
  }
  if (cache) {
    local.states = states;
    local.valid = true;
    *cache = std::move(local);
  }
  return states;
}

template <typename S>
std::vector<S> prediction_step(const PredictionParams<S>& params, std::span<const S> state,
                               int token) {
  const int one[1] = {token};
  check_tokens(std::span<const int>(one), params);
  return gru_step(params, state, token).next;
}

template <typename S>
void prediction_backward(const PredictionParams<S>& params, const PredictionCache<S>& cache,
                         const Tensor<S>& d_states, PredictionParams<S>& grads) {
  if (!cache.valid) throw ContractViolation("prediction backward called without a forward cache");
  if (!d_states.same_shape(cache.states)) {
    throw ContractViolation("prediction adjoint shape mismatch");
  }
  const std::size_t H = params.start.size(), N = cache.tokens.size();
  Tensor<S> dh = d_states;
  std::vector<S> gx(3 * H), gh(3 * H);
  for (std::size_t k = N; k-- > 0;) {
    const auto h = cache.states.row(k);
    const auto r = cache.reset.row(k), z = cache.update.row(k);
    const auto n = cache.candidate.row(k), hn = cache.hidden_candidate.row(k);
    auto dnext = dh.row(k + 1);
    auto dprev = dh.row(k);
    for (std::size_t i = 0; i < H; ++i) {
      const S dn = dnext[i] * (S(1) - z[i]);
      const S dz = dnext[i] * (h[i] - n[i]);
      dprev[i] += dnext[i] * z[i];
      const S dn_pre = dn * (S(1) - n[i] * n[i]);
      const S dz_pre = dz * z[i] * (S(1) - z[i]);
      const S dr_pre = dn_pre * hn[i] * r[i] * (S(1) - r[i]);
      gx[i] = dr_pre;
      gx[H + i] = dz_pre;
      gx[2 * H + i] = dn_pre;
      gh[i] = dr_pre;
      gh[H + i] = dz_pre;
      gh[2 * H + i] = dn_pre * r[i];
    }
    const auto tok = static_cast<std::size_t>(cache.tokens[k]);
    for (std::size_t i = 0; i < 3 * H; ++i) grads.bias[i] += gx[i];
    linalg::outer_add(grads.input_weight, std::span<const S>(gx), params.embedding.row(tok));
    linalg::gemv_t_add(params.input_weight, std::span<const S>(gx), grads.embedding.row(tok));
    linalg::outer_add(grads.hidden_weight, std::span<const S>(gh), h);
    linalg::gemv_t_add(params.hidden_weight, std::span<const S>(gh), dprev);
  }
  for (std::size_t i = 0; i < H; ++i) grads.start[i] += dh(0, i);
}

// --- joint network -----------------------------------------------------------

namespace {

template <typename S>
void log_softmax_into(std::span<const S> logits, std::span<double> out) {
  double m = -std::numeric_limits<double>::infinity();
  for (S v : logits) m = std::max(m, static_cast<double>(v));
  double s = 0.0;
  for (S v : logits) s += std::exp(static_cast<double>(v) - m);
  const double lse = m + std::log(s);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = static_cast<double>(logits[k]) - lse;
}

}  // namespace

template <typename S>
std::vector<double> joint(std::span<const S> phi_t, std::span<const S> psi_u,
                          const JointParams<S>& params) {
  if (phi_t.size() != params.acoustic_proj.cols() || psi_u.size() != params.text_proj.cols()) {
    throw ContractViolation("joint input dimensions do not match the projections");
  }
  const std::size_t J = params.bias.size();
  std::vector<S> a(J, S(0)), b(J, S(0)), h(J);
  linalg::gemv_add(params.acoustic_proj, phi_t, std::span<S>(a));
  linalg::gemv_add(params.text_proj, psi_u, std::span<S>(b));
  for (std::size_t i = 0; i < J; ++i) h[i] = std::tanh(a[i] * b[i] + params.bias[i]);
  std::vector<S> logits(params.output.rows(), S(0));
  linalg::gemv_add(params.output, std::span<const S>(h), std::span<S>(logits));
  std::vector<double> out(logits.size());
  log_softmax_into(std::span<const S>(logits), std::span<double>(out));
  return out;
}

template <typename S>
lattice::JointLogProbGrid joint_grid(const Tensor<S>& phi, const Tensor<S>& states,
                                     const JointParams<S>& params, int blank,
                                     JointCache<S>* cache) {
  if (phi.cols() != params.acoustic_proj.cols() || states.cols() != params.text_proj.cols()) {
    throw ContractViolation("joint input dimensions do not match the projections");
  }
  const std::size_t T = phi.rows(), U = states.rows(), J = params.bias.size();
  const std::size_t C = params.output.rows();
  Tensor<S> a = Tensor<S>::matrix(T, J), b = Tensor<S>::matrix(U, J);
  for (std::size_t t = 0; t < T; ++t) linalg::gemv_add(params.acoustic_proj, phi.row(t), a.row(t));
  for (std::size_t u = 0; u < U; ++u) linalg::gemv_add(params.text_proj, states.row(u), b.row(u));
  lattice::JointLogProbGrid grid(T, U - 1, C, static_cast<std::size_t>(blank));
  Tensor<S> hidden = Tensor<S>::matrix(T * U, J);
  std::vector<S> logits(C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < U; ++u) {
      auto h = hidden.row(t * U + u);
      for (std::size_t i = 0; i < J; ++i) h[i] = std::tanh(a(t, i) * b(u, i) + params.bias[i]);
      std::fill(logits.begin(), logits.end(), S(0));
      linalg::gemv_add(params.output, std::span<const S>(h), std::span<S>(logits));
      log_softmax_into(std::span<const S>(logits), grid.cell(t, u));
    }
  }
  if (cache) {
    cache->phi = phi;
    cache->states = states;
    cache->acoustic = std::move(a);
    cache->text = std::move(b);
    cache->hidden = std::move(hidden);
    cache->valid = true;
  }
  return grid;
}

template <typename S>
void joint_backward(const JointParams<S>& params, const JointCache<S>& cache,
                    std::span<const double> d_logits, JointParams<S>& grads,
                    Tensor<S>& d_phi, Tensor<S>& d_states) {
  if (!cache.valid) throw ContractViolation("joint backward called without a forward cache");
  const std::size_t T = cache.phi.rows(), U = cache.states.rows(), J = params.bias.size();
  const std::size_t C = params.output.rows();
  if (d_logits.size() != T * U * C) throw ContractViolation("joint adjoint has the wrong size");
  Tensor<S> da = Tensor<S>::matrix(T, J), db = Tensor<S>::matrix(U, J);
  std::vector<S> g(C), dh(J);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < U; ++u) {
      const std::size_t cell = t * U + u;
      bool any = false;
      for (std::size_t k = 0; k < C; ++k) {
        g[k] = static_cast<S>(d_logits[cell * C + k]);
        any = any || g[k] != S(0);
      }
      if (!any) continue;
      const auto h = cache.hidden.row(cell);
      linalg::outer_add(grads.output, std::span<const S>(g), h);
      std::fill(dh.begin(), dh.end(), S(0));
      linalg::gemv_t_add(params.output, std::span<const S>(g), std::span<S>(dh));
      for (std::size_t i = 0; i < J; ++i) {
        const S dpre = dh[i] * (S(1) - h[i] * h[i]);
        grads.bias[i] += dpre;
        da(t, i) += dpre * cache.text(u, i);
        db(u, i) += dpre * cache.acoustic(t, i);
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    linalg::outer_add(grads.acoustic_proj, std::span<const S>(da.row(t)), cache.phi.row(t));
    linalg::gemv_t_add(params.acoustic_proj, std::span<const S>(da.row(t)), d_phi.row(t));
  }
  for (std::size_t u = 0; u < U; ++u) {
    linalg::outer_add(grads.text_proj, std::span<const S>(db.row(u)), cache.states.row(u));
    linalg::gemv_t_add(params.text_proj, std::span<const S>(db.row(u)), d_states.row(u));
  }
}

// --- whole model -------------------------------------------------------------

template <typename S>
ForwardCache<S> forward(const Model<S>& model, const Tensor<S>& frames,
                        std::span<const int> tokens) {
  ForwardCache<S> c;
  c.phi = encode_acoustic(frames, model.encoder, model.config, &c.encoder);
  c.states = encode_prefix(tokens, model.prediction, &c.prediction);
  c.grid = joint_grid(c.phi, c.states, model.joint, model.config.blank(), &c.joint);
  c.valid = true;
  return c;
}

template <typename S>
void backward(const Model<S>& model, const ForwardCache<S>& cache,
              std::span<const double> d_logprob, const Tensor<S>& d_phi_extra,
              const Tensor<S>& d_states_extra, Model<S>& grads) {
  if (!cache.valid) throw ContractViolation("backward called without a forward cache");
  Tensor<S> d_phi = Tensor<S>::matrix(cache.phi.rows(), cache.phi.cols());
  Tensor<S> d_states = Tensor<S>::matrix(cache.states.rows(), cache.states.cols());
  if (!d_logprob.empty()) {
    const auto d_logits = lattice::logit_grad(cache.grid, d_logprob);
    joint_backward(model.joint, cache.joint, std::span<const double>(d_logits), grads.joint,
                   d_phi, d_states);
  }
  add_into(d_phi, d_phi_extra);
  add_into(d_states, d_states_extra);
  encoder_backward(model.encoder, cache.encoder, d_phi, grads.encoder);
  prediction_backward(model.prediction, cache.prediction, d_states, grads.prediction);
}

template <typename S>
double asr_loss_and_grad(const Model<S>& model, const Tensor<S>& frames,
                         std::span<const int> tokens, std::type_identity_t<Model<S>>* grads) {
  const ForwardCache<S> cache = forward(model, frames, tokens);
  if (!grads) return lattice::transducer_nll(cache.grid, tokens);
  const auto g = lattice::transducer_grad(cache.grid, tokens);
  backward(model, cache, std::span<const double>(g.grad), Tensor<S>(), Tensor<S>(), *grads);
  return g.nll;
}

#define REPKD_INSTANTIATE_NN(S)                                                              \
  template struct Model<S>;                                                                  \
  template Tensor<S> encode_acoustic(const Tensor<S>&, const EncoderParams<S>&,              \
                                     const ModelConfig&, EncoderCache<S>*);                  \
  template void encoder_backward(const EncoderParams<S>&, const EncoderCache<S>&,            \
                                 const Tensor<S>&, EncoderParams<S>&);                       \
  template Tensor<S> encode_prefix(std::span<const int>, const PredictionParams<S>&,         \
                                   PredictionCache<S>*);                                     \
  template std::vector<S> prediction_step(const PredictionParams<S>&, std::span<const S>,    \
                                          int);                                              \
  template void prediction_backward(const PredictionParams<S>&, const PredictionCache<S>&,   \
                                    const Tensor<S>&, PredictionParams<S>&);                 \
  template std::vector<double> joint(std::span<const S>, std::span<const S>,                 \
                                     const JointParams<S>&);                                 \
  template lattice::JointLogProbGrid joint_grid(const Tensor<S>&, const Tensor<S>&,          \
                                                const JointParams<S>&, int, JointCache<S>*); \
  template void joint_backward(const JointParams<S>&, const JointCache<S>&,                  \
                               std::span<const double>, JointParams<S>&, Tensor<S>&,         \
                               Tensor<S>&);                                                  \
  template ForwardCache<S> forward(const Model<S>&, const Tensor<S>&, std::span<const int>); \
  template void backward(const Model<S>&, const ForwardCache<S>&, std::span<const double>,   \
                         const Tensor<S>&, const Tensor<S>&, Model<S>&);                     \
  template double asr_loss_and_grad(const Model<S>&, const Tensor<S>&, std::span<const int>, \
                                    Model<S>*);

REPKD_INSTANTIATE_NN(float)
REPKD_INSTANTIATE_NN(double)

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

#undef REPKD_INSTANTIATE_NN

}  // namespace repkd::nn
