#include "tsgcl/encoder.hpp"

#include <map>

#include "tsgcl/error.hpp"

namespace tsgcl {

using namespace ad;

BiRnnParams BiRnnParams::swapped() const {
  BiRnnParams s = *this;
  std::swap(s.forward, s.backward);
  return s;
}

namespace {

LstmDirectionParams add_direction(ParameterSet& params, const std::string& prefix, std::size_t d_in,
                                  std::size_t h, double sigma, Rng& rng) {
  LstmDirectionParams p;
  p.input_weights = params.add_gaussian(prefix + ".w_input", {4 * h, d_in}, sigma, rng);
  p.hidden_weights = params.add_gaussian(prefix + ".w_hidden", {4 * h, h}, sigma, rng);
  p.bias = params.add_zeros(prefix + ".bias", {4 * h});
  return p;
}

// Runs one direction over the precomputed input projections [N x 4h].
std::vector<Var> run_direction(ParamBinding& bind, Var projected, const LstmDirectionParams& p,
                               std::size_t h, bool reverse) {
  const std::size_t n = projected.shape()[0];
  const Var w_h = bind(p.hidden_weights);
  const Var b = bind(p.bias);
  std::vector<Var> states(n);
  Var hidden, cell;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Var gates = add(row(projected, t), b);
    if (step > 0) gates = add(gates, matmul(w_h, hidden));
    const Var in_gate = sigmoid(slice(gates, 0, h));
    const Var forget_gate = sigmoid(slice(gates, h, h));
    const Var candidate = tanh(slice(gates, 2 * h, h));
    const Var out_gate = sigmoid(slice(gates, 3 * h, h));
    cell = step > 0 ? add(mul(forget_gate, cell), mul(in_gate, candidate)) : mul(in_gate, candidate);
    hidden = mul(out_gate, tanh(cell));
    states[t] = hidden;
  }
  return states;
}

}  // namespace

BiRnnParams add_birnn_params(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                             std::size_t hidden_dim, double init_sigma, Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0) throw ValueError("birnn: dimensions must be positive");
  BiRnnParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.forward = add_direction(params, prefix + ".fwd", input_dim, hidden_dim, init_sigma, rng);
  p.backward = add_direction(params, prefix + ".bwd", input_dim, hidden_dim, init_sigma, rng);
  return p;
}

Var birnn_encode(ParamBinding& bind, Var sequence, const BiRnnParams& p) {
  if (sequence.value().rank() != 2 || sequence.shape()[0] == 0)
    throw ShapeError("birnn_encode: expected a non-empty [N x d_in] sequence");
  if (sequence.shape()[1] != p.input_dim)
    throw ShapeError("birnn_encode: input dimension " + std::to_string(sequence.shape()[1]) +
                     " does not match encoder input " + std::to_string(p.input_dim));
  const std::size_t h = p.hidden_dim;
  const Var fwd_proj = matmul(sequence, transpose(bind(p.forward.input_weights)));
  const Var bwd_proj = matmul(sequence, transpose(bind(p.backward.input_weights)));
  const auto fwd = run_direction(bind, fwd_proj, p.forward, h, false);
  const auto bwd = run_direction(bind, bwd_proj, p.backward, h, true);
  std::vector<Var> rows;
  rows.reserve(fwd.size());
  for (std::size_t t = 0; t < fwd.size(); ++t) rows.push_back(concat({fwd[t], bwd[t]}));
  return stack_rows(rows);
}

SpeakerEmbedParams add_speaker_params(ParameterSet& params, const std::string& prefix,
                                      std::size_t max_speakers, std::size_t dim, double init_sigma,
                                      Rng& rng) {
  if (max_speakers == 0 || dim == 0) throw ValueError("speaker embedding: dimensions must be positive");
  SpeakerEmbedParams p;
  p.max_speakers = max_speakers;
  p.dim = dim;
  p.weights = params.add_gaussian(prefix + ".weights", {dim, max_speakers}, init_sigma, rng);
  p.bias = params.add_zeros(prefix + ".bias", {dim});
  return p;
}

Var speaker_embed(ParamBinding& bind, std::size_t speaker, const SpeakerEmbedParams& p) {
  if (speaker >= p.max_speakers)
    throw ValueError("speaker id " + std::to_string(speaker) + " out of range (max " +
                     std::to_string(p.max_speakers) + ")");
  Tensor onehot({p.max_speakers});
  onehot[speaker] = 1.0;
  return add(matmul(bind(p.weights), bind.tape().constant(std::move(onehot))), bind(p.bias));
}

NodeEncoders add_node_encoders(ParameterSet& params, const FeatureDims& dims, std::size_t hidden_dim,
                               std::size_t max_speakers, std::size_t speaker_dim, double init_sigma,
                               Rng& rng) {
  NodeEncoders enc;
  enc.text = add_birnn_params(params, "encoder.text", dims.text, hidden_dim, init_sigma, rng);
  enc.audio = add_birnn_params(params, "encoder.audio", dims.audio, hidden_dim, init_sigma, rng);
  enc.vision = add_birnn_params(params, "encoder.vision", dims.vision, hidden_dim, init_sigma, rng);
  enc.speaker = add_speaker_params(params, "speaker", max_speakers, speaker_dim, init_sigma, rng);
  return enc;
}

Var modality_matrix(Tape& tape, const Dialogue& dialogue, Modality modality) {
  if (dialogue.utterances.empty()) throw ShapeError("dialogue has no utterances");
  auto pick = [modality](const UtteranceRecord& u) -> const std::vector<double>& {
    return u.features(modality);
  };
  const std::size_t n = dialogue.size();
  const std::size_t d = pick(dialogue.utterances[0]).size();
  std::vector<double> data;
  data.reserve(n * d);
  for (const auto& u : dialogue.utterances) {
    const auto& f = pick(u);
    if (f.size() != d) throw ShapeError("utterances of one dialogue have different feature sizes");
    data.insert(data.end(), f.begin(), f.end());
  }
  return tape.constant(Tensor({n, d}, std::move(data)));
}

Var make_node_features(ParamBinding& bind, const Dialogue& dialogue, const NodeEncoders& enc) {
  Tape& tape = bind.tape();
  const Var encoded[3] = {
      birnn_encode(bind, modality_matrix(tape, dialogue, Modality::Text), enc.text),
      birnn_encode(bind, modality_matrix(tape, dialogue, Modality::Audio), enc.audio),
      birnn_encode(bind, modality_matrix(tape, dialogue, Modality::Vision), enc.vision),
  };
  std::map<std::size_t, Var> speakers;
  std::vector<Var> nodes;
  nodes.reserve(3 * dialogue.size());
  for (std::size_t i = 0; i < dialogue.size(); ++i) {
    const std::size_t s = dialogue.utterances[i].speaker;
    auto it = speakers.find(s);
    if (it == speakers.end()) it = speakers.emplace(s, speaker_embed(bind, s, enc.speaker)).first;
    for (const Var& m : encoded) nodes.push_back(concat({row(m, i), it->second}));
  }
  return stack_rows(nodes);
}

}  // namespace tsgcl
