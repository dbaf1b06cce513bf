#pragma once

#include <cstddef>
#include <string>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/data.hpp"
#include "tsgcl/params.hpp"

namespace tsgcl {

/// One direction of a gated recurrent (LSTM) cell. Gate rows are stacked
/// in the order input, forget, candidate, output.
struct LstmDirectionParams {
  ParamId input_weights;   // [4h x d_in]
  ParamId hidden_weights;  // [4h x h]
  ParamId bias;            // [4h]
};

struct BiRnnParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // per direction
  LstmDirectionParams forward;
  LstmDirectionParams backward;

  std::size_t output_dim() const noexcept { return 2 * hidden_dim; }
  /// Same parameters with the two directions exchanged.
  BiRnnParams swapped() const;
};

BiRnnParams add_birnn_params(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                             std::size_t hidden_dim, double init_sigma, Rng& rng);

/// Encodes a sequence given as the rows of `sequence` [N x d_in]. Row i of
/// the result [N x 2h] is the forward hidden state after step i followed by
/// the backward hidden state after step i. Both directions start from zero
/// hidden and cell states.
ad::Var birnn_encode(ParamBinding& bind, ad::Var sequence, const BiRnnParams& p);

struct SpeakerEmbedParams {
  std::size_t max_speakers = 0;
  std::size_t dim = 0;
  ParamId weights;  // [dim x max_speakers]
  ParamId bias;     // [dim]
};

SpeakerEmbedParams add_speaker_params(ParameterSet& params, const std::string& prefix,
                                      std::size_t max_speakers, std::size_t dim, double init_sigma,
                                      Rng& rng);

/// W_s * onehot(speaker) + b. Throws ValueError if speaker >= max_speakers.
ad::Var speaker_embed(ParamBinding& bind, std::size_t speaker, const SpeakerEmbedParams& p);

struct NodeEncoders {
  BiRnnParams text;
  BiRnnParams audio;
  BiRnnParams vision;
  SpeakerEmbedParams speaker;

  std::size_t node_dim() const noexcept { return text.output_dim() + speaker.dim; }
};

NodeEncoders add_node_encoders(ParameterSet& params, const FeatureDims& dims, std::size_t hidden_dim,
                               std::size_t max_speakers, std::size_t speaker_dim, double init_sigma,
                               Rng& rng);

/// Node features [3N x d_node] for one dialogue. Rows are ordered by turn and
/// within a turn by modality (text, audio, vision); each row is the modality's
/// encoder output followed by the speaker embedding.
ad::Var make_node_features(ParamBinding& bind, const Dialogue& dialogue, const NodeEncoders& enc);

/// The raw per-modality feature matrix [N x d] of a dialogue, as a constant.
ad::Var modality_matrix(ad::Tape& tape, const Dialogue& dialogue, Modality modality);

}  // namespace tsgcl
