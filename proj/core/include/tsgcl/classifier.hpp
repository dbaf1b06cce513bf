#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "tsgcl/autodiff.hpp"
#include "tsgcl/data.hpp"
#include "tsgcl/params.hpp"

namespace tsgcl {

/// One hidden layer with ReLU, linear output.
struct MlpParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  ParamId w1;  // [input x hidden]
  ParamId b1;  // [hidden]
  ParamId w2;  // [hidden x output]
  ParamId b2;  // [output]
};

MlpParams add_mlp_params(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim, std::size_t output_dim, double init_sigma, Rng& rng);

/// Logits for every row of x [B x input].
ad::Var mlp_logits(ParamBinding& bind, ad::Var x, const MlpParams& p);

enum class HeadMode {
  Conditioned,  // stage 2 reads concat(chi, stage-1 distribution)
  Independent,  // two heads on chi, no coupling
  SingleStage,  // one K-way head, no polarity stage
};

struct TwoStageParams {
  HeadMode mode = HeadMode::Conditioned;
  std::size_t fusion_dim = 0;
  std::size_t num_classes = 0;
  std::optional<MlpParams> polarity;  // absent for SingleStage
  MlpParams emotion;
};

TwoStageParams add_two_stage_params(ParameterSet& params, HeadMode mode, std::size_t fusion_dim,
                                    std::size_t num_classes, std::size_t hidden_dim,
                                    double init_sigma, Rng& rng);

/// chi = concat(rep_t, rep_a, rep_v).
ad::Var fuse(ad::Var rep_t, ad::Var rep_a, ad::Var rep_v);
/// Row i of the result [N x 3d] fuses rows 3i, 3i+1, 3i+2 of the turn-major
/// node matrix [3N x d].
ad::Var fuse_nodes(ad::Var node_reps);

/// Softmax over (negative, neutral, positive) for every row of chi.
ad::Var stage1_polarity(ParamBinding& bind, ad::Var chi, const TwoStageParams& p);
/// Softmax over the K fine labels. `stage1` must be given in Conditioned
/// mode and is ignored otherwise.
ad::Var stage2_emotion(ParamBinding& bind, ad::Var chi, std::optional<ad::Var> stage1,
                       const TwoStageParams& p);

inline constexpr double kLogFloor = 1e-12;

/// Batch mean of CE(stage1, polarity(gold)) + alpha * CE(stage2, gold). With
/// no stage-1 distribution only the alpha-weighted fine term remains.
/// Throws ValueError for a gold label outside the scheme.
ad::Var classification_loss(std::optional<ad::Var> stage1, ad::Var stage2,
                            std::span<const std::size_t> gold, const LabelScheme& scheme,
                            double alpha);

}  // namespace tsgcl
